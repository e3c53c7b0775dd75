#include "cgpnas/function_catalog.hpp"

#include <algorithm>
#include <sstream>

#include "cgpnas/error.hpp"

namespace cgpnas {

namespace {

constexpr std::array<ParamValue, 6> kConvDomain = {{
    {16, 1}, {16, 3}, {16, 5}, {32, 1}, {32, 3}, {32, 5},
}};
constexpr std::array<ParamValue, 3> kAtteDomain = {{{4, 0}, {8, 0}, {16, 0}}};
constexpr std::array<ParamValue, 2> kLinearDomain = {{{32, 0}, {128, 0}}};
constexpr std::array<ParamValue, 1> kUnitDomain = {{{0, 0}}};

} // namespace

std::string to_string(const TensorShape& shape) {
    std::ostringstream out;
    out << shape.batch << "x" << shape.length << "x" << shape.dim;
    return out.str();
}

std::string_view function_name(FunctionId f) {
    switch (f) {
    case FunctionId::Conv: return "conv";
    case FunctionId::Atte: return "atte";
    case FunctionId::Linear: return "linear";
    case FunctionId::Sum: return "sum";
    case FunctionId::ReLU: return "relu";
    case FunctionId::LNorm: return "lnorm";
    case FunctionId::GLU: return "glu";
    }
    return "?";
}

std::string_view function_label(FunctionId f) {
    switch (f) {
    case FunctionId::Conv: return "Conv";
    case FunctionId::Atte: return "Atte";
    case FunctionId::Linear: return "Linear";
    case FunctionId::Sum: return "Sum";
    case FunctionId::ReLU: return "ReLU";
    case FunctionId::LNorm: return "LNorm";
    case FunctionId::GLU: return "GLU";
    }
    return "?";
}

std::optional<FunctionId> parse_function(std::string_view name) {
    for (FunctionId f : kAllFunctions) {
        if (function_name(f) == name) {
            return f;
        }
    }
    return std::nullopt;
}

int arity(FunctionId f) {
    return f == FunctionId::Sum ? 2 : 1;
}

std::span<const ParamValue> parameter_domain(FunctionId f) {
    switch (f) {
    case FunctionId::Conv: return kConvDomain;
    case FunctionId::Atte: return kAtteDomain;
    case FunctionId::Linear: return kLinearDomain;
    default: return kUnitDomain;
    }
}

bool in_domain(FunctionId f, ParamValue p) {
    const auto domain = parameter_domain(f);
    return std::find(domain.begin(), domain.end(), p) != domain.end();
}

std::string describe(FunctionId f, ParamValue p) {
    std::ostringstream out;
    out << function_label(f);
    switch (f) {
    case FunctionId::Conv:
        out << "(channel=" << p.first << ", kernel=" << p.second << ")";
        break;
    case FunctionId::Atte:
        out << "(head=" << p.first << ")";
        break;
    case FunctionId::Linear:
        out << "(channel=" << p.first << ")";
        break;
    default:
        break;
    }
    return out.str();
}

TensorShape infer_shape(FunctionId f, ParamValue p, TensorShape in1,
                        std::optional<TensorShape> in2) {
    if (in2.has_value() != (arity(f) == 2)) {
        throw ShapeError(std::string(function_label(f)) + ": wrong number of inputs");
    }
    if (!in1.valid() || (in2 && !in2->valid())) {
        throw ShapeError(std::string(function_label(f)) + ": invalid input shape");
    }
    TensorShape out = in1;
    switch (f) {
    case FunctionId::Conv:
    case FunctionId::Linear:
        out.dim = static_cast<std::size_t>(p.first);
        break;
    case FunctionId::Sum:
        if (in1.batch != in2->batch || in1.length != in2->length) {
            throw ShapeError("Sum: inputs " + to_string(in1) + " and " + to_string(*in2) +
                             " differ in batch or length");
        }
        out.dim = std::max(in1.dim, in2->dim);
        break;
    case FunctionId::GLU:
        // Odd dims are zero-padded to even before splitting.
        out.dim = (in1.dim + 1) / 2;
        if (in1.dim < 2) {
            throw ShapeError("GLU: input dim " + std::to_string(in1.dim) +
                             " cannot be split into two non-empty halves");
        }
        break;
    case FunctionId::Atte:
    case FunctionId::ReLU:
    case FunctionId::LNorm:
        break;
    }
    if (out.dim < 1) {
        throw ShapeError(std::string(function_label(f)) + ": output dim below one");
    }
    return out;
}

FunctionCatalog::FunctionCatalog() : enabled_(kAllFunctions.begin(), kAllFunctions.end()) {}

FunctionCatalog::FunctionCatalog(std::vector<FunctionId> enabled) {
    for (FunctionId f : kAllFunctions) {
        if (std::find(enabled.begin(), enabled.end(), f) != enabled.end()) {
            enabled_.push_back(f);
        }
    }
    if (enabled_.empty()) {
        throw ConfigError("function catalog must enable at least one function");
    }
}

FunctionCatalog FunctionCatalog::preset(std::string_view name) {
    std::vector<FunctionId> fs(kAllFunctions.begin(), kAllFunctions.end());
    auto drop = [&fs](FunctionId f) { std::erase(fs, f); };
    if (name == "s_full") {
    } else if (name == "s_no_conv") {
        drop(FunctionId::Conv);
    } else if (name == "s_no_atte") {
        drop(FunctionId::Atte);
    } else if (name == "s_no_conv_atte") {
        drop(FunctionId::Conv);
        drop(FunctionId::Atte);
    } else {
        throw ConfigError("unknown catalog preset '" + std::string(name) + "'");
    }
    return FunctionCatalog(std::move(fs));
}

FunctionCatalog FunctionCatalog::from_names(std::span<const std::string> names) {
    std::vector<FunctionId> fs;
    for (const auto& name : names) {
        auto f = parse_function(name);
        if (!f) {
            throw ConfigError("unknown function '" + name + "'");
        }
        fs.push_back(*f);
    }
    return FunctionCatalog(std::move(fs));
}

bool FunctionCatalog::contains(FunctionId f) const {
    return std::find(enabled_.begin(), enabled_.end(), f) != enabled_.end();
}

std::vector<std::string> FunctionCatalog::names() const {
    std::vector<std::string> out;
    for (FunctionId f : enabled_) {
        out.emplace_back(function_name(f));
    }
    return out;
}

std::string FunctionCatalog::identity() const {
    std::string out;
    for (FunctionId f : enabled_) {
        if (!out.empty()) {
            out += ',';
        }
        out += function_name(f);
    }
    return out;
}

} // namespace cgpnas
