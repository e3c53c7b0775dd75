#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cgpnas {

enum class FunctionId : std::uint8_t { Conv, Atte, Linear, Sum, ReLU, LNorm, GLU };

inline constexpr std::array<FunctionId, 7> kAllFunctions = {
    FunctionId::Conv, FunctionId::Atte,  FunctionId::Linear, FunctionId::Sum,
    FunctionId::ReLU, FunctionId::LNorm, FunctionId::GLU,
};

/// Per-node hyperparameter. Conv uses (channel, kernel); Atte uses
/// (heads, 0); Linear uses (channel, 0); the remaining functions carry the
/// unit value (0, 0).
struct ParamValue {
    int first = 0;
    int second = 0;

    auto operator<=>(const ParamValue&) const = default;
};

/// (batch, sequence length, feature dim).
struct TensorShape {
    std::size_t batch = 1;
    std::size_t length = 1;
    std::size_t dim = 1;

    bool operator==(const TensorShape&) const = default;
    bool valid() const { return batch >= 1 && length >= 1 && dim >= 1; }
};

std::string to_string(const TensorShape& shape);

/// Lower-case configuration name, e.g. "conv".
std::string_view function_name(FunctionId f);
/// Display name, e.g. "Conv".
std::string_view function_label(FunctionId f);
std::optional<FunctionId> parse_function(std::string_view name);

int arity(FunctionId f);

/// Candidate parameter values; a singleton {unit} for parameterless functions.
std::span<const ParamValue> parameter_domain(FunctionId f);
bool in_domain(FunctionId f, ParamValue p);

/// "Conv(channel=32, kernel=1)", "Atte(head=16)", "ReLU".
std::string describe(FunctionId f, ParamValue p);

/// Output shape of a node. `in2` must be present exactly for two-input
/// functions. Throws ShapeError on mismatched batch/length or an output
/// dim below one.
TensorShape infer_shape(FunctionId f, ParamValue p, TensorShape in1,
                        std::optional<TensorShape> in2 = std::nullopt);

/// The enabled function set. Always non-empty and kept in canonical order
/// so that uniform draws over it are reproducible.
class FunctionCatalog {
public:
    FunctionCatalog();  // full set
    explicit FunctionCatalog(std::vector<FunctionId> enabled);

    static FunctionCatalog full() { return FunctionCatalog(); }
    /// "s_full", "s_no_conv", "s_no_atte", "s_no_conv_atte"; throws ConfigError.
    static FunctionCatalog preset(std::string_view name);
    /// Names from {"conv","atte","linear","sum","relu","lnorm","glu"}.
    static FunctionCatalog from_names(std::span<const std::string> names);

    std::span<const FunctionId> enabled() const { return enabled_; }
    bool contains(FunctionId f) const;
    std::vector<std::string> names() const;
    /// Canonical identity, e.g. "conv,atte,linear,sum,relu,lnorm,glu".
    std::string identity() const;

    bool operator==(const FunctionCatalog&) const = default;

private:
    std::vector<FunctionId> enabled_;
};

} // namespace cgpnas
