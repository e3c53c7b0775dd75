#include "cgpnas/genome.hpp"

#include <algorithm>
#include <string>

#include "cgpnas/error.hpp"

namespace cgpnas {

void GridConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("grid." + msg); };
    if (rows < 1) fail("rows: must be positive");
    if (cols < 1) fail("cols: must be positive");
    if (levels_back < 1 || levels_back > cols) fail("levels_back: must lie in [1, cols]");
    if (input_count != 1) fail("input_count: only 1 is supported");
    if (output_count != 1) fail("output_count: only 1 is supported");
    if (active_max < 1) fail("active_max: must be positive");
    if (active_min > active_max) fail("active_min: exceeds active_max");
    if (active_max > rows * cols) fail("active_max: exceeds rows * cols");
}

Genotype::Genotype(GridConfig config, FunctionCatalog catalog, std::vector<Gene> genes,
                   NodeRef output)
    : config_(config), catalog_(std::move(catalog)), genes_(std::move(genes)), output_(output) {
    if (genes_.size() != config_.node_count()) {
        throw DecodeError("genotype has " + std::to_string(genes_.size()) + " genes, grid needs " +
                          std::to_string(config_.node_count()));
    }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t Genotype::config_fingerprint() const {
    const GridConfig& c = config_;
    std::string text = std::to_string(c.rows) + ':' + std::to_string(c.cols) + ':' +
                       std::to_string(c.levels_back) + ':' + std::to_string(c.input_count) + ':' +
                       std::to_string(c.output_count) + ':' + std::to_string(c.active_min) + ':' +
                       std::to_string(c.active_max) + ':' +
                       (c.inputs_always_reachable ? "1" : "0") + '|' + catalog_.identity();
    return fnv1a(text);
}

namespace {

bool source_allowed(const GridConfig& config, std::size_t column, NodeRef src) {
    if (src == kInputNode) {
        return config.inputs_always_reachable || column <= config.levels_back;
    }
    if (src > config.node_count()) {
        return false;
    }
    const std::size_t src_col = config.column_of(src);
    return src_col < column && src_col + config.levels_back >= column;
}

} // namespace

void Genotype::check_structure() const {
    for (NodeRef node = 1; node <= config_.node_count(); ++node) {
        const Gene& g = gene(node);
        const std::size_t col = config_.column_of(node);
        if (!source_allowed(config_, col, g.in1) || !source_allowed(config_, col, g.in2)) {
            throw DecodeError("node " + std::to_string(node) + ": input outside valid sources");
        }
        if (!in_domain(g.function, g.param)) {
            throw DecodeError("node " + std::to_string(node) + ": parameter outside domain of " +
                              std::string(function_label(g.function)));
        }
    }
    if (output_ > config_.node_count()) {
        throw DecodeError("output reference " + std::to_string(output_) + " out of range");
    }
}

std::vector<NodeRef> valid_sources(const GridConfig& config, std::size_t column) {
    if (column < 1 || column > config.cols) {
        throw ConfigError("valid_sources: column " + std::to_string(column) + " outside [1, " +
                          std::to_string(config.cols) + "]");
    }
    std::vector<NodeRef> out;
    if (config.inputs_always_reachable || column <= config.levels_back) {
        out.push_back(kInputNode);
    }
    const std::size_t first = column > config.levels_back ? column - config.levels_back : 1;
    for (std::size_t col = first; col < column; ++col) {
        for (std::size_t row = 1; row <= config.rows; ++row) {
            out.push_back(config.node_at(row, col));
        }
    }
    return out;
}

Genotype random_genotype(const GridConfig& config, const FunctionCatalog& catalog,
                         RandomStream& rng) {
    config.validate();
    std::vector<std::vector<NodeRef>> sources;
    sources.reserve(config.cols);
    for (std::size_t col = 1; col <= config.cols; ++col) {
        sources.push_back(valid_sources(config, col));
    }
    const auto functions = catalog.enabled();
    for (std::size_t attempt = 0; attempt < kInitRetryCap; ++attempt) {
        std::vector<Gene> genes(config.node_count());
        for (NodeRef node = 1; node <= config.node_count(); ++node) {
            const auto& src = sources[config.column_of(node) - 1];
            Gene& g = genes[node - 1];
            g.function = rng.pick(functions);
            g.in1 = rng.pick(std::span<const NodeRef>(src));
            g.in2 = rng.pick(std::span<const NodeRef>(src));
            g.param = rng.pick(parameter_domain(g.function));
        }
        const auto output = static_cast<NodeRef>(rng.uniform_below(config.node_count() + 1));
        Genotype candidate(config, catalog, std::move(genes), output);
        const std::size_t n = active_count(candidate);
        if (n >= config.active_min && n <= config.active_max) {
            return candidate;
        }
    }
    throw InitializationError("no genotype with active node count in [" +
                              std::to_string(config.active_min) + ", " +
                              std::to_string(config.active_max) + "] after " +
                              std::to_string(kInitRetryCap) + " attempts");
}

std::vector<NodeRef> active_nodes(const Genotype& g) {
    const std::size_t n = g.config().node_count();
    std::vector<char> active(n + 1, 0);
    if (g.output() != kInputNode) {
        active[g.output()] = 1;
    }
    // Edges point to strictly earlier columns, so one descending sweep
    // visits every node after all of its consumers.
    for (std::size_t node = n; node >= 1; --node) {
        if (!active[node]) {
            continue;
        }
        const Gene& gene = g.gene(static_cast<NodeRef>(node));
        active[gene.in1] = 1;
        if (arity(gene.function) == 2) {
            active[gene.in2] = 1;
        }
    }
    std::vector<NodeRef> out;
    for (std::size_t node = 1; node <= n; ++node) {
        if (active[node]) {
            out.push_back(static_cast<NodeRef>(node));
        }
    }
    return out;
}

std::size_t active_count(const Genotype& g) {
    return active_nodes(g).size();
}

std::uint64_t phenotype_hash(const Genotype& g) {
    const auto nodes = active_nodes(g);
    auto position = [&nodes](NodeRef ref) -> std::size_t {
        if (ref == kInputNode) {
            return 0;
        }
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), ref) -
                                        nodes.begin()) + 1;
    };
    std::string canon;
    for (NodeRef node : nodes) {
        const Gene& gene = g.gene(node);
        canon += function_name(gene.function);
        canon += '(' + std::to_string(gene.param.first) + ',' + std::to_string(gene.param.second) +
                 ')';
        canon += '<' + std::to_string(position(gene.in1));
        if (arity(gene.function) == 2) {
            canon += ',' + std::to_string(position(gene.in2));
        }
        canon += ';';
    }
    canon += "out=" + std::to_string(position(g.output()));
    return fnv1a(canon);
}

bool is_single_chain(const Genotype& g) {
    for (NodeRef node : active_nodes(g)) {
        const Gene& gene = g.gene(node);
        if (arity(gene.function) == 2 && gene.in1 != gene.in2) {
            return false;
        }
    }
    return true;
}

} // namespace cgpnas
