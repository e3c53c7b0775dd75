#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cgpnas/function_catalog.hpp"
#include "cgpnas/random.hpp"

namespace cgpnas {

/// Node address. 0 is the input node; the function node at row i, column j
/// (both 1-based) has index (j - 1) * rows + i.
using NodeRef = std::uint32_t;

inline constexpr NodeRef kInputNode = 0;

struct GridConfig {
    std::size_t rows = 5;
    std::size_t cols = 20;
    std::size_t levels_back = 3;
    std::size_t input_count = 1;
    std::size_t output_count = 1;
    std::size_t active_min = 10;
    std::size_t active_max = 60;
    bool inputs_always_reachable = true;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    std::size_t node_count() const { return rows * cols; }
    /// 1-based column of a function node.
    std::size_t column_of(NodeRef node) const { return (node - 1) / rows + 1; }
    NodeRef node_at(std::size_t row, std::size_t col) const {
        return static_cast<NodeRef>((col - 1) * rows + row);
    }

    bool operator==(const GridConfig&) const = default;
};

struct Gene {
    FunctionId function = FunctionId::ReLU;
    NodeRef in1 = kInputNode;
    NodeRef in2 = kInputNode;
    ParamValue param;

    bool operator==(const Gene&) const = default;
};

class Genotype {
public:
    Genotype(GridConfig config, FunctionCatalog catalog, std::vector<Gene> genes, NodeRef output);

    const GridConfig& config() const { return config_; }
    const FunctionCatalog& catalog() const { return catalog_; }
    std::span<const Gene> genes() const { return genes_; }
    /// Gene of function node `node` (1-based NodeRef).
    const Gene& gene(NodeRef node) const { return genes_[node - 1]; }
    Gene& gene(NodeRef node) { return genes_[node - 1]; }
    NodeRef output() const { return output_; }
    void set_output(NodeRef output) { output_ = output; }

    /// Hash of GridConfig and catalog identity.
    std::uint64_t config_fingerprint() const;

    /// Throws DecodeError if any gene violates its column's connection
    /// rule, parameter domain or the output range.
    void check_structure() const;

    bool operator==(const Genotype& other) const {
        return config_ == other.config_ && catalog_ == other.catalog_ &&
               genes_ == other.genes_ && output_ == other.output_;
    }

private:
    GridConfig config_;
    FunctionCatalog catalog_;
    std::vector<Gene> genes_;
    NodeRef output_;
};

/// Legal inputs for a gene in `column` (1-based), ascending.
std::vector<NodeRef> valid_sources(const GridConfig& config, std::size_t column);

/// Uniform random genotype, resampled wholesale until the active count is
/// within [active_min, active_max]. Throws InitializationError after
/// kInitRetryCap attempts.
Genotype random_genotype(const GridConfig& config, const FunctionCatalog& catalog,
                         RandomStream& rng);

inline constexpr std::size_t kInitRetryCap = 10000;

/// Function nodes reachable backwards from the output, ascending.
std::vector<NodeRef> active_nodes(const Genotype& g);
std::size_t active_count(const Genotype& g);

/// Digest of the active subgraph only; inactive genes do not affect it.
std::uint64_t phenotype_hash(const Genotype& g);

/// True when every active node has a single distinct predecessor.
bool is_single_chain(const Genotype& g);

/// FNV-1a over bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace cgpnas
