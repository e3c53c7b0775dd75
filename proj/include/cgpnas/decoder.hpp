#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cgpnas/function_catalog.hpp"
#include "cgpnas/genome.hpp"

namespace cgpnas {

struct GraphNode {
    std::size_t id = 0;  // 1-based position; 0 is the graph input
    FunctionId function = FunctionId::ReLU;
    ParamValue param;
    std::vector<std::size_t> inputs;
    TensorShape out_shape;

    bool operator==(const GraphNode&) const = default;
};

/// Decoded phenotype: active nodes in topological order with inferred shapes.
struct ArchitectureGraph {
    std::vector<GraphNode> nodes;
    TensorShape input_shape;
    std::size_t output_node = 0;

    /// Shape produced at position `pos` (0 = input).
    const TensorShape& shape_at(std::size_t pos) const {
        return pos == 0 ? input_shape : nodes[pos - 1].out_shape;
    }
    const TensorShape& output_shape() const { return shape_at(output_node); }

    bool operator==(const ArchitectureGraph&) const = default;
};

/// Throws CatalogError for functions outside `catalog` and DecodeError
/// (naming the node) for shape errors.
ArchitectureGraph decode(const Genotype& g, const FunctionCatalog& catalog,
                         const TensorShape& input_shape);

struct ValidityReport {
    bool active_in_bounds = true;
    bool decodable = true;
    bool functions_in_catalog = true;
    std::size_t active_count = 0;
    std::string message;

    bool valid() const { return active_in_bounds && decodable && functions_in_catalog; }
};

ValidityReport validate(const Genotype& g, const FunctionCatalog& catalog,
                        const GridConfig& config, const TensorShape& input_shape);

/// Graphviz rendering with Input/Output vertices and "Fn(params) b×l×d" labels.
std::string to_dot(const ArchitectureGraph& graph);

} // namespace cgpnas
