#include "cgpnas/decoder.hpp"

#include <algorithm>
#include <sstream>

#include "cgpnas/error.hpp"

namespace cgpnas {

ArchitectureGraph decode(const Genotype& g, const FunctionCatalog& catalog,
                         const TensorShape& input_shape) {
    g.check_structure();
    const auto active = active_nodes(g);
    auto position = [&active](NodeRef ref) -> std::size_t {
        if (ref == kInputNode) {
            return 0;
        }
        return static_cast<std::size_t>(std::lower_bound(active.begin(), active.end(), ref) -
                                        active.begin()) + 1;
    };

    ArchitectureGraph graph;
    graph.input_shape = input_shape;
    graph.nodes.reserve(active.size());
    for (NodeRef ref : active) {
        const Gene& gene = g.gene(ref);
        if (!catalog.contains(gene.function)) {
            throw CatalogError("node " + std::to_string(ref) + ": function " +
                               std::string(function_label(gene.function)) +
                               " is not enabled in catalog {" + catalog.identity() + "}");
        }
        GraphNode node;
        node.id = graph.nodes.size() + 1;
        node.function = gene.function;
        node.param = gene.param;
        node.inputs.push_back(position(gene.in1));
        if (arity(gene.function) == 2) {
            node.inputs.push_back(position(gene.in2));
        }
        try {
            const TensorShape& a = graph.shape_at(node.inputs[0]);
            node.out_shape = node.inputs.size() == 2
                                 ? infer_shape(node.function, node.param, a,
                                               graph.shape_at(node.inputs[1]))
                                 : infer_shape(node.function, node.param, a);
        } catch (const ShapeError& e) {
            throw DecodeError("node " + std::to_string(ref) + " (" +
                              describe(gene.function, gene.param) + "): " + e.what());
        }
        graph.nodes.push_back(std::move(node));
    }
    graph.output_node = position(g.output());
    return graph;
}

ValidityReport validate(const Genotype& g, const FunctionCatalog& catalog,
                        const GridConfig& config, const TensorShape& input_shape) {
    ValidityReport report;
    report.active_count = active_count(g);
    std::ostringstream msg;
    if (report.active_count < config.active_min || report.active_count > config.active_max) {
        report.active_in_bounds = false;
        msg << "active count " << report.active_count << " outside [" << config.active_min << ", "
            << config.active_max << "]; ";
    }
    try {
        decode(g, catalog, input_shape);
    } catch (const CatalogError& e) {
        report.functions_in_catalog = false;
        msg << e.what() << "; ";
    } catch (const DecodeError& e) {
        report.decodable = false;
        msg << e.what() << "; ";
    }
    report.message = msg.str();
    return report;
}

namespace {

std::string shape_label(const TensorShape& s) {
    std::ostringstream out;
    out << s.batch << "×" << s.length << "×" << s.dim;
    return out.str();
}

std::string param_label(const GraphNode& node) {
    switch (node.function) {
    case FunctionId::Conv:
        return "(" + std::to_string(node.param.first) + "," + std::to_string(node.param.second) + ")";
    case FunctionId::Atte:
    case FunctionId::Linear:
        return "(" + std::to_string(node.param.first) + ")";
    default:
        return "";
    }
}

std::string vertex(std::size_t pos) {
    return pos == 0 ? "input" : "n" + std::to_string(pos);
}

} // namespace

std::string to_dot(const ArchitectureGraph& graph) {
    std::ostringstream out;
    out << "digraph architecture {\n";
    out << "  rankdir=TB;\n";
    out << "  node [shape=box];\n";
    out << "  input [label=\"Input " << shape_label(graph.input_shape) << "\", shape=ellipse];\n";
    for (const auto& node : graph.nodes) {
        out << "  " << vertex(node.id) << " [label=\"" << function_label(node.function)
            << param_label(node) << " " << shape_label(node.out_shape) << "\"];\n";
    }
    out << "  output [label=\"Output " << shape_label(graph.output_shape())
        << "\", shape=ellipse];\n";
    for (const auto& node : graph.nodes) {
        for (std::size_t in : node.inputs) {
            out << "  " << vertex(in) << " -> " << vertex(node.id) << ";\n";
        }
    }
    out << "  " << vertex(graph.output_node) << " -> output;\n";
    out << "}\n";
    return out.str();
}

} // namespace cgpnas
