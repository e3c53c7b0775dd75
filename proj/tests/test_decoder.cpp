#include <doctest.h>

#include <map>
#include <regex>
#include <sstream>

#include "cgpnas/decoder.hpp"
#include "cgpnas/error.hpp"
#include "support.hpp"

using namespace cgpnas;
using namespace cgpnas::testing;

namespace {

/// Just enough DOT to read back what to_dot writes.
struct ParsedDot {
    std::map<std::string, std::string> labels;
    std::vector<std::pair<std::string, std::string>> edges;
};

ParsedDot parse_dot(const std::string& text) {
    ParsedDot out;
    const std::regex vertex(R"(^\s*(\w+)\s*\[label="([^"]*)\"[^\]]*\];\s*$)");
    const std::regex edge(R"(^\s*(\w+)\s*->\s*(\w+);\s*$)");
    std::istringstream in(text);
    std::string line;
    std::smatch m;
    while (std::getline(in, line)) {
        if (std::regex_match(line, m, vertex)) {
            out.labels[m[1]] = m[2];
        } else if (std::regex_match(line, m, edge)) {
            out.edges.emplace_back(m[1], m[2]);
        }
    }
    return out;
}

} // namespace

TEST_CASE("fixture decodes to the reference shape chain") {
    const Genotype g = reference_genotype();
    const ArchitectureGraph graph = decode(g, g.catalog(), {8, 400, 300});
    const auto chain = reference_chain();
    REQUIRE(graph.nodes.size() + 1 == chain.size());
    CHECK(graph.input_shape == chain[0].shape);
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        CAPTURE(i);
        CHECK(chain_label(graph.nodes[i].function, graph.nodes[i].param) == chain[i + 1].label);
        CHECK(graph.nodes[i].out_shape == chain[i + 1].shape);
        CHECK(graph.nodes[i].id == i + 1);
    }
    CHECK(graph.output_node == graph.nodes.size());
    CHECK(graph.output_shape() == TensorShape{8, 400, 16});
    // The first merge joins the two stem branches.
    CHECK(graph.nodes[4].inputs == std::vector<std::size_t>{3, 4});
}

TEST_CASE("decoded inputs always precede their node") {
    GridConfig cfg;
    RandomStream rng(3);
    for (int i = 0; i < 100; ++i) {
        const Genotype g = random_genotype(cfg, FunctionCatalog(), rng);
        try {
            const ArchitectureGraph graph = decode(g, g.catalog(), {2, 6, 8});
            CHECK(graph.nodes.size() == active_count(g));
            for (const GraphNode& n : graph.nodes) {
                for (std::size_t in : n.inputs) CHECK(in < n.id);
            }
        } catch (const DecodeError&) {
            // GLU chains can legitimately collapse the width.
        }
    }
}

TEST_CASE("Sum of a node with itself keeps both inputs") {
    const Genotype g = reference_genotype();
    const ArchitectureGraph graph = decode(g, g.catalog(), {8, 400, 300});
    CHECK(graph.nodes[0].function == FunctionId::Sum);
    CHECK(graph.nodes[0].inputs == std::vector<std::size_t>{0, 0});
}

TEST_CASE("identity genotype decodes to an empty graph") {
    const Genotype g = identity_of(reference_genotype());
    const ArchitectureGraph graph = decode(g, g.catalog(), {8, 12, 16});
    CHECK(graph.nodes.empty());
    CHECK(graph.output_shape() == TensorShape{8, 12, 16});
}

TEST_CASE("GLU chain that collapses the width fails to decode with the node named") {
    GridConfig cfg;
    cfg.rows = 1;
    cfg.cols = 4;
    cfg.levels_back = 1;
    cfg.active_min = 1;
    cfg.active_max = 4;
    std::vector<Gene> genes(4, Gene{FunctionId::GLU, 0, 0, {}});
    for (NodeRef n = 2; n <= 4; ++n) genes[n - 1].in1 = genes[n - 1].in2 = n - 1;
    const Genotype g(cfg, FunctionCatalog(), genes, 4);
    // 4 -> 2 -> 1 -> (GLU of width 1 is undefined)
    try {
        decode(g, g.catalog(), {1, 3, 4});
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(std::string(e.what()).find("node 3") != std::string::npos);
    }
    const ValidityReport r = validate(g, g.catalog(), cfg, {1, 3, 4});
    CHECK_FALSE(r.decodable);
    CHECK_FALSE(r.valid());
    CHECK(validate(g, g.catalog(), cfg, {1, 3, 16}).valid());
}

TEST_CASE("functions outside the catalog are rejected") {
    const Genotype g = reference_genotype();
    CHECK_THROWS_AS(decode(g, FunctionCatalog::preset("s_no_conv"), {8, 400, 300}), CatalogError);
    const ValidityReport r =
        validate(g, FunctionCatalog::preset("s_no_atte"), g.config(), {8, 400, 300});
    CHECK_FALSE(r.functions_in_catalog);
}

TEST_CASE("active-count bounds are part of validity") {
    const Genotype g = reference_genotype();
    GridConfig tight = g.config();
    tight.active_max = 10;
    const ValidityReport r = validate(g, g.catalog(), tight, {8, 400, 300});
    CHECK(r.active_count == 11);
    CHECK_FALSE(r.active_in_bounds);
    CHECK(validate(g, g.catalog(), g.config(), {8, 400, 300}).valid());
}

TEST_CASE("DOT export round-trips through a parser") {
    const Genotype g = reference_genotype();
    const ArchitectureGraph graph = decode(g, g.catalog(), {8, 400, 300});
    const ParsedDot dot = parse_dot(to_dot(graph));
    CHECK(dot.labels.at("input") == "Input 8×400×300");
    CHECK(dot.labels.at("output") == "Output 8×400×16");
    CHECK(dot.labels.at("n3") == "Conv(32,1) 8×400×32");
    CHECK(dot.labels.at("n11") == "Conv(16,5) 8×400×16");
    CHECK(dot.labels.size() == graph.nodes.size() + 2);
    std::size_t expected_edges = 1;  // last node -> output
    for (const GraphNode& n : graph.nodes) expected_edges += n.inputs.size();
    CHECK(dot.edges.size() == expected_edges);
    CHECK(dot.edges.back() == std::pair<std::string, std::string>{"n11", "output"});
    for (const auto& [from, to] : dot.edges) {
        CHECK(dot.labels.contains(from));
        CHECK(dot.labels.contains(to));
    }
}
