#include "cgpnas/serialization.hpp"

#include <fstream>
#include <sstream>

#include "cgpnas/error.hpp"

namespace cgpnas {

namespace {

template <typename T>
T get_field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw DecodeError(where + "." + key + ": missing");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DecodeError(where + "." + key + ": wrong type");
    }
}

Json shape_to_json(const TensorShape& s) {
    return Json::array({s.batch, s.length, s.dim});
}

TensorShape shape_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) {
        throw DecodeError(where + ": shape must be [batch, length, dim]");
    }
    try {
        return TensorShape{j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
    } catch (const nlohmann::json::exception&) {
        throw DecodeError(where + ": shape entries must be non-negative integers");
    }
}

FunctionId function_from_json(const Json& j, const std::string& where) {
    if (!j.is_string()) {
        throw DecodeError(where + ": function name must be a string");
    }
    const auto f = parse_function(j.get<std::string>());
    if (!f) {
        throw DecodeError(where + ": unknown function '" + j.get<std::string>() + "'");
    }
    return *f;
}

} // namespace

Json grid_config_to_json(const GridConfig& c) {
    Json j;
    j["rows"] = c.rows;
    j["cols"] = c.cols;
    j["levels_back"] = c.levels_back;
    j["input_count"] = c.input_count;
    j["output_count"] = c.output_count;
    j["active_min"] = c.active_min;
    j["active_max"] = c.active_max;
    j["inputs_always_reachable"] = c.inputs_always_reachable;
    return j;
}

GridConfig grid_config_from_json(const Json& j, const std::string& where) {
    GridConfig c;
    c.rows = get_field<std::size_t>(j, "rows", where);
    c.cols = get_field<std::size_t>(j, "cols", where);
    c.levels_back = get_field<std::size_t>(j, "levels_back", where);
    c.input_count = get_field<std::size_t>(j, "input_count", where);
    c.output_count = get_field<std::size_t>(j, "output_count", where);
    c.active_min = get_field<std::size_t>(j, "active_min", where);
    c.active_max = get_field<std::size_t>(j, "active_max", where);
    c.inputs_always_reachable = get_field<bool>(j, "inputs_always_reachable", where);
    return c;
}

Json param_to_json(FunctionId f, ParamValue p) {
    switch (f) {
    case FunctionId::Conv: return Json::array({p.first, p.second});
    case FunctionId::Atte:
    case FunctionId::Linear: return p.first;
    default: return nullptr;
    }
}

ParamValue param_from_json(FunctionId f, const Json& j) {
    ParamValue p;
    switch (f) {
    case FunctionId::Conv:
        if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
            !j[1].is_number_integer()) {
            throw DecodeError("conv parameter must be [channel, kernel]");
        }
        p = {j[0].get<int>(), j[1].get<int>()};
        break;
    case FunctionId::Atte:
    case FunctionId::Linear:
        if (!j.is_number_integer()) {
            throw DecodeError(std::string(function_name(f)) + " parameter must be an integer");
        }
        p = {j.get<int>(), 0};
        break;
    default:
        if (!j.is_null()) {
            throw DecodeError(std::string(function_name(f)) + " takes no parameter");
        }
        break;
    }
    if (!in_domain(f, p)) {
        throw DecodeError(std::string(function_name(f)) + " parameter outside its domain");
    }
    return p;
}

Json genotype_to_json(const Genotype& g) {
    Json config = grid_config_to_json(g.config());
    config["functions"] = g.catalog().names();
    Json grid = Json::array();
    for (const Gene& gene : g.genes()) {
        grid.push_back(Json::array({std::string(function_name(gene.function)), gene.in1, gene.in2,
                                    param_to_json(gene.function, gene.param)}));
    }
    Json j;
    j["config"] = std::move(config);
    j["grid"] = std::move(grid);
    j["output"] = g.output();
    return j;
}

Genotype genotype_from_json(const Json& j) {
    if (!j.is_object()) {
        throw DecodeError("genotype: expected an object");
    }
    const GridConfig config = grid_config_from_json(j.value("config", Json::object()), "config");
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw DecodeError(std::string("genotype config: ") + e.what());
    }
    const auto names = get_field<std::vector<std::string>>(j["config"], "functions", "config");
    FunctionCatalog catalog;
    try {
        catalog = FunctionCatalog::from_names(names);
    } catch (const ConfigError& e) {
        throw DecodeError(std::string("genotype config: ") + e.what());
    }
    if (!j.contains("grid") || !j["grid"].is_array()) {
        throw DecodeError("genotype.grid: missing or not an array");
    }
    std::vector<Gene> genes;
    std::size_t index = 0;
    for (const Json& row : j["grid"]) {
        ++index;
        const std::string where = "genotype.grid[" + std::to_string(index - 1) + "]";
        if (!row.is_array() || row.size() != 4 || !row[1].is_number_unsigned() ||
            !row[2].is_number_unsigned()) {
            throw DecodeError(where + ": expected [function, in1, in2, param]");
        }
        Gene gene;
        gene.function = function_from_json(row[0], where);
        gene.in1 = row[1].get<NodeRef>();
        gene.in2 = row[2].get<NodeRef>();
        try {
            gene.param = param_from_json(gene.function, row[3]);
        } catch (const DecodeError& e) {
            throw DecodeError(where + ": " + e.what());
        }
        genes.push_back(gene);
    }
    const auto output = get_field<NodeRef>(j, "output", "genotype");
    Genotype g(config, std::move(catalog), std::move(genes), output);
    g.check_structure();
    return g;
}

Json graph_to_json(const ArchitectureGraph& graph) {
    Json nodes = Json::array();
    for (const GraphNode& n : graph.nodes) {
        Json node;
        node["id"] = n.id;
        node["fn"] = std::string(function_name(n.function));
        node["param"] = param_to_json(n.function, n.param);
        node["inputs"] = n.inputs;
        node["shape"] = shape_to_json(n.out_shape);
        nodes.push_back(std::move(node));
    }
    Json j;
    j["nodes"] = std::move(nodes);
    j["input_shape"] = shape_to_json(graph.input_shape);
    j["output"] = graph.output_node;
    return j;
}

ArchitectureGraph graph_from_json(const Json& j) {
    ArchitectureGraph graph;
    graph.input_shape = shape_from_json(j.value("input_shape", Json()), "graph.input_shape");
    if (!j.contains("nodes") || !j["nodes"].is_array()) {
        throw DecodeError("graph.nodes: missing or not an array");
    }
    for (const Json& n : j["nodes"]) {
        GraphNode node;
        node.id = get_field<std::size_t>(n, "id", "graph.node");
        node.function = function_from_json(n.value("fn", Json()), "graph.node.fn");
        node.param = param_from_json(node.function, n.value("param", Json()));
        node.inputs = get_field<std::vector<std::size_t>>(n, "inputs", "graph.node");
        node.out_shape = shape_from_json(n.value("shape", Json()), "graph.node.shape");
        if (node.id != graph.nodes.size() + 1 ||
            node.inputs.size() != static_cast<std::size_t>(arity(node.function))) {
            throw DecodeError("graph.node " + std::to_string(node.id) + ": bad id or arity");
        }
        for (std::size_t in : node.inputs) {
            if (in >= node.id) {
                throw DecodeError("graph.node " + std::to_string(node.id) +
                                  ": input does not precede the node");
            }
        }
        graph.nodes.push_back(std::move(node));
    }
    graph.output_node = get_field<std::size_t>(j, "output", "graph");
    if (graph.output_node > graph.nodes.size()) {
        throw DecodeError("graph.output: out of range");
    }
    return graph;
}

Json history_to_json(const HistoryRecord& r) {
    Json j;
    j["generation"] = r.generation;
    j["parent_fitness"] = r.parent_fitness;
    j["best_offspring_fitness"] = r.best_offspring_fitness;
    j["neutral_step"] = r.neutral_step;
    j["single_chain"] = r.single_chain;
    return j;
}

HistoryRecord history_from_json(const Json& j) {
    HistoryRecord r;
    r.generation = get_field<std::size_t>(j, "generation", "history");
    r.parent_fitness = get_field<double>(j, "parent_fitness", "history");
    r.best_offspring_fitness = get_field<double>(j, "best_offspring_fitness", "history");
    r.neutral_step = get_field<bool>(j, "neutral_step", "history");
    r.single_chain = j.value("single_chain", false);
    return r;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return Json::parse(in);  // throws nlohmann::json::parse_error
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace cgpnas
