#include "cgpnas/run_config.hpp"

#include <fstream>
#include <set>

#include "cgpnas/error.hpp"

namespace cgpnas {

std::string_view preset_name(Preset p) {
    return p == Preset::Paper ? "paper" : "desk";
}

std::optional<Preset> parse_preset(std::string_view name) {
    if (name == "paper") return Preset::Paper;
    if (name == "desk") return Preset::Desk;
    return std::nullopt;
}

RunConfig preset_config(Preset p) {
    RunConfig c;
    c.preset = p;
    if (p == Preset::Paper) {
        c.grid = GridConfig{};  // 5x20, levels-back 3, bounds [10, 60]
        c.evolution = EvolutionConfig{};  // lambda 4, 1000 generations, 0.1 / 0.2
        c.data = paper_data_config();
    } else {
        c.grid.rows = 3;
        c.grid.cols = 8;
        c.grid.levels_back = 3;
        c.grid.active_min = 3;
        c.grid.active_max = 15;
        c.evolution.lambda = 4;
        c.evolution.max_generation = 30;
        c.data = desk_data_config();
    }
    return c;
}

void RunConfig::validate() const {
    grid.validate();
    evolution.validate();
    data.validate();
    if (checkpoint_every == 0) {
        throw ConfigError("checkpoint_every: must be at least 1");
    }
    if (threads == 0) {
        throw ConfigError("threads: must be at least 1");
    }
    if (output_dir.empty()) {
        throw ConfigError("output_dir: must not be empty");
    }
    if (data.source == DataSource::External && external_command.empty()) {
        throw ConfigError("data.source: 'external' requires external_command");
    }
}

void RunConfig::set_seed(std::uint64_t seed) {
    evolution.seed = seed;
    data.seed = seed;
}

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& item : j.items()) {
        if (!allowed.contains(item.key())) {
            throw ConfigError((where.empty() ? "" : where + ".") + item.key() + ": unknown field");
        }
    }
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) {
        return;
    }
    const std::string path = (where.empty() ? "" : where + ".") + key;
    const Json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(path + ": expected a number");
    } else {
        if (!v.is_string()) throw ConfigError(path + ": expected a string");
    }
    out = v.get<T>();
}

void read_grid(const Json& j, GridConfig& g) {
    reject_unknown(j,
                   {"rows", "cols", "levels_back", "input_count", "output_count", "active_min",
                    "active_max", "inputs_always_reachable"},
                   "grid");
    read(j, "rows", g.rows, "grid");
    read(j, "cols", g.cols, "grid");
    read(j, "levels_back", g.levels_back, "grid");
    read(j, "input_count", g.input_count, "grid");
    read(j, "output_count", g.output_count, "grid");
    read(j, "active_min", g.active_min, "grid");
    read(j, "active_max", g.active_max, "grid");
    read(j, "inputs_always_reachable", g.inputs_always_reachable, "grid");
}

void read_evolution(const Json& j, EvolutionConfig& e) {
    reject_unknown(j,
                   {"lambda", "max_generation", "base_rate", "sum_rate", "late_fraction",
                    "late_multiplier", "offspring_retry_cap", "seed"},
                   "evolution");
    read(j, "lambda", e.lambda, "evolution");
    read(j, "max_generation", e.max_generation, "evolution");
    read(j, "base_rate", e.base_rate, "evolution");
    read(j, "sum_rate", e.sum_rate, "evolution");
    read(j, "late_fraction", e.late_fraction, "evolution");
    read(j, "late_multiplier", e.late_multiplier, "evolution");
    read(j, "offspring_retry_cap", e.offspring_retry_cap, "evolution");
    read(j, "seed", e.seed, "evolution");
}

void read_data(const Json& j, DataConfig& d) {
    reject_unknown(j,
                   {"source", "dataset_name", "vocab_size", "num_classes", "max_len", "embed_dim",
                    "train_size", "val_size", "batch_size", "epochs", "lr", "seed",
                    "glove_path"},
                   "data");
    if (j.contains("source")) {
        std::string name;
        read(j, "source", name, "data");
        const auto s = parse_source(name);
        if (!s) throw ConfigError("data.source: unknown source '" + name + "'");
        d.source = *s;
    }
    read(j, "dataset_name", d.dataset_name, "data");
    read(j, "vocab_size", d.vocab_size, "data");
    read(j, "num_classes", d.num_classes, "data");
    read(j, "max_len", d.max_len, "data");
    read(j, "embed_dim", d.embed_dim, "data");
    read(j, "train_size", d.train_size, "data");
    read(j, "val_size", d.val_size, "data");
    read(j, "batch_size", d.batch_size, "data");
    read(j, "epochs", d.epochs, "data");
    read(j, "lr", d.lr, "data");
    read(j, "seed", d.seed, "data");
    read(j, "glove_path", d.glove_path, "data");
}

} // namespace

RunConfig run_config_from_json(const Json& j) {
    reject_unknown(j,
                   {"preset", "seed", "grid", "evolution", "catalog", "data", "output_dir",
                    "checkpoint_every", "cache", "threads", "external_command", "tag"},
                   "");
    Preset preset = Preset::Desk;
    if (j.contains("preset")) {
        std::string name;
        read(j, "preset", name, "");
        const auto p = parse_preset(name);
        if (!p) throw ConfigError("preset: unknown preset '" + name + "'");
        preset = *p;
    }
    RunConfig c = preset_config(preset);
    if (j.contains("seed")) {
        std::uint64_t seed = 0;
        read(j, "seed", seed, "");
        c.set_seed(seed);
    }
    if (j.contains("grid")) read_grid(j["grid"], c.grid);
    if (j.contains("evolution")) read_evolution(j["evolution"], c.evolution);
    if (j.contains("data")) read_data(j["data"], c.data);
    if (j.contains("catalog")) {
        const Json& cat = j["catalog"];
        if (cat.is_string()) {
            c.catalog = FunctionCatalog::preset(cat.get<std::string>());
            c.catalog_name = cat.get<std::string>();
        } else if (cat.is_array()) {
            std::vector<std::string> names;
            for (const Json& n : cat) {
                if (!n.is_string()) throw ConfigError("catalog: entries must be function names");
                names.push_back(n.get<std::string>());
            }
            c.catalog = FunctionCatalog::from_names(names);
            c.catalog_name = "custom";
        } else {
            throw ConfigError("catalog: expected a preset name or a list of function names");
        }
    }
    std::string out = c.output_dir.string();
    read(j, "output_dir", out, "");
    c.output_dir = out;
    read(j, "checkpoint_every", c.checkpoint_every, "");
    read(j, "cache", c.cache, "");
    read(j, "threads", c.threads, "");
    read(j, "external_command", c.external_command, "");
    read(j, "tag", c.tag, "");
    c.validate();
    return c;
}

Json run_config_to_json(const RunConfig& c) {
    Json j;
    j["preset"] = std::string(preset_name(c.preset));
    j["grid"] = grid_config_to_json(c.grid);
    Json e;
    e["lambda"] = c.evolution.lambda;
    e["max_generation"] = c.evolution.max_generation;
    e["base_rate"] = c.evolution.base_rate;
    e["sum_rate"] = c.evolution.sum_rate;
    e["late_fraction"] = c.evolution.late_fraction;
    e["late_multiplier"] = c.evolution.late_multiplier;
    e["offspring_retry_cap"] = c.evolution.offspring_retry_cap;
    e["seed"] = c.evolution.seed;
    j["evolution"] = std::move(e);
    if (c.catalog_name == "custom") {
        j["catalog"] = c.catalog.names();
    } else {
        j["catalog"] = c.catalog_name;
    }
    Json d;
    d["source"] = std::string(source_name(c.data.source));
    d["dataset_name"] = c.data.dataset_name;
    d["vocab_size"] = c.data.vocab_size;
    d["num_classes"] = c.data.num_classes;
    d["max_len"] = c.data.max_len;
    d["embed_dim"] = c.data.embed_dim;
    d["train_size"] = c.data.train_size;
    d["val_size"] = c.data.val_size;
    d["batch_size"] = c.data.batch_size;
    d["epochs"] = c.data.epochs;
    d["lr"] = c.data.lr;
    d["seed"] = c.data.seed;
    d["glove_path"] = c.data.glove_path;
    j["data"] = std::move(d);
    j["output_dir"] = c.output_dir.string();
    j["checkpoint_every"] = c.checkpoint_every;
    j["cache"] = c.cache;
    j["threads"] = c.threads;
    j["external_command"] = c.external_command;
    j["tag"] = c.tag;
    return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path.string());
    }
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    return run_config_from_json(j);
}

} // namespace cgpnas
