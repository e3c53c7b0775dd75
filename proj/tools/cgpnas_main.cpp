#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cgpnas/decoder.hpp"
#include "cgpnas/error.hpp"
#include "cgpnas/evaluator.hpp"
#include "cgpnas/external_evaluator.hpp"
#include "cgpnas/run_config.hpp"
#include "cgpnas/runner.hpp"
#include "cgpnas/serialization.hpp"

using namespace cgpnas;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kConfig = 2, kCheckpoint = 3, kDecode = 4, kInterrupt = 130 };

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string preset;
    std::string out;
    std::string external;
    std::string dot;
    std::string catalog;
    std::string positional;
};

RunConfig resolve_config(const Options& o) {
    Json j = Json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw ConfigError("config: cannot open " + o.config_path);
        try {
            j = Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("config: malformed JSON: ") + e.what());
        }
        if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    }
    if (!o.preset.empty()) j["preset"] = o.preset;
    if (!o.out.empty()) j["output_dir"] = o.out;
    if (!o.external.empty()) j["external_command"] = o.external;
    RunConfig c = run_config_from_json(j);
    if (o.seed) c.set_seed(*o.seed);
    c.validate();
    return c;
}

Genotype load_genotype(const std::string& path) {
    Json j;
    try {
        j = read_json_file(path);
    } catch (const std::exception& e) {
        throw DecodeError("genotype: cannot read " + path + ": " + e.what());
    }
    return genotype_from_json(j);
}

RunControl make_control() {
    RunControl control;
    control.interrupt = &g_interrupted;
    control.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
    return control;
}

int report(const RunOutcome& outcome) {
    Json j;
    j["output_dir"] = outcome.output_dir.string();
    j["generation"] = outcome.generation;
    j["best_fitness"] = outcome.best_fitness;
    std::cout << j.dump() << std::endl;
    if (outcome.status == RunStatus::Interrupted) {
        std::cerr << "interrupted; checkpoint written to " << outcome.output_dir.string() << '\n';
        return kInterrupt;
    }
    return kOk;
}

int cmd_search(Options o, const std::string& tag_catalog) {
    RunConfig c = resolve_config(o);
    if (!tag_catalog.empty()) {
        c.catalog = FunctionCatalog::preset(tag_catalog);
        c.catalog_name = tag_catalog;
        c.tag = tag_catalog;
    }
    return report(run_search(c, make_control()));
}

int cmd_resume(const Options& o) {
    std::optional<std::filesystem::path> out;
    if (!o.out.empty()) out = o.out;
    const RunOutcome outcome = resume_search(o.positional, make_control(), out);
    if (outcome.status == RunStatus::AlreadyComplete) {
        std::cerr << "run already complete at generation " << outcome.generation << '\n';
    }
    return report(outcome);
}

int cmd_eval(const Options& o) {
    const RunConfig c = resolve_config(o);
    const Genotype g = load_genotype(o.positional);
    const FunctionCatalog catalog = o.catalog.empty() ? g.catalog() : FunctionCatalog::preset(o.catalog);
    const ArchitectureGraph graph = decode(g, catalog, c.data.input_shape());
    double fitness = 0.0;
    bool diverged = false;
    if (!c.external_command.empty()) {
        ExternalEvaluator external(c.external_command, c.data,
                                   [](const std::string& m) { std::cerr << m << '\n'; });
        fitness = external.evaluate(std::span(&g, 1), 0).front();
    } else {
        const Dataset data = synth_dataset(c.data);
        const EvaluationOutcome r = evaluate(graph, c.data, data);
        fitness = r.fitness;
        diverged = r.diverged;
    }
    Json shapes = Json::array();
    shapes.push_back(to_string(graph.input_shape));
    for (const GraphNode& n : graph.nodes) {
        shapes.push_back(to_string(n.out_shape));
    }
    Json j;
    j["fitness"] = fitness;
    j["hash"] = to_hex(phenotype_hash(g));
    j["shapes"] = std::move(shapes);
    j["source"] = std::string(source_name(c.data.source));
    if (diverged) j["diverged"] = true;
    std::cout << j.dump() << std::endl;
    return kOk;
}

int cmd_decode(const Options& o) {
    const RunConfig c = resolve_config(Options{o.config_path, std::nullopt, o.preset, "", "", "", "", ""});
    const Genotype g = load_genotype(o.positional);
    const ArchitectureGraph graph = decode(g, g.catalog(), c.data.input_shape());
    const std::string text = graph_to_json(graph).dump(2) + "\n";
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(o.out, text);
    }
    if (!o.dot.empty()) {
        write_text_file(o.dot, to_dot(graph));
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CGP neural architecture search"};
    app.require_subcommand(1);
    Options o;

    auto add_run_flags = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "run configuration JSON");
        sub->add_option("--seed", o.seed, "overrides the configured seed");
        sub->add_option("--preset", o.preset, "paper or desk");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--external", o.external, "external evaluator command");
    };

    CLI::App* search = app.add_subcommand("search", "run an architecture search");
    add_run_flags(search);

    CLI::App* resume = app.add_subcommand("resume", "continue a run from its checkpoint");
    resume->add_option("checkpoint", o.positional)->required();
    resume->add_option("--out", o.out, "output directory (default: the checkpoint's)");

    CLI::App* eval = app.add_subcommand("eval", "train and score a genotype");
    eval->add_option("genotype", o.positional)->required();
    add_run_flags(eval);
    eval->add_option("--catalog", o.catalog, "restrict to a function-set preset");

    CLI::App* decode_cmd = app.add_subcommand("decode", "write the decoded graph");
    decode_cmd->add_option("genotype", o.positional)->required();
    decode_cmd->add_option("--config", o.config_path, "configuration supplying the input shape");
    decode_cmd->add_option("--preset", o.preset, "paper or desk");
    decode_cmd->add_option("--out", o.out, "graph JSON path (default: stdout)");
    decode_cmd->add_option("--dot", o.dot, "DOT output path");

    std::string ablation;
    CLI::App* ablate = app.add_subcommand("ablate", "search with a restricted function set");
    ablate->add_option("set", ablation, "s_no_conv, s_no_atte or s_no_conv_atte")->required();
    add_run_flags(ablate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    std::signal(SIGINT, on_sigint);
    try {
        if (*search) return cmd_search(o, "");
        if (*resume) return cmd_resume(o);
        if (*eval) return cmd_eval(o);
        if (*decode_cmd) return cmd_decode(o);
        if (*ablate) {
            if (ablation != "s_no_conv" && ablation != "s_no_atte" && ablation != "s_no_conv_atte") {
                throw ConfigError("ablate: unknown preset '" + ablation + "'");
            }
            return cmd_search(o, ablation);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return kCheckpoint;
    } catch (const DecodeError& e) {
        std::cerr << "decode error: " << e.what() << '\n';
        return kDecode;
    } catch (const CatalogError& e) {
        std::cerr << "decode error: " << e.what() << '\n';
        return kDecode;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
