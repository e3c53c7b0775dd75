#include "cgpnas/runner.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <fcntl.h>
#include <fstream>
#include <unistd.h>

#include "cgpnas/decoder.hpp"
#include "cgpnas/error.hpp"
#include "cgpnas/evaluator.hpp"
#include "cgpnas/external_evaluator.hpp"

namespace cgpnas {

namespace fs = std::filesystem;

Json checkpoint_to_json(const Checkpoint& c) {
    Json history = Json::array();
    for (const HistoryRecord& r : c.state.history) {
        history.push_back(history_to_json(r));
    }
    Json j;
    j["generation"] = c.state.generation;
    j["parent"] = genotype_to_json(c.state.parent);
    j["parent_fitness"] = c.state.parent_fitness;
    j["rng_state"] = c.state.rng.state();
    j["history"] = std::move(history);
    j["version"] = kCheckpointVersion;
    j["completed"] = c.completed;
    j["config"] = run_config_to_json(c.config);
    return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
    if (!j.is_object()) {
        throw CheckpointError("checkpoint: expected an object");
    }
    const std::string version = j.value("version", std::string());
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint: version '" + version + "' does not match engine version '" +
                              kCheckpointVersion + "'");
    }
    try {
        RunConfig config = run_config_from_json(j.at("config"));
        Genotype parent = genotype_from_json(j.at("parent"));
        std::vector<HistoryRecord> history;
        for (const Json& r : j.at("history")) {
            history.push_back(history_from_json(r));
        }
        const auto generation = j.at("generation").get<std::size_t>();
        if (history.size() != generation) {
            throw CheckpointError("checkpoint: history length does not match generation");
        }
        if (parent.config() != config.grid || parent.catalog() != config.catalog) {
            throw CheckpointError("checkpoint: parent does not match the run configuration");
        }
        EvolutionState state{generation, std::move(parent), j.at("parent_fitness").get<double>(),
                             RandomStream::from_state(j.at("rng_state").get<std::string>()),
                             std::move(history)};
        return Checkpoint{std::move(config), std::move(state), j.value("completed", false)};
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
}

Checkpoint load_checkpoint(const fs::path& path) {
    Json j;
    try {
        j = read_json_file(path);
    } catch (const std::exception& e) {
        throw CheckpointError("checkpoint: cannot read " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& config,
                                          std::function<void(const std::string&)> warn,
                                          std::function<void(const FitnessRecord&)> log) {
    if (!config.external_command.empty()) {
        return std::make_unique<ExternalEvaluator>(config.external_command, config.data,
                                                   std::move(warn), std::move(log));
    }
    EvaluatorOptions options;
    options.cache = config.cache;
    options.threads = config.threads;
    options.log = std::move(log);
    return std::make_unique<BuiltinEvaluator>(config.data, options);
}

namespace {

/// Exclusive ownership of an output directory. A lock left by a dead
/// process is taken over.
class DirectoryLock {
public:
    explicit DirectoryLock(const fs::path& dir) : path_(dir / artifact::kLock) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
            if (fd >= 0) {
                const std::string pid = std::to_string(::getpid()) + "\n";
                [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
                ::close(fd);
                return;
            }
            if (errno != EEXIST) {
                break;
            }
            long owner = 0;
            std::ifstream(path_) >> owner;
            if (owner > 0 && (::kill(static_cast<pid_t>(owner), 0) == 0 || errno != ESRCH)) {
                throw std::runtime_error("output directory " + dir.string() +
                                         " is locked by process " + std::to_string(owner));
            }
            fs::remove(path_);
        }
        throw std::runtime_error("cannot create lock file " + path_.string());
    }
    ~DirectoryLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    fs::path path_;
};

Json fitness_record_json(const FitnessRecord& r) {
    Json j;
    j["gen"] = r.generation;
    j["hash"] = to_hex(r.hash);
    j["fitness"] = r.fitness;
    j["seconds"] = r.seconds;
    return j;
}

void write_best(const fs::path& dir, const RunConfig& config, const EvolutionState& state,
                double seconds, bool completed) {
    const Genotype& best = state.parent;
    write_json_file(dir / artifact::kBestGenotype, genotype_to_json(best));
    Json summary;
    summary["tag"] = config.tag;
    summary["preset"] = std::string(preset_name(config.preset));
    summary["catalog"] = config.catalog_name;
    summary["functions"] = config.catalog.names();
    summary["generations"] = state.generation;
    summary["completed"] = completed;
    summary["best_fitness"] = state.parent_fitness;
    summary["best_hash"] = to_hex(phenotype_hash(best));
    summary["active_count"] = active_count(best);
    summary["seconds"] = seconds;
    try {
        const ArchitectureGraph graph = decode(best, best.catalog(), config.data.input_shape());
        write_json_file(dir / artifact::kBestGraph, graph_to_json(graph));
        write_text_file(dir / artifact::kBestDot, to_dot(graph));
        Json functions = Json::array();
        for (const GraphNode& n : graph.nodes) {
            functions.push_back(std::string(function_name(n.function)));
        }
        summary["graph_functions"] = std::move(functions);
    } catch (const DecodeError& e) {
        summary["graph_error"] = e.what();
    }
    write_json_file(dir / artifact::kSummary, summary);
}

RunOutcome drive(const RunConfig& config, const fs::path& dir, std::optional<Checkpoint> resumed,
                 const RunControl& control) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    fs::create_directories(dir);
    DirectoryLock lock(dir);
    auto say = [&](const std::string& msg) {
        if (control.log) control.log(msg);
    };

    const auto open_mode = resumed ? std::ios::app : std::ios::trunc;
    std::ofstream evaluations(dir / artifact::kEvaluations, std::ios::out | open_mode);
    auto log_record = [&evaluations](const FitnessRecord& r) {
        evaluations << fitness_record_json(r).dump() << '\n';
        evaluations.flush();
    };
    std::unique_ptr<Evaluator> evaluator = make_evaluator(config, say, log_record);

    std::optional<EvolutionState> state;
    if (resumed) {
        state.emplace(std::move(resumed->state));
        say("resuming at generation " + std::to_string(state->generation));
    } else {
        write_json_file(dir / artifact::kConfig, run_config_to_json(config));
        state.emplace(initialize(config.evolution, config.grid, config.catalog, *evaluator));
    }

    // History is rebuilt from the state so a resumed run matches a straight one.
    std::ofstream history(dir / artifact::kHistory, std::ios::out | std::ios::trunc);
    for (const HistoryRecord& r : state->history) {
        history << history_to_json(r).dump() << '\n';
    }
    history.flush();

    auto checkpoint_json = [&](bool completed) {
        return checkpoint_to_json(Checkpoint{config, *state, completed});
    };
    Json last_good = checkpoint_json(false);
    write_json_file(dir / artifact::kCheckpoint, last_good);

    EvolutionObserver observer;
    observer.on_generation = [&](const EvolutionState& s, const HistoryRecord& r) {
        history << history_to_json(r).dump() << '\n';
        history.flush();
        last_good = checkpoint_json(false);
        if (s.generation % config.checkpoint_every == 0) {
            write_json_file(dir / artifact::kCheckpoint, last_good);
        }
        say("generation " + std::to_string(r.generation) + " parent " +
            std::to_string(r.parent_fitness) + (r.neutral_step ? " (neutral)" : ""));
    };
    RunStatus stop_reason = RunStatus::Completed;
    observer.should_stop = [&](const EvolutionState& s) {
        if (control.interrupt && control.interrupt->load()) {
            stop_reason = RunStatus::Interrupted;
            return true;
        }
        if (control.stop_after_generation && s.generation >= *control.stop_after_generation) {
            stop_reason = RunStatus::Stopped;
            return true;
        }
        return false;
    };

    std::optional<EvolutionResult> result;
    try {
        result = run(*state, config.evolution, *evaluator, observer);
    } catch (const EvaluationAborted&) {
        write_json_file(dir / artifact::kCheckpoint, last_good);
        throw;
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    write_json_file(dir / artifact::kCheckpoint, checkpoint_json(result->completed));
    write_best(dir, config, *state, seconds, result->completed);

    RunOutcome outcome;
    outcome.status = result->completed ? RunStatus::Completed : stop_reason;
    outcome.generation = state->generation;
    outcome.best_fitness = state->parent_fitness;
    outcome.best = state->parent;
    outcome.output_dir = dir;
    return outcome;
}

} // namespace

RunOutcome run_search(const RunConfig& config, const RunControl& control) {
    config.validate();
    return drive(config, config.output_dir, std::nullopt, control);
}

RunOutcome resume_search(const fs::path& checkpoint_path, const RunControl& control,
                         std::optional<fs::path> output_dir) {
    Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const fs::path dir = output_dir ? *output_dir : checkpoint_path.parent_path();
    if (checkpoint.completed ||
        checkpoint.state.generation >= checkpoint.config.evolution.max_generation) {
        RunOutcome outcome;
        outcome.status = RunStatus::AlreadyComplete;
        outcome.generation = checkpoint.state.generation;
        outcome.best_fitness = checkpoint.state.parent_fitness;
        outcome.best = checkpoint.state.parent;
        outcome.output_dir = dir;
        return outcome;
    }
    RunConfig config = checkpoint.config;
    config.output_dir = dir;
    return drive(config, dir, std::move(checkpoint), control);
}

} // namespace cgpnas
