#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "cgpnas/evaluator.hpp"
#include "cgpnas/evolution.hpp"
#include "cgpnas/run_config.hpp"
#include "cgpnas/serialization.hpp"

namespace cgpnas {

inline constexpr const char* kCheckpointVersion = "cgpnas-checkpoint-1";

struct Checkpoint {
    RunConfig config;
    EvolutionState state;
    bool completed = false;
};

Json checkpoint_to_json(const Checkpoint& c);
/// Throws CheckpointError on version mismatch or malformed content.
Checkpoint checkpoint_from_json(const Json& j);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct RunControl {
    /// Polled between generations.
    const std::atomic<bool>* interrupt = nullptr;
    /// Stop (with a checkpoint) once this many generations are done.
    std::optional<std::size_t> stop_after_generation;
    std::function<void(const std::string&)> log;
};

enum class RunStatus { Completed, Interrupted, Stopped, AlreadyComplete };

struct RunOutcome {
    RunStatus status = RunStatus::Completed;
    std::size_t generation = 0;
    double best_fitness = 0.0;
    std::optional<Genotype> best;
    std::filesystem::path output_dir;
};

/// Builtin evaluator, or the external bridge when a command is configured.
std::unique_ptr<Evaluator> make_evaluator(const RunConfig& config,
                                          std::function<void(const std::string&)> warn = {},
                                          std::function<void(const FitnessRecord&)> log = {});

/// Output files written by search and resume.
namespace artifact {
inline constexpr const char* kLock = ".lock";
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kHistory = "history.jsonl";
inline constexpr const char* kEvaluations = "evaluations.jsonl";
inline constexpr const char* kCheckpoint = "checkpoint.json";
inline constexpr const char* kBestGenotype = "best_genotype.json";
inline constexpr const char* kBestGraph = "best_graph.json";
inline constexpr const char* kBestDot = "best_graph.dot";
inline constexpr const char* kSummary = "summary.json";
}  // namespace artifact

/// Fresh run into config.output_dir; history and evaluation logs start empty.
RunOutcome run_search(const RunConfig& config, const RunControl& control = {});

/// Continues from a checkpoint, writing into `output_dir` (defaults to the
/// checkpoint's directory). A completed checkpoint is a no-op.
RunOutcome resume_search(const std::filesystem::path& checkpoint_path,
                         const RunControl& control = {},
                         std::optional<std::filesystem::path> output_dir = std::nullopt);

} // namespace cgpnas
