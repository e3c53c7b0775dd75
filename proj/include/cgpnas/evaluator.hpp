#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cgpnas/dataset.hpp"
#include "cgpnas/decoder.hpp"
#include "cgpnas/evolution.hpp"

namespace cgpnas {

struct EvaluationOutcome {
    double fitness = 0.0;
    bool diverged = false;
    double final_loss = 0.0;
};

/// Trains a fresh model for cfg.epochs with Adam and returns final-epoch
/// validation accuracy. A non-finite loss stops training and yields
/// fitness 0 with `diverged` set.
EvaluationOutcome evaluate(const ArchitectureGraph& graph, const DataConfig& cfg,
                           const Dataset& data);

/// One line of the evaluation log.
struct FitnessRecord {
    std::size_t generation = 0;
    std::uint64_t hash = 0;
    double fitness = 0.0;
    double seconds = 0.0;
    bool cached = false;
    bool invalid = false;
    bool diverged = false;
};

struct EvaluatorOptions {
    bool cache = true;
    /// Offspring trained concurrently; 1 keeps everything on the caller's thread.
    std::size_t threads = 1;
    std::function<void(const FitnessRecord&)> log;
};

/// Fitness = validation accuracy on a synthetic task, memoized by
/// phenotype hash. Genotypes that fail validation score 0 untrained.
class BuiltinEvaluator : public Evaluator {
public:
    BuiltinEvaluator(DataConfig data, EvaluatorOptions options = {});

    std::vector<double> evaluate(std::span<const Genotype> batch, std::size_t generation) override;

    double cached_evaluate(const Genotype& g, std::size_t generation = 0);

    std::size_t training_runs() const;
    std::size_t cache_hits() const;
    const Dataset& dataset() const { return dataset_; }
    const DataConfig& data_config() const { return data_; }

private:
    DataConfig data_;
    EvaluatorOptions options_;
    Dataset dataset_;
    mutable std::mutex mutex_;
    std::unordered_map<std::uint64_t, double> cache_;
    std::size_t training_runs_ = 0;
    std::size_t cache_hits_ = 0;
};

std::string to_hex(std::uint64_t value);

} // namespace cgpnas
