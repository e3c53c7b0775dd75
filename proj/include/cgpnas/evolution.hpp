#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cgpnas/genome.hpp"
#include "cgpnas/random.hpp"

namespace cgpnas {

struct EvolutionConfig {
    std::size_t lambda = 4;
    std::size_t max_generation = 1000;
    double base_rate = 0.1;
    double sum_rate = 0.2;
    double late_fraction = 0.25;
    double late_multiplier = 2.0;
    std::size_t offspring_retry_cap = 1000;
    std::uint64_t seed = 0;

    void validate() const;
    /// First generation that runs at the multiplied rate.
    std::size_t late_start() const;

    bool operator==(const EvolutionConfig&) const = default;
};

/// Mutation probability for a gene whose current function is `f`.
double effective_rate(const EvolutionConfig& cfg, std::size_t generation, FunctionId f);

enum class MutationScope { All, InactiveOnly };

using GeneRate = std::function<double(const Gene&)>;

/// Independent per-field point mutation. A mutated field moves to a
/// different valid value; a changed function also redraws its parameter.
/// The output ref mutates at `output_rate` only when scope is All.
Genotype point_mutate(const Genotype& g, const GeneRate& rate, double output_rate,
                      MutationScope scope, RandomStream& rng);

struct Offspring {
    Genotype genotype;
    bool within_bounds = true;
};

Offspring forced_mutation(const Genotype& g, const EvolutionConfig& cfg, std::size_t generation,
                          RandomStream& rng);

Genotype neutral_mutation(const Genotype& g, const EvolutionConfig& cfg, std::size_t generation,
                          RandomStream& rng);

struct HistoryRecord {
    std::size_t generation = 0;
    double parent_fitness = 0.0;
    double best_offspring_fitness = 0.0;
    bool neutral_step = false;
    bool single_chain = false;  // parent phenotype after this generation

    bool operator==(const HistoryRecord&) const = default;
};

struct EvolutionState {
    std::size_t generation = 0;
    Genotype parent;
    double parent_fitness = 0.0;
    RandomStream rng;
    std::vector<HistoryRecord> history;
};

/// Fitness function for a batch of candidates. Implementations may score
/// the batch concurrently; results must be in [0, 1] and positionally
/// match `batch`.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual std::vector<double> evaluate(std::span<const Genotype> batch,
                                         std::size_t generation) = 0;
};

struct EvolutionObserver {
    std::function<void(const EvolutionState&, const HistoryRecord&)> on_generation;
    /// Polled between generations; true stops the loop early.
    std::function<bool(const EvolutionState&)> should_stop;
};

struct EvolutionResult {
    Genotype best;
    double best_fitness = 0.0;
    std::vector<HistoryRecord> history;
    bool completed = true;
};

/// Random parent drawn from cfg.seed, evaluated once.
EvolutionState initialize(const EvolutionConfig& cfg, const GridConfig& grid,
                          const FunctionCatalog& catalog, Evaluator& evaluator);

/// One generation of the 1+lambda strategy.
HistoryRecord step(EvolutionState& state, const EvolutionConfig& cfg, Evaluator& evaluator);

/// Steps until max_generation or until the observer asks to stop.
EvolutionResult run(EvolutionState& state, const EvolutionConfig& cfg, Evaluator& evaluator,
                    const EvolutionObserver& observer = {});

EvolutionResult evolve(const EvolutionConfig& cfg, const GridConfig& grid,
                       const FunctionCatalog& catalog, Evaluator& evaluator,
                       const EvolutionObserver& observer = {});

} // namespace cgpnas
