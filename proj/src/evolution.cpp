#include "cgpnas/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cgpnas/error.hpp"
#include "cgpnas/serialization.hpp"

namespace cgpnas {

void EvolutionConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("evolution." + msg); };
    if (lambda < 1) fail("lambda: must be positive");
    if (!(base_rate > 0.0 && base_rate <= sum_rate && sum_rate <= 1.0)) {
        fail("base_rate/sum_rate: need 0 < base_rate <= sum_rate <= 1");
    }
    if (!(late_fraction > 0.0 && late_fraction < 1.0)) fail("late_fraction: must lie in (0, 1)");
    if (!(late_multiplier > 0.0) || late_multiplier * sum_rate > 1.0) {
        fail("late_multiplier: need late_multiplier > 0 and late_multiplier * sum_rate <= 1");
    }
    if (offspring_retry_cap < 1) fail("offspring_retry_cap: must be positive");
}

std::size_t EvolutionConfig::late_start() const {
    // Round before ceil so that e.g. 0.75 * 1000 is not lifted to 751 by
    // representation error.
    const double raw = (1.0 - late_fraction) * static_cast<double>(max_generation);
    return static_cast<std::size_t>(std::ceil(std::round(raw * 1e9) / 1e9));
}

double effective_rate(const EvolutionConfig& cfg, std::size_t generation, FunctionId f) {
    const double base = f == FunctionId::Sum ? cfg.sum_rate : cfg.base_rate;
    return generation >= cfg.late_start() ? base * cfg.late_multiplier : base;
}

namespace {

/// Uniform draw from `domain` excluding `current`; unchanged for singletons.
template <typename T>
T resample_excluding(std::span<const T> domain, const T& current, RandomStream& rng) {
    const auto it = std::find(domain.begin(), domain.end(), current);
    if (it == domain.end()) {
        return rng.pick(domain);
    }
    if (domain.size() <= 1) {
        return current;
    }
    const auto skip = static_cast<std::size_t>(it - domain.begin());
    std::size_t k = rng.uniform_below(domain.size() - 1);
    if (k >= skip) {
        ++k;
    }
    return domain[k];
}

} // namespace

Genotype point_mutate(const Genotype& g, const GeneRate& rate, double output_rate,
                      MutationScope scope, RandomStream& rng) {
    const GridConfig& config = g.config();
    std::vector<char> in_scope(config.node_count() + 1, 1);
    if (scope == MutationScope::InactiveOnly) {
        for (NodeRef node : active_nodes(g)) {
            in_scope[node] = 0;
        }
    }
    Genotype child = g;
    const auto functions = g.catalog().enabled();
    for (NodeRef node = 1; node <= config.node_count(); ++node) {
        if (!in_scope[node]) {
            continue;
        }
        Gene& gene = child.gene(node);
        const double p = rate(gene);
        const auto sources = valid_sources(config, config.column_of(node));
        const std::span<const NodeRef> src(sources);

        const FunctionId old_function = gene.function;
        if (rng.bernoulli(p)) {
            gene.function = resample_excluding(functions, gene.function, rng);
        }
        if (rng.bernoulli(p)) {
            gene.in1 = resample_excluding(src, gene.in1, rng);
        }
        if (rng.bernoulli(p)) {
            gene.in2 = resample_excluding(src, gene.in2, rng);
        }
        if (gene.function != old_function) {
            gene.param = rng.pick(parameter_domain(gene.function));
        } else if (rng.bernoulli(p)) {
            gene.param = resample_excluding(parameter_domain(gene.function), gene.param, rng);
        }
    }
    if (scope == MutationScope::All && rng.bernoulli(output_rate)) {
        const std::size_t n = config.node_count() + 1;
        std::size_t k = rng.uniform_below(n - 1);
        if (k >= g.output()) {
            ++k;
        }
        child.set_output(static_cast<NodeRef>(k));
    }
    return child;
}

namespace {

GeneRate rate_for(const EvolutionConfig& cfg, std::size_t generation) {
    return [&cfg, generation](const Gene& gene) {
        return effective_rate(cfg, generation, gene.function);
    };
}

} // namespace

Offspring forced_mutation(const Genotype& g, const EvolutionConfig& cfg, std::size_t generation,
                          RandomStream& rng) {
    const GridConfig& grid = g.config();
    const auto rate = rate_for(cfg, generation);
    const double output_rate = cfg.base_rate;
    for (std::size_t attempt = 1;; ++attempt) {
        Genotype child = point_mutate(g, rate, output_rate, MutationScope::All, rng);
        const std::size_t n = active_count(child);
        const bool ok = n >= grid.active_min && n <= grid.active_max;
        if (ok || attempt >= cfg.offspring_retry_cap) {
            return Offspring{std::move(child), ok};
        }
    }
}

Genotype neutral_mutation(const Genotype& g, const EvolutionConfig& cfg, std::size_t generation,
                          RandomStream& rng) {
    return point_mutate(g, rate_for(cfg, generation), 0.0, MutationScope::InactiveOnly, rng);
}

namespace {

std::vector<double> checked_evaluate(Evaluator& evaluator, std::span<const Genotype> batch,
                                     std::size_t generation) {
    std::vector<double> fitness;
    try {
        fitness = evaluator.evaluate(batch, generation);
    } catch (const std::exception& e) {
        const Genotype& culprit = batch.front();
        throw EvaluationAborted(std::string("evaluator failed: ") + e.what(),
                                genotype_to_json(culprit).dump());
    }
    if (fitness.size() != batch.size()) {
        throw EvaluationAborted("evaluator returned " + std::to_string(fitness.size()) +
                                    " results for " + std::to_string(batch.size()) + " candidates",
                                genotype_to_json(batch.front()).dump());
    }
    for (std::size_t i = 0; i < fitness.size(); ++i) {
        if (!(fitness[i] >= 0.0 && fitness[i] <= 1.0)) {
            throw EvaluationAborted("evaluator returned fitness outside [0, 1]",
                                    genotype_to_json(batch[i]).dump());
        }
    }
    return fitness;
}

} // namespace

EvolutionState initialize(const EvolutionConfig& cfg, const GridConfig& grid,
                          const FunctionCatalog& catalog, Evaluator& evaluator) {
    cfg.validate();
    grid.validate();
    RandomStream rng(cfg.seed);
    Genotype parent = random_genotype(grid, catalog, rng);
    const double fitness = checked_evaluate(evaluator, std::span(&parent, 1), 0).front();
    return EvolutionState{0, std::move(parent), fitness, std::move(rng), {}};
}

HistoryRecord step(EvolutionState& state, const EvolutionConfig& cfg, Evaluator& evaluator) {
    const std::size_t gen = state.generation;
    std::vector<Genotype> children;
    std::vector<char> within_bounds;
    children.reserve(cfg.lambda);
    for (std::size_t i = 0; i < cfg.lambda; ++i) {
        Offspring child = forced_mutation(state.parent, cfg, gen, state.rng);
        within_bounds.push_back(child.within_bounds ? 1 : 0);
        children.push_back(std::move(child.genotype));
    }
    std::vector<double> fitness = checked_evaluate(evaluator, children, gen);
    for (std::size_t i = 0; i < fitness.size(); ++i) {
        if (!within_bounds[i]) {
            fitness[i] = 0.0;
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < fitness.size(); ++i) {
        if (fitness[i] > fitness[best]) {
            best = i;
        }
    }

    HistoryRecord record;
    record.generation = gen;
    record.best_offspring_fitness = fitness[best];
    if (fitness[best] < state.parent_fitness) {
        // Every offspring is strictly worse: drift the parent's inactive
        // genes. Its phenotype is unchanged, so fitness carries over.
        state.parent = neutral_mutation(state.parent, cfg, gen, state.rng);
        record.neutral_step = true;
    } else {
        state.parent = std::move(children[best]);
        state.parent_fitness = fitness[best];
    }
    record.parent_fitness = state.parent_fitness;
    record.single_chain = is_single_chain(state.parent);
    state.history.push_back(record);
    state.generation = gen + 1;
    return record;
}

EvolutionResult run(EvolutionState& state, const EvolutionConfig& cfg, Evaluator& evaluator,
                    const EvolutionObserver& observer) {
    cfg.validate();
    bool completed = true;
    while (state.generation < cfg.max_generation) {
        if (observer.should_stop && observer.should_stop(state)) {
            completed = false;
            break;
        }
        const HistoryRecord record = step(state, cfg, evaluator);
        if (observer.on_generation) {
            observer.on_generation(state, record);
        }
    }
    return EvolutionResult{state.parent, state.parent_fitness, state.history, completed};
}

EvolutionResult evolve(const EvolutionConfig& cfg, const GridConfig& grid,
                       const FunctionCatalog& catalog, Evaluator& evaluator,
                       const EvolutionObserver& observer) {
    EvolutionState state = initialize(cfg, grid, catalog, evaluator);
    return run(state, cfg, evaluator, observer);
}

} // namespace cgpnas
