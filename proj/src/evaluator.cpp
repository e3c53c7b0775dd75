#include "cgpnas/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "cgpnas/model.hpp"

namespace cgpnas {

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

namespace {

Batch make_batch(const std::vector<Example>& examples, std::span<const std::size_t> order,
                 std::size_t length) {
    Batch b;
    b.batch = order.size();
    b.length = length;
    b.tokens.reserve(order.size() * length);
    for (std::size_t idx : order) {
        const Example& ex = examples[idx];
        b.tokens.insert(b.tokens.end(), ex.tokens.begin(), ex.tokens.end());
        b.labels.push_back(ex.label);
    }
    return b;
}

double accuracy(const ArchitectureGraph& graph, const ParameterStore& params,
                const std::vector<Example>& examples, const DataConfig& cfg) {
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t n = std::min(cfg.batch_size, order.size() - start);
        const Batch batch = make_batch(examples, std::span(order).subspan(start, n), cfg.max_len);
        const Tensor logits = forward(graph, params, batch);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = logits.row(i);
            const auto pred = std::max_element(row.begin(), row.end()) - row.begin();
            if (pred == batch.labels[i]) {
                ++correct;
            }
        }
    }
    return examples.empty() ? 0.0
                            : static_cast<double>(correct) / static_cast<double>(examples.size());
}

} // namespace

EvaluationOutcome evaluate(const ArchitectureGraph& graph, const DataConfig& cfg,
                           const Dataset& data) {
    RandomStream rng(mix_seed(cfg.seed, 0x7a1e));
    ParameterStore params = init_parameters(graph, {cfg.vocab_size, cfg.num_classes}, rng);
    std::vector<std::size_t> order(data.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    EvaluationOutcome outcome;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.uniform_below(i)]);
        }
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            const Batch batch =
                make_batch(data.train, std::span(order).subspan(start, n), cfg.max_len);
            LossAndGrad lg = loss_and_grad(graph, params, batch);
            outcome.final_loss = lg.loss;
            if (!std::isfinite(lg.loss)) {
                outcome.diverged = true;
                outcome.fitness = 0.0;
                return outcome;
            }
            adam_step(params, lg.gradients, cfg.lr, ++step);
        }
    }
    outcome.fitness = accuracy(graph, params, data.val, cfg);
    return outcome;
}

BuiltinEvaluator::BuiltinEvaluator(DataConfig data, EvaluatorOptions options)
    : data_(std::move(data)), options_(std::move(options)), dataset_(synth_dataset(data_)) {}

double BuiltinEvaluator::cached_evaluate(const Genotype& g, std::size_t generation) {
    const auto start = std::chrono::steady_clock::now();
    FitnessRecord record;
    record.generation = generation;
    record.hash = phenotype_hash(g);

    const ValidityReport report = validate(g, g.catalog(), g.config(), data_.input_shape());
    if (!report.valid()) {
        record.invalid = true;
    } else {
        bool hit = false;
        if (options_.cache) {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(record.hash); it != cache_.end()) {
                record.fitness = it->second;
                ++cache_hits_;
                hit = true;
            }
        }
        record.cached = hit;
        if (!hit) {
            const ArchitectureGraph graph = decode(g, g.catalog(), data_.input_shape());
            const EvaluationOutcome outcome = cgpnas::evaluate(graph, data_, dataset_);
            record.fitness = outcome.fitness;
            record.diverged = outcome.diverged;
            std::lock_guard lock(mutex_);
            ++training_runs_;
            if (options_.cache) {
                cache_[record.hash] = record.fitness;
            }
        }
    }
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options_.log) {
        std::lock_guard lock(mutex_);
        options_.log(record);
    }
    return record.fitness;
}

std::vector<double> BuiltinEvaluator::evaluate(std::span<const Genotype> batch,
                                               std::size_t generation) {
    std::vector<double> fitness(batch.size());
    const std::size_t threads = std::min(std::max<std::size_t>(1, options_.threads), batch.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            fitness[i] = cached_evaluate(batch[i], generation);
        }
        return fitness;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < batch.size(); i += threads) {
                    fitness[i] = cached_evaluate(batch[i], generation);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return fitness;
}

std::size_t BuiltinEvaluator::training_runs() const {
    std::lock_guard lock(mutex_);
    return training_runs_;
}

std::size_t BuiltinEvaluator::cache_hits() const {
    std::lock_guard lock(mutex_);
    return cache_hits_;
}

} // namespace cgpnas
