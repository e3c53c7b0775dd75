#include <doctest.h>

#include <cmath>
#include <set>

#include "cgpnas/dataset.hpp"
#include "cgpnas/error.hpp"
#include "cgpnas/evaluator.hpp"
#include "cgpnas/kernels.hpp"
#include "support.hpp"

using namespace cgpnas;
using namespace cgpnas::testing;

namespace {

double bow_accuracy(const std::vector<Example>& xs, const DataConfig& cfg) {
    std::size_t hit = 0;
    for (const Example& e : xs) hit += bag_of_words_predict(e.tokens, cfg) == e.label;
    return static_cast<double>(hit) / static_cast<double>(xs.size());
}

DataConfig quick(DataSource source) {
    DataConfig d = desk_ngram();
    d.source = source;
    d.train_size = 160;
    d.val_size = 80;
    d.epochs = 2;
    return d;
}

} // namespace

TEST_CASE("synthetic datasets are deterministic, balanced and disjoint") {
    for (DataSource s : {DataSource::SyntheticMajority, DataSource::SyntheticNgram}) {
        DataConfig cfg = desk_ngram();
        cfg.source = s;
        const Dataset a = synth_dataset(cfg);
        const Dataset b = synth_dataset(cfg);
        CHECK(a.train.size() == cfg.train_size);
        CHECK(a.val.size() == cfg.val_size);
        std::set<std::vector<int>> train;
        std::vector<std::size_t> counts(cfg.num_classes);
        for (std::size_t i = 0; i < a.train.size(); ++i) {
            CHECK(a.train[i].tokens == b.train[i].tokens);
            CHECK(a.train[i].tokens.size() == cfg.max_len);
            train.insert(a.train[i].tokens);
            ++counts[static_cast<std::size_t>(a.train[i].label)];
            for (int t : a.train[i].tokens) CHECK((t >= 0 && t < static_cast<int>(cfg.vocab_size)));
        }
        CHECK(counts[0] == counts[1]);
        for (const Example& e : a.val) CHECK_FALSE(train.contains(e.tokens));
        cfg.seed = 2;
        CHECK(synth_dataset(cfg).train[0].tokens != a.train[0].tokens);
    }
}

TEST_CASE("majority labels are recoverable by counting") {
    DataConfig cfg = desk_ngram();
    cfg.source = DataSource::SyntheticMajority;
    const Dataset d = synth_dataset(cfg);
    CHECK(bow_accuracy(d.train, cfg) == 1.0);
    CHECK(bow_accuracy(d.val, cfg) == 1.0);
}

TEST_CASE("n-gram labels are invisible to bag-of-words") {
    const DataConfig cfg = desk_ngram();
    const Dataset d = synth_dataset(cfg);
    CHECK(bow_accuracy(d.val, cfg) <= 0.75);
    CHECK(bow_accuracy(d.train, cfg) <= 0.75);
}

TEST_CASE("data config validation") {
    DataConfig cfg;
    cfg.vocab_size = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lr = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.source = DataSource::External;
    CHECK_THROWS_AS(synth_dataset(cfg), ConfigError);
}

TEST_CASE("identity baseline regression fixture") {
    const DataConfig cfg = desk_ngram();
    const Dataset data = synth_dataset(cfg);
    const Genotype id = identity_of(conv_relu_genotype());
    const EvaluationOutcome r = evaluate(decode(id, id.catalog(), cfg.input_shape()), cfg, data);
    CHECK(r.fitness == kIdentityBaselineNgram);
    CHECK_FALSE(r.diverged);
}

TEST_CASE("a convolution over ordered pairs solves the n-gram task") {
    const DataConfig cfg = desk_ngram();
    const Dataset data = synth_dataset(cfg);
    const Genotype g = conv_relu_genotype();
    const EvaluationOutcome r = evaluate(decode(g, g.catalog(), cfg.input_shape()), cfg, data);
    CHECK(r.fitness >= 0.9);
}

TEST_CASE("untrained models score near chance") {
    DataConfig cfg = desk_ngram();
    cfg.epochs = 0;
    const Dataset data = synth_dataset(cfg);
    const Genotype g = conv_relu_genotype();
    const EvaluationOutcome r = evaluate(decode(g, g.catalog(), cfg.input_shape()), cfg, data);
    const double sigma = std::sqrt(0.25 / static_cast<double>(cfg.val_size));
    CHECK(std::abs(r.fitness - 0.5) <= 5 * sigma);
}

TEST_CASE("a diverging run scores zero") {
    DataConfig cfg = quick(DataSource::SyntheticNgram);
    cfg.lr = 1e300;
    const Dataset data = synth_dataset(cfg);
    const Genotype g = conv_relu_genotype();
    const EvaluationOutcome r = evaluate(decode(g, g.catalog(), cfg.input_shape()), cfg, data);
    CHECK(r.diverged);
    CHECK(r.fitness == 0.0);
}

TEST_CASE("evaluation does not depend on the kernel variant") {
    if (!kernels::isa_supported(kernels::Isa::Avx2)) return;
    const DataConfig cfg = quick(DataSource::SyntheticNgram);
    const Dataset data = synth_dataset(cfg);
    const Genotype g = reference_genotype();
    const auto graph = decode(g, g.catalog(), cfg.input_shape());
    const auto original = kernels::active_isa();
    kernels::set_isa(kernels::Isa::Scalar);
    const EvaluationOutcome a = evaluate(graph, cfg, data);
    kernels::set_isa(kernels::Isa::Avx2);
    const EvaluationOutcome b = evaluate(graph, cfg, data);
    kernels::set_isa(original);
    CHECK(a.fitness == b.fitness);
    CHECK(a.final_loss == b.final_loss);  // bit-identical training
}

TEST_CASE("fitness cache keys on the phenotype") {
    std::vector<FitnessRecord> log;
    EvaluatorOptions options;
    options.log = [&log](const FitnessRecord& r) { log.push_back(r); };
    BuiltinEvaluator eval(quick(DataSource::SyntheticNgram), options);
    const Genotype g = conv_relu_genotype();
    Genotype drifted = g;
    drifted.gene(24) = {FunctionId::GLU, 19, 20, {}};  // inactive
    const double first = eval.cached_evaluate(g);
    CHECK(eval.cached_evaluate(drifted) == first);
    CHECK(eval.training_runs() == 1);
    CHECK(eval.cache_hits() == 1);
    REQUIRE(log.size() == 2);
    CHECK(log[1].cached);
    CHECK(log[0].hash == log[1].hash);

    BuiltinEvaluator uncached(quick(DataSource::SyntheticNgram), EvaluatorOptions{false, 1, {}});
    CHECK(uncached.cached_evaluate(g) == first);
    CHECK(uncached.cached_evaluate(g) == first);
    CHECK(uncached.training_runs() == 2);
}

TEST_CASE("invalid genotypes score zero without training") {
    BuiltinEvaluator eval(quick(DataSource::SyntheticNgram));
    const Genotype id = identity_of(conv_relu_genotype());  // 0 active nodes < 3
    CHECK(eval.cached_evaluate(id) == 0.0);
    CHECK(eval.training_runs() == 0);
}

TEST_CASE("threaded batches match sequential ones") {
    std::vector<Genotype> batch;
    RandomStream rng(6);
    for (int i = 0; i < 4; ++i) batch.push_back(random_genotype(desk_grid_config(), FunctionCatalog(), rng));
    BuiltinEvaluator one(quick(DataSource::SyntheticMajority), EvaluatorOptions{true, 1, {}});
    BuiltinEvaluator many(quick(DataSource::SyntheticMajority), EvaluatorOptions{true, 4, {}});
    CHECK(one.evaluate(batch, 0) == many.evaluate(batch, 0));
}
