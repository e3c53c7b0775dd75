#pragma once

// Fixtures and oracles shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <array>
#include <string>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "cgpnas/autodiff.hpp"
#include "cgpnas/evolution.hpp"
#include "cgpnas/genome.hpp"
#include "cgpnas/random.hpp"

namespace cgpnas::testing {

/// Text-classification network with a two-branch stem, used as a
/// decoder fixture on a 5x20 grid. Decodes (in node order) to
/// Sum, Linear(128), Conv(32,1), LNorm, Sum, Sum, Atte(16), LNorm, Atte(4),
/// Conv(32,3), Conv(16,5).
inline Genotype reference_genotype() {
    GridConfig cfg;  // 5x20, levels-back 3
    std::vector<Gene> genes(cfg.node_count());
    for (NodeRef n = 1; n <= cfg.node_count(); ++n) {
        const auto sources = valid_sources(cfg, cfg.column_of(n));
        genes[n - 1] = Gene{FunctionId::ReLU, sources.back(), sources.back(), {}};
    }
    auto set = [&](std::size_t row, std::size_t col, Gene g) { genes[cfg.node_at(row, col) - 1] = g; };
    set(1, 1, {FunctionId::Sum, 0, 0, {}});                       // 1
    set(2, 1, {FunctionId::Linear, 0, 0, {128, 0}});              // 2
    set(1, 2, {FunctionId::Conv, 1, 1, {32, 1}});                 // 6
    set(2, 2, {FunctionId::LNorm, 2, 2, {}});                     // 7
    set(1, 3, {FunctionId::Sum, 6, 7, {}});                       // 11
    set(1, 4, {FunctionId::Sum, 11, 7, {}});                      // 16
    set(1, 5, {FunctionId::Atte, 16, 16, {16, 0}});               // 21
    set(1, 6, {FunctionId::LNorm, 21, 21, {}});                   // 26
    set(1, 7, {FunctionId::Atte, 26, 26, {4, 0}});                // 31
    set(1, 8, {FunctionId::Conv, 31, 31, {32, 3}});               // 36
    set(1, 9, {FunctionId::Conv, 36, 36, {16, 5}});               // 41
    return Genotype(cfg, FunctionCatalog(), std::move(genes), cfg.node_at(1, 9));
}

/// Expected (label, shape) chain for reference_genotype on an 8x400x300 input.
struct ChainEntry {
    const char* label;
    TensorShape shape;
};
inline std::vector<ChainEntry> reference_chain() {
    return {{"Input", {8, 400, 300}},    {"Sum", {8, 400, 300}},
            {"Linear(128)", {8, 400, 128}}, {"Conv(32,1)", {8, 400, 32}},
            {"LNorm", {8, 400, 128}},    {"Sum", {8, 400, 128}},
            {"Sum", {8, 400, 128}},      {"Atte(16)", {8, 400, 128}},
            {"LNorm", {8, 400, 128}},    {"Atte(4)", {8, 400, 128}},
            {"Conv(32,3)", {8, 400, 32}}, {"Conv(16,5)", {8, 400, 16}}};
}

/// "Conv(32,1)", "Atte(16)", "Linear(128)", "Sum", ... as in the chain above.
inline std::string chain_label(FunctionId f, ParamValue p) {
    switch (f) {
    case FunctionId::Conv:
        return "Conv(" + std::to_string(p.first) + "," + std::to_string(p.second) + ")";
    case FunctionId::Atte:
    case FunctionId::Linear:
        return std::string(function_label(f)) + "(" + std::to_string(p.first) + ")";
    default:
        return std::string(function_label(f));
    }
}

/// Same genotype with the output wired straight to the input.
inline Genotype identity_of(const Genotype& g) {
    Genotype out = g;
    out.set_output(kInputNode);
    return out;
}

/// Reachability by explicit graph search from the output: the oracle for
/// active_nodes. Sum has two live edges, every other function one.
inline std::vector<NodeRef> reachable_oracle(const Genotype& g) {
    std::set<NodeRef> seen;
    std::vector<NodeRef> stack{g.output()};
    while (!stack.empty()) {
        const NodeRef n = stack.back();
        stack.pop_back();
        if (n == kInputNode || !seen.insert(n).second) {
            continue;
        }
        const Gene& gene = g.gene(n);
        stack.push_back(gene.in1);
        if (gene.function == FunctionId::Sum) {
            stack.push_back(gene.in2);
        }
    }
    return {seen.begin(), seen.end()};
}

/// Deterministic evaluator scoring each genotype by its phenotype hash,
/// with call and batch bookkeeping.
class HashEvaluator : public Evaluator {
public:
    std::vector<double> evaluate(std::span<const Genotype> batch, std::size_t) override {
        ++calls;
        std::vector<double> out;
        for (const Genotype& g : batch) {
            seen.push_back(g);
            out.push_back(score(g));
        }
        last_batch.assign(batch.begin(), batch.end());
        return out;
    }
    static double score(const Genotype& g) {
        return static_cast<double>(phenotype_hash(g) % 20) / 20.0;
    }
    std::size_t calls = 0;
    std::vector<Genotype> seen;
    std::vector<Genotype> last_batch;
};

/// Returns pre-scripted fitness vectors, one per call.
class ScriptedEvaluator : public Evaluator {
public:
    explicit ScriptedEvaluator(std::vector<std::vector<double>> script) : script_(std::move(script)) {}
    std::vector<double> evaluate(std::span<const Genotype> batch, std::size_t) override {
        last_batch.assign(batch.begin(), batch.end());
        std::vector<double> out = script_.at(calls++);
        out.resize(batch.size(), 0.0);
        return out;
    }
    std::size_t calls = 0;
    std::vector<Genotype> last_batch;

private:
    std::vector<std::vector<double>> script_;
};

inline Tensor random_tensor(std::vector<std::size_t> shape, RandomStream& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

/// |a - n| / max(|a|, |n|, floor). Below the floor the comparison is
/// effectively absolute; a central difference at eps 1e-5 carries roughly
/// 1e-11 * |f| of roundoff, which swamps relative error on tiny gradients.
inline constexpr double kRelFloor = 1e-3;
inline double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
    return std::abs(analytic - numeric) / denom;
}

using OpBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Max relative error between reverse-mode gradients and central
/// differences (step eps) of a random linear probe of the op's output,
/// over every element of every input.
inline double gradient_check(const OpBuilder& op, const std::vector<Tensor>& inputs,
                             RandomStream& rng, double eps = 1e-5) {
    Tensor probe;
    auto scalar = [&](const std::vector<Tensor>& xs, Tape& tape, std::vector<Var>& vars) {
        vars.clear();
        for (const Tensor& x : xs) {
            vars.push_back(tape.parameter(x));
        }
        const Var out = op(tape, vars);
        if (probe.empty()) {
            probe = random_tensor(tape.value(out).shape(), rng);
        }
        return ops::weighted_sum(tape, out, probe);
    };
    Tape tape;
    std::vector<Var> vars;
    const Var loss = scalar(inputs, tape, vars);
    tape.backward(loss);
    std::vector<Tensor> analytic;
    for (const Var v : vars) {
        analytic.push_back(tape.grad(v));
    }
    double worst = 0.0;
    std::vector<Tensor> xs = inputs;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        for (std::size_t i = 0; i < xs[k].size(); ++i) {
            const double saved = xs[k][i];
            xs[k][i] = saved + eps;
            Tape tp;
            std::vector<Var> vs;
            const double up = tp.value(scalar(xs, tp, vs))[0];
            xs[k][i] = saved - eps;
            Tape tm;
            const double down = tm.value(scalar(xs, tm, vs))[0];
            xs[k][i] = saved;
            worst = std::max(worst, relative_error(analytic[k][i], (up - down) / (2.0 * eps)));
        }
    }
    return worst;
}

} // namespace cgpnas::testing

namespace cgpnas::testing {

struct GradCase {
    OpBuilder op;
    std::vector<Tensor> inputs;
};

inline const std::vector<std::string>& gradient_operators() {
    static const std::vector<std::string> names{"conv", "atte",      "linear",   "sum",
                                                "relu", "lnorm",     "glu",      "pool",
                                                "classifier", "embedding"};
    return names;
}

/// One random configuration of operator `name` (sizes kept small so every
/// input element can be finite-differenced).
inline GradCase gradient_case(const std::string& name, RandomStream& rng) {
    auto between = [&rng](std::size_t lo, std::size_t hi) { return lo + rng.uniform_below(hi - lo + 1); };
    const std::size_t b = between(1, 2);
    const std::size_t l = between(1, 4);
    if (name == "conv") {
        const std::size_t in = between(1, 4), out = between(1, 4);
        const std::size_t k = std::array<std::size_t, 3>{1, 3, 5}[rng.uniform_below(3)];
        return {[](Tape& t, const std::vector<Var>& v) { return ops::conv1d(t, v[0], v[1], v[2]); },
                {random_tensor({b, l, in}, rng), random_tensor({k, in, out}, rng),
                 random_tensor({out}, rng)}};
    }
    if (name == "atte") {
        const std::size_t d = between(1, 6);
        const std::size_t heads = std::array<std::size_t, 5>{1, 2, 4, 8, 16}[rng.uniform_below(5)];
        const std::size_t inner = ops::head_layout(d, heads).inner();
        return {[heads](Tape& t, const std::vector<Var>& v) {
                    return ops::self_attention(
                        t, v[0], ops::AttentionParams{v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]},
                        heads);
                },
                {random_tensor({b, l, d}, rng), random_tensor({d, inner}, rng),
                 random_tensor({inner}, rng), random_tensor({d, inner}, rng),
                 random_tensor({inner}, rng), random_tensor({d, inner}, rng),
                 random_tensor({inner}, rng), random_tensor({inner, d}, rng),
                 random_tensor({d}, rng)}};
    }
    if (name == "linear") {
        const std::size_t in = between(1, 5), out = between(1, 5);
        return {[](Tape& t, const std::vector<Var>& v) { return ops::linear(t, v[0], v[1], v[2]); },
                {random_tensor({b, l, in}, rng), random_tensor({in, out}, rng),
                 random_tensor({out}, rng)}};
    }
    if (name == "sum") {
        if (rng.bernoulli(0.25)) {  // same input on both sides
            return {[](Tape& t, const std::vector<Var>& v) { return ops::sum_padded(t, v[0], v[0]); },
                    {random_tensor({b, l, between(1, 5)}, rng)}};
        }
        return {[](Tape& t, const std::vector<Var>& v) { return ops::sum_padded(t, v[0], v[1]); },
                {random_tensor({b, l, between(1, 5)}, rng), random_tensor({b, l, between(1, 5)}, rng)}};
    }
    if (name == "relu") {
        Tensor x = random_tensor({b, l, between(1, 5)}, rng);
        for (double& v : x.values()) {
            if (std::abs(v) < 1e-2) v = 0.5;  // keep clear of the kink
        }
        return {[](Tape& t, const std::vector<Var>& v) { return ops::relu(t, v[0]); }, {x}};
    }
    if (name == "lnorm") {
        const std::size_t d = between(2, 6);
        return {[](Tape& t, const std::vector<Var>& v) { return ops::layer_norm(t, v[0], v[1], v[2]); },
                {random_tensor({b, l, d}, rng), random_tensor({d}, rng, 0.5, 1.5),
                 random_tensor({d}, rng)}};
    }
    if (name == "glu") {
        return {[](Tape& t, const std::vector<Var>& v) { return ops::glu(t, v[0]); },
                {random_tensor({b, l, between(2, 7)}, rng)}};
    }
    if (name == "pool") {
        return {[](Tape& t, const std::vector<Var>& v) { return ops::mean_pool(t, v[0]); },
                {random_tensor({b, l, between(1, 5)}, rng)}};
    }
    if (name == "classifier") {
        const std::size_t d = between(1, 5), classes = between(2, 5);
        std::vector<int> labels;
        for (std::size_t i = 0; i < b; ++i) labels.push_back(static_cast<int>(rng.uniform_below(classes)));
        return {[labels](Tape& t, const std::vector<Var>& v) {
                    return ops::softmax_cross_entropy(t, ops::linear(t, v[0], v[1], v[2]), labels);
                },
                {random_tensor({b, d}, rng), random_tensor({d, classes}, rng),
                 random_tensor({classes}, rng)}};
    }
    // embedding
    const std::size_t vocab = between(2, 6), d = between(1, 4);
    std::vector<int> tokens;
    for (std::size_t i = 0; i < b * l; ++i) tokens.push_back(static_cast<int>(rng.uniform_below(vocab)));
    return {[tokens, b, l](Tape& t, const std::vector<Var>& v) {
                return ops::embedding(t, v[0], tokens, b, l);
            },
            {random_tensor({vocab, d}, rng)}};
}

/// Worst relative error over `configs` seeded configurations of `name`.
inline double worst_gradient_error(const std::string& name, std::size_t configs, std::uint64_t seed) {
    double worst = 0.0;
    for (std::size_t c = 0; c < configs; ++c) {
        RandomStream rng(mix_seed(seed, c));
        const GradCase gc = gradient_case(name, rng);
        worst = std::max(worst, gradient_check(gc.op, gc.inputs, rng));
    }
    return worst;
}

} // namespace cgpnas::testing

#include "cgpnas/dataset.hpp"

namespace cgpnas::testing {

/// Regression fixture: validation accuracy of the identity graph (embedding,
/// mean pool, classifier) on the desk n-gram task with seed 1.
inline constexpr double kIdentityBaselineNgram = 0.52;
inline constexpr std::uint64_t kDeskSeed = 1;

inline DataConfig desk_ngram(std::uint64_t seed = kDeskSeed) {
    DataConfig d = desk_data_config();
    d.source = DataSource::SyntheticNgram;
    d.seed = seed;
    return d;
}

inline GridConfig desk_grid_config() {
    GridConfig g;
    g.rows = 3;
    g.cols = 8;
    g.levels_back = 3;
    g.active_min = 3;
    g.active_max = 15;
    return g;
}

/// Desk-grid genotype computing Conv(16,3) -> ReLU -> Linear(32); the
/// width-3 window can see an ordered class pair.
inline Genotype conv_relu_genotype() {
    const GridConfig cfg = desk_grid_config();
    std::vector<Gene> genes(cfg.node_count(), Gene{FunctionId::LNorm, 0, 0, {}});
    genes[0] = {FunctionId::Conv, 0, 0, {16, 3}};      // node 1
    genes[3] = {FunctionId::ReLU, 1, 1, {}};           // node 4
    genes[6] = {FunctionId::Linear, 4, 4, {32, 0}};    // node 7
    return Genotype(cfg, FunctionCatalog(), genes, 7);
}

} // namespace cgpnas::testing
