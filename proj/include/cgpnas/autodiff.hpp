#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>

#include "cgpnas/tensor.hpp"

namespace cgpnas {

/// Handle to a value recorded on a Tape.
struct Var {
    std::size_t id = 0;
};

/// Reverse-mode tape. Values are recorded in evaluation order; backward()
/// replays the recorded closures in reverse, accumulating into grad().
class Tape {
public:
    using Backward = std::function<void(Tape&)>;

    /// Leaf without gradient (data, fixed inputs).
    Var constant(Tensor value);
    /// Leaf whose gradient is accumulated.
    Var parameter(Tensor value);
    /// Result of an operation; `backward` reads grad(result) and adds into
    /// the inputs' grads.
    Var record(Tensor value, bool requires_grad, Backward backward);

    const Tensor& value(Var v) const { return entries_[v.id].value; }
    bool requires_grad(Var v) const { return entries_[v.id].requires_grad; }
    /// Gradient buffer, allocated as zeros on first access.
    Tensor& grad(Var v);

    /// Seeds d(root)/d(root) = 1 for a single-element root and propagates.
    void backward(Var root);

    std::size_t size() const { return entries_.size(); }

private:
    struct Entry {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        Backward backward;
    };
    std::deque<Entry> entries_;
};

namespace ops {

/// Parameters of one multi-head self-attention block.
struct AttentionParams {
    Var wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Attention head layout for model dim `dim` and requested `heads`:
/// heads clamp to dim and each head gets floor(dim / heads) features.
struct HeadLayout {
    std::size_t heads;
    std::size_t head_dim;
    std::size_t inner() const { return heads * head_dim; }
};
HeadLayout head_layout(std::size_t dim, std::size_t heads);

/// table (vocab, dim), tokens (batch * length) -> (batch, length, dim).
Var embedding(Tape& tape, Var table, std::span<const int> tokens, std::size_t batch,
              std::size_t length);
/// x (..., in), weight (in, out), bias (out) -> (..., out).
Var linear(Tape& tape, Var x, Var weight, Var bias);
/// Same-padded 1-D convolution over length. kernel (k, in, out), k odd.
Var conv1d(Tape& tape, Var x, Var kernel, Var bias);
/// Scaled dot-product attention on packed heads: q, k, v (b, l, heads * head_dim).
Var scaled_dot_product(Tape& tape, Var q, Var k, Var v, std::size_t heads);
/// Full multi-head self-attention: projections, scaled dot-product, output map.
/// `heads` is clamped through head_layout of the input width.
Var self_attention(Tape& tape, Var x, const AttentionParams& p, std::size_t heads);
/// Element-wise sum; the narrower input is zero-padded at the end of the
/// feature axis. `a` and `b` may be the same Var.
Var sum_padded(Tape& tape, Var a, Var b);
Var relu(Tape& tape, Var x);
/// Per-row normalization over the feature axis with gain and bias (dim).
Var layer_norm(Tape& tape, Var x, Var gain, Var bias);
/// First half gated by the sigmoid of the second half; odd dims are
/// zero-padded by one before the split.
Var glu(Tape& tape, Var x);
/// (b, l, d) -> (b, d) mean over length.
Var mean_pool(Tape& tape, Var x);
/// Mean softmax cross-entropy of logits (b, classes) against labels.
Var softmax_cross_entropy(Tape& tape, Var logits, std::span<const int> labels);
/// sum_i weights[i] * x[i]; a scalar probe used by gradient checks.
Var weighted_sum(Tape& tape, Var x, const Tensor& weights);

inline constexpr double kLayerNormEps = 1e-12;

} // namespace ops

} // namespace cgpnas
