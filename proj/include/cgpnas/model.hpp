#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cgpnas/autodiff.hpp"
#include "cgpnas/decoder.hpp"
#include "cgpnas/random.hpp"
#include "cgpnas/tensor.hpp"

namespace cgpnas {

using Gradients = std::map<std::string, Tensor>;

/// Named trainable tensors plus Adam moment buffers. Names are
/// "embedding.table", "node<id>.<role>" and "head.weight"/"head.bias".
struct ParameterStore {
    std::map<std::string, Tensor> values;
    std::map<std::string, Tensor> first_moment;
    std::map<std::string, Tensor> second_moment;

    std::size_t parameter_count() const;
};

struct ModelDims {
    std::size_t vocab_size = 0;
    std::size_t num_classes = 2;
};

/// Xavier-uniform weights, zero biases, unit LNorm gains, zero moments.
/// Shapes depend only on the graph and `dims`.
ParameterStore init_parameters(const ArchitectureGraph& graph, const ModelDims& dims,
                               RandomStream& rng);

/// Token ids (batch * length, row-major) with one label per sentence.
struct Batch {
    std::vector<int> tokens;
    std::vector<int> labels;
    std::size_t batch = 0;
    std::size_t length = 0;
};

/// Builds the forward computation on `tape`. Parameters become tape
/// leaves (recorded in `bound` when non-null). Returns the logits Var.
Var build_forward(Tape& tape, const ArchitectureGraph& graph, const ParameterStore& params,
                  const Batch& batch, bool track_gradients,
                  std::map<std::string, Var>* bound = nullptr);

/// Class logits (batch, classes).
Tensor forward(const ArchitectureGraph& graph, const ParameterStore& params, const Batch& batch);

struct LossAndGrad {
    double loss = 0.0;
    Gradients gradients;
};

LossAndGrad loss_and_grad(const ArchitectureGraph& graph, const ParameterStore& params,
                          const Batch& batch);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update; `step` counts from 1.
void adam_step(ParameterStore& params, const Gradients& grads, double lr, std::size_t step,
               const AdamConfig& adam = {});

} // namespace cgpnas
