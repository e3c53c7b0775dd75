#include "cgpnas/model.hpp"

#include <cmath>
#include <stdexcept>

#include "cgpnas/error.hpp"

namespace cgpnas {

std::size_t ParameterStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : values) {
        n += t.size();
    }
    return n;
}

namespace {

std::string node_key(std::size_t id, const char* role) {
    return "node" + std::to_string(id) + "." + role;
}

Tensor xavier(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
              RandomStream& rng) {
    Tensor t(std::move(shape));
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : t.values()) {
        v = rng.uniform(-a, a);
    }
    return t;
}

} // namespace

ParameterStore init_parameters(const ArchitectureGraph& graph, const ModelDims& dims,
                               RandomStream& rng) {
    if (dims.vocab_size == 0 || dims.num_classes == 0) {
        throw ConfigError("model dims: vocab_size and num_classes must be positive");
    }
    ParameterStore store;
    auto& v = store.values;
    const std::size_t d_in = graph.input_shape.dim;
    v["embedding.table"] = xavier({dims.vocab_size, d_in}, dims.vocab_size, d_in, rng);

    for (const GraphNode& node : graph.nodes) {
        const std::size_t in = graph.shape_at(node.inputs[0]).dim;
        const std::size_t out = node.out_shape.dim;
        switch (node.function) {
        case FunctionId::Conv: {
            const auto width = static_cast<std::size_t>(node.param.second);
            v[node_key(node.id, "conv.kernel")] = xavier({width, in, out}, width * in, width * out, rng);
            v[node_key(node.id, "conv.bias")] = Tensor({out});
            break;
        }
        case FunctionId::Linear:
            v[node_key(node.id, "linear.weight")] = xavier({in, out}, in, out, rng);
            v[node_key(node.id, "linear.bias")] = Tensor({out});
            break;
        case FunctionId::Atte: {
            const auto layout = ops::head_layout(in, static_cast<std::size_t>(node.param.first));
            const std::size_t inner = layout.inner();
            v[node_key(node.id, "atte.wq")] = xavier({in, inner}, in, inner, rng);
            v[node_key(node.id, "atte.bq")] = Tensor({inner});
            v[node_key(node.id, "atte.wk")] = xavier({in, inner}, in, inner, rng);
            v[node_key(node.id, "atte.bk")] = Tensor({inner});
            v[node_key(node.id, "atte.wv")] = xavier({in, inner}, in, inner, rng);
            v[node_key(node.id, "atte.bv")] = Tensor({inner});
            v[node_key(node.id, "atte.wo")] = xavier({inner, in}, inner, in, rng);
            v[node_key(node.id, "atte.bo")] = Tensor({in});
            break;
        }
        case FunctionId::LNorm:
            v[node_key(node.id, "lnorm.gain")] = Tensor({in}, 1.0);
            v[node_key(node.id, "lnorm.bias")] = Tensor({in});
            break;
        case FunctionId::Sum:
        case FunctionId::ReLU:
        case FunctionId::GLU:
            break;
        }
    }
    const std::size_t pooled = graph.output_shape().dim;
    v["head.weight"] = xavier({pooled, dims.num_classes}, pooled, dims.num_classes, rng);
    v["head.bias"] = Tensor({dims.num_classes});

    for (const auto& [name, t] : v) {
        store.first_moment[name] = Tensor::zeros_like(t);
        store.second_moment[name] = Tensor::zeros_like(t);
    }
    return store;
}

Var build_forward(Tape& tape, const ArchitectureGraph& graph, const ParameterStore& params,
                  const Batch& batch, bool track_gradients, std::map<std::string, Var>* bound) {
    auto param = [&](const std::string& name) {
        const auto it = params.values.find(name);
        if (it == params.values.end()) {
            throw std::logic_error("missing parameter " + name);
        }
        const Var var = track_gradients ? tape.parameter(it->second) : tape.constant(it->second);
        if (bound) {
            (*bound)[name] = var;
        }
        return var;
    };

    std::vector<Var> outputs;
    outputs.reserve(graph.nodes.size() + 1);
    outputs.push_back(
        ops::embedding(tape, param("embedding.table"), batch.tokens, batch.batch, batch.length));

    for (const GraphNode& node : graph.nodes) {
        const Var x = outputs[node.inputs[0]];
        Var y;
        switch (node.function) {
        case FunctionId::Conv:
            y = ops::conv1d(tape, x, param(node_key(node.id, "conv.kernel")),
                            param(node_key(node.id, "conv.bias")));
            break;
        case FunctionId::Linear:
            y = ops::linear(tape, x, param(node_key(node.id, "linear.weight")),
                            param(node_key(node.id, "linear.bias")));
            break;
        case FunctionId::Atte: {
            const ops::AttentionParams p{
                param(node_key(node.id, "atte.wq")), param(node_key(node.id, "atte.bq")),
                param(node_key(node.id, "atte.wk")), param(node_key(node.id, "atte.bk")),
                param(node_key(node.id, "atte.wv")), param(node_key(node.id, "atte.bv")),
                param(node_key(node.id, "atte.wo")), param(node_key(node.id, "atte.bo")),
            };
            const auto layout = ops::head_layout(graph.shape_at(node.inputs[0]).dim,
                                                 static_cast<std::size_t>(node.param.first));
            y = ops::self_attention(tape, x, p, layout.heads);
            break;
        }
        case FunctionId::Sum:
            y = ops::sum_padded(tape, x, outputs[node.inputs[1]]);
            break;
        case FunctionId::ReLU:
            y = ops::relu(tape, x);
            break;
        case FunctionId::LNorm:
            y = ops::layer_norm(tape, x, param(node_key(node.id, "lnorm.gain")),
                                param(node_key(node.id, "lnorm.bias")));
            break;
        case FunctionId::GLU:
            y = ops::glu(tape, x);
            break;
        }
        outputs.push_back(y);
    }
    const Var pooled = ops::mean_pool(tape, outputs[graph.output_node]);
    return ops::linear(tape, pooled, param("head.weight"), param("head.bias"));
}

Tensor forward(const ArchitectureGraph& graph, const ParameterStore& params, const Batch& batch) {
    Tape tape;
    const Var logits = build_forward(tape, graph, params, batch, false);
    return tape.value(logits);
}

LossAndGrad loss_and_grad(const ArchitectureGraph& graph, const ParameterStore& params,
                          const Batch& batch) {
    Tape tape;
    std::map<std::string, Var> bound;
    const Var logits = build_forward(tape, graph, params, batch, true, &bound);
    const Var loss = ops::softmax_cross_entropy(tape, logits, batch.labels);
    tape.backward(loss);
    LossAndGrad out;
    out.loss = tape.value(loss)[0];
    for (const auto& [name, var] : bound) {
        out.gradients[name] = tape.grad(var);
    }
    return out;
}

void adam_step(ParameterStore& params, const Gradients& grads, double lr, std::size_t step,
               const AdamConfig& adam) {
    if (step < 1) {
        throw std::invalid_argument("adam_step: step counter starts at 1");
    }
    const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(step));
    for (auto& [name, value] : params.values) {
        const auto it = grads.find(name);
        if (it == grads.end()) {
            continue;
        }
        const Tensor& g = it->second;
        Tensor& m = params.first_moment[name];
        Tensor& s = params.second_moment[name];
        if (m.shape() != value.shape()) m = Tensor::zeros_like(value);
        if (s.shape() != value.shape()) s = Tensor::zeros_like(value);
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
            s[i] = adam.beta2 * s[i] + (1.0 - adam.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double s_hat = s[i] / c2;
            value[i] -= lr * m_hat / (std::sqrt(s_hat) + adam.epsilon);
        }
    }
}

} // namespace cgpnas
