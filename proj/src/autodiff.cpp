#include "cgpnas/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cgpnas/error.hpp"
#include "cgpnas/kernels.hpp"

namespace cgpnas {

Var Tape::constant(Tensor value) {
    entries_.push_back(Entry{std::move(value), {}, false, {}});
    return Var{entries_.size() - 1};
}

Var Tape::parameter(Tensor value) {
    entries_.push_back(Entry{std::move(value), {}, true, {}});
    return Var{entries_.size() - 1};
}

Var Tape::record(Tensor value, bool requires_grad, Backward backward) {
    entries_.push_back(
        Entry{std::move(value), {}, requires_grad, requires_grad ? std::move(backward) : nullptr});
    return Var{entries_.size() - 1};
}

Tensor& Tape::grad(Var v) {
    Entry& e = entries_[v.id];
    if (e.grad.shape() != e.value.shape()) {
        e.grad = Tensor::zeros_like(e.value);
    }
    return e.grad;
}

void Tape::backward(Var root) {
    if (value(root).size() != 1) {
        throw std::invalid_argument("backward: root must hold a single value");
    }
    grad(root)[0] += 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Entry& e = entries_[i];
        // Entries never touched by a gradient have nothing to propagate.
        if (e.backward && !e.grad.empty()) {
            e.backward(*this);
        }
    }
}

namespace ops {

namespace {

void require(bool cond, const char* op, const std::string& detail) {
    if (!cond) {
        throw ShapeError(std::string(op) + ": " + detail);
    }
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

HeadLayout head_layout(std::size_t dim, std::size_t heads) {
    const std::size_t h = std::max<std::size_t>(1, std::min(heads, dim));
    return HeadLayout{h, dim / h};
}

Var embedding(Tape& tape, Var table, std::span<const int> tokens, std::size_t batch,
              std::size_t length) {
    const Tensor& t = tape.value(table);
    require(t.rank() == 2, "embedding", "table must be rank 2");
    require(tokens.size() == batch * length, "embedding", "token count mismatch");
    const std::size_t vocab = t.dim(0);
    const std::size_t dim = t.dim(1);
    std::vector<int> ids(tokens.begin(), tokens.end());
    Tensor out({batch, length, dim});
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const int tok = ids[r];
        if (tok < 0 || static_cast<std::size_t>(tok) >= vocab) {
            throw DataError("token id " + std::to_string(tok) + " outside vocabulary of " +
                            std::to_string(vocab));
        }
        std::copy_n(t.row(static_cast<std::size_t>(tok)).begin(), dim, out.row(r).begin());
    }
    const Var self{tape.size()};
    return tape.record(std::move(out), tape.requires_grad(table),
                       [self, table, ids = std::move(ids)](Tape& tp) {
                           const Tensor& g = tp.grad(self);
                           Tensor& gt = tp.grad(table);
                           for (std::size_t r = 0; r < ids.size(); ++r) {
                               kernels::add(gt.row(static_cast<std::size_t>(ids[r])), g.row(r));
                           }
                       });
}

Var linear(Tape& tape, Var x, Var weight, Var bias) {
    const Tensor& xv = tape.value(x);
    const Tensor& w = tape.value(weight);
    const Tensor& b = tape.value(bias);
    require(w.rank() == 2 && xv.last_dim() == w.dim(0), "linear",
            "input " + shape_string(xv.shape()) + " vs weight " + shape_string(w.shape()));
    require(b.size() == w.dim(1), "linear", "bias size mismatch");
    const std::size_t in = w.dim(0);
    auto shape = xv.shape();
    shape.back() = w.dim(1);
    Tensor out(shape);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        auto y = out.row(r);
        std::copy(b.values().begin(), b.values().end(), y.begin());
        const auto xr = xv.row(r);
        for (std::size_t p = 0; p < in; ++p) {
            kernels::axpy(y, xr[p], w.row(p));
        }
    }
    const bool needs =
        tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
    const Var self{tape.size()};
    return tape.record(std::move(out), needs, [self, x, weight, bias, in](Tape& tp) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv = tp.value(x);
        const Tensor& w = tp.value(weight);
        if (tp.requires_grad(x)) {
            Tensor& gx = tp.grad(x);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                auto gxr = gx.row(r);
                for (std::size_t p = 0; p < in; ++p) {
                    gxr[p] += kernels::dot(g.row(r), w.row(p));
                }
            }
        }
        if (tp.requires_grad(weight)) {
            Tensor& gw = tp.grad(weight);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                const auto xr = xv.row(r);
                for (std::size_t p = 0; p < in; ++p) {
                    kernels::axpy(gw.row(p), xr[p], g.row(r));
                }
            }
        }
        if (tp.requires_grad(bias)) {
            Tensor& gb = tp.grad(bias);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                kernels::add(gb.values(), g.row(r));
            }
        }
    });
}

Var conv1d(Tape& tape, Var x, Var kernel, Var bias) {
    const Tensor& xv = tape.value(x);
    const Tensor& kv = tape.value(kernel);
    const Tensor& b = tape.value(bias);
    require(xv.rank() == 3, "conv1d", "input must be rank 3");
    require(kv.rank() == 3 && kv.dim(1) == xv.dim(2), "conv1d",
            "input " + shape_string(xv.shape()) + " vs kernel " + shape_string(kv.shape()));
    require(kv.dim(0) % 2 == 1, "conv1d", "kernel width must be odd");
    require(b.size() == kv.dim(2), "conv1d", "bias size mismatch");
    const std::size_t batch = xv.dim(0), len = xv.dim(1), in = xv.dim(2);
    const std::size_t width = kv.dim(0), out_dim = kv.dim(2);
    const auto half = static_cast<std::ptrdiff_t>(width / 2);
    // Kernel rows are laid out (tap, in) so row (k * in + p) is a vector of out_dim.
    auto krow = [&kv, in](std::size_t k, std::size_t p) { return kv.row(k * in + p); };

    Tensor out({batch, len, out_dim});
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t t = 0; t < len; ++t) {
            auto y = out.row(bi * len + t);
            std::copy(b.values().begin(), b.values().end(), y.begin());
            for (std::size_t k = 0; k < width; ++k) {
                const auto s = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
                if (s < 0 || s >= static_cast<std::ptrdiff_t>(len)) {
                    continue;
                }
                const auto xr = xv.row(bi * len + static_cast<std::size_t>(s));
                for (std::size_t p = 0; p < in; ++p) {
                    kernels::axpy(y, xr[p], krow(k, p));
                }
            }
        }
    }
    const bool needs =
        tape.requires_grad(x) || tape.requires_grad(kernel) || tape.requires_grad(bias);
    const Var self{tape.size()};
    return tape.record(std::move(out), needs, [=](Tape& tp) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv = tp.value(x);
        const Tensor& kv = tp.value(kernel);
        const bool gx_on = tp.requires_grad(x), gk_on = tp.requires_grad(kernel);
        Tensor* gx = gx_on ? &tp.grad(x) : nullptr;
        Tensor* gk = gk_on ? &tp.grad(kernel) : nullptr;
        for (std::size_t bi = 0; bi < batch; ++bi) {
            for (std::size_t t = 0; t < len; ++t) {
                const auto gy = g.row(bi * len + t);
                for (std::size_t k = 0; k < width; ++k) {
                    const auto s =
                        static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
                    if (s < 0 || s >= static_cast<std::ptrdiff_t>(len)) {
                        continue;
                    }
                    const std::size_t src = bi * len + static_cast<std::size_t>(s);
                    if (gx) {
                        auto gxr = gx->row(src);
                        for (std::size_t p = 0; p < in; ++p) {
                            gxr[p] += kernels::dot(gy, kv.row(k * in + p));
                        }
                    }
                    if (gk) {
                        const auto xr = xv.row(src);
                        for (std::size_t p = 0; p < in; ++p) {
                            kernels::axpy(gk->row(k * in + p), xr[p], gy);
                        }
                    }
                }
            }
        }
        if (tp.requires_grad(bias)) {
            Tensor& gb = tp.grad(bias);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                kernels::add(gb.values(), g.row(r));
            }
        }
    });
}

Var scaled_dot_product(Tape& tape, Var q, Var k, Var v, std::size_t heads) {
    const Tensor& qv = tape.value(q);
    const Tensor& kv = tape.value(k);
    const Tensor& vv = tape.value(v);
    require(qv.rank() == 3 && qv.shape() == kv.shape() && qv.shape() == vv.shape(),
            "attention", "q, k, v shapes differ");
    require(heads >= 1 && qv.dim(2) % heads == 0, "attention", "inner dim not divisible by heads");
    const std::size_t batch = qv.dim(0), len = qv.dim(1), inner = qv.dim(2);
    const std::size_t hd = inner / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    // probs layout: (batch, heads, len, len)
    std::vector<double> probs(batch * heads * len * len);
    Tensor out({batch, len, inner});
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < len; ++i) {
                double* p = probs.data() + ((bi * heads + h) * len + i) * len;
                const auto qi = qv.row(bi * len + i).subspan(h * hd, hd);
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < len; ++j) {
                    p[j] = scale * kernels::dot(qi, kv.row(bi * len + j).subspan(h * hd, hd));
                    mx = std::max(mx, p[j]);
                }
                double z = 0.0;
                for (std::size_t j = 0; j < len; ++j) {
                    p[j] = std::exp(p[j] - mx);
                    z += p[j];
                }
                auto oi = out.row(bi * len + i).subspan(h * hd, hd);
                for (std::size_t j = 0; j < len; ++j) {
                    p[j] /= z;
                    kernels::axpy(oi, p[j], vv.row(bi * len + j).subspan(h * hd, hd));
                }
            }
        }
    }
    const bool needs = tape.requires_grad(q) || tape.requires_grad(k) || tape.requires_grad(v);
    const Var self{tape.size()};
    return tape.record(std::move(out), needs, [=, probs = std::move(probs)](Tape& tp) {
        const Tensor& g = tp.grad(self);
        const Tensor& qv = tp.value(q);
        const Tensor& kv = tp.value(k);
        const Tensor& vv = tp.value(v);
        Tensor* gq = tp.requires_grad(q) ? &tp.grad(q) : nullptr;
        Tensor* gk = tp.requires_grad(k) ? &tp.grad(k) : nullptr;
        Tensor* gv = tp.requires_grad(v) ? &tp.grad(v) : nullptr;
        std::vector<double> dp(len);
        for (std::size_t bi = 0; bi < batch; ++bi) {
            for (std::size_t h = 0; h < heads; ++h) {
                for (std::size_t i = 0; i < len; ++i) {
                    const double* p = probs.data() + ((bi * heads + h) * len + i) * len;
                    const auto gi = g.row(bi * len + i).subspan(h * hd, hd);
                    double weighted = 0.0;
                    for (std::size_t j = 0; j < len; ++j) {
                        dp[j] = kernels::dot(gi, vv.row(bi * len + j).subspan(h * hd, hd));
                        weighted += p[j] * dp[j];
                        if (gv) {
                            kernels::axpy(gv->row(bi * len + j).subspan(h * hd, hd), p[j], gi);
                        }
                    }
                    const auto qi = qv.row(bi * len + i).subspan(h * hd, hd);
                    for (std::size_t j = 0; j < len; ++j) {
                        const double ds = scale * p[j] * (dp[j] - weighted);
                        if (gq) {
                            kernels::axpy(gq->row(bi * len + i).subspan(h * hd, hd), ds,
                                          kv.row(bi * len + j).subspan(h * hd, hd));
                        }
                        if (gk) {
                            kernels::axpy(gk->row(bi * len + j).subspan(h * hd, hd), ds, qi);
                        }
                    }
                }
            }
        }
    });
}

Var self_attention(Tape& tape, Var x, const AttentionParams& p, std::size_t heads) {
    const Var q = linear(tape, x, p.wq, p.bq);
    const Var k = linear(tape, x, p.wk, p.bk);
    const Var v = linear(tape, x, p.wv, p.bv);
    const std::size_t h = head_layout(tape.value(x).last_dim(), heads).heads;
    const Var mixed = scaled_dot_product(tape, q, k, v, h);
    return linear(tape, mixed, p.wo, p.bo);
}

Var sum_padded(Tape& tape, Var a, Var b) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    require(av.rank() == bv.rank() && av.rows() == bv.rows(), "sum", "leading shapes differ");
    const std::size_t da = av.last_dim(), db = bv.last_dim();
    auto shape = av.shape();
    shape.back() = std::max(da, db);
    Tensor out(shape);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto y = out.row(r);
        kernels::add(y.first(da), av.row(r));
        kernels::add(y.first(db), bv.row(r));
    }
    const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
    const Var self{tape.size()};
    return tape.record(std::move(out), needs, [self, a, b, da, db](Tape& tp) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad(a);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                kernels::add(ga.row(r), g.row(r).first(da));
            }
        }
        if (tp.requires_grad(b)) {
            Tensor& gb = tp.grad(b);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                kernels::add(gb.row(r), g.row(r).first(db));
            }
        }
    });
}

Var relu(Tape& tape, Var x) {
    const Tensor& xv = tape.value(x);
    Tensor out = xv;
    for (double& y : out.values()) {
        y = y > 0.0 ? y : 0.0;
    }
    const Var self{tape.size()};
    return tape.record(std::move(out), tape.requires_grad(x), [self, x](Tape& tp) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv = tp.value(x);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (xv[i] > 0.0) {
                gx[i] += g[i];
            }
        }
    });
}

Var layer_norm(Tape& tape, Var x, Var gain, Var bias) {
    const Tensor& xv = tape.value(x);
    const Tensor& gv = tape.value(gain);
    const Tensor& bv = tape.value(bias);
    const std::size_t d = xv.last_dim();
    require(gv.size() == d && bv.size() == d, "layer_norm", "gain/bias size mismatch");
    const auto n = static_cast<double>(d);
    Tensor normalized(xv.shape());
    std::vector<double> inv_std(xv.rows());
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        const auto xr = xv.row(r);
        const double mean = kernels::sum(xr) / n;
        auto xh = normalized.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            xh[i] = xr[i] - mean;
        }
        const double var = kernels::dot(xh, xh) / n;
        inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEps);
        kernels::scale(xh, inv_std[r]);
        auto y = out.row(r);
        std::copy(bv.values().begin(), bv.values().end(), y.begin());
        kernels::mul_add(y, xh, gv.values());
    }
    const bool needs =
        tape.requires_grad(x) || tape.requires_grad(gain) || tape.requires_grad(bias);
    const Var self{tape.size()};
    return tape.record(
        std::move(out), needs,
        [self, x, gain, bias, d, n, normalized = std::move(normalized),
         inv_std = std::move(inv_std)](Tape& tp) {
            const Tensor& g = tp.grad(self);
            const Tensor& gv = tp.value(gain);
            std::vector<double> dxh(d);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                const auto gr = g.row(r);
                const auto xh = normalized.row(r);
                if (tp.requires_grad(gain)) {
                    kernels::mul_add(tp.grad(gain).values(), gr, xh);
                }
                if (tp.requires_grad(bias)) {
                    kernels::add(tp.grad(bias).values(), gr);
                }
                if (tp.requires_grad(x)) {
                    for (std::size_t i = 0; i < d; ++i) {
                        dxh[i] = gr[i] * gv[i];
                    }
                    const double mean_dxh = kernels::sum(dxh) / n;
                    const double mean_dxh_xh = kernels::dot(dxh, xh) / n;
                    auto gx = tp.grad(x).row(r);
                    for (std::size_t i = 0; i < d; ++i) {
                        gx[i] += inv_std[r] * (dxh[i] - mean_dxh - xh[i] * mean_dxh_xh);
                    }
                }
            }
        });
}

Var glu(Tape& tape, Var x) {
    const Tensor& xv = tape.value(x);
    const std::size_t d = xv.last_dim();
    require(d >= 2, "glu", "feature dim must be at least 2");
    const std::size_t half = (d + 1) / 2;
    auto shape = xv.shape();
    shape.back() = half;
    Tensor out(shape);
    Tensor gates(shape);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        const auto xr = xv.row(r);
        auto y = out.row(r);
        auto s = gates.row(r);
        for (std::size_t i = 0; i < half; ++i) {
            // Gate input beyond d is the zero pad.
            const double b = half + i < d ? xr[half + i] : 0.0;
            s[i] = sigmoid(b);
            y[i] = xr[i] * s[i];
        }
    }
    const Var self{tape.size()};
    return tape.record(std::move(out), tape.requires_grad(x),
                       [self, x, d, half, gates = std::move(gates)](Tape& tp) {
                           const Tensor& g = tp.grad(self);
                           const Tensor& xv = tp.value(x);
                           Tensor& gx = tp.grad(x);
                           for (std::size_t r = 0; r < g.rows(); ++r) {
                               const auto gr = g.row(r);
                               const auto xr = xv.row(r);
                               const auto s = gates.row(r);
                               auto gxr = gx.row(r);
                               for (std::size_t i = 0; i < half; ++i) {
                                   gxr[i] += gr[i] * s[i];
                                   if (half + i < d) {
                                       gxr[half + i] += gr[i] * xr[i] * s[i] * (1.0 - s[i]);
                                   }
                               }
                           }
                       });
}

Var mean_pool(Tape& tape, Var x) {
    const Tensor& xv = tape.value(x);
    require(xv.rank() == 3, "mean_pool", "input must be rank 3");
    const std::size_t batch = xv.dim(0), len = xv.dim(1), d = xv.dim(2);
    const double inv = 1.0 / static_cast<double>(len);
    Tensor out({batch, d});
    for (std::size_t bi = 0; bi < batch; ++bi) {
        auto y = out.row(bi);
        for (std::size_t t = 0; t < len; ++t) {
            kernels::add(y, xv.row(bi * len + t));
        }
        kernels::scale(y, inv);
    }
    const Var self{tape.size()};
    return tape.record(std::move(out), tape.requires_grad(x), [=](Tape& tp) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (std::size_t bi = 0; bi < batch; ++bi) {
            for (std::size_t t = 0; t < len; ++t) {
                kernels::axpy(gx.row(bi * len + t), inv, g.row(bi));
            }
        }
    });
}

Var softmax_cross_entropy(Tape& tape, Var logits, std::span<const int> labels) {
    const Tensor& lv = tape.value(logits);
    require(lv.rank() == 2 && lv.dim(0) == labels.size(), "cross_entropy", "label count mismatch");
    const std::size_t batch = lv.dim(0), classes = lv.dim(1);
    Tensor probs(lv.shape());
    double loss = 0.0;
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const int label = labels[bi];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw DataError("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(classes) + ")");
        }
        const auto z = lv.row(bi);
        const double mx = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        auto p = probs.row(bi);
        for (std::size_t c = 0; c < classes; ++c) {
            p[c] = std::exp(z[c] - mx);
            total += p[c];
        }
        for (std::size_t c = 0; c < classes; ++c) {
            p[c] /= total;
        }
        loss += -(z[static_cast<std::size_t>(label)] - mx - std::log(total));
    }
    loss /= static_cast<double>(batch);
    std::vector<int> ys(labels.begin(), labels.end());
    const Var self{tape.size()};
    return tape.record(Tensor({1}, loss), tape.requires_grad(logits),
                       [self, logits, batch, probs = std::move(probs), ys = std::move(ys)](Tape& tp) {
                           const double g = tp.grad(self)[0] / static_cast<double>(batch);
                           Tensor& gl = tp.grad(logits);
                           for (std::size_t bi = 0; bi < batch; ++bi) {
                               kernels::axpy(gl.row(bi), g, probs.row(bi));
                               gl.row(bi)[static_cast<std::size_t>(ys[bi])] -= g;
                           }
                       });
}

Var weighted_sum(Tape& tape, Var x, const Tensor& weights) {
    const Tensor& xv = tape.value(x);
    require(weights.size() == xv.size(), "weighted_sum", "weight count mismatch");
    const double total = kernels::dot(xv.values(), weights.values());
    const Var self{tape.size()};
    return tape.record(Tensor({1}, total), tape.requires_grad(x), [self, x, weights](Tape& tp) {
        kernels::axpy(tp.grad(x).values(), tp.grad(self)[0], weights.values());
    });
}

} // namespace ops
} // namespace cgpnas
