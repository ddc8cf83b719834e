#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fsoda/core/error.hpp"
#include "fsoda/core/tensor.hpp"

namespace fsoda {

/// A named trainable tensor with a persistent gradient accumulator.
/// Parameters live outside any tape; tapes are per-step scratch graphs.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

    void zero_grad() { grad.set_zero(); }
};

struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

/// Reverse-mode autodiff over Tensor-valued nodes. Operations record a
/// backward closure; backward() runs them in reverse creation order and
/// flushes gradients into the Params referenced by param() nodes.
class Tape {
public:
    Var constant(Tensor v) { return push(std::move(v), nullptr, nullptr); }

    Var param(Param& p) { return push(p.value, nullptr, &p); }

    const Tensor& value(Var v) const { return nodes_[v.idx].value; }
    const Tensor& grad(Var v) const { return nodes_[v.idx].grad; }
    size_t node_count() const { return nodes_.size(); }

    /// Cuts the gradient flow: the result is a fresh constant.
    Var detach(Var a) { return constant(value(a)); }

    // ---- elementwise / shape ops -------------------------------------

    Var add(Var a, Var b) {
        check_same(a, b, "add");
        Tensor out = value(a);
        out.add_inplace(value(b));
        return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
            t.acc(a, g);
            t.acc(b, g);
        });
    }

    Var sub(Var a, Var b) {
        check_same(a, b, "sub");
        Tensor out = value(a);
        out.axpy_inplace(-1.0, value(b));
        return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
            t.acc(a, g);
            t.acc_scaled(b, g, -1.0);
        });
    }

    Var mul(Var a, Var b) {
        check_same(a, b, "mul");
        Tensor out = value(a);
        const Tensor& vb = value(b);
        for (size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
        return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            const Tensor& vb2 = t.value(b);
            Tensor ga = g, gb = g;
            for (size_t i = 0; i < g.size(); ++i) {
                ga[i] *= vb2[i];
                gb[i] *= va[i];
            }
            t.acc(a, ga);
            t.acc(b, gb);
        });
    }

    Var div(Var a, Var b) {
        check_same(a, b, "div");
        Tensor out = value(a);
        const Tensor& vb = value(b);
        for (size_t i = 0; i < out.size(); ++i) out[i] /= vb[i];
        return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            const Tensor& vb2 = t.value(b);
            Tensor ga = g, gb = g;
            for (size_t i = 0; i < g.size(); ++i) {
                ga[i] /= vb2[i];
                gb[i] *= -va[i] / (vb2[i] * vb2[i]);
            }
            t.acc(a, ga);
            t.acc(b, gb);
        });
    }

    Var scale(Var a, double s) {
        Tensor out = value(a);
        out.scale_inplace(s);
        return push(std::move(out), [a, s](Tape& t, const Tensor& g) { t.acc_scaled(a, g, s); });
    }

    Var add_scalar(Var a, double s) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i) out[i] += s;
        return push(std::move(out), [a](Tape& t, const Tensor& g) { t.acc(a, g); });
    }

    Var neg(Var a) { return scale(a, -1.0); }

    /// Broadcast-add a 1xC row vector to every row of a.
    Var add_rowvec(Var a, Var v) {
        const Tensor& va = value(a);
        const Tensor& vv = value(v);
        if (vv.rows() != 1 || vv.cols() != va.cols()) throw NumericError("add_rowvec: shape mismatch");
        Tensor out = va;
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j) out(i, j) += vv(0, j);
        return push(std::move(out), [a, v](Tape& t, const Tensor& g) {
            t.acc(a, g);
            Tensor gv(1, g.cols());
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) gv(0, j) += g(i, j);
            t.acc(v, gv);
        });
    }

    /// Broadcast-multiply every row of a by a 1xC row vector.
    Var mul_rowvec(Var a, Var v) {
        const Tensor& va = value(a);
        const Tensor& vv = value(v);
        if (vv.rows() != 1 || vv.cols() != va.cols()) throw NumericError("mul_rowvec: shape mismatch");
        Tensor out = va;
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j) out(i, j) *= vv(0, j);
        return push(std::move(out), [a, v](Tape& t, const Tensor& g) {
            const Tensor& va2 = t.value(a);
            const Tensor& vv2 = t.value(v);
            Tensor ga = g;
            Tensor gv(1, g.cols());
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) {
                    ga(i, j) *= vv2(0, j);
                    gv(0, j) += g(i, j) * va2(i, j);
                }
            t.acc(a, ga);
            t.acc(v, gv);
        });
    }

    /// Broadcast-add an Rx1 column vector to every column of a.
    Var add_colvec(Var a, Var v) {
        const Tensor& va = value(a);
        const Tensor& vv = value(v);
        if (vv.cols() != 1 || vv.rows() != va.rows()) throw NumericError("add_colvec: shape mismatch");
        Tensor out = va;
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j) out(i, j) += vv(i, 0);
        return push(std::move(out), [a, v](Tape& t, const Tensor& g) {
            t.acc(a, g);
            Tensor gv(g.rows(), 1);
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) gv(i, 0) += g(i, j);
            t.acc(v, gv);
        });
    }

    Var matmul(Var a, Var b) {
        const Tensor& va = value(a);
        const Tensor& vb = value(b);
        if (va.cols() != vb.rows()) throw NumericError("matmul: inner dims disagree");
        Tensor out(va.rows(), vb.cols());
        gemm_acc(out, va, false, vb, false);
        return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
            Tensor ga(t.value(a).rows(), t.value(a).cols());
            gemm_acc(ga, g, false, t.value(b), true);
            t.acc(a, ga);
            Tensor gb(t.value(b).rows(), t.value(b).cols());
            gemm_acc(gb, t.value(a), true, g, false);
            t.acc(b, gb);
        });
    }

    Var transpose(Var a) {
        return push(value(a).transposed(), [a](Tape& t, const Tensor& g) { t.acc(a, g.transposed()); });
    }

    // ---- nonlinearities ----------------------------------------------

    Var relu(Var a) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            Tensor ga = g;
            for (size_t i = 0; i < g.size(); ++i)
                if (va[i] <= 0.0) ga[i] = 0.0;
            t.acc(a, ga);
        });
    }

    Var leaky_relu(Var a, double slope = 0.1) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i)
            if (out[i] < 0.0) out[i] *= slope;
        return push(std::move(out), [a, slope](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            Tensor ga = g;
            for (size_t i = 0; i < g.size(); ++i)
                if (va[i] < 0.0) ga[i] *= slope;
            t.acc(a, ga);
        });
    }

    Var clamp_min(Var a, double floor) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], floor);
        return push(std::move(out), [a, floor](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            Tensor ga = g;
            for (size_t i = 0; i < g.size(); ++i)
                if (va[i] < floor) ga[i] = 0.0;
            t.acc(a, ga);
        });
    }

    /// log(1 + exp(x)), overflow-safe. d/dx = sigmoid(x).
    Var softplus(Var a) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i) {
            const double x = out[i];
            out[i] = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        }
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            Tensor ga = g;
            for (size_t i = 0; i < g.size(); ++i) ga[i] *= sigmoid(va[i]);
            t.acc(a, ga);
        });
    }

    Var exp_(Var a) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            // reuse the forward value: this node is the parent-consumer's output
            const Tensor& va = t.value(a);
            Tensor ga = g;
            for (size_t i = 0; i < g.size(); ++i) ga[i] *= std::exp(va[i]);
            t.acc(a, ga);
        });
    }

    Var log_(Var a) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            Tensor ga = g;
            for (size_t i = 0; i < g.size(); ++i) ga[i] /= va[i];
            t.acc(a, ga);
        });
    }

    Var sqrt_(Var a) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]);
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            Tensor ga = g;
            for (size_t i = 0; i < g.size(); ++i) ga[i] *= 0.5 / std::sqrt(va[i]);
            t.acc(a, ga);
        });
    }

    Var square(Var a) {
        Tensor out = value(a);
        for (size_t i = 0; i < out.size(); ++i) out[i] *= out[i];
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            const Tensor& va = t.value(a);
            Tensor ga = g;
            for (size_t i = 0; i < g.size(); ++i) ga[i] *= 2.0 * va[i];
            t.acc(a, ga);
        });
    }

    // ---- reductions ---------------------------------------------------

    Var sum(Var a) {
        Tensor out(1, 1);
        out(0, 0) = value(a).sum();
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            Tensor ga = Tensor::full(t.value(a).rows(), t.value(a).cols(), g(0, 0));
            t.acc(a, ga);
        });
    }

    Var mean_all(Var a) {
        const double n = static_cast<double>(value(a).size());
        if (n == 0) throw NumericError("mean of empty tensor");
        return scale(sum(a), 1.0 / n);
    }

    Var row_sum(Var a) {
        const Tensor& va = value(a);
        Tensor out(va.rows(), 1);
        for (int i = 0; i < va.rows(); ++i) {
            double s = 0;
            for (int j = 0; j < va.cols(); ++j) s += va(i, j);
            out(i, 0) = s;
        }
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            const Tensor& va2 = t.value(a);
            Tensor ga(va2.rows(), va2.cols());
            for (int i = 0; i < ga.rows(); ++i)
                for (int j = 0; j < ga.cols(); ++j) ga(i, j) = g(i, 0);
            t.acc(a, ga);
        });
    }

    /// Sum over rows -> 1xC.
    Var sum_down(Var a) {
        const Tensor& va = value(a);
        Tensor out(1, va.cols());
        for (int i = 0; i < va.rows(); ++i)
            for (int j = 0; j < va.cols(); ++j) out(0, j) += va(i, j);
        return push(std::move(out), [a](Tape& t, const Tensor& g) {
            const Tensor& va2 = t.value(a);
            Tensor ga(va2.rows(), va2.cols());
            for (int i = 0; i < ga.rows(); ++i)
                for (int j = 0; j < ga.cols(); ++j) ga(i, j) = g(0, j);
            t.acc(a, ga);
        });
    }

    /// Mean over rows -> 1xC.
    Var mean_down(Var a) {
        const int n = value(a).rows();
        if (n == 0) throw NumericError("mean_down of empty tensor");
        return scale(sum_down(a), 1.0 / n);
    }

    // ---- indexing / assembly -------------------------------------------

    Var gather_rows(Var a, std::vector<int> idx) {
        const Tensor& va = value(a);
        Tensor out(static_cast<int>(idx.size()), va.cols());
        for (size_t i = 0; i < idx.size(); ++i)
            std::copy(va.row_ptr(idx[i]), va.row_ptr(idx[i]) + va.cols(), out.row_ptr(static_cast<int>(i)));
        return push(std::move(out), [a, idx = std::move(idx)](Tape& t, const Tensor& g) {
            const Tensor& va2 = t.value(a);
            Tensor ga(va2.rows(), va2.cols());
            for (size_t i = 0; i < idx.size(); ++i)
                for (int j = 0; j < g.cols(); ++j) ga(idx[i], j) += g(static_cast<int>(i), j);
            t.acc(a, ga);
        });
    }

    Var slice_rows(Var a, int start, int n) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = start + i;
        return gather_rows(a, std::move(idx));
    }

    Var concat_rows(const std::vector<Var>& parts) {
        if (parts.empty()) throw NumericError("concat_rows: empty");
        int rows = 0;
        const int cols = value(parts[0]).cols();
        for (Var p : parts) {
            if (value(p).cols() != cols) throw NumericError("concat_rows: column mismatch");
            rows += value(p).rows();
        }
        Tensor out(rows, cols);
        int at = 0;
        for (Var p : parts) {
            const Tensor& vp = value(p);
            std::copy(vp.data(), vp.data() + vp.size(), out.row_ptr(at));
            at += vp.rows();
        }
        return push(std::move(out), [parts](Tape& t, const Tensor& g) {
            int at2 = 0;
            for (Var p : parts) {
                const Tensor& vp = t.value(p);
                Tensor gp(vp.rows(), vp.cols());
                std::copy(g.row_ptr(at2), g.row_ptr(at2) + vp.size(), gp.data());
                t.acc(p, gp);
                at2 += vp.rows();
            }
        });
    }

    /// Horizontal concat of equally-tall blocks.
    Var concat_cols(const std::vector<Var>& parts) {
        if (parts.empty()) throw NumericError("concat_cols: empty");
        const int rows = value(parts[0]).rows();
        int cols = 0;
        for (Var p : parts) {
            if (value(p).rows() != rows) throw NumericError("concat_cols: row mismatch");
            cols += value(p).cols();
        }
        Tensor out(rows, cols);
        int at = 0;
        for (Var p : parts) {
            const Tensor& vp = value(p);
            for (int i = 0; i < rows; ++i)
                std::copy(vp.row_ptr(i), vp.row_ptr(i) + vp.cols(), out.row_ptr(i) + at);
            at += vp.cols();
        }
        return push(std::move(out), [parts, rows](Tape& t, const Tensor& g) {
            int at2 = 0;
            for (Var p : parts) {
                const Tensor& vp = t.value(p);
                Tensor gp(vp.rows(), vp.cols());
                for (int i = 0; i < rows; ++i)
                    std::copy(g.row_ptr(i) + at2, g.row_ptr(i) + at2 + vp.cols(), gp.row_ptr(i));
                t.acc(p, gp);
                at2 += vp.cols();
            }
        });
    }

    /// out(i,0) = a(i, cols[i]).
    Var pick(Var a, std::vector<int> cols) {
        const Tensor& va = value(a);
        if (static_cast<int>(cols.size()) != va.rows()) throw NumericError("pick: index count != rows");
        Tensor out(va.rows(), 1);
        for (int i = 0; i < va.rows(); ++i) out(i, 0) = va(i, cols[i]);
        return push(std::move(out), [a, cols = std::move(cols)](Tape& t, const Tensor& g) {
            const Tensor& va2 = t.value(a);
            Tensor ga(va2.rows(), va2.cols());
            for (int i = 0; i < va2.rows(); ++i) ga(i, cols[i]) += g(i, 0);
            t.acc(a, ga);
        });
    }

    // ---- composite numerics --------------------------------------------

    /// Row-wise log(sum_j exp(a_ij)) -> Rx1, max-shifted for stability.
    Var logsumexp_rows(Var a) {
        const Tensor& va = value(a);
        Tensor shift(va.rows(), 1);
        for (int i = 0; i < va.rows(); ++i) {
            double m = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < va.cols(); ++j) m = std::max(m, va(i, j));
            shift(i, 0) = m;
        }
        Var c = constant(shift);  // the max shift carries no gradient
        Var centered = sub(a, tile_cols(c, va.cols()));
        Var lse = log_(row_sum(exp_(centered)));
        return add(lse, c);
    }

    /// Repeat a 1xC row n times -> nxC.
    Var tile_rows(Var a, int n) {
        const Tensor& va = value(a);
        if (va.rows() != 1) throw NumericError("tile_rows: expects 1xC");
        Tensor out(n, va.cols());
        for (int i = 0; i < n; ++i)
            std::copy(va.data(), va.data() + va.cols(), out.row_ptr(i));
        return push(std::move(out), [a, n](Tape& t, const Tensor& g) {
            Tensor ga(1, g.cols());
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < g.cols(); ++j) ga(0, j) += g(i, j);
            t.acc(a, ga);
        });
    }

    /// Repeat an Rx1 column n times -> Rxn.
    Var tile_cols(Var a, int n) {
        const Tensor& va = value(a);
        if (va.cols() != 1) throw NumericError("tile_cols: expects Rx1");
        Tensor out(va.rows(), n);
        for (int i = 0; i < va.rows(); ++i)
            for (int j = 0; j < n; ++j) out(i, j) = va(i, 0);
        return push(std::move(out), [a, n](Tape& t, const Tensor& g) {
            Tensor ga(g.rows(), 1);
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < n; ++j) ga(i, 0) += g(i, j);
            t.acc(a, ga);
        });
    }

    /// Row-wise dot product of equally shaped matrices -> Rx1.
    Var dot_rows(Var a, Var b) { return row_sum(mul(a, b)); }

    /// Pairwise squared Euclidean distances: a is NxE, b is MxE -> NxM.
    Var pairwise_sqdist(Var a, Var b) {
        const Tensor& va = value(a);
        const Tensor& vb = value(b);
        if (va.cols() != vb.cols()) throw NumericError("pairwise_sqdist: dim mismatch");
        Tensor out(va.rows(), vb.rows());
        for (int i = 0; i < va.rows(); ++i)
            for (int j = 0; j < vb.rows(); ++j) {
                double s = 0;
                for (int k = 0; k < va.cols(); ++k) {
                    const double d = va(i, k) - vb(j, k);
                    s += d * d;
                }
                out(i, j) = s;
            }
        return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
            const Tensor& va2 = t.value(a);
            const Tensor& vb2 = t.value(b);
            Tensor ga(va2.rows(), va2.cols());
            Tensor gb(vb2.rows(), vb2.cols());
            for (int i = 0; i < va2.rows(); ++i)
                for (int j = 0; j < vb2.rows(); ++j) {
                    const double gij = g(i, j);
                    if (gij == 0.0) continue;
                    for (int k = 0; k < va2.cols(); ++k) {
                        const double d = 2.0 * (va2(i, k) - vb2(j, k)) * gij;
                        ga(i, k) += d;
                        gb(j, k) -= d;
                    }
                }
            t.acc(a, ga);
            t.acc(b, gb);
        });
    }

    /// Row-wise cosine similarity -> Rx1. Throws on a zero-norm row.
    Var cosine_rows(Var a, Var b) {
        const Tensor& va = value(a);
        const Tensor& vb = value(b);
        for (int i = 0; i < va.rows(); ++i) {
            double na = 0, nb = 0;
            for (int j = 0; j < va.cols(); ++j) na += va(i, j) * va(i, j);
            for (int j = 0; j < vb.cols(); ++j) nb += vb(i, j) * vb(i, j);
            if (na == 0.0 || nb == 0.0) throw NumericError("cosine undefined for zero-norm vector");
        }
        Var num = dot_rows(a, b);
        Var den = mul(sqrt_(row_sum(square(a))), sqrt_(row_sum(square(b))));
        return div(num, den);
    }

    // ---- backward -------------------------------------------------------

    /// Seeds d(loss)=1 and sweeps the graph in reverse creation order.
    /// Gradients of param() nodes are accumulated into their Params.
    void backward(Var loss) {
        const Tensor& lv = value(loss);
        if (lv.rows() != 1 || lv.cols() != 1) throw NumericError("backward: loss must be a scalar");
        for (auto& n : nodes_) {
            n.grad = Tensor(n.value.rows(), n.value.cols());
        }
        nodes_[loss.idx].grad(0, 0) = 1.0;
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.back && n.grad.max_abs() != 0.0) n.back(*this, n.grad);
            if (n.param) n.param->grad.add_inplace(n.grad);
        }
    }

private:
    static double sigmoid(double x) { return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, const Tensor&)> back;
        Param* param = nullptr;
    };

    Var push(Tensor v, std::function<void(Tape&, const Tensor&)> back, Param* p = nullptr) {
        nodes_.push_back(Node{std::move(v), Tensor(), std::move(back), p});
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    void acc(Var v, const Tensor& g) { nodes_[v.idx].grad.add_inplace(g); }
    void acc_scaled(Var v, const Tensor& g, double s) { nodes_[v.idx].grad.axpy_inplace(s, g); }

    void check_same(Var a, Var b, const char* op) const {
        if (!value(a).same_shape(value(b)))
            throw NumericError(std::string(op) + ": shape mismatch " + std::to_string(value(a).rows()) + "x" +
                               std::to_string(value(a).cols()) + " vs " + std::to_string(value(b).rows()) + "x" +
                               std::to_string(value(b).cols()));
    }

    std::deque<Node> nodes_;
};

}  // namespace fsoda
