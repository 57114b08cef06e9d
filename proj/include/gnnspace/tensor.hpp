#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gnnspace/error.hpp"
#include "gnnspace/rng.hpp"

namespace gnnspace {

using real_t = double;

// Dense row-major matrix. Vectors are [n,1] or [1,n]; scalars are [1,1].
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<real_t> data;

    Tensor() = default;
    Tensor(int r, int c, real_t fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
        if (r < 0 || c < 0) throw ShapeError("tensor: negative dimension");
    }

    real_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    real_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    static Tensor zeros(int r, int c) { return Tensor(r, c, 0.0); }
    static Tensor scalar(real_t v) {
        Tensor t(1, 1);
        t.data[0] = v;
        return t;
    }
};

inline std::string shape_str(const Tensor& t) {
    return "[" + std::to_string(t.rows) + "," + std::to_string(t.cols) + "]";
}

inline real_t stable_sigmoid(real_t x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    real_t e = std::exp(x);
    return e / (1.0 + e);
}

// Row-wise softmax on a plain tensor (used at evaluation time, off-tape).
inline Tensor softmax_rows(const Tensor& t) {
    Tensor out(t.rows, t.cols);
    for (int r = 0; r < t.rows; ++r) {
        real_t mx = -std::numeric_limits<real_t>::infinity();
        for (int c = 0; c < t.cols; ++c) mx = std::max(mx, t.at(r, c));
        real_t sum = 0.0;
        for (int c = 0; c < t.cols; ++c) {
            real_t e = std::exp(t.at(r, c) - mx);
            out.at(r, c) = e;
            sum += e;
        }
        for (int c = 0; c < t.cols; ++c) out.at(r, c) /= sum;
    }
    return out;
}

inline std::vector<int> argmax_rows(const Tensor& t) {
    std::vector<int> out(static_cast<std::size_t>(t.rows));
    for (int r = 0; r < t.rows; ++r) {
        int best = 0;
        for (int c = 1; c < t.cols; ++c)
            if (t.at(r, c) > t.at(r, best)) best = c;
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

enum class Aggregation { sum, mean, max };

// Define-by-run reverse-mode autodiff. Every op records its inputs' node ids
// and a closure that accumulates into their gradients; backward() walks the
// tape in reverse creation order. A fresh Tape is built per training step.
class Tape {
public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(const Tensor& value, bool requires_grad = true) {
        Var v = push(value);
        if (!requires_grad) no_grad_.push_back(v.id);
        return v;
    }

    const Tensor& value(Var v) const { return node(v).value; }
    const Tensor& grad(Var v) const { return node(v).grad; }
    std::size_t num_nodes() const { return nodes_.size(); }

    // --- arithmetic ---

    Var matmul(Var a, Var b) {
        const Tensor &A = value(a), &B = value(b);
        if (A.cols != B.rows)
            throw ShapeError("matmul: " + shape_str(A) + " x " + shape_str(B));
        Tensor C(A.rows, B.cols);
        matmul_into(C, A, B, false, false);
        Var out = push(std::move(C));
        record(out, [this, a, b, out] {
            const Tensor& G = node(out).grad;
            matmul_into(node(a).grad, G, node(b).value, false, true);   // dA += G B^T
            matmul_into(node(b).grad, node(a).value, G, true, false);   // dB += A^T G
        });
        return out;
    }

    // Elementwise sum; b may also be a [1,m] bias broadcast over rows.
    Var add(Var a, Var b) {
        const Tensor &A = value(a), &B = value(b);
        Tensor C = A;
        if (A.same_shape(B)) {
            for (std::size_t i = 0; i < C.size(); ++i) C.data[i] += B.data[i];
        } else if (B.rows == 1 && B.cols == A.cols) {
            for (int r = 0; r < A.rows; ++r)
                for (int c = 0; c < A.cols; ++c) C.at(r, c) += B.at(0, c);
        } else {
            throw ShapeError("add: " + shape_str(A) + " + " + shape_str(B));
        }
        Var out = push(std::move(C));
        record(out, [this, a, b, out] {
            const Tensor& G = node(out).grad;
            Tensor& dA = node(a).grad;
            Tensor& dB = node(b).grad;
            for (std::size_t i = 0; i < G.size(); ++i) dA.data[i] += G.data[i];
            if (dB.same_shape(G)) {
                for (std::size_t i = 0; i < G.size(); ++i) dB.data[i] += G.data[i];
            } else {
                for (int r = 0; r < G.rows; ++r)
                    for (int c = 0; c < G.cols; ++c) dB.at(0, c) += G.at(r, c);
            }
        });
        return out;
    }

    // Elementwise product; b may broadcast as a [n,1] per-row weight or a
    // [1,1] scalar.
    Var mul(Var a, Var b) {
        const Tensor &A = value(a), &B = value(b);
        Tensor C = A;
        if (A.same_shape(B)) {
            for (std::size_t i = 0; i < C.size(); ++i) C.data[i] *= B.data[i];
        } else if (B.rows == A.rows && B.cols == 1) {
            for (int r = 0; r < A.rows; ++r)
                for (int c = 0; c < A.cols; ++c) C.at(r, c) *= B.at(r, 0);
        } else if (B.rows == 1 && B.cols == 1) {
            for (std::size_t i = 0; i < C.size(); ++i) C.data[i] *= B.data[0];
        } else {
            throw ShapeError("mul: " + shape_str(A) + " * " + shape_str(B));
        }
        Var out = push(std::move(C));
        record(out, [this, a, b, out] {
            const Tensor& G = node(out).grad;
            const Tensor& A2 = node(a).value;
            const Tensor& B2 = node(b).value;
            Tensor& dA = node(a).grad;
            Tensor& dB = node(b).grad;
            if (A2.same_shape(B2)) {
                for (std::size_t i = 0; i < G.size(); ++i) {
                    dA.data[i] += G.data[i] * B2.data[i];
                    dB.data[i] += G.data[i] * A2.data[i];
                }
            } else if (B2.cols == 1 && B2.rows == A2.rows) {
                for (int r = 0; r < G.rows; ++r)
                    for (int c = 0; c < G.cols; ++c) {
                        dA.at(r, c) += G.at(r, c) * B2.at(r, 0);
                        dB.at(r, 0) += G.at(r, c) * A2.at(r, c);
                    }
            } else {
                for (std::size_t i = 0; i < G.size(); ++i) {
                    dA.data[i] += G.data[i] * B2.data[0];
                    dB.data[0] += G.data[i] * A2.data[i];
                }
            }
        });
        return out;
    }

    Var scale(Var a, real_t s) {
        Tensor C = value(a);
        for (real_t& v : C.data) v *= s;
        Var out = push(std::move(C));
        record(out, [this, a, out, s] {
            const Tensor& G = node(out).grad;
            Tensor& dA = node(a).grad;
            for (std::size_t i = 0; i < G.size(); ++i) dA.data[i] += s * G.data[i];
        });
        return out;
    }

    // --- activations ---

    Var relu(Var a) {
        Tensor C = value(a);
        for (real_t& v : C.data) v = std::max(v, 0.0);
        Var out = push(std::move(C));
        record(out, [this, a, out] {
            const Tensor& G = node(out).grad;
            const Tensor& A = node(a).value;
            Tensor& dA = node(a).grad;
            for (std::size_t i = 0; i < G.size(); ++i)
                if (A.data[i] > 0.0) dA.data[i] += G.data[i];
        });
        return out;
    }

    Var leaky_relu(Var a, real_t slope) {
        Tensor C = value(a);
        for (real_t& v : C.data) v = v > 0.0 ? v : slope * v;
        Var out = push(std::move(C));
        record(out, [this, a, out, slope] {
            const Tensor& G = node(out).grad;
            const Tensor& A = node(a).value;
            Tensor& dA = node(a).grad;
            for (std::size_t i = 0; i < G.size(); ++i)
                dA.data[i] += (A.data[i] > 0.0 ? 1.0 : slope) * G.data[i];
        });
        return out;
    }

    Var sigmoid(Var a) {
        Tensor C = value(a);
        for (real_t& v : C.data) v = stable_sigmoid(v);
        Var out = push(std::move(C));
        record(out, [this, a, out] {
            const Tensor& G = node(out).grad;
            const Tensor& S = node(out).value;
            Tensor& dA = node(a).grad;
            for (std::size_t i = 0; i < G.size(); ++i)
                dA.data[i] += S.data[i] * (1.0 - S.data[i]) * G.data[i];
        });
        return out;
    }

    // swish(x) = x * sigmoid(x)
    Var swish(Var a) {
        const Tensor& A = value(a);
        Tensor C = A;
        for (real_t& v : C.data) v = v * stable_sigmoid(v);
        Var out = push(std::move(C));
        record(out, [this, a, out] {
            const Tensor& G = node(out).grad;
            const Tensor& A2 = node(a).value;
            Tensor& dA = node(a).grad;
            for (std::size_t i = 0; i < G.size(); ++i) {
                real_t s = stable_sigmoid(A2.data[i]);
                dA.data[i] += (s + A2.data[i] * s * (1.0 - s)) * G.data[i];
            }
        });
        return out;
    }

    // PReLU with a single learnable slope per call site (slope is [1,1]).
    Var prelu(Var a, Var slope) {
        const Tensor& S = value(slope);
        if (S.rows != 1 || S.cols != 1) throw ShapeError("prelu: slope must be [1,1]");
        real_t al = S.data[0];
        Tensor C = value(a);
        for (real_t& v : C.data) v = v > 0.0 ? v : al * v;
        Var out = push(std::move(C));
        record(out, [this, a, slope, out] {
            const Tensor& G = node(out).grad;
            const Tensor& A = node(a).value;
            real_t al2 = node(slope).value.data[0];
            Tensor& dA = node(a).grad;
            Tensor& dS = node(slope).grad;
            for (std::size_t i = 0; i < G.size(); ++i) {
                if (A.data[i] > 0.0) {
                    dA.data[i] += G.data[i];
                } else {
                    dA.data[i] += al2 * G.data[i];
                    dS.data[0] += A.data[i] * G.data[i];
                }
            }
        });
        return out;
    }

    // --- structure ---

    Var concat_cols(Var a, Var b) {
        const Tensor &A = value(a), &B = value(b);
        if (A.rows != B.rows)
            throw ShapeError("concat_cols: " + shape_str(A) + " | " + shape_str(B));
        Tensor C(A.rows, A.cols + B.cols);
        for (int r = 0; r < A.rows; ++r) {
            for (int c = 0; c < A.cols; ++c) C.at(r, c) = A.at(r, c);
            for (int c = 0; c < B.cols; ++c) C.at(r, A.cols + c) = B.at(r, c);
        }
        Var out = push(std::move(C));
        record(out, [this, a, b, out] {
            const Tensor& G = node(out).grad;
            Tensor& dA = node(a).grad;
            Tensor& dB = node(b).grad;
            for (int r = 0; r < dA.rows; ++r) {
                for (int c = 0; c < dA.cols; ++c) dA.at(r, c) += G.at(r, c);
                for (int c = 0; c < dB.cols; ++c) dB.at(r, c) += G.at(r, dA.cols + c);
            }
        });
        return out;
    }

    Var gather_rows(Var a, std::vector<int> idx) {
        const Tensor& A = value(a);
        for (int i : idx)
            if (i < 0 || i >= A.rows) throw ShapeError("gather_rows: index out of range");
        Tensor C(static_cast<int>(idx.size()), A.cols);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (int c = 0; c < A.cols; ++c)
                C.at(static_cast<int>(r), c) = A.at(idx[r], c);
        Var out = push(std::move(C));
        record(out, [this, a, out, idx = std::move(idx)] {
            const Tensor& G = node(out).grad;
            Tensor& dA = node(a).grad;
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (int c = 0; c < G.cols; ++c)
                    dA.at(idx[r], c) += G.at(static_cast<int>(r), c);
        });
        return out;
    }

    // Reduce rows of a into num_segments buckets given per-row segment ids.
    // Empty segments produce zero rows (and receive no gradient). For max,
    // the gradient routes to the first row attaining the maximum.
    Var segment_aggregate(Var a, const std::vector<int>& segments, int num_segments,
                          Aggregation agg) {
        const Tensor& A = value(a);
        if (static_cast<int>(segments.size()) != A.rows)
            throw ShapeError("segment_aggregate: segment ids must match rows");
        for (int s : segments)
            if (s < 0 || s >= num_segments)
                throw ShapeError("segment_aggregate: segment id out of range");
        Tensor C(num_segments, A.cols);
        std::vector<int> count(static_cast<std::size_t>(num_segments), 0);
        for (int s : segments) ++count[static_cast<std::size_t>(s)];
        std::vector<int> argmax;
        if (agg == Aggregation::max) {
            argmax.assign(static_cast<std::size_t>(num_segments) * A.cols, -1);
            for (int r = 0; r < A.rows; ++r) {
                int s = segments[static_cast<std::size_t>(r)];
                for (int c = 0; c < A.cols; ++c) {
                    int& best = argmax[static_cast<std::size_t>(s) * A.cols + c];
                    if (best < 0 || A.at(r, c) > A.at(best, c)) best = r;
                }
            }
            for (int s = 0; s < num_segments; ++s)
                for (int c = 0; c < A.cols; ++c) {
                    int best = argmax[static_cast<std::size_t>(s) * A.cols + c];
                    if (best >= 0) C.at(s, c) = A.at(best, c);
                }
        } else {
            for (int r = 0; r < A.rows; ++r) {
                int s = segments[static_cast<std::size_t>(r)];
                for (int c = 0; c < A.cols; ++c) C.at(s, c) += A.at(r, c);
            }
            if (agg == Aggregation::mean)
                for (int s = 0; s < num_segments; ++s)
                    if (count[static_cast<std::size_t>(s)] > 0)
                        for (int c = 0; c < A.cols; ++c)
                            C.at(s, c) /= count[static_cast<std::size_t>(s)];
        }
        Var out = push(std::move(C));
        record(out, [this, a, out, segments, count, argmax = std::move(argmax), agg] {
            const Tensor& G = node(out).grad;
            Tensor& dA = node(a).grad;
            if (agg == Aggregation::max) {
                for (int s = 0; s < G.rows; ++s)
                    for (int c = 0; c < G.cols; ++c) {
                        int best = argmax[static_cast<std::size_t>(s) * G.cols + c];
                        if (best >= 0) dA.at(best, c) += G.at(s, c);
                    }
            } else {
                for (std::size_t r = 0; r < segments.size(); ++r) {
                    int s = segments[r];
                    real_t w = agg == Aggregation::mean
                                   ? 1.0 / count[static_cast<std::size_t>(s)]
                                   : 1.0;
                    for (int c = 0; c < G.cols; ++c)
                        dA.at(static_cast<int>(r), c) += w * G.at(s, c);
                }
            }
        });
        return out;
    }

    // Softmax of a [m,1] score column within each segment (fused backward).
    Var segment_softmax(Var scores, const std::vector<int>& segments, int num_segments) {
        const Tensor& S = value(scores);
        if (S.cols != 1) throw ShapeError("segment_softmax: scores must be [m,1]");
        if (static_cast<int>(segments.size()) != S.rows)
            throw ShapeError("segment_softmax: segment ids must match rows");
        std::vector<std::vector<int>> buckets(static_cast<std::size_t>(num_segments));
        for (std::size_t r = 0; r < segments.size(); ++r) {
            int s = segments[r];
            if (s < 0 || s >= num_segments)
                throw ShapeError("segment_softmax: segment id out of range");
            buckets[static_cast<std::size_t>(s)].push_back(static_cast<int>(r));
        }
        Tensor P(S.rows, 1);
        for (const auto& rows : buckets) {
            if (rows.empty()) continue;
            real_t mx = -std::numeric_limits<real_t>::infinity();
            for (int r : rows) mx = std::max(mx, S.at(r, 0));
            real_t sum = 0.0;
            for (int r : rows) {
                real_t e = std::exp(S.at(r, 0) - mx);
                P.at(r, 0) = e;
                sum += e;
            }
            for (int r : rows) P.at(r, 0) /= sum;
        }
        Var out = push(std::move(P));
        record(out, [this, scores, out, buckets = std::move(buckets)] {
            const Tensor& G = node(out).grad;
            const Tensor& P2 = node(out).value;
            Tensor& dS = node(scores).grad;
            for (const auto& rows : buckets) {
                if (rows.empty()) continue;
                real_t dot = 0.0;
                for (int r : rows) dot += P2.at(r, 0) * G.at(r, 0);
                for (int r : rows) dS.at(r, 0) += P2.at(r, 0) * (G.at(r, 0) - dot);
            }
        });
        return out;
    }

    // --- normalization / regularization ---

    // Batch normalization over rows, per column. Training mode normalizes by
    // the biased batch variance; running statistics use the unbiased variance
    // and are updated only when update_running is set (gradient checks rerun
    // the forward pass and must leave them untouched). Eval mode normalizes
    // by the running statistics.
    Var batchnorm(Var a, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
                  bool training, bool update_running, real_t momentum = 0.1,
                  real_t eps = 1e-5) {
        const Tensor& A = value(a);
        int n = A.rows, d = A.cols;
        auto check = [&](const Tensor& t, const char* name) {
            if (t.rows != 1 || t.cols != d)
                throw ShapeError(std::string("batchnorm: ") + name + " must be [1," +
                                 std::to_string(d) + "]");
        };
        check(value(gamma), "gamma");
        check(value(beta), "beta");
        check(running_mean, "running_mean");
        check(running_var, "running_var");
        Tensor mean(1, d), var(1, d);
        if (training) {
            for (int c = 0; c < d; ++c) {
                real_t m = 0.0;
                for (int r = 0; r < n; ++r) m += A.at(r, c);
                m /= n;
                real_t v = 0.0;
                for (int r = 0; r < n; ++r) {
                    real_t dv = A.at(r, c) - m;
                    v += dv * dv;
                }
                mean.at(0, c) = m;
                var.at(0, c) = v / n;
            }
            if (update_running) {
                real_t unbias = n > 1 ? static_cast<real_t>(n) / (n - 1) : 1.0;
                for (int c = 0; c < d; ++c) {
                    running_mean.at(0, c) =
                        (1.0 - momentum) * running_mean.at(0, c) + momentum * mean.at(0, c);
                    running_var.at(0, c) = (1.0 - momentum) * running_var.at(0, c) +
                                           momentum * unbias * var.at(0, c);
                }
            }
        } else {
            mean = running_mean;
            var = running_var;
        }
        Tensor xhat(n, d), C(n, d);
        const Tensor &Gm = value(gamma), &Bt = value(beta);
        std::vector<real_t> inv_std(static_cast<std::size_t>(d));
        for (int c = 0; c < d; ++c)
            inv_std[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var.at(0, c) + eps);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < d; ++c) {
                real_t xh = (A.at(r, c) - mean.at(0, c)) * inv_std[static_cast<std::size_t>(c)];
                xhat.at(r, c) = xh;
                C.at(r, c) = Gm.at(0, c) * xh + Bt.at(0, c);
            }
        Var out = push(std::move(C));
        record(out, [this, a, gamma, beta, out, xhat = std::move(xhat),
                     inv_std = std::move(inv_std), training] {
            const Tensor& G = node(out).grad;
            const Tensor& Gm2 = node(gamma).value;
            Tensor& dA = node(a).grad;
            Tensor& dGm = node(gamma).grad;
            Tensor& dBt = node(beta).grad;
            int n2 = G.rows, d2 = G.cols;
            for (int c = 0; c < d2; ++c) {
                real_t sum_g = 0.0, sum_gx = 0.0;
                for (int r = 0; r < n2; ++r) {
                    sum_g += G.at(r, c);
                    sum_gx += G.at(r, c) * xhat.at(r, c);
                }
                dGm.at(0, c) += sum_gx;
                dBt.at(0, c) += sum_g;
                real_t gs = Gm2.at(0, c) * inv_std[static_cast<std::size_t>(c)];
                if (training) {
                    // dX = gamma/std * (dY - mean(dY) - xhat * mean(dY*xhat))
                    for (int r = 0; r < n2; ++r)
                        dA.at(r, c) += gs * (G.at(r, c) - sum_g / n2 -
                                             xhat.at(r, c) * sum_gx / n2);
                } else {
                    for (int r = 0; r < n2; ++r) dA.at(r, c) += gs * G.at(r, c);
                }
            }
        });
        return out;
    }

    // Inverted dropout: kept entries are scaled by 1/(1-rate) so the
    // expectation is unchanged. Identity in eval mode or at rate 0.
    Var dropout(Var a, real_t rate, bool training, Rng& rng) {
        if (rate < 0.0 || rate >= 1.0) throw ParameterError("dropout: rate must be in [0,1)");
        if (!training || rate == 0.0) return a;
        const Tensor& A = value(a);
        real_t keep_scale = 1.0 / (1.0 - rate);
        std::vector<real_t> mask(A.size());
        for (real_t& m : mask) m = rng.next_double() < rate ? 0.0 : keep_scale;
        Tensor C = A;
        for (std::size_t i = 0; i < C.size(); ++i) C.data[i] *= mask[i];
        Var out = push(std::move(C));
        record(out, [this, a, out, mask = std::move(mask)] {
            const Tensor& G = node(out).grad;
            Tensor& dA = node(a).grad;
            for (std::size_t i = 0; i < G.size(); ++i) dA.data[i] += mask[i] * G.data[i];
        });
        return out;
    }

    // Scale each row to unit L2 norm; all-zero rows stay zero (zero grad).
    Var l2_normalize_rows(Var a) {
        const Tensor& A = value(a);
        Tensor C(A.rows, A.cols);
        std::vector<real_t> norms(static_cast<std::size_t>(A.rows), 0.0);
        for (int r = 0; r < A.rows; ++r) {
            real_t s = 0.0;
            for (int c = 0; c < A.cols; ++c) s += A.at(r, c) * A.at(r, c);
            real_t nrm = std::sqrt(s);
            norms[static_cast<std::size_t>(r)] = nrm;
            if (nrm > 0.0)
                for (int c = 0; c < A.cols; ++c) C.at(r, c) = A.at(r, c) / nrm;
        }
        Var out = push(std::move(C));
        record(out, [this, a, out, norms = std::move(norms)] {
            const Tensor& G = node(out).grad;
            const Tensor& Y = node(out).value;
            Tensor& dA = node(a).grad;
            for (int r = 0; r < G.rows; ++r) {
                real_t nrm = norms[static_cast<std::size_t>(r)];
                if (nrm == 0.0) continue;
                real_t dot = 0.0;
                for (int c = 0; c < G.cols; ++c) dot += G.at(r, c) * Y.at(r, c);
                for (int c = 0; c < G.cols; ++c)
                    dA.at(r, c) += (G.at(r, c) - dot * Y.at(r, c)) / nrm;
            }
        });
        return out;
    }

    // --- reductions / loss ---

    Var row_sum(Var a) {
        const Tensor& A = value(a);
        Tensor C(A.rows, 1);
        for (int r = 0; r < A.rows; ++r)
            for (int c = 0; c < A.cols; ++c) C.at(r, 0) += A.at(r, c);
        Var out = push(std::move(C));
        record(out, [this, a, out] {
            const Tensor& G = node(out).grad;
            Tensor& dA = node(a).grad;
            for (int r = 0; r < dA.rows; ++r)
                for (int c = 0; c < dA.cols; ++c) dA.at(r, c) += G.at(r, 0);
        });
        return out;
    }

    Var sum_all(Var a) {
        const Tensor& A = value(a);
        real_t s = 0.0;
        for (real_t v : A.data) s += v;
        Var out = push(Tensor::scalar(s));
        record(out, [this, a, out] {
            real_t g = node(out).grad.data[0];
            Tensor& dA = node(a).grad;
            for (real_t& v : dA.data) v += g;
        });
        return out;
    }

    // Mean softmax cross-entropy over the given subset of rows; the other
    // rows contribute neither loss nor gradient. Returns a [1,1] scalar.
    Var softmax_cross_entropy(Var logits, const std::vector<int>& labels,
                              const std::vector<int>& rows) {
        const Tensor& L = value(logits);
        if (static_cast<int>(labels.size()) != L.rows)
            throw ShapeError("softmax_cross_entropy: labels must match logit rows");
        if (rows.empty()) throw ParameterError("softmax_cross_entropy: empty row subset");
        for (int r : rows) {
            if (r < 0 || r >= L.rows)
                throw ShapeError("softmax_cross_entropy: row index out of range");
            int y = labels[static_cast<std::size_t>(r)];
            if (y < 0 || y >= L.cols)
                throw ParameterError("softmax_cross_entropy: label out of range");
        }
        Tensor probs(L.rows, L.cols);
        real_t loss = 0.0;
        for (int r : rows) {
            real_t mx = -std::numeric_limits<real_t>::infinity();
            for (int c = 0; c < L.cols; ++c) mx = std::max(mx, L.at(r, c));
            real_t sum = 0.0;
            for (int c = 0; c < L.cols; ++c) {
                real_t e = std::exp(L.at(r, c) - mx);
                probs.at(r, c) = e;
                sum += e;
            }
            for (int c = 0; c < L.cols; ++c) probs.at(r, c) /= sum;
            loss -= std::log(std::max(probs.at(r, labels[static_cast<std::size_t>(r)]),
                                      std::numeric_limits<real_t>::min()));
        }
        loss /= static_cast<real_t>(rows.size());
        Var out = push(Tensor::scalar(loss));
        record(out, [this, logits, out, labels, rows, probs = std::move(probs)] {
            real_t g = node(out).grad.data[0] / static_cast<real_t>(rows.size());
            Tensor& dL = node(logits).grad;
            for (int r : rows) {
                int y = labels[static_cast<std::size_t>(r)];
                for (int c = 0; c < dL.cols; ++c) {
                    real_t p = probs.at(r, c);
                    dL.at(r, c) += g * (p - (c == y ? 1.0 : 0.0));
                }
            }
        });
        return out;
    }

    // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
    void backward(Var loss) {
        Tensor& g = node(loss).grad;
        if (g.rows != 1 || g.cols != 1)
            throw ShapeError("backward: loss must be a [1,1] scalar");
        g.data[0] = 1.0;
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
            if (nodes_[static_cast<std::size_t>(i)].backward)
                nodes_[static_cast<std::size_t>(i)].backward();
        for (int id : no_grad_) {
            Tensor& ng = nodes_[static_cast<std::size_t>(id)].grad;
            std::fill(ng.data.begin(), ng.data.end(), 0.0);
        }
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> backward;
    };

    std::vector<Node> nodes_;
    std::vector<int> no_grad_;

    Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
    const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

    Var push(Tensor value) {
        Node n;
        n.grad = Tensor::zeros(value.rows, value.cols);
        n.value = std::move(value);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    void record(Var v, std::function<void()> fn) { node(v).backward = std::move(fn); }

    // C (+)= A x B with optional transposes, accumulating into C. The i-k-j
    // order keeps the inner loop sequential in both B and C.
    static void matmul_into(Tensor& C, const Tensor& A, const Tensor& B, bool ta, bool tb) {
        int m = ta ? A.cols : A.rows;
        int k = ta ? A.rows : A.cols;
        int n = tb ? B.rows : B.cols;
        for (int i = 0; i < m; ++i) {
            for (int p = 0; p < k; ++p) {
                real_t av = ta ? A.at(p, i) : A.at(i, p);
                if (av == 0.0) continue;
                for (int j = 0; j < n; ++j)
                    C.at(i, j) += av * (tb ? B.at(j, p) : B.at(p, j));
            }
        }
    }
};

// Central-difference gradient check. `build` must construct the same graph
// each call from the Tensors in `params` (leaf them in order, append the
// Vars) and return the scalar loss — any randomness inside must be
// re-seeded per call and batchnorm running updates suppressed. Returns the
// max over parameter elements of |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
inline double gradient_check(
    const std::function<Tape::Var(Tape&, std::vector<Tape::Var>&)>& build,
    const std::vector<Tensor*>& params, double h = 1e-5) {
    Tape tape;
    std::vector<Tape::Var> vars;
    Tape::Var loss = build(tape, vars);
    if (vars.size() != params.size())
        throw ParameterError("gradient_check: build registered wrong parameter count");
    tape.backward(loss);
    std::vector<Tensor> analytic;
    analytic.reserve(vars.size());
    for (auto v : vars) analytic.push_back(tape.grad(v));

    auto loss_at = [&] {
        Tape t;
        std::vector<Tape::Var> vs;
        Tape::Var l = build(t, vs);
        return t.value(l).data[0];
    };

    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            double orig = theta.data[i];
            theta.data[i] = orig + h;
            double lp = loss_at();
            theta.data[i] = orig - h;
            double lm = loss_at();
            theta.data[i] = orig;
            double fd = (lp - lm) / (2.0 * h);
            double ad = analytic[p].data[i];
            double err = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace gnnspace
