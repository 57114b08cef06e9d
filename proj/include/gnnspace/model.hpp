#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gnnspace/design.hpp"
#include "gnnspace/error.hpp"
#include "gnnspace/rng.hpp"
#include "gnnspace/tensor.hpp"

namespace gnnspace {

// Structural slice of a Design plus the concrete widths: everything that
// determines the network shape and its parameter count.
struct ModelSpec {
    int input_dim = 1;
    int output_dim = 1;
    int hidden_dim = 1;
    int pre_mp = 1;
    int mp = 2;
    int post_mp = 1;
    bool bn = true;
    double dropout = 0.0;
    std::string act = "prelu";
    std::string agg = "mean";
    std::string conn = "stack";
    std::string attention = "none";
};

inline ModelSpec make_spec(const Design& d, int input_dim, int output_dim, int hidden_dim) {
    if (input_dim < 1 || output_dim < 1 || hidden_dim < 1)
        throw ParameterError("model: dims must be >= 1");
    if (d.pre_mp < 1 || d.mp < 1 || d.post_mp < 1)
        throw ParameterError("model: layer counts must be >= 1");
    ModelSpec s;
    s.input_dim = input_dim;
    s.output_dim = output_dim;
    s.hidden_dim = hidden_dim;
    s.pre_mp = d.pre_mp;
    s.mp = d.mp;
    s.post_mp = d.post_mp;
    s.bn = d.bn;
    s.dropout = d.dropout;
    s.act = d.act;
    s.agg = d.agg;
    s.conn = d.conn;
    s.attention = d.attention;
    return s;
}

// MP layer j (1-based) input width: skip_cat concatenates the running input
// with each layer's output, so widths grow by hidden per layer; the other
// connectivities keep every MP width at hidden.
inline int mp_input_width(const ModelSpec& s, int layer_1based) {
    return s.conn == "skip_cat" ? s.hidden_dim * layer_1based : s.hidden_dim;
}

// Exact trainable-parameter count by layer arithmetic: linear d_in*d_out +
// d_out, BN 2*d, PReLU 1 per activated layer, additive attention 2*hidden
// per MP layer. Running BN statistics are buffers, not parameters.
inline long long count_params(const ModelSpec& s) {
    auto linear = [](int din, int dout) {
        return static_cast<long long>(din) * dout + dout;
    };
    long long prelu = s.act == "prelu" ? 1 : 0;
    long long total = 0;
    int w = s.input_dim;
    for (int i = 0; i < s.pre_mp; ++i) {
        total += linear(w, s.hidden_dim) + prelu;
        w = s.hidden_dim;
    }
    for (int j = 1; j <= s.mp; ++j) {
        total += linear(mp_input_width(s, j), s.hidden_dim);
        if (s.bn) total += 2LL * s.hidden_dim;
        total += prelu;
        if (s.attention == "additive") total += 2LL * s.hidden_dim;
    }
    for (int i = 0; i < s.post_mp - 1; ++i) total += linear(s.hidden_dim, s.hidden_dim) + prelu;
    total += linear(s.hidden_dim, s.output_dim);  // final layer: linear only
    return total;
}

inline long long count_params(const Design& d, int input_dim, int output_dim, int hidden_dim) {
    return count_params(make_spec(d, input_dim, output_dim, hidden_dim));
}

// Parameter budget: the reference architecture's count at the given hidden
// width (256 canonically; smaller for desk-scale runs).
inline long long compute_budget(int input_dim, int output_dim, int ref_hidden = 256) {
    return count_params(reference_design(), input_dim, output_dim, ref_hidden);
}

// Largest hidden_dim in [1, 4096] whose parameter count fits the budget.
// Count is checked to be strictly increasing across the probed widths.
inline int match_hidden_dim(const Design& d, int input_dim, int output_dim, long long budget) {
    auto count = [&](int h) { return count_params(d, input_dim, output_dim, h); };
    if (count(1) > budget)
        throw ParameterError("match_hidden_dim: budget " + std::to_string(budget) +
                             " below minimum model size " + std::to_string(count(1)));
    int lo = 1, hi = 4096;
    while (lo < hi) {
        int mid = lo + (hi - lo + 1) / 2;
        if (count(mid) <= budget) lo = mid;
        else hi = mid - 1;
    }
    if (lo < 4096 && count(lo + 1) <= count(lo))
        throw DomainError("match_hidden_dim: parameter count not increasing in hidden_dim");
    return lo;
}

// A set of graphs flattened into one node table for message passing.
// Undirected edges appear in both directions: entry e sends node src[e]'s
// transformed value to dst[e]'s neighborhood aggregation.
struct Batch {
    int num_nodes = 0;
    int num_graphs = 0;
    Tensor features;             // [num_nodes, input_dim]
    std::vector<int> edge_src;
    std::vector<int> edge_dst;
    std::vector<int> node_graph;  // node row -> graph index, for readout
};

// Per-edge attention weights over each destination's in-neighborhood.
// Additive scores are leaky_relu(a1.t_u + a2.t_v) with learnable column
// vectors a1, a2; multiplicative scores are (t_u . t_v)/sqrt(d). Softmax is
// taken per destination segment, so each neighborhood's weights sum to 1.
inline Tape::Var attention_weights(Tape& tape, const std::string& mode, Tape::Var t,
                                   const std::vector<int>& src, const std::vector<int>& dst,
                                   int num_nodes, Tape::Var a1 = {}, Tape::Var a2 = {}) {
    Tape::Var scores;
    if (mode == "additive") {
        if (!a1.valid() || !a2.valid())
            throw ParameterError("attention: additive mode needs a1, a2");
        Tape::Var s_src = tape.matmul(t, a1);  // [n,1]
        Tape::Var s_dst = tape.matmul(t, a2);
        scores = tape.leaky_relu(
            tape.add(tape.gather_rows(s_src, src), tape.gather_rows(s_dst, dst)), 0.2);
    } else if (mode == "multiplicative") {
        int d = tape.value(t).cols;
        Tape::Var prod = tape.mul(tape.gather_rows(t, src), tape.gather_rows(t, dst));
        scores = tape.scale(tape.row_sum(prod), 1.0 / std::sqrt(static_cast<double>(d)));
    } else {
        throw ParameterError("attention: unknown mode '" + mode + "'");
    }
    return tape.segment_softmax(scores, dst, num_nodes);
}

// How a forward pass should behave: training toggles BN batch statistics
// and dropout; update_bn is cleared during gradient checks so repeated
// forward passes see identical running statistics.
struct ForwardContext {
    bool training = false;
    bool update_bn = true;
    Rng* dropout_rng = nullptr;
};

class Model {
public:
    struct Linear {
        Tensor W, b;
    };
    struct MlpLayer {
        Linear lin;
        bool has_act = true;
        Tensor prelu_slope;  // [1,1], used only when act == prelu
    };
    struct MpLayer {
        Linear lin;
        Tensor bn_gamma, bn_beta, bn_running_mean, bn_running_var;
        Tensor prelu_slope;
        Tensor att_a1, att_a2;  // [hidden,1] each, additive attention only
    };

    explicit Model(const ModelSpec& spec) : spec_(spec) {
        int w = spec_.input_dim;
        for (int i = 0; i < spec_.pre_mp; ++i) {
            pre_.push_back(make_mlp_layer(w, spec_.hidden_dim, true));
            w = spec_.hidden_dim;
        }
        for (int j = 1; j <= spec_.mp; ++j) {
            MpLayer l;
            l.lin.W = Tensor(mp_input_width(spec_, j), spec_.hidden_dim);
            l.lin.b = Tensor(1, spec_.hidden_dim);
            if (spec_.bn) {
                l.bn_gamma = Tensor(1, spec_.hidden_dim, 1.0);
                l.bn_beta = Tensor(1, spec_.hidden_dim);
                l.bn_running_mean = Tensor(1, spec_.hidden_dim);
                l.bn_running_var = Tensor(1, spec_.hidden_dim, 1.0);
            }
            if (spec_.act == "prelu") l.prelu_slope = Tensor(1, 1, 0.25);
            if (spec_.attention == "additive") {
                l.att_a1 = Tensor(spec_.hidden_dim, 1);
                l.att_a2 = Tensor(spec_.hidden_dim, 1);
            }
            mp_.push_back(std::move(l));
        }
        for (int i = 0; i < spec_.post_mp - 1; ++i)
            post_.push_back(make_mlp_layer(spec_.hidden_dim, spec_.hidden_dim, true));
        post_.push_back(make_mlp_layer(spec_.hidden_dim, spec_.output_dim, false));
    }

    const ModelSpec& spec() const { return spec_; }

    // Trainable tensors in fixed traversal order (matches forward binding).
    std::vector<Tensor*> parameters() {
        std::vector<Tensor*> out;
        for (auto& l : pre_) collect_mlp(l, out);
        for (auto& l : mp_) {
            out.push_back(&l.lin.W);
            out.push_back(&l.lin.b);
            if (spec_.bn) {
                out.push_back(&l.bn_gamma);
                out.push_back(&l.bn_beta);
            }
            if (spec_.act == "prelu") out.push_back(&l.prelu_slope);
            if (spec_.attention == "additive") {
                out.push_back(&l.att_a1);
                out.push_back(&l.att_a2);
            }
        }
        for (auto& l : post_) collect_mlp(l, out);
        return out;
    }

    long long num_params() {
        long long n = 0;
        for (Tensor* t : parameters()) n += static_cast<long long>(t->size());
        return n;
    }

    // Xavier-uniform weights, zero biases, identity BN, 0.25 PReLU slopes.
    void init_params(std::uint64_t seed) {
        Rng rng(seed);
        auto xavier = [&](Tensor& t, int fan_in, int fan_out) {
            double bound = std::sqrt(6.0 / (fan_in + fan_out));
            for (real_t& v : t.data) v = rng.uniform_real(-bound, bound);
        };
        for (auto& l : pre_) {
            xavier(l.lin.W, l.lin.W.rows, l.lin.W.cols);
            std::fill(l.lin.b.data.begin(), l.lin.b.data.end(), 0.0);
            if (l.prelu_slope.size() > 0) l.prelu_slope.data[0] = 0.25;
        }
        for (auto& l : mp_) {
            xavier(l.lin.W, l.lin.W.rows, l.lin.W.cols);
            std::fill(l.lin.b.data.begin(), l.lin.b.data.end(), 0.0);
            if (spec_.bn) {
                std::fill(l.bn_gamma.data.begin(), l.bn_gamma.data.end(), 1.0);
                std::fill(l.bn_beta.data.begin(), l.bn_beta.data.end(), 0.0);
                std::fill(l.bn_running_mean.data.begin(), l.bn_running_mean.data.end(), 0.0);
                std::fill(l.bn_running_var.data.begin(), l.bn_running_var.data.end(), 1.0);
            }
            if (spec_.act == "prelu") l.prelu_slope.data[0] = 0.25;
            if (spec_.attention == "additive") {
                xavier(l.att_a1, spec_.hidden_dim, 1);
                xavier(l.att_a2, spec_.hidden_dim, 1);
            }
        }
        for (auto& l : post_) {
            xavier(l.lin.W, l.lin.W.rows, l.lin.W.cols);
            std::fill(l.lin.b.data.begin(), l.lin.b.data.end(), 0.0);
            if (l.prelu_slope.size() > 0) l.prelu_slope.data[0] = 0.25;
        }
    }

    // Pre-MP, message passing, and the final L2 normalization: [n, hidden].
    Tape::Var node_representation(Tape& tape, const Batch& batch, const ForwardContext& ctx) {
        bound_.clear();
        if (batch.features.cols != spec_.input_dim)
            throw ShapeError("model: batch feature width " + std::to_string(batch.features.cols) +
                             " != input_dim " + std::to_string(spec_.input_dim));
        Tape::Var x = tape.leaf(batch.features, false);
        for (auto& l : pre_) x = run_mlp_layer(tape, l, x);
        Tape::Var carried = x;  // skip_cat running concatenation
        for (std::size_t j = 0; j < mp_.size(); ++j) {
            Tape::Var input = spec_.conn == "skip_cat" ? carried : x;
            Tape::Var out = run_mp_layer(tape, mp_[j], input, batch, ctx);
            if (spec_.conn == "skip_sum") out = tape.add(out, input);
            if (spec_.conn == "skip_cat") carried = tape.concat_cols(carried, out);
            x = out;
        }
        return tape.l2_normalize_rows(x);
    }

    // Node-level logits: post-MP applied to every node row.
    Tape::Var logits_nodes(Tape& tape, const Batch& batch, const ForwardContext& ctx) {
        Tape::Var x = node_representation(tape, batch, ctx);
        return run_post(tape, x);
    }

    // Graph-level logits: mean readout over each graph's nodes, then post-MP.
    Tape::Var logits_graphs(Tape& tape, const Batch& batch, const ForwardContext& ctx) {
        Tape::Var x = node_representation(tape, batch, ctx);
        Tape::Var pooled =
            tape.segment_aggregate(x, batch.node_graph, batch.num_graphs, Aggregation::mean);
        return run_post(tape, pooled);
    }

    // Link scores: dot products of post-MP embeddings for the given pairs.
    Tape::Var link_scores(Tape& tape, const Batch& batch, const ForwardContext& ctx,
                          const std::vector<int>& pair_u, const std::vector<int>& pair_v) {
        if (pair_u.size() != pair_v.size()) throw ShapeError("link_scores: pair length mismatch");
        Tape::Var x = node_representation(tape, batch, ctx);
        Tape::Var z = run_post(tape, x);
        Tape::Var prod = tape.mul(tape.gather_rows(z, pair_u), tape.gather_rows(z, pair_v));
        return tape.row_sum(prod);
    }

    // (tensor, tape var) pairs bound by the most recent forward pass, in
    // parameters() order; the trainer reads gradients through this.
    const std::vector<std::pair<Tensor*, Tape::Var>>& bound_params() const { return bound_; }

private:
    ModelSpec spec_;
    std::vector<MlpLayer> pre_;
    std::vector<MpLayer> mp_;
    std::vector<MlpLayer> post_;
    std::vector<std::pair<Tensor*, Tape::Var>> bound_;

    MlpLayer make_mlp_layer(int din, int dout, bool has_act) {
        MlpLayer l;
        l.lin.W = Tensor(din, dout);
        l.lin.b = Tensor(1, dout);
        l.has_act = has_act;
        if (has_act && spec_.act == "prelu") l.prelu_slope = Tensor(1, 1, 0.25);
        return l;
    }

    void collect_mlp(MlpLayer& l, std::vector<Tensor*>& out) {
        out.push_back(&l.lin.W);
        out.push_back(&l.lin.b);
        if (l.has_act && spec_.act == "prelu") out.push_back(&l.prelu_slope);
    }

    Tape::Var bind(Tape& tape, Tensor& t) {
        Tape::Var v = tape.leaf(t);
        bound_.emplace_back(&t, v);
        return v;
    }

    Tape::Var apply_act(Tape& tape, Tape::Var x, Tensor& prelu_slope) {
        if (spec_.act == "relu") return tape.relu(x);
        if (spec_.act == "swish") return tape.swish(x);
        if (spec_.act == "prelu") return tape.prelu(x, bind(tape, prelu_slope));
        throw ParameterError("model: unknown act '" + spec_.act + "'");
    }

    Tape::Var run_mlp_layer(Tape& tape, MlpLayer& l, Tape::Var x) {
        // Bind as separate statements: binds nested in one call expression
        // would record in the compiler's argument evaluation order, and
        // bound_params() must mirror parameters() exactly.
        Tape::Var w = bind(tape, l.lin.W);
        Tape::Var bias = bind(tape, l.lin.b);
        Tape::Var y = tape.add(tape.matmul(x, w), bias);
        if (l.has_act) y = apply_act(tape, y, l.prelu_slope);
        return y;
    }

    Tape::Var run_post(Tape& tape, Tape::Var x) {
        for (auto& l : post_) x = run_mlp_layer(tape, l, x);
        return x;
    }

    // Linear -> BN? -> Dropout? -> Act -> (attention-weighted) aggregation
    // over in-neighborhoods. Self-information travels only through skip
    // connections, handled by the caller.
    Tape::Var run_mp_layer(Tape& tape, MpLayer& l, Tape::Var input, const Batch& batch,
                           const ForwardContext& ctx) {
        // Sequenced binds, same reason as in run_mlp_layer.
        Tape::Var w = bind(tape, l.lin.W);
        Tape::Var bias = bind(tape, l.lin.b);
        Tape::Var t = tape.add(tape.matmul(input, w), bias);
        if (spec_.bn) {
            Tape::Var gamma = bind(tape, l.bn_gamma);
            Tape::Var beta = bind(tape, l.bn_beta);
            t = tape.batchnorm(t, gamma, beta, l.bn_running_mean, l.bn_running_var,
                               ctx.training, ctx.training && ctx.update_bn);
        }
        if (spec_.dropout > 0.0 && ctx.training) {
            if (!ctx.dropout_rng)
                throw ParameterError("model: training with dropout needs a dropout rng");
            t = tape.dropout(t, spec_.dropout, true, *ctx.dropout_rng);
        }
        t = apply_act(tape, t, l.prelu_slope);
        Tape::Var messages = tape.gather_rows(t, batch.edge_src);
        if (spec_.attention != "none") {
            Tape::Var a1, a2;
            if (spec_.attention == "additive") {
                a1 = bind(tape, l.att_a1);
                a2 = bind(tape, l.att_a2);
            }
            Tape::Var w = attention_weights(tape, spec_.attention, t, batch.edge_src,
                                            batch.edge_dst, batch.num_nodes, a1, a2);
            messages = tape.mul(messages, w);
        }
        Aggregation agg;
        if (spec_.agg == "sum") agg = Aggregation::sum;
        else if (spec_.agg == "mean") agg = Aggregation::mean;
        else if (spec_.agg == "max") agg = Aggregation::max;
        else throw ParameterError("model: unknown agg '" + spec_.agg + "'");
        return tape.segment_aggregate(messages, batch.edge_dst, batch.num_nodes, agg);
    }
};

}  // namespace gnnspace
