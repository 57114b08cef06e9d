#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gnnspace/graph.hpp"
#include "gnnspace/model.hpp"
#include "gnnspace/space.hpp"

using namespace gnnspace;

namespace {

// Two triangles joined by a bridge: 6 nodes, varied degrees.
Batch toy_batch(int feature_width) {
    Graph g(6, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}});
    Batch b;
    b.num_nodes = 6;
    b.num_graphs = 1;
    b.features = Tensor(6, feature_width);
    for (int i = 0; i < 6; ++i)
        for (int c = 0; c < feature_width; ++c)
            b.features.at(i, c) = 0.1 * (i + 1) + 0.01 * c;
    for (const auto& [u, v] : g.edges()) {
        b.edge_src.push_back(u);
        b.edge_dst.push_back(v);
        b.edge_src.push_back(v);
        b.edge_dst.push_back(u);
    }
    b.node_graph.assign(6, 0);
    return b;
}

}  // namespace

TEST_CASE("reference parameter count is frozen") {
    // in=16, out=10, hidden=256, pre=1, mp=3, post=1, bn, prelu, stack.
    REQUIRE(count_params(reference_design(), 16, 10, 256) == 205838);
}

TEST_CASE("parameter count arithmetic on small configs") {
    Design d = reference_design();
    d.bn = false;
    d.act = "relu";
    d.pre_mp = 1;
    d.mp = 1;
    d.post_mp = 1;
    // pre: 3*4+4; mp: 4*4+4; post: 4*2+2 = 16 + 20 + 10.
    REQUIRE(count_params(d, 3, 2, 4) == 46);
    d.bn = true;  // adds 2*4 per message-passing layer (pre/post stay plain)
    REQUIRE(count_params(d, 3, 2, 4) == 46 + 8);
    d.act = "prelu";  // one slope per activated layer (final post layer excluded)
    REQUIRE(count_params(d, 3, 2, 4) == 46 + 8 + 2);
    d.attention = "additive";  // 2*hidden per mp layer
    REQUIRE(count_params(d, 3, 2, 4) == 46 + 8 + 2 + 8);
    d.attention = "multiplicative";  // parameter-free
    REQUIRE(count_params(d, 3, 2, 4) == 46 + 8 + 2);
}

TEST_CASE("skip_cat widens message-passing inputs") {
    Design d = reference_design();
    d.conn = "skip_cat";
    ModelSpec spec = make_spec(d, 8, 5, 16);
    REQUIRE(mp_input_width(spec, 1) == 16);
    REQUIRE(mp_input_width(spec, 2) == 32);
    REQUIRE(mp_input_width(spec, 3) == 48);
    Design plain = reference_design();
    REQUIRE(mp_input_width(make_spec(plain, 8, 5, 16), 3) == 16);
    REQUIRE(count_params(d, 8, 5, 16) > count_params(plain, 8, 5, 16));
}

TEST_CASE("match_hidden_dim finds the largest width under budget") {
    long long budget = compute_budget(16, 10);
    REQUIRE(budget == 205838);
    Design ref = reference_design();
    REQUIRE(match_hidden_dim(ref, 16, 10, budget) == 256);

    for (const Design& d : enumerate_designs(condensed_space())) {
        int h = match_hidden_dim(d, 16, 10, budget);
        REQUIRE(count_params(d, 16, 10, h) <= budget);
        REQUIRE(count_params(d, 16, 10, h + 1) > budget);
    }
    REQUIRE_THROWS_AS(match_hidden_dim(ref, 16, 10, 10), ParameterError);  // under min width
}

TEST_CASE("model forward shapes per level") {
    Design d = reference_design();
    d.mp = 2;
    Model m(make_spec(d, 3, 4, 8));
    m.init_params(1);
    Batch b = toy_batch(3);
    ForwardContext ctx;
    Tape tape;
    Tensor nodes = tape.value(m.logits_nodes(tape, b, ctx));
    REQUIRE(nodes.rows == 6);
    REQUIRE(nodes.cols == 4);
    Tape tape2;
    Tensor graphs = tape2.value(m.logits_graphs(tape2, b, ctx));
    REQUIRE(graphs.rows == 1);
    REQUIRE(graphs.cols == 4);
}

TEST_CASE("node representations are l2-normalized") {
    Design d = reference_design();
    d.mp = 2;
    d.conn = "skip_sum";
    Model m(make_spec(d, 3, 4, 8));
    m.init_params(3);
    Batch b = toy_batch(3);
    ForwardContext ctx;
    Tape tape;
    Tensor z = tape.value(m.node_representation(tape, b, ctx));
    for (int r = 0; r < z.rows; ++r) {
        double nrm = 0.0;
        for (int c = 0; c < z.cols; ++c) nrm += z.at(r, c) * z.at(r, c);
        REQUIRE(std::sqrt(nrm) == Catch::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("deterministic init and forward") {
    Design d = reference_design();
    Model a(make_spec(d, 3, 4, 8)), b2(make_spec(d, 3, 4, 8));
    a.init_params(7);
    b2.init_params(7);
    Batch batch = toy_batch(3);
    ForwardContext ctx;
    Tape ta, tb;
    Tensor ya = ta.value(a.logits_nodes(ta, batch, ctx));
    Tensor yb = tb.value(b2.logits_nodes(tb, batch, ctx));
    REQUIRE(ya.data == yb.data);
}

TEST_CASE("attention weights sum to one per in-neighborhood") {
    for (const char* mode : {"additive", "multiplicative"}) {
        Design d = reference_design();
        d.attention = mode;
        d.agg = "sum";
        Model m(make_spec(d, 3, 4, 8));
        m.init_params(11);
        Batch b = toy_batch(3);
        ForwardContext ctx;
        Tape tape;
        m.node_representation(tape, b, ctx);
        // Re-derive weights through the public helper on the raw features.
        Tape t2;
        auto feats = t2.leaf(b.features, false);
        std::vector<Tensor> empty;
        Tensor a1(3, 1, 0.3), a2(3, 1, -0.2);
        auto w = attention_weights(t2, mode, feats, b.edge_src, b.edge_dst, b.num_nodes,
                                   t2.leaf(a1), t2.leaf(a2));
        Tensor wt = t2.value(w);
        std::vector<double> per_node(static_cast<std::size_t>(b.num_nodes), 0.0);
        for (std::size_t e = 0; e < b.edge_dst.size(); ++e)
            per_node[static_cast<std::size_t>(b.edge_dst[e])] += wt.data[e];
        for (double s : per_node) REQUIRE(s == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("full model gradient check on a compact config") {
    Design d = reference_design();
    d.mp = 2;
    d.conn = "skip_sum";
    d.agg = "mean";
    Model m(make_spec(d, 3, 4, 6));
    m.init_params(13);
    Batch b = toy_batch(3);
    std::vector<int> labels{0, 1, 2, 3, 0, 1};
    std::vector<int> rows{0, 1, 2, 3, 4, 5};
    std::vector<Tensor*> params = m.parameters();
    auto build = [&](Tape& tape, std::vector<Tape::Var>& vars) {
        ForwardContext ctx;
        ctx.training = true;
        ctx.update_bn = false;
        Rng drop(5);
        ctx.dropout_rng = &drop;
        auto logits = m.logits_nodes(tape, b, ctx);
        for (auto& [tensor, var] : m.bound_params()) vars.push_back(var);
        return tape.softmax_cross_entropy(logits, labels, rows);
    };
    REQUIRE(gradient_check(build, params) < 1e-4);
}
