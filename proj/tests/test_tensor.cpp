#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gnnspace/rng.hpp"
#include "gnnspace/tensor.hpp"

using namespace gnnspace;

namespace {

Tensor randn(int r, int c, Rng& rng) {
    Tensor t(r, c);
    for (auto& v : t.data) v = rng.uniform_real(-1.0, 1.0);
    return t;
}

// Triple-loop matmul oracle.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    Tensor c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k)
            for (int j = 0; j < b.cols; ++j) c.at(i, j) += a.at(i, k) * b.at(k, j);
    return c;
}

}  // namespace

TEST_CASE("matmul forward matches the triple-loop oracle") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        int m = 1 + static_cast<int>(rng.uniform_below(5));
        int k = 1 + static_cast<int>(rng.uniform_below(5));
        int n = 1 + static_cast<int>(rng.uniform_below(5));
        Tensor a = randn(m, k, rng), b = randn(k, n, rng);
        Tape tape;
        Tensor got = tape.value(tape.matmul(tape.leaf(a), tape.leaf(b)));
        Tensor want = matmul_oracle(a, b);
        for (std::size_t i = 0; i < want.size(); ++i)
            REQUIRE(got.data[i] == Catch::Approx(want.data[i]).margin(1e-14));
    }
    Tape tape;
    REQUIRE_THROWS_AS(tape.matmul(tape.leaf(Tensor(2, 3)), tape.leaf(Tensor(2, 3))), ShapeError);
}

TEST_CASE("add broadcasts a [1,m] bias across rows") {
    Tape tape;
    Tensor x(2, 3);
    x.data = {1, 2, 3, 4, 5, 6};
    Tensor b(1, 3);
    b.data = {10, 20, 30};
    Tensor got = tape.value(tape.add(tape.leaf(x), tape.leaf(b)));
    std::vector<real_t> want{11, 22, 33, 14, 25, 36};
    REQUIRE(got.data == want);
    REQUIRE_THROWS_AS(tape.add(tape.leaf(Tensor(2, 3)), tape.leaf(Tensor(3, 2))), ShapeError);
}

TEST_CASE("activation reference values") {
    Tape tape;
    Tensor x(1, 4);
    x.data = {-2.0, 0.0, 1.0, 3.0};
    auto v = tape.leaf(x);

    Tensor r = tape.value(tape.relu(v));
    REQUIRE(r.data == std::vector<real_t>{0.0, 0.0, 1.0, 3.0});

    // prelu with slope 0.25: negative side scales, positive side passes.
    Tensor s = Tensor::scalar(0.25);
    Tensor p = tape.value(tape.prelu(v, tape.leaf(s)));
    REQUIRE(p.data[0] == Catch::Approx(-0.5));
    REQUIRE(p.data[2] == 1.0);

    // swish(1) = 1 * sigmoid(1).
    Tensor w = tape.value(tape.swish(v));
    REQUIRE(w.data[2] == Catch::Approx(0.7310585786300049).epsilon(1e-12));
    REQUIRE(w.data[1] == 0.0);
}

TEST_CASE("stable_sigmoid endpoints") {
    REQUIRE(stable_sigmoid(0.0) == 0.5);
    REQUIRE(stable_sigmoid(800.0) == Catch::Approx(1.0));
    REQUIRE(stable_sigmoid(-800.0) == Catch::Approx(0.0).margin(1e-300));
    REQUIRE(std::isfinite(stable_sigmoid(-800.0)));
}

TEST_CASE("segment sum equals the one-hot matmul oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        int rows = 1 + static_cast<int>(rng.uniform_below(8));
        int cols = 1 + static_cast<int>(rng.uniform_below(4));
        int segs = 1 + static_cast<int>(rng.uniform_below(4));
        Tensor x = randn(rows, cols, rng);
        std::vector<int> seg(rows);
        for (int& s : seg) s = static_cast<int>(rng.uniform_below(segs));

        // Oracle: S^T X with S the rows-x-segs one-hot assignment matrix.
        Tensor onehot(rows, segs);
        for (int r = 0; r < rows; ++r) onehot.at(r, seg[static_cast<std::size_t>(r)]) = 1.0;
        Tensor want(segs, cols);
        for (int r = 0; r < rows; ++r)
            for (int s = 0; s < segs; ++s)
                if (onehot.at(r, s) != 0.0)
                    for (int c = 0; c < cols; ++c) want.at(s, c) += x.at(r, c);

        Tape tape;
        Tensor got =
            tape.value(tape.segment_aggregate(tape.leaf(x), seg, segs, Aggregation::sum));
        for (std::size_t i = 0; i < want.size(); ++i)
            REQUIRE(got.data[i] == Catch::Approx(want.data[i]).margin(1e-13));
    }
}

TEST_CASE("segment mean and max semantics") {
    Tape tape;
    Tensor x(3, 2);
    x.data = {1, 5, 3, 1, 10, 10};
    std::vector<int> seg{0, 0, 2};  // segment 1 left empty

    Tensor mean = tape.value(tape.segment_aggregate(tape.leaf(x), seg, 3, Aggregation::mean));
    REQUIRE(mean.at(0, 0) == 2.0);
    REQUIRE(mean.at(0, 1) == 3.0);
    REQUIRE(mean.at(1, 0) == 0.0);  // empty segment is zero
    REQUIRE(mean.at(2, 0) == 10.0);

    Tensor mx = tape.value(tape.segment_aggregate(tape.leaf(x), seg, 3, Aggregation::max));
    REQUIRE(mx.at(0, 0) == 3.0);
    REQUIRE(mx.at(0, 1) == 5.0);
    REQUIRE(mx.at(1, 1) == 0.0);
}

TEST_CASE("segment softmax normalizes per segment") {
    Tape tape;
    Tensor scores(4, 1);
    scores.data = {0.2, 1.4, -0.7, 3.0};
    std::vector<int> seg{0, 0, 0, 1};
    Tensor p = tape.value(tape.segment_softmax(tape.leaf(scores), seg, 2));
    REQUIRE(p.data[0] + p.data[1] + p.data[2] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(p.data[3] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(p.data[1] > p.data[0]);
}

TEST_CASE("softmax cross entropy value and masking") {
    Tape tape;
    Tensor logits(2, 2);
    logits.data = {2.0, 0.0, 0.0, 2.0};
    auto v = tape.leaf(logits);
    // Row 0 only: loss = -log(e^2 / (e^2 + 1)).
    auto loss = tape.softmax_cross_entropy(v, {0, 0}, {0});
    double want = -std::log(std::exp(2.0) / (std::exp(2.0) + 1.0));
    REQUIRE(tape.value(loss).data[0] == Catch::Approx(want).epsilon(1e-12));
    tape.backward(loss);
    // Masked row contributes no gradient.
    REQUIRE(tape.grad(v).at(1, 0) == 0.0);
    REQUIRE(tape.grad(v).at(1, 1) == 0.0);
    REQUIRE_THROWS_AS(tape.softmax_cross_entropy(v, {0, 2}, {1}), ParameterError);
}

TEST_CASE("dropout train and eval modes") {
    Tensor x(1, 1000, 1.0);
    Rng rng(3);
    Tape tape;
    auto v = tape.leaf(x);
    Tensor eval = tape.value(tape.dropout(v, 0.5, false, rng));
    REQUIRE(eval.data == x.data);

    Tensor train = tape.value(tape.dropout(v, 0.5, true, rng));
    int kept = 0;
    for (real_t e : train.data) {
        REQUIRE((e == 0.0 || e == Catch::Approx(2.0)));  // inverted scaling 1/(1-rate)
        kept += e != 0.0;
    }
    REQUIRE(kept > 350);
    REQUIRE(kept < 650);
    REQUIRE_THROWS_AS(tape.dropout(v, 1.0, true, rng), ParameterError);
}

TEST_CASE("batchnorm normalizes and tracks running statistics") {
    Rng rng(4);
    Tensor x = randn(6, 3, rng);
    Tensor gamma(1, 3, 1.0), beta(1, 3, 0.0);
    Tensor rmean(1, 3, 0.0), rvar(1, 3, 1.0);
    Tape tape;
    Tensor out = tape.value(tape.batchnorm(tape.leaf(x), tape.leaf(gamma), tape.leaf(beta),
                                           rmean, rvar, true, true));
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (int r = 0; r < 6; ++r) mean += out.at(r, c);
        mean /= 6.0;
        for (int r = 0; r < 6; ++r) var += (out.at(r, c) - mean) * (out.at(r, c) - mean);
        var /= 6.0;
        REQUIRE(mean == Catch::Approx(0.0).margin(1e-10));
        // The eps in the denominator shrinks the variance to v/(v+eps), so
        // unit variance holds only to ~1e-5; the margin still rules out an
        // unbiased-variance (n-1) mix-up, which would land near 0.83.
        REQUIRE(var == Catch::Approx(1.0).margin(1e-4));
    }
    // Running stats moved toward the batch stats.
    REQUIRE(rmean.data != Tensor(1, 3, 0.0).data);

    // Eval mode uses the running statistics, not the batch.
    Tensor rmean2 = rmean, rvar2 = rvar;
    Tape tape2;
    Tensor out2 = tape2.value(tape2.batchnorm(tape2.leaf(x), tape2.leaf(gamma),
                                              tape2.leaf(beta), rmean2, rvar2, false, false));
    REQUIRE(rmean2.data == rmean.data);
    for (int c = 0; c < 3; ++c)
        REQUIRE(out2.at(0, c) ==
                Catch::Approx((x.at(0, c) - rmean.at(0, c)) /
                              std::sqrt(rvar.at(0, c) + 1e-5)).epsilon(1e-10));
}

TEST_CASE("l2_normalize_rows yields unit rows and keeps zero rows") {
    Tape tape;
    Tensor x(2, 3);
    x.data = {3, 0, 4, 0, 0, 0};
    Tensor out = tape.value(tape.l2_normalize_rows(tape.leaf(x)));
    REQUIRE(out.at(0, 0) == Catch::Approx(0.6));
    REQUIRE(out.at(0, 2) == Catch::Approx(0.8));
    REQUIRE(out.at(1, 0) == 0.0);
    REQUIRE(out.at(1, 2) == 0.0);
}

TEST_CASE("requires_grad=false leaves report zero gradients") {
    Tape tape;
    Tensor x(1, 2, 3.0);
    auto frozen = tape.leaf(x, false);
    auto w = tape.leaf(Tensor(2, 1, 2.0));
    auto loss = tape.sum_all(tape.matmul(frozen, w));
    tape.backward(loss);
    REQUIRE(tape.grad(frozen).data == std::vector<real_t>{0.0, 0.0});
    REQUIRE(tape.grad(w).data == std::vector<real_t>{3.0, 3.0});
}

TEST_CASE("gradient checks per primitive") {
    Rng init(5);
    SECTION("matmul + relu + bias chain") {
        Tensor x = randn(4, 3, init), w = randn(3, 2, init), b = randn(1, 2, init);
        auto build = [&](Tape& t, std::vector<Tape::Var>& vars) {
            auto xv = t.leaf(x), wv = t.leaf(w), bv = t.leaf(b);
            vars = {xv, wv, bv};
            return t.sum_all(t.relu(t.add(t.matmul(xv, wv), bv)));
        };
        REQUIRE(gradient_check(build, {&x, &w, &b}) < 1e-6);
    }
    SECTION("swish, sigmoid, prelu, leaky_relu, scale") {
        Tensor x = randn(3, 3, init);
        Tensor slope = Tensor::scalar(0.3);
        auto build = [&](Tape& t, std::vector<Tape::Var>& vars) {
            auto xv = t.leaf(x);
            auto sv = t.leaf(slope);
            vars = {xv, sv};
            auto h = t.swish(t.sigmoid(t.leaky_relu(xv, 0.1)));
            return t.sum_all(t.scale(t.prelu(h, sv), 1.7));
        };
        REQUIRE(gradient_check(build, {&x, &slope}) < 1e-6);
    }
    SECTION("mul broadcast by row weights") {
        Tensor x = randn(4, 3, init), w = randn(4, 1, init);
        auto build = [&](Tape& t, std::vector<Tape::Var>& vars) {
            auto xv = t.leaf(x), wv = t.leaf(w);
            vars = {xv, wv};
            return t.sum_all(t.mul(xv, wv));
        };
        REQUIRE(gradient_check(build, {&x, &w}) < 1e-6);
    }
    SECTION("gather + segment aggregates") {
        Tensor x = randn(5, 2, init);
        std::vector<int> idx{0, 2, 2, 4, 1, 3};
        std::vector<int> seg{0, 1, 1, 0, 2, 2};
        for (Aggregation agg : {Aggregation::sum, Aggregation::mean, Aggregation::max}) {
            auto build = [&](Tape& t, std::vector<Tape::Var>& vars) {
                auto xv = t.leaf(x);
                vars = {xv};
                return t.sum_all(t.segment_aggregate(t.gather_rows(xv, idx), seg, 3, agg));
            };
            REQUIRE(gradient_check(build, {&x}) < 1e-6);
        }
    }
    SECTION("segment softmax attention pattern") {
        Tensor scores = randn(6, 1, init), msgs = randn(6, 3, init);
        std::vector<int> seg{0, 0, 1, 1, 1, 2};
        auto build = [&](Tape& t, std::vector<Tape::Var>& vars) {
            auto sv = t.leaf(scores), mv = t.leaf(msgs);
            vars = {sv, mv};
            auto w = t.segment_softmax(sv, seg, 3);
            return t.sum_all(t.segment_aggregate(t.mul(mv, w), seg, 3, Aggregation::sum));
        };
        REQUIRE(gradient_check(build, {&scores, &msgs}) < 1e-6);
    }
    SECTION("batchnorm training backward") {
        Tensor x = randn(5, 2, init), gamma(1, 2, 1.0), beta(1, 2, 0.0);
        auto build = [&](Tape& t, std::vector<Tape::Var>& vars) {
            Tensor rmean(1, 2, 0.0), rvar(1, 2, 1.0);  // updates suppressed
            auto xv = t.leaf(x), gv = t.leaf(gamma), bv = t.leaf(beta);
            vars = {xv, gv, bv};
            return t.sum_all(t.sigmoid(t.batchnorm(xv, gv, bv, rmean, rvar, true, false)));
        };
        REQUIRE(gradient_check(build, {&x, &gamma, &beta}) < 1e-5);
    }
    SECTION("dropout with a re-seeded mask") {
        Tensor x = randn(4, 4, init);
        auto build = [&](Tape& t, std::vector<Tape::Var>& vars) {
            Rng rng(99);  // same mask every call
            auto xv = t.leaf(x);
            vars = {xv};
            return t.sum_all(t.dropout(xv, 0.4, true, rng));
        };
        REQUIRE(gradient_check(build, {&x}) < 1e-6);
    }
    SECTION("l2 normalize + concat + cross entropy") {
        Tensor x = randn(3, 4, init), w = randn(4, 2, init);
        auto build = [&](Tape& t, std::vector<Tape::Var>& vars) {
            auto xv = t.leaf(x), wv = t.leaf(w);
            vars = {xv, wv};
            auto z = t.l2_normalize_rows(t.matmul(xv, wv));
            auto both = t.concat_cols(z, t.scale(z, -0.5));
            return t.softmax_cross_entropy(both, {0, 3, 1}, {0, 1, 2});
        };
        REQUIRE(gradient_check(build, {&x, &w}) < 1e-6);
    }
}
