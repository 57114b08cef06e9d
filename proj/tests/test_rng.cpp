#include <catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "gnnspace/rng.hpp"

using namespace gnnspace;

TEST_CASE("rng streams are deterministic") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    Rng c(43);
    REQUIRE(Rng(42).next_u64() != c.next_u64());
}

TEST_CASE("next_double stays in [0, 1)") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        double v = rng.next_double();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("uniform_below respects the bound and hits every value") {
    Rng rng(3);
    std::vector<int> hits(5, 0);
    for (int i = 0; i < 5000; ++i) {
        std::uint64_t v = rng.uniform_below(5);
        REQUIRE(v < 5);
        ++hits[v];
    }
    for (int h : hits) REQUIRE(h > 0);
}

TEST_CASE("uniform_int is inclusive on both ends") {
    Rng rng(11);
    bool lo = false, hi = false;
    for (int i = 0; i < 2000; ++i) {
        int v = rng.uniform_int(-2, 3);
        REQUIRE(v >= -2);
        REQUIRE(v <= 3);
        lo |= v == -2;
        hi |= v == 3;
    }
    REQUIRE(lo);
    REQUIRE(hi);
}

TEST_CASE("shuffle permutes without loss") {
    Rng rng(5);
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> sorted = v;
    rng.shuffle(v);
    std::vector<int> copy = v;
    std::sort(copy.begin(), copy.end());
    REQUIRE(copy == sorted);
    // Identity shuffle of 8 elements has probability 1/8!, so a fixed seed
    // producing it would be a frozen coincidence; this one does not.
    REQUIRE(v != sorted);
}

TEST_CASE("mix_seed decorrelates numeric and named streams") {
    REQUIRE(mix_seed(1, std::uint64_t{0}) != mix_seed(1, std::uint64_t{1}));
    REQUIRE(mix_seed(1, "order") != mix_seed(1, "dropout"));
    REQUIRE(mix_seed(1, "order") == mix_seed(1, "order"));
    REQUIRE(mix_seed(1, "order") != mix_seed(2, "order"));
}

TEST_CASE("bernoulli respects edge probabilities") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) REQUIRE_FALSE(rng.bernoulli(0.0));
    int heads = 0;
    for (int i = 0; i < 10000; ++i) heads += rng.bernoulli(0.5) ? 1 : 0;
    REQUIRE(heads > 4500);
    REQUIRE(heads < 5500);
}
