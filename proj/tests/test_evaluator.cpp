#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "gnnspace/evaluator.hpp"

using namespace gnnspace;

namespace {

std::string token_of(const TokenDesign& d, const std::string& dim) {
    for (const auto& [name, tok] : d)
        if (name == dim) return tok;
    FAIL("dimension not present: " + dim);
    return "";
}

}  // namespace

TEST_CASE("rank_choices implements epsilon competition ranking") {
    // Higher is better; 0.90 and 0.89 tie at eps=0.02 and share rank 1.
    REQUIRE(rank_choices({0.90, 0.89, 0.50}, 0.02) == std::vector<int>{1, 1, 3});
    REQUIRE(rank_choices({0.50, 0.89, 0.90}, 0.02) == std::vector<int>{3, 1, 1});
    REQUIRE(rank_choices({0.90, 0.85, 0.50}, 0.02) == std::vector<int>{1, 2, 3});
    REQUIRE(rank_choices({0.7, 0.7, 0.7}, 0.0) == std::vector<int>{1, 1, 1});
    REQUIRE_THROWS_AS(rank_choices({0.5, 0.4}, -0.1), ParameterError);
}

TEST_CASE("two-choice tie fraction recovers 41 percent") {
    REQUIRE(two_choice_tie_fraction(1.15, 1.44) == Catch::Approx(0.41).epsilon(1e-12));
    REQUIRE(two_choice_tie_fraction(1.0, 2.0) == 0.0);
    REQUIRE(two_choice_tie_fraction(1.0, 1.0) == 1.0);
    REQUIRE_THROWS_AS(two_choice_tie_fraction(1.0, 0.5), DomainError);
}

TEST_CASE("crs plan pairs setups across choices") {
    SpaceSpec space = condensed_space();
    std::vector<std::string> tasks{"task-a", "task-b", "task-c"};
    CrsPlan plan = make_crs_plan(space, tasks, "agg", 16, 5);
    REQUIRE(plan.choices == std::vector<std::string>{"mean", "max", "sum"});
    REQUIRE(plan.num_setups() == 16);
    for (std::size_t s = 0; s < plan.num_setups(); ++s) {
        TokenDesign a = plan.variant(s, "mean");
        TokenDesign b = plan.variant(s, "sum");
        REQUIRE(token_of(a, "agg") == "mean");
        REQUIRE(token_of(b, "agg") == "sum");
        // Everything except the studied dimension is identical.
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].first == "agg") continue;
            REQUIRE(a[i] == b[i]);
        }
    }
    // Same seed, same plan; unknown dimension rejected.
    CrsPlan again = make_crs_plan(space, tasks, "agg", 16, 5);
    REQUIRE(again.task_ids == plan.task_ids);
    REQUIRE_THROWS_AS(make_crs_plan(space, tasks, "flux", 4, 0), ParameterError);
}

TEST_CASE("mocked evaluator: a dominant choice gets mean rank 1") {
    SpaceSpec space = condensed_space();
    CrsPlan plan = make_crs_plan(space, {"t"}, "agg", 12, 1);
    auto eval = [](const TokenDesign& d, const std::string&) {
        std::string agg;
        for (const auto& [dim, tok] : d)
            if (dim == "agg") agg = tok;
        return agg == "sum" ? 0.9 : 0.5;
    };
    CrsResults results = execute_crs(plan, eval);
    auto dists = aggregate_ranks(plan, results, 0.02);
    REQUIRE(dists.front().choice == "sum");
    REQUIRE(dists.front().mean_rank == 1.0);
    for (std::size_t i = 1; i < dists.size(); ++i) REQUIRE(dists[i].mean_rank >= 2.0);
    // Histogram: the winner holds rank 1 in all 12 setups.
    REQUIRE(dists.front().histogram[0] == 12);
}

TEST_CASE("aggregate_ranks flags missing setups") {
    SpaceSpec space = condensed_space();
    CrsPlan plan = make_crs_plan(space, {"t"}, "conn", 4, 2);
    CrsResults results;
    results.values = {{0.5, 0.6}, {0.7, 0.7}};  // 2 of 4 setups
    REQUIRE_THROWS_AS(aggregate_ranks(plan, results, 0.02), AggregationError);
    results.values = {{0.5, 0.6}, {0.7, 0.7}, {0.1, std::nan("")}, {0.2, 0.3}};
    REQUIRE_THROWS_WITH(aggregate_ranks(plan, results, 0.02),
                        Catch::Matchers::ContainsSubstring("2"));
}

TEST_CASE("crs anova groups by choice") {
    SpaceSpec space = condensed_space();
    CrsPlan plan = make_crs_plan(space, {"t"}, "pre_mp", 3, 3);
    CrsResults results;
    results.values = {{1, 2}, {2, 3}, {3, 4}};
    AnovaResult r = crs_anova(plan, results, false, 0.02);
    REQUIRE(r.df_between == 1);
    REQUIRE(r.df_within == 4);
    // Groups {1,2,3} vs {2,3,4}: ssb = 1.5, ssw = 4, F = 1.5/(4/4).
    REQUIRE(r.f_stat == Catch::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("crs csv and json round trip") {
    SpaceSpec space = condensed_space();
    CrsPlan plan = make_crs_plan(space, {"alpha", "beta"}, "agg", 5, 9);
    auto eval = [](const TokenDesign& d, const std::string& task) {
        return (token_design_id(d).size() % 7) / 10.0 + (task == "alpha" ? 0.05 : 0.0);
    };
    CrsResults results = execute_crs(plan, eval);
    auto dists = aggregate_ranks(plan, results, 0.02);
    write_crs_csv("crs_test.csv", plan.dimension, dists);
    write_crs_json("crs_test.json", plan, results, 0.02);

    auto [plan2, results2] = read_crs_json("crs_test.json");
    REQUIRE(plan2.dimension == plan.dimension);
    REQUIRE(plan2.choices == plan.choices);
    REQUIRE(plan2.task_ids == plan.task_ids);
    REQUIRE(results2.values == results.values);
    auto dists2 = aggregate_ranks(plan2, results2, 0.02);
    for (std::size_t i = 0; i < dists.size(); ++i) {
        REQUIRE(dists2[i].choice == dists[i].choice);
        REQUIRE(dists2[i].mean_rank == dists[i].mean_rank);
        REQUIRE(dists2[i].histogram == dists[i].histogram);
    }
    std::remove("crs_test.csv");
    std::remove("crs_test.json");
}

TEST_CASE("design_from_tokens applies every dimension") {
    TokenDesign td;
    for (const auto& [dim, tok] : design_tokens(reference_design())) td.emplace_back(dim, tok);
    Design d = design_from_tokens(td);
    REQUIRE(design_id(d) == design_id(reference_design()));
    REQUIRE(token_design_id(td) == design_id(reference_design()));
}
