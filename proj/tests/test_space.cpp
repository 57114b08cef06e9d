#include <catch_amalgamated.hpp>

#include <set>
#include <string>

#include "gnnspace/space.hpp"

using namespace gnnspace;

TEST_CASE("full space cardinality is the dimension product") {
    SpaceSpec space = full_space();
    // 2*3*3*3*3 * 2*4*2*3 * 3*2*3 * 1 = 314928.
    REQUIRE(space.cardinality() == 314928ULL);
    REQUIRE(space.has_dimension("agg"));
    REQUIRE(space.choices("conn") == std::vector<std::string>{"stack", "skip_sum", "skip_cat"});
    // 32-task experiment space.
    REQUIRE(space.cardinality() * 32 == 10077696ULL);
}

TEST_CASE("condensed space has 96 designs with seven dimensions pinned") {
    SpaceSpec space = condensed_space();
    REQUIRE(space.cardinality() == 96ULL);
    for (const char* fixed : {"bn", "dropout", "act", "batch", "lr", "opt", "epochs"})
        REQUIRE(space.choices(fixed).size() == 1);
    REQUIRE(space.choices("mp") == std::vector<std::string>{"2", "4", "6", "8"});
    REQUIRE(space.choices("conn") == std::vector<std::string>{"skip_sum", "skip_cat"});
}

TEST_CASE("attention extension multiplies the space by 3") {
    SpaceSpec extended =
        full_space().with_choices("attention", {"none", "additive", "multiplicative"});
    REQUIRE(extended.cardinality() == 944784ULL);
}

TEST_CASE("with_choices can append a new dimension") {
    SpaceSpec space = condensed_space().with_choices("widget", {"a", "b", "c"});
    REQUIRE(space.cardinality() == 96ULL * 3);
    REQUIRE(space.choices("widget").size() == 3);
    REQUIRE_THROWS_AS(space.choices("missing"), ParameterError);
}

TEST_CASE("enumeration visits every design exactly once") {
    SpaceSpec space = condensed_space();
    SpaceEnumerator en(space);
    Design d;
    std::set<std::string> seen;
    while (en.next(d)) seen.insert(design_id(d));
    REQUIRE(seen.size() == 96);
}

TEST_CASE("enumerate_designs matches the enumerator") {
    std::vector<Design> all = enumerate_designs(condensed_space());
    REQUIRE(all.size() == 96);
    REQUIRE(design_id(all.front()) != design_id(all.back()));
}

TEST_CASE("sampling is deterministic and in-space") {
    SpaceSpec space = condensed_space();
    std::vector<Design> a = sample_designs(space, 20, 7);
    std::vector<Design> b = sample_designs(space, 20, 7);
    std::vector<Design> c = sample_designs(space, 20, 8);
    REQUIRE(a.size() == 20);
    bool same = true, diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same &= design_id(a[i]) == design_id(b[i]);
        diff |= design_id(a[i]) != design_id(c[i]);
    }
    REQUIRE(same);
    REQUIRE(diff);
    // Every sampled token set belongs to the space.
    std::set<std::string> ids;
    for (const Design& d : enumerate_designs(space)) ids.insert(design_id(d));
    for (const Design& d : a) REQUIRE(ids.count(design_id(d)) == 1);
}

TEST_CASE("space serializes to json and back") {
    SpaceSpec space = condensed_space();
    nlohmann::ordered_json j = space_to_json(space);
    SpaceSpec back = space_from_json(j);
    REQUIRE(back.cardinality() == space.cardinality());
    REQUIRE(back.choices("agg") == space.choices("agg"));
    nlohmann::ordered_json bad;
    bad["dim"] = nlohmann::ordered_json::array();
    REQUIRE_THROWS_AS(space_from_json(bad), ParseError);
}
