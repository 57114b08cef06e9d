#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "gnnspace/tasks.hpp"

using namespace gnnspace;

namespace {

GraphSet tiny_set(Family family, std::uint64_t seed) {
    std::vector<Graph> graphs;
    for (std::uint64_t s = 0; s < 3; ++s) {
        graphs.push_back(family == Family::small_world
                             ? generate_small_world(12, 4, 0.3, seed + s)
                             : generate_scale_free(12, 2, 0.5, seed + s));
        if (!is_connected(graphs.back())) graphs.pop_back();
    }
    return make_graph_set(family, graphs);
}

}  // namespace

TEST_CASE("grid bin index uses half-open cells with a closed top edge") {
    REQUIRE(grid_bin_index(0.3, 0.3, 0.6, 4) == 0);
    REQUIRE(grid_bin_index(0.374, 0.3, 0.6, 4) == 0);
    REQUIRE(grid_bin_index(0.375, 0.3, 0.6, 4) == 1);
    REQUIRE(grid_bin_index(0.6, 0.3, 0.6, 4) == 3);  // top edge joins the last bin
    REQUIRE(grid_bin_index(0.61, 0.3, 0.6, 4) == -1);
    REQUIRE(grid_bin_index(0.29, 0.3, 0.6, 4) == -1);
}

TEST_CASE("build_labels implements tie-collapsed equal-frequency binning") {
    std::vector<double> seq;
    for (int i = 0; i < 100; ++i) seq.push_back(i);
    std::vector<int> labels = build_labels(seq, 10);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(labels[i] == i / 10);
        ++counts[labels[i]];
    }
    for (int c : counts) REQUIRE(c == 10);

    // All-equal values collapse into class 0.
    REQUIRE(build_labels(std::vector<double>(7, 3.14), 10) == std::vector<int>(7, 0));

    // {0.1,0.2,0.3,0.4} into 2 bins.
    REQUIRE(build_labels({0.1, 0.2, 0.3, 0.4}, 2) == std::vector<int>{0, 0, 1, 1});

    // Ties spanning a bin boundary share the earlier class.
    std::vector<int> tied = build_labels({1, 2, 2, 2, 3, 4}, 3);
    REQUIRE(tied[1] == tied[2]);
    REQUIRE(tied[2] == tied[3]);
}

TEST_CASE("build_features kinds and widths") {
    GraphSet gs = tiny_set(Family::small_world, 5);
    auto consts = build_features(gs, "const");
    REQUIRE(consts.front() == std::vector<double>{1.0});
    int max_n = 0;
    for (const auto& g : gs.graphs) max_n = std::max(max_n, g.num_nodes());
    auto onehot = build_features(gs, "onehot");
    REQUIRE(static_cast<int>(onehot.front().size()) == max_n);
    double sum = 0.0;
    for (double v : onehot[1]) sum += v;
    REQUIRE(sum == 1.0);
    REQUIRE(onehot[1][1] == 1.0);
    auto pr = build_features(gs, "pagerank");
    REQUIRE(pr.front().size() == 1);
    REQUIRE_THROWS_AS(build_features(gs, "degree"), ParameterError);
}

TEST_CASE("assemble_synthetic_tasks yields the 12+8 suite") {
    GraphSet sw = tiny_set(Family::small_world, 21);
    GraphSet sf = tiny_set(Family::scale_free, 22);
    std::vector<Task> tasks = assemble_synthetic_tasks(sw, sf, 10);
    REQUIRE(tasks.size() == 20);
    int node_tasks = 0, graph_tasks = 0;
    std::set<std::string> ids;
    for (const Task& t : tasks) {
        ids.insert(t.id);
        if (t.level == "node") ++node_tasks;
        if (t.level == "graph") ++graph_tasks;
        // No feature predicts itself.
        REQUIRE(t.id.find("clustering-clustering") == std::string::npos);
        REQUIRE(t.id.find("pagerank-pagerank") == std::string::npos);
    }
    REQUIRE(node_tasks == 12);
    REQUIRE(graph_tasks == 8);
    REQUIRE(ids.size() == 20);
    REQUIRE(ids.count("node-scalefree-const-pagerank") == 1);
    REQUIRE(ids.count("graph-smallworld-onehot-path") == 1);
}

TEST_CASE("link task id and validation") {
    GraphSet sw = tiny_set(Family::small_world, 31);
    Task t = build_link_task(sw);
    REQUIRE(t.id == "linkpred-smallworld-N/A-N/A");
    REQUIRE(t.level == "link");
    REQUIRE(t.metric == "roc_auc");
    REQUIRE(t.labels.empty());
    REQUIRE(t.feature_width() == 1);

    // A 5-cycle has 5 edges but exactly 5 non-edges; a triangle has none.
    GraphSet poor = make_graph_set(
        Family::small_world, {Graph(3, {{0, 1}, {1, 2}, {0, 2}})});
    REQUIRE_THROWS_AS(build_link_task(poor), DomainError);
}

TEST_CASE("splits are deterministic, disjoint, and clamped") {
    GraphSet sw = tiny_set(Family::small_world, 41);
    Task t = assemble_synthetic_tasks(sw, tiny_set(Family::scale_free, 42), 10).front();
    Split a = make_split(t, 0.8, 3), b = make_split(t, 0.8, 3), c = make_split(t, 0.8, 4);
    REQUIRE(a.train_idx == b.train_idx);
    REQUIRE(a.val_idx == b.val_idx);
    REQUIRE(a.train_idx != c.train_idx);

    int n = total_nodes(t.graphs);
    REQUIRE(static_cast<int>(a.train_idx.size() + a.val_idx.size()) == n);
    std::set<int> seen(a.train_idx.begin(), a.train_idx.end());
    for (int v : a.val_idx) REQUIRE(seen.insert(v).second);
    REQUIRE(static_cast<int>(a.train_idx.size()) == std::llround(0.8 * n));

    // Extreme ratios still leave both sides non-empty.
    Split tight = make_split(t, 0.999, 0);
    REQUIRE_FALSE(tight.val_idx.empty());
    REQUIRE_THROWS_AS(make_split(t, 1.0, 0), ParameterError);
}

TEST_CASE("link splits hold out edges per graph") {
    GraphSet sw = tiny_set(Family::small_world, 51);
    Task t = build_link_task(sw);
    Split s = make_split(t, 0.8, 1);
    int total_edges = 0;
    for (const auto& g : t.graphs) total_edges += g.num_edges();
    REQUIRE(static_cast<int>(s.train_idx.size() + s.val_idx.size()) == total_edges);
    // Each graph contributes round(0.2 * e) held-out edges.
    int base = 0;
    for (const auto& g : t.graphs) {
        int e = g.num_edges();
        long long held = std::clamp(std::llround(0.2 * e), 1LL, static_cast<long long>(e) - 1);
        int in_val = 0;
        for (int idx : s.val_idx)
            if (idx >= base && idx < base + e) ++in_val;
        REQUIRE(in_val == held);
        base += e;
    }
}

TEST_CASE("desk-scale grid fill covers the target ranges") {
    GridConfig cfg;
    cfg.grid = 2;
    cfg.per_bin = 1;
    cfg.n_lo = 24;
    cfg.n_hi = 40;
    GraphSet gs = fill_statistic_grid(Family::small_world, cfg, 7);
    REQUIRE(gs.graphs.size() == 4);
    std::set<std::pair<int, int>> bins;
    for (std::size_t i = 0; i < gs.graphs.size(); ++i) {
        REQUIRE(is_connected(gs.graphs[i]));
        REQUIRE(gs.stats[i].avg_clustering >= cfg.c_lo);
        REQUIRE(gs.stats[i].avg_clustering <= cfg.c_hi);
        REQUIRE(gs.stats[i].avg_path_length >= cfg.l_lo);
        REQUIRE(gs.stats[i].avg_path_length <= cfg.l_hi);
        bins.insert(gs.grid_bin[i]);
    }
    REQUIRE(bins.size() == 4);
}

TEST_CASE("exhausted budget raises a partial-fill error with gaps") {
    GridConfig cfg;
    cfg.grid = 8;
    cfg.per_bin = 4;
    cfg.budget = 20;  // nowhere near enough
    try {
        fill_statistic_grid(Family::small_world, cfg, 1);
        FAIL("expected PartialFillError");
    } catch (const PartialFillError& e) {
        REQUIRE_FALSE(e.unfilled_bins.empty());
        REQUIRE(e.partial_set.graphs.size() == e.partial_set.stats.size());
    }
}

TEST_CASE("task json round-trips through its own reader") {
    GraphSet sw = tiny_set(Family::small_world, 61);
    GraphSet sf = tiny_set(Family::scale_free, 62);
    for (Task& t : assemble_synthetic_tasks(sw, sf, 4)) {
        std::string path = "roundtrip_task.json";
        save_task(t, path);
        Task back = load_external_task(path);
        REQUIRE(back.id == t.id);
        REQUIRE(back.level == t.level);
        REQUIRE(back.num_classes == t.num_classes);
        REQUIRE(back.features == t.features);
        REQUIRE(back.labels == t.labels);
        REQUIRE(back.graphs.size() == t.graphs.size());
        for (std::size_t i = 0; i < t.graphs.size(); ++i)
            REQUIRE(back.graphs[i].edges() == t.graphs[i].edges());
        std::remove(path.c_str());
        break;  // one round trip per suite is enough here
    }
}

TEST_CASE("task json validation rejects malformed input") {
    nlohmann::ordered_json j;
    j["id"] = "node-smallworld-const-pagerank";
    j["level"] = "node";
    j["num_classes"] = 4;
    j["metric"] = "accuracy";
    j["graphs"] = nlohmann::ordered_json::array();
    nlohmann::ordered_json g;
    g["n"] = 3;
    g["edges"] = nlohmann::ordered_json::array({{0, 1}, {1, 2}});
    j["graphs"].push_back(g);
    j["features"] = {{1.0}, {1.0}, {1.0}};
    j["labels"] = {0, 1, 2};
    REQUIRE_NOTHROW(task_from_json(j));

    auto bad = j;
    bad["labels"] = {0, 1, 9};  // label out of class range
    REQUIRE_THROWS_AS(task_from_json(bad), ParseError);
    bad = j;
    bad["features"] = {{1.0}, {1.0}};  // feature count != node count
    REQUIRE_THROWS_AS(task_from_json(bad), ParseError);
    bad = j;
    bad["level"] = "edge";
    REQUIRE_THROWS_AS(task_from_json(bad), ParseError);
    bad = j;
    bad.erase("metric");
    REQUIRE_THROWS_AS(task_from_json(bad), ParseError);
}
