#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gnnspace/error.hpp"
#include "gnnspace/graph.hpp"
#include "gnnspace/rng.hpp"

namespace gnnspace {

enum class Family { small_world, scale_free };

// Dataset token used in task ids.
inline std::string family_name(Family f) {
    return f == Family::small_world ? "smallworld" : "scalefree";
}

// Connected graphs bucketed on the (avg clustering, avg path length) grid,
// with per-graph statistics cached for feature/label construction.
struct GraphSet {
    Family family = Family::small_world;
    std::vector<Graph> graphs;
    std::vector<std::pair<int, int>> grid_bin;  // (clustering bin, path bin)
    std::vector<GraphStats> stats;
};

// Grid filling ran out of budget; carries whatever was collected so
// desk-scale pipelines can proceed with a partial set.
class PartialFillError : public Error {
public:
    PartialFillError(const std::string& msg, GraphSet partial,
                     std::vector<std::pair<int, int>> unfilled)
        : Error(msg), partial_set(std::move(partial)), unfilled_bins(std::move(unfilled)) {}
    GraphSet partial_set;
    std::vector<std::pair<int, int>> unfilled_bins;
};

struct GridConfig {
    double c_lo = 0.3, c_hi = 0.6;   // avg clustering coefficient range
    double l_lo = 1.8, l_hi = 3.0;   // avg path length range
    int grid = 8;                    // grid x grid bins
    int per_bin = 4;                 // graphs per bin
    int n_lo = 32, n_hi = 64;        // node count range
    long long budget = 50000;        // generation attempts
};

// Bin index with half-open cells; the top edge belongs to the last bin.
inline int grid_bin_index(double v, double lo, double hi, int bins) {
    if (v < lo || v > hi) return -1;
    if (v == hi) return bins - 1;
    return static_cast<int>((v - lo) / (hi - lo) * bins);
}

// Rejection-sample generator draws until every (C, L) bin holds per_bin
// connected graphs. Disconnected samples and out-of-range statistics are
// discarded; a full bin discards surplus hits. Runs out of budget →
// PartialFillError carrying the partial set and the unfilled bins.
inline GraphSet fill_statistic_grid(Family family, const GridConfig& cfg, std::uint64_t seed) {
    if (cfg.grid < 1 || cfg.per_bin < 1) throw ParameterError("fill_grid: grid/per_bin must be >= 1");
    if (cfg.n_lo < 4 || cfg.n_hi < cfg.n_lo) throw ParameterError("fill_grid: bad node range");
    Rng rng(seed);
    GraphSet gs;
    gs.family = family;
    std::vector<int> fill(static_cast<std::size_t>(cfg.grid) * cfg.grid, 0);
    int full_bins = 0;
    const int total_bins = cfg.grid * cfg.grid;
    const std::vector<int> ws_k{2, 4, 6};
    const std::vector<int> hk_m{1, 2, 3};
    for (long long attempt = 0; attempt < cfg.budget && full_bins < total_bins; ++attempt) {
        int n = rng.uniform_int(cfg.n_lo, cfg.n_hi);
        Graph g = [&] {
            if (family == Family::small_world) {
                int k = rng.choice(ws_k);
                return generate_small_world(n, k, rng.next_double(), rng.next_u64());
            }
            int m = rng.choice(hk_m);
            return generate_scale_free(n, m, rng.next_double(), rng.next_u64());
        }();
        if (!is_connected(g)) continue;
        auto nc = node_clustering(g);
        double c = std::accumulate(nc.begin(), nc.end(), 0.0) / static_cast<double>(nc.size());
        int cb = grid_bin_index(c, cfg.c_lo, cfg.c_hi, cfg.grid);
        if (cb < 0) continue;
        double l = avg_path_length(g);
        int lb = grid_bin_index(l, cfg.l_lo, cfg.l_hi, cfg.grid);
        if (lb < 0) continue;
        int& count = fill[static_cast<std::size_t>(cb) * cfg.grid + lb];
        if (count >= cfg.per_bin) continue;
        ++count;
        if (count == cfg.per_bin) ++full_bins;
        GraphStats st;
        st.node_clustering = std::move(nc);
        st.avg_clustering = c;
        st.avg_path_length = l;
        st.pagerank = pagerank(g);
        gs.graphs.push_back(std::move(g));
        gs.grid_bin.emplace_back(cb, lb);
        gs.stats.push_back(std::move(st));
    }
    if (full_bins < total_bins) {
        std::vector<std::pair<int, int>> unfilled;
        for (int cb = 0; cb < cfg.grid; ++cb)
            for (int lb = 0; lb < cfg.grid; ++lb)
                if (fill[static_cast<std::size_t>(cb) * cfg.grid + lb] < cfg.per_bin)
                    unfilled.emplace_back(cb, lb);
        throw PartialFillError("fill_grid: budget exhausted with " +
                                   std::to_string(unfilled.size()) + " of " +
                                   std::to_string(total_bins) + " bins unfilled",
                               std::move(gs), std::move(unfilled));
    }
    return gs;
}

// Wrap pre-built graphs into a set (statistics computed here); grid bins
// are unassigned. Used for toy fixtures and ingestion paths.
inline GraphSet make_graph_set(Family family, std::vector<Graph> graphs) {
    if (graphs.empty()) throw ParameterError("graph set: needs at least one graph");
    GraphSet gs;
    gs.family = family;
    for (auto& g : graphs) {
        if (!is_connected(g)) throw ParameterError("graph set: graphs must be connected");
        gs.stats.push_back(compute_stats(g));
        gs.grid_bin.emplace_back(-1, -1);
        gs.graphs.push_back(std::move(g));
    }
    return gs;
}

inline int total_nodes(const std::vector<Graph>& graphs) {
    int n = 0;
    for (const auto& g : graphs) n += g.num_nodes();
    return n;
}

// Per-node feature rows across the whole set, in graph order. onehot width
// is the maximum node count over the set; the statistics kinds are width 1.
inline std::vector<std::vector<double>> build_features(const GraphSet& gs,
                                                       const std::string& kind) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(total_nodes(gs.graphs)));
    int max_n = 0;
    for (const auto& g : gs.graphs) max_n = std::max(max_n, g.num_nodes());
    for (std::size_t gi = 0; gi < gs.graphs.size(); ++gi) {
        const Graph& g = gs.graphs[gi];
        for (int v = 0; v < g.num_nodes(); ++v) {
            if (kind == "const") {
                rows.push_back({1.0});
            } else if (kind == "onehot") {
                std::vector<double> row(static_cast<std::size_t>(max_n), 0.0);
                row[static_cast<std::size_t>(v)] = 1.0;
                rows.push_back(std::move(row));
            } else if (kind == "clustering") {
                rows.push_back({gs.stats[gi].node_clustering[static_cast<std::size_t>(v)]});
            } else if (kind == "pagerank") {
                rows.push_back({gs.stats[gi].pagerank[static_cast<std::size_t>(v)]});
            } else {
                throw ParameterError("build_features: unknown kind '" + kind + "'");
            }
        }
    }
    return rows;
}

// Equal-frequency binning into integer classes. Tied values collapse into
// the class of their first occurrence under a stable (value, index) sort,
// so identical values always share a class.
inline std::vector<int> build_labels(const std::vector<double>& values, int bins = 10) {
    if (bins < 1) throw ParameterError("build_labels: bins must be >= 1");
    if (values.empty()) throw ParameterError("build_labels: empty values");
    std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<int> labels(n, 0);
    std::size_t first_of_run = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (p > 0 && values[order[p]] != values[order[p - 1]]) first_of_run = p;
        labels[order[p]] =
            static_cast<int>(first_of_run * static_cast<std::size_t>(bins) / n);
    }
    return labels;
}

// A dataset with its prediction level and metric; features/labels are flat
// over graphs in order (node labels per node, graph labels per graph, link
// tasks carry no labels — positives/negatives realize from the split seed).
struct Task {
    std::string id;
    std::string level;    // node | graph | link
    int num_classes = 2;
    std::string metric;   // accuracy | roc_auc
    std::vector<Graph> graphs;
    std::vector<std::vector<double>> features;
    std::vector<int> labels;

    int feature_width() const {
        return features.empty() ? 0 : static_cast<int>(features.front().size());
    }
};

namespace detail {

inline std::vector<double> node_statistic(const GraphSet& gs, const std::string& kind) {
    std::vector<double> vals;
    for (std::size_t gi = 0; gi < gs.graphs.size(); ++gi) {
        const auto& src = kind == "clustering" ? gs.stats[gi].node_clustering
                                               : gs.stats[gi].pagerank;
        vals.insert(vals.end(), src.begin(), src.end());
    }
    return vals;
}

inline Task make_node_task(const GraphSet& gs, const std::string& feature,
                           const std::string& label, int bins) {
    Task t;
    t.id = "node-" + family_name(gs.family) + "-" + feature + "-" + label;
    t.level = "node";
    t.num_classes = bins;
    t.metric = "accuracy";
    t.graphs = gs.graphs;
    t.features = build_features(gs, feature);
    t.labels = build_labels(node_statistic(gs, label), bins);
    return t;
}

inline Task make_graph_task(const GraphSet& gs, const std::string& feature, int bins) {
    Task t;
    t.id = "graph-" + family_name(gs.family) + "-" + feature + "-path";
    t.level = "graph";
    t.num_classes = bins;
    t.metric = "accuracy";
    t.graphs = gs.graphs;
    t.features = build_features(gs, feature);
    std::vector<double> path_lengths;
    for (const auto& st : gs.stats) path_lengths.push_back(st.avg_path_length);
    t.labels = build_labels(path_lengths, bins);
    return t;
}

}  // namespace detail

// The synthetic suite: per family, node tasks over {const, onehot,
// clustering, pagerank} features x {clustering, pagerank} labels minus the
// two same-feature-label combinations (6 each), plus graph tasks over the
// four features with binned-path labels (4 each) — 12 + 8 = 20.
inline std::vector<Task> assemble_synthetic_tasks(const GraphSet& sw, const GraphSet& sf,
                                                  int bins = 10) {
    const std::vector<std::string> features{"const", "onehot", "clustering", "pagerank"};
    const std::vector<std::string> node_labels{"clustering", "pagerank"};
    std::vector<Task> tasks;
    for (const GraphSet* gs : {&sw, &sf})
        for (const auto& f : features)
            for (const auto& l : node_labels) {
                if (f == l) continue;
                tasks.push_back(detail::make_node_task(*gs, f, l, bins));
            }
    for (const GraphSet* gs : {&sw, &sf})
        for (const auto& f : features) tasks.push_back(detail::make_graph_task(*gs, f, bins));
    return tasks;
}

// Link-prediction task over a graph set: const node features, ROC AUC, no
// stored labels. Validates that every graph can give up the holdout
// fraction of edges and still has enough non-edges for 1:1 negatives.
inline Task build_link_task(const GraphSet& gs, double holdout = 0.2,
                            std::uint64_t seed = 0) {
    (void)seed;  // realization happens per split seed
    if (holdout <= 0.0 || holdout >= 1.0)
        throw ParameterError("link task: holdout must be in (0,1)");
    for (std::size_t gi = 0; gi < gs.graphs.size(); ++gi) {
        const Graph& g = gs.graphs[gi];
        long long e = g.num_edges();
        if (e < 5)
            throw DomainError("link task: graph " + std::to_string(gi) + " has " +
                              std::to_string(e) + " edges, need >= 5");
        long long held = std::llround(holdout * static_cast<double>(e));
        held = std::clamp(held, 1LL, e - 1);
        long long non_edges =
            static_cast<long long>(g.num_nodes()) * (g.num_nodes() - 1) / 2 - e;
        if (non_edges < held)
            throw DomainError("link task: graph " + std::to_string(gi) +
                              " lacks non-edges for negative sampling");
    }
    Task t;
    t.id = "linkpred-" + family_name(gs.family) + "-N/A-N/A";
    t.level = "link";
    t.num_classes = 2;
    t.metric = "roc_auc";
    t.graphs = gs.graphs;
    t.features = build_features(gs, "const");
    return t;
}

// Train/val membership over the task's unit set: node indices (global
// across graphs, transductive), graph indices, or edge indices (per-graph
// holdout for link tasks).
struct Split {
    std::uint64_t seed = 0;
    std::vector<int> train_idx;
    std::vector<int> val_idx;
};

inline Split make_split(const Task& task, double ratio, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) throw ParameterError("split: ratio must be in (0,1)");
    Split s;
    s.seed = seed;
    // Keyed by seed and purpose only: content-identical tasks split the
    // same way under the same seed, whatever they are called.
    Rng rng(mix_seed(seed, "split"));
    if (task.level == "link") {
        // Hold out (1-ratio) of each graph's edges as validation positives;
        // message passing later uses only the train edges.
        int base = 0;
        for (const auto& g : task.graphs) {
            int e = g.num_edges();
            std::vector<int> ids(static_cast<std::size_t>(e));
            std::iota(ids.begin(), ids.end(), 0);
            rng.shuffle(ids);
            long long held = std::llround((1.0 - ratio) * e);
            held = std::clamp(held, 1LL, static_cast<long long>(e) - 1);
            for (int i = 0; i < e; ++i) {
                if (i < held) s.val_idx.push_back(base + ids[static_cast<std::size_t>(i)]);
                else s.train_idx.push_back(base + ids[static_cast<std::size_t>(i)]);
            }
            base += e;
        }
    } else {
        int n = task.level == "node" ? total_nodes(task.graphs)
                                     : static_cast<int>(task.graphs.size());
        if (n < 2) throw ParameterError("split: need at least 2 units");
        std::vector<int> ids(static_cast<std::size_t>(n));
        std::iota(ids.begin(), ids.end(), 0);
        rng.shuffle(ids);
        long long train = std::clamp(std::llround(ratio * n), 1LL,
                                     static_cast<long long>(n) - 1);
        s.train_idx.assign(ids.begin(), ids.begin() + train);
        s.val_idx.assign(ids.begin() + train, ids.end());
    }
    std::sort(s.train_idx.begin(), s.train_idx.end());
    std::sort(s.val_idx.begin(), s.val_idx.end());
    return s;
}

// --- JSON serialization ---

inline nlohmann::ordered_json graph_to_json(const Graph& g) {
    nlohmann::ordered_json j;
    j["n"] = g.num_nodes();
    auto edges = nlohmann::ordered_json::array();
    for (auto [u, v] : g.edges()) edges.push_back({u, v});
    j["edges"] = std::move(edges);
    return j;
}

inline Graph graph_from_json(const nlohmann::ordered_json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("n") || !j.contains("edges"))
        throw ParseError(where + ": graph needs n and edges");
    if (!j["n"].is_number_integer()) throw ParseError(where + "/n: expected integer");
    std::vector<std::pair<int, int>> edges;
    const auto& je = j["edges"];
    if (!je.is_array()) throw ParseError(where + "/edges: expected array");
    for (std::size_t i = 0; i < je.size(); ++i) {
        const auto& e = je[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer())
            throw ParseError(where + "/edges/" + std::to_string(i) + ": expected [u,v]");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    try {
        return Graph(j["n"].get<int>(), std::move(edges));
    } catch (const Error& err) {
        throw ParseError(where + ": " + err.what());
    }
}

inline nlohmann::ordered_json task_to_json(const Task& t) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["level"] = t.level;
    j["num_classes"] = t.num_classes;
    j["metric"] = t.metric;
    auto graphs = nlohmann::ordered_json::array();
    for (const auto& g : t.graphs) graphs.push_back(graph_to_json(g));
    j["graphs"] = std::move(graphs);
    j["features"] = t.features;
    j["labels"] = t.labels;
    return j;
}

inline Task task_from_json(const nlohmann::ordered_json& j) {
    for (const char* key : {"id", "level", "num_classes", "metric", "graphs", "features",
                            "labels"})
        if (!j.contains(key)) throw ParseError(std::string("/") + key + ": missing field");
    Task t;
    t.id = j["id"].get<std::string>();
    t.level = j["level"].get<std::string>();
    if (t.level != "node" && t.level != "graph" && t.level != "link")
        throw ParseError("/level: expected node|graph|link, got '" + t.level + "'");
    t.num_classes = j["num_classes"].get<int>();
    if (t.num_classes < 2) throw ParseError("/num_classes: must be >= 2");
    t.metric = j["metric"].get<std::string>();
    if (t.metric != "accuracy" && t.metric != "roc_auc")
        throw ParseError("/metric: expected accuracy|roc_auc, got '" + t.metric + "'");
    const auto& jg = j["graphs"];
    if (!jg.is_array() || jg.empty()) throw ParseError("/graphs: expected non-empty array");
    for (std::size_t i = 0; i < jg.size(); ++i)
        t.graphs.push_back(graph_from_json(jg[i], "/graphs/" + std::to_string(i)));
    const auto& jf = j["features"];
    if (!jf.is_array()) throw ParseError("/features: expected array");
    int n_nodes = total_nodes(t.graphs);
    if (static_cast<int>(jf.size()) != n_nodes)
        throw ParseError("/features: " + std::to_string(jf.size()) + " rows for " +
                         std::to_string(n_nodes) + " nodes");
    std::size_t width = 0;
    for (std::size_t i = 0; i < jf.size(); ++i) {
        if (!jf[i].is_array() || jf[i].empty())
            throw ParseError("/features/" + std::to_string(i) + ": expected non-empty array");
        if (i == 0) width = jf[i].size();
        else if (jf[i].size() != width)
            throw ParseError("/features/" + std::to_string(i) + ": width " +
                             std::to_string(jf[i].size()) + " != " + std::to_string(width));
        t.features.push_back(jf[i].get<std::vector<double>>());
    }
    const auto& jl = j["labels"];
    if (!jl.is_array()) throw ParseError("/labels: expected array");
    int expected = t.level == "node" ? n_nodes
                   : t.level == "graph" ? static_cast<int>(t.graphs.size())
                                        : 0;
    if (static_cast<int>(jl.size()) != expected)
        throw ParseError("/labels: " + std::to_string(jl.size()) + " entries, expected " +
                         std::to_string(expected));
    for (std::size_t i = 0; i < jl.size(); ++i) {
        if (!jl[i].is_number_integer())
            throw ParseError("/labels/" + std::to_string(i) + ": expected integer");
        int y = jl[i].get<int>();
        if (y < 0 || y >= t.num_classes)
            throw ParseError("/labels/" + std::to_string(i) + ": class " + std::to_string(y) +
                             " out of range [0," + std::to_string(t.num_classes) + ")");
        t.labels.push_back(y);
    }
    return t;
}

inline void save_task(const Task& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParameterError("save_task: cannot open " + path);
    out << task_to_json(t).dump(2) << "\n";
}

inline Task load_external_task(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("load_task: cannot open " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_task: " + path + ": " + e.what());
    }
    return task_from_json(j);
}

}  // namespace gnnspace
