#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gnnspace/error.hpp"
#include "gnnspace/rng.hpp"

namespace gnnspace {

// Undirected simple graph. Edges are stored canonically as (u, v) with u < v,
// sorted lexicographically; adjacency lists are sorted. Immutable once built.
class Graph {
public:
    Graph(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
        if (n < 1) throw ParameterError("graph: node count must be >= 1");
        adj_.resize(static_cast<std::size_t>(n));
        for (auto& [u, v] : edges) {
            if (u == v) throw ParameterError("graph: self-loop at node " + std::to_string(u));
            if (u < 0 || v < 0 || u >= n || v >= n)
                throw ParameterError("graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                                     ") out of range");
            if (u > v) std::swap(u, v);
        }
        std::sort(edges.begin(), edges.end());
        if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
            throw ParameterError("graph: duplicate edge");
        edges_ = std::move(edges);
        for (auto [u, v] : edges_) {
            adj_[static_cast<std::size_t>(u)].push_back(v);
            adj_[static_cast<std::size_t>(v)].push_back(u);
        }
        for (auto& a : adj_) std::sort(a.begin(), a.end());
    }

    int num_nodes() const { return n_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int v) const { return adj_[static_cast<std::size_t>(v)]; }
    int degree(int v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }

    bool has_edge(int u, int v) const {
        const auto& a = adj_[static_cast<std::size_t>(u)];
        return std::binary_search(a.begin(), a.end(), v);
    }

private:
    int n_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adj_;
};

// Mutable adjacency used only while generators run; finalized into a Graph.
class GraphBuilder {
public:
    explicit GraphBuilder(int n) : n_(n), adj_(static_cast<std::size_t>(n)) {}

    bool has_edge(int u, int v) const { return adj_[static_cast<std::size_t>(u)].count(v) > 0; }
    int degree(int v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }
    const std::set<int>& neighbors(int v) const { return adj_[static_cast<std::size_t>(v)]; }

    void add_edge(int u, int v) {
        adj_[static_cast<std::size_t>(u)].insert(v);
        adj_[static_cast<std::size_t>(v)].insert(u);
    }
    void remove_edge(int u, int v) {
        adj_[static_cast<std::size_t>(u)].erase(v);
        adj_[static_cast<std::size_t>(v)].erase(u);
    }

    Graph build() const {
        std::vector<std::pair<int, int>> edges;
        for (int u = 0; u < n_; ++u)
            for (int v : adj_[static_cast<std::size_t>(u)])
                if (u < v) edges.emplace_back(u, v);
        return Graph(n_, std::move(edges));
    }

private:
    int n_;
    std::vector<std::set<int>> adj_;
};

// Watts-Strogatz small-world graph: ring lattice with k nearest neighbors,
// each lattice edge rewired with probability p. Edge count stays n*k/2.
inline Graph generate_small_world(int n, int k, double p, std::uint64_t seed) {
    if (k < 2 || k % 2 != 0 || n <= k)
        throw ParameterError("small_world: need n > k >= 2 with k even, got n=" +
                             std::to_string(n) + " k=" + std::to_string(k));
    if (p < 0.0 || p > 1.0) throw ParameterError("small_world: p must be in [0,1]");
    Rng rng(seed);
    GraphBuilder b(n);
    for (int j = 1; j <= k / 2; ++j)
        for (int u = 0; u < n; ++u) b.add_edge(u, (u + j) % n);
    for (int j = 1; j <= k / 2; ++j) {
        for (int u = 0; u < n; ++u) {
            if (!rng.bernoulli(p)) continue;
            if (b.degree(u) >= n - 1) continue;  // saturated, nothing to rewire to
            int v = (u + j) % n;
            if (!b.has_edge(u, v)) continue;  // already rewired away by an earlier pass
            int w = rng.uniform_int(0, n - 1);
            while (w == u || b.has_edge(u, w)) w = rng.uniform_int(0, n - 1);
            b.remove_edge(u, v);
            b.add_edge(u, w);
        }
    }
    return b.build();
}

// Holme-Kim powerlaw-cluster graph: preferential attachment with a
// triad-formation step taken with probability p_triad. The seed graph is m
// isolated nodes, so every node from m onward contributes exactly m edges
// and the total is m*(n-m).
inline Graph generate_scale_free(int n, int m, double p_triad, std::uint64_t seed) {
    if (m < 1 || m >= n)
        throw ParameterError("scale_free: need 1 <= m < n, got n=" + std::to_string(n) +
                             " m=" + std::to_string(m));
    if (p_triad < 0.0 || p_triad > 1.0) throw ParameterError("scale_free: p_triad must be in [0,1]");
    Rng rng(seed);
    GraphBuilder b(n);
    // Nodes repeated once per incident edge; seed nodes enter once so the
    // first attached node links to all of them.
    std::vector<int> repeated;
    for (int i = 0; i < m; ++i) repeated.push_back(i);

    auto attach_preferential = [&](int source) {
        for (;;) {
            int t = rng.choice(repeated);
            if (t != source && !b.has_edge(source, t)) return t;
        }
    };

    for (int source = m; source < n; ++source) {
        int target = attach_preferential(source);
        b.add_edge(source, target);
        repeated.push_back(target);
        for (int count = 1; count < m; ++count) {
            bool linked = false;
            if (rng.bernoulli(p_triad)) {
                std::vector<int> candidates;
                for (int nbr : b.neighbors(target))
                    if (nbr != source && !b.has_edge(source, nbr)) candidates.push_back(nbr);
                if (!candidates.empty()) {
                    int nbr = rng.choice(candidates);
                    b.add_edge(source, nbr);
                    repeated.push_back(nbr);
                    linked = true;
                }
            }
            if (!linked) {
                target = attach_preferential(source);
                b.add_edge(source, target);
                repeated.push_back(target);
            }
        }
        for (int i = 0; i < m; ++i) repeated.push_back(source);
    }
    return b.build();
}

// Per-node clustering coefficient: 2*T(v) / (deg(v)*(deg(v)-1)), 0 when deg < 2.
inline std::vector<double> node_clustering(const Graph& g) {
    int n = g.num_nodes();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int v = 0; v < n; ++v) {
        const auto& nb = g.neighbors(v);
        int d = static_cast<int>(nb.size());
        if (d < 2) continue;
        int triangles = 0;
        for (std::size_t i = 0; i < nb.size(); ++i)
            for (std::size_t j = i + 1; j < nb.size(); ++j)
                if (g.has_edge(nb[i], nb[j])) ++triangles;
        out[static_cast<std::size_t>(v)] = 2.0 * triangles / (static_cast<double>(d) * (d - 1));
    }
    return out;
}

inline double average_clustering(const Graph& g) {
    auto c = node_clustering(g);
    double s = 0.0;
    for (double x : c) s += x;
    return s / static_cast<double>(c.size());
}

// PageRank by power iteration with uniform teleport; dangling mass is
// redistributed uniformly. Converged when the L1 change drops below tol.
inline std::vector<double> pagerank(const Graph& g, double damping = 0.85, double tol = 1e-9,
                                    int max_iter = 200) {
    int n = g.num_nodes();
    std::vector<double> x(static_cast<std::size_t>(n), 1.0 / n);
    std::vector<double> next(static_cast<std::size_t>(n));
    for (int it = 0; it < max_iter; ++it) {
        double dangling = 0.0;
        for (int v = 0; v < n; ++v)
            if (g.degree(v) == 0) dangling += x[static_cast<std::size_t>(v)];
        double base = (1.0 - damping) / n + damping * dangling / n;
        std::fill(next.begin(), next.end(), base);
        for (int u = 0; u < n; ++u) {
            double share = damping * x[static_cast<std::size_t>(u)] / std::max(1, g.degree(u));
            for (int v : g.neighbors(u)) next[static_cast<std::size_t>(v)] += share;
        }
        double delta = 0.0;
        for (int v = 0; v < n; ++v) delta += std::abs(next[static_cast<std::size_t>(v)] - x[static_cast<std::size_t>(v)]);
        x.swap(next);
        if (delta < tol) return x;
    }
    throw ConvergenceError("pagerank: no convergence after " + std::to_string(max_iter) +
                               " iterations",
                           x);
}

inline std::vector<int> bfs_distances(const Graph& g, int source) {
    std::vector<int> dist(static_cast<std::size_t>(g.num_nodes()), -1);
    std::queue<int> q;
    dist[static_cast<std::size_t>(source)] = 0;
    q.push(source);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : g.neighbors(u)) {
            if (dist[static_cast<std::size_t>(v)] < 0) {
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                q.push(v);
            }
        }
    }
    return dist;
}

inline bool is_connected(const Graph& g) {
    auto dist = bfs_distances(g, 0);
    return std::all_of(dist.begin(), dist.end(), [](int d) { return d >= 0; });
}

// Mean shortest-path distance over ordered pairs u != v. Connected graphs only.
inline double avg_path_length(const Graph& g) {
    int n = g.num_nodes();
    if (n == 1) return 0.0;
    long long total = 0;
    for (int s = 0; s < n; ++s) {
        auto dist = bfs_distances(g, s);
        for (int v = 0; v < n; ++v) {
            if (dist[static_cast<std::size_t>(v)] < 0)
                throw DomainError("avg_path_length: graph is disconnected");
            total += dist[static_cast<std::size_t>(v)];
        }
    }
    return static_cast<double>(total) / (static_cast<double>(n) * (n - 1));
}

// Statistics bundle computed once per graph and cached by the task builders.
struct GraphStats {
    double avg_clustering = 0.0;
    double avg_path_length = 0.0;
    std::vector<double> node_clustering;
    std::vector<double> pagerank;
};

// Requires a connected graph (avg_path_length is undefined otherwise).
inline GraphStats compute_stats(const Graph& g) {
    GraphStats s;
    s.node_clustering = node_clustering(g);
    double acc = 0.0;
    for (double c : s.node_clustering) acc += c;
    s.avg_clustering = acc / static_cast<double>(s.node_clustering.size());
    s.avg_path_length = avg_path_length(g);
    s.pagerank = pagerank(g);
    return s;
}

}  // namespace gnnspace
