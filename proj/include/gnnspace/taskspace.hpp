#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "gnnspace/error.hpp"
#include "gnnspace/sha256.hpp"
#include "gnnspace/stats.hpp"

namespace gnnspace {

// Metric values for a set of designs (rows) evaluated on a set of tasks
// (columns). Entries are mean metric values in [0, 1].
struct PerfMatrix {
    std::vector<std::string> design_ids;
    std::vector<std::string> task_ids;
    std::vector<std::vector<double>> values;  // [designs][tasks]

    std::size_t num_designs() const { return design_ids.size(); }
    std::size_t num_tasks() const { return task_ids.size(); }

    double at(std::size_t d, std::size_t t) const { return values[d][t]; }

    std::vector<double> column(std::size_t t) const {
        std::vector<double> col;
        col.reserve(num_designs());
        for (const auto& row : values) col.push_back(row[t]);
        return col;
    }

    void validate() const {
        if (values.size() != design_ids.size())
            throw ShapeError("perf matrix: row count does not match design ids");
        for (const auto& row : values)
            if (row.size() != task_ids.size())
                throw ShapeError("perf matrix: row width does not match task ids");
    }

    // Content hash over the canonical JSON form, recorded next to anchor
    // sets so downstream analyses can detect a stale matrix.
    std::string content_hash() const {
        nlohmann::json j;
        j["design_ids"] = design_ids;
        j["task_ids"] = task_ids;
        j["values"] = values;
        return Sha256::hex(j.dump());
    }
};

// Assemble a full matrix from (design, task, value) triples, e.g. rows of
// an aggregate CSV. Designs and tasks are ordered by first appearance;
// every cell must be covered exactly once.
inline PerfMatrix perf_from_triples(
    const std::vector<std::tuple<std::string, std::string, double>>& triples) {
    PerfMatrix perf;
    std::map<std::string, std::size_t> drow, tcol;
    for (const auto& [design, task, value] : triples) {
        (void)value;
        if (drow.emplace(design, drow.size()).second) perf.design_ids.push_back(design);
        if (tcol.emplace(task, tcol.size()).second) perf.task_ids.push_back(task);
    }
    std::size_t D = perf.design_ids.size(), T = perf.task_ids.size();
    perf.values.assign(D, std::vector<double>(T, 0.0));
    std::vector<std::vector<bool>> seen(D, std::vector<bool>(T, false));
    for (const auto& [design, task, value] : triples) {
        std::size_t d = drow[design], t = tcol[task];
        if (seen[d][t])
            throw AggregationError("perf matrix: duplicate entry for " + design + " on " + task);
        seen[d][t] = true;
        perf.values[d][t] = value;
    }
    std::string gaps;
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t t = 0; t < T; ++t)
            if (!seen[d][t])
                gaps += (gaps.empty() ? "" : ", ") + perf.design_ids[d] + " on " +
                        perf.task_ids[t];
    if (!gaps.empty()) throw AggregationError("perf matrix: missing entries: " + gaps);
    return perf;
}

// Rank all designs by mean performance across tasks (descending), cut the
// ranking into M contiguous groups with sizes differing by at most one,
// and take the lower median of each group, best group first.
inline std::vector<std::string> select_anchors(const PerfMatrix& perf, int M) {
    perf.validate();
    int D = static_cast<int>(perf.num_designs());
    if (M < 1) throw ParameterError("select_anchors: M must be >= 1");
    if (D < M)
        throw ParameterError("select_anchors: need at least M designs, have " +
                             std::to_string(D));
    if (perf.num_tasks() == 0) throw ParameterError("select_anchors: empty task set");

    std::vector<double> mean(D, 0.0);
    for (int d = 0; d < D; ++d)
        mean[d] = std::accumulate(perf.values[d].begin(), perf.values[d].end(), 0.0) /
                  static_cast<double>(perf.num_tasks());

    std::vector<int> order(D);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return mean[a] > mean[b]; });

    // First (D mod M) groups absorb the remainder.
    std::vector<std::string> anchors;
    int base = D / M, extra = D % M, pos = 0;
    for (int g = 0; g < M; ++g) {
        int sz = base + (g < extra ? 1 : 0);
        anchors.push_back(perf.design_ids[order[pos + (sz - 1) / 2]]);
        pos += sz;
    }
    return anchors;
}

inline void write_anchors_json(const std::string& path, const std::vector<std::string>& anchors,
                               const std::string& perf_hash) {
    nlohmann::ordered_json j;
    j["anchors"] = anchors;
    j["perf_hash"] = perf_hash;
    std::ofstream out(path);
    if (!out) throw ParameterError("write_anchors_json: cannot open " + path);
    out << j.dump(2) << "\n";
}

// Pairwise Kendall tau-b between task columns. Cells where tau is
// undefined (a constant column) are flagged rather than zeroed.
struct SimilarityMatrix {
    std::vector<std::string> task_ids;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<bool>> defined;

    std::size_t size() const { return task_ids.size(); }
};

inline SimilarityMatrix similarity_matrix(const PerfMatrix& perf) {
    perf.validate();
    if (perf.num_designs() < 2)
        throw ParameterError("similarity_matrix: need at least 2 designs per task");
    std::size_t T = perf.num_tasks();
    SimilarityMatrix sim;
    sim.task_ids = perf.task_ids;
    sim.values.assign(T, std::vector<double>(T, 0.0));
    sim.defined.assign(T, std::vector<bool>(T, true));
    std::vector<std::vector<double>> cols;
    for (std::size_t t = 0; t < T; ++t) cols.push_back(perf.column(t));
    for (std::size_t i = 0; i < T; ++i) {
        sim.values[i][i] = 1.0;
        for (std::size_t j = i + 1; j < T; ++j) {
            double tau;
            bool ok = true;
            try {
                tau = kendall_tau_b(cols[i], cols[j]);
            } catch (const UndefinedError&) {
                tau = std::numeric_limits<double>::quiet_NaN();
                ok = false;
            }
            sim.values[i][j] = sim.values[j][i] = tau;
            sim.defined[i][j] = sim.defined[j][i] = ok;
        }
    }
    return sim;
}

// CSV with task ids as both header row and leading column; undefined
// cells serialize as "nan".
inline void write_similarity_csv(const std::string& path, const SimilarityMatrix& sim) {
    std::ofstream out(path);
    if (!out) throw ParameterError("write_similarity_csv: cannot open " + path);
    out << "task";
    for (const auto& id : sim.task_ids) out << "," << id;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < sim.size(); ++i) {
        out << sim.task_ids[i];
        for (std::size_t j = 0; j < sim.size(); ++j) {
            out << ",";
            if (sim.defined[i][j])
                out << sim.values[i][j];
            else
                out << "nan";
        }
        out << "\n";
    }
}

inline SimilarityMatrix read_similarity_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_similarity_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("read_similarity_csv: empty file");
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) parts.push_back(cell);
        if (!s.empty() && s.back() == ',') parts.push_back("");
        return parts;
    };
    std::vector<std::string> header = split(line);
    if (header.empty() || header[0] != "task")
        throw ParseError("read_similarity_csv: malformed header");
    SimilarityMatrix sim;
    sim.task_ids.assign(header.begin() + 1, header.end());
    std::size_t T = sim.task_ids.size();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> parts = split(line);
        if (parts.size() != T + 1)
            throw ParseError("read_similarity_csv: row has " + std::to_string(parts.size()) +
                             " cells, expected " + std::to_string(T + 1));
        std::vector<double> row;
        std::vector<bool> def;
        for (std::size_t j = 1; j < parts.size(); ++j) {
            if (parts[j] == "nan") {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                def.push_back(false);
            } else {
                std::size_t used = 0;
                double v = std::stod(parts[j], &used);
                if (used != parts[j].size())
                    throw ParseError("read_similarity_csv: bad number '" + parts[j] + "'");
                row.push_back(v);
                def.push_back(true);
            }
        }
        sim.values.push_back(std::move(row));
        sim.defined.push_back(std::move(def));
    }
    if (sim.values.size() != T)
        throw ParseError("read_similarity_csv: expected " + std::to_string(T) + " rows, got " +
                         std::to_string(sim.values.size()));
    return sim;
}

// Normalized standing of one design within a task's value column:
// 1 at the top of the ranking, 0 at the bottom. Position is the min-rank,
// so ties share the better position.
inline double transfer_rank(const std::vector<double>& task_values, std::size_t design_index) {
    std::size_t N = task_values.size();
    if (design_index >= N) throw ParameterError("transfer_rank: design index out of range");
    if (N < 2) throw UndefinedError("transfer_rank: need at least 2 designs");
    int better = 0;
    for (double v : task_values)
        if (v > task_values[design_index]) ++better;
    return 1.0 - static_cast<double>(better) / static_cast<double>(N - 1);
}

// Entry (i, j): take the best design of task i (row index of the column
// maximum, first on ties) and score its standing on task j.
inline std::vector<std::vector<double>> transfer_matrix(const PerfMatrix& perf) {
    perf.validate();
    std::size_t T = perf.num_tasks();
    if (perf.num_designs() < 2)
        throw ParameterError("transfer_matrix: need at least 2 designs");
    std::vector<std::vector<double>> cols;
    for (std::size_t t = 0; t < T; ++t) cols.push_back(perf.column(t));
    std::vector<std::size_t> best(T, 0);
    for (std::size_t t = 0; t < T; ++t)
        best[t] = static_cast<std::size_t>(
            std::max_element(cols[t].begin(), cols[t].end()) - cols[t].begin());
    std::vector<std::vector<double>> m(T, std::vector<double>(T, 0.0));
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t j = 0; j < T; ++j) m[i][j] = transfer_rank(cols[j], best[i]);
    return m;
}

// Pearson correlation between similarity and transfer scores over all
// ordered off-diagonal pairs. Cells with undefined similarity are
// dropped from the pairing.
inline double transfer_correlation(const SimilarityMatrix& sim,
                                   const std::vector<std::vector<double>>& transfer) {
    std::size_t T = sim.size();
    if (transfer.size() != T)
        throw ShapeError("transfer_correlation: matrix sizes differ");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < T; ++i) {
        if (transfer[i].size() != T)
            throw ShapeError("transfer_correlation: transfer matrix is not square");
        for (std::size_t j = 0; j < T; ++j) {
            if (i == j) continue;
            if (!sim.defined[i][j]) continue;
            xs.push_back(sim.values[i][j]);
            ys.push_back(transfer[i][j]);
        }
    }
    if (xs.size() < 2)
        throw UndefinedError("transfer_correlation: fewer than 2 defined pairs");
    return pearson(xs, ys);
}

}  // namespace gnnspace
