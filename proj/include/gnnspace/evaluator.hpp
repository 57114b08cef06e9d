#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gnnspace/design.hpp"
#include "gnnspace/error.hpp"
#include "gnnspace/rng.hpp"
#include "gnnspace/space.hpp"
#include "gnnspace/stats.hpp"

namespace gnnspace {

// Ordered (dimension, token) assignment. CRS works at the token level so
// user-registered dimensions behave exactly like the built-in ones.
using TokenDesign = std::vector<std::pair<std::string, std::string>>;

inline Design design_from_tokens(const TokenDesign& tokens) {
    Design d;
    for (const auto& [dim, tok] : tokens) apply_token(d, dim, tok);
    return d;
}

inline std::string token_design_id(const TokenDesign& tokens) {
    std::string id;
    for (const auto& [dim, tok] : tokens) {
        (void)dim;
        if (!id.empty()) id += '-';
        id += tok;
    }
    return id;
}

// Controlled random search over one dimension: S sampled (design, task)
// setups, each expanded into one variant per choice of the studied
// dimension with every other dimension held fixed.
struct CrsPlan {
    std::string dimension;
    std::vector<std::string> choices;
    std::vector<TokenDesign> base;       // studied dimension left slotted
    std::vector<std::string> task_ids;   // per setup

    std::size_t num_setups() const { return base.size(); }

    TokenDesign variant(std::size_t setup, const std::string& choice) const {
        TokenDesign d = base[setup];
        for (auto& [dim, tok] : d)
            if (dim == dimension) {
                tok = choice;
                return d;
            }
        throw ParameterError("crs: setup lacks dimension '" + dimension + "'");
    }
};

inline CrsPlan make_crs_plan(const SpaceSpec& space, const std::vector<std::string>& task_ids,
                             const std::string& dimension, int S, std::uint64_t seed) {
    if (!space.has_dimension(dimension))
        throw ParameterError("crs: unknown dimension '" + dimension + "'");
    if (S < 1) throw ParameterError("crs: S must be >= 1");
    if (task_ids.empty()) throw ParameterError("crs: needs at least one task");
    CrsPlan plan;
    plan.dimension = dimension;
    plan.choices = space.choices(dimension);
    Rng rng(seed);
    for (int s = 0; s < S; ++s) {
        TokenDesign d;
        for (const auto& [name, choices] : space.dims)
            d.emplace_back(name, choices[rng.uniform_below(choices.size())]);
        plan.base.push_back(std::move(d));
        plan.task_ids.push_back(task_ids[rng.uniform_below(task_ids.size())]);
    }
    return plan;
}

// Metric values per setup x choice.
struct CrsResults {
    std::vector<std::vector<double>> values;  // [num_setups][num_choices]
};

// Run every variant through the supplied evaluator (a real training
// protocol or a mock), setups in order, choices in plan order.
inline CrsResults execute_crs(
    const CrsPlan& plan,
    const std::function<double(const TokenDesign&, const std::string& task_id)>& eval) {
    CrsResults r;
    for (std::size_t s = 0; s < plan.num_setups(); ++s) {
        std::vector<double> row;
        for (const auto& choice : plan.choices)
            row.push_back(eval(plan.variant(s, choice), plan.task_ids[s]));
        r.values.push_back(std::move(row));
    }
    return r;
}

// Epsilon-tolerant competition ranking, higher values better: rank(c) =
// 1 + |{c' : value(c') > value(c) + eps}|, so choices within eps share the
// better rank.
inline std::vector<int> rank_choices(const std::vector<double>& values, double epsilon) {
    if (epsilon < 0.0) throw ParameterError("rank_choices: epsilon must be >= 0");
    for (double v : values)
        if (!std::isfinite(v)) throw ParameterError("rank_choices: values must be finite");
    std::vector<int> ranks(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        int better = 0;
        for (std::size_t j = 0; j < values.size(); ++j)
            if (values[j] > values[i] + epsilon) ++better;
        ranks[i] = 1 + better;
    }
    return ranks;
}

// Rank statistics of one choice across all setups.
struct RankDistribution {
    std::string choice;
    std::vector<int> ranks;      // per setup
    double mean_rank = 0.0;
    std::vector<int> histogram;  // index r-1 counts rank r, length = #choices
};

// Per-choice rank distributions, best mean first. Every setup must have a
// finite value for every choice.
inline std::vector<RankDistribution> aggregate_ranks(const CrsPlan& plan,
                                                     const CrsResults& results,
                                                     double epsilon) {
    std::size_t S = plan.num_setups(), m = plan.choices.size();
    std::string gaps;
    if (results.values.size() != S) {
        throw AggregationError("crs aggregate: " + std::to_string(results.values.size()) +
                               " result rows for " + std::to_string(S) + " setups");
    }
    for (std::size_t s = 0; s < S; ++s) {
        bool bad = results.values[s].size() != m;
        if (!bad)
            for (double v : results.values[s])
                if (!std::isfinite(v)) bad = true;
        if (bad) gaps += (gaps.empty() ? "" : ", ") + std::to_string(s);
    }
    if (!gaps.empty()) throw AggregationError("crs aggregate: incomplete setups: " + gaps);

    std::vector<RankDistribution> out(m);
    for (std::size_t c = 0; c < m; ++c) {
        out[c].choice = plan.choices[c];
        out[c].histogram.assign(m, 0);
    }
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<int> ranks = rank_choices(results.values[s], epsilon);
        for (std::size_t c = 0; c < m; ++c) {
            out[c].ranks.push_back(ranks[c]);
            out[c].histogram[static_cast<std::size_t>(ranks[c] - 1)] += 1;
        }
    }
    for (auto& d : out)
        d.mean_rank = std::accumulate(d.ranks.begin(), d.ranks.end(), 0.0) /
                      static_cast<double>(d.ranks.size());
    std::stable_sort(out.begin(), out.end(),
                     [](const RankDistribution& a, const RankDistribution& b) {
                         return a.mean_rank < b.mean_rank;
                     });
    return out;
}

// Consistency utility for the two-choice case: with min-rank ties, mean
// ranks (m1, m2) imply a tie fraction t = 3 - (m1 + m2).
inline double two_choice_tie_fraction(double mean1, double mean2) {
    double t = 3.0 - (mean1 + mean2);
    if (t < -1e-9 || t > 1.0 + 1e-9)
        throw DomainError("tie fraction: means " + std::to_string(mean1) + ", " +
                          std::to_string(mean2) + " are inconsistent with min-rank ties");
    return std::clamp(t, 0.0, 1.0);
}

// ANOVA over the per-choice value (or rank) columns.
inline AnovaResult crs_anova(const CrsPlan& plan, const CrsResults& results, bool use_ranks,
                             double epsilon) {
    std::vector<std::vector<double>> groups(plan.choices.size());
    for (std::size_t s = 0; s < results.values.size(); ++s) {
        std::vector<int> ranks;
        if (use_ranks) ranks = rank_choices(results.values[s], epsilon);
        for (std::size_t c = 0; c < plan.choices.size(); ++c)
            groups[c].push_back(use_ranks ? static_cast<double>(ranks[c])
                                          : results.values[s][c]);
    }
    return one_way_anova(groups);
}

// CSV: one row per choice, sorted best-first, with the rank histogram.
inline void write_crs_csv(const std::string& path, const std::string& dimension,
                          const std::vector<RankDistribution>& dists) {
    std::ofstream out(path);
    if (!out) throw ParameterError("write_crs_csv: cannot open " + path);
    std::size_t m = dists.size();
    out << "dimension,choice,mean_rank";
    for (std::size_t r = 1; r <= m; ++r) out << ",rank_" << r;
    out << "\n";
    for (const auto& d : dists) {
        out << dimension << "," << d.choice << "," << d.mean_rank;
        for (int h : d.histogram) out << "," << h;
        out << "\n";
    }
}

// JSON: the full per-setup matrix behind the summary.
inline void write_crs_json(const std::string& path, const CrsPlan& plan,
                           const CrsResults& results, double epsilon) {
    nlohmann::ordered_json j;
    j["dimension"] = plan.dimension;
    j["choices"] = plan.choices;
    j["epsilon"] = epsilon;
    auto setups = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < plan.num_setups(); ++s) {
        nlohmann::ordered_json setup;
        setup["task"] = plan.task_ids[s];
        setup["design"] = token_design_id(plan.base[s]);
        setup["values"] = results.values[s];
        setup["ranks"] = rank_choices(results.values[s], epsilon);
        setups.push_back(std::move(setup));
    }
    j["setups"] = std::move(setups);
    std::ofstream out(path);
    if (!out) throw ParameterError("write_crs_json: cannot open " + path);
    out << j.dump(2) << "\n";
}

// Round-trip reader for the JSON emitted above. The plan comes back
// without base designs (they are only echoed as ids), which is enough
// for re-aggregation and ANOVA.
inline std::pair<CrsPlan, CrsResults> read_crs_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_crs_json: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("read_crs_json: " + std::string(e.what()));
    }
    for (const char* key : {"dimension", "choices", "setups"})
        if (!j.contains(key)) throw ParseError(std::string("read_crs_json: missing '") + key + "'");
    CrsPlan plan;
    plan.dimension = j.at("dimension").get<std::string>();
    plan.choices = j.at("choices").get<std::vector<std::string>>();
    CrsResults results;
    for (const auto& setup : j.at("setups")) {
        plan.task_ids.push_back(setup.at("task").get<std::string>());
        plan.base.emplace_back();  // ids only in the file; slots stay empty
        std::vector<double> row = setup.at("values").get<std::vector<double>>();
        if (row.size() != plan.choices.size())
            throw ParseError("read_crs_json: setup value row does not match choices");
        results.values.push_back(std::move(row));
    }
    return {std::move(plan), std::move(results)};
}

}  // namespace gnnspace
