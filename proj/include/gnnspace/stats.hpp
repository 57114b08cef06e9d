#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "gnnspace/error.hpp"

namespace gnnspace {

// Kendall rank correlation with tie correction (tau-b):
//   tau_b = (C - D) / sqrt((C + D + Tx) * (C + D + Ty))
// where Tx/Ty count pairs tied only in x / only in y. Pairs tied in both
// contribute to neither numerator nor denominator.
inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeError("kendall_tau_b: length mismatch");
    std::size_t n = x.size();
    if (n < 2) throw ParameterError("kendall_tau_b: need at least 2 observations");
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) ++ties_x;
            else if (dy == 0.0) ++ties_y;
            else if ((dx > 0.0) == (dy > 0.0)) ++concordant;
            else ++discordant;
        }
    }
    double denom_x = static_cast<double>(concordant + discordant + ties_x);
    double denom_y = static_cast<double>(concordant + discordant + ties_y);
    if (denom_x == 0.0 || denom_y == 0.0)
        throw UndefinedError("kendall_tau_b: correlation undefined (a vector is constant)");
    return static_cast<double>(concordant - discordant) / std::sqrt(denom_x * denom_y);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
    std::size_t n = x.size();
    if (n < 2) throw ParameterError("pearson: need at least 2 observations");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw UndefinedError("pearson: correlation undefined (a vector is constant)");
    return sxy / std::sqrt(sxx * syy);
}

// ROC AUC via the Mann-Whitney statistic with midranks, so tied scores
// contribute half. Labels must be 0/1 and both classes must be present.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ShapeError("roc_auc: length mismatch");
    std::size_t n = scores.size();
    if (n == 0) throw ParameterError("roc_auc: empty input");
    long long pos = 0, neg = 0;
    for (int l : labels) {
        if (l == 1) ++pos;
        else if (l == 0) ++neg;
        else throw ParameterError("roc_auc: labels must be 0 or 1");
    }
    if (pos == 0 || neg == 0)
        throw UndefinedError("roc_auc: undefined with a single class present");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Sum midranks of the positive class.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += midrank;
        i = j;
    }
    double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

// Regularized incomplete beta function I_x(a, b) by the continued-fraction
// expansion (Lentz's method), with the symmetry transform for x past the
// central point so the fraction converges quickly.
inline double betacf(double a, double b, double x) {
    const int max_iter = 300;
    const double eps = 3e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw ConvergenceError("betacf: continued fraction failed to converge", {h});
}

inline double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw ParameterError("incomplete_beta: a, b must be positive");
    if (x < 0.0 || x > 1.0) throw ParameterError("incomplete_beta: x must be in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Upper tail of the F distribution: P(F_{d1,d2} > f).
inline double f_pvalue(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

struct AnovaResult {
    double f_stat = 0.0;
    double p_value = 1.0;
    double df_between = 0.0;
    double df_within = 0.0;
};

// One-way fixed-effects ANOVA over >= 2 groups, each with >= 2 observations.
// Zero within-group variance leaves the F statistic undefined.
inline AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ParameterError("anova: need at least 2 groups");
    std::size_t total_n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw ParameterError("anova: every group needs at least 2 values");
        total_n += g.size();
    }
    double df_between = static_cast<double>(groups.size()) - 1.0;
    double df_within = static_cast<double>(total_n) - static_cast<double>(groups.size());
    double grand = 0.0;
    for (const auto& g : groups) grand = std::accumulate(g.begin(), g.end(), grand);
    grand /= static_cast<double>(total_n);
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
        for (double v : g) ssw += (v - mean) * (v - mean);
    }
    if (ssw == 0.0)
        throw UndefinedError("anova: zero within-group variance, F undefined");
    AnovaResult r;
    r.df_between = df_between;
    r.df_within = df_within;
    r.f_stat = (ssb / df_between) / (ssw / df_within);
    r.p_value = f_pvalue(r.f_stat, df_between, df_within);
    return r;
}

// Bonferroni correction for a family of m tests: min(1, m*p).
inline double bonferroni(double p, int m) {
    if (p < 0.0 || p > 1.0) throw ParameterError("bonferroni: p must be in [0,1]");
    if (m < 1) throw ParameterError("bonferroni: family size must be >= 1");
    return std::min(1.0, p * static_cast<double>(m));
}

// Midrank vector: rank 1 for the smallest value, tied values share the mean
// of the ranks they span.
inline std::vector<double> midranks(const std::vector<double>& values) {
    std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = midrank;
        i = j;
    }
    return ranks;
}

}  // namespace gnnspace
