#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gnnspace/design.hpp"
#include "gnnspace/error.hpp"
#include "gnnspace/rng.hpp"

namespace gnnspace {

// An ordered dimension registry: each dimension has a name and a finite
// choice list of canonical tokens. The design space is their Cartesian
// product.
struct SpaceSpec {
    std::vector<std::pair<std::string, std::vector<std::string>>> dims;

    long long cardinality() const {
        long long c = 1;
        for (const auto& [name, choices] : dims) {
            (void)name;
            c *= static_cast<long long>(choices.size());
        }
        return c;
    }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (dims[i].first == name) return static_cast<int>(i);
        return -1;
    }

    bool has_dimension(const std::string& name) const { return index_of(name) >= 0; }

    const std::vector<std::string>& choices(const std::string& name) const {
        int i = index_of(name);
        if (i < 0) throw ParameterError("space: unknown dimension '" + name + "'");
        return dims[static_cast<std::size_t>(i)].second;
    }

    // Register or override a dimension; registering appends at the end.
    SpaceSpec with_choices(const std::string& name, std::vector<std::string> choices) const {
        if (choices.empty()) throw ParameterError("space: dimension '" + name + "' needs choices");
        SpaceSpec out = *this;
        int i = out.index_of(name);
        if (i >= 0) out.dims[static_cast<std::size_t>(i)].second = std::move(choices);
        else out.dims.emplace_back(name, std::move(choices));
        return out;
    }
};

inline SpaceSpec full_space() {
    SpaceSpec s;
    s.dims = {
        {"bn", {"true", "false"}},
        {"dropout", {"off", "0.3", "0.6"}},
        {"act", {"relu", "prelu", "swish"}},
        {"agg", {"mean", "max", "sum"}},
        {"conn", {"stack", "skip_sum", "skip_cat"}},
        {"pre_mp", {"1", "2", "3"}},
        {"mp", {"2", "4", "6", "8"}},
        {"post_mp", {"1", "2", "3"}},
        {"batch", {"16", "32", "64"}},
        {"lr", {"0.1", "0.01", "0.001"}},
        {"opt", {"sgd", "adam"}},
        {"epochs", {"100", "200", "400"}},
        {"attention", {"none"}},
    };
    return s;
}

// The 96-design condensed space: seven dimensions pinned by the ranking
// analysis, five left free.
inline SpaceSpec condensed_space() {
    SpaceSpec s;
    s.dims = {
        {"bn", {"true"}},
        {"dropout", {"off"}},
        {"act", {"prelu"}},
        {"agg", {"mean", "max", "sum"}},
        {"conn", {"skip_sum", "skip_cat"}},
        {"pre_mp", {"1", "2"}},
        {"mp", {"2", "4", "6", "8"}},
        {"post_mp", {"2", "3"}},
        {"batch", {"32"}},
        {"lr", {"0.01"}},
        {"opt", {"adam"}},
        {"epochs", {"400"}},
        {"attention", {"none"}},
    };
    return s;
}

// Odometer over the Cartesian product, last dimension fastest. Yields each
// design exactly once.
class SpaceEnumerator {
public:
    explicit SpaceEnumerator(const SpaceSpec& space) : space_(space) {
        idx_.assign(space_.dims.size(), 0);
        for (const auto& [name, choices] : space_.dims) {
            (void)name;
            if (choices.empty()) throw ParameterError("space: empty choice list");
        }
    }

    bool next(Design& out) {
        if (done_) return false;
        Design d;
        for (std::size_t i = 0; i < space_.dims.size(); ++i)
            apply_token(d, space_.dims[i].first, space_.dims[i].second[idx_[i]]);
        out = d;
        // advance the odometer
        for (std::size_t i = space_.dims.size(); i-- > 0;) {
            if (++idx_[i] < space_.dims[i].second.size()) return true;
            idx_[i] = 0;
        }
        done_ = true;
        return true;
    }

private:
    SpaceSpec space_;
    std::vector<std::size_t> idx_;
    bool done_ = false;
};

inline std::vector<Design> enumerate_designs(const SpaceSpec& space) {
    std::vector<Design> out;
    out.reserve(static_cast<std::size_t>(space.cardinality()));
    SpaceEnumerator e(space);
    Design d;
    while (e.next(d)) out.push_back(d);
    return out;
}

// Uniform i.i.d. samples over the product (duplicates permitted).
inline std::vector<Design> sample_designs(const SpaceSpec& space, int n, std::uint64_t seed) {
    if (n < 1) throw ParameterError("sample_designs: n must be >= 1");
    Rng rng(seed);
    std::vector<Design> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Design d;
        for (const auto& [name, choices] : space.dims)
            apply_token(d, name, choices[rng.uniform_below(choices.size())]);
        out.push_back(d);
    }
    return out;
}

// Space descriptor JSON: an ordered object mapping dimension name to its
// choice list, so users can register new dimensions or swap choice sets.
inline nlohmann::ordered_json space_to_json(const SpaceSpec& space) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, choices] : space.dims) j[name] = choices;
    return j;
}

inline SpaceSpec space_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw ParseError("space descriptor: expected a JSON object");
    SpaceSpec s;
    for (const auto& [name, choices] : j.items()) {
        if (!choices.is_array() || choices.empty())
            throw ParseError("space descriptor: dimension '" + name +
                             "' needs a non-empty choice array");
        std::vector<std::string> toks;
        for (const auto& c : choices) {
            if (!c.is_string())
                throw ParseError("space descriptor: dimension '" + name +
                                 "' has a non-string choice");
            toks.push_back(c.get<std::string>());
        }
        s.dims.emplace_back(name, std::move(toks));
    }
    return s;
}

}  // namespace gnnspace
