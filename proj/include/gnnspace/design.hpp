#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gnnspace/error.hpp"

namespace gnnspace {

// One full assignment to the design dimensions. Categorical fields hold
// canonical tokens; numeric fields are plain values so scaled-down spaces
// (tiny epochs, odd widths) remain representable.
struct Design {
    bool bn = true;
    double dropout = 0.0;  // 0 means off
    std::string act = "prelu";
    std::string agg = "mean";
    std::string conn = "stack";
    int pre_mp = 1;
    int mp = 2;
    int post_mp = 1;
    int batch_size = 32;
    double lr = 0.01;
    std::string opt = "adam";
    int epochs = 400;
    std::string attention = "none";
};

namespace detail {

inline const std::vector<std::string>& act_tokens() {
    static const std::vector<std::string> v{"relu", "prelu", "swish"};
    return v;
}
inline const std::vector<std::string>& agg_tokens() {
    static const std::vector<std::string> v{"mean", "max", "sum"};
    return v;
}
inline const std::vector<std::string>& conn_tokens() {
    static const std::vector<std::string> v{"stack", "skip_sum", "skip_cat"};
    return v;
}
inline const std::vector<std::string>& opt_tokens() {
    static const std::vector<std::string> v{"sgd", "adam"};
    return v;
}
inline const std::vector<std::string>& attention_tokens() {
    static const std::vector<std::string> v{"none", "additive", "multiplicative"};
    return v;
}

inline void check_token(const std::string& dim, const std::string& tok,
                        const std::vector<std::string>& allowed) {
    for (const auto& a : allowed)
        if (a == tok) return;
    throw ParseError("design: unknown " + dim + " token '" + tok + "'");
}

inline std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

inline double parse_number(const std::string& dim, const std::string& tok) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("design: unknown " + dim + " token '" + tok + "'");
    }
}

inline int parse_int(const std::string& dim, const std::string& tok) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("design: unknown " + dim + " token '" + tok + "'");
    }
}

}  // namespace detail

// Canonical dimension order used by ids, token maps, and space descriptors.
inline const std::vector<std::string>& dimension_order() {
    static const std::vector<std::string> order{
        "bn", "dropout", "act",   "agg", "conn", "pre_mp",   "mp",
        "post_mp", "batch", "lr", "opt", "epochs", "attention"};
    return order;
}

// Ordered (dimension, token) view of a design.
inline std::vector<std::pair<std::string, std::string>> design_tokens(const Design& d) {
    return {
        {"bn", d.bn ? "true" : "false"},
        {"dropout", d.dropout == 0.0 ? "off" : detail::format_number(d.dropout)},
        {"act", d.act},
        {"agg", d.agg},
        {"conn", d.conn},
        {"pre_mp", std::to_string(d.pre_mp)},
        {"mp", std::to_string(d.mp)},
        {"post_mp", std::to_string(d.post_mp)},
        {"batch", std::to_string(d.batch_size)},
        {"lr", detail::format_number(d.lr)},
        {"opt", d.opt},
        {"epochs", std::to_string(d.epochs)},
        {"attention", d.attention},
    };
}

inline void apply_token(Design& d, const std::string& dim, const std::string& tok) {
    using namespace detail;
    if (dim == "bn") {
        if (tok == "true") d.bn = true;
        else if (tok == "false") d.bn = false;
        else throw ParseError("design: unknown bn token '" + tok + "'");
    } else if (dim == "dropout") {
        d.dropout = tok == "off" ? 0.0 : parse_number(dim, tok);
    } else if (dim == "act") {
        check_token(dim, tok, act_tokens());
        d.act = tok;
    } else if (dim == "agg") {
        check_token(dim, tok, agg_tokens());
        d.agg = tok;
    } else if (dim == "conn") {
        check_token(dim, tok, conn_tokens());
        d.conn = tok;
    } else if (dim == "pre_mp") {
        d.pre_mp = parse_int(dim, tok);
    } else if (dim == "mp") {
        d.mp = parse_int(dim, tok);
    } else if (dim == "post_mp") {
        d.post_mp = parse_int(dim, tok);
    } else if (dim == "batch") {
        d.batch_size = parse_int(dim, tok);
    } else if (dim == "lr") {
        d.lr = parse_number(dim, tok);
    } else if (dim == "opt") {
        check_token(dim, tok, opt_tokens());
        d.opt = tok;
    } else if (dim == "epochs") {
        d.epochs = parse_int(dim, tok);
    } else if (dim == "attention") {
        check_token(dim, tok, attention_tokens());
        d.attention = tok;
    } else {
        throw ParseError("design: unknown dimension '" + dim + "'");
    }
}

// Canonical id: dimension tokens in documented order joined by '-'.
inline std::string design_id(const Design& d) {
    std::string id;
    for (const auto& [dim, tok] : design_tokens(d)) {
        (void)dim;
        if (!id.empty()) id += '-';
        id += tok;
    }
    return id;
}

inline Design parse_design_id(const std::string& id) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : id) {
        if (c == '-') {
            toks.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    toks.push_back(cur);
    const auto& order = dimension_order();
    if (toks.size() != order.size())
        throw ParseError("design id '" + id + "': expected " + std::to_string(order.size()) +
                         " tokens, got " + std::to_string(toks.size()));
    Design d;
    for (std::size_t i = 0; i < order.size(); ++i) apply_token(d, order[i], toks[i]);
    return d;
}

// The fixed reference architecture (1 pre-MP, 3 MP, 1 post-MP, stack,
// bn, prelu, no attention) whose parameter count at hidden 256 defines
// the computational budget. Shared by every candidate.
inline Design reference_design() {
    Design d;
    d.bn = true;
    d.dropout = 0.0;
    d.act = "prelu";
    d.agg = "mean";
    d.conn = "stack";
    d.pre_mp = 1;
    d.mp = 3;
    d.post_mp = 1;
    d.batch_size = 32;
    d.lr = 0.01;
    d.opt = "adam";
    d.epochs = 400;
    d.attention = "none";
    return d;
}

}  // namespace gnnspace
