#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gnnspace/design.hpp"
#include "gnnspace/error.hpp"
#include "gnnspace/sha256.hpp"
#include "gnnspace/tasks.hpp"
#include "gnnspace/trainer.hpp"

namespace gnnspace {

// Everything that identifies an experiment. The hash covers the identity
// fields only -- where the results land on disk is not part of what was
// run, and including it would make seeds depend on the output path.
struct ExperimentConfig {
    std::string task_ref;   // task id, or path to a task JSON
    std::string design_id;
    std::vector<std::uint64_t> split_seeds{0, 1, 2};
    double train_ratio = 0.8;
    int ref_hidden = 256;
    std::uint64_t rng_seed = 0;
    std::string out_dir = ".";
};

inline nlohmann::json config_identity_json(const ExperimentConfig& c) {
    nlohmann::json j;  // plain json: keys serialize sorted
    j["design"] = c.design_id;
    j["ref_hidden"] = c.ref_hidden;
    j["rng_seed"] = c.rng_seed;
    j["split_seeds"] = c.split_seeds;
    j["task"] = c.task_ref;
    j["train_ratio"] = c.train_ratio;
    return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
    return Sha256::hex(config_identity_json(c).dump());
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j = config_identity_json(c);
    j["out_dir"] = c.out_dir;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("experiment config: expected an object");
    for (const char* key : {"task", "design", "split_seeds"})
        if (!j.contains(key))
            throw ParseError(std::string("experiment config: missing '") + key + "'");
    ExperimentConfig c;
    c.task_ref = j.at("task").get<std::string>();
    c.design_id = j.at("design").get<std::string>();
    c.split_seeds.clear();
    for (const auto& s : j.at("split_seeds")) c.split_seeds.push_back(s.get<std::uint64_t>());
    if (c.split_seeds.empty()) throw ParseError("experiment config: empty split_seeds");
    if (j.contains("train_ratio")) c.train_ratio = j.at("train_ratio").get<double>();
    if (j.contains("ref_hidden")) c.ref_hidden = j.at("ref_hidden").get<int>();
    if (j.contains("rng_seed")) c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    return c;
}

// One line of the run registry.
struct RunRow {
    std::string task;
    std::string design;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;
    long long params = 0;
    std::string status;  // "ok" | "failed"
    std::string config_hash;
};

inline nlohmann::ordered_json row_to_json(const RunRow& r) {
    nlohmann::ordered_json j;
    j["task"] = r.task;
    j["design"] = r.design;
    j["seed"] = r.seed;
    j["metric"] = r.metric;
    j["value"] = r.value;
    j["params"] = r.params;
    j["status"] = r.status;
    j["config_hash"] = r.config_hash;
    return j;
}

inline RunRow row_from_json(const nlohmann::json& j, const std::string& where) {
    for (const char* key :
         {"task", "design", "seed", "metric", "value", "params", "status", "config_hash"})
        if (!j.contains(key)) throw ParseError(where + ": missing '" + key + "'");
    RunRow r;
    r.task = j.at("task").get<std::string>();
    r.design = j.at("design").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<double>();
    r.params = j.at("params").get<long long>();
    r.status = j.at("status").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    if (r.status != "ok" && r.status != "failed")
        throw ParseError(where + ": status must be 'ok' or 'failed'");
    return r;
}

// JSONL registry of completed runs, keyed by (task, design, seed). The
// file on disk is always sorted by key and replaced atomically, so the
// same set of runs produces byte-identical bytes no matter the order or
// parallelism they were computed with.
class RunRegistry {
public:
    using Key = std::tuple<std::string, std::string, std::uint64_t>;

    explicit RunRegistry(std::string path) : path_(std::move(path)) { load(); }

    const std::string& path() const { return path_; }
    std::size_t size() const { return rows_.size(); }

    bool has(const std::string& task, const std::string& design, std::uint64_t seed) const {
        return rows_.count(Key{task, design, seed}) > 0;
    }

    const RunRow& get(const std::string& task, const std::string& design,
                      std::uint64_t seed) const {
        auto it = rows_.find(Key{task, design, seed});
        if (it == rows_.end())
            throw ParameterError("registry: no row for " + task + " / " + design + " / seed " +
                                 std::to_string(seed));
        return it->second;
    }

    void put(const RunRow& row) { rows_[Key{row.task, row.design, row.seed}] = row; }

    std::vector<RunRow> rows() const {
        std::vector<RunRow> out;
        out.reserve(rows_.size());
        for (const auto& [key, row] : rows_) out.push_back(row);
        return out;
    }

    void save() const {
        std::string tmp = path_ + ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw ParameterError("registry: cannot open " + tmp);
            for (const auto& [key, row] : rows_) out << row_to_json(row).dump() << "\n";
        }
        if (std::rename(tmp.c_str(), path_.c_str()) != 0)
            throw ParameterError("registry: cannot replace " + path_);
    }

private:
    void load() {
        std::ifstream in(path_);
        if (!in) return;  // fresh registry
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            std::string where = path_ + ":" + std::to_string(lineno);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(where + ": " + e.what());
            }
            RunRow row = row_from_json(j, where);
            Key key{row.task, row.design, row.seed};
            if (rows_.count(key))
                throw IntegrityError(where + ": duplicate row for " + row.task + " / " +
                                     row.design + " / seed " + std::to_string(row.seed));
            rows_.emplace(std::move(key), std::move(row));
        }
    }

    std::string path_;
    std::map<Key, RunRow> rows_;
};

inline RunRow row_from_record(const ResultRecord& rec) {
    RunRow row;
    row.task = rec.task_id;
    row.design = rec.design_id;
    row.seed = rec.split_seed;
    row.metric = rec.metric_name;
    row.value = rec.value;
    row.params = rec.param_count;
    row.status = rec.status;
    row.config_hash = rec.config_hash;
    return row;
}

struct ExperimentOutcome {
    int ran = 0;
    int skipped = 0;
    int failed = 0;
    std::vector<RunRow> new_rows;
};

// Compute the rows an experiment still owes, without touching the
// registry: the caller merges under its own locking. A completed seed
// whose recorded config_hash disagrees with this config is evidence of a
// tampered or mismatched registry and aborts the run.
inline ExperimentOutcome run_experiment_rows(const ExperimentConfig& cfg, const Task& task,
                                             const RunRegistry& registry, bool force) {
    ExperimentOutcome out;
    std::string hash = config_hash(cfg);
    Design design = parse_design_id(cfg.design_id);
    std::vector<std::uint64_t> pending;
    for (std::uint64_t seed : cfg.split_seeds) {
        if (!force && registry.has(task.id, cfg.design_id, seed)) {
            const RunRow& row = registry.get(task.id, cfg.design_id, seed);
            if (row.config_hash != hash)
                throw IntegrityError("registry: row for " + task.id + " / " + cfg.design_id +
                                     " / seed " + std::to_string(seed) +
                                     " was produced by config " + row.config_hash +
                                     ", expected " + hash);
            ++out.skipped;
            continue;
        }
        pending.push_back(seed);
    }
    if (pending.empty()) return out;

    ProtocolOptions opts;
    opts.seeds = pending;
    opts.ratio = cfg.train_ratio;
    opts.ref_hidden = cfg.ref_hidden;
    opts.config_hash = hash;
    ProtocolResult res = run_protocol(task, design, opts);
    for (const ResultRecord& rec : res.records) {
        ++out.ran;
        if (rec.status == "failed") ++out.failed;
        out.new_rows.push_back(row_from_record(rec));
    }
    return out;
}

// Run one experiment against a registry and persist the result.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const Task& task,
                                        RunRegistry& registry, bool force = false) {
    ExperimentOutcome out = run_experiment_rows(cfg, task, registry, force);
    if (!out.new_rows.empty()) {
        for (const RunRow& row : out.new_rows) registry.put(row);
        registry.save();
    }
    return out;
}

// Run a batch of experiments across a worker pool. Workers compute rows
// independently; a single merge point (the registry behind one mutex)
// collects them, and the registry is flushed once at the end, sorted, so
// the outcome is identical to running the batch sequentially.
inline ExperimentOutcome launch_batch(const std::vector<std::pair<ExperimentConfig, const Task*>>& jobs,
                                      RunRegistry& registry, int workers, bool force = false) {
    if (workers < 1) throw ParameterError("launch_batch: workers must be >= 1");
    ExperimentOutcome total;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors;
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                ExperimentOutcome one =
                    run_experiment_rows(jobs[i].first, *jobs[i].second, registry, force);
                std::lock_guard<std::mutex> lock(mu);
                total.ran += one.ran;
                total.skipped += one.skipped;
                total.failed += one.failed;
                for (const RunRow& row : one.new_rows) {
                    registry.put(row);
                    total.new_rows.push_back(row);
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                errors.push_back(e.what());
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (!errors.empty()) {
        std::sort(errors.begin(), errors.end());
        throw Error("launch_batch: " + std::to_string(errors.size()) +
                    " experiment(s) failed, first: " + errors.front());
    }
    if (!total.new_rows.empty()) registry.save();
    return total;
}

// Mean metric per (task, design) over successful seeds only.
struct AggregateRow {
    std::string task;
    std::string design;
    double mean_value = 0.0;
    int n_seeds = 0;
    long long params = 0;
};

struct AggregateResult {
    std::vector<AggregateRow> rows;  // sorted by (task, design)
    int excluded_failed = 0;
};

inline AggregateResult aggregate_registry(const std::vector<RunRow>& rows) {
    std::map<std::pair<std::string, std::string>, AggregateRow> groups;
    AggregateResult res;
    for (const RunRow& row : rows) {
        if (row.status == "failed") {
            ++res.excluded_failed;
            continue;
        }
        AggregateRow& g = groups[{row.task, row.design}];
        g.task = row.task;
        g.design = row.design;
        g.mean_value += row.value;
        g.params = row.params;
        g.n_seeds += 1;
    }
    for (auto& [key, g] : groups) {
        g.mean_value /= static_cast<double>(g.n_seeds);
        res.rows.push_back(g);
    }
    return res;
}

inline void write_aggregate_csv(const std::string& path, const AggregateResult& agg) {
    std::ofstream out(path);
    if (!out) throw ParameterError("write_aggregate_csv: cannot open " + path);
    out.precision(17);
    out << "task,design,mean_value,n_seeds,params\n";
    for (const AggregateRow& r : agg.rows)
        out << r.task << "," << r.design << "," << r.mean_value << "," << r.n_seeds << ","
            << r.params << "\n";
}

inline std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_aggregate_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "task,design,mean_value,n_seeds,params")
        throw ParseError("read_aggregate_csv: malformed header in " + path);
    std::vector<AggregateRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string where = path + ":" + std::to_string(lineno);
        std::vector<std::string> parts;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) parts.push_back(cell);
        if (parts.size() != 5) throw ParseError(where + ": expected 5 cells");
        AggregateRow r;
        r.task = parts[0];
        r.design = parts[1];
        try {
            std::size_t used = 0;
            r.mean_value = std::stod(parts[2], &used);
            if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
            r.n_seeds = std::stoi(parts[3], &used);
            if (used != parts[3].size()) throw std::invalid_argument(parts[3]);
            r.params = std::stoll(parts[4], &used);
            if (used != parts[4].size()) throw std::invalid_argument(parts[4]);
        } catch (const std::exception&) {
            throw ParseError(where + ": bad numeric cell");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace gnnspace
