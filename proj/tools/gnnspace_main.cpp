// Command-line front end: task synthesis, design-space enumeration,
// experiment running, and the rank / similarity / transfer analyses.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gnnspace/gnnspace.hpp"

namespace fs = std::filesystem;
using namespace gnnspace;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::string cur;
    std::stringstream ss(csv);
    while (std::getline(ss, cur, ',')) {
        if (cur.empty()) throw ParameterError("seeds: empty entry in '" + csv + "'");
        std::size_t used = 0;
        seeds.push_back(std::stoull(cur, &used));
        if (used != cur.size()) throw ParameterError("seeds: bad entry '" + cur + "'");
    }
    if (seeds.empty()) throw ParameterError("seeds: empty list");
    return seeds;
}

SpaceSpec resolve_space(const std::string& name) {
    if (name == "full") return full_space();
    if (name == "condensed") return condensed_space();
    std::ifstream in(name);
    if (!in) throw ParameterError("space: expected 'full', 'condensed' or a JSON file, got '" +
                                  name + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("space file " + name + ": " + e.what());
    }
    return space_from_json(j);
}

std::map<std::string, Task> load_tasks_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ParameterError("tasks: not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    std::map<std::string, Task> tasks;
    for (const auto& p : paths) {
        Task t = load_external_task(p);
        if (!tasks.emplace(t.id, std::move(t)).second)
            throw ParameterError("tasks: duplicate task id in " + p);
    }
    if (tasks.empty()) throw ParameterError("tasks: no .json task files in " + dir);
    return tasks;
}

const Task& resolve_task(std::map<std::string, Task>& tasks, const std::string& ref) {
    auto it = tasks.find(ref);
    if (it != tasks.end()) return it->second;
    if (ref.find('/') != std::string::npos ||
        (ref.size() > 5 && ref.compare(ref.size() - 5, 5, ".json") == 0)) {
        Task t = load_external_task(ref);
        return tasks.emplace(t.id, std::move(t)).first->second;
    }
    throw ParameterError("task: unknown task '" + ref + "'");
}

std::vector<std::tuple<std::string, std::string, double>> perf_triples(
    const std::vector<AggregateRow>& rows) {
    std::vector<std::tuple<std::string, std::string, double>> triples;
    for (const auto& r : rows) triples.emplace_back(r.design, r.task, r.mean_value);
    return triples;
}

void write_task_matrix_csv(const std::string& path, const std::vector<std::string>& task_ids,
                           const std::vector<std::vector<double>>& m) {
    std::ofstream out(path);
    if (!out) throw ParameterError("cannot open " + path);
    out.precision(17);
    out << "task";
    for (const auto& id : task_ids) out << "," << id;
    out << "\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << task_ids[i];
        for (double v : m[i]) out << "," << v;
        out << "\n";
    }
}

int cmd_gen_tasks(const std::string& out_dir, int grid, int per_bin, int n_lo, int n_hi,
                  std::uint64_t seed, int bins, long long budget, bool with_link) {
    GridConfig cfg;
    cfg.grid = grid;
    cfg.per_bin = per_bin;
    cfg.n_lo = n_lo;
    cfg.n_hi = n_hi;
    cfg.budget = budget;
    fs::create_directories(out_dir);
    std::cout << "filling small-world statistic grid...\n";
    GraphSet sw = fill_statistic_grid(Family::small_world, cfg, seed);
    std::cout << "filling scale-free statistic grid...\n";
    GraphSet sf = fill_statistic_grid(Family::scale_free, cfg, mix_seed(seed, "sf"));
    std::vector<Task> tasks = assemble_synthetic_tasks(sw, sf, bins);
    if (with_link) {
        tasks.push_back(build_link_task(sw));
        tasks.push_back(build_link_task(sf));
    }
    for (const Task& t : tasks) save_task(t, out_dir + "/" + t.id + ".json");
    std::cout << "wrote " << tasks.size() << " tasks to " << out_dir << "\n";
    return 0;
}

int cmd_enumerate(const std::string& space_name, bool count_only, long long limit) {
    SpaceSpec space = resolve_space(space_name);
    if (count_only) {
        std::cout << space.cardinality() << "\n";
        return 0;
    }
    SpaceEnumerator en(space);
    Design d;
    long long printed = 0;
    while (en.next(d)) {
        std::cout << design_id(d) << "\n";
        if (limit > 0 && ++printed >= limit) break;
    }
    return 0;
}

int cmd_sample(const std::string& space_name, int n, std::uint64_t seed) {
    SpaceSpec space = resolve_space(space_name);
    for (const Design& d : sample_designs(space, n, seed)) std::cout << design_id(d) << "\n";
    return 0;
}

int cmd_run(const std::string& task_path, const std::string& design, const std::string& out_dir,
            const std::string& seeds_csv, double ratio, int ref_hidden, std::uint64_t rng_seed,
            bool force) {
    std::map<std::string, Task> tasks;
    const Task& task = resolve_task(tasks, task_path);
    ExperimentConfig cfg;
    cfg.task_ref = task.id;
    cfg.design_id = design;
    cfg.split_seeds = parse_seed_list(seeds_csv);
    cfg.train_ratio = ratio;
    cfg.ref_hidden = ref_hidden;
    cfg.rng_seed = rng_seed;
    cfg.out_dir = out_dir;
    fs::create_directories(out_dir);
    RunRegistry registry(out_dir + "/registry.jsonl");
    ExperimentOutcome outcome = run_experiment(cfg, task, registry, force);
    std::cout << "config " << config_hash(cfg) << ": ran " << outcome.ran << ", skipped "
              << outcome.skipped << ", failed " << outcome.failed << "\n";
    for (const RunRow& row : outcome.new_rows)
        std::cout << "  seed " << row.seed << ": " << row.metric << "=" << row.value << " ("
                  << row.status << ")\n";
    return 0;
}

int cmd_launch(const std::string& configs_path, const std::string& tasks_dir,
               const std::string& out_dir, int workers, bool force) {
    std::ifstream in(configs_path);
    if (!in) throw ParameterError("launch: cannot open " + configs_path);
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("launch: " + configs_path + ": " + e.what());
    }
    if (!arr.is_array()) throw ParseError("launch: " + configs_path + ": expected a JSON array");
    std::map<std::string, Task> tasks = load_tasks_dir(tasks_dir);
    std::vector<std::pair<ExperimentConfig, const Task*>> jobs;
    for (const auto& j : arr) {
        ExperimentConfig cfg = config_from_json(j);
        jobs.emplace_back(cfg, &resolve_task(tasks, cfg.task_ref));
    }
    fs::create_directories(out_dir);
    RunRegistry registry(out_dir + "/registry.jsonl");
    ExperimentOutcome outcome = launch_batch(jobs, registry, workers, force);
    std::cout << jobs.size() << " configs: ran " << outcome.ran << ", skipped "
              << outcome.skipped << ", failed " << outcome.failed << "\n";
    return 0;
}

int cmd_crs(const std::string& dimension, int S, double epsilon, const std::string& tasks_dir,
            const std::string& space_name, const std::string& out_dir, std::uint64_t seed,
            const std::string& seeds_csv, int ref_hidden) {
    std::map<std::string, Task> tasks = load_tasks_dir(tasks_dir);
    std::vector<std::string> task_ids;
    for (const auto& [id, t] : tasks) task_ids.push_back(id);
    SpaceSpec space = resolve_space(space_name);
    CrsPlan plan = make_crs_plan(space, task_ids, dimension, S, seed);
    ProtocolOptions opts;
    opts.seeds = parse_seed_list(seeds_csv);
    opts.ref_hidden = ref_hidden;
    auto eval = [&](const TokenDesign& td, const std::string& task_id) {
        return run_protocol(tasks.at(task_id), design_from_tokens(td), opts).mean_value;
    };
    CrsResults results = execute_crs(plan, eval);
    std::vector<RankDistribution> dists = aggregate_ranks(plan, results, epsilon);
    fs::create_directories(out_dir);
    write_crs_csv(out_dir + "/crs_" + dimension + ".csv", dimension, dists);
    write_crs_json(out_dir + "/crs_" + dimension + ".json", plan, results, epsilon);
    for (const auto& d : dists)
        std::cout << dimension << "=" << d.choice << ": mean rank " << d.mean_rank << "\n";
    return 0;
}

int cmd_anchors(const std::string& perf_csv, int M, const std::string& out_path) {
    PerfMatrix perf = perf_from_triples(perf_triples(read_aggregate_csv(perf_csv)));
    std::vector<std::string> anchors = select_anchors(perf, M);
    write_anchors_json(out_path, anchors, perf.content_hash());
    for (const auto& id : anchors) std::cout << id << "\n";
    return 0;
}

int cmd_simmatrix(const std::string& perf_csv, const std::string& out_path) {
    PerfMatrix perf = perf_from_triples(perf_triples(read_aggregate_csv(perf_csv)));
    SimilarityMatrix sim = similarity_matrix(perf);
    write_similarity_csv(out_path, sim);
    std::cout << "wrote " << sim.size() << "x" << sim.size() << " similarity matrix to "
              << out_path << "\n";
    return 0;
}

int cmd_transfer(const std::string& perf_csv, const std::string& sim_csv,
                 const std::string& out_path) {
    PerfMatrix perf = perf_from_triples(perf_triples(read_aggregate_csv(perf_csv)));
    SimilarityMatrix sim = read_similarity_csv(sim_csv);
    if (sim.task_ids != perf.task_ids)
        throw ParameterError("transfer: similarity matrix and perf matrix list different tasks");
    std::vector<std::vector<double>> tm = transfer_matrix(perf);
    if (!out_path.empty()) write_task_matrix_csv(out_path, perf.task_ids, tm);
    std::cout << "transfer_correlation=" << transfer_correlation(sim, tm) << "\n";
    return 0;
}

int cmd_anova(const std::string& results_path, double alpha, int dims, bool use_ranks,
              double epsilon) {
    auto [plan, results] = read_crs_json(results_path);
    AnovaResult res = crs_anova(plan, results, use_ranks, epsilon);
    double adjusted = bonferroni(res.p_value, dims);
    std::cout << "dimension=" << plan.dimension << " F=" << res.f_stat << " df=("
              << res.df_between << "," << res.df_within << ") p=" << res.p_value
              << " p_adjusted=" << adjusted << " significant="
              << (adjusted < alpha ? "true" : "false") << "\n";
    return 0;
}

int cmd_report(const std::string& registry_path, const std::string& out_path) {
    RunRegistry registry(registry_path);
    AggregateResult agg = aggregate_registry(registry.rows());
    write_aggregate_csv(out_path, agg);
    std::cout << "aggregated " << agg.rows.size() << " (task, design) groups to " << out_path
              << ", excluded " << agg.excluded_failed << " failed row(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Design-space exploration engine for message-passing networks"};
    app.require_subcommand(1);

    // gen-tasks
    auto* gen = app.add_subcommand("gen-tasks", "Synthesize the task suite and write task JSONs");
    std::string gen_out = "tasks";
    int gen_grid = 8, gen_per_bin = 4, gen_n_lo = 32, gen_n_hi = 64, gen_bins = 10;
    long long gen_budget = 50000;
    std::uint64_t gen_seed = 0;
    bool gen_link = false;
    gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
    gen->add_option("--grid", gen_grid, "Statistic grid resolution per axis")->capture_default_str();
    gen->add_option("--per-bin", gen_per_bin, "Graphs accepted per grid bin")->capture_default_str();
    gen->add_option("--n-lo", gen_n_lo, "Minimum graph size")->capture_default_str();
    gen->add_option("--n-hi", gen_n_hi, "Maximum graph size")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Generation seed")->capture_default_str();
    gen->add_option("--bins", gen_bins, "Label classes per task")->capture_default_str();
    gen->add_option("--budget", gen_budget, "Generation attempts before giving up")
        ->capture_default_str();
    gen->add_flag("--with-link", gen_link, "Also emit the two link prediction tasks");

    // enumerate
    auto* en = app.add_subcommand("enumerate", "List design ids of a space");
    std::string en_space = "full";
    bool en_count = false;
    long long en_limit = 0;
    en->add_option("--space", en_space, "full, condensed, or a space JSON file")
        ->capture_default_str();
    en->add_flag("--count-only", en_count, "Print only the cardinality");
    en->add_option("--limit", en_limit, "Stop after this many ids (0 = all)")
        ->capture_default_str();

    // sample
    auto* sa = app.add_subcommand("sample", "Sample designs uniformly from a space");
    std::string sa_space = "full";
    int sa_n = 10;
    std::uint64_t sa_seed = 0;
    sa->add_option("--space", sa_space, "full, condensed, or a space JSON file")
        ->capture_default_str();
    sa->add_option("--n", sa_n, "Number of designs")->capture_default_str();
    sa->add_option("--seed", sa_seed, "Sampling seed")->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "Run one experiment into a registry");
    std::string run_task, run_design, run_out = "results", run_seeds = "0,1,2";
    double run_ratio = 0.8;
    int run_hidden = 256;
    std::uint64_t run_rng = 0;
    bool run_force = false;
    run->add_option("--task", run_task, "Task JSON file")->required();
    run->add_option("--design", run_design, "Design id")->required();
    run->add_option("--out", run_out, "Output directory")->capture_default_str();
    run->add_option("--seeds", run_seeds, "Comma-separated split seeds")->capture_default_str();
    run->add_option("--ratio", run_ratio, "Train fraction per split")->capture_default_str();
    run->add_option("--ref-hidden", run_hidden, "Reference hidden width for the budget")
        ->capture_default_str();
    run->add_option("--rng-seed", run_rng, "Config-level seed salt")->capture_default_str();
    run->add_flag("--force", run_force, "Re-run completed seeds");

    // launch
    auto* la = app.add_subcommand("launch", "Run a batch of experiment configs");
    std::string la_configs, la_tasks, la_out = "results";
    int la_workers = 1;
    bool la_force = false;
    la->add_option("--configs", la_configs, "JSON array of experiment configs")->required();
    la->add_option("--tasks", la_tasks, "Directory of task JSONs")->required();
    la->add_option("--out", la_out, "Output directory")->capture_default_str();
    la->add_option("--workers", la_workers, "Worker threads")->capture_default_str();
    la->add_flag("--force", la_force, "Re-run completed seeds");

    // crs
    auto* crs = app.add_subcommand("crs", "Controlled random search over one dimension");
    std::string crs_dim, crs_tasks, crs_space = "full", crs_out = "crs", crs_seeds = "0,1,2";
    int crs_S = 96, crs_hidden = 256;
    double crs_eps = 0.02;
    std::uint64_t crs_seed = 0;
    crs->add_option("--dimension", crs_dim, "Dimension under study")->required();
    crs->add_option("--S", crs_S, "Number of sampled setups")->capture_default_str();
    crs->add_option("--epsilon", crs_eps, "Rank tolerance")->capture_default_str();
    crs->add_option("--tasks", crs_tasks, "Directory of task JSONs")->required();
    crs->add_option("--space", crs_space, "full, condensed, or a space JSON file")
        ->capture_default_str();
    crs->add_option("--out", crs_out, "Output directory")->capture_default_str();
    crs->add_option("--seed", crs_seed, "Plan sampling seed")->capture_default_str();
    crs->add_option("--seeds", crs_seeds, "Comma-separated split seeds per variant")
        ->capture_default_str();
    crs->add_option("--ref-hidden", crs_hidden, "Reference hidden width for the budget")
        ->capture_default_str();

    // anchors
    auto* an = app.add_subcommand("anchors", "Select anchor designs from an aggregate CSV");
    std::string an_perf, an_out = "anchors.json";
    int an_M = 12;
    an->add_option("--perf", an_perf, "Aggregate CSV (task,design,mean_value,...)")->required();
    an->add_option("--M", an_M, "Number of anchors")->capture_default_str();
    an->add_option("--out", an_out, "Output JSON file")->capture_default_str();

    // simmatrix
    auto* si = app.add_subcommand("simmatrix", "Task similarity matrix from an aggregate CSV");
    std::string si_perf, si_out = "similarity.csv";
    si->add_option("--perf", si_perf, "Aggregate CSV over anchor designs")->required();
    si->add_option("--out", si_out, "Output CSV file")->capture_default_str();

    // transfer
    auto* tr = app.add_subcommand("transfer", "Transferability vs similarity");
    std::string tr_perf, tr_sim, tr_out;
    tr->add_option("--perf", tr_perf, "Aggregate CSV over candidate designs")->required();
    tr->add_option("--sim", tr_sim, "Similarity CSV")->required();
    tr->add_option("--out", tr_out, "Optional output CSV for the transfer matrix");

    // anova
    auto* av = app.add_subcommand("anova", "Significance test over a CRS result file");
    std::string av_results;
    double av_alpha = 0.05, av_eps = 0.02;
    int av_dims = 12;
    bool av_ranks = false;
    av->add_option("--results", av_results, "CRS JSON result file")->required();
    av->add_option("--alpha", av_alpha, "Significance level")->capture_default_str();
    av->add_option("--dims", av_dims, "Dimensions tested (Bonferroni factor)")
        ->capture_default_str();
    av->add_flag("--use-ranks", av_ranks, "Test per-setup ranks instead of raw values");
    av->add_option("--epsilon", av_eps, "Rank tolerance when --use-ranks is set")
        ->capture_default_str();

    // report
    auto* re = app.add_subcommand("report", "Aggregate a registry into a CSV");
    std::string re_registry, re_out = "aggregate.csv";
    re->add_option("--registry", re_registry, "Registry JSONL file")->required();
    re->add_option("--out", re_out, "Output CSV file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_tasks(gen_out, gen_grid, gen_per_bin, gen_n_lo, gen_n_hi, gen_seed,
                                 gen_bins, gen_budget, gen_link);
        if (en->parsed()) return cmd_enumerate(en_space, en_count, en_limit);
        if (sa->parsed()) return cmd_sample(sa_space, sa_n, sa_seed);
        if (run->parsed())
            return cmd_run(run_task, run_design, run_out, run_seeds, run_ratio, run_hidden,
                           run_rng, run_force);
        if (la->parsed()) return cmd_launch(la_configs, la_tasks, la_out, la_workers, la_force);
        if (crs->parsed())
            return cmd_crs(crs_dim, crs_S, crs_eps, crs_tasks, crs_space, crs_out, crs_seed,
                           crs_seeds, crs_hidden);
        if (an->parsed()) return cmd_anchors(an_perf, an_M, an_out);
        if (si->parsed()) return cmd_simmatrix(si_perf, si_out);
        if (tr->parsed()) return cmd_transfer(tr_perf, tr_sim, tr_out);
        if (av->parsed()) return cmd_anova(av_results, av_alpha, av_dims, av_ranks, av_eps);
        if (re->parsed()) return cmd_report(re_registry, re_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
