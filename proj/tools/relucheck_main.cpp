// relucheck: CDCL-accelerated verification of ReLU network properties over
// box input regions. Single-task and batch (manifest CSV) modes.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "relucheck/report.hpp"
#include "relucheck/solver.hpp"

namespace {

using namespace relucheck;

struct CliOptions {
    std::string net_path;
    std::string property_path;
    std::string manifest_path;
    std::string results_out = "results.csv";
    std::string stats_out;
    std::string tree_out;
    std::string clauses_out;
    bool pgd_prefilter = false;
    bool ablate_clauses = false;
    bool normalize = false;
    SolverConfig config;
};

VerificationProblem load_problem(const CliOptions& opt, const std::string& net_path,
                                 const std::string& property_path) {
    std::ifstream net_in(net_path);
    if (!net_in) throw std::runtime_error("cannot open network file: " + net_path);
    auto net = std::make_shared<Network>(load_nnet(net_in));
    std::ifstream prop_in(property_path);
    if (!prop_in) throw std::runtime_error("cannot open property file: " + property_path);
    ParsedProperty prop = parse_property(prop_in);
    VerificationProblem problem = make_problem(net, prop);
    if (opt.normalize) {
        Box raw = problem.input_box;
        problem.input_box.lower = net->normalize_input(raw.lower);
        problem.input_box.upper = net->normalize_input(raw.upper);
        problem.validate();
    }
    return problem;
}

struct TaskResult {
    Verdict verdict;
    SolverStats stats;
    SearchForest forest;
    std::vector<Clause> pool_clauses;
    bool from_prefilter = false;
    std::uint64_t states_no_learning = 0;
    bool has_ablation = false;
};

TaskResult run_task(const CliOptions& opt, const VerificationProblem& problem, double timeout_s) {
    SolverConfig cfg = opt.config;
    cfg.timeout_s = timeout_s;
    TaskResult res;
    if (opt.pgd_prefilter) {
        LocalSearchResult attack = pgd_prefilter(problem, cfg.pgd, cfg.seed);
        if (attack.found) {
            res.verdict = Verdict::violated(std::move(attack.cex));
            res.from_prefilter = true;
            return res;
        }
    }
    VerifyOutcome out = verify(problem, cfg);
    res.verdict = std::move(out.verdict);
    res.stats = out.stats;
    res.forest = std::move(out.forest);
    res.pool_clauses = std::move(out.pool_clauses);
    if (opt.ablate_clauses) {
        SolverConfig off = cfg;
        off.clause_learning = false;
        VerifyOutcome plain = verify(problem, off);
        res.states_no_learning = plain.stats.states_explored;
        res.has_ablation = true;
    }
    return res;
}

int exit_code_for(const Verdict& v) {
    switch (v.kind) {
        case VerdictKind::Holds: return 0;
        case VerdictKind::Violated: return 1;
        case VerdictKind::Unknown: return 2;
    }
    return 2;
}

int run_single(const CliOptions& opt) {
    VerificationProblem problem = load_problem(opt, opt.net_path, opt.property_path);
    TaskResult res = run_task(opt, problem, opt.config.timeout_s);
    std::cout << verdict_string(res.verdict) << "\n";
    if (res.verdict.counterexample) {
        const Vec& x = res.verdict.counterexample->x;
        std::cout << "counterexample:";
        for (double v : x) std::cout << " " << std::setprecision(17) << v;
        std::cout << "\n";
    }
    if (!opt.stats_out.empty()) {
        nlohmann::json j = stats_json(res.verdict, res.stats);
        if (res.from_prefilter) j["prefilter"] = true;
        if (res.has_ablation) j["states_no_learning"] = res.states_no_learning;
        std::ofstream out(opt.stats_out);
        out << j.dump(2) << "\n";
    }
    if (!opt.tree_out.empty()) {
        std::ofstream out(opt.tree_out);
        res.forest.write_dot(out);
    }
    if (!opt.clauses_out.empty()) {
        std::ofstream out(opt.clauses_out);
        dump_clauses(res.pool_clauses, out);
    }
    return exit_code_for(res.verdict);
}

struct ManifestTask {
    std::string net_path;
    std::string property_path;
    double timeout_s;
};

std::vector<ManifestTask> parse_manifest(const std::string& path, double default_timeout) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    std::vector<ManifestTask> tasks;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("net_path", 0) == 0) continue;  // header row
        std::istringstream ss(line);
        ManifestTask t;
        std::string timeout_field;
        if (!std::getline(ss, t.net_path, ',') || !std::getline(ss, t.property_path, ','))
            throw std::runtime_error("manifest row needs net_path,property_path[,timeout_s]: " + line);
        t.timeout_s = std::getline(ss, timeout_field, ',') && !timeout_field.empty() ? std::stod(timeout_field)
                                                                                     : default_timeout;
        tasks.push_back(std::move(t));
    }
    return tasks;
}

int run_batch(const CliOptions& opt) {
    std::vector<ManifestTask> tasks = parse_manifest(opt.manifest_path, opt.config.timeout_s);
    std::ofstream out(opt.results_out);
    if (!out) throw std::runtime_error("cannot open results file: " + opt.results_out);
    out << kResultsCsvHeader;
    if (opt.ablate_clauses) out << ",states_no_learning";
    out << "\n";
    for (const ManifestTask& task : tasks) {
        RunRecord rec;
        rec.net_path = task.net_path;
        rec.property_path = task.property_path;
        std::uint64_t states_off = 0;
        bool has_off = false;
        try {
            VerificationProblem problem = load_problem(opt, task.net_path, task.property_path);
            auto t0 = std::chrono::steady_clock::now();
            TaskResult res = run_task(opt, problem, task.timeout_s);
            rec.verdict = verdict_string(res.verdict);
            if (res.from_prefilter) rec.verdict += "(prefilter)";
            rec.stats = res.stats;
            rec.wall_time_s = opt.config.deterministic
                                  ? 0.0
                                  : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            states_off = res.states_no_learning;
            has_off = res.has_ablation;
        } catch (const std::exception& e) {
            rec.verdict = "ERROR";
            std::cerr << "task failed (" << task.net_path << ", " << task.property_path << "): " << e.what() << "\n";
        }
        out << csv_row(rec);
        if (opt.ablate_clauses) out << "," << (has_off ? std::to_string(states_off) : std::string());
        out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CDCL-accelerated ReLU network verifier"};
    CliOptions opt;

    app.add_option("--net", opt.net_path, "Network in NNet text format");
    app.add_option("--property", opt.property_path, "Property file (box tightenings + unsafe constraints)");
    app.add_option("--manifest", opt.manifest_path, "Batch manifest CSV: net_path,property_path,timeout_s");
    app.add_option("--results-out", opt.results_out, "Batch results CSV path");
    app.add_option("--timeout", opt.config.timeout_s, "Timeout in seconds (default per task)");
    app.add_option("--n-solvers", opt.config.n_solvers, "Solver worker threads");
    app.add_option("--m-analyzers", opt.config.m_analyzers, "Conflict analyzer threads");
    app.add_option("--split-threshold", opt.config.input_split_threshold, "Input partition rounds (2^k regions)");
    app.add_option("--branch", opt.config.branch_heuristic, "Branch heuristic: widest|earliest");
    app.add_flag("--deterministic", opt.config.deterministic, "Single-threaded reproducible mode");
    app.add_option("--seed", opt.config.seed, "Random seed");
    app.add_flag("--pgd-prefilter", opt.pgd_prefilter, "Try a PGD attack before complete verification");
    app.add_flag("--ablate-clauses", opt.ablate_clauses, "Also run with clause learning disabled");
    app.add_option("--stats-out", opt.stats_out, "Write stats JSON here");
    app.add_option("--tree-out", opt.tree_out, "Write the search forest as DOT here");
    app.add_option("--clauses-out", opt.clauses_out, "Write the clause-pool audit dump here");
    app.add_option("--dump-lp", opt.config.dump_lp_dir, "Dump every LP in CPLEX-LP format into this directory");
    std::string elastic_base = "relaxed";
    app.add_option("--elastic-base", elastic_base, "Elastic filter base LP: relaxed|boxonly");
    app.add_flag("--normalize", opt.normalize, "Apply the NNet normalization block to the input box");
    app.add_option("--pgd-steps", opt.config.pgd.steps, "PGD iterations per restart");
    app.add_option("--pgd-step-size", opt.config.pgd.step_size, "PGD step size");
    app.add_option("--pgd-restarts", opt.config.pgd.restarts, "PGD restarts");

    try {
        app.parse(argc, argv);
        if (elastic_base == "relaxed")
            opt.config.elastic_base = ElasticBaseMode::Relaxed;
        else if (elastic_base == "boxonly")
            opt.config.elastic_base = ElasticBaseMode::BoxOnly;
        else
            throw CLI::ValidationError("--elastic-base must be relaxed or boxonly");

        bool batch = !opt.manifest_path.empty();
        bool single = !opt.net_path.empty() || !opt.property_path.empty();
        if (batch == single)
            throw CLI::ValidationError("specify either --net/--property or --manifest");
        if (single && (opt.net_path.empty() || opt.property_path.empty()))
            throw CLI::ValidationError("single mode needs both --net and --property");
        opt.config.validate();

        return batch ? run_batch(opt) : run_single(opt);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
