#pragma once

// Run reporting: stats JSON and results-CSV rows.

#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "relucheck/solver.hpp"

namespace relucheck {

inline nlohmann::json stats_json(const Verdict& verdict, const SolverStats& stats) {
    nlohmann::json j;
    j["verdict"] = verdict_string(verdict);
    j["wall_time_s"] = stats.wall_time_s;
    j["states_explored"] = stats.states_explored;
    j["unsat_paths"] = stats.unsat_paths;
    j["lp_calls"] = stats.lp_calls;
    j["clauses_fetched"] = stats.clauses_fetched;
    j["clauses_learned"] = {
        {"path_negation", stats.clauses_path_negation}, {"bound_implied", stats.clauses_bound_implied},
        {"elastic_core", stats.clauses_elastic},        {"input_split", stats.clauses_input_split},
        {"total", stats.clauses_learned_total()},
    };
    if (verdict.counterexample) {
        j["counterexample"] = verdict.counterexample->x;
        j["counterexample_output"] = verdict.counterexample->y;
    }
    return j;
}

inline constexpr const char* kResultsCsvHeader =
    "net,property,verdict,time_s,states,unsat_paths,clauses_learned,clauses_fetched,lp_calls";

struct RunRecord {
    std::string net_path;
    std::string property_path;
    std::string verdict;  // HOLDS | VIOLATED | TIMEOUT | STALLED (+"(prefilter)" tag)
    double wall_time_s = 0.0;
    SolverStats stats;
};

inline std::string csv_row(const RunRecord& r) {
    std::ostringstream out;
    out << r.net_path << "," << r.property_path << "," << r.verdict << "," << std::setprecision(6) << std::fixed
        << r.wall_time_s << "," << r.stats.states_explored << "," << r.stats.unsat_paths << ","
        << r.stats.clauses_learned_total() << "," << r.stats.clauses_fetched << "," << r.stats.lp_calls;
    return out.str();
}

}  // namespace relucheck
