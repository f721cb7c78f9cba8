#pragma once

// Conflict analyzers: consume the latest UNSAT path, extract a conflict core
// by binary elastic filtering (falling back to plain elastic filtering, then
// to the full path when the LP stalls), and publish the learned clause
// scoped to the path's input-split region.

#include <atomic>
#include <map>

#include "relucheck/bounds.hpp"
#include "relucheck/cdcl.hpp"
#include "relucheck/clause_pool.hpp"
#include "relucheck/elastic.hpp"
#include "relucheck/lp_network.hpp"

namespace relucheck {

// One input-split region; id 0 is the whole box when no split happened.
struct Subproblem {
    std::uint32_t id = 0;
    VerificationProblem problem;
};

struct SharedCounters {
    std::atomic<std::uint64_t> lp_calls{0};
    std::atomic<std::uint64_t> clauses_fetched{0};
    std::atomic<std::uint64_t> clauses_path_negation{0};
    std::atomic<std::uint64_t> clauses_bound_implied{0};
    std::atomic<std::uint64_t> clauses_elastic{0};
    std::atomic<std::uint64_t> clauses_input_split{0};

    void count_learned(ClauseOrigin origin) {
        switch (origin) {
            case ClauseOrigin::PathNegation: ++clauses_path_negation; break;
            case ClauseOrigin::BoundImplied: ++clauses_bound_implied; break;
            case ClauseOrigin::ElasticCore: ++clauses_elastic; break;
            case ClauseOrigin::InputSplit: ++clauses_input_split; break;
        }
    }
};

inline Clause clause_from_core(const std::vector<Literal>& core, ClauseOrigin origin) {
    if (core.empty()) throw std::invalid_argument("cannot build a clause from an empty core");
    Clause c;
    c.origin = origin;
    for (const Literal& l : core) c.literals.push_back(l.negated());
    c.validate();
    return c;
}

class ConflictAnalyzer {
public:
    ConflictAnalyzer(const std::vector<Subproblem>& subproblems, ClausePool& clauses, SharedCounters& counters,
                     ElasticBaseMode mode, const std::atomic<bool>* cancelled = nullptr, long lp_pivot_cap = 0)
        : subproblems_(subproblems),
          clauses_(clauses),
          counters_(counters),
          mode_(mode),
          cancelled_(cancelled),
          lp_pivot_cap_(lp_pivot_cap) {}

    // Processes one path; returns the published clause's sequence id, if any.
    std::optional<std::uint64_t> process(const UnsatPath& path) {
        const BaseEntry& base = base_for(path.subproblem_id);
        if (base.infeasible) return std::nullopt;  // region already refuted wholesale

        std::vector<PathConstraint> constraints;
        constraints.reserve(path.literals.size());
        for (const Literal& lit : path.literals)
            constraints.push_back(PathConstraint{lit, phase_rows_for_literal(base.net_lp.layout,
                                                                             base.net_lp.lp.num_vars, lit)});

        ElasticOutcome outcome = run_filters(base.net_lp.lp, constraints);
        if (outcome.kind != ElasticOutcome::Kind::Core) return std::nullopt;
        if (cancelled_ && cancelled_->load(std::memory_order_relaxed)) return std::nullopt;

        ClauseOrigin origin = outcome.core.origin == ConflictCore::Origin::FullPath ? ClauseOrigin::PathNegation
                                                                                    : ClauseOrigin::ElasticCore;
        Clause clause = clause_from_core(outcome.core.literals, origin);
        if (subproblems_.size() > 1) clause.scope = path.subproblem_id;
        auto pub = clauses_.publish(std::move(clause));
        if (!pub.added) return std::nullopt;
        counters_.count_learned(origin);
        return pub.seq;
    }

    // Thread body: take the latest path, analyze, repeat until shutdown.
    void loop(PathPool& paths) {
        while (true) {
            auto p = paths.wait_take_latest();
            if (!p) {
                if (paths.shutdown_requested()) return;
                continue;
            }
            process(*p);
        }
    }

private:
    struct BaseEntry {
        NetworkLp net_lp;
        bool infeasible = false;
    };

    ElasticOutcome run_filters(const LpProblem& base, const std::vector<PathConstraint>& constraints) {
        ElasticOutcome out = elastic_filter_binary(base, constraints);
        counters_.lp_calls += out.lp_solves;
        if (out.kind != ElasticOutcome::Kind::Stalled) return out;
        out = elastic_filter(base, constraints);
        counters_.lp_calls += out.lp_solves;
        return out;
    }

    const BaseEntry& base_for(std::uint32_t region) {
        auto it = cache_.find(region);
        if (it != cache_.end()) return it->second;
        const Subproblem& sub = subproblem(region);
        BaseEntry entry;
        auto bounds = propagate_bounds(*sub.problem.network, sub.problem.input_box, all_unknown(*sub.problem.network));
        if (std::holds_alternative<InfeasiblePhases>(bounds)) {
            entry.infeasible = true;
        } else {
            entry.net_lp = build_elastic_base(sub.problem, std::get<BoundsMap>(bounds), mode_);
            entry.net_lp.lp.max_pivots = lp_pivot_cap_;
            ++counters_.lp_calls;
            LpResult base_check = lp_solve(entry.net_lp.lp);
            entry.infeasible = base_check.status == LpResult::Status::Infeasible;
        }
        return cache_.emplace(region, std::move(entry)).first->second;
    }

    const Subproblem& subproblem(std::uint32_t region) const {
        for (const auto& s : subproblems_)
            if (s.id == region) return s;
        throw std::logic_error("unknown subproblem id");
    }

    const std::vector<Subproblem>& subproblems_;
    ClausePool& clauses_;
    SharedCounters& counters_;
    ElasticBaseMode mode_;
    const std::atomic<bool>* cancelled_;
    long lp_pivot_cap_;
    std::map<std::uint32_t, BaseEntry> cache_;
};

}  // namespace relucheck
