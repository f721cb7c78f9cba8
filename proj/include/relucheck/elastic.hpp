#pragma once

// Elastic filtering over infeasible path systems: each branching constraint
// is relaxed with a nonnegative slack, the slack sum is minimized, and the
// largest slacks are pinned to zero until the system turns infeasible. The
// pinned constraints form the conflict core. A binary-search variant first
// filters out paths that are not LP-refutable at all.

#include <numeric>
#include <vector>

#include "relucheck/literal.hpp"
#include "relucheck/lp.hpp"

namespace relucheck {

struct PathConstraint {
    Literal literal;
    std::vector<LpRow> rows;  // all in `g <= rhs` form
};

struct ConflictCore {
    enum class Origin { ElasticFilter, BinaryElastic, FullPath };
    std::vector<Literal> literals;
    Origin origin = Origin::ElasticFilter;
};

struct ElasticOutcome {
    enum class Kind { Core, NotInfeasible, Stalled };
    Kind kind = Kind::Stalled;
    ConflictCore core;
    std::size_t lp_solves = 0;
};

namespace detail {

// Upper bound on how much slack row `g <= rhs` can ever need over the
// variable box; keeps the relaxed LP's variables two-sided.
inline double slack_cap(const LpProblem& base, const LpRow& row) {
    double worst = -row.rhs;
    for (std::size_t j = 0; j < base.num_vars; ++j) {
        double c = row.coeffs[j];
        worst += c * (c >= 0.0 ? base.upper[j] : base.lower[j]);
    }
    return std::max(worst, 0.0) + 1.0;
}

struct RelaxedLp {
    LpProblem lp;
    std::vector<std::vector<std::size_t>> slack_vars;  // per path constraint
};

inline RelaxedLp build_relaxed(const LpProblem& base, const std::vector<PathConstraint>& path) {
    RelaxedLp rl;
    rl.lp = base;
    rl.lp.objective = Vec(base.num_vars, 0.0);
    rl.slack_vars.resize(path.size());
    for (std::size_t g = 0; g < path.size(); ++g) {
        for (const LpRow& row : path[g].rows) {
            std::size_t s = rl.lp.add_var(0.0, slack_cap(base, row));
            rl.lp.objective->push_back(1.0);
            LpRow relaxed = row;
            relaxed.coeffs.resize(rl.lp.num_vars, 0.0);
            relaxed.coeffs[s] = -1.0;
            rl.lp.rows.push_back(std::move(relaxed));
            rl.slack_vars[g].push_back(s);
        }
    }
    for (auto& r : rl.lp.rows) r.coeffs.resize(rl.lp.num_vars, 0.0);
    rl.lp.objective->resize(rl.lp.num_vars, 0.0);
    return rl;
}

inline void pin(RelaxedLp& rl, std::size_t group) {
    for (std::size_t s : rl.slack_vars[group]) rl.lp.upper[s] = 0.0;
}

inline double group_slack(const RelaxedLp& rl, const Vec& point, std::size_t group) {
    double total = 0.0;
    for (std::size_t s : rl.slack_vars[group]) total += point[s];
    return total;
}

// Feasibility of base plus the given path constraints taken as hard rows.
inline LpResult solve_hard(const LpProblem& base, const std::vector<PathConstraint>& path, std::size_t prefix) {
    LpProblem lp = base;
    lp.objective.reset();
    for (std::size_t g = 0; g < prefix; ++g)
        for (const LpRow& row : path[g].rows) lp.add_row(row);
    return lp_solve(lp);
}

}  // namespace detail

inline constexpr double kSlackTieTol = 1e-9;

// Classic elastic program. Precondition: base alone is feasible and
// base plus the whole path is infeasible; a Stalled LP downgrades the core
// to the full path rather than guessing.
inline ElasticOutcome elastic_filter(const LpProblem& base, const std::vector<PathConstraint>& path) {
    if (path.empty()) throw std::invalid_argument("elastic filter needs a non-empty path");
    detail::RelaxedLp rl = detail::build_relaxed(base, path);
    std::vector<bool> pinned(path.size(), false);
    ConflictCore full;
    full.origin = ConflictCore::Origin::FullPath;
    for (const auto& pc : path) full.literals.push_back(pc.literal);

    ElasticOutcome out;
    std::vector<std::size_t> core_order;
    while (true) {
        LpResult res = lp_solve(rl.lp);
        ++out.lp_solves;
        if (res.status == LpResult::Status::Stalled) {
            out.kind = ElasticOutcome::Kind::Core;
            out.core = full;
            return out;
        }
        if (res.status == LpResult::Status::Infeasible) {
            out.kind = ElasticOutcome::Kind::Core;
            out.core.origin = ConflictCore::Origin::ElasticFilter;
            for (std::size_t g : core_order) out.core.literals.push_back(path[g].literal);
            return out;
        }
        double maxv = 0.0;
        for (std::size_t g = 0; g < path.size(); ++g)
            if (!pinned[g]) maxv = std::max(maxv, detail::group_slack(rl, res.point, g));
        if (maxv <= kSlackTieTol) {
            // Every remaining slack is zero: the whole system is satisfiable.
            out.kind = ElasticOutcome::Kind::NotInfeasible;
            return out;
        }
        for (std::size_t g = 0; g < path.size(); ++g) {
            if (pinned[g]) continue;
            if (detail::group_slack(rl, res.point, g) >= maxv - kSlackTieTol) {
                pinned[g] = true;
                detail::pin(rl, g);
                core_order.push_back(g);
            }
        }
    }
}

// Binary-search variant: pin everything first so paths that are not
// LP-refutable are filtered out with a single solve, then rank constraints
// by their relaxed slack and search for the shortest infeasible prefix.
inline ElasticOutcome elastic_filter_binary(const LpProblem& base, const std::vector<PathConstraint>& path) {
    if (path.empty()) throw std::invalid_argument("elastic filter needs a non-empty path");
    ElasticOutcome out;

    LpResult all_hard = detail::solve_hard(base, path, path.size());
    ++out.lp_solves;
    if (all_hard.status == LpResult::Status::Stalled) return out;  // Stalled
    if (all_hard.feasible()) {
        out.kind = ElasticOutcome::Kind::NotInfeasible;
        return out;
    }

    detail::RelaxedLp rl = detail::build_relaxed(base, path);
    LpResult relaxed = lp_solve(rl.lp);
    ++out.lp_solves;
    if (relaxed.status == LpResult::Status::Stalled) return out;
    if (!relaxed.feasible())
        throw std::logic_error("elastic base must be feasible");

    std::vector<std::size_t> order(path.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> slack(path.size());
    for (std::size_t g = 0; g < path.size(); ++g) slack[g] = detail::group_slack(rl, relaxed.point, g);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return slack[a] > slack[b]; });

    std::vector<PathConstraint> ranked;
    for (std::size_t g : order) ranked.push_back(path[g]);

    std::size_t lo = 1, hi = ranked.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        LpResult res = detail::solve_hard(base, ranked, mid);
        ++out.lp_solves;
        if (res.status == LpResult::Status::Stalled) return out;
        if (res.status == LpResult::Status::Infeasible)
            hi = mid;
        else
            lo = mid + 1;
    }
    out.kind = ElasticOutcome::Kind::Core;
    out.core.origin = ConflictCore::Origin::BinaryElastic;
    for (std::size_t g = 0; g < hi; ++g) out.core.literals.push_back(ranked[g].literal);
    return out;
}

}  // namespace relucheck
