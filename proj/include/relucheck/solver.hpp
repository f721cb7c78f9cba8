#pragma once

// The verification loop: clause sync, unit propagation, bound and LP theory
// checks, UNSAT-path submission, counterexample search, branching, input
// splitting, and verdict aggregation across solver workers.

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "relucheck/analyzer.hpp"
#include "relucheck/bounds.hpp"
#include "relucheck/cdcl.hpp"
#include "relucheck/clause_pool.hpp"
#include "relucheck/lp_network.hpp"
#include "relucheck/property.hpp"

namespace relucheck {

struct PgdConfig {
    int steps = 100;
    double step_size = 0.01;
    int restarts = 10;
};

struct SolverConfig {
    int n_solvers = 1;
    int m_analyzers = 1;
    int input_split_threshold = 2;  // 2^threshold regions
    double timeout_s = 60.0;
    std::uint64_t seed = 1;
    bool deterministic = false;
    PgdConfig pgd;
    std::string branch_heuristic = "widest";  // or "earliest"
    bool clause_learning = true;
    ElasticBaseMode elastic_base = ElasticBaseMode::Relaxed;
    std::string dump_lp_dir;
    std::size_t path_pool_capacity = 64;
    long lp_pivot_cap = 0;  // 0: engine default; small values force Stalled handling

    void validate() const {
        if (n_solvers < 1) throw std::invalid_argument("n_solvers must be >= 1");
        if (m_analyzers < 0) throw std::invalid_argument("m_analyzers must be >= 0");
        if (input_split_threshold < 0) throw std::invalid_argument("split threshold must be >= 0");
        if (branch_heuristic != "widest" && branch_heuristic != "earliest")
            throw std::invalid_argument("unknown branch heuristic: " + branch_heuristic);
    }
};

enum class VerdictKind { Holds, Violated, Unknown };
enum class UnknownReason { Timeout, Stalled };

struct Verdict {
    VerdictKind kind = VerdictKind::Unknown;
    UnknownReason reason = UnknownReason::Timeout;
    std::optional<Counterexample> counterexample;

    static Verdict holds() { return {VerdictKind::Holds, UnknownReason::Timeout, std::nullopt}; }
    static Verdict violated(Counterexample cex) {
        return {VerdictKind::Violated, UnknownReason::Timeout, std::move(cex)};
    }
    static Verdict unknown(UnknownReason r) { return {VerdictKind::Unknown, r, std::nullopt}; }
};

inline const char* verdict_string(const Verdict& v) {
    switch (v.kind) {
        case VerdictKind::Holds: return "HOLDS";
        case VerdictKind::Violated: return "VIOLATED";
        case VerdictKind::Unknown: return v.reason == UnknownReason::Timeout ? "TIMEOUT" : "STALLED";
    }
    return "?";
}

struct SolverStats {
    std::uint64_t states_explored = 0;
    std::uint64_t unsat_paths = 0;
    std::uint64_t clauses_path_negation = 0;
    std::uint64_t clauses_bound_implied = 0;
    std::uint64_t clauses_elastic = 0;
    std::uint64_t clauses_input_split = 0;
    std::uint64_t clauses_fetched = 0;
    std::uint64_t lp_calls = 0;
    double wall_time_s = 0.0;

    std::uint64_t clauses_learned_total() const {
        return clauses_path_negation + clauses_bound_implied + clauses_elastic + clauses_input_split;
    }
};

enum class NodeStatus { Branched, UnsatBounds, UnsatLP, Sat, PrunedByClause };

inline const char* to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::Branched: return "branched";
        case NodeStatus::UnsatBounds: return "unsat_bounds";
        case NodeStatus::UnsatLP: return "unsat_lp";
        case NodeStatus::Sat: return "sat";
        case NodeStatus::PrunedByClause: return "pruned_by_clause";
    }
    return "?";
}

struct SearchTreeNode {
    std::uint64_t id = 0;
    std::int64_t parent = -1;  // -1 for region roots
    std::string label;
    NodeStatus status = NodeStatus::Branched;
    std::uint32_t region = 0;
};

struct SearchForest {
    std::vector<SearchTreeNode> nodes;

    // Red marks clause-learned refutations in the exported tree comparison.
    void write_dot(std::ostream& out) const {
        auto color = [](NodeStatus s) {
            switch (s) {
                case NodeStatus::Branched: return "lightgray";
                case NodeStatus::UnsatBounds: return "orange";
                case NodeStatus::UnsatLP: return "lightblue";
                case NodeStatus::Sat: return "green";
                case NodeStatus::PrunedByClause: return "red";
            }
            return "white";
        };
        out << "digraph search_forest {\n  node [shape=box, style=filled];\n";
        for (const auto& n : nodes)
            out << "  n" << n.id << " [label=\"" << n.label << "\", fillcolor=\"" << color(n.status) << "\"];\n";
        for (const auto& n : nodes)
            if (n.parent >= 0) out << "  n" << n.parent << " -> n" << n.id << ";\n";
        out << "}\n";
    }
};

struct VerifyOutcome {
    Verdict verdict;
    SolverStats stats;
    SearchForest forest;
    std::vector<Clause> pool_clauses;  // every clause published during the run
};

// ---------------------------------------------------------------------------
// Input splitting

// Bisects the widest box dimension recursively until 2^threshold regions
// exist. Each region's id doubles as the synthetic split guard scoping the
// clauses learned inside it.
inline std::vector<Subproblem> split_input(const VerificationProblem& problem, int threshold) {
    if (threshold < 0) throw std::invalid_argument("split threshold must be >= 0");
    std::vector<Box> regions{problem.input_box};
    for (int round = 0; round < threshold; ++round) {
        std::vector<Box> next;
        next.reserve(regions.size() * 2);
        for (const Box& b : regions) {
            std::size_t widest = 0;
            double width = -1.0;
            for (std::size_t i = 0; i < b.dim(); ++i)
                if (b.upper[i] - b.lower[i] > width) width = b.upper[i] - b.lower[i], widest = i;
            double mid = 0.5 * (b.lower[widest] + b.upper[widest]);
            Box lo = b, hi = b;
            lo.upper[widest] = mid;
            hi.lower[widest] = mid;
            next.push_back(std::move(lo));
            next.push_back(std::move(hi));
        }
        regions = std::move(next);
    }
    std::vector<Subproblem> subs;
    subs.reserve(regions.size());
    for (std::size_t i = 0; i < regions.size(); ++i) {
        Subproblem s;
        s.id = static_cast<std::uint32_t>(i);
        s.problem = problem;
        s.problem.input_box = regions[i];
        subs.push_back(std::move(s));
    }
    return subs;
}

// ---------------------------------------------------------------------------
// Counterexample search

struct LocalSearchResult {
    bool found = false;
    Counterexample cex;
    int iterations = 0;
};

// Projected sign-gradient ascent on the minimum unsafe-constraint slack,
// clamped to the box each step. Returns Found only on validated points.
inline LocalSearchResult local_counterexample_search(const VerificationProblem& problem, const Vec& start,
                                                     const PgdConfig& pgd) {
    const Network& net = *problem.network;
    Vec x = problem.input_box.clamp(start);
    LocalSearchResult out;
    for (int it = 0; it <= pgd.steps; ++it) {
        CheckResult chk = check_counterexample(problem, x);
        if (chk.valid) {
            out.found = true;
            out.cex = std::move(chk.cex);
            out.iterations = it;
            return out;
        }
        if (it == pgd.steps) break;
        Vec y = net.evaluate(x);
        std::size_t worst = 0;
        double worst_slack = problem.unsafe[0].slack(y);
        for (std::size_t i = 1; i < problem.unsafe.size(); ++i) {
            double s = problem.unsafe[i].slack(y);
            if (s < worst_slack) worst_slack = s, worst = i;
        }
        const LinearConstraint& c = problem.unsafe[worst];
        Vec objective = c.coeffs;
        if (c.relation == Relation::LessEq)
            for (double& v : objective) v = -v;
        Vec grad = net.input_gradient(x, objective);
        bool moved = false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double step = grad[i] > 0.0 ? pgd.step_size : (grad[i] < 0.0 ? -pgd.step_size : 0.0);
            if (step != 0.0) moved = true;
            x[i] += step;
        }
        x = problem.input_box.clamp(std::move(x));
        if (!moved) break;  // zero gradient: stuck on a plateau
    }
    return out;
}

// Multi-restart PGD attack from random box points.
inline LocalSearchResult pgd_prefilter(const VerificationProblem& problem, const PgdConfig& pgd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Box& box = problem.input_box;
    for (int r = 0; r < pgd.restarts; ++r) {
        Vec x0(box.dim());
        for (std::size_t i = 0; i < x0.size(); ++i) {
            std::uniform_real_distribution<double> dist(box.lower[i], box.upper[i]);
            x0[i] = dist(rng);
        }
        LocalSearchResult res = local_counterexample_search(problem, x0, pgd);
        if (res.found) return res;
    }
    return {};
}

// ---------------------------------------------------------------------------
// Branch selection

// Default "widest": maximize min(-lo, hi) of the pre-activation interval.
// "earliest": lowest layer, then lowest index. Ties fall to the lower
// layer/index; the Active phase is tried first either way.
inline Literal branch_select(const Network& net, const BoundsMap& bounds, const Trail& trail,
                             const std::string& heuristic) {
    std::optional<NeuronId> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < net.hidden_layer_count(); ++k) {
        for (std::size_t i = 0; i < net.hidden_width(k); ++i) {
            NeuronId id{k, i};
            if (trail.assigned(id)) continue;
            if (heuristic == "earliest") return Literal{id, true};
            const NeuronBounds& nb = bounds.hidden[k][i];
            double score = std::min(-nb.pre_lo, nb.pre_hi);
            if (score > best_score) {
                best_score = score;
                best = id;
            }
        }
    }
    if (!best) throw std::logic_error("branch_select: no unassigned neuron");
    return Literal{*best, true};
}

// ---------------------------------------------------------------------------
// Worker

namespace detail {

struct SharedRun {
    ClausePool clause_pool;
    PathPool path_pool;
    SharedCounters counters;
    std::atomic<bool> cancel{false};
    std::atomic<bool> timed_out{false};
    std::atomic<bool> stalled{false};
    std::atomic<std::uint64_t> next_node_id{0};
    std::mutex verdict_mu;
    std::optional<Counterexample> first_cex;
    std::mutex forest_mu;
    std::vector<SearchTreeNode> nodes;
    std::chrono::steady_clock::time_point deadline;
    bool has_deadline = false;
    std::atomic<std::uint64_t> lp_dump_counter{0};

    explicit SharedRun(std::size_t path_capacity) : path_pool(path_capacity) {}
};

class SolverWorker {
public:
    SolverWorker(const Subproblem& sub, const std::vector<Subproblem>& all_subs, const SolverConfig& cfg,
                 SharedRun& shared, ConflictAnalyzer* inline_analyzer)
        : sub_(sub),
          all_subs_(all_subs),
          cfg_(cfg),
          shared_(shared),
          inline_analyzer_(inline_analyzer),
          space_(HiddenSpace::of(*sub.problem.network)),
          trail_(space_),
          db_(space_) {}

    enum class Outcome { Unsat, Violated, Timeout, Stalled, Cancelled };

    Outcome run() {
        const Network& net = *sub_.problem.network;
        pending_ = Pending{"root " + std::to_string(sub_.id), -1, 0, true};

        while (true) {
            if (shared_.cancel.load(std::memory_order_relaxed)) return Outcome::Cancelled;
            if (shared_.has_deadline && std::chrono::steady_clock::now() > shared_.deadline) {
                shared_.timed_out.store(true);
                return Outcome::Timeout;
            }

            // (1) synchronize newly learned clauses
            if (cfg_.clause_learning) {
                StepResult sync = fetch_clauses();
                if (sync == StepResult::Refuted) return Outcome::Unsat;
                if (sync == StepResult::Conflicted) continue;
            }

            // (2) unit propagation; a conflict backjumps and restarts at (1)
            StepResult prop = propagate();
            if (prop == StepResult::Refuted) return Outcome::Unsat;
            if (prop == StepResult::Conflicted) continue;

            // (3) abstract state check via bound propagation
            if (pending_) create_node(NodeStatus::Branched);
            PhaseMap phases = phases_from_trail();
            BoundsResult br = propagate_bounds(net, sub_.problem.input_box, phases);
            bool bounds_refute = std::holds_alternative<InfeasiblePhases>(br);
            const BoundsMap* bounds = bounds_refute ? nullptr : &std::get<BoundsMap>(br);
            if (!bounds_refute && check_unsafe_by_bounds(*bounds, sub_.problem.unsafe) == ReachVerdict::CannotReach)
                bounds_refute = true;
            if (bounds_refute) {
                StepResult r = refute_current(NodeStatus::UnsatBounds);
                if (r == StepResult::Refuted) return Outcome::Unsat;
                continue;
            }

            // (4) bound-implied phase clauses: install, publish, apply
            if (cfg_.clause_learning) {
                StepResult derived = derive_and_install(*bounds);
                if (derived == StepResult::Refuted) return Outcome::Unsat;
                if (derived == StepResult::Conflicted) continue;
            }

            // (5) LP feasibility under the phases the bounds were built for
            NetworkLp nl = build_lp(sub_.problem, phases, *bounds);
            nl.lp.max_pivots = cfg_.lp_pivot_cap;
            ++shared_.counters.lp_calls;
            maybe_dump_lp(nl.lp);
            LpResult lp_res = lp_solve(nl.lp);
            if (lp_res.status == LpResult::Status::Infeasible) {
                StepResult r = refute_current(NodeStatus::UnsatLP);
                if (r == StepResult::Refuted) return Outcome::Unsat;
                continue;
            }
            bool lp_stalled = lp_res.status == LpResult::Status::Stalled;

            // (6) localized counterexample search from the LP point
            if (!lp_stalled) {
                Vec start(net.input_dim());
                for (std::size_t i = 0; i < start.size(); ++i) start[i] = lp_res.point[nl.layout.input_var(i)];
                LocalSearchResult found = local_counterexample_search(sub_.problem, start, cfg_.pgd);
                if (found.found) {
                    mark_current(NodeStatus::Sat);
                    report_violation(std::move(found.cex));
                    return Outcome::Violated;
                }
            }

            // (7) branch, or resolve a full-pattern leaf
            if (trail_.size() < net.hidden_count()) {
                Literal lit = branch_select(net, *bounds, trail_, cfg_.branch_heuristic);
                std::int64_t parent = node_levels_.empty() ? -1 : static_cast<std::int64_t>(node_levels_.back());
                trail_.decide(lit);
                if (!cfg_.clause_learning) flip_stack_.push_back(false);
                pending_ = Pending{to_string(lit), parent, trail_.current_level(), true};
                continue;
            }
            if (lp_stalled) {
                shared_.stalled.store(true);
                return Outcome::Stalled;
            }
            LeafAction act = resolve_leaf(nl);
            if (act == LeafAction::Violated) return Outcome::Violated;
            if (act == LeafAction::Refute) {
                StepResult r = refute_current(NodeStatus::UnsatLP);
                if (r == StepResult::Refuted) return Outcome::Unsat;
                continue;
            }
            shared_.stalled.store(true);
            return Outcome::Stalled;
        }
    }

private:
    enum class StepResult { Ok, Conflicted, Refuted };
    enum class LeafAction { Violated, Refute, Stalled };

    struct Pending {
        std::string label;
        std::int64_t parent = -1;
        std::uint32_t level = 0;
        bool is_decision = true;
    };

    StepResult fetch_clauses() {
        auto fresh = shared_.clause_pool.fetch_since(cursor_);
        for (Clause& c : fresh) {
            cursor_ = std::max(cursor_, c.id);
            if (own_published_.count(c.id)) continue;
            if (c.scope && *c.scope != sub_.id) continue;  // vacuous outside its region
            ++shared_.counters.clauses_fetched;
            c.scope.reset();
            pending_install_.push_back(std::move(c));
        }
        while (!pending_install_.empty()) {
            Clause c = std::move(pending_install_.front());
            pending_install_.pop_front();
            StepResult r = install_local(std::move(c));
            if (r != StepResult::Ok) return r;  // leftovers drain on the next loop pass
        }
        return StepResult::Ok;
    }

    StepResult propagate() {
        auto pr = db_.propagate(trail_);
        if (!pr.conflict) return StepResult::Ok;
        return handle_clause_conflict(pr.conflict_clause);
    }

    // A propagation conflict refutes the current decision set outright, so
    // the progress clause is its path negation: one literal per decision
    // level, always asserting after the jump. The conflicting clause itself
    // is re-checked and may cascade the jump further toward level 0.
    StepResult handle_clause_conflict(std::uint32_t conflict_idx) {
        if (pending_) create_node(NodeStatus::PrunedByClause);
        while (true) {
            const Clause& conflicting = db_.clause(conflict_idx);
            BackjumpResult bj = backjump_level(conflicting, trail_);
            if (bj.refuted) return StepResult::Refuted;
            std::vector<Literal> decisions = trail_.decisions();
            if (decisions.empty()) return StepResult::Refuted;
            if (!cfg_.clause_learning)
                return chronological_flip() ? StepResult::Conflicted : StepResult::Refuted;
            Clause guard = learn_from_core(decisions, trail_, ClauseOrigin::PathNegation);
            shared_.counters.count_learned(ClauseOrigin::PathNegation);
            std::uint32_t gidx = db_.add(std::move(guard), trail_);
            if (!resolve_conflict(db_.clause(gidx), gidx)) return StepResult::Refuted;
            if (!db_.falsified(db_.clause(conflict_idx), trail_)) return StepResult::Conflicted;
        }
    }

    StepResult derive_and_install(const BoundsMap& bounds) {
        auto derived = derive_phase_clauses(*sub_.problem.network, bounds, trail_.fixed_literals());
        for (Clause& c : derived) {
            shared_.counters.count_learned(ClauseOrigin::BoundImplied);
            Clause pool_copy = c;
            if (all_subs_.size() > 1) pool_copy.scope = sub_.id;
            if (!shared_.cancel.load(std::memory_order_relaxed)) {
                auto pub = shared_.clause_pool.publish(std::move(pool_copy));
                if (pub.added) own_published_.insert(pub.seq);
            }
            StepResult r = install_local(std::move(c));
            if (r != StepResult::Ok) return r;
        }
        return StepResult::Ok;
    }

    // Installs a clause into the worker-local database, resolving a
    // falsified one right away.
    StepResult install_local(Clause c) {
        InstallResult res = install_clause(db_, trail_, std::move(c));
        if (res.state != InstallResult::State::Falsified) return StepResult::Ok;
        return handle_clause_conflict(res.index);
    }

    // Backjump on a falsified clause and assert its now-open literal. The
    // asserted literal labels the next search-tree node (the branch flip).
    // Returns false when the clause is falsified entirely at level 0.
    bool resolve_conflict(const Clause& clause, std::uint32_t idx) {
        BackjumpResult bj = backjump_level(clause, trail_);
        if (bj.refuted) return false;
        trail_.backtrack(bj.level);
        std::size_t non_false = 0;
        const Literal* open = nullptr;
        for (const Literal& l : clause.literals) {
            if (trail_.value_of(l) != LitTruth::False) {
                ++non_false;
                open = &l;
            }
        }
        if (non_false == 1) {
            std::int64_t parent =
                bj.level < node_levels_.size() ? static_cast<std::int64_t>(node_levels_[bj.level]) : -1;
            trail_.assign(*open, Reason::propagated(idx));
            pending_ = Pending{to_string(*open), parent, bj.level, false};
        }
        return true;
    }

    void create_node(NodeStatus status) {
        SearchTreeNode n;
        n.id = shared_.next_node_id.fetch_add(1);
        n.parent = pending_->parent;
        n.label = pending_->label;
        n.status = status;
        n.region = sub_.id;
        {
            std::lock_guard<std::mutex> lock(shared_.forest_mu);
            shared_.nodes.push_back(n);
        }
        if (pending_->is_decision) {
            node_levels_.resize(pending_->level);
            node_levels_.push_back(n.id);
        } else {
            node_levels_.resize(pending_->level + 1);
            node_levels_[pending_->level] = n.id;
        }
        current_node_ = n.id;
        pending_.reset();
    }

    void mark_current(NodeStatus status) {
        std::lock_guard<std::mutex> lock(shared_.forest_mu);
        for (auto& n : shared_.nodes)
            if (n.id == current_node_) {
                n.status = status;
                break;
            }
    }

    // Shared handling for bound- and LP-refuted states: record the node,
    // submit the path for asynchronous analysis, learn the path-negation
    // clause locally, and backjump.
    StepResult refute_current(NodeStatus status) {
        mark_current(status);
        std::vector<Literal> full_path = trail_.fixed_literals();
        std::vector<Literal> decisions = trail_.decisions();
        if (cfg_.clause_learning && !decisions.empty()) {
            shared_.path_pool.submit(full_path, sub_.id);
            if (inline_analyzer_) {
                auto latest = shared_.path_pool.take_latest();
                if (latest && !shared_.cancel.load(std::memory_order_relaxed)) inline_analyzer_->process(*latest);
            }
        }
        if (decisions.empty()) return StepResult::Refuted;  // no branching left: region UNSAT
        if (cfg_.clause_learning) {
            Clause learned = learn_from_core(decisions, trail_, ClauseOrigin::PathNegation);
            shared_.counters.count_learned(ClauseOrigin::PathNegation);
            std::uint32_t idx = db_.add(std::move(learned), trail_);
            return resolve_conflict(db_.clause(idx), idx) ? StepResult::Conflicted : StepResult::Refuted;
        }
        return chronological_flip() ? StepResult::Conflicted : StepResult::Refuted;
    }

    // Clause-free mode explores the classic DFS tree: flip the deepest
    // decision that still has an untried sibling.
    bool chronological_flip() {
        while (!flip_stack_.empty() && flip_stack_.back()) flip_stack_.pop_back();
        if (flip_stack_.empty()) return false;
        flip_stack_.back() = true;
        std::uint32_t level = static_cast<std::uint32_t>(flip_stack_.size());
        Literal flipped{};
        bool found = false;
        for (const auto& e : trail_.entries())
            if (e.level == level && e.reason.kind == ReasonKind::Decision) {
                flipped = e.lit.negated();
                found = true;
                break;
            }
        if (!found) throw std::logic_error("missing decision at level");
        trail_.backtrack(level - 1);
        std::int64_t parent =
            level - 1 < node_levels_.size() ? static_cast<std::int64_t>(node_levels_[level - 1]) : -1;
        trail_.decide(flipped);
        pending_ = Pending{to_string(flipped), parent, trail_.current_level(), true};
        return true;
    }

    // Full pattern, LP feasible, but the LP point failed validation:
    // maximize the minimum unsafe slack to push strictly inside the
    // violation region. Genuine boundary-touching leaves stay undecided.
    LeafAction resolve_leaf(const NetworkLp& nl) {
        LpProblem lp = nl.lp;
        double slack_range = 1.0;
        for (const auto& c : sub_.problem.unsafe) {
            double m = std::abs(c.bound);
            for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
                std::size_t v = nl.layout.output_var(i);
                m += std::abs(c.coeffs[i]) * std::max(std::abs(lp.lower[v]), std::abs(lp.upper[v]));
            }
            slack_range = std::max(slack_range, m);
        }
        std::size_t t = lp.add_var(-slack_range, slack_range, "t");
        for (const auto& c : sub_.problem.unsafe) {
            LpRow row;
            row.coeffs.assign(lp.num_vars, 0.0);
            for (std::size_t i = 0; i < c.coeffs.size(); ++i)
                row.coeffs[nl.layout.output_var(i)] = c.relation == Relation::GreaterEq ? c.coeffs[i] : -c.coeffs[i];
            row.coeffs[t] = -1.0;
            row.sense = RowSense::GreaterEq;
            row.rhs = c.relation == Relation::GreaterEq ? c.bound : -c.bound;
            lp.rows.push_back(std::move(row));
        }
        for (auto& r : lp.rows) r.coeffs.resize(lp.num_vars, 0.0);
        Vec obj(lp.num_vars, 0.0);
        obj[t] = -1.0;  // maximize t
        lp.objective = obj;
        ++shared_.counters.lp_calls;
        LpResult res = lp_solve(lp);
        if (res.status == LpResult::Status::Infeasible) return LeafAction::Refute;
        if (res.status == LpResult::Status::Optimal) {
            double max_slack = -res.value;
            if (max_slack < -kCounterexampleSlackTol) return LeafAction::Refute;
            Vec x(sub_.problem.network->input_dim());
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = res.point[nl.layout.input_var(i)];
            CheckResult chk = check_counterexample(sub_.problem, x);
            if (chk.valid) {
                mark_current(NodeStatus::Sat);
                report_violation(std::move(chk.cex));
                return LeafAction::Violated;
            }
        }
        return LeafAction::Stalled;
    }

    void report_violation(Counterexample cex) {
        std::lock_guard<std::mutex> lock(shared_.verdict_mu);
        if (!shared_.first_cex) shared_.first_cex = std::move(cex);
        shared_.cancel.store(true);
    }

    PhaseMap phases_from_trail() const {
        PhaseMap phases(space_.count, Phase::Unknown);
        for (const auto& e : trail_.entries())
            phases[space_.flat(e.lit.neuron)] = e.lit.active ? Phase::Active : Phase::Inactive;
        return phases;
    }

    void maybe_dump_lp(const LpProblem& lp) {
        if (cfg_.dump_lp_dir.empty()) return;
        std::filesystem::create_directories(cfg_.dump_lp_dir);
        auto n = shared_.lp_dump_counter.fetch_add(1);
        std::ofstream out(cfg_.dump_lp_dir + "/lp_" + std::to_string(sub_.id) + "_" + std::to_string(n) + ".lp");
        dump_lp(lp, out);
    }

    const Subproblem& sub_;
    const std::vector<Subproblem>& all_subs_;
    const SolverConfig& cfg_;
    SharedRun& shared_;
    ConflictAnalyzer* inline_analyzer_;
    HiddenSpace space_;
    Trail trail_;
    ClauseDB db_;
    std::uint64_t cursor_ = 0;
    std::set<std::uint64_t> own_published_;
    std::deque<Clause> pending_install_;
    std::optional<Pending> pending_;
    std::vector<std::uint64_t> node_levels_;  // node id per decision level
    std::uint64_t current_node_ = 0;
    std::vector<bool> flip_stack_;  // clause-free mode: per-level "sibling tried"
};

}  // namespace detail

// ---------------------------------------------------------------------------

inline VerifyOutcome verify(const VerificationProblem& problem, const SolverConfig& config) {
    config.validate();
    problem.validate();
    auto t0 = std::chrono::steady_clock::now();

    std::vector<Subproblem> subs = split_input(problem, config.input_split_threshold);
    detail::SharedRun shared(config.path_pool_capacity);
    if (config.timeout_s > 0.0) {
        shared.deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(config.timeout_s));
        shared.has_deadline = true;
    }

    using Outcome = detail::SolverWorker::Outcome;

    if (config.deterministic) {
        // Single solver, analyzer runs inline after each path submission.
        ConflictAnalyzer inline_analyzer(subs, shared.clause_pool, shared.counters, config.elastic_base,
                                         &shared.cancel, config.lp_pivot_cap);
        for (const Subproblem& sub : subs) {
            detail::SolverWorker worker(sub, subs, config, shared,
                                        config.clause_learning ? &inline_analyzer : nullptr);
            Outcome out = worker.run();
            if (out == Outcome::Violated || out == Outcome::Cancelled || out == Outcome::Timeout) break;
        }
    } else {
        std::atomic<std::size_t> next_region{0};
        std::vector<std::unique_ptr<ConflictAnalyzer>> analyzer_objs;
        std::vector<std::thread> analyzers;
        if (config.clause_learning) {
            for (int a = 0; a < config.m_analyzers; ++a)
                analyzer_objs.push_back(std::make_unique<ConflictAnalyzer>(
                    subs, shared.clause_pool, shared.counters, config.elastic_base, &shared.cancel,
                    config.lp_pivot_cap));
            for (auto& obj : analyzer_objs)
                analyzers.emplace_back([&analyzer = *obj, &shared] { analyzer.loop(shared.path_pool); });
        }
        std::vector<std::thread> workers;
        for (int w = 0; w < config.n_solvers; ++w) {
            workers.emplace_back([&] {
                while (true) {
                    std::size_t idx = next_region.fetch_add(1);
                    if (idx >= subs.size()) return;
                    detail::SolverWorker worker(subs[idx], subs, config, shared, nullptr);
                    Outcome out = worker.run();
                    if (out == Outcome::Violated || out == Outcome::Cancelled || out == Outcome::Timeout) return;
                }
            });
        }
        for (auto& t : workers) t.join();
        shared.path_pool.request_shutdown();
        for (auto& t : analyzers) t.join();
    }

    VerifyOutcome out;
    {
        std::lock_guard<std::mutex> lock(shared.forest_mu);
        out.forest.nodes = shared.nodes;
    }
    std::sort(out.forest.nodes.begin(), out.forest.nodes.end(),
              [](const SearchTreeNode& a, const SearchTreeNode& b) { return a.id < b.id; });

    out.stats.states_explored = out.forest.nodes.size();
    for (const auto& n : out.forest.nodes)
        if (n.status == NodeStatus::UnsatBounds || n.status == NodeStatus::UnsatLP) ++out.stats.unsat_paths;
    out.pool_clauses = shared.clause_pool.snapshot();
    out.stats.clauses_path_negation = shared.counters.clauses_path_negation.load();
    out.stats.clauses_bound_implied = shared.counters.clauses_bound_implied.load();
    out.stats.clauses_elastic = shared.counters.clauses_elastic.load();
    out.stats.clauses_input_split = shared.counters.clauses_input_split.load();
    out.stats.clauses_fetched = shared.counters.clauses_fetched.load();
    out.stats.lp_calls = shared.counters.lp_calls.load();
    // Deterministic mode reports zero wall time so repeated runs emit
    // byte-identical stats.
    out.stats.wall_time_s =
        config.deterministic ? 0.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (shared.first_cex) {
        out.verdict = Verdict::violated(*shared.first_cex);
    } else if (shared.timed_out.load()) {
        out.verdict = Verdict::unknown(UnknownReason::Timeout);
    } else if (shared.stalled.load()) {
        out.verdict = Verdict::unknown(UnknownReason::Stalled);
    } else {
        out.verdict = Verdict::holds();
    }
    return out;
}

}  // namespace relucheck
