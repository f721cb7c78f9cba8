#pragma once

// Deterministic fixture generators: random networks and boxes, the seeded
// oracle suite, the repeated-substructure family for pruning measurements,
// ACAS-Xu-layout NNet text, and random LP / path-system instances.

#include <memory>
#include <random>
#include <sstream>

#include "relucheck/analyzer.hpp"
#include "relucheck/bounds.hpp"
#include "relucheck/elastic.hpp"
#include "relucheck/lp_network.hpp"
#include "relucheck/network.hpp"
#include "relucheck/property.hpp"
#include "support/oracles.hpp"

namespace testsupport {

using namespace relucheck;

inline Network random_network(std::mt19937_64& rng, std::size_t input_dim, const std::vector<std::size_t>& hidden,
                              std::size_t output_dim, double bias_scale = 0.4) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<LayerParams> layers;
    std::size_t prev = input_dim;
    auto make_layer = [&](std::size_t width, bool relu) {
        LayerParams lp;
        lp.weights = Matrix(width, prev);
        lp.bias.assign(width, 0.0);
        lp.has_relu = relu;
        double scale = 1.5 / std::sqrt(static_cast<double>(prev));
        for (auto& w : lp.weights.data) w = gauss(rng) * scale;
        for (auto& b : lp.bias) b = gauss(rng) * bias_scale;
        prev = width;
        return lp;
    };
    for (std::size_t h : hidden) layers.push_back(make_layer(h, true));
    layers.push_back(make_layer(output_dim, false));
    return Network(std::move(layers));
}

inline Box random_box(std::mt19937_64& rng, std::size_t dim, double center_span = 0.5, double min_half = 0.4,
                      double max_half = 1.0) {
    std::uniform_real_distribution<double> center(-center_span, center_span);
    std::uniform_real_distribution<double> half(min_half, max_half);
    Box b;
    b.lower.resize(dim);
    b.upper.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double c = center(rng), h = half(rng);
        b.lower[i] = c - h;
        b.upper[i] = c + h;
    }
    return b;
}

inline Vec random_point(std::mt19937_64& rng, const Box& box) {
    Vec x(box.dim());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::uniform_real_distribution<double> dist(box.lower[i], box.upper[i]);
        x[i] = dist(rng);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Seeded oracle suite: random 2-{8,8}-2 instances whose verdict is robustly
// decided by the pattern-enumeration oracle (SAT with interior margin,
// or UNSAT even after loosening the unsafe rows).

struct OracleInstance {
    VerificationProblem problem;
    bool expected_sat = false;
    Vec witness;  // strictly violating point for SAT instances
    std::uint64_t seed = 0;
};

inline std::vector<OracleInstance> oracle_suite(std::size_t count = 40, std::uint64_t base_seed = 460001) {
    std::vector<OracleInstance> out;
    std::size_t sat_quota = count / 2;
    std::size_t sat_count = 0, unsat_count = 0;
    for (std::uint64_t seed = base_seed; out.size() < count && seed < base_seed + 4000; ++seed) {
        std::mt19937_64 rng(seed);
        auto net = std::make_shared<Network>(random_network(rng, 2, {8, 8}, 2));
        Box box = random_box(rng, 2);
        std::uniform_real_distribution<double> coef(-1.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::size_t n_constraints = unit(rng) < 0.7 ? 1 : 2;
        bool lean_sat = unit(rng) < 0.5;
        std::vector<LinearConstraint> unsafe;
        bool degenerate = false;
        for (std::size_t ci = 0; ci < n_constraints; ++ci) {
            LinearConstraint c;
            c.space = VarSpace::Outputs;
            c.coeffs = {coef(rng), coef(rng)};
            if (std::abs(c.coeffs[0]) + std::abs(c.coeffs[1]) < 0.2) {
                degenerate = true;
                break;
            }
            c.relation = Relation::GreaterEq;
            double vmax = -1e30, vmin = 1e30;
            for (int s = 0; s < 256; ++s) {
                Vec y = oracle_forward(*net, random_point(rng, box));
                double v = c.coeffs[0] * y[0] + c.coeffs[1] * y[1];
                vmax = std::max(vmax, v);
                vmin = std::min(vmin, v);
            }
            double span = std::max(vmax - vmin, 1e-3);
            c.bound = lean_sat ? vmax - (0.05 + 0.2 * unit(rng)) * span : vmax + (0.02 + 0.1 * unit(rng)) * span;
            unsafe.push_back(std::move(c));
        }
        if (degenerate) continue;

        VerificationProblem problem;
        problem.network = net;
        problem.input_box = box;
        problem.unsafe = std::move(unsafe);
        problem.validate();

        PatternOracleResult base = pattern_enumeration_oracle(*net, box, problem.unsafe, 0.0);
        OracleInstance inst;
        inst.problem = std::move(problem);
        inst.expected_sat = base.sat;
        inst.seed = seed;
        if (base.sat) {
            if (sat_count >= sat_quota) continue;
            PatternOracleResult tight = pattern_enumeration_oracle(*net, box, inst.problem.unsafe, 1e-4);
            if (!tight.sat) continue;  // verdict too close to the boundary
            inst.witness = tight.witness;
            ++sat_count;
        } else {
            if (unsat_count >= count - sat_quota) continue;
            PatternOracleResult loose = pattern_enumeration_oracle(*net, box, inst.problem.unsafe, -1e-4);
            if (loose.sat) continue;
            ++unsat_count;
        }
        out.push_back(std::move(inst));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Repeated-substructure family: first-layer neuron pairs (i, i+3) satisfy
// pre_{i+3} = pre_i + delta_i, so the combination (i Active, i+3 Inactive)
// is infeasible everywhere. Path negation alone re-refutes it under every
// surrounding assignment; a learned core prunes the repeats.

inline std::vector<VerificationProblem> pruning_family(std::size_t count = 10, std::uint64_t base_seed = 90101) {
    std::vector<VerificationProblem> out;
    for (std::uint64_t seed = base_seed; out.size() < count && seed < base_seed + 600; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        LayerParams l1;
        l1.weights = Matrix(6, 2);
        l1.bias.assign(6, 0.0);
        l1.has_relu = true;
        for (std::size_t i = 0; i < 3; ++i) {
            double a = gauss(rng), b = gauss(rng);
            double delta = 0.3 + 0.5 * unit(rng);
            l1.weights.at(i, 0) = a;
            l1.weights.at(i, 1) = b;
            l1.bias[i] = 0.2 * gauss(rng);
            l1.weights.at(i + 3, 0) = a;
            l1.weights.at(i + 3, 1) = b;
            l1.bias[i + 3] = l1.bias[i] + delta;
        }
        LayerParams l2;
        l2.weights = Matrix(4, 6);
        l2.bias.assign(4, 0.0);
        l2.has_relu = true;
        for (auto& w : l2.weights.data) w = gauss(rng) * 0.6;
        for (auto& b : l2.bias) b = 0.3 * gauss(rng);
        LayerParams l3;
        l3.weights = Matrix(2, 4);
        l3.bias.assign(2, 0.0);
        l3.has_relu = false;
        for (auto& w : l3.weights.data) w = gauss(rng) * 0.8;

        auto net = std::make_shared<Network>(std::vector<LayerParams>{l1, l2, l3});
        Box box;
        box.lower = {-1.0, -1.0};
        box.upper = {1.0, 1.0};

        LinearConstraint c;
        c.space = VarSpace::Outputs;
        c.coeffs = {1.0, -1.0};
        c.relation = Relation::GreaterEq;
        double vmax = -1e30;
        for (int s = 0; s < 400; ++s) {
            Vec y = oracle_forward(*net, random_point(rng, box));
            vmax = std::max(vmax, y[0] - y[1]);
        }
        c.bound = vmax + 0.05 * std::max(std::abs(vmax), 1.0);

        VerificationProblem problem;
        problem.network = net;
        problem.input_box = box;
        problem.unsafe = {c};
        problem.validate();

        // keep only robustly UNSAT instances
        if (pattern_enumeration_oracle(*net, box, problem.unsafe, -1e-4).sat) continue;
        out.push_back(std::move(problem));
    }
    return out;
}

// ---------------------------------------------------------------------------
// ACAS-Xu-layout NNet text: 7 affine layers (6 hidden layers of 50 ReLU
// neurons), 5 inputs, 5 outputs, with the normalization block the published
// files carry.

inline std::string acas_style_nnet_text(std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::ostringstream out;
    out << "// Airborne collision avoidance network, NNet text layout\n";
    out << "// 6 hidden layers of 50 ReLU units, 5 inputs, 5 outputs\n";
    out << "7,5,5,50,\n";
    out << "5,50,50,50,50,50,50,5,\n";
    out << "0,\n";
    out << "-0.5,-0.5,-0.5,-0.5,-0.5,\n";
    out << "0.5,0.5,0.5,0.5,0.5,\n";
    out << "0.0,0.0,0.0,0.0,0.0,7.5188840201005975,\n";
    out << "1.0,1.0,1.0,1.0,1.0,373.94992,\n";
    std::vector<std::size_t> sizes = {5, 50, 50, 50, 50, 50, 50, 5};
    out.setf(std::ios::scientific);
    out.precision(5);
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        std::size_t rows = sizes[k + 1], cols = sizes[k];
        double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) out << gauss(rng) * scale << ",";
            out << "\n";
        }
        for (std::size_t r = 0; r < rows; ++r) out << gauss(rng) * 0.1 << ",\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// LP instances for the engine-vs-reference comparison.

inline refsimplex::Problem to_ref(const LpProblem& lp) {
    refsimplex::Problem p;
    p.n = lp.num_vars;
    p.lo = lp.lower;
    p.hi = lp.upper;
    if (lp.objective) p.c = *lp.objective;
    for (const auto& r : lp.rows) {
        p.rows.push_back(r.coeffs);
        p.rhs.push_back(r.rhs);
        p.sense.push_back(r.sense == RowSense::LessEq ? -1 : (r.sense == RowSense::Equal ? 0 : 1));
    }
    return p;
}

inline LpProblem random_lp(std::mt19937_64& rng, std::size_t max_vars = 30) {
    std::uniform_int_distribution<std::size_t> nv(2, max_vars);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LpProblem lp;
    std::size_t n = nv(rng);
    for (std::size_t j = 0; j < n; ++j) lp.add_var(-2.0 - 3.0 * unit(rng), 2.0 + 3.0 * unit(rng));
    Vec anchor(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::uniform_real_distribution<double> d(lp.lower[j], lp.upper[j]);
        anchor[j] = d(rng);
    }
    bool feasible_leaning = unit(rng) < 0.55;
    std::uniform_int_distribution<std::size_t> nr(1, n + 4);
    std::size_t rows = nr(rng);
    for (std::size_t i = 0; i < rows; ++i) {
        LpRow row;
        row.coeffs.assign(n, 0.0);
        double at_anchor = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (unit(rng) < 0.5) continue;
            row.coeffs[j] = coef(rng);
            at_anchor += row.coeffs[j] * anchor[j];
        }
        double r = unit(rng);
        if (feasible_leaning) {
            if (r < 0.15) {
                row.sense = RowSense::Equal;
                row.rhs = at_anchor;
            } else if (r < 0.6) {
                row.sense = RowSense::LessEq;
                row.rhs = at_anchor + 0.3 + 2.0 * unit(rng);
            } else {
                row.sense = RowSense::GreaterEq;
                row.rhs = at_anchor - 0.3 - 2.0 * unit(rng);
            }
        } else {
            row.sense = r < 0.5 ? RowSense::LessEq : RowSense::GreaterEq;
            row.rhs = at_anchor + (unit(rng) - 0.6) * 4.0;
        }
        lp.rows.push_back(std::move(row));
    }
    Vec obj(n);
    for (std::size_t j = 0; j < n; ++j) obj[j] = coef(rng);
    lp.objective = std::move(obj);
    return lp;
}

// Accept only instances whose feasibility status survives a small rhs
// perturbation in both directions, so the engines cannot disagree on
// knife-edge systems.
inline bool lp_status_robust(const LpProblem& lp, double delta = 1e-6) {
    auto shifted = [&](double d) {
        refsimplex::Problem p = to_ref(lp);
        p.c.clear();
        for (std::size_t i = 0; i < p.rows.size(); ++i) {
            if (p.sense[i] == -1) p.rhs[i] -= d;
            if (p.sense[i] == +1) p.rhs[i] += d;
        }
        return refsimplex::solve(p).status != refsimplex::Result::Status::Infeasible;
    };
    return shifted(delta) == shifted(-delta);
}

// ---------------------------------------------------------------------------
// Random path systems for the elastic-filter correctness battery.

struct PathSystem {
    LpProblem base;
    std::vector<PathConstraint> path;
    bool whole_feasible = false;  // base + full path, per the reference simplex
};

inline PathSystem random_path_system(std::mt19937_64& rng, std::size_t max_vars = 8, std::size_t max_path = 6) {
    std::uniform_int_distribution<std::size_t> nv(2, max_vars);
    std::uniform_int_distribution<std::size_t> np(1, max_path);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    PathSystem sys;
    std::size_t n = nv(rng);
    for (std::size_t j = 0; j < n; ++j) sys.base.add_var(-3.0, 3.0);
    Vec anchor(n);
    for (std::size_t j = 0; j < n; ++j) anchor[j] = -1.5 + 3.0 * unit(rng);
    std::uniform_int_distribution<std::size_t> nb(0, 3);
    std::size_t base_rows = nb(rng);
    for (std::size_t i = 0; i < base_rows; ++i) {
        LpRow row;
        row.coeffs.assign(n, 0.0);
        double at_anchor = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row.coeffs[j] = coef(rng);
            at_anchor += row.coeffs[j] * anchor[j];
        }
        row.sense = RowSense::LessEq;
        row.rhs = at_anchor + 0.5 + 1.5 * unit(rng);  // anchor stays feasible
        sys.base.rows.push_back(std::move(row));
    }
    std::size_t path_len = np(rng);
    for (std::size_t g = 0; g < path_len; ++g) {
        LpRow row;
        row.coeffs.assign(n, 0.0);
        double at_anchor = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row.coeffs[j] = coef(rng);
            at_anchor += row.coeffs[j] * anchor[j];
        }
        row.sense = RowSense::LessEq;
        row.rhs = at_anchor + (unit(rng) - 0.65) * 3.0;
        PathConstraint pc;
        pc.literal = Literal{NeuronId{0, g}, true};
        pc.rows.push_back(std::move(row));
        sys.path.push_back(std::move(pc));
    }
    return sys;
}

inline bool ref_feasible_with(const LpProblem& base, const std::vector<PathConstraint>& path,
                              const std::vector<std::size_t>& subset, double rhs_shift = 0.0) {
    refsimplex::Problem p = to_ref(base);
    p.c.clear();
    for (std::size_t g : subset)
        for (const LpRow& row : path[g].rows) {
            p.rows.push_back(row.coeffs);
            p.rhs.push_back(row.rhs + rhs_shift);
            p.sense.push_back(-1);
        }
    return refsimplex::solve(p).status != refsimplex::Result::Status::Infeasible;
}

// ---------------------------------------------------------------------------
// Clause soundness audit: the base problem of the clause's region, with
// every clause literal negated (a conjunction), must be LP-infeasible.

inline bool clause_lp_implied(const std::vector<Subproblem>& subs, const Clause& clause) {
    std::uint32_t region = clause.scope.value_or(0);
    const Subproblem* sub = nullptr;
    for (const auto& s : subs)
        if (s.id == region) sub = &s;
    if (!sub) return false;
    const Network& net = *sub->problem.network;
    PhaseMap phases = all_unknown(net);
    for (const Literal& l : clause.literals)
        phases[net.hidden_index(l.neuron)] = l.active ? Phase::Inactive : Phase::Active;
    BoundsResult br = propagate_bounds(net, sub->problem.input_box, phases);
    if (std::holds_alternative<InfeasiblePhases>(br)) return true;
    NetworkLp nl = build_lp(sub->problem, phases, std::get<BoundsMap>(br));
    return lp_solve(nl.lp).status == LpResult::Status::Infeasible;
}

}  // namespace testsupport
