#pragma once

// Independent oracles the tests check the implementation against. Nothing
// here goes through the library's bound propagation, LP engine, or solver
// loop: forward passes are explicit loops, feasibility goes through the
// reference simplex, and gradients come from finite differences.

#include <array>
#include <optional>

#include "relucheck/network.hpp"
#include "relucheck/property.hpp"
#include "support/ref_simplex.hpp"

namespace testsupport {

using relucheck::Box;
using relucheck::LinearConstraint;
using relucheck::Network;
using relucheck::Relation;
using relucheck::Vec;

// Hand-rolled forward pass with explicit loops.
inline Vec oracle_forward(const Network& net, const Vec& x) {
    Vec h = x;
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const auto& layer = net.layer(k);
        Vec z(layer.weights.rows, 0.0);
        for (std::size_t r = 0; r < layer.weights.rows; ++r) {
            double acc = layer.bias[r];
            for (std::size_t c = 0; c < layer.weights.cols; ++c) acc += layer.weights.at(r, c) * h[c];
            z[r] = layer.has_relu && acc < 0.0 ? 0.0 : acc;
        }
        h = std::move(z);
    }
    return h;
}

inline std::vector<int> oracle_pattern_signs(const Network& net, const Vec& x) {
    std::vector<int> signs;
    Vec h = x;
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const auto& layer = net.layer(k);
        Vec z(layer.weights.rows, 0.0);
        for (std::size_t r = 0; r < layer.weights.rows; ++r) {
            double acc = layer.bias[r];
            for (std::size_t c = 0; c < layer.weights.cols; ++c) acc += layer.weights.at(r, c) * h[c];
            if (layer.has_relu) {
                signs.push_back(acc > 0.0 ? 1 : -1);
                if (acc < 0.0) acc = 0.0;
            }
            z[r] = acc;
        }
        h = std::move(z);
    }
    return signs;
}

// Central finite differences of objective . f.
inline Vec fd_gradient(const Network& net, const Vec& x, const Vec& objective, double h = 1e-5) {
    Vec g(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vec hi = x, lo = x;
        hi[i] += h;
        lo[i] -= h;
        double fh = 0.0, fl = 0.0;
        Vec yh = oracle_forward(net, hi), yl = oracle_forward(net, lo);
        for (std::size_t j = 0; j < objective.size(); ++j) fh += objective[j] * yh[j], fl += objective[j] * yl[j];
        g[i] = (fh - fl) / (2.0 * h);
    }
    return g;
}

// True iff x is at least `gap` away from every ReLU kink (pre-activation).
inline bool away_from_kinks(const Network& net, const Vec& x, double gap) {
    Vec h = x;
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const auto& layer = net.layer(k);
        Vec z(layer.weights.rows, 0.0);
        for (std::size_t r = 0; r < layer.weights.rows; ++r) {
            double acc = layer.bias[r];
            for (std::size_t c = 0; c < layer.weights.cols; ++c) acc += layer.weights.at(r, c) * h[c];
            if (layer.has_relu && std::abs(acc) < gap) return false;
            z[r] = layer.has_relu && acc < 0.0 ? 0.0 : acc;
        }
        h = std::move(z);
    }
    return true;
}

// ---------------------------------------------------------------------------
// Exhaustive activation-pattern oracle.
//
// Walks every complete activation pattern depth-first; each neuron choice
// adds the exact half-space it implies (the map below any fixed prefix is
// affine), and infeasible prefixes are pruned with the reference simplex.
// At a complete pattern the unsafe constraints are added and feasibility of
// the resulting polytope decides satisfiability.

struct AffineRow {
    Vec coeffs;
    double constant = 0.0;
};

struct PatternOracleResult {
    bool sat = false;
    Vec witness;
    std::size_t leaves_checked = 0;
};

namespace detail {

struct PatternDfs {
    const Network& net;
    const Box& box;
    const std::vector<LinearConstraint>& unsafe;
    double margin;  // tightens (>0) or loosens (<0) the unsafe rows
    std::vector<refsimplex::Vec> sign_rows;  // accumulated `a.x <= b` rows
    refsimplex::Vec sign_rhs;
    PatternOracleResult result;

    bool feasible(const std::vector<AffineRow>* outputs) {
        refsimplex::Problem p;
        p.n = net.input_dim();
        p.lo = box.lower;
        p.hi = box.upper;
        for (std::size_t i = 0; i < sign_rows.size(); ++i) {
            p.rows.push_back(sign_rows[i]);
            p.rhs.push_back(sign_rhs[i]);
            p.sense.push_back(-1);
        }
        if (outputs) {
            for (const auto& c : unsafe) {
                Vec row(p.n, 0.0);
                double shift = 0.0;
                for (std::size_t j = 0; j < c.coeffs.size(); ++j) {
                    for (std::size_t d = 0; d < p.n; ++d) row[d] += c.coeffs[j] * (*outputs)[j].coeffs[d];
                    shift += c.coeffs[j] * (*outputs)[j].constant;
                }
                double rhs = c.bound - shift;
                if (c.relation == Relation::LessEq) {
                    p.rows.push_back(row);
                    p.rhs.push_back(rhs - margin);
                    p.sense.push_back(-1);
                } else {
                    for (double& v : row) v = -v;
                    p.rows.push_back(row);
                    p.rhs.push_back(-rhs - margin);
                    p.sense.push_back(-1);
                }
            }
        }
        auto res = refsimplex::solve(p);
        if (res.status == refsimplex::Result::Status::Infeasible) return false;
        if (outputs) result.witness = res.x;
        return true;
    }

    void layer_dfs(std::size_t layer, std::vector<AffineRow> post_prev) {
        if (result.sat) return;
        const auto& lp = net.layer(layer);
        std::vector<AffineRow> pre(lp.weights.rows);
        for (std::size_t r = 0; r < lp.weights.rows; ++r) {
            pre[r].coeffs.assign(net.input_dim(), 0.0);
            pre[r].constant = lp.bias[r];
            for (std::size_t c = 0; c < lp.weights.cols; ++c) {
                double w = lp.weights.at(r, c);
                if (w == 0.0) continue;
                const AffineRow& src = post_prev[c];
                for (std::size_t d = 0; d < net.input_dim(); ++d) pre[r].coeffs[d] += w * src.coeffs[d];
                pre[r].constant += w * src.constant;
            }
        }
        if (!lp.has_relu) {
            ++result.leaves_checked;
            if (feasible(&pre)) result.sat = true;
            return;
        }
        neuron_dfs(layer, 0, pre, std::vector<AffineRow>(lp.weights.rows));
    }

    void neuron_dfs(std::size_t layer, std::size_t idx, const std::vector<AffineRow>& pre,
                    std::vector<AffineRow> post) {
        if (result.sat) return;
        if (idx == pre.size()) {
            layer_dfs(layer + 1, std::move(post));
            return;
        }
        double lo = pre[idx].constant, hi = pre[idx].constant;
        for (std::size_t d = 0; d < net.input_dim(); ++d) {
            double c = pre[idx].coeffs[d];
            lo += c * (c >= 0.0 ? box.lower[d] : box.upper[d]);
            hi += c * (c >= 0.0 ? box.upper[d] : box.lower[d]);
        }
        // Active branch: pre >= 0, post = pre.
        if (hi >= 0.0) {
            Vec row(pre[idx].coeffs);
            for (double& v : row) v = -v;
            sign_rows.push_back(row);
            sign_rhs.push_back(pre[idx].constant);
            if (lo >= 0.0 || feasible(nullptr)) {
                post[idx] = pre[idx];
                neuron_dfs(layer, idx + 1, pre, post);
            }
            sign_rows.pop_back();
            sign_rhs.pop_back();
        }
        if (result.sat) return;
        // Inactive branch: pre <= 0, post = 0.
        if (lo <= 0.0) {
            sign_rows.push_back(pre[idx].coeffs);
            sign_rhs.push_back(-pre[idx].constant);
            if (hi <= 0.0 || feasible(nullptr)) {
                post[idx].coeffs.assign(net.input_dim(), 0.0);
                post[idx].constant = 0.0;
                neuron_dfs(layer, idx + 1, pre, post);
            }
            sign_rows.pop_back();
            sign_rhs.pop_back();
        }
    }
};

}  // namespace detail

inline PatternOracleResult pattern_enumeration_oracle(const Network& net, const Box& box,
                                                      const std::vector<LinearConstraint>& unsafe,
                                                      double margin = 0.0) {
    detail::PatternDfs dfs{net, box, unsafe, margin, {}, {}, {}};
    std::vector<AffineRow> identity(net.input_dim());
    for (std::size_t d = 0; d < net.input_dim(); ++d) {
        identity[d].coeffs.assign(net.input_dim(), 0.0);
        identity[d].coeffs[d] = 1.0;
    }
    dfs.layer_dfs(0, std::move(identity));
    return dfs.result;
}

// ---------------------------------------------------------------------------
// 2-D polytope feasibility by vertex enumeration: rows are a.x <= b with the
// box included, so any nonempty region contains a pairwise intersection.
inline std::optional<std::array<double, 2>> vertex_feasible_2d(const std::vector<std::array<double, 3>>& rows,
                                                               double tol = 1e-9) {
    auto ok = [&](double x, double y) {
        for (const auto& r : rows)
            if (r[0] * x + r[1] * y > r[2] + tol) return false;
        return true;
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            double det = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
            if (std::abs(det) < 1e-12) continue;
            double x = (rows[i][2] * rows[j][1] - rows[i][1] * rows[j][2]) / det;
            double y = (rows[i][0] * rows[j][2] - rows[i][2] * rows[j][0]) / det;
            if (ok(x, y)) return std::array<double, 2>{x, y};
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Naive unit propagation: repeated O(n*m) scans to fixpoint. Literals are
// ints: +v+1 asserts variable v, -(v+1) negates it.
struct NaivePropagation {
    bool conflict = false;
    std::vector<std::int8_t> value;  // 0 unassigned, +1 true, -1 false
};

inline NaivePropagation naive_unit_propagation(std::size_t num_vars, const std::vector<std::vector<int>>& clauses,
                                               const std::vector<int>& initial) {
    NaivePropagation out;
    out.value.assign(num_vars, 0);
    auto lit_value = [&](int lit) {
        int v = std::abs(lit) - 1;
        if (out.value[v] == 0) return 0;
        return (out.value[v] > 0) == (lit > 0) ? 1 : -1;
    };
    auto assign = [&](int lit) { out.value[std::abs(lit) - 1] = lit > 0 ? 1 : -1; };
    for (int lit : initial) {
        if (lit_value(lit) == -1) {
            out.conflict = true;
            return out;
        }
        assign(lit);
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& cl : clauses) {
            int unassigned = 0, last = 0;
            bool satisfied = false;
            for (int lit : cl) {
                int v = lit_value(lit);
                if (v == 1) {
                    satisfied = true;
                    break;
                }
                if (v == 0) ++unassigned, last = lit;
            }
            if (satisfied) continue;
            if (unassigned == 0) {
                out.conflict = true;
                return out;
            }
            if (unassigned == 1) {
                assign(last);
                changed = true;
            }
        }
    }
    return out;
}

}  // namespace testsupport
