#pragma once

// Sound per-neuron bounds under a partial phase assignment. Symbolic bounds
// are affine in the network inputs and tightened by back-substitution through
// all previous layers; crossing neurons get the triangle relaxation.

#include <variant>
#include <vector>

#include "relucheck/literal.hpp"
#include "relucheck/property.hpp"

namespace relucheck {

enum class Phase : std::uint8_t { Active, Inactive, Unknown };

// Complete map over hidden neurons, flattened layer-major.
using PhaseMap = std::vector<Phase>;

inline PhaseMap all_unknown(const Network& net) { return PhaseMap(net.hidden_count(), Phase::Unknown); }

struct SymbolicBound {
    Vec coeffs;  // over network inputs
    double constant = 0.0;
};

struct NeuronBounds {
    double pre_lo = 0.0, pre_hi = 0.0;
    double post_lo = 0.0, post_hi = 0.0;
    SymbolicBound pre_lower, pre_upper;
    SymbolicBound post_lower, post_upper;
    // Relaxation lines of post w.r.t. own pre-activation, used both for
    // back-substitution and for LP rows: lower_slope*z <= post <= upper_slope*z + upper_offset.
    double lower_slope = 1.0, upper_slope = 1.0, upper_offset = 0.0;
};

struct BoundsMap {
    Box box;          // input region the bounds were computed over
    PhaseMap phases;  // exact phase assignment the bounds assume
    std::vector<std::vector<NeuronBounds>> hidden;
    std::vector<NeuronBounds> output;
};

// A fixed phase contradicts the concrete bounds (Active with hi < 0, or
// Inactive with lo > 0). A verdict, not an error.
struct InfeasiblePhases {
    NeuronId neuron;
};

using BoundsResult = std::variant<BoundsMap, InfeasiblePhases>;

namespace detail {

// rows(A) x cols(B) product; A is rows x inner, B is inner x cols.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double v = a.at(i, k);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c.at(i, j) += v * b.at(k, j);
        }
    return c;
}

// Per-neuron relaxation lines frozen from the phase-free pass; fixing a
// phase later only swaps in the exact line on the side where it dominates
// the frozen one over the whole frozen interval, which keeps bound
// propagation monotone under phase fixing.
struct FrozenLine {
    double lambda = 0.0;
    double upper_slope = 0.0;
    double upper_offset = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};
using FrozenLines = std::vector<std::vector<FrozenLine>>;

inline BoundsResult bounds_pass(const Network& net, const Box& box, const PhaseMap& phases,
                                const FrozenLines* frozen, FrozenLines* capture) {
    BoundsMap bm;
    bm.box = box;
    bm.phases = phases;
    bm.hidden.resize(net.hidden_layer_count());
    if (capture) capture->resize(net.hidden_layer_count());

    auto interval_min = [&](const Vec& coeffs, double constant) {
        double v = constant;
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            v += coeffs[i] * (coeffs[i] >= 0.0 ? box.lower[i] : box.upper[i]);
        return v;
    };
    auto interval_max = [&](const Vec& coeffs, double constant) {
        double v = constant;
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            v += coeffs[i] * (coeffs[i] >= 0.0 ? box.upper[i] : box.lower[i]);
        return v;
    };

    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const LayerParams& lp = net.layer(k);
        std::size_t width = lp.weights.rows;

        // Back-substitute pre_k through layers k-1..0, once per bound side.
        // side = 0 tracks lower bounds, side = 1 upper bounds.
        Matrix sym_coeffs[2];
        Vec sym_const[2];
        for (int side = 0; side < 2; ++side) {
            Matrix coeffs = lp.weights;
            Vec constant = lp.bias;
            for (std::size_t j = k; j-- > 0;) {
                const auto& layer_bounds = bm.hidden[j];
                std::size_t wj = layer_bounds.size();
                // post_j -> pre_j via relaxation lines, picked per coefficient sign
                Matrix over_pre(coeffs.rows, wj);
                for (std::size_t r = 0; r < coeffs.rows; ++r) {
                    for (std::size_t c = 0; c < wj; ++c) {
                        double m = coeffs.at(r, c);
                        if (m == 0.0) continue;
                        const NeuronBounds& nb = layer_bounds[c];
                        bool use_lower_line = (side == 0) == (m >= 0.0);
                        if (use_lower_line) {
                            over_pre.at(r, c) = m * nb.lower_slope;
                        } else {
                            over_pre.at(r, c) = m * nb.upper_slope;
                            constant[r] += m * nb.upper_offset;
                        }
                    }
                }
                // pre_j = W_j h_{j-1} + b_j
                const LayerParams& lj = net.layer(j);
                for (std::size_t r = 0; r < over_pre.rows; ++r) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < wj; ++c) acc += over_pre.at(r, c) * lj.bias[c];
                    constant[r] += acc;
                }
                coeffs = matmul(over_pre, lj.weights);
            }
            sym_coeffs[side] = std::move(coeffs);
            sym_const[side] = std::move(constant);
        }

        std::vector<NeuronBounds> layer_out(width);
        if (capture && lp.has_relu) (*capture)[k].resize(width);
        for (std::size_t i = 0; i < width; ++i) {
            NeuronBounds nb;
            nb.pre_lower.coeffs.assign(sym_coeffs[0].data.begin() + i * sym_coeffs[0].cols,
                                       sym_coeffs[0].data.begin() + (i + 1) * sym_coeffs[0].cols);
            nb.pre_lower.constant = sym_const[0][i];
            nb.pre_upper.coeffs.assign(sym_coeffs[1].data.begin() + i * sym_coeffs[1].cols,
                                       sym_coeffs[1].data.begin() + (i + 1) * sym_coeffs[1].cols);
            nb.pre_upper.constant = sym_const[1][i];
            nb.pre_lo = interval_min(nb.pre_lower.coeffs, nb.pre_lower.constant);
            nb.pre_hi = interval_max(nb.pre_upper.coeffs, nb.pre_upper.constant);

            if (!lp.has_relu) {
                nb.post_lo = nb.pre_lo;
                nb.post_hi = nb.pre_hi;
                nb.post_lower = nb.pre_lower;
                nb.post_upper = nb.pre_upper;
                nb.lower_slope = nb.upper_slope = 1.0;
                nb.upper_offset = 0.0;
                layer_out[i] = std::move(nb);
                continue;
            }

            Phase ph = phases[net.hidden_index(NeuronId{k, i})];
            double lambda, upper_slope, upper_offset;
            if (frozen) {
                const FrozenLine& fl = (*frozen)[k][i];
                // the frozen pass is a relaxation of this one
                nb.pre_lo = std::max(nb.pre_lo, fl.lo);
                nb.pre_hi = std::min(nb.pre_hi, fl.hi);
                lambda = fl.lambda;
                upper_slope = fl.upper_slope;
                upper_offset = fl.upper_offset;
            } else {
                // Phase-free classification; hi == lo == 0 degenerates to
                // the inactive piece, matching the pattern tie-break.
                if (nb.pre_hi <= 0.0) {
                    lambda = 0.0;
                    upper_slope = 0.0;
                    upper_offset = 0.0;
                } else if (nb.pre_lo >= 0.0) {
                    lambda = 1.0;
                    upper_slope = 1.0;
                    upper_offset = 0.0;
                } else {
                    // Triangle: chord through (lo,0) and (hi,hi); the lower
                    // slope follows the area-minimizing default.
                    upper_slope = nb.pre_hi / (nb.pre_hi - nb.pre_lo);
                    upper_offset = -nb.pre_lo * upper_slope;
                    lambda = nb.pre_hi >= -nb.pre_lo ? 1.0 : 0.0;
                }
                if (capture) (*capture)[k][i] = FrozenLine{lambda, upper_slope, upper_offset, nb.pre_lo, nb.pre_hi};
            }

            if (ph == Phase::Active && nb.pre_hi < 0.0) return InfeasiblePhases{NeuronId{k, i}};
            if (ph == Phase::Inactive && nb.pre_lo > 0.0) return InfeasiblePhases{NeuronId{k, i}};

            if (ph == Phase::Active) {
                nb.pre_lo = std::max(nb.pre_lo, 0.0);
                nb.lower_slope = lambda;
                nb.upper_slope = 1.0;  // post = pre, and pre <= chord on the frozen interval
                nb.upper_offset = 0.0;
            } else if (ph == Phase::Inactive) {
                nb.pre_hi = std::min(nb.pre_hi, 0.0);
                nb.lower_slope = lambda;  // lambda*z <= 0 = post on the inactive piece
                nb.upper_slope = 0.0;
                nb.upper_offset = 0.0;
            } else {
                nb.lower_slope = lambda;
                nb.upper_slope = upper_slope;
                nb.upper_offset = upper_offset;
            }

            bool pinned_zero = ph == Phase::Inactive || nb.pre_hi <= 0.0;
            nb.post_lo = pinned_zero ? 0.0 : std::max(nb.pre_lo, 0.0);
            nb.post_hi = pinned_zero ? 0.0 : std::max(nb.pre_hi, 0.0);

            if (nb.lower_slope == 0.0) {
                nb.post_lower = SymbolicBound{Vec(net.input_dim(), 0.0), 0.0};
            } else {
                nb.post_lower = nb.pre_lower;
            }
            if (nb.upper_slope == 0.0) {
                nb.post_upper = SymbolicBound{Vec(net.input_dim(), 0.0), nb.upper_offset};
            } else {
                nb.post_upper.coeffs = nb.pre_upper.coeffs;
                for (double& c : nb.post_upper.coeffs) c *= nb.upper_slope;
                nb.post_upper.constant = nb.pre_upper.constant * nb.upper_slope + nb.upper_offset;
            }
            layer_out[i] = std::move(nb);
        }

        if (lp.has_relu)
            bm.hidden[k] = std::move(layer_out);
        else
            bm.output = std::move(layer_out);
    }
    return bm;
}

}  // namespace detail

inline BoundsResult propagate_bounds(const Network& net, const Box& box, const PhaseMap& phases) {
    if (box.dim() != net.input_dim()) throw std::invalid_argument("box dimension mismatch");
    if (phases.size() != net.hidden_count()) throw std::invalid_argument("phase map incomplete");
    bool any_fixed = false;
    for (Phase p : phases) any_fixed |= p != Phase::Unknown;
    detail::FrozenLines frozen;
    PhaseMap unknown(phases.size(), Phase::Unknown);
    BoundsResult free_pass = detail::bounds_pass(net, box, unknown, nullptr, &frozen);
    if (!any_fixed) return free_pass;
    return detail::bounds_pass(net, box, phases, &frozen, nullptr);
}

enum class ReachVerdict { CannotReach, Unknown };

// CannotReach when some unsafe atom is unsatisfiable over the bounds: its
// best achievable side (symbolic or interval, whichever is tighter) still
// misses the required bound.
inline ReachVerdict check_unsafe_by_bounds(const BoundsMap& bounds, const std::vector<LinearConstraint>& unsafe) {
    const auto& outs = bounds.output;
    auto interval_min = [&](const Vec& coeffs, double constant) {
        double v = constant;
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            v += coeffs[i] * (coeffs[i] >= 0.0 ? bounds.box.lower[i] : bounds.box.upper[i]);
        return v;
    };
    for (const auto& c : unsafe) {
        // Combine per-output symbolic bounds into a one-sided bound on c.y,
        // the minimizing side for <= and the maximizing side for >=.
        bool want_min = c.relation == Relation::LessEq;
        Vec combo(bounds.box.dim(), 0.0);
        double combo_const = 0.0;
        double interval_side = 0.0;
        for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
            double w = c.coeffs[i];
            if (w == 0.0) continue;
            const NeuronBounds& nb = outs[i];
            bool pick_lower = (w > 0.0) == want_min;
            const SymbolicBound& sb = pick_lower ? nb.pre_lower : nb.pre_upper;
            for (std::size_t j = 0; j < combo.size(); ++j) combo[j] += w * sb.coeffs[j];
            combo_const += w * sb.constant;
            interval_side += w * (pick_lower ? nb.pre_lo : nb.pre_hi);
        }
        if (want_min) {
            double sym = interval_min(combo, combo_const);
            double best = std::max(sym, interval_side);
            if (best > c.bound) return ReachVerdict::CannotReach;
        } else {
            // max of c.y = -min of (-c).y; combo already tracks the max side
            double sym = -interval_min([&] {
                Vec neg = combo;
                for (double& v : neg) v = -v;
                return neg;
            }(), -combo_const);
            double best = std::min(sym, interval_side);
            if (best < c.bound) return ReachVerdict::CannotReach;
        }
    }
    return ReachVerdict::Unknown;
}

// For each still-Unknown neuron whose bounds fix its phase, emit the learned
// clause (negated path literals plus the implied phase literal). An empty
// path yields unit clauses.
inline std::vector<Clause> derive_phase_clauses(const Network& net, const BoundsMap& bounds,
                                                const std::vector<Literal>& path) {
    std::vector<Clause> clauses;
    for (std::size_t layer = 0; layer < bounds.hidden.size(); ++layer) {
        for (std::size_t i = 0; i < bounds.hidden[layer].size(); ++i) {
            NeuronId id{layer, i};
            if (bounds.phases[net.hidden_index(id)] != Phase::Unknown) continue;
            const NeuronBounds& nb = bounds.hidden[layer][i];
            bool implies_active = nb.pre_lo > 0.0;
            bool implies_inactive = nb.pre_hi <= 0.0;
            if (!implies_active && !implies_inactive) continue;
            Clause cl;
            cl.origin = ClauseOrigin::BoundImplied;
            for (const Literal& l : path) cl.literals.push_back(l.negated());
            cl.literals.push_back(Literal{id, implies_active});
            cl.validate();
            clauses.push_back(std::move(cl));
        }
    }
    return clauses;
}

}  // namespace relucheck
