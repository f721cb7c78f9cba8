#pragma once

// Encodes a verification problem as an LP over input, pre-activation,
// post-activation, and output variables, under a partial phase assignment.

#include "relucheck/bounds.hpp"
#include "relucheck/lp.hpp"
#include "relucheck/property.hpp"

namespace relucheck {

struct LpLayout {
    std::size_t input_offset = 0;
    std::vector<std::size_t> pre_offset;   // per hidden layer
    std::vector<std::size_t> post_offset;  // per hidden layer
    std::size_t output_offset = 0;

    std::size_t input_var(std::size_t i) const { return input_offset + i; }
    std::size_t pre_var(NeuronId id) const { return pre_offset[id.layer] + id.index; }
    std::size_t post_var(NeuronId id) const { return post_offset[id.layer] + id.index; }
    std::size_t output_var(std::size_t i) const { return output_offset + i; }
};

struct NetworkLp {
    LpProblem lp;
    LpLayout layout;
};

enum class ElasticBaseMode { Relaxed, BoxOnly };

namespace detail {

inline void add_affine_rows(NetworkLp& nl, const Network& net) {
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const LayerParams& lpar = net.layer(k);
        for (std::size_t i = 0; i < lpar.weights.rows; ++i) {
            LpRow row;
            row.coeffs.assign(nl.lp.num_vars, 0.0);
            std::size_t out_var = lpar.has_relu ? nl.layout.pre_var(NeuronId{k, i}) : nl.layout.output_var(i);
            row.coeffs[out_var] = 1.0;
            for (std::size_t c = 0; c < lpar.weights.cols; ++c) {
                double w = lpar.weights.at(i, c);
                if (w == 0.0) continue;
                std::size_t in_var = k == 0 ? nl.layout.input_var(c) : nl.layout.post_var(NeuronId{k - 1, c});
                row.coeffs[in_var] -= w;
            }
            row.sense = RowSense::Equal;
            row.rhs = lpar.bias[i];
            nl.lp.rows.push_back(std::move(row));
        }
    }
}

inline NetworkLp make_layout(const VerificationProblem& problem, const BoundsMap& bounds) {
    const Network& net = *problem.network;
    NetworkLp nl;
    nl.layout.input_offset = 0;
    for (std::size_t i = 0; i < net.input_dim(); ++i)
        nl.lp.add_var(bounds.box.lower[i], bounds.box.upper[i], "x" + std::to_string(i));
    for (std::size_t k = 0; k < net.hidden_layer_count(); ++k) {
        nl.layout.pre_offset.push_back(nl.lp.num_vars);
        for (std::size_t i = 0; i < net.hidden_width(k); ++i) {
            const NeuronBounds& nb = bounds.hidden[k][i];
            nl.lp.add_var(nb.pre_lo, nb.pre_hi, "z" + std::to_string(k) + "_" + std::to_string(i));
        }
        nl.layout.post_offset.push_back(nl.lp.num_vars);
        for (std::size_t i = 0; i < net.hidden_width(k); ++i) {
            const NeuronBounds& nb = bounds.hidden[k][i];
            nl.lp.add_var(nb.post_lo, nb.post_hi, "h" + std::to_string(k) + "_" + std::to_string(i));
        }
    }
    nl.layout.output_offset = nl.lp.num_vars;
    for (std::size_t i = 0; i < net.output_dim(); ++i)
        nl.lp.add_var(bounds.output[i].pre_lo, bounds.output[i].pre_hi, "y" + std::to_string(i));
    add_affine_rows(nl, net);
    for (const auto& c : problem.unsafe) {
        LpRow row;
        row.coeffs.assign(nl.lp.num_vars, 0.0);
        for (std::size_t i = 0; i < c.coeffs.size(); ++i) row.coeffs[nl.layout.output_var(i)] = c.coeffs[i];
        row.sense = c.relation == Relation::LessEq ? RowSense::LessEq : RowSense::GreaterEq;
        row.rhs = c.bound;
        nl.lp.rows.push_back(std::move(row));
    }
    return nl;
}

inline LpRow unit_row(std::size_t num_vars, std::size_t var, double coeff, RowSense sense, double rhs) {
    LpRow row;
    row.coeffs.assign(num_vars, 0.0);
    row.coeffs[var] = coeff;
    row.sense = sense;
    row.rhs = rhs;
    return row;
}

}  // namespace detail

// Phase constraints: a fixed-Active neuron contributes post = pre, pre >= 0;
// fixed-Inactive contributes post = 0, pre <= 0; Unknown neurons get the
// triangle relaxation rows (with the same lines the bounds computed).
inline NetworkLp build_lp(const VerificationProblem& problem, const PhaseMap& phases, const BoundsMap& bounds) {
    const Network& net = *problem.network;
    NetworkLp nl = detail::make_layout(problem, bounds);
    auto& lp = nl.lp;
    for (std::size_t k = 0; k < net.hidden_layer_count(); ++k) {
        for (std::size_t i = 0; i < net.hidden_width(k); ++i) {
            NeuronId id{k, i};
            std::size_t pre = nl.layout.pre_var(id), post = nl.layout.post_var(id);
            const NeuronBounds& nb = bounds.hidden[k][i];
            switch (phases[net.hidden_index(id)]) {
                case Phase::Active: {
                    LpRow eq;
                    eq.coeffs.assign(lp.num_vars, 0.0);
                    eq.coeffs[post] = 1.0;
                    eq.coeffs[pre] = -1.0;
                    eq.sense = RowSense::Equal;
                    eq.rhs = 0.0;
                    lp.rows.push_back(std::move(eq));
                    lp.rows.push_back(detail::unit_row(lp.num_vars, pre, 1.0, RowSense::GreaterEq, 0.0));
                    break;
                }
                case Phase::Inactive: {
                    lp.rows.push_back(detail::unit_row(lp.num_vars, post, 1.0, RowSense::Equal, 0.0));
                    lp.rows.push_back(detail::unit_row(lp.num_vars, pre, 1.0, RowSense::LessEq, 0.0));
                    break;
                }
                case Phase::Unknown: {
                    lp.rows.push_back(detail::unit_row(lp.num_vars, post, 1.0, RowSense::GreaterEq, 0.0));
                    LpRow above;
                    above.coeffs.assign(lp.num_vars, 0.0);
                    above.coeffs[post] = 1.0;
                    above.coeffs[pre] = -1.0;
                    above.sense = RowSense::GreaterEq;
                    above.rhs = 0.0;
                    lp.rows.push_back(std::move(above));
                    LpRow tri;
                    tri.coeffs.assign(lp.num_vars, 0.0);
                    tri.coeffs[post] = 1.0;
                    tri.coeffs[pre] = -nb.upper_slope;
                    tri.sense = RowSense::LessEq;
                    tri.rhs = nb.upper_offset;
                    lp.rows.push_back(std::move(tri));
                    break;
                }
            }
        }
    }
    return nl;
}

// Base LP for conflict analysis: only constraints valid for every phase
// assignment over the region (affine rows, bounds-derived variable boxes,
// post >= 0, post >= pre, unsafe rows, and in Relaxed mode the phase-free
// triangle upper rows). Branching decisions are added on top as relaxable
// rows by the elastic filter.
inline NetworkLp build_elastic_base(const VerificationProblem& problem, const BoundsMap& phase_free_bounds,
                                    ElasticBaseMode mode) {
    const Network& net = *problem.network;
    NetworkLp nl = detail::make_layout(problem, phase_free_bounds);
    auto& lp = nl.lp;
    for (std::size_t k = 0; k < net.hidden_layer_count(); ++k) {
        for (std::size_t i = 0; i < net.hidden_width(k); ++i) {
            NeuronId id{k, i};
            std::size_t pre = nl.layout.pre_var(id), post = nl.layout.post_var(id);
            const NeuronBounds& nb = phase_free_bounds.hidden[k][i];
            lp.rows.push_back(detail::unit_row(lp.num_vars, post, 1.0, RowSense::GreaterEq, 0.0));
            LpRow above;
            above.coeffs.assign(lp.num_vars, 0.0);
            above.coeffs[post] = 1.0;
            above.coeffs[pre] = -1.0;
            above.sense = RowSense::GreaterEq;
            above.rhs = 0.0;
            lp.rows.push_back(std::move(above));
            if (mode == ElasticBaseMode::Relaxed) {
                LpRow tri;
                tri.coeffs.assign(lp.num_vars, 0.0);
                tri.coeffs[post] = 1.0;
                tri.coeffs[pre] = -nb.upper_slope;
                tri.sense = RowSense::LessEq;
                tri.rhs = nb.upper_offset;
                lp.rows.push_back(std::move(tri));
            }
        }
    }
    return nl;
}

// The two rows a branching literal adds, in `g <= rhs` form so the elastic
// filter can attach slacks uniformly.
inline std::vector<LpRow> phase_rows_for_literal(const LpLayout& layout, std::size_t num_vars, const Literal& lit) {
    std::size_t pre = layout.pre_var(lit.neuron), post = layout.post_var(lit.neuron);
    std::vector<LpRow> rows;
    if (lit.active) {
        rows.push_back(detail::unit_row(num_vars, pre, -1.0, RowSense::LessEq, 0.0));  // pre >= 0
        LpRow tie;
        tie.coeffs.assign(num_vars, 0.0);
        tie.coeffs[post] = 1.0;
        tie.coeffs[pre] = -1.0;
        tie.sense = RowSense::LessEq;
        tie.rhs = 0.0;  // post <= pre; with the base's post >= pre this pins post = pre
        rows.push_back(std::move(tie));
    } else {
        rows.push_back(detail::unit_row(num_vars, pre, 1.0, RowSense::LessEq, 0.0));
        rows.push_back(detail::unit_row(num_vars, post, 1.0, RowSense::LessEq, 0.0));
    }
    return rows;
}

}  // namespace relucheck
