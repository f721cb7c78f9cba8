#pragma once

// Dense tableau simplex over two-sided bounded variables. Two phases,
// Dantzig pricing with a switch to Bland's rule after 1000 pivots, and a
// hard iteration cap that surfaces as an explicit Stalled result (never
// misreported as Infeasible).

#include <algorithm>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "relucheck/linalg.hpp"

namespace relucheck {

enum class RowSense { LessEq, GreaterEq, Equal };

struct LpRow {
    Vec coeffs;  // dense over problem variables
    RowSense sense = RowSense::LessEq;
    double rhs = 0.0;
};

struct LpProblem {
    std::size_t num_vars = 0;
    Vec lower;  // finite two-sided bounds per variable
    Vec upper;
    std::vector<LpRow> rows;
    std::optional<Vec> objective;  // minimized when present
    std::vector<std::string> var_names;
    long max_pivots = 0;  // 0: the default budget of 50*(vars+constraints)

    std::size_t add_var(double lo, double hi, std::string name = {}) {
        lower.push_back(lo);
        upper.push_back(hi);
        if (!name.empty() || !var_names.empty()) {
            var_names.resize(num_vars, "");
            var_names.push_back(std::move(name));
        }
        return num_vars++;
    }

    void add_row(LpRow row) {
        row.coeffs.resize(num_vars, 0.0);
        rows.push_back(std::move(row));
    }

    void validate() const {
        if (num_vars == 0) throw std::invalid_argument("LP has no variables");
        if (lower.size() != num_vars || upper.size() != num_vars)
            throw std::invalid_argument("LP bound vectors sized wrong");
        for (std::size_t i = 0; i < num_vars; ++i) {
            if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
                throw std::invalid_argument("LP variable bounds must be finite");
            if (lower[i] > upper[i]) throw std::invalid_argument("LP variable bounds crossed");
        }
        for (const auto& r : rows)
            if (r.coeffs.size() != num_vars || !all_finite(r.coeffs) || !std::isfinite(r.rhs))
                throw std::invalid_argument("LP row malformed");
        if (objective && objective->size() != num_vars)
            throw std::invalid_argument("LP objective sized wrong");
    }
};

struct LpResult {
    enum class Status { Infeasible, Optimal, Feasible, Stalled };
    Status status = Status::Infeasible;
    double value = 0.0;
    Vec point;

    bool feasible() const { return status == Status::Optimal || status == Status::Feasible; }
};

namespace detail {

inline constexpr double kPivotTol = 1e-9;
inline constexpr int kDantzigPivotLimit = 1000;

class SimplexTableau {
public:
    explicit SimplexTableau(const LpProblem& lp) : lp_(lp) {
        lp.validate();
        pivot_cap_ = lp.max_pivots > 0 ? lp.max_pivots : 50 * static_cast<long>(lp.num_vars + lp.rows.size());
        build();
    }

    LpResult run() {
        LpResult res;
        if (!phase(phase1_costs_, true)) {
            res.status = LpResult::Status::Stalled;
            return res;
        }
        double infeas = objective_value(phase1_costs_);
        if (infeas > feas_tol_) {
            res.status = LpResult::Status::Infeasible;
            return res;
        }
        drive_out_artificials();
        if (lp_.objective) {
            Vec costs(total_cols_, 0.0);
            for (std::size_t j = 0; j < lp_.num_vars; ++j) costs[j] = (*lp_.objective)[j];
            if (!phase(costs, false)) {
                res.status = LpResult::Status::Stalled;
                return res;
            }
            res.status = LpResult::Status::Optimal;
        } else {
            res.status = LpResult::Status::Feasible;
        }
        res.point = extract_point();
        if (lp_.objective) res.value = dot(*lp_.objective, res.point);
        return res;
    }

private:
    void build() {
        std::size_t ny = lp_.num_vars;
        // Shift to y = x - lower, y >= 0; upper bounds become explicit rows,
        // and every inequality is first brought to <= form.
        struct NormRow {
            Vec a;
            double b;
            bool eq;
            bool flipped;  // <= row negated to make rhs nonnegative
        };
        std::vector<NormRow> norm;
        norm.reserve(lp_.rows.size() + ny);
        for (const auto& r : lp_.rows) {
            NormRow nr{r.coeffs, r.rhs, r.sense == RowSense::Equal, false};
            for (std::size_t j = 0; j < ny; ++j) nr.b -= nr.a[j] * lp_.lower[j];
            if (r.sense == RowSense::GreaterEq) {
                for (double& v : nr.a) v = -v;
                nr.b = -nr.b;
            }
            norm.push_back(std::move(nr));
        }
        for (std::size_t j = 0; j < ny; ++j) {
            NormRow nr{Vec(ny, 0.0), lp_.upper[j] - lp_.lower[j], false, false};
            nr.a[j] = 1.0;
            norm.push_back(std::move(nr));
        }

        double max_rhs = 1.0;
        for (auto& nr : norm) {
            if (nr.b < 0.0) {
                for (double& v : nr.a) v = -v;
                nr.b = -nr.b;
                if (!nr.eq) nr.flipped = true;
            }
            max_rhs = std::max(max_rhs, nr.b);
        }
        feas_tol_ = 1e-8 * max_rhs;

        // Column layout: structural y's, one slack/surplus per inequality,
        // then artificials for equalities and flipped inequalities.
        std::size_t slack_count = 0, art_count = 0;
        for (const auto& nr : norm) {
            if (!nr.eq) ++slack_count;
            if (nr.eq || nr.flipped) ++art_count;
        }
        slack_begin_ = ny;
        art_begin_ = ny + slack_count;
        total_cols_ = art_begin_ + art_count;

        std::size_t m = norm.size();
        tableau_.assign(m, Vec(total_cols_ + 1, 0.0));
        basis_.assign(m, 0);
        std::size_t s = slack_begin_, t = art_begin_;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& nr = norm[i];
            for (std::size_t j = 0; j < ny; ++j) tableau_[i][j] = nr.a[j];
            tableau_[i][total_cols_] = nr.b;
            if (!nr.eq) {
                tableau_[i][s] = nr.flipped ? -1.0 : 1.0;
                ++s;
            }
            if (nr.eq || nr.flipped) {
                tableau_[i][t] = 1.0;
                basis_[i] = t++;
            } else {
                basis_[i] = s - 1;
            }
        }
        phase1_costs_.assign(total_cols_, 0.0);
        for (std::size_t j = art_begin_; j < total_cols_; ++j) phase1_costs_[j] = 1.0;
    }

    double objective_value(const Vec& costs) const {
        double v = 0.0;
        for (std::size_t i = 0; i < basis_.size(); ++i) v += costs[basis_[i]] * tableau_[i][total_cols_];
        return v;
    }

    Vec reduced_costs(const Vec& costs) const {
        Vec red = costs;
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            double cb = costs[basis_[i]];
            if (cb == 0.0) continue;
            const Vec& row = tableau_[i];
            for (std::size_t j = 0; j < total_cols_; ++j) red[j] -= cb * row[j];
        }
        return red;
    }

    // Returns false when the pivot budget (50*(vars+constraints)) runs out.
    bool phase(const Vec& costs, bool allow_artificials) {
        Vec red = reduced_costs(costs);
        std::size_t m = basis_.size();
        while (true) {
            if (pivots_done_ >= pivot_cap_) return false;
            bool bland = pivots_done_ >= kDantzigPivotLimit;
            std::size_t enter = total_cols_;
            double best = -kPivotTol;
            std::size_t limit = allow_artificials ? total_cols_ : art_begin_;
            for (std::size_t j = 0; j < limit; ++j) {
                if (red[j] < best) {
                    best = red[j];
                    enter = j;
                    if (bland) break;
                }
            }
            if (enter == total_cols_) return true;  // optimal for this phase

            std::size_t leave = m;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                double a = tableau_[i][enter];
                if (a <= kPivotTol) continue;
                double ratio = tableau_[i][total_cols_] / a;
                if (ratio < best_ratio - kPivotTol ||
                    (ratio < best_ratio + kPivotTol && (leave == m || basis_[i] < basis_[leave]))) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
            if (leave == m) return false;  // unbounded direction: numerical trouble here
            pivot(leave, enter, red);
            ++pivots_done_;
        }
    }

    void pivot(std::size_t r, std::size_t j, Vec& red) {
        Vec& prow = tableau_[r];
        double p = prow[j];
        for (double& v : prow) v /= p;
        for (std::size_t i = 0; i < tableau_.size(); ++i) {
            if (i == r) continue;
            double f = tableau_[i][j];
            if (f == 0.0) continue;
            Vec& row = tableau_[i];
            for (std::size_t c = 0; c <= total_cols_; ++c) row[c] -= f * prow[c];
        }
        double f = red[j];
        if (f != 0.0)
            for (std::size_t c = 0; c < total_cols_; ++c) red[c] -= f * prow[c];
        basis_[r] = j;
    }

    void drive_out_artificials() {
        Vec dummy(total_cols_, 0.0);
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            if (basis_[i] < art_begin_) continue;
            std::size_t col = total_cols_;
            for (std::size_t j = 0; j < art_begin_; ++j)
                if (std::abs(tableau_[i][j]) > 1e-7) {
                    col = j;
                    break;
                }
            if (col == total_cols_) {
                // Redundant row; retire it so later pivots cannot revive the
                // artificial at a nonzero value.
                std::fill(tableau_[i].begin(), tableau_[i].end(), 0.0);
            } else {
                pivot(i, col, dummy);
            }
        }
    }

    Vec extract_point() const {
        Vec x = lp_.lower;
        for (std::size_t i = 0; i < basis_.size(); ++i)
            if (basis_[i] < lp_.num_vars) x[basis_[i]] += tableau_[i][total_cols_];
        for (std::size_t j = 0; j < lp_.num_vars; ++j)
            x[j] = std::min(std::max(x[j], lp_.lower[j]), lp_.upper[j]);
        return x;
    }

    const LpProblem& lp_;
    std::vector<Vec> tableau_;
    std::vector<std::size_t> basis_;
    Vec phase1_costs_;
    std::size_t slack_begin_ = 0, art_begin_ = 0, total_cols_ = 0;
    double feas_tol_ = 1e-8;
    long pivots_done_ = 0;
    long pivot_cap_ = 0;
};

}  // namespace detail

inline LpResult lp_solve(const LpProblem& lp) {
    detail::SimplexTableau tab(lp);
    return tab.run();
}

// CPLEX-LP-style text dump, for --dump-lp debugging.
inline void dump_lp(const LpProblem& lp, std::ostream& out) {
    auto name = [&](std::size_t j) {
        if (j < lp.var_names.size() && !lp.var_names[j].empty()) return lp.var_names[j];
        return "v" + std::to_string(j);
    };
    out << "Minimize\n obj:";
    if (lp.objective) {
        for (std::size_t j = 0; j < lp.num_vars; ++j) {
            double c = (*lp.objective)[j];
            if (c == 0.0) continue;
            out << (c >= 0 ? " + " : " - ") << std::abs(c) << " " << name(j);
        }
    }
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        const auto& r = lp.rows[i];
        out << " c" << i << ":";
        for (std::size_t j = 0; j < lp.num_vars; ++j) {
            double c = r.coeffs[j];
            if (c == 0.0) continue;
            out << (c >= 0 ? " + " : " - ") << std::abs(c) << " " << name(j);
        }
        switch (r.sense) {
            case RowSense::LessEq: out << " <= "; break;
            case RowSense::GreaterEq: out << " >= "; break;
            case RowSense::Equal: out << " = "; break;
        }
        out << r.rhs << "\n";
    }
    out << "Bounds\n";
    for (std::size_t j = 0; j < lp.num_vars; ++j)
        out << " " << lp.lower[j] << " <= " << name(j) << " <= " << lp.upper[j] << "\n";
    out << "End\n";
}

}  // namespace relucheck
