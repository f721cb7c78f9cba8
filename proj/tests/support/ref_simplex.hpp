#pragma once

// Textbook tableau simplex, kept deliberately separate from the library's
// LP engine: artificials on every row, Bland's rule throughout, no pivot
// budget tricks. Slow and simple; used as the independent reference.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace refsimplex {

using Vec = std::vector<double>;

struct Problem {
    std::size_t n = 0;             // variables
    Vec c;                         // objective (minimize); empty = feasibility only
    std::vector<Vec> rows;         // coefficients
    Vec rhs;
    std::vector<int> sense;        // -1: <=, 0: ==, +1: >=
    Vec lo, hi;                    // finite bounds
};

struct Result {
    enum class Status { Infeasible, Optimal, Feasible } status = Status::Infeasible;
    double value = 0.0;
    Vec x;
};

inline Result solve(const Problem& p) {
    const double eps = 1e-9;
    std::size_t n = p.n;
    // Shift to y = x - lo >= 0 and append upper-bound rows.
    std::vector<Vec> A;
    Vec b;
    std::vector<int> sense;
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        Vec a = p.rows[i];
        double r = p.rhs[i];
        for (std::size_t j = 0; j < n; ++j) r -= a[j] * p.lo[j];
        A.push_back(a);
        b.push_back(r);
        sense.push_back(p.sense[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
        Vec a(n, 0.0);
        a[j] = 1.0;
        A.push_back(a);
        b.push_back(p.hi[j] - p.lo[j]);
        sense.push_back(-1);
    }
    std::size_t m = A.size();

    // Standard form: one slack per inequality, one artificial per row.
    std::size_t n_slack = 0;
    for (int s : sense)
        if (s != 0) ++n_slack;
    std::size_t slack0 = n, art0 = n + n_slack, width = art0 + m;

    std::vector<Vec> T(m, Vec(width + 1, 0.0));
    std::vector<std::size_t> basis(m);
    double scale = 1.0;
    std::size_t si = slack0;
    for (std::size_t i = 0; i < m; ++i) {
        double sign = b[i] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) T[i][j] = sign * A[i][j];
        T[i][width] = sign * b[i];
        scale = std::max(scale, T[i][width]);
        if (sense[i] != 0) {
            T[i][si] = sign * (sense[i] < 0 ? 1.0 : -1.0);
            ++si;
        }
        T[i][art0 + i] = 1.0;
        basis[i] = art0 + i;
    }

    auto pivot = [&](std::size_t r, std::size_t col) {
        double pv = T[r][col];
        for (double& v : T[r]) v /= pv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r) continue;
            double f = T[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= width; ++j) T[i][j] -= f * T[r][j];
        }
        basis[r] = col;
    };

    auto run_phase = [&](const Vec& cost, std::size_t col_limit) {
        long guard = 0;
        while (true) {
            if (++guard > 200000) throw std::runtime_error("reference simplex: pivot guard tripped");
            Vec red(cost);
            for (std::size_t i = 0; i < m; ++i) {
                double cb = cost[basis[i]];
                if (cb == 0.0) continue;
                for (std::size_t j = 0; j < col_limit; ++j) red[j] -= cb * T[i][j];
            }
            std::size_t enter = col_limit;
            for (std::size_t j = 0; j < col_limit; ++j)
                if (red[j] < -eps) {
                    enter = j;
                    break;  // Bland: first improving column
                }
            if (enter == col_limit) return;
            std::size_t leave = m;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (T[i][enter] <= eps) continue;
                double ratio = T[i][width] / T[i][enter];
                if (ratio < best - eps || (std::abs(ratio - best) <= eps && (leave == m || basis[i] < basis[leave]))) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave == m) throw std::runtime_error("reference simplex: unbounded phase");
            pivot(leave, enter);
        }
    };

    Vec cost1(width, 0.0);
    for (std::size_t j = art0; j < width; ++j) cost1[j] = 1.0;
    run_phase(cost1, width);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] >= art0) infeas += T[i][width];
    Result res;
    if (infeas > 1e-7 * scale) return res;  // Infeasible

    // Pivot remaining artificials out of the basis (or retire redundant
    // rows) so phase 2 cannot grow them back.
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < art0) continue;
        std::size_t col = art0;
        for (std::size_t j = 0; j < art0; ++j)
            if (std::abs(T[i][j]) > 1e-7) {
                col = j;
                break;
            }
        if (col == art0)
            for (double& v : T[i]) v = 0.0;
        else
            pivot(i, col);
    }

    if (!p.c.empty()) {
        Vec cost2(width, 0.0);
        for (std::size_t j = 0; j < n; ++j) cost2[j] = p.c[j];
        run_phase(cost2, art0);  // artificials may not re-enter
        res.status = Result::Status::Optimal;
    } else {
        res.status = Result::Status::Feasible;
    }
    res.x = p.lo;
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n) res.x[basis[i]] += T[i][width];
    if (!p.c.empty()) {
        res.value = 0.0;
        for (std::size_t j = 0; j < n; ++j) res.value += p.c[j] * res.x[j];
    }
    return res;
}

}  // namespace refsimplex
