#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace relucheck {

using Vec = std::vector<double>;

// Dense row-major matrix. Desk-scale networks need no sparsity.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    Vec apply(const Vec& x) const {
        if (x.size() != cols) throw std::invalid_argument("matrix-vector dimension mismatch");
        Vec y(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            const double* row = &data[r * cols];
            for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
            y[r] = acc;
        }
        return y;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace relucheck
