#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace raremc {

using Vec = std::vector<double>;

// Dense row-major matrix, just enough for small transition kernels.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

    static Matrix from_rows(const std::vector<Vec>& rows) {
        Matrix m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()));
        for (int i = 0; i < m.rows_; ++i) {
            assert(static_cast<int>(rows[i].size()) == m.cols_);
            for (int j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }
    const double* row(int i) const { return a_.data() + static_cast<size_t>(i) * cols_; }

    bool operator==(const Matrix&) const = default;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double x : a) {
        double ax = x < 0 ? -x : x;
        if (ax > m) m = ax;
    }
    return m;
}

} // namespace raremc
