#pragma once

#include <cstddef>
#include <vector>

namespace diabrisk {

using Vec = std::vector<double>;

// Dense row-major matrix. Small on purpose: the models here are desk scale
// and every numeric kernel wants explicit loops it can be audited through.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    std::size_t size() const { return a.size(); }
    void fill(double v) { a.assign(a.size(), v); }
};

} // namespace diabrisk
