#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bioslam {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// out = m * x + b
inline void affine(const Matrix& m, std::span<const double> b, std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.data.data() + r * m.cols;
    double s = b[r];
    for (std::size_t c = 0; c < m.cols; ++c) s += w[c] * x[c];
    out[r] = s;
  }
}

/// out += m^T * g
inline void add_transpose_product(const Matrix& m, std::span<const double> g, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.data.data() + r * m.cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += w[c] * gr;
  }
}

/// m += scale * g x^T
inline void add_outer(Matrix& m, double scale, std::span<const double> g, std::span<const double> x) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* w = m.data.data() + r * m.cols;
    const double gr = scale * g[r];
    for (std::size_t c = 0; c < m.cols; ++c) w[c] += gr * x[c];
  }
}

}  // namespace bioslam
