#ifndef LIFE_MATRIX_HPP
#define LIFE_MATRIX_HPP

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace life {

/// Dense row-major matrix of doubles. Everything in this library runs at
/// desk scale, so a flat vector with index arithmetic is all we need.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows && j < cols);
    return data[i * cols + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows && j < cols);
    return data[i * cols + j];
  }

  std::span<double> row(std::size_t i) {
    assert(i < rows);
    return {data.data() + i * cols, cols};
  }
  std::span<const double> row(std::size_t i) const {
    assert(i < rows);
    return {data.data() + i * cols, cols};
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  void fill(double v) { data.assign(data.size(), v); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  bool operator==(const Matrix& o) const = default;
};

/// Column d of a matrix copied out as a vector.
inline std::vector<double> column(const Matrix& m, std::size_t d) {
  assert(d < m.cols);
  std::vector<double> out(m.rows);
  for (std::size_t t = 0; t < m.rows; ++t) out[t] = m(t, d);
  return out;
}

}  // namespace life

#endif  // LIFE_MATRIX_HPP
