#ifndef LIFE_CORRELATION_HPP
#define LIFE_CORRELATION_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "life/common.hpp"
#include "life/matrix.hpp"

namespace life {

/// D x D dimension-correlation matrix: symmetric, unit diagonal,
/// off-diagonal entries in [0,1].
struct CorrelationMatrix {
  Matrix entries;

  std::size_t dims() const { return entries.rows; }
  double operator()(std::size_t i, std::size_t j) const { return entries(i, j); }
};

inline void validate_correlation(const CorrelationMatrix& c, double tol = 1e-12) {
  const Matrix& m = c.entries;
  if (m.rows != m.cols) throw InputError("correlation: matrix must be square");
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (std::abs(m(i, i) - 1.0) > tol)
      throw InputError("correlation: diagonal must be exactly 1");
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > tol)
        throw InputError("correlation: matrix must be symmetric");
      if (m(i, j) < -tol || m(i, j) > 1.0 + tol)
        throw InputError("correlation: entries must lie in [0,1]");
    }
  }
}

inline CorrelationMatrix ones_correlation(std::size_t D) {
  return {Matrix(D, D, 1.0)};
}

inline CorrelationMatrix diag_correlation(std::size_t D) {
  return {Matrix::identity(D)};
}

/// Symmetric uniform-[0,1] off-diagonal entries, unit diagonal, seeded.
inline CorrelationMatrix rand_correlation(std::size_t D, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix m(D, D, 0.0);
  for (std::size_t i = 0; i < D; ++i) {
    m(i, i) = 1.0;
    for (std::size_t j = i + 1; j < D; ++j) m(i, j) = m(j, i) = unif(rng);
  }
  return {m};
}

inline std::string correlation_to_csv(const CorrelationMatrix& c) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < c.dims(); ++i) {
    for (std::size_t j = 0; j < c.dims(); ++j) {
      if (j) out << ',';
      out << c.entries(i, j);
    }
    out << '\n';
  }
  return out.str();
}

inline CorrelationMatrix correlation_from_csv_text(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("correlation CSV: cell '" + cell + "' is not a number");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("correlation CSV: empty input");
  const std::size_t D = rows.size();
  Matrix m(D, D, 0.0);
  for (std::size_t i = 0; i < D; ++i) {
    if (rows[i].size() != D) throw InputError("correlation CSV: matrix must be square");
    for (std::size_t j = 0; j < D; ++j) m(i, j) = rows[i][j];
  }
  CorrelationMatrix c{m};
  validate_correlation(c, 1e-9);
  return c;
}

inline void write_correlation_csv(const std::string& path, const CorrelationMatrix& c) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << correlation_to_csv(c);
}

inline CorrelationMatrix read_correlation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return correlation_from_csv_text(buf.str());
}

/// Frobenius norm of the entrywise difference, used to compare extractions.
inline double frobenius_distance(const CorrelationMatrix& a, const CorrelationMatrix& b) {
  if (a.dims() != b.dims()) throw InputError("frobenius: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const double diff = a.entries.data[i] - b.entries.data[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

}  // namespace life

#endif  // LIFE_CORRELATION_HPP
