#ifndef LIFE_DTW_HPP
#define LIFE_DTW_HPP

#include <algorithm>
#include <limits>
#include <vector>

#include "life/common.hpp"

namespace life {

/// Penalized dynamic time warping between two univariate series.
/// Per-cell cost: (x1_i - x2_j)^2 + p * (d1_i * (1 - m1_i) + d2_j * (1 - m2_j)),
/// minimized over monotone boundary-to-boundary paths with steps
/// {(1,0),(0,1),(1,1)}. No window constraint, no path-length normalization.
/// With p = 0 (or all-ones masks) this is classic DTW with squared costs.
inline double pdtw(const std::vector<double>& x1, const std::vector<double>& x2,
                   const std::vector<double>& m1, const std::vector<double>& m2,
                   const std::vector<double>& d1, const std::vector<double>& d2,
                   double p) {
  const std::size_t n = x1.size(), m = x2.size();
  if (n == 0 || m == 0) throw InputError("pdtw: empty series");
  if (m1.size() != n || d1.size() != n || m2.size() != m || d2.size() != m)
    throw InputError("pdtw: mask/interval length mismatch");
  if (p < 0.0) throw InputError("pdtw: penalty coefficient must be non-negative");

  std::vector<double> pen1(n), pen2(m);
  for (std::size_t i = 0; i < n; ++i) pen1[i] = p * d1[i] * (1.0 - m1[i]);
  for (std::size_t j = 0; j < m; ++j) pen2[j] = p * d2[j] * (1.0 - m2[j]);

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), curr(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    curr[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double diff = x1[i - 1] - x2[j - 1];
      const double cost = diff * diff + pen1[i - 1] + pen2[j - 1];
      curr[j] = cost + std::min({prev[j], curr[j - 1], prev[j - 1]});
    }
    std::swap(prev, curr);
  }
  return prev[m];
}

}  // namespace life

#endif  // LIFE_DTW_HPP
