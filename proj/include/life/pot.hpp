#ifndef LIFE_POT_HPP
#define LIFE_POT_HPP

#include <cmath>
#include <vector>

#include "life/common.hpp"
#include "life/matrix.hpp"
#include "life/sinkhorn.hpp"

namespace life {

/// Z-scored positions 1..T (population std). T = 1 has no temporal spread,
/// so its single coordinate is 0.
inline std::vector<double> zscored_index_times(std::size_t T) {
  if (T == 0) throw InputError("pot: empty series");
  if (T == 1) return {0.0};
  std::vector<double> t(T);
  const double mean = (static_cast<double>(T) + 1.0) / 2.0;
  double var = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    t[i] = static_cast<double>(i + 1) - mean;
    var += t[i] * t[i];
  }
  const double sd = std::sqrt(var / static_cast<double>(T));
  for (double& x : t) x /= sd;
  return t;
}

/// Z-score of arbitrary coordinates with the same degenerate rules.
inline std::vector<double> zscored_times(std::vector<double> t) {
  if (t.empty()) throw InputError("pot: empty time vector");
  if (t.size() == 1) return {0.0};
  double mean = 0.0;
  for (double x : t) mean += x;
  mean /= static_cast<double>(t.size());
  double var = 0.0;
  for (double& x : t) {
    x -= mean;
    var += x * x;
  }
  const double sd = std::sqrt(var / static_cast<double>(t.size()));
  if (sd > 0.0)
    for (double& x : t) x /= sd;
  return t;
}

/// Transport cost with explicit time coordinates:
/// cost_{ij} = (a_i - b_j)^2 + beta * (ta_i - tb_j)^2
///           + p * (da_i * (1 - ma_i) + db_j * (1 - mb_j)).
/// Entrywise non-decreasing in both beta and p.
inline Matrix pot_cost_matrix_with_times(
    const std::vector<double>& a, const std::vector<double>& b,
    const std::vector<double>& ma, const std::vector<double>& mb,
    const std::vector<double>& da, const std::vector<double>& db,
    const std::vector<double>& ta, const std::vector<double>& tb, double beta, double p) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) throw InputError("pot: empty series");
  if (ma.size() != n || da.size() != n || ta.size() != n || mb.size() != m ||
      db.size() != m || tb.size() != m)
    throw InputError("pot: mask/interval/time length mismatch");
  if (beta < 0.0 || p < 0.0) throw InputError("pot: beta and p must be non-negative");
  std::vector<double> pena(n), penb(m);
  for (std::size_t i = 0; i < n; ++i) pena[i] = p * da[i] * (1.0 - ma[i]);
  for (std::size_t j = 0; j < m; ++j) penb[j] = p * db[j] * (1.0 - mb[j]);
  Matrix cost(n, m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double dv = a[i] - b[j];
      const double dt = ta[i] - tb[j];
      cost(i, j) = dv * dv + beta * dt * dt + pena[i] + penb[j];
    }
  return cost;
}

/// Time coordinates are z-scored positions 1..T per series (the default);
/// pass explicit timestamps through the _with_times overload to use real
/// clock time instead.
inline Matrix pot_cost_matrix(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& ma, const std::vector<double>& mb,
                              const std::vector<double>& da, const std::vector<double>& db,
                              double beta, double p) {
  return pot_cost_matrix_with_times(a, b, ma, mb, da, db, zscored_index_times(a.size()),
                                    zscored_index_times(b.size()), beta, p);
}

struct PotResult {
  double distance = 0.0;
  bool converged = false;
};

/// Penalized transport distance under uniform marginals 1/T_a, 1/T_b.
inline PotResult pot_distance_full(const std::vector<double>& a, const std::vector<double>& b,
                                   const std::vector<double>& ma, const std::vector<double>& mb,
                                   const std::vector<double>& da, const std::vector<double>& db,
                                   double beta, double p, const SinkhornConfig& config) {
  TransportProblem prob;
  prob.cost = pot_cost_matrix(a, b, ma, mb, da, db, beta, p);
  prob.u.assign(a.size(), 1.0 / static_cast<double>(a.size()));
  prob.v.assign(b.size(), 1.0 / static_cast<double>(b.size()));
  const SinkhornResult res = sinkhorn(prob, config);
  return {res.distance, res.converged};
}

inline double pot_distance(const std::vector<double>& a, const std::vector<double>& b,
                           const std::vector<double>& ma, const std::vector<double>& mb,
                           const std::vector<double>& da, const std::vector<double>& db,
                           double beta, double p, const SinkhornConfig& config) {
  return pot_distance_full(a, b, ma, mb, da, db, beta, p, config).distance;
}

}  // namespace life

#endif  // LIFE_POT_HPP
