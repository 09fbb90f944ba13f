#ifndef LIFE_CME_HPP
#define LIFE_CME_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "life/common.hpp"
#include "life/correlation.hpp"
#include "life/dtw.hpp"
#include "life/matrix.hpp"
#include "life/pot.hpp"
#include "life/time_series.hpp"

namespace life {

/// Which pairwise distance drives correlation extraction.
///   pdtw        penalized DTW on interpolated values (the default method)
///   dtw_impute  classic DTW on interpolated values (pdtw with p forced to 0)
///   dtw_drop    classic DTW on each series compressed to observed values
///   pot         penalized optimal transport (Sinkhorn)
struct DistanceSpec {
  enum class Kind { pdtw, dtw_impute, dtw_drop, pot };
  Kind kind = Kind::pdtw;
  double p = 0.5;     // missingness penalty coefficient
  double beta = 1.0;  // time-distance weight (pot only)
  SinkhornConfig sinkhorn;
};

/// Weighted pairwise-distance sums. Merging is associative and
/// order-independent, so per-sample contributions may be accumulated in any
/// partition; the final reduction below is a fixed sequential order.
struct PairwiseAccumulator {
  Matrix weighted_sum;  // sum over samples of Q_ij * S_ij
  Matrix weight;        // sum over samples of Q_ij

  explicit PairwiseAccumulator(std::size_t D = 0)
      : weighted_sum(D, D, 0.0), weight(D, D, 0.0) {}

  void add(std::size_t i, std::size_t j, double distance, double q) {
    weighted_sum(i, j) += q * distance;
    weighted_sum(j, i) += q * distance;
    weight(i, j) += q;
    weight(j, i) += q;
  }

  void merge(const PairwiseAccumulator& other) {
    if (other.weight.rows != weight.rows) throw InputError("accumulator: dimension mismatch");
    for (std::size_t idx = 0; idx < weight.size(); ++idx) {
      weighted_sum.data[idx] += other.weighted_sum.data[idx];
      weight.data[idx] += other.weight.data[idx];
    }
  }
};

struct CmeDiagnostics {
  std::vector<std::pair<std::size_t, std::size_t>> zero_weight_pairs;
  std::size_t nonconverged_transport = 0;  // pot only
};

namespace detail {

/// Off-diagonal reciprocals of the weighted mean distances, min-max scaled to
/// [0,1]. A zero mean distance (identical dimensions) acts as +infinity and
/// maps to 1. Degenerate ranges: all-equal finite values with no infinities
/// map to 1; equal finite values alongside infinities map to 0 (order
/// preserved). Zero-weight pairs get 0 and a diagnostics entry.
inline CorrelationMatrix normalize_reciprocals(const PairwiseAccumulator& acc,
                                               CmeDiagnostics* diag) {
  const std::size_t D = acc.weight.rows;
  constexpr double inf = std::numeric_limits<double>::infinity();
  Matrix recip(D, D, 0.0);
  double finite_min = inf, finite_max = -inf;
  bool any_inf = false, any_valid = false;
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = i + 1; j < D; ++j) {
      if (acc.weight(i, j) <= 0.0) {
        recip(i, j) = recip(j, i) = -1.0;  // zero-weight marker
        if (diag) diag->zero_weight_pairs.emplace_back(i, j);
        continue;
      }
      any_valid = true;
      const double mean_dist = acc.weighted_sum(i, j) / acc.weight(i, j);
      const double r = mean_dist > 0.0 ? 1.0 / mean_dist : inf;
      recip(i, j) = recip(j, i) = r;
      if (std::isfinite(r)) {
        finite_min = std::min(finite_min, r);
        finite_max = std::max(finite_max, r);
      } else {
        any_inf = true;
      }
    }

  Matrix c = Matrix::identity(D);
  if (any_valid) {
    const bool has_finite = finite_max >= finite_min;
    const double range = has_finite ? finite_max - finite_min : 0.0;
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = i + 1; j < D; ++j) {
        const double r = recip(i, j);
        if (r < 0.0) continue;  // zero-weight stays 0
        double value;
        if (!std::isfinite(r)) {
          value = 1.0;
        } else if (range > 0.0) {
          value = (r - finite_min) / range;
        } else {
          value = any_inf ? 0.0 : 1.0;
        }
        c(i, j) = c(j, i) = value;
      }
  }
  return {c};
}

}  // namespace detail

/// Correlation-matrix extraction: per sample and dimension pair, a pairwise
/// distance weighted by the pair's observation count, aggregated over samples
/// as a weighted mean, then inverted and min-max scaled. High correlation =
/// small weighted mean distance.
inline CorrelationMatrix cme_pipeline(const Dataset& dataset, const DistanceSpec& spec,
                                      CmeDiagnostics* diag = nullptr) {
  validate_dataset(dataset);
  const std::size_t D = dataset.dims();
  if (D < 2) throw InputError("cme: need at least two dimensions");
  if (spec.p < 0.0) throw InputError("cme: penalty coefficient must be non-negative");

  PairwiseAccumulator acc(D);
  for (const auto& raw : dataset.samples) {
    const bool drop = spec.kind == DistanceSpec::Kind::dtw_drop;
    const TimeSeriesSample sample = drop ? raw : linear_interpolate(raw);
    const std::size_t T = sample.length();

    std::vector<std::vector<double>> vals(D), masks(D), deltas(D), dropped(D);
    std::vector<double> obs_count(D, 0.0);
    for (std::size_t d = 0; d < D; ++d) {
      vals[d] = column(sample.values, d);
      masks[d] = column(sample.mask, d);
      deltas[d] = column(sample.intervals, d);
      for (std::size_t t = 0; t < T; ++t) obs_count[d] += masks[d][t];
      if (drop)
        for (std::size_t t = 0; t < T; ++t)
          if (masks[d][t] == 1.0) dropped[d].push_back(raw.values(t, d));
    }

    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = i + 1; j < D; ++j) {
        const double q = obs_count[i] + obs_count[j];
        if (q <= 0.0) continue;
        double dist = 0.0;
        switch (spec.kind) {
          case DistanceSpec::Kind::pdtw:
            dist = pdtw(vals[i], vals[j], masks[i], masks[j], deltas[i], deltas[j], spec.p);
            break;
          case DistanceSpec::Kind::dtw_impute:
            dist = pdtw(vals[i], vals[j], masks[i], masks[j], deltas[i], deltas[j], 0.0);
            break;
          case DistanceSpec::Kind::dtw_drop: {
            if (dropped[i].empty() || dropped[j].empty()) continue;  // weight 0 for this sample
            const std::vector<double> ones_i(dropped[i].size(), 1.0);
            const std::vector<double> ones_j(dropped[j].size(), 1.0);
            const std::vector<double> zeros_i(dropped[i].size(), 0.0);
            const std::vector<double> zeros_j(dropped[j].size(), 0.0);
            dist = pdtw(dropped[i], dropped[j], ones_i, ones_j, zeros_i, zeros_j, 0.0);
            break;
          }
          case DistanceSpec::Kind::pot: {
            const PotResult res =
                pot_distance_full(vals[i], vals[j], masks[i], masks[j], deltas[i], deltas[j],
                                  spec.beta, spec.p, spec.sinkhorn);
            if (!res.converged && diag) ++diag->nonconverged_transport;
            dist = res.distance;
            break;
          }
        }
        acc.add(i, j, dist, q);
      }
  }
  return detail::normalize_reciprocals(acc, diag);
}

/// Per-sample |Pearson| over co-observed timestamps, weighted by the
/// co-observed count; samples with fewer than two co-observed points (or a
/// constant segment) contribute zero weight for that pair.
inline CorrelationMatrix pearson_cme(const Dataset& dataset, CmeDiagnostics* diag = nullptr) {
  validate_dataset(dataset);
  const std::size_t D = dataset.dims();
  if (D < 2) throw InputError("cme: need at least two dimensions");

  Matrix num(D, D, 0.0), den(D, D, 0.0);
  for (const auto& s : dataset.samples) {
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = i + 1; j < D; ++j) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        double n = 0.0;
        for (std::size_t t = 0; t < s.length(); ++t)
          if (s.mask(t, i) == 1.0 && s.mask(t, j) == 1.0) {
            const double x = s.values(t, i), y = s.values(t, j);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
            n += 1.0;
          }
        if (n < 2.0) continue;
        const double vx = sxx / n - (sx / n) * (sx / n);
        const double vy = syy / n - (sy / n) * (sy / n);
        double rho = 0.0;  // constant segment: correlation 0, weight kept
        if (vx > 0.0 && vy > 0.0) {
          const double cov = sxy / n - (sx / n) * (sy / n);
          rho = std::min(std::abs(cov / std::sqrt(vx * vy)), 1.0);  // guard rounding
        }
        num(i, j) += n * rho;
        den(i, j) += n;
      }
  }

  Matrix c = Matrix::identity(D);
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = i + 1; j < D; ++j) {
      if (den(i, j) > 0.0) {
        c(i, j) = c(j, i) = num(i, j) / den(i, j);
      } else if (diag) {
        diag->zero_weight_pairs.emplace_back(i, j);
      }
    }
  return {c};
}

/// Correlation extraction with the transport distance substituted for PDTW.
inline CorrelationMatrix cme_pot(const Dataset& dataset, double beta, double p,
                                 const SinkhornConfig& config, CmeDiagnostics* diag = nullptr) {
  DistanceSpec spec;
  spec.kind = DistanceSpec::Kind::pot;
  spec.beta = beta;
  spec.p = p;
  spec.sinkhorn = config;
  return cme_pipeline(dataset, spec, diag);
}

}  // namespace life

#endif  // LIFE_CME_HPP
