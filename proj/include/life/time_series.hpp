#ifndef LIFE_TIME_SERIES_HPP
#define LIFE_TIME_SERIES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "life/common.hpp"
#include "life/matrix.hpp"

namespace life {

/// One multivariate series: T timestamps, T x D values with a 0/1 mask and
/// the time-since-last-observation matrix delta derived from both.
/// The mask is authoritative; values hold NaN where mask = 0 and those cells
/// are never read arithmetically except where an operation's contract says
/// "treated as zero".
struct TimeSeriesSample {
  std::string id;
  std::vector<double> timestamps;  // strictly increasing, length T
  Matrix values;                   // T x D, NaN where mask = 0
  Matrix mask;                     // T x D, entries 0.0 or 1.0
  Matrix intervals;                // T x D, delta recursion over (timestamps, mask)
  double label = 0.0;              // class index or regression target
  bool has_label = false;

  std::size_t length() const { return timestamps.size(); }
  std::size_t dims() const { return values.cols; }
};

struct Task {
  enum class Kind { classification, regression };
  Kind kind = Kind::classification;
  std::size_t num_classes = 2;  // meaningful only for classification
};

/// Per-dimension pooled mean / population std over observed entries.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // zero-variance dimensions store 1.0

  std::size_t dims() const { return mean.size(); }
};

struct Dataset {
  std::vector<TimeSeriesSample> samples;
  Task task;
  NormStats norm;  // empty until zscore_normalize has run
  bool normalized = false;

  std::size_t dims() const { return samples.empty() ? 0 : samples.front().dims(); }
  std::size_t size() const { return samples.size(); }
};

inline bool is_missing(double v) { return std::isnan(v); }

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// delta[0][d] = 0; delta[t][d] = step if the previous row was observed,
/// otherwise step plus the accumulated gap. Units follow the timestamps.
inline Matrix compute_intervals(const std::vector<double>& timestamps, const Matrix& mask) {
  const std::size_t T = timestamps.size();
  if (mask.rows != T) throw InputError("compute_intervals: mask rows != timestamps length");
  for (std::size_t t = 1; t < T; ++t)
    if (!(timestamps[t] > timestamps[t - 1]))
      throw InputError("compute_intervals: timestamps must be strictly increasing");
  Matrix delta(T, mask.cols, 0.0);
  for (std::size_t t = 1; t < T; ++t) {
    const double step = timestamps[t] - timestamps[t - 1];
    for (std::size_t d = 0; d < mask.cols; ++d)
      delta(t, d) = mask(t - 1, d) == 1.0 ? step : step + delta(t - 1, d);
  }
  return delta;
}

inline void validate_sample(const TimeSeriesSample& s) {
  const std::size_t T = s.length();
  if (T == 0) throw InputError("sample '" + s.id + "': empty series");
  if (s.values.rows != T || s.mask.rows != T)
    throw InputError("sample '" + s.id + "': values/mask rows != timestamps length");
  if (s.values.cols != s.mask.cols)
    throw InputError("sample '" + s.id + "': values/mask dimension mismatch");
  for (double m : s.mask.data)
    if (m != 0.0 && m != 1.0) throw InputError("sample '" + s.id + "': mask entries must be 0 or 1");
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < s.mask.cols; ++d)
      if (s.mask(t, d) == 1.0 && is_missing(s.values(t, d)))
        throw InputError("sample '" + s.id + "': observed entry holds NaN");
  for (std::size_t t = 1; t < T; ++t)
    if (!(s.timestamps[t] > s.timestamps[t - 1]))
      throw InputError("sample '" + s.id + "': timestamps must be strictly increasing");
}

/// Builds a sample and derives delta. NaN cells in `values` are missing even
/// if the mask disagrees; the mask is corrected to match.
inline TimeSeriesSample make_sample(std::string id, std::vector<double> timestamps,
                                    Matrix values, Matrix mask) {
  TimeSeriesSample s;
  s.id = std::move(id);
  s.timestamps = std::move(timestamps);
  s.values = std::move(values);
  s.mask = std::move(mask);
  for (std::size_t t = 0; t < s.values.rows; ++t)
    for (std::size_t d = 0; d < s.values.cols; ++d) {
      if (is_missing(s.values(t, d))) s.mask(t, d) = 0.0;
      if (s.mask(t, d) == 0.0) s.values(t, d) = kMissing;
    }
  validate_sample(s);
  s.intervals = compute_intervals(s.timestamps, s.mask);
  return s;
}

inline void validate_dataset(const Dataset& ds) {
  if (ds.samples.empty()) throw InputError("dataset: no samples");
  const std::size_t D = ds.samples.front().dims();
  for (const auto& s : ds.samples) {
    validate_sample(s);
    if (s.dims() != D) throw InputError("dataset: samples disagree on dimension count");
  }
}

/// Pooled per-dimension mean and population std over observed entries.
/// A dimension with no observed value anywhere is an input error; a
/// zero-variance dimension gets divisor 1 so values stay finite.
inline NormStats compute_norm_stats(const Dataset& ds) {
  validate_dataset(ds);
  const std::size_t D = ds.dims();
  std::vector<double> sum(D, 0.0), sumsq(D, 0.0);
  std::vector<std::size_t> count(D, 0);
  for (const auto& s : ds.samples)
    for (std::size_t t = 0; t < s.length(); ++t)
      for (std::size_t d = 0; d < D; ++d)
        if (s.mask(t, d) == 1.0) {
          sum[d] += s.values(t, d);
          sumsq[d] += s.values(t, d) * s.values(t, d);
          ++count[d];
        }
  NormStats stats;
  stats.mean.resize(D);
  stats.stddev.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    if (count[d] == 0)
      throw InputError("normalize: dimension " + std::to_string(d) + " has no observed values");
    const double mean = sum[d] / static_cast<double>(count[d]);
    double var = sumsq[d] / static_cast<double>(count[d]) - mean * mean;
    if (var < 0.0) var = 0.0;  // guard rounding
    const double sd = std::sqrt(var);
    stats.mean[d] = mean;
    stats.stddev[d] = sd > 0.0 ? sd : 1.0;
  }
  return stats;
}

/// Applies stored statistics: x -> (x - mean) / std on observed entries.
/// Mask and delta are untouched. Used directly for held-out data so the
/// training-set statistics govern every split.
inline Dataset apply_normalization(Dataset ds, const NormStats& stats) {
  if (stats.dims() != ds.dims()) throw InputError("normalize: statistics dimension mismatch");
  for (auto& s : ds.samples)
    for (std::size_t t = 0; t < s.length(); ++t)
      for (std::size_t d = 0; d < s.dims(); ++d)
        if (s.mask(t, d) == 1.0)
          s.values(t, d) = (s.values(t, d) - stats.mean[d]) / stats.stddev[d];
  ds.norm = stats;
  ds.normalized = true;
  return ds;
}

inline Dataset zscore_normalize(Dataset ds) {
  NormStats stats = compute_norm_stats(ds);
  return apply_normalization(std::move(ds), stats);
}

/// Inverse of apply_normalization on observed entries.
inline Dataset denormalize(Dataset ds) {
  if (!ds.normalized) return ds;
  for (auto& s : ds.samples)
    for (std::size_t t = 0; t < s.length(); ++t)
      for (std::size_t d = 0; d < s.dims(); ++d)
        if (s.mask(t, d) == 1.0)
          s.values(t, d) = s.values(t, d) * ds.norm.stddev[d] + ds.norm.mean[d];
  ds.normalized = false;
  ds.norm = NormStats{};
  return ds;
}

/// Fills missing cells by linear interpolation in timestamp space between the
/// nearest observed neighbours per dimension; leading/trailing runs hold the
/// nearest observation; an all-missing dimension fills with 0. Mask unchanged.
inline TimeSeriesSample linear_interpolate(TimeSeriesSample s) {
  const std::size_t T = s.length();
  for (std::size_t d = 0; d < s.dims(); ++d) {
    std::vector<std::size_t> obs;
    for (std::size_t t = 0; t < T; ++t)
      if (s.mask(t, d) == 1.0) obs.push_back(t);
    if (obs.empty()) {
      for (std::size_t t = 0; t < T; ++t) s.values(t, d) = 0.0;
      continue;
    }
    for (std::size_t t = 0; t < obs.front(); ++t) s.values(t, d) = s.values(obs.front(), d);
    for (std::size_t t = obs.back() + 1; t < T; ++t) s.values(t, d) = s.values(obs.back(), d);
    for (std::size_t i = 0; i + 1 < obs.size(); ++i) {
      const std::size_t lo = obs[i], hi = obs[i + 1];
      const double t0 = s.timestamps[lo], t1 = s.timestamps[hi];
      const double v0 = s.values(lo, d), v1 = s.values(hi, d);
      for (std::size_t t = lo + 1; t < hi; ++t) {
        const double w = (s.timestamps[t] - t0) / (t1 - t0);
        s.values(t, d) = v0 + w * (v1 - v0);
      }
    }
  }
  return s;
}

/// Flips each observed entry of every damaged dimension to missing
/// independently with probability elimination_rate. Deterministic for a
/// fixed seed; missing entries are never revived; delta is recomputed.
inline Dataset inject_damaged_sensors(Dataset ds, const std::set<std::size_t>& damaged,
                                      double elimination_rate, std::uint64_t seed) {
  validate_dataset(ds);
  if (elimination_rate < 0.0 || elimination_rate > 1.0)
    throw InputError("inject: elimination rate must lie in [0,1]");
  const std::size_t D = ds.dims();
  for (std::size_t d : damaged)
    if (d >= D) throw InputError("inject: damaged index " + std::to_string(d) + " out of range");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& s : ds.samples)
    for (std::size_t t = 0; t < s.length(); ++t)
      for (std::size_t d : damaged)
        if (s.mask(t, d) == 1.0 && unif(rng) < elimination_rate) {
          s.mask(t, d) = 0.0;
          s.values(t, d) = kMissing;
        }
  for (auto& s : ds.samples) s.intervals = compute_intervals(s.timestamps, s.mask);
  return ds;
}

/// The d-th length-k block of a stacked vector: entries [d*k, (d+1)*k).
/// d is 0-based here and everywhere in this library.
inline std::vector<double> subvector(const std::vector<double>& u, std::size_t k, std::size_t d) {
  if (k == 0 || u.size() % k != 0) throw InputError("subvector: length not divisible by k");
  const std::size_t D = u.size() / k;
  if (d >= D) throw InputError("subvector: dimension index out of range");
  return std::vector<double>(u.begin() + static_cast<std::ptrdiff_t>(d * k),
                             u.begin() + static_cast<std::ptrdiff_t>((d + 1) * k));
}

/// Fraction of cells that are missing, over the whole dataset.
inline double missing_rate(const Dataset& ds) {
  std::size_t total = 0, miss = 0;
  for (const auto& s : ds.samples) {
    total += s.mask.size();
    for (double m : s.mask.data)
      if (m == 0.0) ++miss;
  }
  return total == 0 ? 0.0 : static_cast<double>(miss) / static_cast<double>(total);
}

}  // namespace life

#endif  // LIFE_TIME_SERIES_HPP
