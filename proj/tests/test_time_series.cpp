#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "life/time_series.hpp"

using namespace life;

namespace {

Matrix column_matrix(const std::vector<double>& col) {
  Matrix m(col.size(), 1, 0.0);
  for (std::size_t t = 0; t < col.size(); ++t) m(t, 0) = col[t];
  return m;
}

/// Independent reference: delta[t][d] is the time since the most recent
/// observation strictly before t (falling back to timestamps[0]).
double delta_scan_oracle(const std::vector<double>& ts, const Matrix& mask, std::size_t t,
                         std::size_t d) {
  for (std::size_t back = t; back-- > 0;)
    if (mask(back, d) == 1.0) return ts[t] - ts[back];
  return ts[t] - ts[0];
}

TimeSeriesSample tiny_sample(const std::vector<double>& ts, const Matrix& values,
                             const Matrix& mask) {
  return make_sample("tiny", ts, values, mask);
}

}  // namespace

TEST_CASE("intervals: fully observed column steps", "[time_series]") {
  const Matrix delta = compute_intervals({0, 1, 2}, column_matrix({1, 1, 1}));
  CHECK(delta(0, 0) == 0.0);
  CHECK(delta(1, 0) == 1.0);
  CHECK(delta(2, 0) == 1.0);
}

TEST_CASE("intervals: first row is always zero", "[time_series]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix mask(4, 3, 0.0);
  for (double& m : mask.data) m = unif(rng) < 0.5 ? 1.0 : 0.0;
  const Matrix delta = compute_intervals({0.5, 1.25, 2.0, 5.5}, mask);
  for (std::size_t d = 0; d < 3; ++d) CHECK(delta(0, d) == 0.0);
}

TEST_CASE("intervals: gaps accumulate through missing runs", "[time_series]") {
  const Matrix delta = compute_intervals({0, 1, 2, 3}, column_matrix({1, 0, 0, 1}));
  const std::vector<double> expected{0, 1, 2, 3};
  for (std::size_t t = 0; t < 4; ++t) CHECK(delta(t, 0) == expected[t]);
}

TEST_CASE("intervals: matches last-observation scan on random masks", "[time_series]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 2 + trial % 7, D = 1 + trial % 4;
    std::vector<double> ts(T);
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      acc += 0.1 + unif(rng);
      ts[t] = acc;
    }
    Matrix mask(T, D, 0.0);
    for (double& m : mask.data) m = unif(rng) < 0.6 ? 1.0 : 0.0;
    const Matrix delta = compute_intervals(ts, mask);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d)
        CHECK(delta(t, d) == Catch::Approx(delta_scan_oracle(ts, mask, t, d)).margin(1e-12));
  }
}

TEST_CASE("intervals: recomputation is idempotent", "[time_series]") {
  const std::vector<double> ts{0, 2, 5, 6};
  const Matrix mask = column_matrix({1, 0, 1, 0});
  const Matrix first = compute_intervals(ts, mask);
  const Matrix second = compute_intervals(ts, mask);
  CHECK(first == second);
}

TEST_CASE("intervals: non-increasing timestamps rejected", "[time_series]") {
  CHECK_THROWS_AS(compute_intervals({0, 1, 1}, column_matrix({1, 1, 1})), InputError);
  CHECK_THROWS_AS(compute_intervals({0, 2, 1}, column_matrix({1, 1, 1})), InputError);
}

TEST_CASE("normalize: hand z-score of {0,2}", "[time_series]") {
  Dataset ds;
  ds.samples.push_back(tiny_sample({0, 1}, column_matrix({0, 2}), column_matrix({1, 1})));
  ds = zscore_normalize(std::move(ds));
  CHECK(ds.samples[0].values(0, 0) == Catch::Approx(-1.0).margin(1e-12));
  CHECK(ds.samples[0].values(1, 0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("normalize: zero variance divides by one", "[time_series]") {
  Dataset ds;
  ds.samples.push_back(tiny_sample({0, 1, 2}, column_matrix({2, 2, 2}), column_matrix({1, 1, 1})));
  ds = zscore_normalize(std::move(ds));
  for (std::size_t t = 0; t < 3; ++t) CHECK(ds.samples[0].values(t, 0) == 0.0);
  CHECK(ds.norm.stddev[0] == 1.0);
}

TEST_CASE("normalize: missing entries are excluded and untouched", "[time_series]") {
  Matrix values(3, 2, 0.0), mask(3, 2, 1.0);
  values(0, 0) = 10.0;
  values(1, 0) = kMissing;
  mask(1, 0) = 0.0;
  values(2, 0) = 20.0;
  values(0, 1) = 1.0;
  values(1, 1) = 2.0;
  values(2, 1) = 3.0;
  Dataset ds;
  ds.samples.push_back(tiny_sample({0, 1, 2}, values, mask));
  const Matrix mask_before = ds.samples[0].mask;
  const Matrix delta_before = ds.samples[0].intervals;
  ds = zscore_normalize(std::move(ds));
  CHECK(ds.norm.mean[0] == Catch::Approx(15.0));       // only the two observed cells
  CHECK(std::isnan(ds.samples[0].values(1, 0)));       // missing cell untouched
  CHECK(ds.samples[0].mask == mask_before);
  CHECK(ds.samples[0].intervals == delta_before);
}

TEST_CASE("normalize: inverse restores observed values", "[time_series]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(5.0, 3.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset ds;
  for (int n = 0; n < 4; ++n) {
    Matrix values(6, 3, 0.0), mask(6, 3, 1.0);
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t d = 0; d < 3; ++d) {
        if (unif(rng) < 0.3) {
          mask(t, d) = 0.0;
          values(t, d) = kMissing;
        } else {
          values(t, d) = gauss(rng);
        }
      }
    mask(0, 0) = 1.0;  // keep every dimension observed somewhere
    mask(0, 1) = 1.0;
    mask(0, 2) = 1.0;
    for (std::size_t d = 0; d < 3; ++d)
      if (std::isnan(values(0, d))) values(0, d) = gauss(rng);
    ds.samples.push_back(make_sample("s" + std::to_string(n), {0, 1, 2, 3, 4, 5}, values, mask));
  }
  const Dataset original = ds;
  ds = zscore_normalize(std::move(ds));
  ds = denormalize(std::move(ds));
  for (std::size_t n = 0; n < original.size(); ++n)
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t d = 0; d < 3; ++d)
        if (original.samples[n].mask(t, d) == 1.0) {
          const double a = original.samples[n].values(t, d);
          const double b = ds.samples[n].values(t, d);
          CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
        }
}

TEST_CASE("normalize: dimension with no observations rejected", "[time_series]") {
  Matrix values(2, 2, 1.0), mask(2, 2, 1.0);
  mask(0, 1) = mask(1, 1) = 0.0;
  values(0, 1) = values(1, 1) = kMissing;
  Dataset ds;
  ds.samples.push_back(tiny_sample({0, 1}, values, mask));
  CHECK_THROWS_AS(zscore_normalize(std::move(ds)), InputError);
}

TEST_CASE("interpolate: midpoint fill", "[time_series]") {
  Matrix values = column_matrix({0, kMissing, 2});
  Matrix mask = column_matrix({1, 0, 1});
  const TimeSeriesSample s = linear_interpolate(tiny_sample({0, 1, 2}, values, mask));
  CHECK(s.values(1, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(s.mask(1, 0) == 0.0);  // mask untouched by filling
}

TEST_CASE("interpolate: leading and trailing runs hold nearest", "[time_series]") {
  Matrix values = column_matrix({kMissing, 5, kMissing, kMissing});
  Matrix mask = column_matrix({0, 1, 0, 0});
  const TimeSeriesSample s = linear_interpolate(tiny_sample({0, 1, 2, 3}, values, mask));
  CHECK(s.values(0, 0) == 5.0);
  CHECK(s.values(2, 0) == 5.0);
  CHECK(s.values(3, 0) == 5.0);
}

TEST_CASE("interpolate: all-missing dimension fills zero", "[time_series]") {
  Matrix values = column_matrix({kMissing, kMissing});
  Matrix mask = column_matrix({0, 0});
  const TimeSeriesSample s = linear_interpolate(tiny_sample({0, 1}, values, mask));
  CHECK(s.values(0, 0) == 0.0);
  CHECK(s.values(1, 0) == 0.0);
}

TEST_CASE("interpolate: weights follow timestamps, not indices", "[time_series]") {
  Matrix values = column_matrix({0, kMissing, 10});
  Matrix mask = column_matrix({1, 0, 1});
  const TimeSeriesSample s = linear_interpolate(tiny_sample({0, 9, 10}, values, mask));
  CHECK(s.values(1, 0) == Catch::Approx(9.0).margin(1e-12));
}

TEST_CASE("inject: empty index set leaves data untouched", "[time_series]") {
  Matrix values(3, 2, 1.0), mask(3, 2, 1.0);
  Dataset ds;
  ds.samples.push_back(tiny_sample({0, 1, 2}, values, mask));
  const Dataset out = inject_damaged_sensors(ds, {}, 0.9, 42);
  CHECK(out.samples[0].mask == ds.samples[0].mask);
  CHECK(missing_rate(out) == 0.0);
}

TEST_CASE("inject: empirical elimination rate within three sigma", "[time_series]") {
  const std::size_t N = 40, T = 25, D = 4;
  Dataset ds;
  for (std::size_t n = 0; n < N; ++n) {
    Matrix values(T, D, 1.0), mask(T, D, 1.0);
    ds.samples.push_back(make_sample("s" + std::to_string(n),
                                     [&] {
                                       std::vector<double> ts(T);
                                       for (std::size_t t = 0; t < T; ++t) ts[t] = double(t);
                                       return ts;
                                     }(),
                                     values, mask));
  }
  const double rate = 0.9;
  const Dataset out = inject_damaged_sensors(ds, {0, 1, 2, 3}, rate, 123);
  const double cells = static_cast<double>(N * T * D);
  const double sigma = std::sqrt(rate * (1.0 - rate) / cells);
  CHECK(std::abs(missing_rate(out) - rate) <= 3.0 * sigma);
}

TEST_CASE("inject: deterministic for a fixed seed and never revives", "[time_series]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset ds;
  for (int n = 0; n < 5; ++n) {
    Matrix values(8, 3, 1.0), mask(8, 3, 1.0);
    for (std::size_t t = 0; t < 8; ++t)
      for (std::size_t d = 0; d < 3; ++d)
        if (unif(rng) < 0.3) {
          mask(t, d) = 0.0;
          values(t, d) = kMissing;
        }
    ds.samples.push_back(make_sample("s" + std::to_string(n), {0, 1, 2, 3, 4, 5, 6, 7}, values,
                                     mask));
  }
  const Dataset a = inject_damaged_sensors(ds, {0, 2}, 0.5, 99);
  const Dataset b = inject_damaged_sensors(ds, {0, 2}, 0.5, 99);
  for (std::size_t n = 0; n < ds.size(); ++n) {
    CHECK(a.samples[n].mask == b.samples[n].mask);
    for (std::size_t t = 0; t < 8; ++t)
      for (std::size_t d = 0; d < 3; ++d)
        if (ds.samples[n].mask(t, d) == 0.0) CHECK(a.samples[n].mask(t, d) == 0.0);
  }
  CHECK(missing_rate(a) >= missing_rate(ds));
}

TEST_CASE("inject: delta recomputed after damage", "[time_series]") {
  Dataset ds;
  ds.samples.push_back(tiny_sample({0, 1, 2}, column_matrix({1, 2, 3}), column_matrix({1, 1, 1})));
  const Dataset out = inject_damaged_sensors(ds, {0}, 1.0, 7);  // eliminate everything
  const Matrix& delta = out.samples[0].intervals;
  CHECK(delta(1, 0) == 1.0);
  CHECK(delta(2, 0) == 2.0);  // gap accumulates once the column is empty
}

TEST_CASE("inject: invalid index and rate rejected", "[time_series]") {
  Dataset ds;
  ds.samples.push_back(tiny_sample({0, 1}, column_matrix({1, 2}), column_matrix({1, 1})));
  CHECK_THROWS_AS(inject_damaged_sensors(ds, {5}, 0.9, 0), InputError);
  CHECK_THROWS_AS(inject_damaged_sensors(ds, {0}, 1.5, 0), InputError);
}

TEST_CASE("subvector: direct indexing", "[time_series]") {
  const std::vector<double> u{1, 2, 3, 4};
  CHECK(subvector(u, 2, 0) == std::vector<double>{1, 2});
  CHECK(subvector(u, 2, 1) == std::vector<double>{3, 4});
  CHECK(subvector(u, 1, 2) == std::vector<double>{3});
  CHECK_THROWS_AS(subvector(u, 2, 2), InputError);
  CHECK_THROWS_AS(subvector(u, 3, 0), InputError);
}

TEST_CASE("make_sample: NaN cells force mask zero", "[time_series]") {
  Matrix values = column_matrix({1, kMissing});
  Matrix mask = column_matrix({1, 1});  // claims observed; NaN wins
  const TimeSeriesSample s = tiny_sample({0, 1}, values, mask);
  CHECK(s.mask(1, 0) == 0.0);
}

TEST_CASE("validate: observed NaN and ragged shapes rejected", "[time_series]") {
  TimeSeriesSample s;
  s.id = "bad";
  s.timestamps = {0, 1};
  s.values = column_matrix({1, 2});
  s.mask = Matrix(3, 1, 1.0);
  CHECK_THROWS_AS(validate_sample(s), InputError);
}
