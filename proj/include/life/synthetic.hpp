#ifndef LIFE_SYNTHETIC_HPP
#define LIFE_SYNTHETIC_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "life/common.hpp"
#include "life/matrix.hpp"
#include "life/time_series.hpp"

namespace life {

/// Planted-correlation benchmark. Dimension pairs (0,1), (2,3), (4,5) each
/// share a per-sample sinusoid z(t) = A sin(w t + phi) plus small independent
/// noise, so those pairs are genuinely correlated. Dimensions 6 and 7 are
/// independent sparse-spike channels: mostly zero with rare large spikes.
/// Once interpolated, two mostly-missing spike channels look like
/// near-identical flat lines, which fools a penalty-free distance into a
/// fictitious correlation; the missingness penalty removes it.
/// The label is 1 when the three shared amplitudes sum above the threshold,
/// with a resampled margin so classes stay separable.
///
/// With offset_labels set, each pair additionally carries a shared
/// per-sample baseline offset and the label fires when the largest offset
/// MAGNITUDE across pairs crosses the threshold. A baseline level survives
/// every time-averaging stage of a feature pipeline, and the label is even
/// in each offset, so every linear readout of the inputs — any weighted sum
/// of dimensions — carries zero label signal by symmetry. Reading the label
/// requires rectifying each pair's offset separately before combining
/// pairs. Features gated to a single pair are one-dimensional nonlinear
/// functions of that pair's offset, which a shallow head can rectify;
/// features that mix all dimensions see only sums of offsets, in which the
/// label-blind baseline channels also ride along, and must first
/// disentangle the pairs.
///
/// With level_channels set, dimensions 6 and 7 carry independent per-sample
/// baseline levels instead of spikes. A level is the same statistic class as
/// the label-bearing offsets and survives time averaging, so features that
/// mix every dimension inherit an irreducible confound until they learn to
/// suppress those channels; gated features exclude them by construction.
struct SyntheticConfig {
  std::size_t N = 200;
  std::size_t T = 16;
  std::vector<double> missing_rates;  // per dimension, size 8
  double noise = 0.05;
  double spike_prob = 0.08;
  double label_threshold = 3.0;
  double label_margin = 0.15;
  double time_step = 1.0;      // spacing between consecutive timestamps
  bool offset_labels = false;  // label = sign of planted baseline offsets
  double offset_range = 0.8;   // offsets drawn from U(-range, range)
  bool distinct_bands = false; // each pair samples its own frequency band
  bool level_channels = false; // dims 6,7 hold random levels, not spikes
  std::uint64_t seed = 0;
};

inline SyntheticConfig synthetic_preset(const std::string& name) {
  SyntheticConfig cfg;
  if (name == "stability") {
    // 40% average missingness, heaviest on the spike channels. The sine
    // dimensions share one rate so that the missingness-penalty mass is
    // uniform across their pairs and the distance ordering among them is
    // driven by values at every penalty level. The wide time step mimics
    // sparsely sampled clinical series: gaps are large in clock time, so a
    // moderate penalty coefficient already outweighs value distances and the
    // correlation matrix settles early in the penalty sweep.
    cfg.missing_rates = {0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.85, 0.85};
    cfg.time_step = 8.0;
  } else if (name == "classification") {
    // 70% missingness on one member of each correlated pair; the sparse
    // members carry the label-bearing baseline offsets, their well-observed
    // partners carry the shared waveform only
    cfg.missing_rates = {0.7, 0.1, 0.7, 0.1, 0.7, 0.1, 0.5, 0.5};
    cfg.offset_labels = true;
    // wide offsets so the label-bearing baseline dominates the carrier's
    // variance; threshold chosen so the two classes keep equal mass once
    // the +-margin band around it is resampled away
    cfg.offset_range = 1.5;
    cfg.label_threshold = 1.18;
    cfg.label_margin = 0.10;
    // each latent process gets its own characteristic frequency band, so
    // different pairs have structurally different shapes (peak counts) that
    // even a warping distance keeps apart; the longer grid keeps every band
    // slow relative to the gaps left by 70% missingness, so interpolation on
    // the sparse member preserves its shape
    cfg.distinct_bands = true;
    cfg.T = 48;
    // the uncorrelated channels carry per-sample baseline levels: a nuisance
    // of the same statistic class as the label signal, which survives time
    // averaging and so confounds any feature that mixes it in
    cfg.level_channels = true;
  } else if (name == "damage-base") {
    // near-complete data; damage is injected separately on top. Labels,
    // frequency bands, and grid length match the classification preset so
    // the base task is comfortably learnable and degrades as offset-bearing
    // dimensions are knocked out.
    cfg.missing_rates = {0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05};
    cfg.offset_labels = true;
    cfg.offset_range = 1.5;
    cfg.label_threshold = 1.18;
    cfg.label_margin = 0.10;
    cfg.distinct_bands = true;
    cfg.T = 48;
    cfg.level_channels = true;
  } else {
    throw InputError("unknown synthetic preset '" + name + "'");
  }
  return cfg;
}

inline constexpr std::size_t kSyntheticDims = 8;

inline Dataset make_planted_dataset(const SyntheticConfig& cfg) {
  if (cfg.missing_rates.size() != kSyntheticDims)
    throw InputError("synthetic: missing_rates must have 8 entries");
  for (double r : cfg.missing_rates)
    if (r < 0.0 || r >= 1.0) throw InputError("synthetic: missing rates must lie in [0,1)");
  if (cfg.N == 0 || cfg.T == 0) throw InputError("synthetic: N and T must be positive");
  if (!(cfg.time_step > 0.0)) throw InputError("synthetic: time_step must be positive");
  if (cfg.offset_labels && !(cfg.offset_range > 0.0))
    throw InputError("synthetic: offset_range must be positive");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> amp(0.6, 1.4);
  std::uniform_real_distribution<double> freq(0.3, 0.9);
  std::uniform_real_distribution<double> bands[3] = {
      std::uniform_real_distribution<double>(0.13, 0.17),
      std::uniform_real_distribution<double>(0.21, 0.27),
      std::uniform_real_distribution<double>(0.33, 0.41)};
  std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.14159265358979323846);
  std::uniform_real_distribution<double> off(-cfg.offset_range, cfg.offset_range);
  std::normal_distribution<double> noise(0.0, cfg.noise);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> spike_height(2.0, 4.0);
  std::uniform_real_distribution<double> level(-1.0, 1.0);

  Dataset ds;
  ds.task = Task{Task::Kind::classification, 2};
  for (std::size_t n = 0; n < cfg.N; ++n) {
    // shared latents; the label-bearing ones (summed amplitudes, or the
    // largest baseline offset in offset mode) are rerolled until the label
    // margin holds
    double A[3], W[3], P[3], B[3] = {0.0, 0.0, 0.0};
    double latent = 0.0;
    for (int attempt = 0; attempt < 100; ++attempt) {
      latent = cfg.offset_labels ? -std::numeric_limits<double>::infinity() : 0.0;
      for (int p = 0; p < 3; ++p) {
        A[p] = amp(rng);
        if (cfg.offset_labels) {
          B[p] = off(rng);
          latent = std::max(latent, std::abs(B[p]));
        } else {
          latent += A[p];
        }
      }
      if (std::abs(latent - cfg.label_threshold) >= cfg.label_margin) break;
    }
    for (int p = 0; p < 3; ++p) {
      W[p] = cfg.distinct_bands ? bands[p](rng) : freq(rng);
      P[p] = phase(rng);
    }

    double L[2] = {0.0, 0.0};
    if (cfg.level_channels)
      for (int i = 0; i < 2; ++i) L[i] = level(rng);

    std::vector<double> timestamps(cfg.T);
    Matrix values(cfg.T, kSyntheticDims, 0.0), mask(cfg.T, kSyntheticDims, 1.0);
    for (std::size_t t = 0; t < cfg.T; ++t) {
      timestamps[t] = static_cast<double>(t) * cfg.time_step;
      for (int p = 0; p < 3; ++p) {
        const double shape = A[p] * std::sin(W[p] * static_cast<double>(t) + P[p]);
        values(t, 2 * p) = B[p] + shape + noise(rng);
        values(t, 2 * p + 1) = B[p] + shape + noise(rng);
      }
      for (std::size_t d = 6; d < kSyntheticDims; ++d)
        values(t, d) = cfg.level_channels
                           ? L[d - 6] + noise(rng)
                           : (unif(rng) < cfg.spike_prob
                                  ? spike_height(rng) * (unif(rng) < 0.5 ? -1.0 : 1.0)
                                  : 0.0);
    }
    for (std::size_t t = 0; t < cfg.T; ++t)
      for (std::size_t d = 0; d < kSyntheticDims; ++d)
        if (unif(rng) < cfg.missing_rates[d]) {
          mask(t, d) = 0.0;
          values(t, d) = kMissing;
        }

    TimeSeriesSample s = make_sample("synth-" + std::to_string(n), std::move(timestamps),
                                     std::move(values), std::move(mask));
    s.label = latent > cfg.label_threshold ? 1.0 : 0.0;
    s.has_label = true;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace life

#endif  // LIFE_SYNTHETIC_HPP
