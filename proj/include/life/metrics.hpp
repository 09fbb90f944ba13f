#ifndef LIFE_METRICS_HPP
#define LIFE_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "life/common.hpp"
#include "life/time_series.hpp"

namespace life {

/// Argmax accuracy; ties resolve to the lowest class index.
inline double accuracy(const std::vector<std::vector<double>>& probs,
                       const std::vector<double>& labels) {
  if (probs.size() != labels.size() || probs.empty())
    throw InputError("accuracy: size mismatch or empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto it = std::max_element(probs[i].begin(), probs[i].end());
    if (static_cast<double>(it - probs[i].begin()) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.size());
}

/// Mann-Whitney AUC from average ranks; tied scores get half credit.
/// Scores are the positive-class probabilities; labels are 0/1.
inline double auc_score(const std::vector<double>& scores, const std::vector<double>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw InputError("auc: size mismatch or empty input");
  std::size_t pos = 0, neg = 0;
  for (double y : labels) {
    if (y == 1.0)
      ++pos;
    else if (y == 0.0)
      ++neg;
    else
      throw InputError("auc: labels must be 0 or 1");
  }
  if (pos == 0 || neg == 0) throw InputError("auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t)
      if (labels[order[t]] == 1.0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);
}

inline double mean_absolute_error(const std::vector<double>& predictions,
                                  const std::vector<double>& labels) {
  if (predictions.size() != labels.size() || predictions.empty())
    throw InputError("mae: size mismatch or empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    acc += std::abs(predictions[i] - labels[i]);
  return acc / static_cast<double>(predictions.size());
}

/// Stratified k-fold: per class, indices are shuffled and dealt round-robin,
/// so fold class counts differ by at most one. Regression stratifies on
/// nothing (single stratum). Returns test-index sets; train = complement.
inline std::vector<std::vector<std::size_t>> kfold_split(const Dataset& ds, std::size_t folds,
                                                         std::uint64_t seed) {
  if (folds < 2) throw InputError("kfold: need at least two folds");
  if (folds > ds.size()) throw InputError("kfold: more folds than samples");
  std::map<long long, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.samples[i].has_label) throw InputError("kfold: unlabeled sample");
    const long long key = ds.task.kind == Task::Kind::classification
                              ? static_cast<long long>(ds.samples[i].label)
                              : 0LL;
    strata[key].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> test_sets(folds);
  std::size_t next_fold = 0;  // continue dealing across strata for balance
  for (auto& [key, idx] : strata) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) {
      test_sets[next_fold].push_back(i);
      next_fold = (next_fold + 1) % folds;
    }
  }
  for (auto& fold : test_sets) std::sort(fold.begin(), fold.end());
  return test_sets;
}

}  // namespace life

#endif  // LIFE_METRICS_HPP
