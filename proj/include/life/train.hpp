#ifndef LIFE_TRAIN_HPP
#define LIFE_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "life/cme.hpp"
#include "life/common.hpp"
#include "life/correlation.hpp"
#include "life/gradients.hpp"
#include "life/matrix.hpp"
#include "life/metrics.hpp"
#include "life/model.hpp"
#include "life/optimizer.hpp"
#include "life/time_series.hpp"

namespace life {

enum class CorrelationSource { pdtw, pot, pearson, ones, rand, diag, file };

inline std::string correlation_source_name(CorrelationSource s) {
  switch (s) {
    case CorrelationSource::pdtw: return "pdtw";
    case CorrelationSource::pot: return "pot";
    case CorrelationSource::pearson: return "pearson";
    case CorrelationSource::ones: return "ones";
    case CorrelationSource::rand: return "rand";
    case CorrelationSource::diag: return "diag";
    case CorrelationSource::file: return "file";
  }
  return "pdtw";
}

inline CorrelationSource correlation_source_from_name(const std::string& s) {
  if (s == "pdtw") return CorrelationSource::pdtw;
  if (s == "pot") return CorrelationSource::pot;
  if (s == "pearson") return CorrelationSource::pearson;
  if (s == "ones") return CorrelationSource::ones;
  if (s == "rand") return CorrelationSource::rand;
  if (s == "diag") return CorrelationSource::diag;
  if (s == "file") return CorrelationSource::file;
  throw InputError("unknown correlation source '" + s + "'");
}

struct TrainConfig {
  std::size_t k = 6;
  std::size_t F = 3;
  double alpha = 1.0;
  double learning_rate = 0.001;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  CorrelationSource source = CorrelationSource::pdtw;
  std::string correlation_file;  // source == file
  double p = 0.5;
  double beta = 1.0;
  double epsilon = 0.01;  // transport regularization
  Task task;
  std::size_t max_T = 0;  // 0: use the longest series in the data
  Aggregation agg = Aggregation::dense;
  std::size_t head_hidden = 0;      // 0: feature width
  double lr_decay = 1.0;            // per-epoch multiplier, 1 = constant
  std::size_t early_stop_patience = 0;  // 0 = off; epochs without train-loss improvement
};

inline void validate_train_config(const TrainConfig& c) {
  if (c.k == 0 || c.F == 0) throw InputError("config: k and F must be positive");
  if (c.alpha < 0.0 || c.p < 0.0 || c.beta < 0.0) throw InputError("config: negative weight");
  if (c.learning_rate <= 0.0) throw InputError("config: learning rate must be positive");
  if (c.batch_size == 0) throw InputError("config: batch size must be positive");
  if (c.epochs == 0) throw InputError("config: epochs must be positive");
  if (c.epsilon <= 0.0) throw InputError("config: epsilon must be positive");
  if (c.lr_decay <= 0.0 || c.lr_decay > 1.0) throw InputError("config: lr decay must be in (0,1]");
  if (c.source == CorrelationSource::file && c.correlation_file.empty())
    throw InputError("config: correlation source 'file' needs a path");
}

/// Builds the correlation matrix the config asks for, from (training) data
/// that has already been normalized.
inline CorrelationMatrix make_correlation(const Dataset& ds, const TrainConfig& config,
                                          CmeDiagnostics* diag = nullptr) {
  switch (config.source) {
    case CorrelationSource::pdtw: {
      DistanceSpec spec;
      spec.kind = DistanceSpec::Kind::pdtw;
      spec.p = config.p;
      return cme_pipeline(ds, spec, diag);
    }
    case CorrelationSource::pot: {
      SinkhornConfig sc;
      sc.epsilon = config.epsilon;
      return cme_pot(ds, config.beta, config.p, sc, diag);
    }
    case CorrelationSource::pearson: return pearson_cme(ds, diag);
    case CorrelationSource::ones: return ones_correlation(ds.dims());
    case CorrelationSource::rand: return rand_correlation(ds.dims(), config.seed);
    case CorrelationSource::diag: return diag_correlation(ds.dims());
    case CorrelationSource::file: return read_correlation_csv(config.correlation_file);
  }
  throw InputError("config: unknown correlation source");
}

struct LogRow {
  std::size_t epoch = 0;
  std::string split;  // "train" or "test"
  double loss = 0.0;
  double pred = 0.0;
  double imp = 0.0;
  double metric = 0.0;  // accuracy (classification) or MAE (regression)
};

inline std::string training_log_csv(const std::vector<LogRow>& rows) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "epoch,split,loss,L_pred,L_imp,metric\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << r.split << ',' << r.loss << ',' << r.pred << ',' << r.imp << ','
        << r.metric << '\n';
  return out.str();
}

inline void write_training_log(const std::string& path, const std::vector<LogRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << training_log_csv(rows);
}

struct TrainResult {
  LifeModel model;
  CorrelationMatrix correlation;
  NormStats norm;
  std::vector<LogRow> log;
};

struct EvalReport {
  double loss = 0.0;
  double pred = 0.0;
  double imp = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  double mae = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;

  double primary_metric(const Task& task) const {
    return task.kind == Task::Kind::classification ? accuracy : mae;
  }
};

inline void validate_labels(const Dataset& ds, const Task& task) {
  for (const auto& s : ds.samples) {
    if (!s.has_label) throw InputError("sample '" + s.id + "': missing label");
    if (task.kind == Task::Kind::classification) {
      if (s.label != std::floor(s.label) || s.label < 0.0 ||
          s.label >= static_cast<double>(task.num_classes))
        throw InputError("sample '" + s.id + "': label outside class range");
    }
  }
}

/// Metrics on a dataset that is already normalized with the training
/// statistics. AUC is computed for binary tasks and requires both classes in
/// the eval set.
inline EvalReport evaluate(const LifeModel& model, const ExpandedCorrelation& cexp,
                           const Dataset& ds) {
  validate_dataset(ds);
  validate_labels(ds, model.task);
  EvalReport rep;
  rep.count = ds.size();
  std::vector<std::vector<double>> probs;
  std::vector<double> values, labels;
  for (const auto& s : ds.samples) {
    const ForwardTrace tr = forward(model, cexp, s);
    rep.loss += tr.loss.total;
    rep.pred += tr.loss.pred;
    rep.imp += tr.loss.imp;
    if (model.task.kind == Task::Kind::classification)
      probs.push_back(tr.pred.probabilities);
    else
      values.push_back(tr.pred.value);
    labels.push_back(s.label);
  }
  const double n = static_cast<double>(ds.size());
  rep.loss /= n;
  rep.pred /= n;
  rep.imp /= n;
  if (model.task.kind == Task::Kind::classification) {
    rep.accuracy = accuracy(probs, labels);
    if (model.task.num_classes == 2) {
      std::vector<double> pos_scores(probs.size());
      for (std::size_t i = 0; i < probs.size(); ++i) pos_scores[i] = probs[i][1];
      rep.auc = auc_score(pos_scores, labels);
    }
  } else {
    rep.mae = mean_absolute_error(values, labels);
  }
  return rep;
}

/// Normalizes, extracts the configured correlation matrix from the training
/// data, then runs seeded mini-batch epochs. Per-epoch rows log the mean
/// sample loss and the metric of the in-epoch predictions. Deterministic for
/// a fixed seed.
inline TrainResult train(const Dataset& raw, const TrainConfig& config) {
  validate_train_config(config);
  validate_dataset(raw);
  validate_labels(raw, config.task);

  Dataset ds = raw;
  ds.task = config.task;
  const NormStats stats = compute_norm_stats(ds);
  ds = apply_normalization(std::move(ds), stats);

  const CorrelationMatrix corr = make_correlation(ds, config);

  std::size_t max_T = config.max_T;
  for (const auto& s : ds.samples) max_T = std::max(max_T, s.length());

  LifeModel model = init_model(ds.dims(), config.task, config.k, config.F, config.alpha, max_T,
                               config.seed, config.agg, config.head_hidden);
  const ExpandedCorrelation cexp = expand_correlation(corr, config.k);

  GradientTape tape = make_tape(model);
  OptimizerState opt = make_optimizer(model);
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;

  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.correlation = corr;
  result.norm = stats;

  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0, epoch_pred = 0.0, epoch_imp = 0.0;
    std::vector<std::vector<double>> probs;
    std::vector<double> values, labels;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      zero_tape(tape);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t idx = start; idx < stop; ++idx) {
        const TimeSeriesSample& s = ds.samples[order[idx]];
        ForwardTrace tr;
        try {
          tr = forward(model, cexp, s);
        } catch (const NumericalError& e) {
          throw NumericalError(std::string(e.what()) + " (sample '" + s.id + "')");
        }
        backward(model, cexp, s, tr, tape, scale);
        epoch_loss += tr.loss.total;
        epoch_pred += tr.loss.pred;
        epoch_imp += tr.loss.imp;
        if (config.task.kind == Task::Kind::classification)
          probs.push_back(std::move(tr.pred.probabilities));
        else
          values.push_back(tr.pred.value);
        labels.push_back(s.label);
      }
      adam_step(model, tape, opt, adam);
    }

    const double n = static_cast<double>(ds.size());
    LogRow row;
    row.epoch = epoch;
    row.split = "train";
    row.loss = epoch_loss / n;
    row.pred = epoch_pred / n;
    row.imp = epoch_imp / n;
    row.metric = config.task.kind == Task::Kind::classification
                     ? accuracy(probs, labels)
                     : mean_absolute_error(values, labels);
    result.log.push_back(row);

    adam.learning_rate *= config.lr_decay;
    if (config.early_stop_patience > 0) {
      if (row.loss < best_loss - 1e-12) {
        best_loss = row.loss;
        stale_epochs = 0;
      } else if (++stale_epochs >= config.early_stop_patience) {
        break;
      }
    }
  }

  result.model = std::move(model);
  return result;
}

struct FoldResult {
  EvalReport test;
  double final_train_loss = 0.0;
};

struct CrossValResult {
  std::vector<FoldResult> folds;
  double mean_metric = 0.0;  // accuracy or MAE depending on task
  double stddev_metric = 0.0;
  double mean_auc = std::numeric_limits<double>::quiet_NaN();
};

/// Per fold: normalization and correlation come from that fold's training
/// subset only; the held-out fold is normalized with the training statistics.
inline CrossValResult cross_validate(const Dataset& raw, const TrainConfig& config) {
  if (config.folds < 2) throw InputError("cross_validate: need at least two folds");
  Dataset tagged = raw;
  tagged.task = config.task;
  const auto test_sets = kfold_split(tagged, config.folds, config.seed);

  CrossValResult cv;
  std::vector<double> metrics, aucs;
  for (const auto& test_idx : test_sets) {
    std::vector<char> in_test(raw.size(), 0);
    for (std::size_t i : test_idx) in_test[i] = 1;
    Dataset train_ds, test_ds;
    train_ds.task = test_ds.task = config.task;
    for (std::size_t i = 0; i < raw.size(); ++i)
      (in_test[i] ? test_ds : train_ds).samples.push_back(raw.samples[i]);

    TrainResult tr = train(train_ds, config);
    const ExpandedCorrelation cexp = expand_correlation(tr.correlation, config.k);
    const Dataset test_norm = apply_normalization(std::move(test_ds), tr.norm);

    FoldResult fr;
    fr.test = evaluate(tr.model, cexp, test_norm);
    fr.final_train_loss = tr.log.empty() ? 0.0 : tr.log.back().loss;
    metrics.push_back(fr.test.primary_metric(config.task));
    if (!std::isnan(fr.test.auc)) aucs.push_back(fr.test.auc);
    cv.folds.push_back(std::move(fr));
  }

  const double n = static_cast<double>(metrics.size());
  for (double m : metrics) cv.mean_metric += m;
  cv.mean_metric /= n;
  double var = 0.0;
  for (double m : metrics) var += (m - cv.mean_metric) * (m - cv.mean_metric);
  cv.stddev_metric = std::sqrt(var / n);
  if (!aucs.empty()) {
    cv.mean_auc = 0.0;
    for (double a : aucs) cv.mean_auc += a;
    cv.mean_auc /= static_cast<double>(aucs.size());
  }
  return cv;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols) throw InputError("checkpoint: matrix size mismatch");
  return m;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const LifeModel& model, const CorrelationMatrix& corr,
                                         const NormStats& norm) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["hyper"] = {{"D", model.D},
                {"k", model.k},
                {"F", model.F},
                {"alpha", model.alpha},
                {"max_T", model.max_T},
                {"attn_hidden", model.attn_hidden},
                {"head_hidden", model.head_hidden},
                {"aggregation", aggregation_name(model.agg)},
                {"task", model.task.kind == Task::Kind::classification ? "classification"
                                                                       : "regression"},
                {"num_classes", model.task.num_classes}};
  j["params"] = {{"W", detail::matrix_to_json(model.p.W)},
                 {"b", model.p.b},
                 {"pe", detail::matrix_to_json(model.p.pe)},
                 {"Wa", detail::matrix_to_json(model.p.Wa)},
                 {"ba", model.p.ba},
                 {"va", model.p.va},
                 {"dw", model.p.dw},
                 {"da", model.p.da},
                 {"W1", detail::matrix_to_json(model.p.W1)},
                 {"b1", model.p.b1},
                 {"W2", detail::matrix_to_json(model.p.W2)},
                 {"b2", model.p.b2},
                 {"G", detail::matrix_to_json(model.p.G)},
                 {"gb", model.p.gb},
                 {"q", model.p.q}};
  j["correlation"] = detail::matrix_to_json(corr.entries);
  j["normalization"] = {{"mean", norm.mean}, {"stddev", norm.stddev}};
  return j;
}

struct Checkpoint {
  LifeModel model;
  CorrelationMatrix correlation;
  NormStats norm;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.contains("format_version")) throw InputError("checkpoint: missing format_version");
  if (j.at("format_version").get<int>() != 1)
    throw InputError("checkpoint: unsupported format version");
  Checkpoint ck;
  const auto& h = j.at("hyper");
  ck.model.D = h.at("D").get<std::size_t>();
  ck.model.k = h.at("k").get<std::size_t>();
  ck.model.F = h.at("F").get<std::size_t>();
  ck.model.alpha = h.at("alpha").get<double>();
  ck.model.max_T = h.at("max_T").get<std::size_t>();
  ck.model.attn_hidden = h.at("attn_hidden").get<std::size_t>();
  ck.model.head_hidden = h.at("head_hidden").get<std::size_t>();
  ck.model.agg = aggregation_from_name(h.at("aggregation").get<std::string>());
  ck.model.task.kind = h.at("task").get<std::string>() == "classification"
                           ? Task::Kind::classification
                           : Task::Kind::regression;
  ck.model.task.num_classes = h.at("num_classes").get<std::size_t>();
  const auto& p = j.at("params");
  ck.model.p.W = detail::matrix_from_json(p.at("W"));
  ck.model.p.b = p.at("b").get<std::vector<double>>();
  ck.model.p.pe = detail::matrix_from_json(p.at("pe"));
  ck.model.p.Wa = detail::matrix_from_json(p.at("Wa"));
  ck.model.p.ba = p.at("ba").get<std::vector<double>>();
  ck.model.p.va = p.at("va").get<std::vector<double>>();
  ck.model.p.dw = p.at("dw").get<std::vector<double>>();
  ck.model.p.da = p.at("da").get<std::vector<double>>();
  ck.model.p.W1 = detail::matrix_from_json(p.at("W1"));
  ck.model.p.b1 = p.at("b1").get<std::vector<double>>();
  ck.model.p.W2 = detail::matrix_from_json(p.at("W2"));
  ck.model.p.b2 = p.at("b2").get<std::vector<double>>();
  ck.model.p.G = detail::matrix_from_json(p.at("G"));
  ck.model.p.gb = p.at("gb").get<std::vector<double>>();
  ck.model.p.q = p.at("q").get<std::vector<double>>();
  ck.correlation.entries = detail::matrix_from_json(j.at("correlation"));
  validate_correlation(ck.correlation, 1e-9);
  ck.norm.mean = j.at("normalization").at("mean").get<std::vector<double>>();
  ck.norm.stddev = j.at("normalization").at("stddev").get<std::vector<double>>();
  return ck;
}

inline void write_checkpoint(const std::string& path, const LifeModel& model,
                             const CorrelationMatrix& corr, const NormStats& norm) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << checkpoint_to_json(model, corr, norm).dump(2) << '\n';
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint parse error: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace life

#endif  // LIFE_TRAIN_HPP
