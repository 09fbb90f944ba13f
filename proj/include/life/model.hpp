#ifndef LIFE_MODEL_HPP
#define LIFE_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "life/common.hpp"
#include "life/correlation.hpp"
#include "life/matrix.hpp"
#include "life/time_series.hpp"

namespace life {

/// kD x 3D gate: row i repeats correlation row i/k, tiled across the three
/// D-wide input blocks (values, intervals, mask).
struct ExpandedCorrelation {
  Matrix entries;
  std::size_t k = 0;
  std::size_t D = 0;
};

inline ExpandedCorrelation expand_correlation(const CorrelationMatrix& c, std::size_t k) {
  if (k == 0) throw InputError("expand_correlation: k must be positive");
  const std::size_t D = c.dims();
  Matrix out(k * D, 3 * D, 0.0);
  for (std::size_t i = 0; i < k * D; ++i) {
    const std::size_t di = i / k;
    for (std::size_t j = 0; j < 3 * D; ++j) out(i, j) = c.entries(di, j % D);
  }
  return {out, k, D};
}

/// How per-timestep features become one fixed-length vector for the head.
enum class Aggregation { dense, mean, attention_pool };

inline std::string aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::dense: return "dense";
    case Aggregation::mean: return "mean";
    case Aggregation::attention_pool: return "attention-pool";
  }
  return "dense";
}

inline Aggregation aggregation_from_name(const std::string& s) {
  if (s == "dense") return Aggregation::dense;
  if (s == "mean") return Aggregation::mean;
  if (s == "attention-pool") return Aggregation::attention_pool;
  throw InputError("unknown aggregation '" + s + "'");
}

/// Every learnable tensor. Kept separate from the hyper-parameters so
/// gradient buffers can reuse the same layout.
struct ParamSet {
  Matrix W;                // kD x 3D embedding weights, gated by C'
  std::vector<double> b;   // kD embedding bias
  Matrix pe;               // max_T x kD positional lookup table
  Matrix Wa;               // m x 2kD attention scorer (left | right halves)
  std::vector<double> ba;  // m
  std::vector<double> va;  // m
  std::vector<double> dw;  // D decay slope
  std::vector<double> da;  // D decay offset
  Matrix W1;               // hidden x L head hidden layer (classification only)
  std::vector<double> b1;  // hidden
  Matrix W2;               // out x hidden (classification) or 1 x L (regression)
  std::vector<double> b2;  // out
  Matrix G;                // D x k imputation weights, one affine map per dimension
  std::vector<double> gb;  // D imputation biases
  std::vector<double> q;   // kD pooling query (attention_pool only)
};

struct LifeModel {
  std::size_t D = 0;
  std::size_t k = 6;
  std::size_t F = 3;
  double alpha = 1.0;
  std::size_t max_T = 64;
  std::size_t attn_hidden = 0;  // m, defaults to kD
  std::size_t head_hidden = 0;  // defaults to kD
  Task task;
  Aggregation agg = Aggregation::dense;
  ParamSet p;

  std::size_t feature_width() const { return k * D; }
  std::size_t aggregated_length() const {
    return agg == Aggregation::dense ? F * feature_width() : feature_width();
  }
  std::size_t output_width() const {
    return task.kind == Task::Kind::classification ? task.num_classes : 1;
  }
};

/// Uniform(-s, s) with s = 1/sqrt(fan-in) for weights, zeros for biases and
/// decay parameters (gamma starts at 1: full carry-forward). Draw order is
/// fixed so a seed pins every parameter.
inline LifeModel init_model(std::size_t D, Task task, std::size_t k, std::size_t F, double alpha,
                            std::size_t max_T, std::uint64_t seed,
                            Aggregation agg = Aggregation::dense, std::size_t head_hidden = 0) {
  if (D == 0 || k == 0 || F == 0 || max_T == 0) throw InputError("init_model: zero-sized hyper-parameter");
  if (task.kind == Task::Kind::classification && task.num_classes < 2)
    throw InputError("init_model: classification needs at least two classes");
  LifeModel m;
  m.D = D;
  m.k = k;
  m.F = F;
  m.alpha = alpha;
  m.max_T = max_T;
  m.task = task;
  m.agg = agg;
  const std::size_t kD = k * D;
  m.attn_hidden = kD;
  m.head_hidden = head_hidden == 0 ? kD : head_hidden;

  std::mt19937_64 rng(seed);
  auto fill = [&rng](Matrix& w, std::size_t fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> unif(-s, s);
    for (double& x : w.data) x = unif(rng);
  };
  auto fill_vec = [&rng](std::vector<double>& w, std::size_t fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> unif(-s, s);
    for (double& x : w) x = unif(rng);
  };

  const std::size_t L = m.aggregated_length();
  m.p.W = Matrix(kD, 3 * D);
  fill(m.p.W, 3 * D);
  m.p.b.assign(kD, 0.0);
  m.p.pe = Matrix(max_T, kD);
  fill(m.p.pe, kD);
  m.p.Wa = Matrix(m.attn_hidden, 2 * kD);
  fill(m.p.Wa, 2 * kD);
  m.p.ba.assign(m.attn_hidden, 0.0);
  m.p.va.resize(m.attn_hidden);
  fill_vec(m.p.va, m.attn_hidden);
  m.p.dw.assign(D, 0.0);
  m.p.da.assign(D, 0.0);
  if (task.kind == Task::Kind::classification) {
    m.p.W1 = Matrix(m.head_hidden, L);
    fill(m.p.W1, L);
    m.p.b1.assign(m.head_hidden, 0.0);
    m.p.W2 = Matrix(task.num_classes, m.head_hidden);
    fill(m.p.W2, m.head_hidden);
    m.p.b2.assign(task.num_classes, 0.0);
  } else {
    m.p.W2 = Matrix(1, L);
    fill(m.p.W2, L);
    m.p.b2.assign(1, 0.0);
  }
  m.p.G = Matrix(D, k);
  fill(m.p.G, k);
  m.p.gb.assign(D, 0.0);
  if (agg == Aggregation::attention_pool) {
    m.p.q.resize(kD);
    fill_vec(m.p.q, kD);
  }
  return m;
}

/// Per-timestep feature vectors plus the reliability mask of the inputs they
/// were computed from.
struct FeatureSequence {
  Matrix vectors;      // T x kD
  Matrix reliability;  // T x D copy of the sample mask
};

struct Prediction {
  std::vector<double> probabilities;  // classification, sums to 1
  double value = 0.0;                 // regression
};

struct LossParts {
  double total = 0.0;
  double pred = 0.0;
  double imp = 0.0;
};

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

inline double stable_logsumexp(const std::vector<double>& x) {
  double hi = x.front();
  for (double v : x) hi = std::max(hi, v);
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

}  // namespace detail

/// Every intermediate the backward pass needs, captured by the single
/// forward implementation. Public stage functions below are projections of
/// this trace so tests and training share one code path.
struct ForwardTrace {
  std::size_t T = 0;
  Matrix input;                       // T x 3D, missing values zeroed
  Matrix z;                           // T x kD embedding preactivation
  Matrix sig;                         // sigmoid(z)
  Matrix e;                           // sig + positional rows
  Matrix attL, attR;                  // T x m scorer halves
  std::vector<double> tanhu;          // T*T*m, tanh(L_s + R_t + ba)
  Matrix score;                       // T x T, row s, column t
  Matrix attn;                        // T x T, column t is softmax over s
  Matrix h;                           // T x kD attended features
  Matrix gamma;                       // T x D decay factors (1 where unused)
  std::vector<std::ptrdiff_t> tprime; // T*D last-observed index, <0 = pass-through
  Matrix htilde;                      // T x kD repaired features
  std::vector<double> v;              // aggregated vector, length L
  std::vector<double> pool_w;         // attention-pool weights over t
  std::vector<double> hid_pre, hid;   // classification head hidden layer
  std::vector<double> logits;
  Prediction pred;
  Matrix xhat;                        // T x D imputations
  LossParts loss;

  double& tanh_at(std::size_t s, std::size_t t, std::size_t r, std::size_t m_width) {
    return tanhu[(s * score.cols + t) * m_width + r];
  }
  double tanh_at(std::size_t s, std::size_t t, std::size_t r, std::size_t m_width) const {
    return tanhu[(s * score.cols + t) * m_width + r];
  }
};

namespace detail {

inline void trace_embed(const LifeModel& model, const ExpandedCorrelation& cexp,
                        const TimeSeriesSample& sample, ForwardTrace& tr) {
  const std::size_t T = sample.length(), D = model.D, kD = model.feature_width();
  if (sample.dims() != D) throw InputError("embed: sample dimension mismatch");
  if (T > model.max_T)
    throw InputError("embed: series length " + std::to_string(T) + " exceeds max_T " +
                     std::to_string(model.max_T));
  if (cexp.entries.rows != kD || cexp.entries.cols != 3 * D)
    throw InputError("embed: expanded correlation shape mismatch");
  tr.T = T;
  tr.input = Matrix(T, 3 * D, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) {
      tr.input(t, d) = sample.mask(t, d) == 1.0 ? sample.values(t, d) : 0.0;
      tr.input(t, D + d) = sample.intervals(t, d);
      tr.input(t, 2 * D + d) = sample.mask(t, d);
    }
  tr.z = Matrix(T, kD, 0.0);
  tr.sig = Matrix(T, kD, 0.0);
  tr.e = Matrix(T, kD, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < kD; ++i) {
      double acc = model.p.b[i];
      for (std::size_t j = 0; j < 3 * D; ++j) {
        const double gate = cexp.entries(i, j);
        if (gate == 0.0) continue;  // skipped, not multiplied: exact gating
        acc += model.p.W(i, j) * gate * tr.input(t, j);
      }
      tr.z(t, i) = acc;
      tr.sig(t, i) = sigmoid(acc);
      tr.e(t, i) = tr.sig(t, i) + model.p.pe(t, i);
    }
}

inline void trace_attention(const LifeModel& model, const Matrix& e, ForwardTrace& tr) {
  const std::size_t T = e.rows, kD = e.cols, m = model.attn_hidden;
  tr.attL = Matrix(T, m, 0.0);
  tr.attR = Matrix(T, m, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t r = 0; r < m; ++r) {
      double accL = 0.0, accR = 0.0;
      for (std::size_t c = 0; c < kD; ++c) {
        accL += model.p.Wa(r, c) * e(t, c);
        accR += model.p.Wa(r, kD + c) * e(t, c);
      }
      tr.attL(t, r) = accL;
      tr.attR(t, r) = accR;
    }
  tr.score = Matrix(T, T, 0.0);
  tr.tanhu.assign(T * T * m, 0.0);
  for (std::size_t s = 0; s < T; ++s)
    for (std::size_t t = 0; t < T; ++t) {
      double sc = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        const double th = std::tanh(tr.attL(s, r) + tr.attR(t, r) + model.p.ba[r]);
        tr.tanh_at(s, t, r, m) = th;
        sc += model.p.va[r] * th;
      }
      tr.score(s, t) = sc;
    }
  tr.attn = Matrix(T, T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double hi = tr.score(0, t);
    for (std::size_t s = 1; s < T; ++s) hi = std::max(hi, tr.score(s, t));
    double total = 0.0;
    for (std::size_t s = 0; s < T; ++s) {
      tr.attn(s, t) = std::exp(tr.score(s, t) - hi);
      total += tr.attn(s, t);
    }
    for (std::size_t s = 0; s < T; ++s) tr.attn(s, t) /= total;
  }
  tr.h = Matrix(T, kD, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < T; ++s) {
      const double a = tr.attn(s, t);
      for (std::size_t c = 0; c < kD; ++c) tr.h(t, c) += a * e(s, c);
    }
}

inline void trace_decay(const LifeModel& model, const TimeSeriesSample& sample,
                        const Matrix& h, ForwardTrace& tr) {
  const std::size_t T = h.rows, D = model.D, k = model.k;
  tr.gamma = Matrix(T, D, 1.0);
  tr.tprime.assign(T * D, -1);
  tr.htilde = h;
  std::vector<std::ptrdiff_t> last(D, -1);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t d = 0; d < D; ++d) {
      if (sample.mask(t, d) == 1.0) continue;  // observed features pass through
      const std::ptrdiff_t tp = last[d];
      if (tp < 0) continue;  // no prior observation: nothing reliable to carry
      const double u = model.p.dw[d] * sample.intervals(t, d) + model.p.da[d];
      const double g = std::exp(-std::max(0.0, u));
      tr.gamma(t, d) = g;
      tr.tprime[t * D + d] = tp;
      for (std::size_t c = d * k; c < (d + 1) * k; ++c)
        tr.htilde(t, c) = g * h(static_cast<std::size_t>(tp), c) + (1.0 - g) * h(t, c);
    }
    for (std::size_t d = 0; d < D; ++d)
      if (sample.mask(t, d) == 1.0) last[d] = static_cast<std::ptrdiff_t>(t);
  }
}

inline void trace_aggregate(const LifeModel& model, const Matrix& htilde, ForwardTrace& tr) {
  const std::size_t T = htilde.rows, kD = htilde.cols;
  const std::size_t L = model.aggregated_length();
  tr.v.assign(L, 0.0);
  switch (model.agg) {
    case Aggregation::dense: {
      const double Tf = static_cast<double>(T), Ff = static_cast<double>(model.F);
      for (std::size_t t = 1; t <= T; ++t) {
        const double pos = Ff * static_cast<double>(t) / Tf;
        for (std::size_t f = 1; f <= model.F; ++f) {
          const double w0 = 1.0 - std::abs(pos - static_cast<double>(f)) / Ff;
          const double w = w0 * w0;
          for (std::size_t c = 0; c < kD; ++c) tr.v[(f - 1) * kD + c] += w * htilde(t - 1, c);
        }
      }
      break;
    }
    case Aggregation::mean: {
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < kD; ++c) tr.v[c] += htilde(t, c) / static_cast<double>(T);
      break;
    }
    case Aggregation::attention_pool: {
      std::vector<double> scores(T, 0.0);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < kD; ++c) scores[t] += model.p.q[c] * htilde(t, c);
      double hi = scores.front();
      for (double s : scores) hi = std::max(hi, s);
      double total = 0.0;
      tr.pool_w.assign(T, 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        tr.pool_w[t] = std::exp(scores[t] - hi);
        total += tr.pool_w[t];
      }
      for (std::size_t t = 0; t < T; ++t) {
        tr.pool_w[t] /= total;
        for (std::size_t c = 0; c < kD; ++c) tr.v[c] += tr.pool_w[t] * htilde(t, c);
      }
      break;
    }
  }
}

inline void trace_head(const LifeModel& model, const std::vector<double>& v, ForwardTrace& tr) {
  if (model.task.kind == Task::Kind::classification) {
    const std::size_t H = model.head_hidden, C = model.task.num_classes;
    tr.hid_pre.assign(H, 0.0);
    tr.hid.assign(H, 0.0);
    for (std::size_t r = 0; r < H; ++r) {
      double acc = model.p.b1[r];
      for (std::size_t c = 0; c < v.size(); ++c) acc += model.p.W1(r, c) * v[c];
      tr.hid_pre[r] = acc;
      tr.hid[r] = std::tanh(acc);
    }
    tr.logits.assign(C, 0.0);
    for (std::size_t r = 0; r < C; ++r) {
      double acc = model.p.b2[r];
      for (std::size_t c = 0; c < H; ++c) acc += model.p.W2(r, c) * tr.hid[c];
      tr.logits[r] = acc;
    }
    const double lse = stable_logsumexp(tr.logits);
    tr.pred.probabilities.assign(C, 0.0);
    for (std::size_t r = 0; r < C; ++r) tr.pred.probabilities[r] = std::exp(tr.logits[r] - lse);
  } else {
    double acc = model.p.b2[0];
    for (std::size_t c = 0; c < v.size(); ++c) acc += model.p.W2(0, c) * v[c];
    tr.pred.value = acc;
  }
}

inline void trace_impute(const LifeModel& model, const Matrix& htilde, ForwardTrace& tr) {
  const std::size_t T = htilde.rows, D = model.D, k = model.k;
  tr.xhat = Matrix(T, D, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) {
      double acc = model.p.gb[d];
      for (std::size_t c = 0; c < k; ++c) acc += model.p.G(d, c) * htilde(t, d * k + c);
      tr.xhat(t, d) = acc;
    }
}

inline LossParts trace_loss(const LifeModel& model, const TimeSeriesSample& sample,
                            ForwardTrace& tr) {
  LossParts parts;
  if (model.task.kind == Task::Kind::classification) {
    const auto y = static_cast<std::size_t>(sample.label);
    if (y >= model.task.num_classes) throw InputError("loss: label out of class range");
    parts.pred = stable_logsumexp(tr.logits) - tr.logits[y];
  } else {
    const double diff = tr.pred.value - sample.label;
    parts.pred = diff * diff;
  }
  double num = 0.0, denom = 0.0;
  for (std::size_t t = 0; t < tr.xhat.rows; ++t)
    for (std::size_t d = 0; d < tr.xhat.cols; ++d)
      if (sample.mask(t, d) == 1.0) {
        const double diff = sample.values(t, d) - tr.xhat(t, d);
        num += diff * diff;
        denom += 1.0;
      }
  parts.imp = denom > 0.0 ? num / denom : 0.0;
  parts.total = parts.pred + model.alpha * parts.imp;
  if (!std::isfinite(parts.total)) throw NumericalError("loss: non-finite value");
  tr.loss = parts;
  return parts;
}

}  // namespace detail

/// Full forward pass: embed, attend, repair, aggregate, predict, impute, loss.
/// The label is only consulted for the loss; pass has_label samples when the
/// loss matters.
inline ForwardTrace forward(const LifeModel& model, const ExpandedCorrelation& cexp,
                            const TimeSeriesSample& sample) {
  ForwardTrace tr;
  detail::trace_embed(model, cexp, sample, tr);
  detail::trace_attention(model, tr.e, tr);
  detail::trace_decay(model, sample, tr.h, tr);
  detail::trace_aggregate(model, tr.htilde, tr);
  detail::trace_head(model, tr.v, tr);
  detail::trace_impute(model, tr.htilde, tr);
  detail::trace_loss(model, sample, tr);
  return tr;
}

/// e_t = sigmoid((W gated by C') I_t + b) + pe(t), I_t = (X_t, delta_t, M_t)
/// with missing values as zero.
inline FeatureSequence embed(const TimeSeriesSample& sample, const LifeModel& model,
                             const ExpandedCorrelation& cexp) {
  ForwardTrace tr;
  detail::trace_embed(model, cexp, sample, tr);
  return {tr.e, sample.mask};
}

/// h_t = sum_s softmax_s(va . tanh(Wa [e_s; e_t] + ba)) e_s.
inline FeatureSequence self_attention(const FeatureSequence& E, const LifeModel& model) {
  ForwardTrace tr;
  detail::trace_attention(model, E.vectors, tr);
  return {tr.h, E.reliability};
}

/// Missing positions pull toward the feature at the last observation:
/// htilde = gamma h_(t') + (1 - gamma) h_t, gamma = exp(-max(0, w delta + a)).
inline FeatureSequence decay_repair(const FeatureSequence& H, const TimeSeriesSample& sample,
                                    const LifeModel& model) {
  ForwardTrace tr;
  detail::trace_decay(model, sample, H.vectors, tr);
  return {tr.htilde, sample.mask};
}

/// V_f = sum_t (1 - |F t / T - f| / F)^2 htilde_t, flattened f-major.
inline std::vector<double> dense_interpolate(const FeatureSequence& H, std::size_t F) {
  if (F == 0) throw InputError("dense_interpolate: F must be positive");
  LifeModel stub;
  stub.F = F;
  stub.agg = Aggregation::dense;
  stub.D = 1;
  stub.k = H.vectors.cols;  // only F, agg and the feature width matter here
  ForwardTrace tr;
  detail::trace_aggregate(stub, H.vectors, tr);
  return tr.v;
}

inline Prediction predict(const std::vector<double>& v, const LifeModel& model) {
  if (v.size() != model.aggregated_length())
    throw InputError("predict: aggregated vector has wrong length");
  ForwardTrace tr;
  detail::trace_head(model, v, tr);
  return tr.pred;
}

/// One affine map per dimension applied to that dimension's feature block.
inline Matrix impute(const FeatureSequence& H, const LifeModel& model) {
  ForwardTrace tr;
  detail::trace_impute(model, H.vectors, tr);
  return tr.xhat;
}

/// L = L_pred + alpha * L_imp. L_pred is cross-entropy or squared error;
/// L_imp is the observed-cell mean squared imputation error (0 when nothing
/// is observed).
inline LossParts joint_loss(const Prediction& pred, double label, const Matrix& xhat,
                            const TimeSeriesSample& sample, double alpha, const Task& task) {
  if (alpha < 0.0) throw InputError("loss: alpha must be non-negative");
  LossParts parts;
  if (task.kind == Task::Kind::classification) {
    const auto y = static_cast<std::size_t>(label);
    if (y >= pred.probabilities.size()) throw InputError("loss: label out of class range");
    std::vector<double> logp(pred.probabilities.size());
    for (std::size_t i = 0; i < logp.size(); ++i)
      logp[i] = std::log(std::max(pred.probabilities[i], 1e-300));
    parts.pred = -logp[y];
  } else {
    const double diff = pred.value - label;
    parts.pred = diff * diff;
  }
  double num = 0.0, denom = 0.0;
  for (std::size_t t = 0; t < xhat.rows; ++t)
    for (std::size_t d = 0; d < xhat.cols; ++d)
      if (sample.mask(t, d) == 1.0) {
        const double diff = sample.values(t, d) - xhat(t, d);
        num += diff * diff;
        denom += 1.0;
      }
  parts.imp = denom > 0.0 ? num / denom : 0.0;
  parts.total = parts.pred + alpha * parts.imp;
  return parts;
}

}  // namespace life

#endif  // LIFE_MODEL_HPP
