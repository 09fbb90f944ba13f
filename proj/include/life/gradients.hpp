#ifndef LIFE_GRADIENTS_HPP
#define LIFE_GRADIENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "life/common.hpp"
#include "life/matrix.hpp"
#include "life/model.hpp"
#include "life/time_series.hpp"

namespace life {

/// Gradient buffers in the exact layout of the model parameters.
/// Zeroed between batches; backward() accumulates.
struct GradientTape {
  ParamSet g;
};

inline ParamSet zeros_like(const ParamSet& p) {
  ParamSet z;
  z.W = Matrix(p.W.rows, p.W.cols, 0.0);
  z.b.assign(p.b.size(), 0.0);
  z.pe = Matrix(p.pe.rows, p.pe.cols, 0.0);
  z.Wa = Matrix(p.Wa.rows, p.Wa.cols, 0.0);
  z.ba.assign(p.ba.size(), 0.0);
  z.va.assign(p.va.size(), 0.0);
  z.dw.assign(p.dw.size(), 0.0);
  z.da.assign(p.da.size(), 0.0);
  z.W1 = Matrix(p.W1.rows, p.W1.cols, 0.0);
  z.b1.assign(p.b1.size(), 0.0);
  z.W2 = Matrix(p.W2.rows, p.W2.cols, 0.0);
  z.b2.assign(p.b2.size(), 0.0);
  z.G = Matrix(p.G.rows, p.G.cols, 0.0);
  z.gb.assign(p.gb.size(), 0.0);
  z.q.assign(p.q.size(), 0.0);
  return z;
}

inline GradientTape make_tape(const LifeModel& model) { return {zeros_like(model.p)}; }

inline void zero_tape(GradientTape& tape) {
  for (double& x : tape.g.W.data) x = 0.0;
  for (double& x : tape.g.b) x = 0.0;
  for (double& x : tape.g.pe.data) x = 0.0;
  for (double& x : tape.g.Wa.data) x = 0.0;
  for (double& x : tape.g.ba) x = 0.0;
  for (double& x : tape.g.va) x = 0.0;
  for (double& x : tape.g.dw) x = 0.0;
  for (double& x : tape.g.da) x = 0.0;
  for (double& x : tape.g.W1.data) x = 0.0;
  for (double& x : tape.g.b1) x = 0.0;
  for (double& x : tape.g.W2.data) x = 0.0;
  for (double& x : tape.g.b2) x = 0.0;
  for (double& x : tape.g.G.data) x = 0.0;
  for (double& x : tape.g.gb) x = 0.0;
  for (double& x : tape.g.q) x = 0.0;
}

/// Named view over one parameter group's scalars.
struct ParamView {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

/// Groups actually in use for this model configuration, in a fixed order.
/// Pass the model's own ParamSet or any layout-identical buffer (gradient
/// tape, optimizer moments) to walk them in parallel.
inline std::vector<ParamView> param_views(const LifeModel& model, ParamSet& ps) {
  std::vector<ParamView> views;
  views.push_back({"embed.W", ps.W.data.data(), ps.W.size()});
  views.push_back({"embed.b", ps.b.data(), ps.b.size()});
  views.push_back({"embed.pe", ps.pe.data.data(), ps.pe.size()});
  views.push_back({"attn.Wa", ps.Wa.data.data(), ps.Wa.size()});
  views.push_back({"attn.ba", ps.ba.data(), ps.ba.size()});
  views.push_back({"attn.va", ps.va.data(), ps.va.size()});
  views.push_back({"decay.w", ps.dw.data(), ps.dw.size()});
  views.push_back({"decay.a", ps.da.data(), ps.da.size()});
  if (model.task.kind == Task::Kind::classification) {
    views.push_back({"head.W1", ps.W1.data.data(), ps.W1.size()});
    views.push_back({"head.b1", ps.b1.data(), ps.b1.size()});
  }
  views.push_back({"head.W2", ps.W2.data.data(), ps.W2.size()});
  views.push_back({"head.b2", ps.b2.data(), ps.b2.size()});
  views.push_back({"impute.G", ps.G.data.data(), ps.G.size()});
  views.push_back({"impute.gb", ps.gb.data(), ps.gb.size()});
  if (model.agg == Aggregation::attention_pool)
    views.push_back({"pool.q", ps.q.data(), ps.q.size()});
  return views;
}

/// Reverse-mode pass over one sample's forward trace. Accumulates
/// d(loss_scale * L_sample) into the tape; call with loss_scale = 1/B for the
/// mean batch loss. The max(0,.) in gamma uses subgradient 0 at the kink, and
/// gradients flow through the carried feature h_(t') as well as h_t.
inline void backward(const LifeModel& model, const ExpandedCorrelation& cexp,
                     const TimeSeriesSample& sample, const ForwardTrace& tr, GradientTape& tape,
                     double loss_scale = 1.0) {
  const std::size_t T = tr.T, D = model.D, k = model.k, kD = model.feature_width();
  const std::size_t m = model.attn_hidden;
  const std::size_t L = model.aggregated_length();

  std::vector<double> dv(L, 0.0);

  if (model.task.kind == Task::Kind::classification) {
    const std::size_t C = model.task.num_classes;
    const auto y = static_cast<std::size_t>(sample.label);
    std::vector<double> dlogits(C);
    for (std::size_t r = 0; r < C; ++r)
      dlogits[r] = loss_scale * (tr.pred.probabilities[r] - (r == y ? 1.0 : 0.0));
    const std::size_t H = model.head_hidden;
    std::vector<double> dhid(H, 0.0);
    for (std::size_t r = 0; r < C; ++r) {
      tape.g.b2[r] += dlogits[r];
      for (std::size_t c = 0; c < H; ++c) {
        tape.g.W2(r, c) += dlogits[r] * tr.hid[c];
        dhid[c] += dlogits[r] * model.p.W2(r, c);
      }
    }
    for (std::size_t r = 0; r < H; ++r) {
      const double dpre = dhid[r] * (1.0 - tr.hid[r] * tr.hid[r]);
      tape.g.b1[r] += dpre;
      for (std::size_t c = 0; c < L; ++c) {
        tape.g.W1(r, c) += dpre * tr.v[c];
        dv[c] += dpre * model.p.W1(r, c);
      }
    }
  } else {
    const double dy = loss_scale * 2.0 * (tr.pred.value - sample.label);
    tape.g.b2[0] += dy;
    for (std::size_t c = 0; c < L; ++c) {
      tape.g.W2(0, c) += dy * tr.v[c];
      dv[c] += dy * model.p.W2(0, c);
    }
  }

  Matrix dhtilde(T, kD, 0.0);

  double denom = 0.0;
  for (double x : sample.mask.data) denom += x;
  if (model.alpha > 0.0 && denom > 0.0) {
    const double scale = loss_scale * model.alpha * 2.0 / denom;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d)
        if (sample.mask(t, d) == 1.0) {
          const double dxhat = scale * (tr.xhat(t, d) - sample.values(t, d));
          tape.g.gb[d] += dxhat;
          for (std::size_t c = 0; c < k; ++c) {
            tape.g.G(d, c) += dxhat * tr.htilde(t, d * k + c);
            dhtilde(t, d * k + c) += dxhat * model.p.G(d, c);
          }
        }
  }

  switch (model.agg) {
    case Aggregation::dense: {
      const double Tf = static_cast<double>(T), Ff = static_cast<double>(model.F);
      for (std::size_t t = 1; t <= T; ++t) {
        const double pos = Ff * static_cast<double>(t) / Tf;
        for (std::size_t f = 1; f <= model.F; ++f) {
          const double w0 = 1.0 - std::abs(pos - static_cast<double>(f)) / Ff;
          const double w = w0 * w0;
          for (std::size_t c = 0; c < kD; ++c)
            dhtilde(t - 1, c) += w * dv[(f - 1) * kD + c];
        }
      }
      break;
    }
    case Aggregation::mean: {
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < kD; ++c) dhtilde(t, c) += dv[c] / static_cast<double>(T);
      break;
    }
    case Aggregation::attention_pool: {
      std::vector<double> dw_pool(T, 0.0);
      double mix = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < kD; ++c) {
          dw_pool[t] += dv[c] * tr.htilde(t, c);
          dhtilde(t, c) += tr.pool_w[t] * dv[c];
        }
        mix += tr.pool_w[t] * dw_pool[t];
      }
      for (std::size_t t = 0; t < T; ++t) {
        const double dscore = tr.pool_w[t] * (dw_pool[t] - mix);
        for (std::size_t c = 0; c < kD; ++c) {
          tape.g.q[c] += dscore * tr.htilde(t, c);
          dhtilde(t, c) += dscore * model.p.q[c];
        }
      }
      break;
    }
  }

  Matrix dh(T, kD, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) {
      const std::ptrdiff_t tp = tr.tprime[t * D + d];
      if (tp < 0) {
        for (std::size_t c = d * k; c < (d + 1) * k; ++c) dh(t, c) += dhtilde(t, c);
        continue;
      }
      const auto tpu = static_cast<std::size_t>(tp);
      const double g = tr.gamma(t, d);
      double dgamma = 0.0;
      for (std::size_t c = d * k; c < (d + 1) * k; ++c) {
        const double dht = dhtilde(t, c);
        dh(tpu, c) += g * dht;
        dh(t, c) += (1.0 - g) * dht;
        dgamma += dht * (tr.h(tpu, c) - tr.h(t, c));
      }
      const double u = model.p.dw[d] * sample.intervals(t, d) + model.p.da[d];
      if (u > 0.0) {
        const double du = -g * dgamma;
        tape.g.dw[d] += du * sample.intervals(t, d);
        tape.g.da[d] += du;
      }
    }

  Matrix de(T, kD, 0.0);
  Matrix dattL(T, m, 0.0), dattR(T, m, 0.0);
  {
    Matrix dscore(T, T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> dattn(T, 0.0);
      double mix = 0.0;
      for (std::size_t s = 0; s < T; ++s) {
        double acc = 0.0;
        for (std::size_t c = 0; c < kD; ++c) {
          acc += dh(t, c) * tr.e(s, c);
          de(s, c) += tr.attn(s, t) * dh(t, c);
        }
        dattn[s] = acc;
        mix += tr.attn(s, t) * acc;
      }
      for (std::size_t s = 0; s < T; ++s) dscore(s, t) = tr.attn(s, t) * (dattn[s] - mix);
    }
    for (std::size_t s = 0; s < T; ++s)
      for (std::size_t t = 0; t < T; ++t) {
        const double ds = dscore(s, t);
        if (ds == 0.0) continue;
        for (std::size_t r = 0; r < m; ++r) {
          const double th = tr.tanh_at(s, t, r, m);
          tape.g.va[r] += ds * th;
          const double du = ds * model.p.va[r] * (1.0 - th * th);
          dattL(s, r) += du;
          dattR(t, r) += du;
          tape.g.ba[r] += du;
        }
      }
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t r = 0; r < m; ++r) {
        const double dl = dattL(t, r), dr = dattR(t, r);
        if (dl != 0.0)
          for (std::size_t c = 0; c < kD; ++c) {
            tape.g.Wa(r, c) += dl * tr.e(t, c);
            de(t, c) += dl * model.p.Wa(r, c);
          }
        if (dr != 0.0)
          for (std::size_t c = 0; c < kD; ++c) {
            tape.g.Wa(r, kD + c) += dr * tr.e(t, c);
            de(t, c) += dr * model.p.Wa(r, kD + c);
          }
      }
  }

  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < kD; ++i) {
      const double dei = de(t, i);
      tape.g.pe(t, i) += dei;
      const double s = tr.sig(t, i);
      const double dz = dei * s * (1.0 - s);
      tape.g.b[i] += dz;
      if (dz == 0.0) continue;
      for (std::size_t j = 0; j < 3 * D; ++j) {
        const double gate = cexp.entries(i, j);
        if (gate == 0.0) continue;  // gradients stay exactly zero where the gate is closed
        tape.g.W(i, j) += dz * gate * tr.input(t, j);
      }
    }
}

/// Mean-batch loss and gradients in one pass.
inline LossParts batch_backward(const LifeModel& model, const ExpandedCorrelation& cexp,
                                const std::vector<const TimeSeriesSample*>& batch,
                                GradientTape& tape) {
  if (batch.empty()) throw InputError("backward: empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  LossParts total;
  for (const TimeSeriesSample* s : batch) {
    ForwardTrace tr;
    try {
      tr = forward(model, cexp, *s);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (sample '" + s->id + "')");
    }
    backward(model, cexp, *s, tr, tape, scale);
    total.total += scale * tr.loss.total;
    total.pred += scale * tr.loss.pred;
    total.imp += scale * tr.loss.imp;
  }
  return total;
}

struct GradientCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<std::pair<std::string, double>> per_group;  // group -> max rel error
};

/// Central-difference verification of backward() on a batch. At least
/// min_params scalars are probed (capped by the parameter count), spread over
/// every parameter group in use, topping up from the larger groups once each
/// group's quota is exhausted.
///
/// Relative error: |g_ad - g_fd| / max(floor, |g_ad| + |g_fd|). The floor is
/// not 0: central differences on a double-precision loss of magnitude |L|
/// resolve gradients only down to about machine_eps * |L| / (2 * epsilon)
/// (~1e-11 at epsilon=1e-5 on a unit-scale loss). Parameters in flat regions
/// have true gradients below that resolution, so their raw quotient measures
/// rounding noise, not correctness. The floor is chosen so a discrepancy must
/// exceed the finite-difference noise by a wide margin before it can push the
/// relative error over a 1e-4 acceptance threshold.
inline GradientCheckReport gradient_check(LifeModel model, const ExpandedCorrelation& cexp,
                                          const std::vector<TimeSeriesSample>& samples,
                                          double epsilon = 1e-5, std::size_t min_params = 200,
                                          std::uint64_t seed = 0) {
  if (epsilon < 1e-6 || epsilon > 1e-3)
    throw InputError("gradient_check: epsilon outside [1e-6, 1e-3]");
  if (samples.empty()) throw InputError("gradient_check: no samples");

  std::vector<const TimeSeriesSample*> batch;
  batch.reserve(samples.size());
  for (const auto& s : samples) batch.push_back(&s);

  GradientTape tape = make_tape(model);
  batch_backward(model, cexp, batch, tape);

  auto loss_at = [&]() {
    double acc = 0.0;
    for (const TimeSeriesSample* s : batch) acc += forward(model, cexp, *s).loss.total;
    return acc / static_cast<double>(batch.size());
  };

  std::vector<ParamView> pviews = param_views(model, model.p);
  std::vector<ParamView> gviews = param_views(model, tape.g);

  std::mt19937_64 rng(seed);
  GradientCheckReport report;
  const std::size_t groups = pviews.size();
  const std::size_t quota = (min_params + groups - 1) / groups;

  // Finite-difference noise scale, with a 10x safety factor; the denominator
  // floor maps that noise to at most 1e-5 relative error.
  const double base_loss = std::abs(loss_at());
  const double fd_noise =
      10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, base_loss) / (2.0 * epsilon);
  const double denom_floor = std::max(1e-8, fd_noise / 1e-5);

  std::vector<double> group_max(groups, 0.0);
  auto probe = [&](std::size_t gi, std::size_t i) {
    ParamView& pv = pviews[gi];
    const double saved = pv.data[i];
    pv.data[i] = saved + epsilon;
    const double up = loss_at();
    pv.data[i] = saved - epsilon;
    const double down = loss_at();
    pv.data[i] = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double ad = gviews[gi].data[i];
    const double rel = std::abs(ad - fd) / std::max(denom_floor, std::abs(ad) + std::abs(fd));
    group_max[gi] = std::max(group_max[gi], rel);
    ++report.checked;
  };

  std::vector<std::pair<std::size_t, std::size_t>> leftovers;
  for (std::size_t gi = 0; gi < groups; ++gi) {
    if (pviews[gi].size == 0) continue;
    std::vector<std::size_t> idx(pviews[gi].size);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t take = std::min<std::size_t>(idx.size(), quota);
    for (std::size_t n = 0; n < take; ++n) probe(gi, idx[n]);
    for (std::size_t n = take; n < idx.size(); ++n) leftovers.emplace_back(gi, idx[n]);
  }
  std::shuffle(leftovers.begin(), leftovers.end(), rng);
  for (const auto& [gi, i] : leftovers) {
    if (report.checked >= min_params) break;
    probe(gi, i);
  }

  for (std::size_t gi = 0; gi < groups; ++gi) {
    if (pviews[gi].size == 0) continue;
    report.per_group.emplace_back(pviews[gi].name, group_max[gi]);
    report.max_rel_error = std::max(report.max_rel_error, group_max[gi]);
  }
  return report;
}

/// Randomized small instance for gradient verification. Covers every forward
/// branch: dimension 0 starts missing (no-prior carry), later gaps carry from
/// a prior observation, dimension 1 is fully observed, and one dimension
/// keeps its decay preactivation strictly negative (inactive max branch).
/// Decay parameters are pushed away from the max(0,.) kink so central
/// differences stay valid.
struct GradientCheckInstance {
  LifeModel model;
  ExpandedCorrelation cexp;
  std::vector<TimeSeriesSample> samples;
};

inline GradientCheckInstance make_gradcheck_instance(std::size_t T, std::size_t D, std::size_t k,
                                                     Task task, std::uint64_t seed,
                                                     Aggregation agg = Aggregation::dense) {
  if (T < 4 || D < 2) throw InputError("gradcheck: need T >= 4 and D >= 2");
  GradientCheckInstance inst;
  inst.model = init_model(D, task, k, 2, 0.7, T, seed, agg);
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5DEADBEEFULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t d = 0; d < D; ++d) {
    if (d == D - 1) {
      inst.model.p.dw[d] = -0.1;  // preactivation stays below -0.3: gamma pinned at 1
      inst.model.p.da[d] = -0.5;
    } else {
      inst.model.p.dw[d] = 0.2 + 0.4 * unif(rng);
      inst.model.p.da[d] = 0.1 + 0.3 * unif(rng);
    }
  }
  inst.cexp = expand_correlation(rand_correlation(D, seed + 1), k);

  for (std::size_t n = 0; n < 2; ++n) {
    std::vector<double> timestamps(T);
    Matrix values(T, D, 0.0), mask(T, D, 1.0);
    for (std::size_t t = 0; t < T; ++t) {
      timestamps[t] = static_cast<double>(t);
      for (std::size_t d = 0; d < D; ++d) values(t, d) = gauss(rng);
    }
    mask(0, 0) = 0.0;  // leading gap: no prior observation to carry
    mask(1, 0) = 0.0;
    mask(T - 1, 0) = 0.0;  // interior-style gap with a prior at t=2
    for (std::size_t d = 2; d < D; ++d)
      for (std::size_t t = 0; t < T; ++t)
        if (unif(rng) < 0.3) mask(t, d) = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d)
        if (mask(t, d) == 0.0) values(t, d) = kMissing;
    TimeSeriesSample s = make_sample("gradcheck-" + std::to_string(n), std::move(timestamps),
                                     std::move(values), std::move(mask));
    s.has_label = true;
    s.label = task.kind == Task::Kind::classification
                  ? static_cast<double>(n % task.num_classes)
                  : gauss(rng);
    inst.samples.push_back(std::move(s));
  }
  return inst;
}

}  // namespace life

#endif  // LIFE_GRADIENTS_HPP
