#ifndef LIFE_OPTIMIZER_HPP
#define LIFE_OPTIMIZER_HPP

#include <cmath>
#include <cstddef>

#include "life/common.hpp"
#include "life/gradients.hpp"
#include "life/model.hpp"

namespace life {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers share the parameter layout; step counts completed updates.
struct OptimizerState {
  ParamSet m;
  ParamSet v;
  std::size_t step = 0;
};

inline OptimizerState make_optimizer(const LifeModel& model) {
  return {zeros_like(model.p), zeros_like(model.p), 0};
}

/// Standard Adam with bias correction.
inline void adam_step(LifeModel& model, const GradientTape& tape, OptimizerState& state,
                      const AdamConfig& config) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);

  std::vector<ParamView> params = param_views(model, model.p);
  ParamSet& grads_ps = const_cast<ParamSet&>(tape.g);
  std::vector<ParamView> grads = param_views(model, grads_ps);
  std::vector<ParamView> m1 = param_views(model, state.m);
  std::vector<ParamView> m2 = param_views(model, state.v);

  for (std::size_t gi = 0; gi < params.size(); ++gi) {
    if (params[gi].size != grads[gi].size) throw InputError("adam: tape shape mismatch");
    for (std::size_t i = 0; i < params[gi].size; ++i) {
      const double g = grads[gi].data[i];
      double& m = m1[gi].data[i];
      double& v = m2[gi].data[i];
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      params[gi].data[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

}  // namespace life

#endif  // LIFE_OPTIMIZER_HPP
