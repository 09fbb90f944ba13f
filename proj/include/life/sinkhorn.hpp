#ifndef LIFE_SINKHORN_HPP
#define LIFE_SINKHORN_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "life/common.hpp"
#include "life/matrix.hpp"

namespace life {

/// Discrete optimal-transport instance: non-negative finite cost matrix with
/// probability-vector marginals (each sums to 1 within 1e-9).
struct TransportProblem {
  Matrix cost;            // n x m
  std::vector<double> u;  // source marginal, length n
  std::vector<double> v;  // target marginal, length m
};

struct SinkhornConfig {
  double epsilon = 0.01;
  std::size_t max_iterations = 10000;
  double tolerance = 1e-6;  // max marginal violation at stop
  bool anneal = true;       // warm-started epsilon halving toward the target
};

struct SinkhornResult {
  double distance = 0.0;  // sum P .* cost
  Matrix plan;
  bool converged = false;
  std::size_t iterations = 0;       // total across annealing stages
  double marginal_violation = 0.0;  // at exit
};

inline void validate_transport(const TransportProblem& prob) {
  const std::size_t n = prob.cost.rows, m = prob.cost.cols;
  if (n == 0 || m == 0) throw InputError("sinkhorn: empty cost matrix");
  if (prob.u.size() != n || prob.v.size() != m)
    throw InputError("sinkhorn: marginal length mismatch");
  for (double c : prob.cost.data)
    if (!std::isfinite(c) || c < 0.0)
      throw InputError("sinkhorn: cost entries must be finite and non-negative");
  double su = 0.0, sv = 0.0;
  for (double x : prob.u) {
    if (x < 0.0) throw InputError("sinkhorn: marginals must be non-negative");
    su += x;
  }
  for (double x : prob.v) {
    if (x < 0.0) throw InputError("sinkhorn: marginals must be non-negative");
    sv += x;
  }
  if (std::abs(su - 1.0) > 1e-9 || std::abs(sv - 1.0) > 1e-9)
    throw InputError("sinkhorn: marginals must each sum to 1");
}

namespace detail {

inline double logsumexp(const std::vector<double>& terms) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double t : terms) hi = std::max(hi, t);
  if (!std::isfinite(hi)) return hi;  // all -inf (or empty)
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

}  // namespace detail

/// Log-domain Sinkhorn. Potentials f, g are iterated directly in log space so
/// small epsilon never underflows. With anneal enabled the solve starts at
/// epsilon = max(target, max(cost)/10) and halves toward the target,
/// warm-starting the potentials, which keeps small-epsilon solves convergent
/// within the iteration budget. max_iterations bounds the total across stages.
/// Non-convergence is reported through the flag, never thrown.
inline SinkhornResult sinkhorn(const TransportProblem& prob, const SinkhornConfig& config) {
  validate_transport(prob);
  if (config.epsilon <= 0.0) throw InputError("sinkhorn: epsilon must be positive");
  if (config.max_iterations == 0) throw InputError("sinkhorn: max_iterations must be positive");
  if (config.tolerance <= 0.0) throw InputError("sinkhorn: tolerance must be positive");

  const std::size_t n = prob.cost.rows, m = prob.cost.cols;
  std::vector<double> logu(n), logv(m);
  for (std::size_t i = 0; i < n; ++i) logu[i] = std::log(prob.u[i]);  // -inf on zero mass
  for (std::size_t j = 0; j < m; ++j) logv[j] = std::log(prob.v[j]);

  double cost_max = 0.0;
  for (double c : prob.cost.data) cost_max = std::max(cost_max, c);

  std::vector<double> epsilons;
  if (config.anneal && cost_max / 10.0 > config.epsilon) {
    double eps = cost_max / 10.0;
    while (eps > config.epsilon) {
      epsilons.push_back(eps);
      eps /= 2.0;
    }
  }
  epsilons.push_back(config.epsilon);

  std::vector<double> f(n, 0.0), g(m, 0.0);
  std::vector<double> terms(std::max(n, m));
  Matrix plan(n, m, 0.0);
  std::size_t total_iters = 0;
  double violation = std::numeric_limits<double>::infinity();

  auto compute_plan_and_violation = [&](double eps) {
    violation = 0.0;
    std::vector<double> colsum(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double rowsum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double lp = (f[i] + g[j] - prob.cost(i, j)) / eps;
        const double p = std::isfinite(lp) ? std::exp(lp) : 0.0;
        plan(i, j) = p;
        rowsum += p;
        colsum[j] += p;
      }
      violation = std::max(violation, std::abs(rowsum - prob.u[i]));
    }
    for (std::size_t j = 0; j < m; ++j)
      violation = std::max(violation, std::abs(colsum[j] - prob.v[j]));
  };

  bool converged = false;
  double eps_used = epsilons.front();
  for (std::size_t stage = 0; stage < epsilons.size(); ++stage) {
    const double eps = epsilons[stage];
    eps_used = eps;
    converged = false;
    while (total_iters < config.max_iterations) {
      ++total_iters;
      for (std::size_t i = 0; i < n; ++i) {
        terms.resize(m);
        for (std::size_t j = 0; j < m; ++j) terms[j] = (g[j] - prob.cost(i, j)) / eps;
        const double lse = detail::logsumexp(terms);
        f[i] = std::isfinite(logu[i]) ? eps * (logu[i] - lse)
                                      : -std::numeric_limits<double>::infinity();
      }
      for (std::size_t j = 0; j < m; ++j) {
        terms.resize(n);
        for (std::size_t i = 0; i < n; ++i) terms[i] = (f[i] - prob.cost(i, j)) / eps;
        const double lse = detail::logsumexp(terms);
        g[j] = std::isfinite(logv[j]) ? eps * (logv[j] - lse)
                                      : -std::numeric_limits<double>::infinity();
      }
      compute_plan_and_violation(eps);
      if (violation <= config.tolerance) {
        converged = true;
        break;
      }
    }
    if (total_iters >= config.max_iterations && !converged) break;
  }

  compute_plan_and_violation(eps_used);
  SinkhornResult result;
  result.plan = std::move(plan);
  result.converged = converged && violation <= config.tolerance;
  result.iterations = total_iters;
  result.marginal_violation = violation;
  double dist = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) dist += result.plan(i, j) * prob.cost(i, j);
  result.distance = dist;
  return result;
}

}  // namespace life

#endif  // LIFE_SINKHORN_HPP
