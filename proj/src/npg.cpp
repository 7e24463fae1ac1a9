#include "mfmarl/npg.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

#include "mfmarl/errors.hpp"
#include "mfmarl/simd/kernels.hpp"

namespace mfmarl {
namespace {

// Agent-level state of the sampler: own state and action on the shared path.
struct Walker {
  std::size_t t = 0;
  std::size_t x = 0;
  std::size_t u = 0;
};

void advance(const EnvModel& env, MeanFieldPath& path, Walker& w, Rng& rng) {
  const MeanFieldStep& now = path.step(w.t);
  const Simplex& mu = w.t == 0 ? path.mu0() : path.step(w.t - 1).next_mu;
  w.x = sample(env.transition(w.x, w.u, mu, now.nu), rng);
  ++w.t;
  w.u = sample(path.step(w.t).action_laws[w.x], rng);
}

const Simplex& mu_at(MeanFieldPath& path, std::size_t t) {
  return t == 0 ? path.mu0() : path.step(t - 1).next_mu;
}

double reward_at(const EnvModel& env, MeanFieldPath& path, const Walker& w) {
  return env.reward(w.x, w.u, mu_at(path, w.t), path.step(w.t).nu);
}

}  // namespace

void NPGConfig::validate() const {
  if (!(eta >= 0.0) || !(alpha > 0.0)) throw InputError("npg: learning rates must be positive");
  if (j_steps == 0 || l_steps == 0) throw InputError("npg: J and L must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("npg: gamma must lie in [0, 1)");
  if (!(eval_tol > 0.0)) throw InputError("npg: eval_tol must be positive");
}

MeanFieldPath::MeanFieldPath(const EnvModel& env, PolicyFn policy, Simplex mu0)
    : env_(env), policy_(std::move(policy)), mu0_(std::move(mu0)) {}

const MeanFieldStep& MeanFieldPath::step(std::size_t t) {
  while (steps_.size() <= t) {
    const Simplex& mu = steps_.empty() ? mu0_ : steps_.back().next_mu;
    steps_.push_back(mf_step(env_, policy_, mu));
  }
  return steps_[t];
}

OccupancySample sample_occupancy(const EnvModel& env, MeanFieldPath& path, Rng& rng,
                                 AdvantageEstimator estimator) {
  const double gamma = env.gamma;
  Walker w;
  w.x = sample(path.mu0(), rng);
  w.u = sample(path.step(0).action_laws[w.x], rng);

  OccupancySample out;
  double sum_rewards = 0.0;
  if (estimator == AdvantageEstimator::kCoinFirst) {
    // P(T = t) = (1 - gamma) gamma^t, t >= 0
    while (uniform01(rng) < gamma) advance(env, path, w, rng);
    out.x = w.x;
    out.u = w.u;
    out.accept_time = w.t;
    const bool q_branch = uniform01(rng) < 0.5;
    if (!q_branch) w.u = sample(path.step(w.t).action_laws[w.x], rng);
    sum_rewards = reward_at(env, path, w);
    while (uniform01(rng) < gamma) {
      advance(env, path, w, rng);
      sum_rewards += reward_at(env, path, w);
    }
    out.mu = mu_at(path, out.accept_time);
    out.a_hat = q_branch ? 2.0 * sum_rewards : -2.0 * sum_rewards;
    return out;
  }

  bool stop = false;
  while (!stop) {
    stop = uniform01(rng) < 1.0 - gamma;
    advance(env, path, w, rng);
  }
  out.x = w.x;
  out.u = w.u;
  out.accept_time = w.t;
  out.mu = mu_at(path, w.t);
  stop = false;
  while (!stop) {
    stop = uniform01(rng) < 1.0 - gamma;
    advance(env, path, w, rng);
    sum_rewards += reward_at(env, path, w);
  }
  const bool v_branch = uniform01(rng) < 0.5;
  out.a_hat = v_branch ? -2.0 * sum_rewards : 2.0 * sum_rewards;
  return out;
}

OccupancySample sample_occupancy(const EnvModel& env, const PolicyConfig& policy_cfg,
                                 const PolicyParams& phi, const Simplex& mu0, Rng& rng,
                                 AdvantageEstimator estimator) {
  MeanFieldPath path(env, NeuralPolicy{policy_cfg, phi}, mu0);
  return sample_occupancy(env, path, rng, estimator);
}

std::vector<double> run_inner_sgd(std::span<const double> w0, std::size_t l_steps,
                                  double alpha, double gamma,
                                  const std::function<CompatibleSample(std::size_t)>& draw) {
  if (l_steps == 0) throw InputError("inner SGD: L must be >= 1");
  std::vector<double> w(w0.begin(), w0.end());
  std::vector<double> average(w.size(), 0.0);
  for (std::size_t l = 0; l < l_steps; ++l) {
    const CompatibleSample s = draw(l);
    if (s.grad.size() != w.size()) throw InputError("inner SGD: gradient dimension mismatch");
    const double residual = simd::dot(w, s.grad) - s.a_hat / (1.0 - gamma);
    if (!std::isfinite(residual)) {
      throw TrainingDivergenceError("inner SGD diverged at iteration " + std::to_string(l));
    }
    simd::axpy(-alpha * residual, s.grad, w);
    for (double v : w) {
      if (!std::isfinite(v)) {
        throw TrainingDivergenceError("inner SGD diverged at iteration " + std::to_string(l));
      }
    }
    simd::axpy(1.0, w, average);
  }
  for (double& v : average) v /= static_cast<double>(l_steps);
  return average;
}

std::vector<double> inner_sgd(const EnvModel& env, const PolicyConfig& policy_cfg,
                              const PolicyParams& phi, const Simplex& mu0,
                              const NPGConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<double> w0 = cfg.w0;
  if (w0.empty()) w0.assign(policy_cfg.param_dim(), 0.0);
  if (w0.size() != policy_cfg.param_dim()) throw InputError("npg: w0 has wrong dimension");
  MeanFieldPath path(env, NeuralPolicy{policy_cfg, phi}, mu0);
  return run_inner_sgd(w0, cfg.l_steps, cfg.alpha, cfg.gamma, [&](std::size_t) {
    const OccupancySample s = sample_occupancy(env, path, rng, cfg.estimator);
    return CompatibleSample{log_policy_gradient(policy_cfg, phi, s.x, s.mu, s.u), s.a_hat};
  });
}

void NPGTrainResult::write_log_csv(std::ostream& out) const {
  out << "j,v_mf,w_norm,wall_ms\n";
  const auto old_precision = out.precision(17);
  for (std::size_t j = 0; j < values.size(); ++j) {
    out << j + 1 << ',' << values[j] << ',' << w_norms[j] << ',' << wall_ms[j] << '\n';
  }
  out.precision(old_precision);
}

NPGTrainResult npg_train(const EnvModel& env, const PolicyConfig& policy_cfg,
                         const PolicyParams& phi0, const Simplex& mu0,
                         const NPGConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.gamma != env.gamma) throw InputError("npg: config gamma differs from env gamma");
  if (phi0.size() != policy_cfg.param_dim()) throw InputError("npg: phi0 has wrong dimension");
  NPGTrainResult result;
  result.initial_value = mf_value(env, NeuralPolicy{policy_cfg, phi0}, mu0, cfg.eval_tol).value;
  PolicyParams phi = phi0;
  for (std::size_t j = 0; j < cfg.j_steps; ++j) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<double> w = inner_sgd(env, policy_cfg, phi, mu0, cfg, rng);
    simd::axpy(cfg.eta, w, phi);
    for (double v : phi) {
      if (!std::isfinite(v)) {
        throw TrainingDivergenceError("policy parameters diverged at outer iteration " +
                                      std::to_string(j));
      }
    }
    result.values.push_back(mf_value(env, NeuralPolicy{policy_cfg, phi}, mu0, cfg.eval_tol).value);
    result.w_norms.push_back(std::sqrt(simd::dot(w, w)));
    result.iterates.push_back(phi);
    const auto stop = std::chrono::steady_clock::now();
    result.wall_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  return result;
}

PolicySelection select_policy(const std::vector<PolicyParams>& iterates,
                              const std::vector<double>& values) {
  if (iterates.empty() || iterates.size() != values.size()) {
    throw InputError("select_policy: need matching, nonempty iterates and values");
  }
  PolicySelection sel;
  double total = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    total += values[j];
    if (values[j] > values[sel.index]) sel.index = j;
  }
  sel.best = iterates[sel.index];
  sel.best_value = values[sel.index];
  sel.mean_value = total / static_cast<double>(values.size());
  return sel;
}

}  // namespace mfmarl
