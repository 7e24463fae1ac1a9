#include "mfmarl/meanfield.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "mfmarl/errors.hpp"

namespace mfmarl {
namespace {

constexpr double kUnitSpTol = 1e-9;

void check_mu(const EnvModel& env, const Simplex& mu) {
  if (mu.size() != env.n_states) throw InputError("mean field: mu has wrong size");
}

}  // namespace

MeanFieldStep mf_step(const EnvModel& env, const PolicyFn& policy, const Simplex& mu) {
  check_mu(env, mu);
  const std::size_t nx = env.n_states;
  const std::size_t nu = env.n_actions;

  std::vector<Simplex> laws;
  laws.reserve(nx);
  std::vector<double> nu_w(nu, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    laws.push_back(policy(x, mu));
    if (laws.back().size() != nu) throw InputError("mean field: policy has wrong arity");
    for (std::size_t u = 0; u < nu; ++u) nu_w[u] += laws[x][u] * mu[x];
  }
  Simplex nu_dist = Simplex::from_weights(std::move(nu_w));

  std::vector<double> next(nx, 0.0);
  double reward = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    if (mu[x] == 0.0) continue;
    for (std::size_t u = 0; u < nu; ++u) {
      const double weight = laws[x][u] * mu[x];
      if (weight == 0.0) continue;
      const Simplex p = env.transition(x, u, mu, nu_dist);
      for (std::size_t y = 0; y < nx; ++y) next[y] += weight * p[y];
      reward += weight * env.reward(x, u, mu, nu_dist);
    }
  }
  return MeanFieldStep{std::move(laws), std::move(nu_dist),
                       Simplex::from_weights(std::move(next)), reward};
}

Simplex mf_action_distribution(const EnvModel& env, const PolicyFn& policy,
                               const Simplex& mu) {
  check_mu(env, mu);
  std::vector<double> nu_w(env.n_actions, 0.0);
  for (std::size_t x = 0; x < env.n_states; ++x) {
    if (mu[x] == 0.0) continue;
    const Simplex law = policy(x, mu);
    for (std::size_t u = 0; u < env.n_actions; ++u) nu_w[u] += law[u] * mu[x];
  }
  return Simplex::from_weights(std::move(nu_w));
}

Simplex mf_transition(const EnvModel& env, const PolicyFn& policy, const Simplex& mu) {
  return mf_step(env, policy, mu).next_mu;
}

double mf_reward(const EnvModel& env, const PolicyFn& policy, const Simplex& mu) {
  return mf_step(env, policy, mu).reward;
}

void MFTrajectory::write_csv(std::ostream& out) const {
  if (mus.empty()) return;
  out << "t";
  for (std::size_t k = 0; k < mus.front().size(); ++k) out << ",mu_" << k;
  for (std::size_t k = 0; k < nus.front().size(); ++k) out << ",nu_" << k;
  out << ",r_mf\n";
  const auto old_precision = out.precision(17);
  for (std::size_t t = 0; t < mus.size(); ++t) {
    out << t;
    for (double v : mus[t].weights()) out << ',' << v;
    for (double v : nus[t].weights()) out << ',' << v;
    out << ',' << rewards[t] << '\n';
  }
  out.precision(old_precision);
}

std::size_t truncation_horizon(double gamma, double reward_bound, double tol) {
  if (!(tol > 0.0)) throw InputError("truncation horizon: tol must be positive");
  if (gamma <= 0.0 || reward_bound <= 0.0) return 0;
  const double ratio = tol * (1.0 - gamma) / reward_bound;
  if (ratio >= 1.0) return 0;
  return static_cast<std::size_t>(std::ceil(std::log(ratio) / std::log(gamma)));
}

MFValue mf_value_with_horizon(const EnvModel& env, const PolicyFn& policy,
                              const Simplex& mu0, std::size_t horizon) {
  check_mu(env, mu0);
  MFValue out;
  out.trajectory.horizon = horizon;
  Simplex mu = mu0;
  double discount = 1.0;
  for (std::size_t t = 0; t <= horizon; ++t) {
    MeanFieldStep step = mf_step(env, policy, mu);
    out.value += discount * step.reward;
    discount *= env.gamma;
    out.trajectory.mus.push_back(mu);
    out.trajectory.nus.push_back(std::move(step.nu));
    out.trajectory.rewards.push_back(step.reward);
    mu = std::move(step.next_mu);
  }
  return out;
}

MFValue mf_value(const EnvModel& env, const PolicyFn& policy, const Simplex& mu0,
                 double tol) {
  return mf_value_with_horizon(env, policy, mu0,
                               truncation_horizon(env.gamma, env.reward_bound, tol));
}

BoundConstants bound_constants(const BoundInputs& inp) {
  BoundConstants c;
  c.s_p = (1.0 + inp.l_q) + inp.l_p * (2.0 + inp.l_q);
  c.s_r = inp.m_r * (1.0 + inp.l_q) + inp.l_r * (2.0 + inp.l_q);
  c.c_p = 2.0 + inp.l_p;
  c.c_r = inp.b_l1 + inp.m_f;
  return c;
}

double approximation_bound(const BoundInputs& inp) {
  for (double v : {inp.l_p, inp.l_q, inp.l_r, inp.m_r, inp.m_f, inp.b_l1}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError("bound: constants must be finite and nonnegative");
    }
  }
  if (!(inp.gamma >= 0.0 && inp.gamma < 1.0)) throw InputError("bound: gamma must lie in [0, 1)");
  if (inp.n_agents == 0 || inp.n_states == 0 || inp.n_actions == 0) {
    throw InputError("bound: sizes must be positive");
  }
  const BoundConstants c = bound_constants(inp);
  const double g = inp.gamma;
  if (g * c.s_p >= 1.0) {
    throw BoundInapplicableError("bound inapplicable (gamma * S_P = " +
                                 std::to_string(g * c.s_p) + " >= 1)");
  }
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(inp.n_agents));
  const double sqrt_x = std::sqrt(static_cast<double>(inp.n_states));
  const double sqrt_u = std::sqrt(static_cast<double>(inp.n_actions));

  const double reward_term = c.c_r * sqrt_u * inv_sqrt_n / (1.0 - g);
  // (1/(1 - g S) - 1/(1 - g)) / (S - 1) tends to g / (1 - g)^2 as S -> 1.
  double growth;
  if (std::fabs(c.s_p - 1.0) < kUnitSpTol) {
    growth = g / ((1.0 - g) * (1.0 - g));
  } else {
    growth = (1.0 / (1.0 - g * c.s_p) - 1.0 / (1.0 - g)) / (c.s_p - 1.0);
  }
  const double state_term = inv_sqrt_n * (sqrt_x + sqrt_u) * c.s_r * c.c_p * growth;
  return reward_term + state_term;
}

BoundInputs bound_inputs_for(const EnvModel& env, double l_q, std::size_t n_agents) {
  if (!env.affine) {
    throw AffineRequiredError("bound requires an affine reward (env '" + env.name + "')");
  }
  const RewardConstants rc = reward_constants(*env.affine);
  BoundInputs inp;
  inp.l_p = env.lipschitz_p;
  inp.l_q = l_q;
  inp.l_r = rc.l_r;
  inp.m_r = rc.m_r;
  inp.m_f = rc.m_f;
  inp.b_l1 = rc.b_l1;
  inp.gamma = env.gamma;
  inp.n_agents = n_agents;
  inp.n_states = env.n_states;
  inp.n_actions = env.n_actions;
  return inp;
}

}  // namespace mfmarl
