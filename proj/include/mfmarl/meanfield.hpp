#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "mfmarl/model.hpp"
#include "mfmarl/policy.hpp"
#include "mfmarl/simplex.hpp"

namespace mfmarl {

// One step of the deterministic mean-field dynamics from mu.
struct MeanFieldStep {
  std::vector<Simplex> action_laws;  // pi(x, mu) for every x
  Simplex nu;                        // population action distribution
  Simplex next_mu;
  double reward = 0.0;               // population average reward
};

MeanFieldStep mf_step(const EnvModel& env, const PolicyFn& policy, const Simplex& mu);

// nu = sum_x pi(x, mu) mu(x)
Simplex mf_action_distribution(const EnvModel& env, const PolicyFn& policy,
                               const Simplex& mu);
// next mu = sum_{x,u} P(x, u, mu, nu) pi(x, mu)(u) mu(x)
Simplex mf_transition(const EnvModel& env, const PolicyFn& policy, const Simplex& mu);
// sum_{x,u} r(x, u, mu, nu) pi(x, mu)(u) mu(x)
double mf_reward(const EnvModel& env, const PolicyFn& policy, const Simplex& mu);

struct MFTrajectory {
  std::vector<Simplex> mus;
  std::vector<Simplex> nus;
  std::vector<double> rewards;
  std::size_t horizon = 0;

  // Columns: t, mu_0.., nu_0.., r_mf
  void write_csv(std::ostream& out) const;
};

struct MFValue {
  double value = 0.0;
  MFTrajectory trajectory;
};

// Smallest T with gamma^T m_r / (1 - gamma) <= tol, so the tail after T is
// below tol; 0 when gamma or m_r is 0.
std::size_t truncation_horizon(double gamma, double reward_bound, double tol);

// sum_{t=0}^{horizon} gamma^t r_mf(mu_t)
MFValue mf_value_with_horizon(const EnvModel& env, const PolicyFn& policy,
                              const Simplex& mu0, std::size_t horizon);
// Horizon chosen from env.reward_bound so the discarded tail is <= tol.
MFValue mf_value(const EnvModel& env, const PolicyFn& policy, const Simplex& mu0,
                 double tol);

struct BoundInputs {
  double l_p = 0.0;
  double l_q = 0.0;
  double l_r = 0.0;
  double m_r = 0.0;
  double m_f = 0.0;
  double b_l1 = 0.0;
  double gamma = 0.0;
  std::size_t n_agents = 1;
  std::size_t n_states = 1;
  std::size_t n_actions = 1;
};

struct BoundConstants {
  double s_p = 0.0;  // (1 + L_Q) + L_P (2 + L_Q)
  double s_r = 0.0;  // M_R (1 + L_Q) + L_R (2 + L_Q)
  double c_p = 0.0;  // 2 + L_P
  double c_r = 0.0;  // |b|_1 + M_F
};

BoundConstants bound_constants(const BoundInputs& inp);

// Upper bound on |v_MARL - v_MF| for a doubly stochastic interaction matrix.
// Throws BoundInapplicableError when gamma * S_P >= 1 and InputError on
// negative constants.
double approximation_bound(const BoundInputs& inp);

// Collects the constants from an affine env; throws AffineRequiredError
// otherwise.
BoundInputs bound_inputs_for(const EnvModel& env, double l_q, std::size_t n_agents);

}  // namespace mfmarl
