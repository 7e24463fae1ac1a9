#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mfmarl/interaction.hpp"
#include "mfmarl/model.hpp"
#include "mfmarl/policy.hpp"
#include "mfmarl/rng.hpp"
#include "mfmarl/simplex.hpp"

namespace mfmarl {

struct AgentSystemState {
  std::vector<std::size_t> states;
  std::vector<std::size_t> actions;  // empty until the decision phase
};

// Everything realized during one synchronous step of the population.
struct StepOutcome {
  AgentSystemState current;  // states at t with the sampled actions
  AgentSystemState next;     // states at t + 1, no actions yet
  std::vector<double> rewards;
  std::vector<double> state_views;   // N x |X|, row i is mu_t^{i,N}
  std::vector<double> action_views;  // N x |U|, row i is nu_t^{i,N}

  Simplex state_view(std::size_t agent) const;
  Simplex action_view(std::size_t agent) const;
};

// Agents act independently given the states, then transition independently
// given states and actions. Each agent sees the population through its row of w.
StepOutcome step(const EnvModel& env, const InteractionMatrix& w,
                 const PolicyFn& policy, const AgentSystemState& sys, Rng& rng);

struct RolloutRecord {
  double gamma = 0.0;
  std::vector<std::vector<std::size_t>> states;   // per step, per agent
  std::vector<std::vector<std::size_t>> actions;  // per step, per agent
  std::vector<std::vector<double>> rewards;       // per step, per agent
  std::vector<Simplex> mu_n;                      // empirical state law per step
  std::vector<Simplex> nu_n;                      // empirical action law per step
  double discounted_return = 0.0;

  // sum_t gamma^t mean_i rewards[t][i]
  double recompute_return() const;
  // Columns: t, agent, x, u, reward
  void write_csv(std::ostream& out) const;
};

using StepObserver = std::function<void(std::size_t t, const StepOutcome&)>;

// Collects rewards for t = 0..horizon.
RolloutRecord rollout(const EnvModel& env, const InteractionMatrix& w,
                      const PolicyFn& policy,
                      const std::vector<std::size_t>& initial_states,
                      std::size_t horizon, Rng& rng,
                      const StepObserver& observer = {});

// Population-average discounted return only.
double rollout_return(const EnvModel& env, const InteractionMatrix& w,
                      const PolicyFn& policy,
                      const std::vector<std::size_t>& initial_states,
                      std::size_t horizon, Rng& rng);

struct VMarlEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(episodes); 0 for one episode
};

// Episodes start from the same joint state; episode e draws from its own
// stream derived from one base value taken from rng.
VMarlEstimate estimate_v_marl(const EnvModel& env, const InteractionMatrix& w,
                              const PolicyFn& policy,
                              const std::vector<std::size_t>& initial_states,
                              std::size_t horizon, std::size_t episodes, Rng& rng);

// i.i.d. draws from mu0.
std::vector<std::size_t> sample_initial_states(const Simplex& mu0, std::size_t n,
                                               Rng& rng);

}  // namespace mfmarl
