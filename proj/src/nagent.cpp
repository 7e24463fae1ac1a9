#include "mfmarl/nagent.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "mfmarl/errors.hpp"

namespace mfmarl {
namespace {

Simplex row_simplex(const std::vector<double>& matrix, std::size_t row,
                    std::size_t width) {
  const auto begin = matrix.begin() + static_cast<std::ptrdiff_t>(row * width);
  return Simplex::from_weights(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(width)));
}

void check_system(const EnvModel& env, const InteractionMatrix& w,
                  const std::vector<std::size_t>& states) {
  if (states.size() != w.n_agents()) {
    throw InputError("agent system has " + std::to_string(states.size()) +
                     " agents but the interaction matrix has " +
                     std::to_string(w.n_agents()));
  }
  for (std::size_t x : states) {
    if (x >= env.n_states) throw InputError("agent state out of range");
  }
}

}  // namespace

Simplex StepOutcome::state_view(std::size_t agent) const {
  const std::size_t width = state_views.size() / current.states.size();
  return row_simplex(state_views, agent, width);
}

Simplex StepOutcome::action_view(std::size_t agent) const {
  const std::size_t width = action_views.size() / current.states.size();
  return row_simplex(action_views, agent, width);
}

StepOutcome step(const EnvModel& env, const InteractionMatrix& w,
                 const PolicyFn& policy, const AgentSystemState& sys, Rng& rng) {
  check_system(env, w, sys.states);
  const std::size_t n = sys.states.size();
  const std::size_t nx = env.n_states;
  const std::size_t nu = env.n_actions;

  StepOutcome out;
  out.current.states = sys.states;
  out.state_views = weighted_views(w, sys.states, nx);

  std::vector<Simplex> mu_views;
  mu_views.reserve(n);
  out.current.actions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu_views.push_back(row_simplex(out.state_views, i, nx));
    out.current.actions[i] = sample(policy(sys.states[i], mu_views[i]), rng);
  }

  out.action_views = weighted_views(w, out.current.actions, nu);
  out.rewards.resize(n);
  out.next.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Simplex nu_view = row_simplex(out.action_views, i, nu);
    const std::size_t x = sys.states[i];
    const std::size_t u = out.current.actions[i];
    out.rewards[i] = env.reward(x, u, mu_views[i], nu_view);
    out.next.states[i] = sample(env.transition(x, u, mu_views[i], nu_view), rng);
  }
  return out;
}

double RolloutRecord::recompute_return() const {
  double total = 0.0;
  double discount = 1.0;
  for (const auto& step_rewards : rewards) {
    double mean = 0.0;
    for (double r : step_rewards) mean += r;
    total += discount * mean / static_cast<double>(step_rewards.size());
    discount *= gamma;
  }
  return total;
}

void RolloutRecord::write_csv(std::ostream& out) const {
  out << "t,agent,x,u,reward\n";
  const auto old_precision = out.precision(17);
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    for (std::size_t i = 0; i < rewards[t].size(); ++i) {
      out << t << ',' << i << ',' << states[t][i] << ',' << actions[t][i] << ','
          << rewards[t][i] << '\n';
    }
  }
  out.precision(old_precision);
}

RolloutRecord rollout(const EnvModel& env, const InteractionMatrix& w,
                      const PolicyFn& policy,
                      const std::vector<std::size_t>& initial_states,
                      std::size_t horizon, Rng& rng, const StepObserver& observer) {
  RolloutRecord record;
  record.gamma = env.gamma;
  AgentSystemState sys{initial_states, {}};
  double discount = 1.0;
  for (std::size_t t = 0; t <= horizon; ++t) {
    StepOutcome outcome = step(env, w, policy, sys, rng);
    if (observer) observer(t, outcome);
    double mean = 0.0;
    for (double r : outcome.rewards) mean += r;
    record.discounted_return += discount * mean / static_cast<double>(outcome.rewards.size());
    discount *= env.gamma;
    record.mu_n.push_back(empirical_distribution(outcome.current.states, env.n_states));
    record.nu_n.push_back(empirical_distribution(outcome.current.actions, env.n_actions));
    record.states.push_back(std::move(outcome.current.states));
    record.actions.push_back(std::move(outcome.current.actions));
    record.rewards.push_back(std::move(outcome.rewards));
    sys = std::move(outcome.next);
  }
  return record;
}

double rollout_return(const EnvModel& env, const InteractionMatrix& w,
                      const PolicyFn& policy,
                      const std::vector<std::size_t>& initial_states,
                      std::size_t horizon, Rng& rng) {
  AgentSystemState sys{initial_states, {}};
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t t = 0; t <= horizon; ++t) {
    StepOutcome outcome = step(env, w, policy, sys, rng);
    double mean = 0.0;
    for (double r : outcome.rewards) mean += r;
    total += discount * mean / static_cast<double>(outcome.rewards.size());
    discount *= env.gamma;
    sys = std::move(outcome.next);
  }
  return total;
}

VMarlEstimate estimate_v_marl(const EnvModel& env, const InteractionMatrix& w,
                              const PolicyFn& policy,
                              const std::vector<std::size_t>& initial_states,
                              std::size_t horizon, std::size_t episodes, Rng& rng) {
  if (episodes == 0) throw InputError("estimate_v_marl: episodes must be >= 1");
  const std::uint64_t base = rng();
  std::vector<double> returns(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng episode_rng = make_rng(base, e);
    returns[e] = rollout_return(env, w, policy, initial_states, horizon, episode_rng);
  }
  VMarlEstimate est;
  for (double r : returns) est.mean += r;
  est.mean /= static_cast<double>(episodes);
  if (episodes > 1) {
    double ss = 0.0;
    for (double r : returns) ss += (r - est.mean) * (r - est.mean);
    const double var = ss / static_cast<double>(episodes - 1);
    est.std_error = std::sqrt(var / static_cast<double>(episodes));
  }
  return est;
}

std::vector<std::size_t> sample_initial_states(const Simplex& mu0, std::size_t n,
                                               Rng& rng) {
  std::vector<std::size_t> states(n);
  for (auto& x : states) x = sample(mu0, rng);
  return states;
}

}  // namespace mfmarl
