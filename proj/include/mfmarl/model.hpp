#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfmarl/rng.hpp"
#include "mfmarl/simplex.hpp"

namespace mfmarl {

// r(x, u, mu, nu) = a^T mu + b^T nu + f(x, u)
struct AffineRewardSpec {
  std::vector<double> a;               // |X|
  std::vector<double> b;               // |U|
  std::vector<std::vector<double>> f;  // |X| x |U|

  std::size_t n_states() const { return a.size(); }
  std::size_t n_actions() const { return b.size(); }
  // Throws InputError on ragged f or non-finite entries.
  void validate() const;
};

struct RewardConstants {
  double m_r = 0.0;  // |r| <= m_r
  double l_r = 0.0;  // Lipschitz constant in (mu, nu)
  double m_f = 0.0;  // |f| <= m_f
  double a_l1 = 0.0;
  double b_l1 = 0.0;
};

double affine_reward_eval(const AffineRewardSpec& spec, std::size_t x,
                          std::size_t u, const Simplex& mu, const Simplex& nu);

RewardConstants reward_constants(const AffineRewardSpec& spec);

using RewardFn = std::function<double(std::size_t x, std::size_t u,
                                      const Simplex& mu, const Simplex& nu)>;
using TransitionFn = std::function<Simplex(std::size_t x, std::size_t u,
                                           const Simplex& mu, const Simplex& nu)>;

// Finite-state, finite-action environment shared by every agent. States and
// actions are 0-based indices.
struct EnvModel {
  std::string name;
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  double gamma = 0.9;
  RewardFn reward;
  TransitionFn transition;
  // Declared Lipschitz constant of the transition in (mu, nu).
  double lipschitz_p = 0.0;
  // Upper bound on |r|; sets the truncation horizon of discounted sums.
  double reward_bound = 0.0;
  // Present iff the reward is affine in the mean-field arguments.
  std::optional<AffineRewardSpec> affine;

  // Throws InputError on bad dimensions, missing callables or gamma outside
  // [0, 1).
  void validate() const;
};

// Max |r| over a random sweep of (x, u, mu, nu), times 1.1.
double estimate_reward_bound(const EnvModel& env, std::size_t samples, Rng& rng);

// Network of firms choosing whether to invest in product quality.
// Quality labels are 1..q and map to state index label - 1; action 1 invests.
struct FirmModelConfig {
  int q = 10;
  int k = 5;
  double alpha_r = 1.0;
  double beta_r = 0.5;
  double lambda_r = 0.5;
  double sigma = 1.0;  // 1 gives the affine reward

  void validate() const;
};

// Next-quality law for a firm at quality label x with local average quality
// mu_bar. Investing adds floor(chi * c), chi ~ U[0, 1],
// c = (1 - mu_bar / q) (q - x); the increment law is computed in closed form.
Simplex firm_transition_distribution(const FirmModelConfig& cfg, int x, int u,
                                     double mu_bar);

// alpha_r x - beta_r mu_bar^sigma - lambda_r u, with mu_bar the mean quality
// label under mu_view.
double firm_reward(const FirmModelConfig& cfg, int x, int u,
                   const Simplex& mu_view);

double mean_quality(const FirmModelConfig& cfg, const Simplex& mu);

// a = -beta_r [1..q], b = 0, f(x, u) = alpha_r x - lambda_r u.
// Throws AffineRequiredError when sigma != 1.
AffineRewardSpec firm_affine_spec(const FirmModelConfig& cfg);

// Largest observed |P(mu1) - P(mu2)|_1 / |mu1 - mu2|_1 over random pairs.
// Half of the pairs are small perturbations moving mass between two states,
// which is where the ratio peaks.
double estimate_firm_lipschitz_p(const FirmModelConfig& cfg, std::size_t samples,
                                 Rng& rng);

inline constexpr std::size_t kLipschitzSamples = 100000;
inline constexpr double kLipschitzSafety = 1.1;

EnvModel build_firm_env(const FirmModelConfig& cfg, double gamma);

// Affine reward with transition P(x, u, mu, nu) = (1 - mix) K[x][u] + mix mu,
// whose Lipschitz constant is exactly `mix`.
EnvModel build_mixing_affine_env(AffineRewardSpec spec,
                                 std::vector<std::vector<Simplex>> base_kernel,
                                 double mix, double gamma);

}  // namespace mfmarl
