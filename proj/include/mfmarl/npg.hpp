#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <deque>
#include <vector>

#include "mfmarl/meanfield.hpp"
#include "mfmarl/model.hpp"
#include "mfmarl/policy.hpp"
#include "mfmarl/rng.hpp"
#include "mfmarl/simplex.hpp"

namespace mfmarl {

enum class AdvantageEstimator {
  // Flip the Q/V coin at the accepted sample; the V branch resamples the
  // action before the continuation. E[A_hat] = Q - V.
  kCoinFirst,
  // Literal transcription: shared continuation from the accepted action, coin
  // flipped afterwards, continuation rewards counted after each update.
  // Zero-mean; kept for comparison only.
  kAsPrinted,
};

struct NPGConfig {
  double eta = 1e-3;    // outer step
  double alpha = 1e-3;  // inner SGD step
  std::size_t j_steps = 100;
  std::size_t l_steps = 100;
  double gamma = 0.9;
  std::vector<double> w0;  // empty means zeros
  std::uint64_t seed = 0;
  AdvantageEstimator estimator = AdvantageEstimator::kCoinFirst;
  double eval_tol = 1e-3;  // truncation tolerance of the per-iterate v_MF

  void validate() const;
};

struct OccupancySample {
  std::size_t x = 0;
  Simplex mu = Simplex::uniform(1);
  std::size_t u = 0;
  double a_hat = 0.0;
  std::size_t accept_time = 0;
};

// Lazily extended mean-field path mu_0, mu_1, ... for a fixed policy; the
// path does not depend on the sampled agent so every draw in one inner loop
// shares it.
class MeanFieldPath {
 public:
  MeanFieldPath(const EnvModel& env, PolicyFn policy, Simplex mu0);

  const MeanFieldStep& step(std::size_t t);
  const Simplex& mu0() const { return mu0_; }

 private:
  const EnvModel& env_;
  PolicyFn policy_;
  Simplex mu0_;
  std::deque<MeanFieldStep> steps_;  // stable references while growing
};

// One draw of (x, mu, u) from the discounted occupancy measure of the
// representative agent and an advantage estimate for it.
OccupancySample sample_occupancy(const EnvModel& env, MeanFieldPath& path, Rng& rng,
                                 AdvantageEstimator estimator = AdvantageEstimator::kCoinFirst);
OccupancySample sample_occupancy(const EnvModel& env, const PolicyConfig& policy_cfg,
                                 const PolicyParams& phi, const Simplex& mu0, Rng& rng,
                                 AdvantageEstimator estimator = AdvantageEstimator::kCoinFirst);

struct CompatibleSample {
  std::vector<double> grad;  // grad log pi at the sample
  double a_hat = 0.0;
};

// w_{l+1} = w_l - alpha (w_l . g - A_hat / (1 - gamma)) g; returns the average
// of w_1..w_L. Throws TrainingDivergenceError on a non-finite update.
std::vector<double> run_inner_sgd(std::span<const double> w0, std::size_t l_steps,
                                  double alpha, double gamma,
                                  const std::function<CompatibleSample(std::size_t)>& draw);

std::vector<double> inner_sgd(const EnvModel& env, const PolicyConfig& policy_cfg,
                              const PolicyParams& phi, const Simplex& mu0,
                              const NPGConfig& cfg, Rng& rng);

struct NPGTrainResult {
  double initial_value = 0.0;          // v_MF at phi0
  std::vector<PolicyParams> iterates;  // phi_1..phi_J
  std::vector<double> values;          // v_MF at each iterate
  std::vector<double> w_norms;
  std::vector<double> wall_ms;

  // Columns: j, v_mf, w_norm, wall_ms
  void write_log_csv(std::ostream& out) const;
};

NPGTrainResult npg_train(const EnvModel& env, const PolicyConfig& policy_cfg,
                         const PolicyParams& phi0, const Simplex& mu0,
                         const NPGConfig& cfg, Rng& rng);

struct PolicySelection {
  std::size_t index = 0;  // argmax of values, smallest index on ties
  PolicyParams best;
  double best_value = 0.0;
  double mean_value = 0.0;
};

PolicySelection select_policy(const std::vector<PolicyParams>& iterates,
                              const std::vector<double>& values);

}  // namespace mfmarl
