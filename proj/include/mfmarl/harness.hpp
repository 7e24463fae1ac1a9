#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfmarl/interaction.hpp"
#include "mfmarl/meanfield.hpp"
#include "mfmarl/model.hpp"
#include "mfmarl/npg.hpp"
#include "mfmarl/policy.hpp"

namespace mfmarl {

// Sweep of population sizes for the firm network: one mean-field policy is
// trained, then every (N, seed) cell compares the N-agent value against the
// mean-field value of the same initial states.
struct ExperimentConfig {
  FirmModelConfig model;
  double gamma = 0.9;
  std::vector<std::size_t> n_list = {10, 20, 50, 100, 200};
  std::size_t seeds = 25;
  NPGConfig npg;
  std::size_t hidden_width = 32;
  std::size_t episodes_per_seed = 10;
  double horizon_tol = 1e-3;
  std::vector<double> mu0;           // empty means uniform over qualities
  std::string interaction = "ring";  // ring | symmetric | uniform | sinkhorn
  std::string output = "results.csv";
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
  Simplex initial_distribution() const;
};

// Strict parse: unknown keys and wrong types throw InputError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_json(const ExperimentConfig& cfg);

InteractionMatrix build_interaction(const ExperimentConfig& cfg, std::size_t n);

struct TrainedPolicy {
  NeuralPolicy policy;
  NPGTrainResult training;
  PolicySelection selection;
};

TrainedPolicy train_policy(const ExperimentConfig& cfg, const EnvModel& env);

struct ResultRow {
  std::size_t n = 0;
  std::size_t seed = 0;
  double v_marl_mean = 0.0;
  double v_marl_stderr = 0.0;
  double v_mf = 0.0;
  double error_pct = 0.0;
};

struct SkippedCell {
  std::size_t n = 0;
  std::size_t seed = 0;
  std::string reason;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // sorted by (N, seed)
  std::vector<SkippedCell> skipped;
  std::size_t horizon = 0;

  void write_csv(std::ostream& out) const;
};

// |v_marl - v_mf| / |v_mf| * 100; throws DivisionGuardError for |v_mf| < 1e-9.
double percentage_error(double v_marl, double v_mf);

ExperimentResult run_error_vs_n(const ExperimentConfig& cfg, const EnvModel& env,
                                const NeuralPolicy& policy);

struct SummaryRow {
  std::size_t n = 0;
  double mean_error = 0.0;
  double std_error = 0.0;  // population standard deviation over seeds
  double mean_error_sqrt_n = 0.0;
};

std::vector<SummaryRow> summarize(const ExperimentResult& result);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);

struct BoundReport {
  bool applicable = false;
  std::string message;
  double l_q = 0.0;
  BoundInputs inputs;  // n_agents unset
  BoundConstants constants;
  std::vector<std::pair<std::size_t, double>> bounds;  // (N, bound)
};

inline constexpr std::size_t kLipschitzQTrials = 10000;

// Throws AffineRequiredError when the model reward is not affine.
BoundReport approximation_bound_report(const ExperimentConfig& cfg, const EnvModel& env,
                                 const NeuralPolicy& policy);

// Git blob id (SHA-1 of "blob <len>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);

std::string checkpoint_text(const NeuralPolicy& policy);

}  // namespace mfmarl
