// mfmarl: mean-field vs N-agent experiment runner.
//
//   mfmarl run   --config cfg.json [--out results.csv] [--seeds 25] [--n 10,20]
//                [--sigma 1.0] [--gamma 0.9] [--threads k] [--checkpoint p]
//   mfmarl bound --config cfg.json [--checkpoint p] [--results results.csv]
//   mfmarl train --config cfg.json --checkpoint p

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "mfmarl/errors.hpp"
#include "mfmarl/harness.hpp"
#include "mfmarl/simd/kernels.hpp"

namespace {

using namespace mfmarl;

struct Overrides {
  std::string config_path;
  std::string out;
  std::optional<std::size_t> seeds;
  std::vector<std::size_t> n_list;
  std::optional<double> sigma;
  std::optional<double> gamma;
  std::optional<std::size_t> threads;
  std::string checkpoint;
  std::string results;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = load_experiment_config(o.config_path);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.seeds) cfg.seeds = *o.seeds;
  if (!o.n_list.empty()) cfg.n_list = o.n_list;
  if (o.sigma) cfg.model.sigma = *o.sigma;
  if (o.gamma) {
    cfg.gamma = *o.gamma;
    cfg.npg.gamma = *o.gamma;
  }
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

struct PolicySource {
  NeuralPolicy policy;
  std::optional<TrainedPolicy> trained;
};

PolicySource obtain_policy(const ExperimentConfig& cfg, const EnvModel& env,
                           const std::string& checkpoint) {
  if (!checkpoint.empty()) {
    std::ifstream in(checkpoint);
    if (!in) throw InputError("cannot open checkpoint '" + checkpoint + "'");
    NeuralPolicy p = read_checkpoint(in);
    if (p.cfg.n_states != env.n_states || p.cfg.n_actions != env.n_actions) {
      throw InputError("checkpoint shape does not match the model");
    }
    return PolicySource{std::move(p), std::nullopt};
  }
  TrainedPolicy t = train_policy(cfg, env);
  NeuralPolicy p = t.policy;
  return PolicySource{std::move(p), std::move(t)};
}

void print_bound(const BoundReport& report) {
  std::cout << "L_P (declared) = " << report.inputs.l_p << "\n"
            << "L_Q (sampled)  = " << report.l_q << "\n"
            << "L_R = " << report.inputs.l_r << ", M_R = " << report.inputs.m_r
            << ", M_F = " << report.inputs.m_f << ", |b|_1 = " << report.inputs.b_l1 << "\n"
            << "S_P = " << report.constants.s_p << ", S_R = " << report.constants.s_r
            << ", C_P = " << report.constants.c_p << ", C_R = " << report.constants.c_r << "\n"
            << report.message << "\n";
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  const auto t0 = std::chrono::steady_clock::now();
  const EnvModel env = build_firm_env(cfg.model, cfg.gamma);
  PolicySource src = obtain_policy(cfg, env, o.checkpoint);
  const auto t1 = std::chrono::steady_clock::now();
  const ExperimentResult result = run_error_vs_n(cfg, env, src.policy);
  const auto t2 = std::chrono::steady_clock::now();
  const auto summary = summarize(result);

  std::ostringstream csv;
  result.write_csv(csv);
  write_file(cfg.output, csv.str());
  std::ostringstream summary_csv;
  write_summary_csv(summary_csv, summary);
  write_file(sibling(cfg.output, ".summary.csv"), summary_csv.str());

  nlohmann::ordered_json meta;
  meta["config"] = nlohmann::ordered_json::parse(experiment_config_json(cfg));
  meta["gamma_note"] = "discount factor is a configured default, not taken from a reference run";
  meta["simd_backend"] = std::string(simd::backend_name(simd::active_kernels().backend));
  meta["horizon"] = result.horizon;
  meta["declared_lipschitz_p"] = env.lipschitz_p;
  meta["reward_bound"] = env.reward_bound;
  meta["policy_checkpoint_hash"] = git_blob_hash(checkpoint_text(src.policy));
  if (src.trained) {
    meta["selected_iterate"] = src.trained->selection.index + 1;
    meta["selected_value"] = src.trained->selection.best_value;
    meta["mean_iterate_value"] = src.trained->selection.mean_value;
    meta["initial_value"] = src.trained->training.initial_value;
  } else {
    meta["policy_checkpoint"] = o.checkpoint;
  }
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  for (const auto& s : result.skipped) {
    skipped.push_back({{"N", s.n}, {"seed", s.seed}, {"reason", s.reason}});
  }
  meta["skipped"] = skipped;
  meta["wall_ms"] = {
      {"policy", std::chrono::duration<double, std::milli>(t1 - t0).count()},
      {"sweep", std::chrono::duration<double, std::milli>(t2 - t1).count()}};
  write_file(sibling(cfg.output, ".meta.json"), meta.dump(2) + "\n");

  std::cout << "N\tmean_error%\tstd\tmean*sqrt(N)\n";
  for (const auto& s : summary) {
    std::cout << s.n << '\t' << s.mean_error << '\t' << s.std_error << '\t'
              << s.mean_error_sqrt_n << '\n';
  }
  for (const auto& s : result.skipped) {
    std::cerr << "skipped N=" << s.n << " seed=" << s.seed << ": " << s.reason << '\n';
  }
  std::cout << "wrote " << cfg.output << '\n';
  return 0;
}

int cmd_bound(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  const EnvModel env = build_firm_env(cfg.model, cfg.gamma);
  if (!env.affine) {
    throw AffineRequiredError("the approximation bound needs an affine reward (sigma = 1)");
  }
  const PolicySource src = obtain_policy(cfg, env, o.checkpoint);
  const BoundReport report = approximation_bound_report(cfg, env, src.policy);
  print_bound(report);

  std::map<std::size_t, std::pair<double, std::size_t>> observed;
  if (!o.results.empty()) {
    std::ifstream in(o.results);
    if (!in) throw InputError("cannot open results '" + o.results + "'");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() != 6) continue;
      const std::size_t n = std::stoul(cells[0]);
      auto& acc = observed[n];
      acc.first += std::fabs(std::stod(cells[2]) - std::stod(cells[4]));
      ++acc.second;
    }
  }
  if (report.applicable) {
    std::cout << "N\tbound\tobserved_mean_abs_gap\n";
    for (const auto& [n, bound] : report.bounds) {
      std::cout << n << '\t' << bound << '\t';
      const auto it = observed.find(n);
      if (it != observed.end()) {
        std::cout << it->second.first / static_cast<double>(it->second.second);
      } else {
        std::cout << '-';
      }
      std::cout << '\n';
    }
  }
  return 0;
}

int cmd_train(const Overrides& o) {
  if (o.checkpoint.empty()) throw InputError("train needs --checkpoint");
  const ExperimentConfig cfg = resolve(o);
  const EnvModel env = build_firm_env(cfg.model, cfg.gamma);
  const TrainedPolicy trained = train_policy(cfg, env);
  write_file(o.checkpoint, checkpoint_text(trained.policy));
  std::ostringstream log;
  trained.training.write_log_csv(log);
  write_file(o.checkpoint + ".train.csv", log.str());
  std::cout << "initial v_MF " << trained.training.initial_value << ", best v_MF "
            << trained.selection.best_value << " at iterate " << trained.selection.index + 1
            << ", mean over iterates " << trained.selection.mean_value << '\n'
            << "wrote " << o.checkpoint << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field control vs N-agent RL with doubly stochastic interactions"};
  app.require_subcommand(1);
  Overrides o;

  auto* run = app.add_subcommand("run", "Percentage error vs population size");
  run->add_option("--config", o.config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", o.out, "Result CSV path");
  run->add_option("--seeds", o.seeds, "Seeds per population size");
  run->add_option("--n", o.n_list, "Population sizes")->delimiter(',');
  run->add_option("--sigma", o.sigma, "Reward nonlinearity exponent");
  run->add_option("--gamma", o.gamma, "Discount factor");
  run->add_option("--threads", o.threads, "Worker threads");
  run->add_option("--checkpoint", o.checkpoint, "Use this policy instead of training");

  auto* bound = app.add_subcommand("bound", "Evaluate the approximation bound");
  bound->add_option("--config", o.config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  bound->add_option("--checkpoint", o.checkpoint, "Use this policy instead of training");
  bound->add_option("--results", o.results, "Result CSV to compare against");
  bound->add_option("--gamma", o.gamma, "Discount factor");

  auto* train = app.add_subcommand("train", "Train the mean-field policy");
  train->add_option("--config", o.config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--checkpoint", o.checkpoint, "Output checkpoint")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(o);
    if (*bound) return cmd_bound(o);
    if (*train) return cmd_train(o);
  } catch (const BoundInapplicableError& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const AffineRequiredError& e) {
    std::cerr << "affine reward required: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
