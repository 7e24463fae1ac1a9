#include "mfmarl/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "mfmarl/errors.hpp"
#include "mfmarl/nagent.hpp"

namespace mfmarl {
namespace {

using nlohmann::json;

constexpr double kValueGuard = 1e-9;
// Stream tags under the experiment seed. Cells use (N, seed + 1).
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kLipschitzStream = 3;
constexpr std::uint64_t kInteractionStream = 4;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw InputError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("bad value for '") + key + "' in " + where);
  }
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("config: gamma must lie in [0, 1)");
  if (n_list.empty()) throw InputError("config: n_list must be nonempty");
  for (std::size_t n : n_list) {
    if (n == 0) throw InputError("config: population sizes must be >= 1");
  }
  if (seeds == 0) throw InputError("config: seeds must be >= 1");
  if (episodes_per_seed == 0) throw InputError("config: episodes_per_seed must be >= 1");
  if (hidden_width == 0) throw InputError("config: hidden_width must be >= 1");
  if (!(horizon_tol > 0.0)) throw InputError("config: horizon_tol must be positive");
  if (!mu0.empty() && mu0.size() != static_cast<std::size_t>(model.q)) {
    throw InputError("config: mu0 must have q entries");
  }
  static const std::set<std::string> kinds = {"ring", "symmetric", "uniform", "sinkhorn"};
  if (!kinds.count(interaction)) throw InputError("config: unknown interaction '" + interaction + "'");
  npg.validate();
  if (threads == 0) throw InputError("config: threads must be >= 1");
}

Simplex ExperimentConfig::initial_distribution() const {
  if (mu0.empty()) return Simplex::uniform(static_cast<std::size_t>(model.q));
  return Simplex::from_weights(mu0);
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(root,
                 {"model", "gamma", "n_list", "seeds", "npg", "episodes_per_seed",
                  "horizon_tol", "mu0", "interaction", "output", "seed", "threads"},
                 "config");
  ExperimentConfig cfg;
  std::optional<double> model_gamma;
  if (root.contains("model")) {
    const json& m = root.at("model");
    reject_unknown(m, {"q", "k", "alpha_r", "beta_r", "lambda_r", "sigma", "gamma"}, "model");
    read_field(m, "q", cfg.model.q, "model");
    read_field(m, "k", cfg.model.k, "model");
    read_field(m, "alpha_r", cfg.model.alpha_r, "model");
    read_field(m, "beta_r", cfg.model.beta_r, "model");
    read_field(m, "lambda_r", cfg.model.lambda_r, "model");
    read_field(m, "sigma", cfg.model.sigma, "model");
    if (m.contains("gamma")) {
      double g = 0.0;
      read_field(m, "gamma", g, "model");
      model_gamma = g;
    }
  }
  if (root.contains("gamma")) {
    read_field(root, "gamma", cfg.gamma, "config");
    if (model_gamma && *model_gamma != cfg.gamma) {
      throw InputError("config: model.gamma and gamma disagree");
    }
  } else if (model_gamma) {
    cfg.gamma = *model_gamma;
  }
  read_field(root, "n_list", cfg.n_list, "config");
  read_field(root, "seeds", cfg.seeds, "config");
  read_field(root, "episodes_per_seed", cfg.episodes_per_seed, "config");
  read_field(root, "horizon_tol", cfg.horizon_tol, "config");
  read_field(root, "interaction", cfg.interaction, "config");
  read_field(root, "output", cfg.output, "config");
  read_field(root, "seed", cfg.seed, "config");
  read_field(root, "threads", cfg.threads, "config");
  if (root.contains("mu0")) {
    const json& m = root.at("mu0");
    if (m.is_string()) {
      if (m.get<std::string>() != "uniform") throw InputError("config: mu0 must be \"uniform\" or an array");
      cfg.mu0.clear();
    } else {
      read_field(root, "mu0", cfg.mu0, "config");
    }
  }
  if (root.contains("npg")) {
    const json& n = root.at("npg");
    reject_unknown(n, {"eta", "alpha", "j_steps", "l_steps", "hidden_width", "estimator", "eval_tol"},
                   "npg");
    read_field(n, "eta", cfg.npg.eta, "npg");
    read_field(n, "alpha", cfg.npg.alpha, "npg");
    read_field(n, "j_steps", cfg.npg.j_steps, "npg");
    read_field(n, "l_steps", cfg.npg.l_steps, "npg");
    read_field(n, "hidden_width", cfg.hidden_width, "npg");
    read_field(n, "eval_tol", cfg.npg.eval_tol, "npg");
    if (n.contains("estimator")) {
      std::string name;
      read_field(n, "estimator", name, "npg");
      if (name == "coin_first") {
        cfg.npg.estimator = AdvantageEstimator::kCoinFirst;
      } else if (name == "as_printed") {
        cfg.npg.estimator = AdvantageEstimator::kAsPrinted;
      } else {
        throw InputError("npg: unknown estimator '" + name + "'");
      }
    }
  }
  cfg.npg.gamma = cfg.gamma;
  cfg.npg.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = {{"q", cfg.model.q},           {"k", cfg.model.k},
                {"alpha_r", cfg.model.alpha_r}, {"beta_r", cfg.model.beta_r},
                {"lambda_r", cfg.model.lambda_r}, {"sigma", cfg.model.sigma},
                {"gamma", cfg.gamma}};
  j["n_list"] = cfg.n_list;
  j["seeds"] = cfg.seeds;
  j["npg"] = {{"eta", cfg.npg.eta},
              {"alpha", cfg.npg.alpha},
              {"j_steps", cfg.npg.j_steps},
              {"l_steps", cfg.npg.l_steps},
              {"hidden_width", cfg.hidden_width},
              {"estimator", cfg.npg.estimator == AdvantageEstimator::kCoinFirst ? "coin_first"
                                                                                 : "as_printed"},
              {"eval_tol", cfg.npg.eval_tol}};
  j["episodes_per_seed"] = cfg.episodes_per_seed;
  j["horizon_tol"] = cfg.horizon_tol;
  if (cfg.mu0.empty()) {
    j["mu0"] = "uniform";
  } else {
    j["mu0"] = cfg.mu0;
  }
  j["interaction"] = cfg.interaction;
  j["output"] = cfg.output;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

InteractionMatrix build_interaction(const ExperimentConfig& cfg, std::size_t n) {
  const auto k = static_cast<std::size_t>(cfg.model.k);
  if (cfg.interaction == "uniform") return InteractionMatrix::uniform(n);
  if (cfg.interaction == "symmetric") return InteractionMatrix::symmetric_window(n, k);
  if (cfg.interaction == "sinkhorn") {
    Rng rng = make_rng(cfg.seed, kInteractionStream, n);
    return InteractionMatrix::sinkhorn_random(n, rng);
  }
  return InteractionMatrix::ring_k_neighbor(n, k);
}

TrainedPolicy train_policy(const ExperimentConfig& cfg, const EnvModel& env) {
  PolicyConfig pcfg{env.n_states, env.n_actions, cfg.hidden_width};
  Rng init_rng = make_rng(cfg.seed, kInitStream);
  const PolicyParams phi0 = init_params(pcfg, init_rng);
  Rng train_rng = make_rng(cfg.seed, kTrainStream);
  NPGConfig npg = cfg.npg;
  npg.gamma = env.gamma;
  TrainedPolicy out;
  out.training = npg_train(env, pcfg, phi0, cfg.initial_distribution(), npg, train_rng);
  out.selection = select_policy(out.training.iterates, out.training.values);
  out.policy = NeuralPolicy{pcfg, out.selection.best};
  return out;
}

void ExperimentResult::write_csv(std::ostream& out) const {
  out << "N,seed,v_marl_mean,v_marl_stderr,v_mf,error_pct\n";
  for (const ResultRow& r : rows) {
    out << r.n << ',' << r.seed << ',' << format_double(r.v_marl_mean) << ','
        << format_double(r.v_marl_stderr) << ',' << format_double(r.v_mf) << ','
        << format_double(r.error_pct) << '\n';
  }
}

double percentage_error(double v_marl, double v_mf) {
  if (std::fabs(v_mf) < kValueGuard) {
    throw DivisionGuardError("mean-field value is ~0; percentage error undefined");
  }
  return std::fabs(v_marl - v_mf) / std::fabs(v_mf) * 100.0;
}

ExperimentResult run_error_vs_n(const ExperimentConfig& cfg, const EnvModel& env,
                                const NeuralPolicy& policy) {
  cfg.validate();
  const std::size_t horizon = truncation_horizon(env.gamma, env.reward_bound, cfg.horizon_tol);
  const Simplex mu0 = cfg.initial_distribution();

  std::map<std::size_t, InteractionMatrix> matrices;
  for (std::size_t n : cfg.n_list) {
    if (!matrices.count(n)) matrices.emplace(n, build_interaction(cfg, n));
  }

  struct Cell {
    std::size_t n;
    std::size_t seed;
    std::optional<ResultRow> row;
    std::string skip_reason;
  };
  std::vector<Cell> cells;
  for (std::size_t n : cfg.n_list) {
    for (std::size_t s = 0; s < cfg.seeds; ++s) cells.push_back(Cell{n, s, std::nullopt, {}});
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.n != b.n ? a.n < b.n : a.seed < b.seed;
  });
  cells.erase(std::unique(cells.begin(), cells.end(),
                          [](const Cell& a, const Cell& b) { return a.n == b.n && a.seed == b.seed; }),
              cells.end());

  const PolicyFn policy_fn = policy;
  auto run_cell = [&](Cell& cell) {
    Rng rng = make_rng(cfg.seed, cell.n, cell.seed + 1);
    const std::vector<std::size_t> initial = sample_initial_states(mu0, cell.n, rng);
    const Simplex empirical = empirical_distribution(initial, env.n_states);
    const double v_mf = mf_value_with_horizon(env, policy_fn, empirical, horizon).value;
    const VMarlEstimate est = estimate_v_marl(env, matrices.at(cell.n), policy_fn, initial,
                                              horizon, cfg.episodes_per_seed, rng);
    try {
      cell.row = ResultRow{cell.n, cell.seed, est.mean, est.std_error, v_mf,
                           percentage_error(est.mean, v_mf)};
    } catch (const DivisionGuardError& e) {
      cell.skip_reason = e.what();
    }
  };

  const std::size_t workers = std::min(cfg.threads, cells.size());
  if (workers <= 1) {
    for (Cell& cell : cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          try {
            run_cell(cells[i]);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  ExperimentResult result;
  result.horizon = horizon;
  for (const Cell& cell : cells) {
    if (cell.row) {
      result.rows.push_back(*cell.row);
    } else {
      result.skipped.push_back(SkippedCell{cell.n, cell.seed, cell.skip_reason});
    }
  }
  return result;
}

std::vector<SummaryRow> summarize(const ExperimentResult& result) {
  if (result.rows.empty()) throw InputError("summarize: no rows");
  std::map<std::size_t, std::vector<double>> by_n;
  for (const ResultRow& r : result.rows) by_n[r.n].push_back(r.error_pct);
  std::vector<SummaryRow> out;
  for (const auto& [n, errors] : by_n) {
    SummaryRow s;
    s.n = n;
    for (double e : errors) s.mean_error += e;
    s.mean_error /= static_cast<double>(errors.size());
    double ss = 0.0;
    for (double e : errors) ss += (e - s.mean_error) * (e - s.mean_error);
    s.std_error = std::sqrt(ss / static_cast<double>(errors.size()));
    s.mean_error_sqrt_n = s.mean_error * std::sqrt(static_cast<double>(n));
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << "N,mean_error,std_error,mean_error_sqrtN\n";
  for (const SummaryRow& s : summary) {
    out << s.n << ',' << format_double(s.mean_error) << ',' << format_double(s.std_error)
        << ',' << format_double(s.mean_error_sqrt_n) << '\n';
  }
}

BoundReport approximation_bound_report(const ExperimentConfig& cfg, const EnvModel& env,
                                 const NeuralPolicy& policy) {
  if (!env.affine) {
    throw AffineRequiredError("the approximation bound needs an affine reward (sigma = 1)");
  }
  BoundReport report;
  Rng rng = make_rng(cfg.seed, kLipschitzStream);
  report.l_q = estimate_lipschitz_lq(policy.cfg, policy.phi, kLipschitzQTrials, rng);
  report.inputs = bound_inputs_for(env, report.l_q, 1);
  report.constants = bound_constants(report.inputs);
  const double gsp = env.gamma * report.constants.s_p;
  if (gsp >= 1.0) {
    report.applicable = false;
    std::ostringstream msg;
    msg << "bound inapplicable (gamma*S_P = " << gsp << " >= 1)";
    report.message = msg.str();
    return report;
  }
  report.applicable = true;
  report.message = "bound applicable";
  for (std::size_t n : cfg.n_list) {
    BoundInputs inp = report.inputs;
    inp.n_agents = n;
    report.bounds.emplace_back(n, approximation_bound(inp));
  }
  return report;
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("SHA-1 context allocation failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string checkpoint_text(const NeuralPolicy& policy) {
  std::ostringstream out;
  write_checkpoint(out, policy.cfg, policy.phi);
  return out.str();
}

}  // namespace mfmarl
