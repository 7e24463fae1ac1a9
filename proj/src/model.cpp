#include "mfmarl/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfmarl/errors.hpp"

namespace mfmarl {
namespace {

double l1_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += std::fabs(x);
  return acc;
}

// Concentrated simplex draws reach the faces and vertices that flat
// Dirichlet draws almost never visit.
Simplex spread_simplex(std::size_t n, Rng& rng) {
  Simplex p = random_simplex(n, rng);
  if (uniform01(rng) < 0.5) return p;
  std::vector<double> w(p.weights().begin(), p.weights().end());
  double total = 0.0;
  for (double& v : w) {
    v = v * v * v * v;
    total += v;
  }
  for (double& v : w) v /= total;
  return Simplex::from_weights(std::move(w));
}

constexpr std::uint64_t kEnvEstimationSeed = 0x5eed'f1f3;

}  // namespace

void AffineRewardSpec::validate() const {
  if (a.empty() || b.empty()) throw InputError("affine reward: empty a or b");
  if (f.size() != a.size()) throw InputError("affine reward: f has wrong rows");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(a.begin(), a.end(), finite) ||
      !std::all_of(b.begin(), b.end(), finite)) {
    throw InputError("affine reward: non-finite coefficient");
  }
  for (const auto& row : f) {
    if (row.size() != b.size()) throw InputError("affine reward: f has wrong columns");
    if (!std::all_of(row.begin(), row.end(), finite)) {
      throw InputError("affine reward: non-finite f entry");
    }
  }
}

double affine_reward_eval(const AffineRewardSpec& spec, std::size_t x,
                          std::size_t u, const Simplex& mu, const Simplex& nu) {
  if (mu.size() != spec.n_states() || nu.size() != spec.n_actions()) {
    throw InputError("affine reward: distribution dimension mismatch");
  }
  if (x >= spec.n_states() || u >= spec.n_actions()) {
    throw InputError("affine reward: state or action out of range");
  }
  return expectation(mu, spec.a) + expectation(nu, spec.b) + spec.f[x][u];
}

RewardConstants reward_constants(const AffineRewardSpec& spec) {
  spec.validate();
  RewardConstants c;
  c.a_l1 = l1_norm(spec.a);
  c.b_l1 = l1_norm(spec.b);
  for (const auto& row : spec.f) {
    for (double v : row) c.m_f = std::max(c.m_f, std::fabs(v));
  }
  c.m_r = c.a_l1 + c.b_l1 + c.m_f;
  c.l_r = std::max(c.a_l1, c.b_l1);
  return c;
}

void EnvModel::validate() const {
  if (n_states == 0 || n_actions == 0) throw InputError("env: empty state or action set");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("env: gamma must lie in [0, 1)");
  if (!reward || !transition) throw InputError("env: reward and transition are required");
  if (!(lipschitz_p >= 0.0) || !(reward_bound >= 0.0)) {
    throw InputError("env: constants must be nonnegative");
  }
  if (affine) {
    affine->validate();
    if (affine->n_states() != n_states || affine->n_actions() != n_actions) {
      throw InputError("env: affine spec dimension mismatch");
    }
  }
}

double estimate_reward_bound(const EnvModel& env, std::size_t samples, Rng& rng) {
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t x = uniform_index(rng, env.n_states);
    const std::size_t u = uniform_index(rng, env.n_actions);
    const Simplex mu = spread_simplex(env.n_states, rng);
    const Simplex nu = spread_simplex(env.n_actions, rng);
    best = std::max(best, std::fabs(env.reward(x, u, mu, nu)));
  }
  for (std::size_t x = 0; x < env.n_states; ++x) {
    for (std::size_t u = 0; u < env.n_actions; ++u) {
      for (std::size_t k = 0; k < env.n_states; ++k) {
        const Simplex mu = Simplex::point_mass(env.n_states, k);
        const Simplex nu = Simplex::point_mass(env.n_actions, u);
        best = std::max(best, std::fabs(env.reward(x, u, mu, nu)));
      }
    }
  }
  return kLipschitzSafety * best;
}

void FirmModelConfig::validate() const {
  if (q < 1) throw InputError("firm model: q must be >= 1");
  if (k < 1) throw InputError("firm model: k must be >= 1");
  if (!(sigma >= 1.0)) throw InputError("firm model: sigma must be >= 1");
  if (!std::isfinite(alpha_r) || !std::isfinite(beta_r) || !std::isfinite(lambda_r)) {
    throw InputError("firm model: reward coefficients must be finite");
  }
}

Simplex firm_transition_distribution(const FirmModelConfig& cfg, int x, int u,
                                     double mu_bar) {
  const int q = cfg.q;
  if (x < 1 || x > q) throw InputError("firm transition: quality out of range");
  if (u != 0 && u != 1) throw InputError("firm transition: action must be 0 or 1");
  constexpr double kDrift = 1e-9;
  if (!(mu_bar >= -kDrift && mu_bar <= q + kDrift)) {
    throw InputError("firm transition: mean quality " + std::to_string(mu_bar) +
                     " outside [0, q]");
  }
  mu_bar = std::clamp(mu_bar, 0.0, static_cast<double>(q));
  const std::size_t n = static_cast<std::size_t>(q);
  const std::size_t here = static_cast<std::size_t>(x - 1);
  const double c = (1.0 - mu_bar / q) * (q - x);
  if (u == 0 || c <= 0.0) return Simplex::point_mass(n, here);

  // floor(chi c) = m exactly when chi lies in [m/c, (m+1)/c).
  std::vector<double> w(n, 0.0);
  const int m_max = static_cast<int>(std::floor(c));
  for (int m = 0; m <= m_max; ++m) {
    const double p = std::min((m + 1) / c, 1.0) - m / c;
    w[here + static_cast<std::size_t>(m)] += std::max(p, 0.0);
  }
  return Simplex::from_weights(std::move(w));
}

double mean_quality(const FirmModelConfig& cfg, const Simplex& mu) {
  if (mu.size() != static_cast<std::size_t>(cfg.q)) {
    throw InputError("firm model: distribution has wrong size");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) acc += static_cast<double>(k + 1) * mu[k];
  return acc;
}

double firm_reward(const FirmModelConfig& cfg, int x, int u,
                   const Simplex& mu_view) {
  if (x < 1 || x > cfg.q) throw InputError("firm reward: quality out of range");
  if (u != 0 && u != 1) throw InputError("firm reward: action must be 0 or 1");
  const double mu_bar = mean_quality(cfg, mu_view);
  const double crowding = cfg.sigma == 1.0 ? mu_bar : std::pow(mu_bar, cfg.sigma);
  return cfg.alpha_r * x - cfg.beta_r * crowding - cfg.lambda_r * u;
}

AffineRewardSpec firm_affine_spec(const FirmModelConfig& cfg) {
  cfg.validate();
  if (cfg.sigma != 1.0) {
    throw AffineRequiredError("firm model with sigma != 1 has no affine reward");
  }
  AffineRewardSpec spec;
  const std::size_t n = static_cast<std::size_t>(cfg.q);
  spec.a.resize(n);
  spec.f.assign(n, std::vector<double>(2));
  for (std::size_t k = 0; k < n; ++k) {
    const double label = static_cast<double>(k + 1);
    spec.a[k] = -cfg.beta_r * label;
    spec.f[k][0] = cfg.alpha_r * label;
    spec.f[k][1] = cfg.alpha_r * label - cfg.lambda_r;
  }
  spec.b.assign(2, 0.0);
  return spec;
}

double estimate_firm_lipschitz_p(const FirmModelConfig& cfg, std::size_t samples,
                                 Rng& rng) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.q);
  if (n < 2) return 0.0;
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const int x = 1 + static_cast<int>(uniform_index(rng, n));
    const int u = static_cast<int>(uniform_index(rng, 2));
    const Simplex mu1 = spread_simplex(n, rng);
    Simplex mu2 = mu1;
    if (s % 2 == 0) {
      mu2 = spread_simplex(n, rng);
    } else {
      const std::size_t from = uniform_index(rng, n);
      std::size_t to = uniform_index(rng, n - 1);
      if (to >= from) ++to;
      const double shift = mu1[from] * 1e-3 * (0.5 + uniform01(rng));
      if (shift <= 0.0) continue;
      std::vector<double> w(mu1.weights().begin(), mu1.weights().end());
      w[from] -= shift;
      w[to] += shift;
      mu2 = Simplex::from_weights(std::move(w));
    }
    const double dmu = l1_distance(mu1, mu2);
    if (dmu <= 1e-12) continue;
    const Simplex p1 = firm_transition_distribution(cfg, x, u, mean_quality(cfg, mu1));
    const Simplex p2 = firm_transition_distribution(cfg, x, u, mean_quality(cfg, mu2));
    best = std::max(best, l1_distance(p1, p2) / dmu);
  }
  return best;
}

EnvModel build_firm_env(const FirmModelConfig& cfg, double gamma) {
  cfg.validate();
  EnvModel env;
  env.name = "firm";
  env.n_states = static_cast<std::size_t>(cfg.q);
  env.n_actions = 2;
  env.gamma = gamma;
  env.reward = [cfg](std::size_t x, std::size_t u, const Simplex& mu, const Simplex&) {
    return firm_reward(cfg, static_cast<int>(x) + 1, static_cast<int>(u), mu);
  };
  env.transition = [cfg](std::size_t x, std::size_t u, const Simplex& mu,
                         const Simplex&) {
    return firm_transition_distribution(cfg, static_cast<int>(x) + 1,
                                        static_cast<int>(u), mean_quality(cfg, mu));
  };
  Rng rng = make_rng(kEnvEstimationSeed, static_cast<std::uint64_t>(cfg.q));
  env.lipschitz_p =
      kLipschitzSafety * estimate_firm_lipschitz_p(cfg, kLipschitzSamples, rng);
  if (cfg.sigma == 1.0) {
    env.affine = firm_affine_spec(cfg);
    env.reward_bound = reward_constants(*env.affine).m_r;
  } else {
    Rng sweep = make_rng(kEnvEstimationSeed, static_cast<std::uint64_t>(cfg.q), 1);
    env.reward_bound = estimate_reward_bound(env, kLipschitzSamples, sweep);
  }
  env.validate();
  return env;
}

EnvModel build_mixing_affine_env(AffineRewardSpec spec,
                                 std::vector<std::vector<Simplex>> base_kernel,
                                 double mix, double gamma) {
  spec.validate();
  const std::size_t nx = spec.n_states();
  const std::size_t nu = spec.n_actions();
  if (base_kernel.size() != nx) throw InputError("mixing env: kernel has wrong rows");
  for (const auto& row : base_kernel) {
    if (row.size() != nu) throw InputError("mixing env: kernel has wrong columns");
    for (const Simplex& p : row) {
      if (p.size() != nx) throw InputError("mixing env: kernel entry has wrong size");
    }
  }
  if (!(mix >= 0.0 && mix <= 1.0)) throw InputError("mixing env: mix must lie in [0, 1]");
  EnvModel env;
  env.name = "mixing";
  env.n_states = nx;
  env.n_actions = nu;
  env.gamma = gamma;
  env.reward = [spec](std::size_t x, std::size_t u, const Simplex& mu, const Simplex& n) {
    return affine_reward_eval(spec, x, u, mu, n);
  };
  env.transition = [kernel = std::move(base_kernel), mix](
                       std::size_t x, std::size_t u, const Simplex& mu,
                       const Simplex&) {
    const Simplex& base = kernel[x][u];
    std::vector<double> w(base.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = (1.0 - mix) * base[k] + mix * mu[k];
    return Simplex::from_weights(std::move(w));
  };
  env.lipschitz_p = mix;
  env.reward_bound = reward_constants(spec).m_r;
  env.affine = std::move(spec);
  env.validate();
  return env;
}

}  // namespace mfmarl
