#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "mfmarl/errors.hpp"
#include "mfmarl/policy.hpp"

using namespace mfmarl;

namespace {

double log_prob(const PolicyConfig& cfg, const PolicyParams& phi, std::size_t x,
                const Simplex& mu, std::size_t u) {
  return std::log(action_distribution(cfg, phi, x, mu)[u]);
}

PolicyParams random_params(const PolicyConfig& cfg, Rng& rng, double scale) {
  PolicyParams phi(cfg.param_dim());
  for (auto& p : phi) p = scale * (2.0 * uniform01(rng) - 1.0);
  return phi;
}

}  // namespace

TEST_CASE("parameter layout") {
  const PolicyConfig cfg{10, 2, 32};
  CHECK(cfg.input_dim() == 20);
  CHECK(cfg.param_dim() == 32 * 20 + 32 + 2 * 32 + 2);
  CHECK(cfg.output_bias_offset() == cfg.param_dim() - 2);
  CHECK_THROWS_AS((PolicyConfig{10, 2, 0}.validate()), InputError);
}

TEST_CASE("initialization") {
  const PolicyConfig cfg{5, 3, 8};
  Rng rng = make_rng(1);
  const PolicyParams phi = init_params(cfg, rng);
  CHECK(phi.size() == cfg.param_dim());
  for (std::size_t i = 0; i < cfg.hidden_bias_offset(); ++i) CHECK(std::fabs(phi[i]) <= 0.1);
  for (std::size_t i = cfg.hidden_bias_offset(); i < cfg.output_weight_offset(); ++i) CHECK(phi[i] == 0.0);
  for (std::size_t i = cfg.output_bias_offset(); i < phi.size(); ++i) CHECK(phi[i] == 0.0);
}

TEST_CASE("action distribution") {
  const PolicyConfig cfg{4, 3, 6};
  const PolicyParams zero(cfg.param_dim(), 0.0);
  Rng rng = make_rng(2);
  for (int i = 0; i < 10; ++i) {
    const Simplex p = action_distribution(cfg, zero, uniform_index(rng, 4), random_simplex(4, rng));
    for (std::size_t u = 0; u < 3; ++u) CHECK(p[u] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  PolicyParams phi = random_params(cfg, rng, 1.0);
  PolicyParams shifted = phi;
  for (std::size_t u = 0; u < 3; ++u) shifted[cfg.output_bias_offset() + u] += 7.3;
  const Simplex mu = random_simplex(4, rng);
  const Simplex a = action_distribution(cfg, phi, 2, mu);
  const Simplex b = action_distribution(cfg, shifted, 2, mu);
  for (std::size_t u = 0; u < 3; ++u) CHECK(a[u] == doctest::Approx(b[u]).epsilon(1e-12));

  const PolicyConfig two{4, 2, 6};
  PolicyParams forced(two.param_dim(), 0.0);
  forced[two.output_bias_offset()] = 5.0;
  forced[two.output_bias_offset() + 1] = -5.0;
  const Simplex f = action_distribution(two, forced, 0, mu);
  const double hi = 1.0 / (1.0 + std::exp(-10.0));
  CHECK(f[0] == doctest::Approx(hi).epsilon(1e-14));
  CHECK(f[1] == doctest::Approx(1.0 - hi).epsilon(1e-10));
  CHECK(f[0] == doctest::Approx(0.9999546).epsilon(1e-7));

  PolicyParams huge(two.param_dim(), 0.0);
  huge[two.output_bias_offset()] = 800.0;
  const Simplex h = action_distribution(two, huge, 0, mu);
  CHECK(std::isfinite(h[0]));
  CHECK(h[0] == 1.0);

  CHECK_THROWS_AS(action_distribution(cfg, phi, 4, mu), InputError);
  CHECK_THROWS_AS(action_distribution(cfg, phi, 0, Simplex::uniform(3)), InputError);
  PolicyParams short_phi(cfg.param_dim() - 1, 0.0);
  CHECK_THROWS_AS(action_distribution(cfg, short_phi, 0, mu), InputError);
}

TEST_CASE("log-gradient matches central finite differences") {
  Rng rng = make_rng(3);
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const PolicyConfig cfg{2 + uniform_index(rng, 5), 2 + uniform_index(rng, 3), 1 + uniform_index(rng, 12)};
    const PolicyParams phi = random_params(cfg, rng, 0.8);
    const std::size_t x = uniform_index(rng, cfg.n_states);
    const Simplex mu = random_simplex(cfg.n_states, rng);
    const std::size_t u = uniform_index(rng, cfg.n_actions);
    const auto g = log_policy_gradient(cfg, phi, x, mu, u);
    REQUIRE(g.size() == cfg.param_dim());
    std::vector<double> fd(g.size());
    PolicyParams probe = phi;
    for (std::size_t i = 0; i < g.size(); ++i) {
      probe[i] = phi[i] + h;
      const double up = log_prob(cfg, probe, x, mu, u);
      probe[i] = phi[i] - h;
      const double down = log_prob(cfg, probe, x, mu, u);
      probe[i] = phi[i];
      fd[i] = (up - down) / (2.0 * h);
    }
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      diff = std::max(diff, std::fabs(g[i] - fd[i]));
      norm = std::max(norm, std::fabs(fd[i]));
    }
    CHECK(diff / std::max(norm, 1e-8) <= 1e-4);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("score function has zero mean") {
  Rng rng = make_rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const PolicyConfig cfg{5, 3, 7};
    const PolicyParams phi = random_params(cfg, rng, 1.0);
    const std::size_t x = uniform_index(rng, 5);
    const Simplex mu = random_simplex(5, rng);
    const Simplex p = action_distribution(cfg, phi, x, mu);
    std::vector<double> acc(cfg.param_dim(), 0.0);
    for (std::size_t u = 0; u < 3; ++u) {
      const auto g = log_policy_gradient(cfg, phi, x, mu, u);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += p[u] * g[i];
    }
    for (double a : acc) CHECK(std::fabs(a) <= 1e-8);
  }
}

TEST_CASE("gradient at zero parameters") {
  const PolicyConfig cfg{3, 2, 4};
  const PolicyParams zero(cfg.param_dim(), 0.0);
  const auto g = log_policy_gradient(cfg, zero, 1, Simplex::uniform(3), 0);
  CHECK(g[cfg.output_bias_offset()] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g[cfg.output_bias_offset() + 1] == doctest::Approx(-0.5).epsilon(1e-15));
  for (std::size_t i = 0; i < cfg.output_weight_offset(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("gradient norms stay finite") {
  const PolicyConfig cfg{10, 2, 32};
  Rng rng = make_rng(5);
  const PolicyParams phi = random_params(cfg, rng, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const auto g = log_policy_gradient(cfg, phi, uniform_index(rng, 10), random_simplex(10, rng),
                                       uniform_index(rng, 2));
    double n2 = 0.0;
    for (double v : g) n2 += v * v;
    CHECK(std::isfinite(n2));
  }
}

TEST_CASE("sampled Lipschitz constant in mu") {
  const PolicyConfig cfg{6, 2, 8};
  const PolicyParams zero(cfg.param_dim(), 0.0);
  Rng r0 = make_rng(6);
  CHECK(estimate_lipschitz_lq(cfg, zero, 500, r0) == 0.0);

  Rng init = make_rng(7);
  const PolicyParams phi = random_params(cfg, init, 1.0);
  double prev = 0.0;
  for (std::size_t trials : {1u, 10u, 100u, 1000u}) {
    Rng r = make_rng(8);
    const double est = estimate_lipschitz_lq(cfg, phi, trials, r);
    CHECK(est >= prev);
    prev = est;
  }

  PolicyParams doubled = phi;
  for (std::size_t i = 0; i < cfg.hidden_bias_offset(); ++i) doubled[i] *= 2.0;
  Rng a = make_rng(9);
  Rng b = make_rng(9);
  CHECK(estimate_lipschitz_lq(cfg, doubled, 2000, a) >= estimate_lipschitz_lq(cfg, phi, 2000, b));
}

TEST_CASE("checkpoint round trip") {
  const PolicyConfig cfg{4, 2, 5};
  Rng rng = make_rng(10);
  const PolicyParams phi = random_params(cfg, rng, 1.0);
  std::stringstream ss;
  write_checkpoint(ss, cfg, phi);
  const NeuralPolicy back = read_checkpoint(ss);
  CHECK(back.cfg.n_states == 4);
  CHECK(back.cfg.n_actions == 2);
  CHECK(back.cfg.hidden == 5);
  CHECK(back.phi == phi);

  std::stringstream bad("{\"format\":\"other\"}\n1,2\n");
  CHECK_THROWS_AS(read_checkpoint(bad), InputError);
}
