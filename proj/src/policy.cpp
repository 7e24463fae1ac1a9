#include "mfmarl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <string>

#include "mfmarl/errors.hpp"
#include "mfmarl/simd/kernels.hpp"

namespace mfmarl {
namespace {

struct Forward {
  std::vector<double> input;
  std::vector<double> hidden;  // post-activation
  std::vector<double> probs;
};

void check_inputs(const PolicyConfig& cfg, const PolicyParams& phi,
                  std::size_t x, const Simplex& mu) {
  if (phi.size() != cfg.param_dim()) {
    throw InputError("policy: parameter vector has dimension " +
                     std::to_string(phi.size()) + ", expected " +
                     std::to_string(cfg.param_dim()));
  }
  if (x >= cfg.n_states) throw InputError("policy: state out of range");
  if (mu.size() != cfg.n_states) throw InputError("policy: mean-field has wrong size");
}

Forward forward(const PolicyConfig& cfg, const PolicyParams& phi, std::size_t x,
                const Simplex& mu) {
  check_inputs(cfg, phi, x, mu);
  const std::size_t in = cfg.input_dim();
  const std::size_t h = cfg.hidden;
  const std::size_t na = cfg.n_actions;
  const std::span<const double> params(phi);

  Forward f;
  f.input.assign(in, 0.0);
  f.input[x] = 1.0;
  std::copy(mu.weights().begin(), mu.weights().end(), f.input.begin() + cfg.n_states);

  f.hidden.resize(h);
  simd::gemv(params.subspan(0, h * in), h, in, f.input, f.hidden);
  for (std::size_t j = 0; j < h; ++j) {
    f.hidden[j] = std::tanh(f.hidden[j] + phi[cfg.hidden_bias_offset() + j]);
  }

  std::vector<double> logits(na);
  simd::gemv(params.subspan(cfg.output_weight_offset(), na * h), na, h, f.hidden, logits);
  double top = -INFINITY;
  for (std::size_t a = 0; a < na; ++a) {
    logits[a] += phi[cfg.output_bias_offset() + a];
    top = std::max(top, logits[a]);
  }
  f.probs.resize(na);
  double total = 0.0;
  for (std::size_t a = 0; a < na; ++a) {
    f.probs[a] = std::exp(logits[a] - top);
    total += f.probs[a];
  }
  for (double& p : f.probs) p /= total;
  return f;
}

}  // namespace

void PolicyConfig::validate() const {
  if (n_states == 0 || n_actions == 0) throw InputError("policy: empty state or action set");
  if (hidden == 0) throw InputError("policy: hidden width must be >= 1");
}

PolicyParams init_params(const PolicyConfig& cfg, Rng& rng) {
  cfg.validate();
  PolicyParams phi(cfg.param_dim(), 0.0);
  auto draw = [&rng] { return 0.2 * uniform01(rng) - 0.1; };
  for (std::size_t i = 0; i < cfg.hidden_bias_offset(); ++i) phi[i] = draw();
  for (std::size_t i = cfg.output_weight_offset(); i < cfg.output_bias_offset(); ++i) {
    phi[i] = draw();
  }
  return phi;
}

Simplex action_distribution(const PolicyConfig& cfg, const PolicyParams& phi,
                            std::size_t x, const Simplex& mu) {
  return Simplex::from_weights(forward(cfg, phi, x, mu).probs);
}

std::vector<double> log_policy_gradient(const PolicyConfig& cfg,
                                        const PolicyParams& phi, std::size_t x,
                                        const Simplex& mu, std::size_t u) {
  if (u >= cfg.n_actions) throw InputError("policy: action out of range");
  const Forward f = forward(cfg, phi, x, mu);
  const std::size_t in = cfg.input_dim();
  const std::size_t h = cfg.hidden;
  const std::size_t na = cfg.n_actions;

  std::vector<double> grad(cfg.param_dim(), 0.0);
  const std::span<double> g(grad);

  // d log softmax(u) / d logits = e_u - probs
  std::vector<double> dlogits(na);
  for (std::size_t a = 0; a < na; ++a) dlogits[a] = (a == u ? 1.0 : 0.0) - f.probs[a];

  for (std::size_t a = 0; a < na; ++a) {
    simd::axpy(dlogits[a], f.hidden, g.subspan(cfg.output_weight_offset() + a * h, h));
    g[cfg.output_bias_offset() + a] = dlogits[a];
  }

  std::vector<double> dhidden(h);
  simd::gemv_t(std::span<const double>(phi).subspan(cfg.output_weight_offset(), na * h),
               na, h, dlogits, dhidden);
  for (std::size_t j = 0; j < h; ++j) {
    const double dpre = dhidden[j] * (1.0 - f.hidden[j] * f.hidden[j]);
    simd::axpy(dpre, f.input, g.subspan(j * in, in));
    g[cfg.hidden_bias_offset() + j] = dpre;
  }
  return grad;
}

double estimate_lipschitz_lq(const PolicyConfig& cfg, const PolicyParams& phi,
                             std::size_t trials, Rng& rng) {
  cfg.validate();
  if (trials == 0) throw InputError("estimate_lipschitz_lq: trials must be >= 1");
  const std::size_t n = cfg.n_states;
  double best = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t x = uniform_index(rng, n);
    const Simplex mu1 = random_simplex(n, rng);
    Simplex mu2 = random_simplex(n, rng);
    // Odd trials probe the local slope with a small step toward mu2.
    const double step = 1e-3 * (0.5 + uniform01(rng));
    if (t % 2 == 1) {
      std::vector<double> w(n);
      for (std::size_t k = 0; k < n; ++k) w[k] = (1.0 - step) * mu1[k] + step * mu2[k];
      mu2 = Simplex::from_weights(std::move(w));
    }
    const double dmu = l1_distance(mu1, mu2);
    if (dmu <= 1e-14) continue;
    const double dpi = l1_distance(action_distribution(cfg, phi, x, mu1),
                                   action_distribution(cfg, phi, x, mu2));
    best = std::max(best, dpi / dmu);
  }
  return best;
}

void write_checkpoint(std::ostream& out, const PolicyConfig& cfg,
                      const PolicyParams& phi) {
  if (phi.size() != cfg.param_dim()) throw InputError("checkpoint: dimension mismatch");
  nlohmann::ordered_json header;
  header["format"] = "mfmarl-policy";
  header["version"] = 1;
  header["n_states"] = cfg.n_states;
  header["n_actions"] = cfg.n_actions;
  header["hidden"] = cfg.hidden;
  header["d"] = phi.size();
  out << header.dump() << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (i) line << ',';
    line << phi[i];
  }
  out << line.str() << '\n';
}

NeuralPolicy read_checkpoint(std::istream& in) {
  std::string header_line;
  std::string values_line;
  if (!std::getline(in, header_line) || !std::getline(in, values_line)) {
    throw InputError("checkpoint: truncated file");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != "mfmarl-policy") {
    throw InputError("checkpoint: not an mfmarl policy file");
  }
  NeuralPolicy policy;
  policy.cfg.n_states = header.at("n_states").get<std::size_t>();
  policy.cfg.n_actions = header.at("n_actions").get<std::size_t>();
  policy.cfg.hidden = header.at("hidden").get<std::size_t>();
  policy.cfg.validate();
  const std::size_t d = header.at("d").get<std::size_t>();
  if (d != policy.cfg.param_dim()) throw InputError("checkpoint: d disagrees with shape");
  std::stringstream ss(values_line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      policy.phi.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw InputError("checkpoint: cannot parse '" + cell + "'");
    }
  }
  if (policy.phi.size() != d) throw InputError("checkpoint: wrong number of parameters");
  return policy;
}

}  // namespace mfmarl
