#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mfmarl/rng.hpp"
#include "mfmarl/simplex.hpp"

namespace mfmarl {

// Stationary policy: (state, mean-field state distribution) -> action law.
using PolicyFn = std::function<Simplex(std::size_t x, const Simplex& mu)>;

// One-hidden-layer tanh network over the features [one_hot(x), mu] with a
// softmax output.
struct PolicyConfig {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::size_t hidden = 32;

  std::size_t input_dim() const { return 2 * n_states; }
  // hidden weights, hidden biases, output weights, output biases
  std::size_t param_dim() const {
    return hidden * input_dim() + hidden + n_actions * hidden + n_actions;
  }
  std::size_t hidden_bias_offset() const { return hidden * input_dim(); }
  std::size_t output_weight_offset() const { return hidden_bias_offset() + hidden; }
  std::size_t output_bias_offset() const {
    return output_weight_offset() + n_actions * hidden;
  }
  void validate() const;
};

using PolicyParams = std::vector<double>;

// Weights i.i.d. U[-0.1, 0.1], biases zero.
PolicyParams init_params(const PolicyConfig& cfg, Rng& rng);

Simplex action_distribution(const PolicyConfig& cfg, const PolicyParams& phi,
                            std::size_t x, const Simplex& mu);

// Gradient of log pi(x, mu)(u) with respect to every parameter.
std::vector<double> log_policy_gradient(const PolicyConfig& cfg,
                                        const PolicyParams& phi, std::size_t x,
                                        const Simplex& mu, std::size_t u);

// Running maximum of |pi(x, mu1) - pi(x, mu2)|_1 / |mu1 - mu2|_1 over random
// (x, mu1, mu2); a sampled lower bound on the policy's Lipschitz constant.
// Trial t consumes the same draws whatever the total trial count.
double estimate_lipschitz_lq(const PolicyConfig& cfg, const PolicyParams& phi,
                             std::size_t trials, Rng& rng);

// Binds a network to its parameters.
struct NeuralPolicy {
  PolicyConfig cfg;
  PolicyParams phi;

  Simplex operator()(std::size_t x, const Simplex& mu) const {
    return action_distribution(cfg, phi, x, mu);
  }
};

// Checkpoint: one JSON header line, then one comma-separated line of
// parameters printed with round-trip precision.
void write_checkpoint(std::ostream& out, const PolicyConfig& cfg,
                      const PolicyParams& phi);
NeuralPolicy read_checkpoint(std::istream& in);

}  // namespace mfmarl
