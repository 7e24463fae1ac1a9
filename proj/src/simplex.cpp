#include "mfmarl/simplex.hpp"

#include <cmath>
#include <string>

#include "mfmarl/errors.hpp"
#include "mfmarl/simd/kernels.hpp"

namespace mfmarl {

Simplex Simplex::from_weights(std::vector<double> weights, double tol) {
  if (weights.empty()) throw InputError("simplex must be nonempty");
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double w = weights[k];
    if (!std::isfinite(w) || w < 0.0) {
      throw InputError("simplex entry " + std::to_string(k) +
                       " is negative or non-finite: " + std::to_string(w));
    }
    total += w;
  }
  if (std::fabs(total - 1.0) > tol) {
    throw InputError("simplex entries sum to " + std::to_string(total) +
                     ", expected 1");
  }
  if (total != 1.0) {
    for (double& w : weights) w /= total;
  }
  return Simplex(std::move(weights));
}

Simplex Simplex::point_mass(std::size_t size, std::size_t index) {
  if (index >= size) throw InputError("point mass index out of range");
  std::vector<double> w(size, 0.0);
  w[index] = 1.0;
  return Simplex(std::move(w));
}

Simplex Simplex::uniform(std::size_t size) {
  if (size == 0) throw InputError("simplex must be nonempty");
  return Simplex(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Simplex empirical_distribution(std::span<const std::size_t> samples,
                               std::size_t set_size) {
  if (samples.empty()) throw InputError("empirical distribution of no samples");
  if (set_size == 0) throw InputError("set size must be positive");
  std::vector<std::size_t> counts(set_size, 0);
  for (std::size_t s : samples) {
    if (s >= set_size) {
      throw InputError("sample index " + std::to_string(s) +
                       " out of range for set size " + std::to_string(set_size));
    }
    ++counts[s];
  }
  std::vector<double> w(set_size);
  const double n = static_cast<double>(samples.size());
  for (std::size_t k = 0; k < set_size; ++k) {
    w[k] = static_cast<double>(counts[k]) / n;
  }
  return Simplex::from_weights(std::move(w));
}

double l1_distance(const Simplex& p, const Simplex& q) {
  if (p.size() != q.size()) throw InputError("l1_distance: length mismatch");
  return simd::l1_diff(p.weights(), q.weights());
}

std::size_t sample(const Simplex& p, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    last_positive = k;
    cumulative += p[k];
    if (u < cumulative) return k;
  }
  return last_positive;
}

double expectation(const Simplex& p, std::span<const double> values) {
  if (p.size() != values.size()) {
    throw InputError("expectation: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += p[k] * values[k];
  return acc;
}

Simplex random_simplex(std::size_t size, Rng& rng) {
  if (size == 0) throw InputError("simplex must be nonempty");
  std::vector<double> w(size);
  double total = 0.0;
  for (double& v : w) {
    // 1 - u lies in (0, 1], so the log is finite.
    v = -std::log(1.0 - uniform01(rng));
    total += v;
  }
  for (double& v : w) v /= total;
  return Simplex::from_weights(std::move(w));
}

}  // namespace mfmarl
