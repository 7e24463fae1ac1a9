#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfmarl/rng.hpp"

namespace mfmarl {

inline constexpr double kSimplexTol = 1e-9;

// Probability vector over a finite index set {0, ..., size-1}.
class Simplex {
 public:
  // Validates nonnegativity and |sum - 1| <= tol, then renormalizes the
  // residual drift. Throws InputError otherwise.
  static Simplex from_weights(std::vector<double> weights,
                              double tol = kSimplexTol);
  static Simplex point_mass(std::size_t size, std::size_t index);
  static Simplex uniform(std::size_t size);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t k) const { return weights_[k]; }
  std::span<const double> weights() const { return weights_; }

  bool operator==(const Simplex&) const = default;

 private:
  explicit Simplex(std::vector<double> weights) : weights_(std::move(weights)) {}
  std::vector<double> weights_;
};

// Fraction of samples equal to each index.
Simplex empirical_distribution(std::span<const std::size_t> samples,
                               std::size_t set_size);

double l1_distance(const Simplex& p, const Simplex& q);

// Inverse-CDF draw; consumes exactly one uniform from rng.
std::size_t sample(const Simplex& p, Rng& rng);

double expectation(const Simplex& p, std::span<const double> values);

// Flat Dirichlet draw (uniform on the simplex).
Simplex random_simplex(std::size_t size, Rng& rng);

}  // namespace mfmarl
