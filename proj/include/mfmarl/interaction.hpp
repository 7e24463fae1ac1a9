#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mfmarl/rng.hpp"
#include "mfmarl/simplex.hpp"

namespace mfmarl {

struct ValidationReport {
  std::vector<double> row_deviation;  // |row sum - 1|
  std::vector<double> col_deviation;  // |column sum - 1|
  double min_entry = 0.0;
  double max_row_deviation = 0.0;
  double max_col_deviation = 0.0;
  bool passed = false;
};

// Checks row sums, column sums and entry signs of a row-major n x n matrix.
// Throws InputError when weights.size() != n * n.
ValidationReport validate_doubly_stochastic(std::span<const double> weights,
                                            std::size_t n, double tol);

// N x N doubly stochastic weight matrix; row i holds how much each agent j
// contributes to agent i's view of the population.
class InteractionMatrix {
 public:
  // Throws InputError unless the matrix is doubly stochastic within tol.
  static InteractionMatrix from_dense(std::vector<double> weights,
                                      std::size_t n, double tol = 1e-9);

  static InteractionMatrix uniform(std::size_t n);
  // W(i, j) = 1/k for (j - i) mod n in {1, ..., k}.
  static InteractionMatrix ring_k_neighbor(std::size_t n, std::size_t k);
  // W(i, j) = 1/k for the k nearest ring neighbours on both sides, offsets
  // {+-1, ..., +-k/2}; k must be even and k < n.
  static InteractionMatrix symmetric_window(std::size_t n, std::size_t k);
  // Positive random matrix balanced by alternating row/column normalization.
  static InteractionMatrix sinkhorn_random(std::size_t n, Rng& rng);

  std::size_t n_agents() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return weights_[i * n_ + j];
  }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(weights_).subspan(i * n_, n_);
  }
  std::span<const double> dense() const { return weights_; }

  // Row-major, comma separated, one matrix row per line.
  void write_csv(std::ostream& out) const;
  static InteractionMatrix read_csv(std::istream& in, double tol = 1e-9);

 private:
  InteractionMatrix(std::vector<double> weights, std::size_t n)
      : weights_(std::move(weights)), n_(n) {}
  std::vector<double> weights_;
  std::size_t n_ = 0;
};

// View of the population from agent i: entry k = sum_j W(i, j) [items_j == k].
Simplex weighted_view(const InteractionMatrix& w, std::size_t agent,
                      std::span<const std::size_t> items, std::size_t set_size);

// Views of every agent at once, row-major n x set_size.
std::vector<double> weighted_views(const InteractionMatrix& w,
                                   std::span<const std::size_t> items,
                                   std::size_t set_size);

}  // namespace mfmarl
