#include "mfmarl/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "mfmarl/errors.hpp"
#include "mfmarl/simd/kernels.hpp"

namespace mfmarl {
namespace {

constexpr int kSinkhornMaxIterations = 10000;
constexpr double kSinkhornTol = 1e-10;

void check_items(std::span<const std::size_t> items, std::size_t n,
                 std::size_t set_size) {
  if (items.size() != n) {
    throw InputError("weighted view: expected " + std::to_string(n) +
                     " items, got " + std::to_string(items.size()));
  }
  for (std::size_t v : items) {
    if (v >= set_size) throw InputError("weighted view: item out of range");
  }
}

}  // namespace

ValidationReport validate_doubly_stochastic(std::span<const double> weights,
                                            std::size_t n, double tol) {
  if (n == 0 || weights.size() != n * n) {
    throw InputError("validate_doubly_stochastic: matrix is not square");
  }
  ValidationReport report;
  report.row_deviation.resize(n);
  report.col_deviation.assign(n, 0.0);
  std::vector<double> col_sum(n, 0.0);
  report.min_entry = weights[0];
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = weights[i * n + j];
      row_sum += v;
      col_sum[j] += v;
      report.min_entry = std::min(report.min_entry, v);
    }
    report.row_deviation[i] = std::fabs(row_sum - 1.0);
  }
  for (std::size_t j = 0; j < n; ++j) {
    report.col_deviation[j] = std::fabs(col_sum[j] - 1.0);
  }
  report.max_row_deviation =
      *std::max_element(report.row_deviation.begin(), report.row_deviation.end());
  report.max_col_deviation =
      *std::max_element(report.col_deviation.begin(), report.col_deviation.end());
  const bool finite = std::all_of(weights.begin(), weights.end(),
                                  [](double v) { return std::isfinite(v); });
  report.passed = finite && report.max_row_deviation <= tol &&
                  report.max_col_deviation <= tol && report.min_entry >= -tol;
  return report;
}

InteractionMatrix InteractionMatrix::from_dense(std::vector<double> weights,
                                                std::size_t n, double tol) {
  const ValidationReport report = validate_doubly_stochastic(weights, n, tol);
  if (!report.passed) {
    std::ostringstream msg;
    msg << "matrix is not doubly stochastic: max row deviation "
        << report.max_row_deviation << ", max column deviation "
        << report.max_col_deviation << ", min entry " << report.min_entry;
    throw InputError(msg.str());
  }
  for (double v : weights) {
    if (v > 1.0 + tol) throw InputError("matrix entry exceeds 1");
  }
  return InteractionMatrix(std::move(weights), n);
}

InteractionMatrix InteractionMatrix::uniform(std::size_t n) {
  if (n == 0) throw InputError("interaction matrix needs at least one agent");
  return InteractionMatrix(
      std::vector<double>(n * n, 1.0 / static_cast<double>(n)), n);
}

InteractionMatrix InteractionMatrix::ring_k_neighbor(std::size_t n,
                                                     std::size_t k) {
  if (n == 0) throw InputError("interaction matrix needs at least one agent");
  if (k == 0 || k > n) {
    throw InputError("ring neighbourhood size must satisfy 1 <= k <= n");
  }
  std::vector<double> w(n * n, 0.0);
  const double share = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t offset = 1; offset <= k; ++offset) {
      w[i * n + (i + offset) % n] = share;
    }
  }
  return InteractionMatrix(std::move(w), n);
}

InteractionMatrix InteractionMatrix::symmetric_window(std::size_t n,
                                                      std::size_t k) {
  if (k == 0 || k % 2 != 0 || k >= n) {
    throw InputError("symmetric window needs an even k with 0 < k < n");
  }
  std::vector<double> w(n * n, 0.0);
  const double share = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t offset = 1; offset <= k / 2; ++offset) {
      w[i * n + (i + offset) % n] = share;
      w[i * n + (i + n - offset) % n] = share;
    }
  }
  return InteractionMatrix(std::move(w), n);
}

InteractionMatrix InteractionMatrix::sinkhorn_random(std::size_t n, Rng& rng) {
  if (n == 0) throw InputError("interaction matrix needs at least one agent");
  std::vector<double> w(n * n);
  for (double& v : w) v = 0.05 + uniform01(rng);
  std::vector<double> col(n);
  for (int iter = 0; iter < kSinkhornMaxIterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = simd::sum(std::span<const double>(w).subspan(i * n, n));
      for (std::size_t j = 0; j < n; ++j) w[i * n + j] /= s;
    }
    std::fill(col.begin(), col.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) col[j] += w[i * n + j];
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) w[i * n + j] /= col[j];
    }
    const ValidationReport report = validate_doubly_stochastic(w, n, kSinkhornTol);
    if (report.passed) return InteractionMatrix(std::move(w), n);
  }
  throw InputError("Sinkhorn normalization did not converge");
}

void InteractionMatrix::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (j) out << ',';
      out << weights_[i * n_ + j];
    }
    out << '\n';
  }
  out.precision(old_precision);
}

InteractionMatrix InteractionMatrix::read_csv(std::istream& in, double tol) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InputError("interaction CSV: cannot parse '" + cell + "'");
      }
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw InputError("interaction CSV: ragged rows");
    ++rows;
  }
  if (rows == 0 || rows != cols) {
    throw InputError("interaction CSV: matrix is not square");
  }
  return from_dense(std::move(values), rows, tol);
}

Simplex weighted_view(const InteractionMatrix& w, std::size_t agent,
                      std::span<const std::size_t> items,
                      std::size_t set_size) {
  const std::size_t n = w.n_agents();
  if (agent >= n) throw InputError("weighted view: agent out of range");
  if (set_size == 0) throw InputError("weighted view: empty set");
  check_items(items, n, set_size);
  std::vector<double> view(set_size, 0.0);
  const auto row = w.row(agent);
  for (std::size_t j = 0; j < n; ++j) view[items[j]] += row[j];
  return Simplex::from_weights(std::move(view));
}

std::vector<double> weighted_views(const InteractionMatrix& w,
                                   std::span<const std::size_t> items,
                                   std::size_t set_size) {
  const std::size_t n = w.n_agents();
  if (set_size == 0) throw InputError("weighted view: empty set");
  check_items(items, n, set_size);
  // views = W * E with E the n x set_size indicator matrix, computed one
  // indicator column at a time.
  std::vector<double> indicator(n);
  std::vector<double> column(n);
  std::vector<double> views(n * set_size);
  for (std::size_t k = 0; k < set_size; ++k) {
    for (std::size_t j = 0; j < n; ++j) indicator[j] = items[j] == k ? 1.0 : 0.0;
    simd::gemv(w.dense(), n, n, indicator, column);
    for (std::size_t i = 0; i < n; ++i) views[i * set_size + k] = column[i];
  }
  return views;
}

}  // namespace mfmarl
