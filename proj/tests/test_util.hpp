#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "toc/matrix.hpp"

namespace toc::testing {

// The two-tuple example: [a..e] and [f, g, c, d, e] with a..g = 1..7.
inline SparseRowMatrix toy_matrix() {
  return SparseRowMatrix(5, {{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}},
                             {{0, 6}, {1, 7}, {2, 3}, {3, 4}, {4, 5}}});
}

// Values drawn from a small alphabet so the dictionary finds repeats.
inline SparseRowMatrix random_sparse(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double density,
                                     std::size_t alphabet) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet - 1);
  SparseRowMatrix s(cols);
  std::vector<ColumnValuePair> row;
  for (std::size_t r = 0; r < rows; ++r) {
    row.clear();
    for (std::size_t c = 0; c < cols; ++c) {
      if (unit(rng) >= density) continue;
      const auto sym = pick(rng);
      row.push_back({static_cast<std::uint32_t>(c), (sym % 2 ? -1.0 : 1.0) * (0.5 + 0.375 * double(sym))});
    }
    s.append_row(row);
  }
  return s;
}

// Rows copied from a few random templates, the shape compression likes.
inline SparseRowMatrix templated_sparse(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                        std::size_t templates, double density = 0.5, std::size_t alphabet = 8) {
  const SparseRowMatrix t = random_sparse(rng, templates, cols, density, alphabet);
  std::uniform_int_distribution<std::size_t> pick(0, templates - 1);
  SparseRowMatrix s(cols);
  for (std::size_t r = 0; r < rows; ++r) s.append_row(t.row(pick(rng)));
  return s;
}

inline DenseMatrix random_dense(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix m(rows, cols);
  for (double& x : m.values()) x = u(rng);
  return m;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// |a - b| / max(|b|, 1), b being the oracle.
inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1.0); }

inline double max_rel_err(std::span<const double> a, std::span<const double> b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, rel_err(a[i], b[i]));
  return a.size() == b.size() ? e : INFINITY;
}

}  // namespace toc::testing
