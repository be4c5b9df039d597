#pragma once

// Synthetic datasets with controllable redundancy: a handful of row
// templates repeated many times, cell values drawn from a small alphabet.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "toc/error.hpp"
#include "toc/matrix.hpp"

namespace toc {

enum class SynthTask { kRegression, kClassification };

struct SynthConfig {
  std::size_t templates = 10;
  std::size_t copies = 50;
  std::size_t n_cols = 100;
  std::size_t alphabet = 8;   // distinct nonzero values; 0 means continuous random values
  double density = 0.5;       // probability a template cell is nonzero
  std::uint64_t seed = 1;
  SynthTask task = SynthTask::kRegression;
  bool interleave = true;     // copy-major order (t0 t1 .. t0 t1 ..) instead of template-major
};

namespace detail {

inline double alphabet_value(std::size_t symbol) {
  // Small exact binary fractions, e.g. 0.25, 0.5, ..., signed alternately.
  const double magnitude = 0.25 * static_cast<double>(symbol / 2 + 1);
  return (symbol % 2 == 0) ? magnitude : -magnitude;
}

}  // namespace detail

inline LabeledDataset make_synthetic(const SynthConfig& cfg) {
  if (cfg.templates == 0 || cfg.n_cols == 0) throw InvalidArgument("synthetic: empty shape");
  if (!(cfg.density >= 0.0 && cfg.density <= 1.0)) throw InvalidArgument("synthetic: density not in [0,1]");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.alphabet == 0 ? 0 : cfg.alphabet - 1);

  std::vector<std::vector<ColumnValuePair>> templates(cfg.templates);
  for (auto& row : templates) {
    for (std::size_t c = 0; c < cfg.n_cols; ++c) {
      if (unit(rng) >= cfg.density) continue;
      double v = cfg.alphabet == 0 ? unit(rng) * 2.0 - 1.0 : detail::alphabet_value(pick(rng));
      if (v == 0.0) v = 1.0;
      row.push_back({static_cast<std::uint32_t>(c), v});
    }
  }

  std::vector<double> w(cfg.n_cols);
  for (auto& x : w) x = unit(rng) * 2.0 - 1.0;
  auto label_of = [&](const std::vector<ColumnValuePair>& row) {
    double z = 0.0;
    for (const auto& e : row) z += e.value * w[e.column];
    if (cfg.task == SynthTask::kClassification) return z >= 0.0 ? 1.0 : -1.0;
    return z;
  };

  SparseRowMatrix features(cfg.n_cols);
  DenseVector labels;
  labels.reserve(cfg.templates * cfg.copies);
  auto emit = [&](std::size_t t) {
    features.append_row(templates[t]);
    labels.push_back(label_of(templates[t]));
  };
  if (cfg.interleave) {
    for (std::size_t k = 0; k < cfg.copies; ++k)
      for (std::size_t t = 0; t < cfg.templates; ++t) emit(t);
  } else {
    for (std::size_t t = 0; t < cfg.templates; ++t)
      for (std::size_t k = 0; k < cfg.copies; ++k) emit(t);
  }
  return LabeledDataset(std::move(features), std::move(labels));
}

// Dense matrix of continuous random values: essentially incompressible.
inline LabeledDataset make_random_dense(std::size_t n_rows, std::size_t n_cols, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.templates = n_rows;
  cfg.copies = 1;
  cfg.n_cols = n_cols;
  cfg.alphabet = 0;
  cfg.density = 1.0;
  cfg.seed = seed;
  return make_synthetic(cfg);
}

// Every row of `ds` repeated `times` times, block after block.
inline LabeledDataset duplicate_rows(const LabeledDataset& ds, std::size_t times) {
  SparseRowMatrix f(ds.features.n_cols());
  DenseVector y;
  y.reserve(ds.size() * times);
  for (std::size_t k = 0; k < times; ++k) {
    for (std::size_t r = 0; r < ds.size(); ++r) {
      f.append_row(ds.features.row(r));
      y.push_back(ds.labels[r]);
    }
  }
  return LabeledDataset(std::move(f), std::move(y));
}

}  // namespace toc
