#pragma once

// Mini-batch gradient descent over compressed, CSR, or dense batches.
// Data is shuffled once before batching and batches are visited in the same
// order every epoch. Gradients are batch sums; the 1/|B| factor is applied
// in the update.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "toc/compressed.hpp"
#include "toc/error.hpp"
#include "toc/matrix.hpp"

namespace toc {

enum class LossKind { kSquared, kLogistic, kHinge, kNnMse };
enum class Execution { kCompressed, kDense, kCsr };

inline LossKind loss_kind_from_string(std::string_view s) {
  if (s == "squared") return LossKind::kSquared;
  if (s == "logistic") return LossKind::kLogistic;
  if (s == "hinge") return LossKind::kHinge;
  if (s == "nn" || s == "nn_mse") return LossKind::kNnMse;
  throw InvalidArgument("unknown loss '" + std::string(s) + "'");
}

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::kSquared: return "squared";
    case LossKind::kLogistic: return "logistic";
    case LossKind::kHinge: return "hinge";
    case LossKind::kNnMse: return "nn";
  }
  return "unknown";
}

inline Execution execution_from_string(std::string_view s) {
  if (s == "compressed") return Execution::kCompressed;
  if (s == "dense") return Execution::kDense;
  if (s == "csr") return Execution::kCsr;
  throw InvalidArgument("unknown execution mode '" + std::string(s) + "'");
}

inline std::string_view to_string(Execution e) {
  switch (e) {
    case Execution::kCompressed: return "compressed";
    case Execution::kDense: return "dense";
    case Execution::kCsr: return "csr";
  }
  return "unknown";
}

struct TrainConfig {
  LossKind loss = LossKind::kSquared;
  std::size_t batch_size = 250;
  double learning_rate = 0.1;
  std::size_t epochs = 10;
  std::uint64_t seed = 42;
  std::size_t hidden_units = 16;
  Execution execution = Execution::kCompressed;

  void validate() const {
    if (batch_size < 1) throw InvalidArgument("--batch-size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw InvalidArgument("--lr must be a positive finite number");
    }
    if (epochs < 1) throw InvalidArgument("--epochs must be >= 1");
    if (loss == LossKind::kNnMse && hidden_units < 1) throw InvalidArgument("--hidden must be >= 1");
  }
};

struct GlmModel {
  DenseVector weights;
};

struct NnModel {
  DenseMatrix w1;  // n_cols x hidden
  DenseMatrix w2;  // hidden x 1
};

using Model = std::variant<GlmModel, NnModel>;

// ---------------------------------------------------------------------------
// Batches

namespace detail {

template <typename... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
Overload(Fs...) -> Overload<Fs...>;

}  // namespace detail

// Feature matrix of one batch in whichever representation the execution
// mode calls for, behind a single kernel surface.
class BatchFeatures {
 public:
  using Storage = std::variant<CompressedMatrix, SparseRowMatrix, DenseMatrix>;

  explicit BatchFeatures(Storage s) : storage_(std::move(s)) {}

  static BatchFeatures make(const SparseRowMatrix& rows, Execution mode) {
    switch (mode) {
      case Execution::kCompressed: return BatchFeatures(CompressedMatrix::compress(rows));
      case Execution::kCsr: return BatchFeatures(rows);
      case Execution::kDense: return BatchFeatures(sparse_to_dense(rows));
    }
    throw InvalidArgument("unknown execution mode");
  }

  std::size_t n_rows() const {
    return std::visit([](const auto& m) { return m.n_rows(); }, storage_);
  }
  std::size_t n_cols() const {
    return std::visit([](const auto& m) { return m.n_cols(); }, storage_);
  }

  const Storage& storage() const noexcept { return storage_; }

  DenseVector matvec(std::span<const double> v, OpCounter* counter = nullptr) const {
    return std::visit(detail::Overload{[&](const CompressedMatrix& a) { return toc::matvec(a, v, counter); },
                               [&](const SparseRowMatrix& a) { return csr_matvec(a, v); },
                               [&](const DenseMatrix& a) { return dense_matvec(a, v); }},
                      storage_);
  }

  DenseVector vecmat(std::span<const double> v, OpCounter* counter = nullptr) const {
    return std::visit(detail::Overload{[&](const CompressedMatrix& a) { return toc::vecmat(v, a, counter); },
                               [&](const SparseRowMatrix& a) { return csr_vecmat(v, a); },
                               [&](const DenseMatrix& a) { return dense_vecmat(v, a); }},
                      storage_);
  }

  DenseMatrix matmat_right(const DenseMatrix& m, OpCounter* counter = nullptr) const {
    return std::visit(
        detail::Overload{[&](const CompressedMatrix& a) { return toc::matmat_right(a, m, counter); },
                 [&](const SparseRowMatrix& a) { return csr_matmat_right(a, m); },
                 [&](const DenseMatrix& a) { return dense_matmat(a, m); }},
        storage_);
  }

  DenseMatrix matmat_left(const DenseMatrix& m, OpCounter* counter = nullptr) const {
    return std::visit(
        detail::Overload{[&](const CompressedMatrix& a) { return toc::matmat_left(m, a, counter); },
                 [&](const SparseRowMatrix& a) { return csr_matmat_left(m, a); },
                 [&](const DenseMatrix& a) { return dense_matmat(m, a); }},
        storage_);
  }

 private:
  Storage storage_;
};

struct Batch {
  BatchFeatures features;
  DenseVector labels;

  std::size_t size() const noexcept { return labels.size(); }
};

struct BatchStore {
  std::size_t batch_size = 0;
  std::vector<Batch> batches;

  std::size_t total_rows() const noexcept {
    std::size_t n = 0;
    for (const auto& b : batches) n += b.size();
    return n;
  }
};

// Seeded Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> shuffle_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  return perm;
}

inline LabeledDataset permute_rows(const LabeledDataset& ds, std::span<const std::size_t> perm) {
  detail::require_length("permutation", ds.size(), perm.size());
  SparseRowMatrix f(ds.features.n_cols());
  DenseVector y;
  y.reserve(ds.size());
  for (const std::size_t r : perm) {
    f.append_row(ds.features.row(r));
    y.push_back(ds.labels[r]);
  }
  return LabeledDataset(std::move(f), std::move(y));
}

inline LabeledDataset shuffle_once(const LabeledDataset& ds, std::uint64_t seed) {
  return permute_rows(ds, shuffle_permutation(ds.size(), seed));
}

inline BatchStore make_batches(const LabeledDataset& ds, std::size_t batch_size, Execution mode) {
  if (ds.size() == 0) throw InvalidArgument("make_batches: empty dataset");
  if (batch_size < 1) throw InvalidArgument("make_batches: batch size must be >= 1");
  BatchStore store;
  store.batch_size = batch_size;
  for (std::size_t begin = 0; begin < ds.size(); begin += batch_size) {
    const std::size_t end = std::min(ds.size(), begin + batch_size);
    store.batches.push_back(
        {BatchFeatures::make(ds.features.slice(begin, end), mode),
         DenseVector(ds.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                     ds.labels.begin() + static_cast<std::ptrdiff_t>(end))});
  }
  return store;
}

// ---------------------------------------------------------------------------
// Losses

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ln(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline void require_signed_labels(std::span<const double> y, LossKind loss) {
  if (loss != LossKind::kLogistic && loss != LossKind::kHinge) return;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0 && y[i] != -1.0) {
      throw InvalidArgument("label " + std::to_string(y[i]) + " at row " + std::to_string(i) +
                            " must be -1 or +1 for " + std::string(to_string(loss)) + " loss");
    }
  }
}

inline double glm_loss(LossKind loss, double z, double y) {
  switch (loss) {
    case LossKind::kSquared:
    case LossKind::kNnMse: return 0.5 * (y - z) * (y - z);
    case LossKind::kLogistic: return softplus(-y * z);
    case LossKind::kHinge: return std::max(0.0, 1.0 - y * z);
  }
  return 0.0;
}

// d loss / d z at margin z for label y.
inline double glm_scalar(LossKind loss, double z, double y) {
  switch (loss) {
    case LossKind::kSquared:
    case LossKind::kNnMse: return z - y;
    case LossKind::kLogistic: return -y * sigmoid(-y * z);  // -y / (1 + exp(y z))
    case LossKind::kHinge: return y * z < 1.0 ? -y : 0.0;
  }
  return 0.0;
}

inline DenseMatrix sigmoid_of(DenseMatrix z) {
  for (double& x : z.values()) x = sigmoid(x);
  return z;
}

}  // namespace detail

inline double empirical_risk(const GlmModel& model, const LabeledDataset& ds, LossKind loss) {
  detail::require_length("model weights", ds.features.n_cols(), model.weights.size());
  if (loss == LossKind::kNnMse) throw InvalidArgument("empirical_risk: nn loss needs an NnModel");
  detail::require_signed_labels(ds.labels, loss);
  if (ds.size() == 0) return 0.0;
  const DenseVector z = csr_matvec(ds.features, model.weights);
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += detail::glm_loss(loss, z[i], ds.labels[i]);
  return total / static_cast<double>(ds.size());
}

inline DenseVector nn_forward(const BatchFeatures& x, const NnModel& model, DenseMatrix* hidden = nullptr,
                              OpCounter* counter = nullptr) {
  DenseMatrix h1 = detail::sigmoid_of(x.matmat_right(model.w1, counter));
  DenseVector yhat = dense_matvec(h1, model.w2.values());
  if (hidden) *hidden = std::move(h1);
  return yhat;
}

inline double empirical_risk(const NnModel& model, const LabeledDataset& ds) {
  detail::require_length("nn input weights", ds.features.n_cols(), model.w1.n_rows());
  if (ds.size() == 0) return 0.0;
  const DenseVector yhat = nn_forward(BatchFeatures(ds.features), model);
  double total = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) total += detail::glm_loss(LossKind::kNnMse, yhat[i], ds.labels[i]);
  return total / static_cast<double>(ds.size());
}

inline double empirical_risk(const Model& model, const LabeledDataset& ds, LossKind loss) {
  if (const auto* nn = std::get_if<NnModel>(&model)) return empirical_risk(*nn, ds);
  return empirical_risk(std::get<GlmModel>(model), ds, loss);
}

// ---------------------------------------------------------------------------
// Gradients (summed over the batch)

inline DenseVector glm_gradient(const Batch& batch, const GlmModel& model, LossKind loss,
                                OpCounter* counter = nullptr) {
  detail::require_length("model weights", batch.features.n_cols(), model.weights.size());
  detail::require_length("batch labels", batch.features.n_rows(), batch.labels.size());
  const DenseVector z = batch.features.matvec(model.weights, counter);
  DenseVector s(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) s[i] = detail::glm_scalar(loss, z[i], batch.labels[i]);
  return batch.features.vecmat(s, counter);
}

struct NnGradient {
  DenseMatrix w1;
  DenseMatrix w2;
};

inline NnGradient nn_gradient(const Batch& batch, const NnModel& model, OpCounter* counter = nullptr) {
  detail::require_length("nn input weights", batch.features.n_cols(), model.w1.n_rows());
  detail::require_length("nn output weights", model.w1.n_cols(), model.w2.n_rows());
  detail::require_length("batch labels", batch.features.n_rows(), batch.labels.size());
  const std::size_t n = batch.size();
  const std::size_t hidden = model.w1.n_cols();

  DenseMatrix h1;
  const DenseVector yhat = nn_forward(batch.features, model, &h1, counter);
  DenseVector err(n);
  for (std::size_t i = 0; i < n; ++i) err[i] = yhat[i] - batch.labels[i];

  NnGradient g{DenseMatrix(), DenseMatrix(hidden, 1)};
  const DenseVector dw2 = dense_vecmat(err, h1);
  for (std::size_t j = 0; j < hidden; ++j) g.w2(j, 0) = dw2[j];

  // delta^T, hidden x n: (err * w2^T) .* h1 .* (1 - h1), transposed.
  DenseMatrix delta_t(hidden, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < hidden; ++j) {
      const double a = h1(i, j);
      delta_t(j, i) = err[i] * model.w2(j, 0) * a * (1.0 - a);
    }
  }
  g.w1 = batch.features.matmat_left(delta_t, counter).transposed();
  return g;
}

// ---------------------------------------------------------------------------
// Update

inline GlmModel mgd_step(const GlmModel& model, std::span<const double> gradient, double learning_rate,
                         std::size_t batch_rows) {
  detail::require_length("gradient", model.weights.size(), gradient.size());
  if (batch_rows == 0) throw InvalidArgument("mgd_step: empty batch");
  const double scale = learning_rate / static_cast<double>(batch_rows);
  GlmModel out = model;
  for (std::size_t j = 0; j < gradient.size(); ++j) out.weights[j] -= scale * gradient[j];
  return out;
}

inline NnModel mgd_step(const NnModel& model, const NnGradient& g, double learning_rate,
                        std::size_t batch_rows) {
  if (batch_rows == 0) throw InvalidArgument("mgd_step: empty batch");
  const double scale = learning_rate / static_cast<double>(batch_rows);
  NnModel out = model;
  auto w1 = out.w1.values();
  auto w2 = out.w2.values();
  const auto g1 = g.w1.values();
  const auto g2 = g.w2.values();
  detail::require_length("nn gradient w1", w1.size(), g1.size());
  detail::require_length("nn gradient w2", w2.size(), g2.size());
  for (std::size_t k = 0; k < w1.size(); ++k) w1[k] -= scale * g1[k];
  for (std::size_t k = 0; k < w2.size(); ++k) w2[k] -= scale * g2[k];
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

struct LossTrace {
  double initial_risk = 0.0;
  std::vector<double> risk;     // after each epoch
  std::vector<double> seconds;  // wall time of each epoch, evaluation excluded
};

struct TrainResult {
  Model model;
  LossTrace trace;
  std::size_t steps_per_epoch = 0;
  OpCounter ops;  // compressed-kernel work over the whole run
};

// Small uniform weights from the seed so every execution mode starts equal.
inline NnModel init_nn(std::size_t n_cols, std::size_t hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5DEECE66Dull);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  NnModel m{DenseMatrix(n_cols, hidden), DenseMatrix(hidden, 1)};
  for (double& x : m.w1.values()) x = u(rng);
  for (double& x : m.w2.values()) x = u(rng);
  return m;
}

inline Model init_model(const TrainConfig& cfg, std::size_t n_cols) {
  if (cfg.loss == LossKind::kNnMse) return init_nn(n_cols, cfg.hidden_units, cfg.seed);
  return GlmModel{DenseVector(n_cols, 0.0)};
}

// Runs the epochs over a prepared batch order. `eval` is the full dataset in
// the same order and is only used for risk reporting.
inline TrainResult train_batches(const BatchStore& store, const LabeledDataset& eval, const TrainConfig& cfg,
                                 Model model) {
  cfg.validate();
  if (cfg.loss != LossKind::kNnMse && !std::holds_alternative<GlmModel>(model)) {
    throw InvalidArgument("train: linear loss requires a linear model");
  }
  if (cfg.loss == LossKind::kNnMse && !std::holds_alternative<NnModel>(model)) {
    throw InvalidArgument("train: nn loss requires an nn model");
  }
  detail::require_signed_labels(eval.labels, cfg.loss);

  TrainResult result;
  result.steps_per_epoch = store.batches.size();
  result.trace.initial_risk = empirical_risk(model, eval, cfg.loss);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (const Batch& batch : store.batches) {
      if (auto* glm = std::get_if<GlmModel>(&model)) {
        const DenseVector g = glm_gradient(batch, *glm, cfg.loss, &result.ops);
        *glm = mgd_step(*glm, g, cfg.learning_rate, batch.size());
      } else {
        auto& nn = std::get<NnModel>(model);
        nn = mgd_step(nn, nn_gradient(batch, nn, &result.ops), cfg.learning_rate, batch.size());
      }
    }
    const auto stop = std::chrono::steady_clock::now();
    result.trace.seconds.push_back(std::chrono::duration<double>(stop - start).count());
    result.trace.risk.push_back(empirical_risk(model, eval, cfg.loss));
  }
  result.model = std::move(model);
  return result;
}

inline TrainResult train(const LabeledDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  detail::require_signed_labels(ds.labels, cfg.loss);
  const LabeledDataset shuffled = shuffle_once(ds, cfg.seed);
  const BatchStore store = make_batches(shuffled, cfg.batch_size, cfg.execution);
  return train_batches(store, shuffled, cfg, init_model(cfg, ds.features.n_cols()));
}

}  // namespace toc
