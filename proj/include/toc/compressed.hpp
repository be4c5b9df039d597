#pragma once

// Matrix kernels that run directly on (I, D) and the rebuilt prefix tree.
//
// Right multiplication computes each node's partial product once from its
// parent's and then sums node products per row. Left multiplication first
// accumulates the row weights of every code, then walks the tree from the
// deepest node back to the root, pushing each node's weight to its parent.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toc/encoding.hpp"
#include "toc/error.hpp"
#include "toc/matrix.hpp"

namespace toc {

// One unit per tree-node update and per code visit. Each unit is a single
// multiply-add or table accumulation, times the width of M for matrix kernels.
struct OpCounter {
  std::uint64_t multiply_adds = 0;
  std::uint64_t tree_nodes_visited = 0;
  std::uint64_t codes_visited = 0;

  OpCounter& operator+=(const OpCounter& o) noexcept {
    multiply_adds += o.multiply_adds;
    tree_nodes_visited += o.tree_nodes_visited;
    codes_visited += o.codes_visited;
    return *this;
  }
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

// A compressed matrix. The decode tree is built on first use, exactly once,
// and shared by copies. Safe for concurrent readers.
class CompressedMatrix {
 public:
  CompressedMatrix() : CompressedMatrix(LogicalEncoding{}) {}
  explicit CompressedMatrix(LogicalEncoding enc) : state_(std::make_shared<State>(std::move(enc))) {}

  static CompressedMatrix compress(const SparseRowMatrix& s) { return CompressedMatrix(encode(s)); }

  const LogicalEncoding& encoding() const noexcept { return state_->enc; }
  std::size_t n_rows() const noexcept { return state_->enc.n_rows(); }
  std::size_t n_cols() const noexcept { return state_->enc.n_cols(); }

  const DecodeTree& tree() const {
    std::call_once(state_->once, [s = state_.get()] {
      s->tree = build_prefix_tree(s->enc);
      s->built.store(true, std::memory_order_release);
    });
    return state_->tree;
  }

  bool tree_built() const noexcept { return state_->built.load(std::memory_order_acquire); }

  SparseRowMatrix decompress() const { return decode(encoding(), tree()); }

 private:
  struct State {
    explicit State(LogicalEncoding e) : enc(std::move(e)) {}
    LogicalEncoding enc;
    std::once_flag once;
    DecodeTree tree;
    std::atomic<bool> built{false};
  };

  std::shared_ptr<State> state_;
};

enum class KernelKind { kMatVec, kVecMat, kMatMatRight, kMatMatLeft };

inline KernelKind kernel_kind_from_string(std::string_view name) {
  if (name == "matvec") return KernelKind::kMatVec;
  if (name == "vecmat") return KernelKind::kVecMat;
  if (name == "matmat_right" || name == "matmat-right") return KernelKind::kMatMatRight;
  if (name == "matmat_left" || name == "matmat-left") return KernelKind::kMatMatLeft;
  throw InvalidArgument("unknown kernel kind '" + std::string(name) + "'");
}

inline std::string_view to_string(KernelKind k) {
  switch (k) {
    case KernelKind::kMatVec: return "matvec";
    case KernelKind::kVecMat: return "vecmat";
    case KernelKind::kMatMatRight: return "matmat_right";
    case KernelKind::kMatMatLeft: return "matmat_left";
  }
  return "unknown";
}

// Closed-form operation count of a compressed kernel call. `width` is
// M.n_cols for matmat_right and M.n_rows for matmat_left; ignored otherwise.
inline std::uint64_t kernel_cost(const CompressedMatrix& a, KernelKind kind, std::size_t width = 1) {
  const auto& enc = a.encoding();
  const std::uint64_t base = (enc.tree_size() - 1) + enc.codes().size();
  switch (kind) {
    case KernelKind::kMatVec:
    case KernelKind::kVecMat: return base;
    case KernelKind::kMatMatRight:
    case KernelKind::kMatMatLeft: return base * width;
  }
  throw InvalidArgument("unknown kernel kind");
}

// Uncompressed baselines in the same unit: one multiply-add per stored entry
// (every cell for dense, every nonzero for CSR), times the width of M.
inline std::uint64_t dense_kernel_cost(std::size_t n_rows, std::size_t n_cols, std::size_t width = 1) {
  return std::uint64_t{n_rows} * n_cols * width;
}

inline std::uint64_t csr_kernel_cost(std::size_t nnz, std::size_t width = 1) { return std::uint64_t{nnz} * width; }

// ---------------------------------------------------------------------------
// Sparse-safe element-wise operations: rewrite I only.

inline CompressedMatrix scalar_multiply(const CompressedMatrix& a, double c) {
  if (!std::isfinite(c)) throw InvalidArgument("scalar_multiply: non-finite scalar");
  LogicalEncoding enc = a.encoding();
  for (auto& p : enc.first_layer()) p.value *= c;
  return CompressedMatrix(std::move(enc));
}

inline CompressedMatrix elementwise_power(const CompressedMatrix& a, int p) {
  if (p < 1) throw InvalidArgument("elementwise_power: exponent must be >= 1");
  LogicalEncoding enc = a.encoding();
  for (auto& pair : enc.first_layer()) {
    const double base = pair.value;
    double r = base;
    for (int k = 1; k < p; ++k) r *= base;
    pair.value = r;
  }
  return CompressedMatrix(std::move(enc));
}

// ---------------------------------------------------------------------------
// Right multiplication

inline DenseVector matvec(const CompressedMatrix& a, std::span<const double> v,
                          OpCounter* counter = nullptr) {
  detail::require_length("matvec vector", a.n_cols(), v.size());
  const DecodeTree& t = a.tree();
  const auto& enc = a.encoding();
  std::vector<double> h(t.size(), 0.0);
  std::uint64_t nodes = 0;
  for (std::size_t i = 1; i < t.size(); ++i, ++nodes)
    h[i] = t.key[i].value * v[t.key[i].column] + h[t.parent[i]];

  DenseVector r(a.n_rows(), 0.0);
  std::uint64_t codes = 0;
  for (std::size_t row = 0; row < enc.n_rows(); ++row) {
    double acc = 0.0;
    for (const Code c : enc.row_codes(row)) {
      acc += h[c];
      ++codes;
    }
    r[row] = acc;
  }
  if (counter) *counter += {nodes + codes, nodes, codes};
  return r;
}

inline DenseMatrix matmat_right(const CompressedMatrix& a, const DenseMatrix& m,
                               OpCounter* counter = nullptr) {
  detail::require_length("matmat_right inner dimension", a.n_cols(), m.n_rows());
  const DecodeTree& t = a.tree();
  const auto& enc = a.encoding();
  const std::size_t p = m.n_cols();
  std::vector<double> h(t.size() * p, 0.0);
  std::uint64_t node_ops = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto src = m.row(t.key[i].column);
    const double value = t.key[i].value;
    const double* parent = h.data() + t.parent[i] * p;
    double* dst = h.data() + i * p;
    for (std::size_t k = 0; k < p; ++k, ++node_ops) dst[k] = value * src[k] + parent[k];
  }

  DenseMatrix r(a.n_rows(), p);
  std::uint64_t code_ops = 0;
  std::uint64_t codes = 0;
  for (std::size_t row = 0; row < enc.n_rows(); ++row) {
    auto dst = r.row(row);
    for (const Code c : enc.row_codes(row)) {
      ++codes;
      const double* src = h.data() + std::size_t{c} * p;
      for (std::size_t k = 0; k < p; ++k, ++code_ops) dst[k] += src[k];
    }
  }
  if (counter) *counter += {node_ops + code_ops, t.size() - 1, codes};
  return r;
}

// ---------------------------------------------------------------------------
// Left multiplication

inline DenseVector vecmat(std::span<const double> v, const CompressedMatrix& a,
                          OpCounter* counter = nullptr) {
  detail::require_length("vecmat vector", a.n_rows(), v.size());
  const DecodeTree& t = a.tree();
  const auto& enc = a.encoding();
  std::vector<double> h(t.size(), 0.0);
  std::uint64_t codes = 0;
  for (std::size_t row = 0; row < enc.n_rows(); ++row) {
    for (const Code c : enc.row_codes(row)) {
      h[c] += v[row];
      ++codes;
    }
  }

  DenseVector r(a.n_cols(), 0.0);
  std::uint64_t nodes = 0;
  for (std::size_t i = t.size(); i-- > 1; ++nodes) {
    r[t.key[i].column] += t.key[i].value * h[i];
    h[t.parent[i]] += h[i];
  }
  if (counter) *counter += {nodes + codes, nodes, codes};
  return r;
}

// M * A with H stored transposed (tree node major) so D is scanned once.
inline DenseMatrix matmat_left(const DenseMatrix& m, const CompressedMatrix& a,
                              OpCounter* counter = nullptr) {
  detail::require_length("matmat_left inner dimension", a.n_rows(), m.n_cols());
  const DecodeTree& t = a.tree();
  const auto& enc = a.encoding();
  const std::size_t p = m.n_rows();
  std::vector<double> h(t.size() * p, 0.0);
  std::uint64_t code_ops = 0;
  std::uint64_t codes = 0;
  for (std::size_t row = 0; row < enc.n_rows(); ++row) {
    for (const Code c : enc.row_codes(row)) {
      ++codes;
      double* dst = h.data() + std::size_t{c} * p;
      for (std::size_t k = 0; k < p; ++k, ++code_ops) dst[k] += m(k, row);
    }
  }

  DenseMatrix r(p, a.n_cols());
  std::uint64_t node_ops = 0;
  for (std::size_t i = t.size(); i-- > 1;) {
    const std::uint32_t column = t.key[i].column;
    const double value = t.key[i].value;
    const double* src = h.data() + i * p;
    double* parent = h.data() + std::size_t{t.parent[i]} * p;
    for (std::size_t k = 0; k < p; ++k, ++node_ops) {
      r(k, column) += value * src[k];
      parent[k] += src[k];
    }
  }
  if (counter) *counter += {node_ops + code_ops, t.size() - 1, codes};
  return r;
}

// ---------------------------------------------------------------------------
// Sparse-unsafe: decode, densify, add.

inline DenseMatrix scalar_add(const CompressedMatrix& a, double c) {
  if (!std::isfinite(c)) throw InvalidArgument("scalar_add: non-finite scalar");
  DenseMatrix d = sparse_to_dense(a.decompress());
  for (double& x : d.values()) x += c;
  return d;
}

}  // namespace toc
