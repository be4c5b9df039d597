#pragma once

// Uncompressed matrix types and the reference kernels every compressed
// kernel is checked against. The reference kernels accumulate in ascending
// index order.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toc/error.hpp"

namespace toc {

using DenseVector = std::vector<double>;

struct ColumnValuePair {
  std::uint32_t column = 0;
  double value = 0.0;

  // Bit-level equality; 0.0 and -0.0 differ, NaN never appears.
  friend bool operator==(const ColumnValuePair& a, const ColumnValuePair& b) noexcept {
    return a.column == b.column &&
           std::bit_cast<std::uint64_t>(a.value) == std::bit_cast<std::uint64_t>(b.value);
  }
};

namespace detail {

inline void require_finite(std::span<const double> xs, const char* what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) {
      throw InvalidArgument(std::string(what) + ": non-finite value at position " +
                            std::to_string(i));
    }
  }
}

inline void require_length(const char* what, std::size_t expected, std::size_t actual) {
  if (expected != actual) throw DimensionMismatch(what, expected, actual);
}

}  // namespace detail

class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t n_rows, std::size_t n_cols)
      : n_rows_(n_rows), n_cols_(n_cols), values_(n_rows * n_cols, 0.0) {}

  DenseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<double> values)
      : n_rows_(n_rows), n_cols_(n_cols), values_(std::move(values)) {
    detail::require_length("DenseMatrix values", n_rows_ * n_cols_, values_.size());
    detail::require_finite(values_, "DenseMatrix");
  }

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
      detail::require_length("DenseMatrix row", c, row.size());
      values.insert(values.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(values));
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * n_cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * n_cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * n_cols_, n_cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * n_cols_, n_cols_}; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  DenseMatrix transposed() const {
    DenseMatrix t(n_cols_, n_rows_);
    for (std::size_t r = 0; r < n_rows_; ++r)
      for (std::size_t c = 0; c < n_cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<double> values_;
};

// Row-wise sparse matrix stored as CSR. Each row holds strictly increasing
// column indexes and no explicit zeros.
class SparseRowMatrix {
 public:
  SparseRowMatrix() : offsets_{0} {}

  explicit SparseRowMatrix(std::size_t n_cols) : n_cols_(n_cols), offsets_{0} {}

  SparseRowMatrix(std::size_t n_cols, const std::vector<std::vector<ColumnValuePair>>& rows)
      : n_cols_(n_cols), offsets_{0} {
    for (const auto& r : rows) append_row(r);
  }

  void append_row(std::span<const ColumnValuePair> row) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      const auto& e = row[k];
      if (e.column >= n_cols_) {
        throw InvalidArgument("sparse row " + std::to_string(n_rows()) + ": column " +
                              std::to_string(e.column) + " out of range for " +
                              std::to_string(n_cols_) + " columns");
      }
      if (k > 0 && row[k - 1].column >= e.column) {
        throw InvalidArgument("sparse row " + std::to_string(n_rows()) +
                              ": column indexes must be strictly increasing");
      }
      if (e.value == 0.0) {
        throw InvalidArgument("sparse row " + std::to_string(n_rows()) +
                              ": explicit zero at column " + std::to_string(e.column));
      }
      if (!std::isfinite(e.value)) {
        throw InvalidArgument("sparse row " + std::to_string(n_rows()) +
                              ": non-finite value at column " + std::to_string(e.column));
      }
    }
    entries_.insert(entries_.end(), row.begin(), row.end());
    offsets_.push_back(entries_.size());
  }

  std::size_t n_rows() const noexcept { return offsets_.size() - 1; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return entries_.size(); }

  std::span<const ColumnValuePair> row(std::size_t r) const {
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  // Rows [begin, end) as a new matrix.
  SparseRowMatrix slice(std::size_t begin, std::size_t end) const {
    SparseRowMatrix out(n_cols_);
    for (std::size_t r = begin; r < end; ++r) out.append_row(row(r));
    return out;
  }

  friend bool operator==(const SparseRowMatrix&, const SparseRowMatrix&) = default;

 private:
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<ColumnValuePair> entries_;
};

struct LabeledDataset {
  SparseRowMatrix features;
  DenseVector labels;

  LabeledDataset() = default;
  LabeledDataset(SparseRowMatrix f, DenseVector y) : features(std::move(f)), labels(std::move(y)) {
    detail::require_length("LabeledDataset labels", features.n_rows(), labels.size());
    detail::require_finite(labels, "LabeledDataset labels");
  }

  std::size_t size() const noexcept { return labels.size(); }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

// ---------------------------------------------------------------------------
// Conversions

inline DenseMatrix sparse_to_dense(const SparseRowMatrix& s) {
  DenseMatrix d(s.n_rows(), s.n_cols());
  for (std::size_t r = 0; r < s.n_rows(); ++r)
    for (const auto& e : s.row(r)) d(r, e.column) = e.value;
  return d;
}

// Drops exact zeros only (both signs).
inline SparseRowMatrix dense_to_sparse(const DenseMatrix& a) {
  SparseRowMatrix s(a.n_cols());
  std::vector<ColumnValuePair> row;
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    row.clear();
    const auto values = a.row(r);
    for (std::size_t c = 0; c < values.size(); ++c)
      if (values[c] != 0.0) row.push_back({static_cast<std::uint32_t>(c), values[c]});
    s.append_row(row);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reference dense kernels

inline DenseVector dense_matvec(const DenseMatrix& a, std::span<const double> v) {
  detail::require_length("dense_matvec vector", a.n_cols(), v.size());
  DenseVector out(a.n_rows(), 0.0);
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    const auto row = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

inline DenseVector dense_vecmat(std::span<const double> v, const DenseMatrix& a) {
  detail::require_length("dense_vecmat vector", a.n_rows(), v.size());
  DenseVector out(a.n_cols(), 0.0);
  for (std::size_t j = 0; j < a.n_cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.n_rows(); ++i) acc += v[i] * a(i, j);
    out[j] = acc;
  }
  return out;
}

inline DenseMatrix dense_matmat(const DenseMatrix& a, const DenseMatrix& m) {
  detail::require_length("dense_matmat inner dimension", a.n_cols(), m.n_rows());
  DenseMatrix out(a.n_rows(), m.n_cols());
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    for (std::size_t k = 0; k < m.n_cols(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.n_cols(); ++j) acc += a(i, j) * m(j, k);
      out(i, k) = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSR kernels (baseline execution path)

inline DenseVector csr_matvec(const SparseRowMatrix& s, std::span<const double> v) {
  detail::require_length("csr_matvec vector", s.n_cols(), v.size());
  DenseVector out(s.n_rows(), 0.0);
  for (std::size_t i = 0; i < s.n_rows(); ++i) {
    double acc = 0.0;
    for (const auto& e : s.row(i)) acc += e.value * v[e.column];
    out[i] = acc;
  }
  return out;
}

inline DenseVector csr_vecmat(std::span<const double> v, const SparseRowMatrix& s) {
  detail::require_length("csr_vecmat vector", s.n_rows(), v.size());
  DenseVector out(s.n_cols(), 0.0);
  for (std::size_t i = 0; i < s.n_rows(); ++i)
    for (const auto& e : s.row(i)) out[e.column] += v[i] * e.value;
  return out;
}

inline DenseMatrix csr_matmat_right(const SparseRowMatrix& s, const DenseMatrix& m) {
  detail::require_length("csr_matmat_right inner dimension", s.n_cols(), m.n_rows());
  DenseMatrix out(s.n_rows(), m.n_cols());
  for (std::size_t i = 0; i < s.n_rows(); ++i) {
    auto dst = out.row(i);
    for (const auto& e : s.row(i)) {
      const auto src = m.row(e.column);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += e.value * src[k];
    }
  }
  return out;
}

inline DenseMatrix csr_matmat_left(const DenseMatrix& m, const SparseRowMatrix& s) {
  detail::require_length("csr_matmat_left inner dimension", s.n_rows(), m.n_cols());
  DenseMatrix out(m.n_rows(), s.n_cols());
  for (std::size_t p = 0; p < m.n_rows(); ++p) {
    auto dst = out.row(p);
    for (std::size_t i = 0; i < s.n_rows(); ++i) {
      const double w = m(p, i);
      if (w == 0.0) continue;
      for (const auto& e : s.row(i)) dst[e.column] += w * e.value;
    }
  }
  return out;
}

}  // namespace toc
