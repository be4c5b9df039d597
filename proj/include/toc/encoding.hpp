#pragma once

// Tuple-oriented logical encoding: an LZW-style dictionary coder that never
// lets a code span two rows, and the parent-linked prefix tree that decoding
// and the compressed kernels rebuild from (I, D) alone.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toc/dictionary.hpp"
#include "toc/error.hpp"
#include "toc/matrix.hpp"

namespace toc {

// First tree layer I plus the per-row code table D (flattened, with
// offsets). Codes use decode numbering: 0 is the root and never stored,
// 1..|I| name I entries, larger codes name phase-two tree nodes.
class LogicalEncoding {
 public:
  LogicalEncoding() : row_offsets_{0} {}

  LogicalEncoding(std::size_t n_rows, std::size_t n_cols, std::vector<ColumnValuePair> first_layer,
                  std::vector<Code> codes, std::vector<std::size_t> row_offsets)
      : n_rows_(n_rows),
        n_cols_(n_cols),
        first_layer_(std::move(first_layer)),
        codes_(std::move(codes)),
        row_offsets_(std::move(row_offsets)) {
    if (row_offsets_.size() != n_rows_ + 1 || row_offsets_.front() != 0 ||
        row_offsets_.back() != codes_.size() ||
        !std::is_sorted(row_offsets_.begin(), row_offsets_.end())) {
      throw CorruptEncoding("row offsets do not partition the code stream");
    }
    for (const auto& p : first_layer_) {
      if (p.column >= n_cols_) {
        throw CorruptEncoding("first-layer column " + std::to_string(p.column) + " out of range");
      }
    }
  }

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }

  std::span<const ColumnValuePair> first_layer() const noexcept { return first_layer_; }
  std::span<ColumnValuePair> first_layer() noexcept { return first_layer_; }

  std::span<const Code> codes() const noexcept { return codes_; }
  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }

  std::span<const Code> row_codes(std::size_t r) const {
    return {codes_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  // Nodes created by phase two of the tree rebuild: one per non-final code of each row.
  std::size_t extension_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t r = 0; r < n_rows_; ++r) {
      const std::size_t len = row_offsets_[r + 1] - row_offsets_[r];
      if (len > 0) n += len - 1;
    }
    return n;
  }

  std::size_t tree_size() const noexcept { return 1 + first_layer_.size() + extension_count(); }

  friend bool operator==(const LogicalEncoding&, const LogicalEncoding&) = default;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<ColumnValuePair> first_layer_;
  std::vector<Code> codes_;
  std::vector<std::size_t> row_offsets_;
};

// Encoder output with the dictionary and the codes in encoder numbering
// (start-index helpers first), kept for inspection.
struct EncodeTrace {
  LogicalEncoding encoding;
  EncoderDictionary dictionary;
  std::vector<std::vector<Code>> encoder_codes;
};

namespace detail {

template <bool kTrace>
void encode_into(const SparseRowMatrix& s, EncoderDictionary& dict, LogicalEncoding& out,
                 std::vector<std::vector<Code>>* trace) {
  const std::size_t n_cols = s.n_cols();
  if (n_cols >= kNotFound) throw InvalidArgument("encode: too many columns");

  // Step 1: start indexes, then one entry per unique (column, value) in scan order.
  for (std::size_t c = 0; c < n_cols; ++c) dict.add_start_index(static_cast<std::uint32_t>(c));
  std::vector<ColumnValuePair> first_layer;
  for (std::size_t r = 0; r < s.n_rows(); ++r) {
    for (const auto& e : s.row(r)) {
      const Code start = static_cast<Code>(e.column);
      if (get_index(dict, start, e) == kNotFound) {
        dict.add(start, e);
        first_layer.push_back(e);
      }
    }
  }

  // Step 2: emit longest matches, extending by the next pair unless the
  // match reached the end of the row. Encoder code e maps to decode code
  // e - n_cols + 1 since helpers occupy 0..n_cols-1 and the root takes 0.
  const Code shift = static_cast<Code>(n_cols) - 1;
  std::vector<Code> codes;
  codes.reserve(s.nnz());
  std::vector<std::size_t> offsets;
  offsets.reserve(s.n_rows() + 1);
  offsets.push_back(0);
  for (std::size_t r = 0; r < s.n_rows(); ++r) {
    const auto row = s.row(r);
    if constexpr (kTrace) trace->emplace_back();
    std::size_t pos = 0;
    while (pos < row.size()) {
      const Match m = get_longest_match(dict, row, pos);
      pos = m.next_pos;
      if (pos < row.size()) dict.add(m.code, row[pos]);
      codes.push_back(m.code - shift);
      if constexpr (kTrace) trace->back().push_back(m.code);
    }
    offsets.push_back(codes.size());
  }
  out = LogicalEncoding(s.n_rows(), n_cols, std::move(first_layer), std::move(codes),
                        std::move(offsets));
}

}  // namespace detail

inline LogicalEncoding encode(const SparseRowMatrix& s) {
  EncoderDictionary dict;
  LogicalEncoding out;
  detail::encode_into<false>(s, dict, out, nullptr);
  return out;
}

inline EncodeTrace encode_traced(const SparseRowMatrix& s) {
  EncodeTrace t;
  detail::encode_into<true>(s, t.dictionary, t.encoding, &t.encoder_codes);
  return t;
}

// Decode-side prefix tree: parent links only, node 0 is the root. first[i]
// is the first pair of node i's sequence.
struct DecodeTree {
  std::vector<Code> parent;
  std::vector<ColumnValuePair> key;
  std::vector<ColumnValuePair> first;

  std::size_t size() const noexcept { return parent.size(); }
};

inline DecodeTree build_prefix_tree(const LogicalEncoding& enc) {
  const auto first_layer = enc.first_layer();
  const std::size_t n_nodes = enc.tree_size();
  DecodeTree t;
  t.parent.reserve(n_nodes);
  t.key.reserve(n_nodes);
  t.first.reserve(n_nodes);
  t.parent.push_back(0);
  t.key.push_back({});
  t.first.push_back({});

  // Phase I: first layer hangs off the root.
  for (const auto& p : first_layer) {
    t.parent.push_back(0);
    t.key.push_back(p);
    t.first.push_back(p);
  }

  // Phase II: one node per adjacent code pair within a row.
  for (std::size_t r = 0; r < enc.n_rows(); ++r) {
    const auto row = enc.row_codes(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const std::size_t defined = t.size();
      if (row[j] == 0 || row[j] >= defined) {
        throw CorruptEncoding("row " + std::to_string(r) + " position " + std::to_string(j) +
                              ": code " + std::to_string(row[j]) + " referenced before definition");
      }
      if (j + 1 == row.size()) break;
      if (row[j + 1] == 0 || row[j + 1] >= defined) {
        throw CorruptEncoding("row " + std::to_string(r) + " position " + std::to_string(j + 1) +
                              ": code " + std::to_string(row[j + 1]) +
                              " referenced before definition");
      }
      t.parent.push_back(row[j]);
      t.first.push_back(t.first[row[j]]);
      t.key.push_back(t.first[row[j + 1]]);
    }
  }
  return t;
}

// Sequence of (column, value) pairs spelled by a node, root excluded.
inline std::vector<ColumnValuePair> node_sequence(const DecodeTree& t, Code code) {
  if (code == 0 || code >= t.size()) {
    throw InvalidArgument("node_sequence: code " + std::to_string(code) + " has no sequence");
  }
  std::vector<ColumnValuePair> seq;
  for (Code c = code; c != 0; c = t.parent[c]) seq.push_back(t.key[c]);
  std::reverse(seq.begin(), seq.end());
  return seq;
}

// Full decompression. Explicit zeros (possible after a scaling by zero) are
// dropped since they denote absent entries.
inline SparseRowMatrix decode(const LogicalEncoding& enc, const DecodeTree& t) {
  SparseRowMatrix out(enc.n_cols());
  std::vector<ColumnValuePair> row;
  std::vector<ColumnValuePair> reversed;
  for (std::size_t r = 0; r < enc.n_rows(); ++r) {
    row.clear();
    for (const Code code : enc.row_codes(r)) {
      reversed.clear();
      for (Code c = code; c != 0; c = t.parent[c]) reversed.push_back(t.key[c]);
      for (auto it = reversed.rbegin(); it != reversed.rend(); ++it)
        if (it->value != 0.0) row.push_back(*it);
    }
    try {
      out.append_row(row);
    } catch (const InvalidArgument& e) {
      throw CorruptEncoding(std::string("decoded ") + e.what());
    }
  }
  return out;
}

inline SparseRowMatrix decode(const LogicalEncoding& enc) { return decode(enc, build_prefix_tree(enc)); }

}  // namespace toc
