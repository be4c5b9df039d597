#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "toc/error.hpp"
#include "toc/matrix.hpp"

namespace toc {

using Code = std::uint32_t;

inline constexpr Code kNotFound = std::numeric_limits<Code>::max();
// Parent of a start-index entry.
inline constexpr Code kNoParent = std::numeric_limits<Code>::max();

// Encoder-side trie. Entry codes are dense in creation order. Start-index
// entries carry no value; every other entry extends its parent's sequence
// by one (column, value) pair.
class EncoderDictionary {
 public:
  struct Entry {
    Code parent = kNoParent;
    std::int64_t start_index = -1;  // column of the first value; -1 for start-index helpers
    ColumnValuePair last{};         // pair appended by this entry (column only for helpers)
    std::uint32_t length = 0;       // number of values in the sequence
  };

  // An entry whose sequence occurs contiguously starting at start_index.
  struct Sequence {
    std::int64_t start_index = -1;
    std::vector<double> values;
    friend bool operator==(const Sequence&, const Sequence&) = default;
  };

  std::size_t size() const noexcept { return entries_.size(); }
  const Entry& entry(Code code) const { return entries_.at(code); }

  // Helper entry for a starting column; its children are single-pair entries.
  Code add_start_index(std::uint32_t column) {
    if (start_codes_.size() <= column) start_codes_.resize(column + 1, kNotFound);
    if (start_codes_[column] != kNotFound) {
      throw InvalidArgument("start index " + std::to_string(column) + " already present");
    }
    const Code code = next_code();
    entries_.push_back({kNoParent, -1, {column, 0.0}, 0});
    start_codes_[column] = code;
    return code;
  }

  Code start_code(std::uint32_t column) const {
    return column < start_codes_.size() ? start_codes_[column] : kNotFound;
  }

  // Extends the sequence of `parent` by `next`.
  Code add(Code parent, ColumnValuePair next) {
    if (parent >= entries_.size()) {
      throw std::logic_error("dictionary: extending nonexistent code " + std::to_string(parent));
    }
    const Entry& p = entries_[parent];
    if (p.length > 0 && next.column <= p.last.column) {
      throw std::logic_error("dictionary: extension column must follow the parent's last column");
    }
    if (p.length == 0 && next.column != p.last.column) {
      throw std::logic_error("dictionary: first value must sit at the start index");
    }
    const Code code = next_code();
    const std::int64_t start = p.length == 0 ? static_cast<std::int64_t>(next.column) : p.start_index;
    entries_.push_back({parent, start, next, p.length + 1});
    children_.emplace(Key{parent, next.column, std::bit_cast<std::uint64_t>(next.value)}, code);
    return code;
  }

  Code find(Code parent, ColumnValuePair next) const {
    const auto it =
        children_.find(Key{parent, next.column, std::bit_cast<std::uint64_t>(next.value)});
    return it == children_.end() ? kNotFound : it->second;
  }

  Sequence sequence(Code code) const {
    const Entry& e = entry(code);
    Sequence s{e.start_index, std::vector<double>(e.length)};
    for (Code c = code; entries_[c].length > 0; c = entries_[c].parent)
      s.values[entries_[c].length - 1] = entries_[c].last.value;
    return s;
  }

 private:
  struct Key {
    Code parent;
    std::uint32_t column;
    std::uint64_t value_bits;
    friend bool operator==(const Key&, const Key&) = default;
  };

  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = k.value_bits * 0x9E3779B97F4A7C15ull;
      h ^= (static_cast<std::uint64_t>(k.parent) << 32 | k.column) + 0x7F4A7C159E3779B9ull +
           (h << 6) + (h >> 2);
      h ^= h >> 31;
      h *= 0xBF58476D1CE4E5B9ull;
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
  };

  Code next_code() const {
    if (entries_.size() >= kNotFound) throw Error("dictionary: code space exhausted");
    return static_cast<Code>(entries_.size());
  }

  std::vector<Entry> entries_;
  std::vector<Code> start_codes_;
  std::unordered_map<Key, Code, KeyHash> children_;
};

// Code of the sequence `code` extended by `next`, or kNotFound. A start-index
// code looks up single-pair entries at its column.
inline Code get_index(const EncoderDictionary& dict, Code code, ColumnValuePair next) {
  return dict.find(code, next);
}

struct Match {
  Code code = kNotFound;
  std::size_t next_pos = 0;
  friend bool operator==(const Match&, const Match&) = default;
};

// Longest dictionary sequence matching row[pos..]; stops at the row end.
inline Match get_longest_match(const EncoderDictionary& dict, std::span<const ColumnValuePair> row,
                               std::size_t pos) {
  if (pos >= row.size()) throw InvalidArgument("get_longest_match: position past row end");
  const Code start = dict.start_code(row[pos].column);
  Code candidate = start == kNotFound ? kNotFound : dict.find(start, row[pos]);
  if (candidate == kNotFound) {
    throw std::logic_error("get_longest_match: pair at column " +
                           std::to_string(row[pos].column) + " missing from dictionary");
  }
  Match m;
  while (candidate != kNotFound) {
    m = {candidate, ++pos};
    candidate = pos < row.size() ? dict.find(m.code, row[pos]) : kNotFound;
  }
  return m;
}

}  // namespace toc
