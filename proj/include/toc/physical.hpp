#pragma once

// Byte layout of a compressed block. All integers are little-endian.
//
//   "TOC1" | version u8 | n_rows u32 | n_cols u32
//   unique_value_count u32 | f64 x count
//   I_count u32 | packed(column indexes) | packed(value-index refs)
//   D_total_codes u32 | packed(codes) | packed(row start offsets, n_rows + 1)
//
//   packed = count u32 | bytes_per_int u8 in {1,2,3,4} | count * bytes_per_int

#include <algorithm>
#include <array>
#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toc/encoding.hpp"
#include "toc/error.hpp"

namespace toc {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::array<char, 4> kBlockMagic = {'T', 'O', 'C', '1'};
inline constexpr std::uint8_t kBlockVersion = 1;

class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void put_uint(std::uint64_t x, unsigned width) {
    for (unsigned b = 0; b < width; ++b) out_.push_back(static_cast<std::uint8_t>(x >> (8 * b)));
  }
  void put_u8(std::uint8_t x) { out_.push_back(x); }
  void put_u32(std::uint32_t x) { put_uint(x, 4); }
  void put_u64(std::uint64_t x) { put_uint(x, 8); }
  void put_f64(double x) { put_u64(std::bit_cast<std::uint64_t>(x)); }
  void put_raw(std::span<const std::uint8_t> bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }
  void put_tag(std::span<const char, 4> tag) {
    for (char c : tag) out_.push_back(static_cast<std::uint8_t>(c));
  }

  std::size_t size() const noexcept { return out_.size(); }

 private:
  Bytes& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in, std::size_t base_offset = 0)
      : in_(in), base_(base_offset) {}

  std::uint64_t get_uint(unsigned width) {
    need(width);
    std::uint64_t x = 0;
    for (unsigned b = 0; b < width; ++b) x |= static_cast<std::uint64_t>(in_[pos_ + b]) << (8 * b);
    pos_ += width;
    return x;
  }
  std::uint8_t get_u8() { return static_cast<std::uint8_t>(get_uint(1)); }
  std::uint32_t get_u32() { return static_cast<std::uint32_t>(get_uint(4)); }
  std::uint64_t get_u64() { return get_uint(8); }
  double get_f64() { return std::bit_cast<double>(get_u64()); }

  std::span<const std::uint8_t> get_raw(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  void expect_tag(std::span<const char, 4> tag, std::string_view what) {
    const std::size_t at = offset();
    const auto got = get_raw(4);
    if (!std::equal(got.begin(), got.end(), tag.begin(),
                    [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); })) {
      throw FormatError(FormatError::Kind::kBadMagic, at, std::string("bad ") + std::string(what) + " magic");
    }
  }

  std::size_t offset() const noexcept { return base_ + pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw FormatError(FormatError::Kind::kTruncated, offset(),
                        "truncated input: need " + std::to_string(n) + " bytes, have " +
                            std::to_string(in_.size() - pos_));
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::size_t base_ = 0;
};

// ---------------------------------------------------------------------------
// Bit packing

// Bytes per integer for the array maximum: ceil(log2(max + 1) / 8), at least 1.
inline unsigned packed_width(std::uint64_t max_value) {
  if (max_value > 0xFFFFFFFFull) {
    throw FormatError(FormatError::Kind::kUnsupportedWidth, 0,
                      "integer " + std::to_string(max_value) + " needs more than 4 bytes");
  }
  return std::max(1u, static_cast<unsigned>((std::bit_width(max_value) + 7) / 8));
}

template <std::unsigned_integral T>
void pack_ints(ByteWriter& w, std::span<const T> xs) {
  if (xs.size() > 0xFFFFFFFFull) throw Error("pack_ints: array longer than 2^32 - 1");
  const std::uint64_t max_value =
      xs.empty() ? 0 : static_cast<std::uint64_t>(*std::max_element(xs.begin(), xs.end()));
  const unsigned width = packed_width(max_value);
  w.put_u32(static_cast<std::uint32_t>(xs.size()));
  w.put_u8(static_cast<std::uint8_t>(width));
  for (const T x : xs) w.put_uint(x, width);
}

template <std::unsigned_integral T>
Bytes pack_ints(std::span<const T> xs) {
  Bytes out;
  ByteWriter w(out);
  pack_ints(w, xs);
  return out;
}

inline std::vector<std::uint32_t> unpack_ints(ByteReader& r) {
  const std::uint32_t count = r.get_u32();
  const std::size_t width_at = r.offset();
  const unsigned width = r.get_u8();
  if (width < 1 || width > 4) {
    throw FormatError(FormatError::Kind::kUnsupportedWidth, width_at,
                      "bytes_per_int " + std::to_string(width) + " not in 1..4");
  }
  if (r.remaining() / width < count) {
    throw FormatError(FormatError::Kind::kTruncated, r.offset(),
                      "truncated packed array of " + std::to_string(count) + " integers");
  }
  std::vector<std::uint32_t> xs(count);
  const auto payload = r.get_raw(static_cast<std::size_t>(count) * width);
  const std::uint8_t* p = payload.data();
  // A 3-byte integer is read into 32 bits with the leading byte masked to zero.
  for (std::uint32_t i = 0; i < count; ++i, p += width) {
    switch (width) {
      case 1: xs[i] = p[0]; break;
      case 2: xs[i] = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8; break;
      case 3: {
        std::uint32_t v = 0;
        if constexpr (std::endian::native == std::endian::little) {
          std::memcpy(&v, p, 3);
        } else {
          v = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
              static_cast<std::uint32_t>(p[2]) << 16;
        }
        xs[i] = v & 0x00FFFFFFu;
        break;
      }
      default:
        xs[i] = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
    }
  }
  return xs;
}

inline std::vector<std::uint32_t> unpack_ints(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto xs = unpack_ints(r);
  if (!r.at_end()) {
    throw FormatError(FormatError::Kind::kInconsistent, r.offset(), "trailing bytes after packed array");
  }
  return xs;
}

// ---------------------------------------------------------------------------
// Value indexing

struct ValueIndex {
  std::vector<double> unique_values;  // first-occurrence order
  std::vector<std::uint32_t> refs;    // refs[i] indexes the value of pairs[i]

  double lookup(std::size_t i) const { return unique_values.at(refs.at(i)); }
};

inline ValueIndex value_index_build(std::span<const ColumnValuePair> pairs) {
  ValueIndex vi;
  std::unordered_map<std::uint64_t, std::uint32_t> seen;
  vi.refs.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto bits = std::bit_cast<std::uint64_t>(p.value);
    auto [it, inserted] = seen.try_emplace(bits, static_cast<std::uint32_t>(vi.unique_values.size()));
    if (inserted) vi.unique_values.push_back(p.value);
    vi.refs.push_back(it->second);
  }
  return vi;
}

// ---------------------------------------------------------------------------
// Block serialization

inline void serialize_block(ByteWriter& w, const LogicalEncoding& enc) {
  if (enc.n_rows() > 0xFFFFFFFFull || enc.n_cols() > 0xFFFFFFFFull ||
      enc.codes().size() > 0xFFFFFFFFull) {
    throw Error("serialize_block: dimensions exceed the 32-bit layout");
  }
  w.put_tag(kBlockMagic);
  w.put_u8(kBlockVersion);
  w.put_u32(static_cast<std::uint32_t>(enc.n_rows()));
  w.put_u32(static_cast<std::uint32_t>(enc.n_cols()));

  const auto first_layer = enc.first_layer();
  const ValueIndex vi = value_index_build(first_layer);
  w.put_u32(static_cast<std::uint32_t>(vi.unique_values.size()));
  for (const double v : vi.unique_values) w.put_f64(v);

  std::vector<std::uint32_t> columns(first_layer.size());
  for (std::size_t i = 0; i < first_layer.size(); ++i) columns[i] = first_layer[i].column;
  w.put_u32(static_cast<std::uint32_t>(first_layer.size()));
  pack_ints<std::uint32_t>(w, columns);
  pack_ints<std::uint32_t>(w, vi.refs);

  w.put_u32(static_cast<std::uint32_t>(enc.codes().size()));
  pack_ints<Code>(w, enc.codes());
  std::vector<std::uint64_t> offsets(enc.row_offsets().begin(), enc.row_offsets().end());
  pack_ints<std::uint64_t>(w, offsets);
}

inline Bytes serialize_block(const LogicalEncoding& enc) {
  Bytes out;
  ByteWriter w(out);
  serialize_block(w, enc);
  return out;
}

inline LogicalEncoding deserialize_block(ByteReader& r) {
  r.expect_tag(kBlockMagic, "block");
  const std::size_t version_at = r.offset();
  const std::uint8_t version = r.get_u8();
  if (version != kBlockVersion) {
    throw FormatError(FormatError::Kind::kBadVersion, version_at,
                      "unsupported block version " + std::to_string(version));
  }
  const std::uint32_t n_rows = r.get_u32();
  const std::uint32_t n_cols = r.get_u32();

  const std::uint32_t n_unique = r.get_u32();
  if (r.remaining() / 8 < n_unique) {
    throw FormatError(FormatError::Kind::kTruncated, r.offset(), "truncated value index");
  }
  std::vector<double> unique_values(n_unique);
  for (auto& v : unique_values) v = r.get_f64();

  const std::size_t i_at = r.offset();
  const std::uint32_t i_count = r.get_u32();
  const auto columns = unpack_ints(r);
  const auto refs = unpack_ints(r);
  if (columns.size() != i_count || refs.size() != i_count) {
    throw FormatError(FormatError::Kind::kInconsistent, i_at, "first-layer array lengths disagree");
  }
  std::vector<ColumnValuePair> first_layer(i_count);
  for (std::size_t i = 0; i < i_count; ++i) {
    if (refs[i] >= n_unique || columns[i] >= n_cols) {
      throw FormatError(FormatError::Kind::kInconsistent, i_at,
                        "first-layer entry " + std::to_string(i) + " out of range");
    }
    first_layer[i] = {columns[i], unique_values[refs[i]]};
  }

  const std::size_t d_at = r.offset();
  const std::uint32_t total_codes = r.get_u32();
  auto codes = unpack_ints(r);
  const auto raw_offsets = unpack_ints(r);
  if (codes.size() != total_codes || raw_offsets.size() != std::size_t{n_rows} + 1) {
    throw FormatError(FormatError::Kind::kInconsistent, d_at, "code table lengths disagree");
  }
  std::vector<std::size_t> offsets(raw_offsets.begin(), raw_offsets.end());
  try {
    return LogicalEncoding(n_rows, n_cols, std::move(first_layer), std::move(codes), std::move(offsets));
  } catch (const CorruptEncoding& e) {
    throw FormatError(FormatError::Kind::kInconsistent, d_at, e.what());
  }
}

inline LogicalEncoding deserialize_block(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto enc = deserialize_block(r);
  if (!r.at_end()) {
    throw FormatError(FormatError::Kind::kInconsistent, r.offset(), "trailing bytes after block");
  }
  return enc;
}

}  // namespace toc
