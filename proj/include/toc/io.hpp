#pragma once

// Text dataset formats and the binary containers written by the CLI.
//
// Batch store ("TOCS"), little-endian:
//   "TOCS" | version u8 | batch_count u32 | batch_size u32 | total_rows u32 |
//   n_cols u32 | seed u64, then per batch:
//   block_bytes u32 | block | label_count u32 | f64 x label_count
// A seed of kUnshuffledSeed means rows are stored in input order.
//
// Model file ("TOCM"): "TOCM" | loss u8 | n_cols u32 | hidden u32 | f64 values
// (linear weights, or W1 row-major followed by W2).

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "toc/error.hpp"
#include "toc/matrix.hpp"
#include "toc/mgd.hpp"
#include "toc/physical.hpp"

namespace toc {

enum class TextFormat { kLibsvm, kCsv };

inline TextFormat text_format_from_string(std::string_view s) {
  if (s == "libsvm") return TextFormat::kLibsvm;
  if (s == "csv") return TextFormat::kCsv;
  throw InvalidArgument("unknown format '" + std::string(s) + "'");
}

struct DatasetDescriptor {
  std::string path;
  TextFormat format = TextFormat::kLibsvm;
  std::optional<std::size_t> n_cols;
  bool has_header = false;  // csv only
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ParseError(line, "bad number '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) throw ParseError(line, "non-finite number '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_index(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ParseError(line, "bad feature index '" + std::string(s) + "'");
  }
  return v;
}

inline void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), p);
}

}  // namespace detail

// "label idx:val idx:val ..." with 1-based strictly ascending indexes.
// Explicit zero values are dropped.
inline LabeledDataset parse_libsvm(std::istream& in, std::optional<std::size_t> n_cols = std::nullopt) {
  std::vector<std::vector<ColumnValuePair>> rows;
  DenseVector labels;
  std::size_t max_index = 0;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    std::string_view line = detail::trim(text);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = detail::trim(line.substr(0, hash));
    if (line.empty()) continue;

    std::istringstream tokens{std::string(line)};
    std::string tok;
    tokens >> tok;
    labels.push_back(detail::parse_double(tok, line_no));
    auto& row = rows.emplace_back();
    std::uint64_t prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(line_no, "expected idx:value, got '" + tok + "'");
      const std::uint64_t idx = detail::parse_index(std::string_view(tok).substr(0, colon), line_no);
      if (idx == 0) throw ParseError(line_no, "feature indexes are 1-based");
      if (idx <= prev) throw ParseError(line_no, "feature indexes must be strictly ascending");
      if (idx > std::numeric_limits<std::uint32_t>::max()) throw ParseError(line_no, "feature index too large");
      prev = idx;
      const double v = detail::parse_double(std::string_view(tok).substr(colon + 1), line_no);
      max_index = std::max<std::size_t>(max_index, idx);
      if (v != 0.0) row.push_back({static_cast<std::uint32_t>(idx - 1), v});
    }
  }
  const std::size_t cols = n_cols.value_or(max_index);
  if (cols < max_index) {
    throw InvalidArgument("feature index " + std::to_string(max_index) + " exceeds n_cols " + std::to_string(cols));
  }
  return LabeledDataset(SparseRowMatrix(cols, rows), std::move(labels));
}

// Comma-separated dense rows; the last column is the label.
inline LabeledDataset parse_csv(std::istream& in, bool has_header) {
  std::vector<std::vector<ColumnValuePair>> rows;
  DenseVector labels;
  std::optional<std::size_t> width;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (line_no == 1 && has_header) continue;
    const std::string_view line = detail::trim(text);
    if (line.empty()) continue;
    std::vector<double> fields;
    std::size_t begin = 0;
    while (true) {
      const auto comma = line.find(',', begin);
      fields.push_back(detail::parse_double(line.substr(begin, comma - begin), line_no));
      if (comma == std::string_view::npos) break;
      begin = comma + 1;
    }
    if (fields.size() < 1) throw ParseError(line_no, "empty csv row");
    if (width && *width != fields.size()) {
      throw ParseError(line_no, "expected " + std::to_string(*width) + " fields, got " + std::to_string(fields.size()));
    }
    width = fields.size();
    labels.push_back(fields.back());
    auto& row = rows.emplace_back();
    for (std::size_t c = 0; c + 1 < fields.size(); ++c)
      if (fields[c] != 0.0) row.push_back({static_cast<std::uint32_t>(c), fields[c]});
  }
  return LabeledDataset(SparseRowMatrix(width ? *width - 1 : 0, rows), std::move(labels));
}

inline LabeledDataset ingest(const DatasetDescriptor& d) {
  std::ifstream in(d.path);
  if (!in) throw Error("cannot open '" + d.path + "'");
  if (d.format == TextFormat::kCsv) {
    auto ds = parse_csv(in, d.has_header);
    if (d.n_cols && *d.n_cols != ds.features.n_cols()) {
      throw InvalidArgument("csv has " + std::to_string(ds.features.n_cols()) + " feature columns, expected " +
                            std::to_string(*d.n_cols));
    }
    return ds;
  }
  return parse_libsvm(in, d.n_cols);
}

// Round-trippable text: shortest representation that parses back exactly.
inline void write_libsvm(std::ostream& out, const LabeledDataset& ds) {
  std::string line;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    line.clear();
    detail::append_double(line, ds.labels[r]);
    for (const auto& e : ds.features.row(r)) {
      line += ' ';
      line += std::to_string(std::uint64_t{e.column} + 1);
      line += ':';
      detail::append_double(line, e.value);
    }
    line += '\n';
    out << line;
  }
}

inline void write_csv(std::ostream& out, const LabeledDataset& ds) {
  std::string line;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    line.clear();
    const auto row = ds.features.row(r);
    std::size_t k = 0;
    for (std::size_t c = 0; c < ds.features.n_cols(); ++c) {
      if (k < row.size() && row[k].column == c) {
        detail::append_double(line, row[k++].value);
      } else {
        line += '0';
      }
      line += ',';
    }
    detail::append_double(line, ds.labels[r]);
    line += '\n';
    out << line;
  }
}

inline void write_dataset(std::ostream& out, const LabeledDataset& ds, TextFormat f) {
  if (f == TextFormat::kCsv) {
    write_csv(out, ds);
  } else {
    write_libsvm(out, ds);
  }
}

// ---------------------------------------------------------------------------
// Binary files

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

inline constexpr std::array<char, 4> kStoreMagic = {'T', 'O', 'C', 'S'};
inline constexpr std::uint8_t kStoreVersion = 1;
inline constexpr std::uint64_t kUnshuffledSeed = std::numeric_limits<std::uint64_t>::max();

struct StoredBatches {
  std::uint32_t batch_size = 0;
  std::uint32_t total_rows = 0;
  std::uint32_t n_cols = 0;
  std::uint64_t seed = kUnshuffledSeed;
  std::vector<LogicalEncoding> blocks;
  std::vector<DenseVector> labels;

  friend bool operator==(const StoredBatches&, const StoredBatches&) = default;
};

inline Bytes serialize_store(const StoredBatches& s) {
  if (s.blocks.size() != s.labels.size()) throw InvalidArgument("store: blocks and label sections disagree");
  Bytes out;
  ByteWriter w(out);
  w.put_tag(kStoreMagic);
  w.put_u8(kStoreVersion);
  w.put_u32(static_cast<std::uint32_t>(s.blocks.size()));
  w.put_u32(s.batch_size);
  w.put_u32(s.total_rows);
  w.put_u32(s.n_cols);
  w.put_u64(s.seed);
  Bytes block;
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    if (s.labels[b].size() != s.blocks[b].n_rows()) throw InvalidArgument("store: label count mismatch");
    block.clear();
    ByteWriter bw(block);
    serialize_block(bw, s.blocks[b]);
    w.put_u32(static_cast<std::uint32_t>(block.size()));
    w.put_raw(block);
    w.put_u32(static_cast<std::uint32_t>(s.labels[b].size()));
    for (const double y : s.labels[b]) w.put_f64(y);
  }
  return out;
}

inline StoredBatches deserialize_store(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_tag(kStoreMagic, "batch store");
  const std::size_t version_at = r.offset();
  if (const auto v = r.get_u8(); v != kStoreVersion) {
    throw FormatError(FormatError::Kind::kBadVersion, version_at, "unsupported store version " + std::to_string(v));
  }
  StoredBatches s;
  const std::uint32_t count = r.get_u32();
  s.batch_size = r.get_u32();
  s.total_rows = r.get_u32();
  s.n_cols = r.get_u32();
  s.seed = r.get_u64();
  std::size_t rows = 0;
  for (std::uint32_t b = 0; b < count; ++b) {
    const std::uint32_t len = r.get_u32();
    const std::size_t block_at = r.offset();
    ByteReader br(r.get_raw(len), block_at);
    auto enc = deserialize_block(br);
    if (!br.at_end()) throw FormatError(FormatError::Kind::kInconsistent, br.offset(), "trailing bytes in block");
    const std::size_t labels_at = r.offset();
    const std::uint32_t n_labels = r.get_u32();
    if (n_labels != enc.n_rows()) {
      throw FormatError(FormatError::Kind::kInconsistent, labels_at,
                        "batch " + std::to_string(b) + " has " + std::to_string(n_labels) + " labels for " +
                            std::to_string(enc.n_rows()) + " rows");
    }
    if (enc.n_cols() != s.n_cols) {
      throw FormatError(FormatError::Kind::kInconsistent, block_at, "batch " + std::to_string(b) + " column count differs");
    }
    if (r.remaining() / 8 < n_labels) throw FormatError(FormatError::Kind::kTruncated, r.offset(), "truncated labels");
    DenseVector y(n_labels);
    for (auto& v : y) v = r.get_f64();
    rows += enc.n_rows();
    s.blocks.push_back(std::move(enc));
    s.labels.push_back(std::move(y));
  }
  if (rows != s.total_rows) {
    throw FormatError(FormatError::Kind::kInconsistent, r.offset(), "batch rows do not sum to the stored total");
  }
  if (!r.at_end()) throw FormatError(FormatError::Kind::kInconsistent, r.offset(), "trailing bytes after store");
  return s;
}

inline constexpr std::array<char, 4> kModelMagic = {'T', 'O', 'C', 'M'};

inline Bytes serialize_model(const Model& model, LossKind loss) {
  Bytes out;
  ByteWriter w(out);
  w.put_tag(kModelMagic);
  w.put_u8(static_cast<std::uint8_t>(loss));
  if (const auto* nn = std::get_if<NnModel>(&model)) {
    w.put_u32(static_cast<std::uint32_t>(nn->w1.n_rows()));
    w.put_u32(static_cast<std::uint32_t>(nn->w1.n_cols()));
    for (const double v : nn->w1.values()) w.put_f64(v);
    for (const double v : nn->w2.values()) w.put_f64(v);
  } else {
    const auto& glm = std::get<GlmModel>(model);
    w.put_u32(static_cast<std::uint32_t>(glm.weights.size()));
    w.put_u32(0);
    for (const double v : glm.weights) w.put_f64(v);
  }
  return out;
}

struct LoadedModel {
  LossKind loss;
  Model model;
};

inline LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_tag(kModelMagic, "model");
  const std::size_t loss_at = r.offset();
  const std::uint8_t raw_loss = r.get_u8();
  if (raw_loss > static_cast<std::uint8_t>(LossKind::kNnMse)) {
    throw FormatError(FormatError::Kind::kInconsistent, loss_at, "unknown loss kind");
  }
  const auto loss = static_cast<LossKind>(raw_loss);
  const std::uint32_t n_cols = r.get_u32();
  const std::uint32_t hidden = r.get_u32();
  auto read_values = [&](std::size_t n) {
    if (r.remaining() / 8 < n) throw FormatError(FormatError::Kind::kTruncated, r.offset(), "truncated model");
    std::vector<double> v(n);
    for (auto& x : v) x = r.get_f64();
    return v;
  };
  LoadedModel m{loss, GlmModel{}};
  if (loss == LossKind::kNnMse) {
    auto w1 = read_values(std::size_t{n_cols} * hidden);
    auto w2 = read_values(hidden);
    m.model = NnModel{DenseMatrix(n_cols, hidden, std::move(w1)), DenseMatrix(hidden, 1, std::move(w2))};
  } else {
    m.model = GlmModel{read_values(n_cols)};
  }
  if (!r.at_end()) throw FormatError(FormatError::Kind::kInconsistent, r.offset(), "trailing bytes after model");
  return m;
}

}  // namespace toc
