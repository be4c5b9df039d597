#pragma once

// Bodies of the `toc` subcommands. Each takes parsed options and output
// streams and returns a process exit code, so tests drive them directly.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "toc/compressed.hpp"
#include "toc/encoding.hpp"
#include "toc/error.hpp"
#include "toc/io.hpp"
#include "toc/matrix.hpp"
#include "toc/mgd.hpp"
#include "toc/physical.hpp"
#include "toc/synth.hpp"

namespace toc::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kVerifyFailed = 3 };

enum class ReportFormat { kCsv, kJson };

inline ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw InvalidArgument("unknown report format '" + std::string(s) + "'");
}

struct ReportRow {
  std::string metric;
  double value = 0.0;
  std::string units;
};

using Report = std::vector<ReportRow>;

inline const ReportRow* find_metric(const Report& report, std::string_view metric) {
  for (const auto& r : report)
    if (r.metric == metric) return &r;
  return nullptr;
}

inline void write_report(std::ostream& out, const Report& rows, ReportFormat fmt) {
  auto number = [](double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
  };
  if (fmt == ReportFormat::kCsv) {
    out << "metric,value,units\n";
    for (const auto& r : rows) out << r.metric << ',' << number(r.value) << ',' << r.units << '\n';
    return;
  }
  auto doc = nlohmann::ordered_json::array();
  for (const auto& r : rows) doc.push_back({{"metric", r.metric}, {"value", r.value}, {"units", r.units}});
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// compress / decompress / verify

// Encodes each batch independently; batches fan out over `threads` workers
// and land in batch order.
inline StoredBatches compress_dataset(const LabeledDataset& input, std::size_t batch_size,
                                      std::optional<std::uint64_t> shuffle_seed, unsigned threads = 1) {
  if (batch_size < 1) throw InvalidArgument("--batch-size must be >= 1");
  const LabeledDataset ds = shuffle_seed ? shuffle_once(input, *shuffle_seed) : input;
  StoredBatches s;
  s.batch_size = static_cast<std::uint32_t>(batch_size);
  s.total_rows = static_cast<std::uint32_t>(ds.size());
  s.n_cols = static_cast<std::uint32_t>(ds.features.n_cols());
  s.seed = shuffle_seed.value_or(kUnshuffledSeed);
  const std::size_t n_batches = (ds.size() + batch_size - 1) / batch_size;
  s.blocks.resize(n_batches);
  s.labels.resize(n_batches);

  auto work = [&](std::size_t worker, std::size_t n_workers) {
    for (std::size_t b = worker; b < n_batches; b += n_workers) {
      const std::size_t begin = b * batch_size;
      const std::size_t end = std::min(ds.size(), begin + batch_size);
      s.blocks[b] = encode(ds.features.slice(begin, end));
      s.labels[b].assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                         ds.labels.begin() + static_cast<std::ptrdiff_t>(end));
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n_batches));
  if (n_workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work, w, n_workers);
  }
  return s;
}

inline LabeledDataset decompress_store(const StoredBatches& s) {
  SparseRowMatrix f(s.n_cols);
  DenseVector y;
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    const SparseRowMatrix rows = decode(s.blocks[b]);
    for (std::size_t r = 0; r < rows.n_rows(); ++r) f.append_row(rows.row(r));
    y.insert(y.end(), s.labels[b].begin(), s.labels[b].end());
  }
  return LabeledDataset(std::move(f), std::move(y));
}

// First differing row/entry between two sparse matrices, or nullopt.
inline std::optional<std::string> first_difference(const SparseRowMatrix& expected, const SparseRowMatrix& actual) {
  if (expected.n_cols() != actual.n_cols()) {
    return "column count " + std::to_string(actual.n_cols()) + " != " + std::to_string(expected.n_cols());
  }
  const std::size_t rows = std::min(expected.n_rows(), actual.n_rows());
  for (std::size_t r = 0; r < rows; ++r) {
    const auto a = expected.row(r);
    const auto b = actual.row(r);
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!(a[k] == b[k])) {
        return "row " + std::to_string(r) + " entry " + std::to_string(k) + " (column " +
               std::to_string(a[k].column) + ") differs";
      }
    }
    if (a.size() != b.size()) return "row " + std::to_string(r) + " has a different number of nonzeros";
  }
  if (expected.n_rows() != actual.n_rows()) {
    return "row count " + std::to_string(actual.n_rows()) + " != " + std::to_string(expected.n_rows());
  }
  return std::nullopt;
}

struct VerifyOutcome {
  bool ok = true;
  std::string message;
};

// Decodes every stored block against the matching input slice, then
// re-encodes the slice and checks it decodes back and matches the stored
// encoding.
inline VerifyOutcome verify_store(const LabeledDataset& input, const StoredBatches& s) {
  const LabeledDataset ds = s.seed == kUnshuffledSeed ? input : shuffle_once(input, s.seed);
  if (ds.size() != s.total_rows) {
    return {false, "store holds " + std::to_string(s.total_rows) + " rows, input has " + std::to_string(ds.size())};
  }
  if (ds.features.n_cols() != s.n_cols) {
    return {false, "store has " + std::to_string(s.n_cols) + " columns, input has " +
                       std::to_string(ds.features.n_cols())};
  }
  std::size_t begin = 0;
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    const std::size_t end = begin + s.blocks[b].n_rows();
    if (end > ds.size()) return {false, "batch " + std::to_string(b) + " extends past the input"};
    const SparseRowMatrix slice = ds.features.slice(begin, end);
    const std::string where = "batch " + std::to_string(b) + " (rows " + std::to_string(begin) + ".." +
                              std::to_string(end - 1) + "): ";
    if (auto diff = first_difference(slice, decode(s.blocks[b]))) return {false, where + "stored block " + *diff};
    const LogicalEncoding fresh = encode(slice);
    if (auto diff = first_difference(slice, decode(fresh))) return {false, where + "recompression " + *diff};
    if (!(fresh == s.blocks[b])) return {false, where + "stored encoding differs from recompression"};
    for (std::size_t r = 0; r < s.labels[b].size(); ++r) {
      if (std::bit_cast<std::uint64_t>(s.labels[b][r]) != std::bit_cast<std::uint64_t>(ds.labels[begin + r])) {
        return {false, where + "label of row " + std::to_string(begin + r) + " differs"};
      }
    }
    begin = end;
  }
  return {true, "lossless: " + std::to_string(s.blocks.size()) + " batches, " + std::to_string(s.total_rows) + " rows"};
}

struct CompressOptions {
  DatasetDescriptor input;
  std::string output;
  std::size_t batch_size = 250;
  std::optional<std::uint64_t> shuffle_seed;
  unsigned threads = 1;
};

inline int cmd_compress(const CompressOptions& o, std::ostream& out) {
  const LabeledDataset ds = ingest(o.input);
  const StoredBatches s = compress_dataset(ds, o.batch_size, o.shuffle_seed, o.threads);
  const Bytes bytes = serialize_store(s);
  write_file(o.output, bytes);
  out << "compressed " << ds.size() << " rows into " << s.blocks.size() << " batches, " << bytes.size()
      << " bytes\n";
  return kOk;
}

inline int cmd_decompress(const std::string& store, const std::string& output, TextFormat fmt, std::ostream& out) {
  const StoredBatches s = deserialize_store(read_file(store));
  const LabeledDataset ds = decompress_store(s);
  std::ofstream f(output);
  if (!f) throw Error("cannot write '" + output + "'");
  write_dataset(f, ds, fmt);
  out << "decompressed " << ds.size() << " rows\n";
  return kOk;
}

inline int cmd_verify(const DatasetDescriptor& input, const std::string& store, std::ostream& out,
                      std::ostream& err) {
  const LabeledDataset ds = ingest(input);
  const StoredBatches s = deserialize_store(read_file(store));
  const VerifyOutcome v = verify_store(ds, s);
  (v.ok ? out : err) << (v.ok ? "" : "verification failed: ") << v.message << '\n';
  return v.ok ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------------------
// bench-ratio

struct BlockSizes {
  std::uint64_t dense = 0;
  std::uint64_t csr = 0;
  std::uint64_t toc_logical = 0;
  std::uint64_t toc_physical = 0;
};

// Dense: 8-byte cells. CSR: 4-byte column + 8-byte value per nonzero and
// 4-byte row offsets. Logical TOC: the same widths for I entries, codes, and
// row offsets, before bit packing and value indexing.
inline BlockSizes measure_block(const SparseRowMatrix& rows) {
  const LogicalEncoding enc = encode(rows);
  BlockSizes b;
  b.dense = 8ull * rows.n_rows() * rows.n_cols();
  b.csr = 12ull * rows.nnz() + 4ull * (rows.n_rows() + 1);
  b.toc_logical = 12ull * enc.first_layer().size() + 4ull * enc.codes().size() + 4ull * (rows.n_rows() + 1);
  b.toc_physical = serialize_block(enc).size();
  return b;
}

inline Report bench_ratio(const LabeledDataset& ds, const std::vector<std::size_t>& batch_sizes) {
  Report report;
  for (const std::size_t bs : batch_sizes) {
    if (bs < 1) throw InvalidArgument("--batch-size must be >= 1");
    BlockSizes total;
    double dense_over_toc = 0.0, csr_over_toc = 0.0, dense_over_csr = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < ds.size(); begin += bs, ++n_batches) {
      const BlockSizes b = measure_block(ds.features.slice(begin, std::min(ds.size(), begin + bs)));
      total.dense += b.dense;
      total.csr += b.csr;
      total.toc_logical += b.toc_logical;
      total.toc_physical += b.toc_physical;
      dense_over_toc += double(b.dense) / double(b.toc_physical);
      csr_over_toc += double(b.csr) / double(b.toc_physical);
      dense_over_csr += double(b.dense) / double(b.csr);
    }
    const double n = std::max<double>(1.0, double(n_batches));
    const std::string p = "batch_" + std::to_string(bs) + ".";
    report.push_back({p + "batches", double(n_batches), "count"});
    report.push_back({p + "dense_bytes", double(total.dense), "bytes"});
    report.push_back({p + "csr_bytes", double(total.csr), "bytes"});
    report.push_back({p + "toc_logical_bytes", double(total.toc_logical), "bytes"});
    report.push_back({p + "toc_physical_bytes", double(total.toc_physical), "bytes"});
    report.push_back({p + "ratio_dense_over_toc", dense_over_toc / n, "x"});
    report.push_back({p + "ratio_csr_over_toc", csr_over_toc / n, "x"});
    report.push_back({p + "ratio_dense_over_csr", dense_over_csr / n, "x"});
  }
  return report;
}

// ---------------------------------------------------------------------------
// bench-kernels

struct KernelBenchOptions {
  KernelKind kernel = KernelKind::kMatVec;
  std::size_t batch_size = 250;
  std::size_t repeats = 5;
  std::size_t width = 8;  // columns (right) or rows (left) of M for matrix kernels
  std::uint64_t seed = 7;
};

struct KernelBenchResult {
  Report report;
  bool cost_model_exact = true;
};

namespace detail {

struct KernelRun {
  std::uint64_t compressed_ops = 0;
  std::uint64_t predicted_ops = 0;
  std::uint64_t dense_ops = 0;
  std::uint64_t csr_ops = 0;
  double compressed_seconds = 0.0;
  double dense_seconds = 0.0;
  double csr_seconds = 0.0;
};

template <typename F>
double time_repeated(std::size_t repeats, F&& f) {
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < repeats; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline KernelRun run_kernel(const SparseRowMatrix& rows, const KernelBenchOptions& o, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CompressedMatrix a = CompressedMatrix::compress(rows);
  a.tree();
  const DenseMatrix dense = sparse_to_dense(rows);
  const std::size_t repeats = std::max<std::size_t>(1, o.repeats);
  const bool matrix_kernel = o.kernel == KernelKind::kMatMatRight || o.kernel == KernelKind::kMatMatLeft;
  const std::size_t width = matrix_kernel ? o.width : 1;
  KernelRun run;
  run.predicted_ops = kernel_cost(a, o.kernel, width);
  run.dense_ops = dense_kernel_cost(rows.n_rows(), rows.n_cols(), width);
  run.csr_ops = csr_kernel_cost(rows.nnz(), width);

  OpCounter counter;
  volatile double sink = 0.0;
  switch (o.kernel) {
    case KernelKind::kMatVec: {
      DenseVector v(rows.n_cols());
      for (double& x : v) x = u(rng);
      sink = sink + matvec(a, v, &counter).size();
      run.compressed_seconds = time_repeated(repeats, [&] { sink = sink + matvec(a, v).size(); });
      run.dense_seconds = time_repeated(repeats, [&] { sink = sink + dense_matvec(dense, v).size(); });
      run.csr_seconds = time_repeated(repeats, [&] { sink = sink + csr_matvec(rows, v).size(); });
      break;
    }
    case KernelKind::kVecMat: {
      DenseVector v(rows.n_rows());
      for (double& x : v) x = u(rng);
      sink = sink + vecmat(v, a, &counter).size();
      run.compressed_seconds = time_repeated(repeats, [&] { sink = sink + vecmat(v, a).size(); });
      run.dense_seconds = time_repeated(repeats, [&] { sink = sink + dense_vecmat(v, dense).size(); });
      run.csr_seconds = time_repeated(repeats, [&] { sink = sink + csr_vecmat(v, rows).size(); });
      break;
    }
    case KernelKind::kMatMatRight: {
      DenseMatrix m(rows.n_cols(), width);
      for (double& x : m.values()) x = u(rng);
      sink = sink + matmat_right(a, m, &counter).n_rows();
      run.compressed_seconds = time_repeated(repeats, [&] { sink = sink + matmat_right(a, m).n_rows(); });
      run.dense_seconds = time_repeated(repeats, [&] { sink = sink + dense_matmat(dense, m).n_rows(); });
      run.csr_seconds = time_repeated(repeats, [&] { sink = sink + csr_matmat_right(rows, m).n_rows(); });
      break;
    }
    case KernelKind::kMatMatLeft: {
      DenseMatrix m(width, rows.n_rows());
      for (double& x : m.values()) x = u(rng);
      sink = sink + matmat_left(m, a, &counter).n_rows();
      run.compressed_seconds = time_repeated(repeats, [&] { sink = sink + matmat_left(m, a).n_rows(); });
      run.dense_seconds = time_repeated(repeats, [&] { sink = sink + dense_matmat(m, dense).n_rows(); });
      run.csr_seconds = time_repeated(repeats, [&] { sink = sink + csr_matmat_left(m, rows).n_rows(); });
      break;
    }
  }
  run.compressed_ops = counter.multiply_adds;
  const double per = 1.0 / double(repeats);
  run.compressed_seconds *= per;
  run.dense_seconds *= per;
  run.csr_seconds *= per;
  return run;
}

inline void append_run(Report& report, const std::string& prefix, const KernelRun& r) {
  report.push_back({prefix + "compressed_ops", double(r.compressed_ops), "multiply_adds"});
  report.push_back({prefix + "predicted_ops", double(r.predicted_ops), "multiply_adds"});
  report.push_back({prefix + "dense_ops", double(r.dense_ops), "multiply_adds"});
  report.push_back({prefix + "csr_ops", double(r.csr_ops), "multiply_adds"});
  report.push_back({prefix + "ratio_compressed_over_dense",
                    r.dense_ops ? double(r.compressed_ops) / double(r.dense_ops) : 0.0, "x"});
  report.push_back({prefix + "ratio_compressed_over_csr",
                    r.csr_ops ? double(r.compressed_ops) / double(r.csr_ops) : 0.0, "x"});
  report.push_back({prefix + "compressed_seconds", r.compressed_seconds, "s"});
  report.push_back({prefix + "dense_seconds", r.dense_seconds, "s"});
  report.push_back({prefix + "csr_seconds", r.csr_seconds, "s"});
  report.push_back({prefix + "cost_model_exact", r.compressed_ops == r.predicted_ops ? 1.0 : 0.0, "bool"});
}

}  // namespace detail

// Per-batch kernel comparison over the dataset in input order.
inline KernelBenchResult bench_kernels(const LabeledDataset& ds, const KernelBenchOptions& o) {
  if (o.batch_size < 1) throw InvalidArgument("--batch-size must be >= 1");
  std::mt19937_64 rng(o.seed);
  detail::KernelRun sum;
  bool exact = true;
  for (std::size_t begin = 0; begin < ds.size(); begin += o.batch_size) {
    const auto r = detail::run_kernel(ds.features.slice(begin, std::min(ds.size(), begin + o.batch_size)), o, rng);
    exact = exact && r.compressed_ops == r.predicted_ops;
    sum.compressed_ops += r.compressed_ops;
    sum.predicted_ops += r.predicted_ops;
    sum.dense_ops += r.dense_ops;
    sum.csr_ops += r.csr_ops;
    sum.compressed_seconds += r.compressed_seconds;
    sum.dense_seconds += r.dense_seconds;
    sum.csr_seconds += r.csr_seconds;
  }
  KernelBenchResult out;
  detail::append_run(out.report, std::string(to_string(o.kernel)) + ".", sum);
  out.cost_model_exact = exact;
  return out;
}

// The whole dataset duplicated 2^k times for k = 0..max_k, each compressed as
// a single block.
inline KernelBenchResult bench_scaling(const LabeledDataset& base, std::size_t max_k, KernelBenchOptions o) {
  std::mt19937_64 rng(o.seed);
  KernelBenchResult out;
  for (std::size_t k = 0; k <= max_k; ++k) {
    const LabeledDataset ds = duplicate_rows(base, std::size_t{1} << k);
    o.batch_size = ds.size();
    const auto r = detail::run_kernel(ds.features, o, rng);
    out.cost_model_exact = out.cost_model_exact && r.compressed_ops == r.predicted_ops;
    detail::append_run(out.report, std::string(to_string(o.kernel)) + ".k" + std::to_string(k) + ".", r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  DatasetDescriptor input;
  TrainConfig config;
  std::string model_output;  // empty: no model file
  std::string trace_output;  // empty: trace goes to the output stream
};

inline void write_trace(std::ostream& out, const LossTrace& t) {
  out << "epoch,risk,seconds\n" << std::setprecision(17);
  out << 0 << ',' << t.initial_risk << ",0\n";
  for (std::size_t e = 0; e < t.risk.size(); ++e) out << e + 1 << ',' << t.risk[e] << ',' << t.seconds[e] << '\n';
}

inline int cmd_train(const TrainOptions& o, std::ostream& out) {
  o.config.validate();
  const LabeledDataset ds = ingest(o.input);
  const TrainResult r = train(ds, o.config);
  if (!o.model_output.empty()) write_file(o.model_output, serialize_model(r.model, o.config.loss));
  if (o.trace_output.empty()) {
    write_trace(out, r.trace);
  } else {
    std::ofstream f(o.trace_output);
    if (!f) throw Error("cannot write '" + o.trace_output + "'");
    write_trace(f, r.trace);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// gen-synth

struct SynthOptions {
  SynthConfig config;
  bool random_dense = false;  // incompressible continuous values instead of templates
  std::size_t rows = 500;     // used with random_dense
  std::string output;
  TextFormat format = TextFormat::kLibsvm;
};

inline int cmd_gen_synth(const SynthOptions& o, std::ostream& out) {
  const LabeledDataset ds =
      o.random_dense ? make_random_dense(o.rows, o.config.n_cols, o.config.seed) : make_synthetic(o.config);
  std::ofstream f(o.output);
  if (!f) throw Error("cannot write '" + o.output + "'");
  write_dataset(f, ds, o.format);
  out << "wrote " << ds.size() << " rows x " << ds.features.n_cols() << " columns\n";
  return kOk;
}

}  // namespace toc::cli
