// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "toc/commands.hpp"
#include "toc/compressed.hpp"
#include "toc/mgd.hpp"
#include "toc/physical.hpp"
#include "toc/synth.hpp"

namespace {

using namespace toc;
using toc::testing::max_rel_err;

constexpr int kLosslessTrials = 1000;
constexpr int kKernelTrials = 500;
constexpr double kKernelRelTol = 1e-9;
constexpr double kScalingRatioMax = 0.2;
constexpr std::size_t kScalingMaxK = 6;
constexpr double kRatioOrderingFactor = 2.0;
constexpr double kGlmParityAbsTol = 1e-6;
constexpr double kNnParityAbsTol = 1e-5;
constexpr std::size_t kParityEpochs = 10;
constexpr double kGradientAbsTol = 1e-5;
constexpr double kFiniteDiffStep = 1e-6;
constexpr std::size_t kDemoEpochs = 10;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome losslessness() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> rows(1, 200), cols(1, 50);
  const double densities[] = {0.05, 0.30, 1.00};
  for (int t = 0; t < kLosslessTrials; ++t) {
    const SparseRowMatrix s = toc::testing::random_sparse(rng, rows(rng), cols(rng), densities[t % 3], 16);
    const LogicalEncoding enc = encode(s);
    if (!(decode(enc) == s)) return {false, "logical roundtrip differs at trial " + std::to_string(t)};
    const LogicalEncoding back = deserialize_block(serialize_block(enc));
    if (!(back == enc) || !(decode(back) == s)) return {false, "physical roundtrip differs at trial " + std::to_string(t)};
  }
  return {true, std::to_string(kLosslessTrials) + " matrices, logical and physical roundtrips bit-exact"};
}

Outcome toy_fixture() {
  const EncodeTrace t = encode_traced(toc::testing::toy_matrix());
  const std::vector<std::vector<Code>> expected_codes{{5, 6, 7, 8, 9}, {10, 11, 14, 9}};
  if (t.encoder_codes != expected_codes) return {false, "compressed tuples differ"};
  using Seq = EncoderDictionary::Sequence;
  // a..g = 1..7
  const std::vector<std::pair<Code, Seq>> entries{
      {0, {-1, {}}},        {1, {-1, {}}},    {2, {-1, {}}},     {3, {-1, {}}},     {4, {-1, {}}},
      {5, {0, {1}}},        {6, {1, {2}}},    {7, {2, {3}}},     {8, {3, {4}}},     {9, {4, {5}}},
      {10, {0, {6}}},       {11, {1, {7}}},   {12, {0, {1, 2}}}, {13, {1, {2, 3}}}, {14, {2, {3, 4}}},
      {15, {3, {4, 5}}},    {16, {0, {6, 7}}}, {17, {1, {7, 3}}}, {18, {2, {3, 4, 5}}}};
  if (t.dictionary.size() != entries.size()) return {false, "dictionary has " + std::to_string(t.dictionary.size()) + " entries, expected 19"};
  for (const auto& [code, seq] : entries) {
    if (!(t.dictionary.sequence(code) == seq)) return {false, "dictionary entry " + std::to_string(code) + " differs"};
  }
  return {true, "[5,6,7,8,9] [10,11,14,9], entries 0..18 exact"};
}

struct KernelStats {
  double worst = 0.0;
  std::string worst_op;
  std::uint64_t calls = 0;
  std::uint64_t cost_mismatches = 0;
};

void record(KernelStats& st, const char* op, double err) {
  if (err > st.worst || std::isnan(err)) {
    st.worst = std::isnan(err) ? INFINITY : err;
    st.worst_op = op;
  }
}

KernelStats run_kernel_trials() {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<std::size_t> rows(1, 80), cols(1, 40), width(1, 6), templates(1, 12);
  std::uniform_real_distribution<double> scalar(-3.0, 3.0);
  KernelStats st;
  for (int t = 0; t < kKernelTrials; ++t) {
    const std::size_t n = rows(rng), m = cols(rng);
    const SparseRowMatrix s = t % 2 ? toc::testing::templated_sparse(rng, n, m, templates(rng), 0.4)
                                    : toc::testing::random_sparse(rng, n, m, 0.3, 16);
    const CompressedMatrix a = CompressedMatrix::compress(s);
    const DenseMatrix d = sparse_to_dense(s);

    const double c = scalar(rng);
    DenseMatrix scaled = d;
    for (double& x : scaled.values()) x *= c;
    record(st, "scalar_multiply", max_rel_err(sparse_to_dense(scalar_multiply(a, c).decompress()).values(), scaled.values()));

    const int p = 2 + t % 3;
    DenseMatrix powered = d;
    for (double& x : powered.values()) x = std::pow(x, p);
    record(st, "elementwise_power", max_rel_err(sparse_to_dense(elementwise_power(a, p).decompress()).values(), powered.values()));

    DenseMatrix shifted = d;
    for (double& x : shifted.values()) x += c;
    record(st, "scalar_add", max_rel_err(scalar_add(a, c).values(), shifted.values()));

    const DenseVector v = toc::testing::random_vector(rng, m);
    const DenseVector u = toc::testing::random_vector(rng, n);
    const std::size_t w = width(rng);
    const DenseMatrix mr = toc::testing::random_dense(rng, m, w);
    const DenseMatrix ml = toc::testing::random_dense(rng, w, n);

    OpCounter c1, c2, c3, c4;
    record(st, "matvec", max_rel_err(matvec(a, v, &c1), dense_matvec(d, v)));
    record(st, "vecmat", max_rel_err(vecmat(u, a, &c2), dense_vecmat(u, d)));
    record(st, "matmat_right", max_rel_err(matmat_right(a, mr, &c3).values(), dense_matmat(d, mr).values()));
    record(st, "matmat_left", max_rel_err(matmat_left(ml, a, &c4).values(), dense_matmat(ml, d).values()));
    st.calls += 4;
    st.cost_mismatches += (c1.multiply_adds != kernel_cost(a, KernelKind::kMatVec)) +
                          (c2.multiply_adds != kernel_cost(a, KernelKind::kVecMat)) +
                          (c3.multiply_adds != kernel_cost(a, KernelKind::kMatMatRight, w)) +
                          (c4.multiply_adds != kernel_cost(a, KernelKind::kMatMatLeft, w));
  }
  return st;
}

const KernelStats& kernel_stats() {
  static const KernelStats st = run_kernel_trials();
  return st;
}

Outcome kernel_equivalence() {
  const KernelStats& st = kernel_stats();
  const bool ok = st.worst <= kKernelRelTol;
  return {ok, std::to_string(kKernelTrials) + " instances x 7 ops, worst relative error " + fmt(st.worst) +
                  (st.worst_op.empty() ? "" : " (" + st.worst_op + ")") + ", tolerance " + fmt(kKernelRelTol)};
}

Outcome cost_model() {
  const KernelStats& st = kernel_stats();
  if (st.cost_mismatches != 0) {
    return {false, std::to_string(st.cost_mismatches) + " of " + std::to_string(st.calls) + " calls differ from the closed form"};
  }
  SynthConfig cfg;
  cfg.copies = 1;
  const LabeledDataset base = make_synthetic(cfg);
  std::mt19937_64 rng(5);
  std::string trail;
  double ratio = INFINITY;
  for (std::size_t k = 0; k <= kScalingMaxK; ++k) {
    const LabeledDataset ds = duplicate_rows(base, std::size_t{1} << k);
    const CompressedMatrix a = CompressedMatrix::compress(ds.features);
    OpCounter ops;
    matvec(a, toc::testing::random_vector(rng, ds.features.n_cols()), &ops);
    if (ops.multiply_adds != kernel_cost(a, KernelKind::kMatVec)) {
      return {false, "scaling k=" + std::to_string(k) + " count differs from the closed form"};
    }
    ratio = double(ops.multiply_adds) / double(dense_kernel_cost(ds.size(), ds.features.n_cols()));
    trail += (k ? " " : "") + fmt(ratio);
  }
  const bool ok = ratio <= kScalingRatioMax;
  return {ok, std::to_string(st.calls) + " counted calls exact; compressed/dense at k=0..6: " + trail + " (k=6 limit " +
                  fmt(kScalingRatioMax) + ")"};
}

Outcome ratio_ordering() {
  SynthConfig cfg;  // 10 templates x 50 copies, 100 columns, 8 symbols
  const LabeledDataset ds = make_synthetic(cfg);
  const cli::Report r = cli::bench_ratio(ds, {ds.size()});
  const std::string p = "batch_" + std::to_string(ds.size()) + ".";
  const double dense_toc = cli::find_metric(r, p + "ratio_dense_over_toc")->value;
  const double dense_csr = cli::find_metric(r, p + "ratio_dense_over_csr")->value;
  const cli::Report rnd = cli::bench_ratio(make_random_dense(500, 100, 9), {500});
  const double random_dense_toc = cli::find_metric(rnd, "batch_500.ratio_dense_over_toc")->value;
  const bool ok = dense_toc >= kRatioOrderingFactor * dense_csr;
  return {ok, "dense/TOC " + fmt(dense_toc) + " vs dense/CSR " + fmt(dense_csr) + " (need >= " +
                  fmt(kRatioOrderingFactor) + "x); random dense data dense/TOC " + fmt(random_dense_toc) + " (reported)"};
}

LabeledDataset parity_dataset(SynthTask task) {
  SynthConfig cfg;
  cfg.copies = 100;
  cfg.n_cols = 50;
  cfg.seed = 3;
  cfg.task = task;
  return make_synthetic(cfg);
}

Outcome mgd_parity() {
  struct Case {
    const char* name;
    LossKind loss;
    SynthTask task;
    double tol;
  };
  const Case cases[] = {{"LR", LossKind::kLogistic, SynthTask::kClassification, kGlmParityAbsTol},
                        {"SVM", LossKind::kHinge, SynthTask::kClassification, kGlmParityAbsTol},
                        {"LinReg", LossKind::kSquared, SynthTask::kRegression, kGlmParityAbsTol},
                        {"NN", LossKind::kNnMse, SynthTask::kRegression, kNnParityAbsTol}};
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    const LabeledDataset ds = parity_dataset(c.task);
    TrainConfig cfg;
    cfg.loss = c.loss;
    cfg.batch_size = 50;
    cfg.learning_rate = 0.05;
    cfg.epochs = kParityEpochs;
    cfg.seed = 11;
    cfg.execution = Execution::kCompressed;
    const TrainResult tc = train(ds, cfg);
    cfg.execution = Execution::kDense;
    const TrainResult td = train(ds, cfg);
    double worst = std::abs(tc.trace.initial_risk - td.trace.initial_risk);
    for (std::size_t e = 0; e < kParityEpochs; ++e) worst = std::max(worst, std::abs(tc.trace.risk[e] - td.trace.risk[e]));
    ok = ok && worst <= c.tol;
    detail += std::string(detail.empty() ? "" : ", ") + c.name + " " + fmt(worst) + "/" + fmt(c.tol);
  }
  return {ok, "max per-epoch |risk diff| over " + std::to_string(kParityEpochs) + " epochs: " + detail};
}

double glm_batch_loss(const DenseMatrix& x, const DenseVector& y, const DenseVector& h, LossKind loss) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < x.n_cols(); ++j) z += x(i, j) * h[j];
    switch (loss) {
      case LossKind::kLogistic: total += std::log(1.0 + std::exp(-y[i] * z)); break;
      case LossKind::kHinge: total += std::max(0.0, 1.0 - y[i] * z); break;
      default: total += 0.5 * (y[i] - z) * (y[i] - z);
    }
  }
  return total;
}

double nn_batch_loss(const DenseMatrix& x, const DenseVector& y, const NnModel& m) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    double out = 0.0;
    for (std::size_t k = 0; k < m.w1.n_cols(); ++k) {
      double a = 0.0;
      for (std::size_t j = 0; j < x.n_cols(); ++j) a += x(i, j) * m.w1(j, k);
      out += m.w2(k, 0) / (1.0 + std::exp(-a));
    }
    total += 0.5 * (y[i] - out) * (y[i] - out);
  }
  return total;
}

bool near_hinge_kink(const DenseMatrix& x, const DenseVector& y, const DenseVector& h) {
  const DenseVector z = dense_matvec(x, h);
  for (std::size_t i = 0; i < z.size(); ++i)
    if (std::abs(y[i] * z[i] - 1.0) < 1e-3) return true;
  return false;
}

Outcome gradient_check() {
  SynthConfig cfg;
  cfg.templates = 6;
  cfg.copies = 4;
  cfg.n_cols = 10;
  cfg.seed = 17;
  cfg.task = SynthTask::kClassification;
  const LabeledDataset ds = make_synthetic(cfg);
  const DenseMatrix x = sparse_to_dense(ds.features);
  std::mt19937_64 rng(19);
  double worst = 0.0;
  const double eps = kFiniteDiffStep;
  for (const auto mode : {Execution::kCompressed, Execution::kDense}) {
    const Batch batch = make_batches(ds, ds.size(), mode).batches.at(0);
    for (const auto loss : {LossKind::kSquared, LossKind::kLogistic, LossKind::kHinge}) {
      DenseVector h;
      do {
        h = toc::testing::random_vector(rng, cfg.n_cols);
      } while (loss == LossKind::kHinge && near_hinge_kink(x, ds.labels, h));
      const DenseVector g = glm_gradient(batch, GlmModel{h}, loss);
      for (std::size_t j = 0; j < h.size(); ++j) {
        DenseVector hp = h, hm = h;
        hp[j] += eps;
        hm[j] -= eps;
        const double fd = (glm_batch_loss(x, ds.labels, hp, loss) - glm_batch_loss(x, ds.labels, hm, loss)) / (2 * eps);
        worst = std::max(worst, std::abs(g[j] - fd));
      }
    }
    const NnModel m = init_nn(cfg.n_cols, 4, 23);
    const NnGradient g = nn_gradient(batch, m);
    auto check = [&](auto member, const DenseMatrix& grad) {
      for (std::size_t k = 0; k < grad.values().size(); ++k) {
        NnModel p = m, q = m;
        (p.*member).values()[k] += eps;
        (q.*member).values()[k] -= eps;
        const double fd = (nn_batch_loss(x, ds.labels, p) - nn_batch_loss(x, ds.labels, q)) / (2 * eps);
        worst = std::max(worst, std::abs(grad.values()[k] - fd));
      }
    };
    check(&NnModel::w1, g.w1);
    check(&NnModel::w2, g.w2);
  }
  return {worst <= kGradientAbsTol, "worst |analytic - central difference| " + fmt(worst) + " over squared, logistic, hinge, nn on both paths (tolerance " + fmt(kGradientAbsTol) + ")"};
}

Outcome mgd_vs_bgd_demo() {
  SynthConfig cfg;
  cfg.templates = 20;
  cfg.copies = 100;
  cfg.n_cols = 50;
  cfg.seed = 29;
  const LabeledDataset ds = make_synthetic(cfg);
  // 250 of 60000 rows per batch, scaled to this dataset.
  const std::size_t mgd_batch = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(250.0 * double(ds.size()) / 60000.0)));
  TrainConfig t;
  t.loss = LossKind::kNnMse;
  t.hidden_units = 16;
  t.learning_rate = 0.1;
  t.epochs = kDemoEpochs;
  t.seed = 31;
  t.batch_size = mgd_batch;
  const double mgd = train(ds, t).trace.risk.back();
  t.batch_size = ds.size();
  const double bgd = train(ds, t).trace.risk.back();
  return {mgd <= bgd, "epoch-" + std::to_string(kDemoEpochs) + " risk MGD(batch " + std::to_string(mgd_batch) + ") " + fmt(mgd) +
                          " vs BGD(batch " + std::to_string(ds.size()) + ") " + fmt(bgd)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"losslessness", losslessness},
      {"toy fixture", toy_fixture},
      {"kernel equivalence", kernel_equivalence},
      {"cost model", cost_model},
      {"compression ratio ordering", ratio_ordering},
      {"mgd parity", mgd_parity},
      {"gradient correctness", gradient_check},
      {"mgd vs bgd demo", mgd_vs_bgd_demo},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
