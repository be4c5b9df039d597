// Compress a small redundant matrix, run a few kernels on it, and train a
// linear model on compressed mini-batches.

#include <cstdio>
#include <vector>

#include "toc/compressed.hpp"
#include "toc/mgd.hpp"
#include "toc/physical.hpp"
#include "toc/synth.hpp"

int main() {
  toc::SynthConfig cfg;
  cfg.templates = 10;
  cfg.copies = 50;
  cfg.n_cols = 100;
  const toc::LabeledDataset ds = toc::make_synthetic(cfg);

  const toc::CompressedMatrix a = toc::CompressedMatrix::compress(ds.features);
  const auto bytes = toc::serialize_block(a.encoding());
  std::printf("rows %zu, nonzeros %zu, first layer %zu, codes %zu, block %zu bytes (dense %zu)\n",
              ds.size(), ds.features.nnz(), a.encoding().first_layer().size(), a.encoding().codes().size(),
              bytes.size(), 8 * ds.size() * cfg.n_cols);

  toc::OpCounter ops;
  const std::vector<double> ones(cfg.n_cols, 1.0);
  const auto row_sums = toc::matvec(a, ones, &ops);
  std::printf("row 0 sum %.3f using %llu multiply-adds (dense would use %zu)\n", row_sums[0],
              static_cast<unsigned long long>(ops.multiply_adds), ds.size() * cfg.n_cols);

  toc::TrainConfig tc;
  tc.loss = toc::LossKind::kSquared;
  tc.batch_size = 50;
  tc.learning_rate = 0.05;
  tc.epochs = 5;
  const auto result = toc::train(ds, tc);
  std::printf("risk: initial %.6f", result.trace.initial_risk);
  for (const double r : result.trace.risk) std::printf(" -> %.6f", r);
  std::printf("\n");
}
