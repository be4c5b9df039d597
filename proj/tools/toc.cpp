// toc: compress, verify, benchmark, and train on tuple-oriented compressed data.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "toc/commands.hpp"

namespace {

using namespace toc;
using namespace toc::cli;

struct InputFlags {
  std::string path;
  std::string format = "libsvm";
  std::optional<std::size_t> n_cols;
  bool has_header = false;

  void add_to(CLI::App* app, bool required = true) {
    auto* opt = app->add_option("--input", path, "Input dataset");
    if (required) opt->required();
    app->add_option("--format", format, "Dataset format")->check(CLI::IsMember({"libsvm", "csv"}));
    app->add_option("--n-cols", n_cols, "Feature count override (libsvm)");
    app->add_flag("--header", has_header, "CSV input has a header line");
  }

  DatasetDescriptor descriptor() const { return {path, text_format_from_string(format), n_cols, has_header}; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tuple-oriented compression for mini-batch training"};
  app.require_subcommand(1);
  std::string report_format = "csv";
  app.add_option("--report", report_format, "Report format")->check(CLI::IsMember({"csv", "json"}));

  // compress
  InputFlags compress_in;
  CompressOptions compress_opts;
  std::optional<std::uint64_t> compress_seed;
  auto* compress = app.add_subcommand("compress", "Compress a dataset into a batch store");
  compress_in.add_to(compress);
  compress->add_option("--output", compress_opts.output, "Batch store path")->required();
  compress->add_option("--batch-size", compress_opts.batch_size, "Rows per batch");
  compress->add_option("--seed", compress_seed, "Shuffle rows once with this seed before batching");
  compress->add_option("--threads", compress_opts.threads, "Worker threads");

  // decompress
  std::string decompress_store, decompress_out, decompress_format = "libsvm";
  auto* decompress = app.add_subcommand("decompress", "Decode a batch store back to text");
  decompress->add_option("--input", decompress_store, "Batch store path")->required();
  decompress->add_option("--output", decompress_out, "Output dataset path")->required();
  decompress->add_option("--format", decompress_format)->check(CLI::IsMember({"libsvm", "csv"}));

  // verify
  InputFlags verify_in;
  std::string verify_store_path;
  auto* verify = app.add_subcommand("verify", "Check a batch store against its source dataset");
  verify_in.add_to(verify);
  verify->add_option("--store", verify_store_path, "Batch store path")->required();

  // bench-ratio
  InputFlags ratio_in;
  std::vector<std::size_t> ratio_batches{250};
  auto* bench_ratio_cmd = app.add_subcommand("bench-ratio", "Compare dense, CSR, and TOC sizes");
  ratio_in.add_to(bench_ratio_cmd);
  bench_ratio_cmd->add_option("--batch-size", ratio_batches, "One or more batch sizes")->expected(1, -1);

  // bench-kernels
  InputFlags kernels_in;
  KernelBenchOptions kernel_opts;
  std::string kernel_name = "matvec";
  std::optional<std::size_t> scaling;
  auto* bench_kernels_cmd = app.add_subcommand("bench-kernels", "Time and count compressed kernels");
  kernels_in.add_to(bench_kernels_cmd);
  bench_kernels_cmd->add_option("--kernel", kernel_name)
      ->check(CLI::IsMember({"matvec", "vecmat", "matmat_right", "matmat_left"}));
  bench_kernels_cmd->add_option("--batch-size", kernel_opts.batch_size);
  bench_kernels_cmd->add_option("--repeats", kernel_opts.repeats);
  bench_kernels_cmd->add_option("--width", kernel_opts.width, "Columns/rows of M for matrix kernels");
  bench_kernels_cmd->add_option("--seed", kernel_opts.seed);
  bench_kernels_cmd->add_option("--scaling", scaling, "Duplicate the input 2^k times for k = 0..K");

  // train
  InputFlags train_in;
  TrainOptions train_opts;
  std::string loss = "squared", execution = "compressed";
  std::uint64_t epochs = 10;
  auto* train_cmd = app.add_subcommand("train", "Train a model with mini-batch gradient descent");
  train_in.add_to(train_cmd);
  train_cmd->add_option("--loss", loss)->check(CLI::IsMember({"squared", "logistic", "hinge", "nn"}));
  train_cmd->add_option("--batch-size", train_opts.config.batch_size);
  train_cmd->add_option("--lr", train_opts.config.learning_rate);
  train_cmd->add_option("--epochs", epochs);
  train_cmd->add_option("--seed", train_opts.config.seed);
  train_cmd->add_option("--hidden", train_opts.config.hidden_units);
  train_cmd->add_option("--execution", execution)->check(CLI::IsMember({"compressed", "dense", "csr"}));
  train_cmd->add_option("--output", train_opts.model_output, "Model file path");
  train_cmd->add_option("--trace", train_opts.trace_output, "Per-epoch risk CSV path (default stdout)");

  // gen-synth
  SynthOptions synth;
  std::string synth_task = "regression", synth_format = "libsvm";
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic dataset");
  gen->add_option("--output", synth.output)->required();
  gen->add_option("--format", synth_format)->check(CLI::IsMember({"libsvm", "csv"}));
  gen->add_option("--templates", synth.config.templates);
  gen->add_option("--copies", synth.config.copies);
  gen->add_option("--cols", synth.config.n_cols);
  gen->add_option("--alphabet", synth.config.alphabet);
  gen->add_option("--density", synth.config.density);
  gen->add_option("--seed", synth.config.seed);
  gen->add_option("--task", synth_task)->check(CLI::IsMember({"regression", "classification"}));
  gen->add_flag("--random", synth.random_dense, "Continuous random dense values");
  gen->add_option("--rows", synth.rows, "Row count for --random");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const ReportFormat fmt = report_format_from_string(report_format);
    if (*compress) {
      compress_opts.input = compress_in.descriptor();
      compress_opts.shuffle_seed = compress_seed;
      return cmd_compress(compress_opts, std::cout);
    }
    if (*decompress) {
      return cmd_decompress(decompress_store, decompress_out, text_format_from_string(decompress_format), std::cout);
    }
    if (*verify) return cmd_verify(verify_in.descriptor(), verify_store_path, std::cout, std::cerr);
    if (*bench_ratio_cmd) {
      write_report(std::cout, bench_ratio(ingest(ratio_in.descriptor()), ratio_batches), fmt);
      return kOk;
    }
    if (*bench_kernels_cmd) {
      kernel_opts.kernel = kernel_kind_from_string(kernel_name);
      const LabeledDataset ds = ingest(kernels_in.descriptor());
      const KernelBenchResult r = scaling ? bench_scaling(ds, *scaling, kernel_opts) : bench_kernels(ds, kernel_opts);
      write_report(std::cout, r.report, fmt);
      if (!r.cost_model_exact) {
        std::cerr << "measured operation count differs from the cost model\n";
        return kVerifyFailed;
      }
      return kOk;
    }
    if (*train_cmd) {
      train_opts.input = train_in.descriptor();
      train_opts.config.loss = loss_kind_from_string(loss);
      train_opts.config.execution = execution_from_string(execution);
      train_opts.config.epochs = epochs;
      try {
        train_opts.config.validate();
      } catch (const InvalidArgument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kUsage;
      }
      return cmd_train(train_opts, std::cout);
    }
    if (*gen) {
      synth.format = text_format_from_string(synth_format);
      synth.config.task = synth_task == "classification" ? SynthTask::kClassification : SynthTask::kRegression;
      return cmd_gen_synth(synth, std::cout);
    }
  } catch (const toc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
