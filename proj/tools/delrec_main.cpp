#include <unistd.h>

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "delrec/ablate.hpp"
#include "delrec/checkpoint.hpp"
#include "delrec/kernels.hpp"
#include "delrec/train.hpp"
#include "delrec/verify.hpp"
#include "delrec/version.hpp"

namespace {

using namespace delrec;

std::string self_exe_path() {
  char buf[4096];
  const ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return "";
  buf[n] = '\0';
  return buf;
}

int cmd_train(const std::string& config_path, long seed_override,
              const std::string& out_override, const std::string& resume) {
  RunConfig cfg = RunConfig::from_file(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  const TrainOutcome outcome = train_run(cfg, resume);
  std::printf("run_dir: %s\n", outcome.run_dir.string().c_str());
  std::printf("best_val_acc: %.4f (epoch %d)\n", outcome.best_val_acc,
              outcome.best_epoch);
  std::printf("metrics: %s\n", outcome.metrics_path.string().c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             bool rounded, int batch) {
  const CheckpointMeta peek = peek_checkpoint(ckpt_path);
  ConfigFile cf = ConfigFile::parse_string(peek.config_text);
  RunConfig cfg = RunConfig::from_config(cf);

  Dataset data = load_dataset_auto(data_path);
  if (cfg.dataset.binary_clamp) data.clamp_binary();
  cfg.arch.n_inputs = data.n_channels;
  cfg.arch.n_classes = static_cast<std::size_t>(data.n_classes);

  Rng rng(cfg.seed);
  Network net = Network::build(cfg.arch, rng);
  const CheckpointMeta meta = load_checkpoint(ckpt_path, net, nullptr);

  const EvalResult spread =
      evaluate_dataset(net, data, batch, meta.sigma_epoch);
  net.round_delays_for_eval();
  const EvalResult r = evaluate_dataset(net, data, batch, 0.0);
  std::printf("samples: %zu\n", data.samples.size());
  std::printf("accuracy_spread: %.4f  (sigma=%.6g, real-valued delays)\n",
              spread.accuracy, meta.sigma_epoch);
  std::printf("accuracy_rounded: %.4f  (integer delays, sigma=0)\n",
              r.accuracy);
  std::printf("spike_rate: %.6f  (spikes per neuron per time-step)\n",
              rounded ? r.spike_rate : spread.spike_rate);
  std::printf("accuracy: %.4f\n", rounded ? r.accuracy : spread.accuracy);
  return 0;
}

int cmd_gradcheck(const std::string& config_path) {
  RunConfig cfg = RunConfig::from_file(config_path);
  const GradCheckReport report = gradcheck_run(cfg.seed, 10, &cfg.arch);
  std::fputs(report.format().c_str(), stdout);
  if (!report.pass()) {
    std::printf("gradcheck: FAIL (tolerance %.1e)\n", report.tolerance);
    return 2;
  }
  std::printf("gradcheck: ok\n");
  return 0;
}

int cmd_oracle_check(bool synaptic, int trials, long seed) {
  const OracleCheckReport report =
      oracle_check_run(static_cast<std::uint64_t>(seed), trials, synaptic);
  std::printf("trials: %d  max_deviation: %.3e\n", report.trials,
              report.max_deviation);
  if (!report.pass()) {
    std::printf("oracle-check: FAIL (threshold 1e-9)\n");
    return 2;
  }
  std::printf("oracle-check: ok\n");
  return 0;
}

int cmd_ablate(const std::string& sweep_path) {
  SweepConfig sweep = load_sweep(sweep_path);
  sweep.self_exe = self_exe_path();
  const std::vector<AblationRow> rows = run_ablation(sweep);
  write_ablation_tables(rows, sweep.out_dir, sweep.mode);
  std::printf("ablate: %zu runs, tables under %s\n", rows.size(),
              sweep.out_dir.string().c_str());
  return 0;
}

int cmd_convert(const std::string& in_path, const std::string& out_path) {
  const Dataset ds = load_dataset_auto(in_path);
  if (std::filesystem::path(out_path).extension() == ".txt")
    save_dataset_text(ds, out_path);
  else
    save_dataset_drec(ds, out_path);
  std::printf("converted %zu samples (%zu channels, %d classes) -> %s\n",
              ds.samples.size(), ds.n_channels, ds.n_classes,
              out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delrec: recurrent spiking networks with learnable delays"};
  app.set_version_flag("--version", std::string(delrec::kGitDescribe));
  app.require_subcommand(1);

  std::string config_path, out_override, resume;
  long seed_override = -1;
  auto* train = app.add_subcommand("train", "train a model from a config");
  train->add_option("--config", config_path, "run config file")->required();
  train->add_option("--seed", seed_override, "override the config seed");
  train->add_option("--out", out_override, "override the output directory");
  train->add_option("--resume", resume, "continue from a last.ckpt");

  std::string ckpt_path, data_path;
  bool rounded = false;
  int eval_batch = 64;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval->add_option("--data", data_path, "dataset file (.txt or .drec)")
      ->required();
  eval->add_flag("--rounded", rounded,
                 "report the integer-delay evaluation as the result");
  eval->add_option("--batch", eval_batch, "evaluation batch size");

  std::string gc_config;
  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--config", gc_config, "run config file")->required();

  bool synaptic = false;
  int trials = 100;
  long oc_seed = 12345;
  auto* oracle = app.add_subcommand(
      "oracle-check", "buffered vs dense scheduling equivalence");
  oracle->add_flag("--synaptic", synaptic, "include synaptic-delay trials");
  oracle->add_option("--trials", trials, "number of randomized trials");
  oracle->add_option("--seed", oc_seed, "trial seed");

  std::string sweep_path;
  auto* ablate = app.add_subcommand("ablate", "run a model-variant sweep");
  ablate->add_option("--sweep", sweep_path, "sweep config file")->required();

  std::string conv_in, conv_out;
  auto* convert = app.add_subcommand(
      "convert-shd", "convert a dataset between text and DREC binary");
  convert->add_option("in", conv_in, "input dataset")->required();
  convert->add_option("out", conv_out, "output path (.drec or .txt)")
      ->required();

  try {
    app.parse(argc, argv);
    if (*train) return cmd_train(config_path, seed_override, out_override,
                                 resume);
    if (*eval) return cmd_eval(ckpt_path, data_path, rounded, eval_batch);
    if (*gradcheck) return cmd_gradcheck(gc_config);
    if (*oracle) return cmd_oracle_check(synaptic, trials, oc_seed);
    if (*ablate) return cmd_ablate(sweep_path);
    if (*convert) return cmd_convert(conv_in, conv_out);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const delrec::NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
