#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "delrec/config.hpp"
#include "delrec/metrics.hpp"
#include "delrec/network.hpp"

namespace delrec {

struct LoadedData {
  Dataset train, val, test;
};

// Builds the splits described by the config: the synthetic task is generated
// from its own seed, file datasets are read from <path>/train.* and
// <path>/test.* with a held-out validation share of the training set.
LoadedData load_data(const DatasetConfig& cfg, std::uint64_t run_seed);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  double spike_rate = 0.0;
};

EvalResult evaluate_dataset(Network& net, const Dataset& data, int batch_size,
                            double sigma);

// Integer-delay evaluation (sigma = 0) without mutating the network: delays
// are rounded in place for the pass and restored afterwards. This is the
// deployment protocol, used for model selection and test reporting.
EvalResult evaluate_dataset_rounded(Network& net, const Dataset& data,
                                    int batch_size);

struct TrainOutcome {
  std::filesystem::path run_dir;
  std::filesystem::path metrics_path;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  double best_val_acc = 0.0;
  int best_epoch = -1;
  std::vector<EpochMetrics> history;
};

// Full training loop: per-epoch sigma annealing (horizon rebuilt with it),
// two optimizer groups with independent schedules, per-epoch metrics, best
// and last checkpoints. `resume` continues bit-identically from a last
// checkpoint written by the same config. `stop_after_epochs` (> 0) ends the
// run early after that many total epochs, leaving a resumable checkpoint.
TrainOutcome train_run(const RunConfig& cfg,
                       const std::filesystem::path& resume = {},
                       int stop_after_epochs = 0);

// Assembles samples [first, last) of `data` in index order into (T,B,C).
Tensor assemble_batch(const Dataset& data, const std::vector<std::size_t>& idx,
                      std::size_t first, std::size_t last, std::size_t t_steps,
                      std::vector<int>& labels_out);

}  // namespace delrec
