#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "delrec/config.hpp"

namespace delrec {

// Sweep description: a base run config plus a [sweep] section listing the
// model variants and either layer sizes (accuracy vs parameter count) or
// spike-penalty weights (accuracy vs firing rate).
struct SweepConfig {
  std::filesystem::path out_dir;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string mode = "size";  // size | lambda
  std::vector<AblationVariant> variants;
  std::vector<std::size_t> sizes;
  std::size_t base_size = 42;
  std::vector<double> lambdas;
  RunConfig base;
  std::string self_exe;  // enables process-parallel jobs when DELREC_THREADS > 1
};

SweepConfig load_sweep(const std::filesystem::path& path);

struct AblationRow {
  AblationVariant variant;
  std::size_t hidden = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::size_t params = 0;
  double test_acc_spread = 0.0;   // real delays, training-time sigma
  double test_acc_rounded = 0.0;  // integer delays, sigma = 0
  double firing_rate = 0.0;       // test set, rounded model
};

// Trains every (variant, point, seed) combination and evaluates the best
// checkpoint on the test set. Jobs run in-process, or in parallel child
// processes capped by DELREC_THREADS when self_exe is set.
std::vector<AblationRow> run_ablation(const SweepConfig& sweep);

void write_ablation_tables(const std::vector<AblationRow>& rows,
                           const std::filesystem::path& out_dir,
                           const std::string& mode);

}  // namespace delrec
