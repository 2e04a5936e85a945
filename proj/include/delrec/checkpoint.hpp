#pragma once

#include <filesystem>
#include <string>

#include "delrec/network.hpp"
#include "delrec/optim.hpp"

namespace delrec {

struct CheckpointMeta {
  std::string config_text;  // canonical run config
  std::uint64_t config_hash = 0;
  int epoch = 0;  // epochs completed
  double sigma_epoch = 0.0;
  std::string rng_state;
  double best_val_acc = 0.0;
  int best_epoch = -1;
};

// Everything needed for a bit-identical training continuation: parameters,
// optimizer moments, the epoch counter, sigma, and the run RNG state.
void save_checkpoint(const std::filesystem::path& path, Network& net,
                     const Optimizer* opt, const CheckpointMeta& meta);

// Restores into a freshly built network (names and shapes must match).
// `opt` may be null when only the parameters are wanted (evaluation).
CheckpointMeta load_checkpoint(const std::filesystem::path& path, Network& net,
                               Optimizer* opt);

// Reads only the embedded config text, for rebuilding the network.
CheckpointMeta peek_checkpoint(const std::filesystem::path& path);

}  // namespace delrec
