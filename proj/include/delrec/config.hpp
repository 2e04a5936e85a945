#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "delrec/datasets.hpp"
#include "delrec/delay_kernel.hpp"
#include "delrec/network.hpp"
#include "delrec/optim.hpp"

namespace delrec {

// Flat sectioned key=value file. '#' starts a comment. Every key must be
// consumed by the loader; leftovers are hard errors so a misspelled
// hyperparameter can never silently fall back to a default.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_str(const std::string& section, const std::string& key);
  std::string get_str_or(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_num(const std::string& section, const std::string& key);
  double get_num_or(const std::string& section, const std::string& key,
                    double fallback);
  long get_int(const std::string& section, const std::string& key);
  long get_int_or(const std::string& section, const std::string& key,
                  long fallback);
  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback);
  std::vector<long> get_int_list_or(const std::string& section,
                                    const std::string& key,
                                    const std::vector<long>& fallback);
  std::vector<bool> get_bool_list_or(const std::string& section,
                                     const std::string& key,
                                     const std::vector<bool>& fallback);

  // Throws listing any key that was never consumed.
  void check_all_consumed() const;

 private:
  std::string lookup(const std::string& section, const std::string& key);
  std::map<std::string, std::string> values_;  // "section.key" -> value
  std::set<std::string> consumed_;
};

struct DatasetConfig {
  std::string kind = "synthetic";  // synthetic | file
  std::string path;                // dir with train/test files, or one file
  double val_fraction = 0.2;       // file datasets: share of train held out
  SyntheticTaskSpec synth;
  int augment_shift = 0;  // max |shift| in bins, 0 disables
  bool augment_blend = false;
  bool binary_clamp = true;
  std::size_t time_cap = 0;  // truncate/pad file datasets; 0 = natural
};

struct OptimConfig {
  bool decoupled = false;  // AdamW
  double lr_weights = 1e-3;
  double lr_positions = 5e-2;
  double weight_decay = 0.0;
  double weight_decay_positions = 0.0;
  ScheduleKind sched_weights = ScheduleKind::one_cycle;
  ScheduleKind sched_positions = ScheduleKind::one_cycle;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "runs/run";
  int epochs = 1;
  int batch_size = 32;

  DatasetConfig dataset;
  ArchitectureSpec arch;  // n_inputs/n_classes filled from the dataset
  OptimConfig optim;
  double sigma_init = 10.0;
  double sigma_decay = 0.95;

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_config(ConfigFile& file);

  SigmaSchedule sigma_schedule() const {
    return SigmaSchedule{sigma_init, sigma_decay, epochs};
  }

  // Stable textual form used for the run-directory copy and the checkpoint
  // fingerprint.
  std::string canonical_text() const;
  std::uint64_t hash() const;
};

}  // namespace delrec
