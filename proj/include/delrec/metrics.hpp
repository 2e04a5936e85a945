#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "delrec/check.hpp"

namespace delrec {

struct EpochMetrics {
  int epoch = 0;
  double sigma = 0.0;
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
  double spike_rate = 0.0;  // mean spikes per neuron per time-step
  double wall_s = 0.0;
};

// Append-only CSV, one row per epoch. Numeric columns are written with full
// precision so identical runs produce identical files; wall_s is the only
// nondeterministic column and sits last so tools can strip it.
class MetricsWriter {
 public:
  static constexpr const char* kHeader =
      "epoch,sigma,train_loss,train_acc,val_loss,val_acc,"
      "spikes_per_neuron_per_step,wall_s";

  MetricsWriter(const std::filesystem::path& path, bool append) : path_(path) {
    const bool fresh = !append || !std::filesystem::exists(path);
    out_.open(path, fresh ? std::ios::trunc : std::ios::app);
    DELREC_CHECK(out_.good(), "metrics: cannot open " + path.string());
    if (fresh) out_ << kHeader << "\n";
  }

  void append(const EpochMetrics& m) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f", m.epoch,
                  m.sigma, m.train_loss, m.train_acc, m.val_loss, m.val_acc,
                  m.spike_rate, m.wall_s);
    out_ << buf << "\n";
    out_.flush();
    DELREC_CHECK(out_.good(), "metrics: write failed");
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace delrec
