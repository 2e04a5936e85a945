#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "delrec/network.hpp"

namespace delrec {

// Finite-difference gradient verification. Runs in soft mode (smooth fire)
// so central differences are valid; parameters whose spread/interpolation
// kernels sit within 1e-3 of a kink are nudged off it at net construction.
struct GradCheckClassStat {
  std::string cls;  // w, w_rec, d, d_ff, p, tau_mem
  double max_rel = 0.0;
  std::size_t n_checked = 0;
  std::size_t n_live = 0;  // checks where the gradient magnitude is real
  std::size_t n_skipped = 0;
};

struct GradCheckReport {
  std::vector<GradCheckClassStat> stats;
  double tolerance = 1e-4;

  bool pass() const;
  std::string format() const;
};

// Battery of `n_nets` randomized small networks (N <= 8, T <= 20) covering
// every parameter class. When `base` is given, the first net inherits its
// readout/reset/surrogate/granularity choices.
GradCheckReport gradcheck_run(std::uint64_t seed, int n_nets,
                              const ArchitectureSpec* base = nullptr,
                              double fd_step = 1e-5);

// Buffered-vs-dense equivalence trials on randomized recurrent layers.
struct OracleCheckReport {
  int trials = 0;
  double max_deviation = 0.0;
  bool pass() const { return max_deviation < 1e-9; }
};

OracleCheckReport oracle_check_run(std::uint64_t seed, int n_trials,
                                   bool include_synaptic);

}  // namespace delrec
