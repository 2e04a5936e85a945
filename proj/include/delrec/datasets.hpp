#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "delrec/rng.hpp"
#include "delrec/tensor.hpp"

namespace delrec {

struct EventRecord {
  double time_s = 0.0;
  int channel = 0;
};

// One classification sample on a binned (T, C) grid of spike counts, or of
// binary indicators after clamping.
struct BinnedSample {
  Tensor grid;  // (T, C)
  int label = 0;
  std::size_t t_steps() const { return grid.dim(0); }
  std::size_t channels() const { return grid.dim(1); }
};

struct Dataset {
  std::vector<BinnedSample> samples;
  std::size_t n_channels = 0;
  int n_classes = 0;

  std::size_t max_t_steps() const;
  void clamp_binary();
};

// Spatio-temporal binning: channel c -> floor(c / spatial_factor), time
// t -> floor(t / delta_t). Counts accumulate; `clamp_binary` reduces bins to
// spike/no-spike. `fixed_t` pads (or errors on overflow) to a given length.
BinnedSample bin_events(std::span<const EventRecord> events, int label,
                        double delta_t_s, int spatial_factor = 5,
                        int n_channels_in = 700, bool clamp_binary = true,
                        std::size_t fixed_t = 0);

// Shift all spikes by `shift` bins; spikes leaving [0, T) are dropped.
void shift_sample(BinnedSample& s, long shift);
void augment_shift(BinnedSample& s, int max_abs_shift, Rng& rng);

// Spike-count-weighted mean time bin, rounded to the nearest integer.
long temporal_center_of_mass(const Tensor& grid);

// Blend two same-class samples: translate b so the centers of mass align,
// then take each time row from either source with probability 1/2.
BinnedSample blend_samples(const BinnedSample& a, const BinnedSample& b,
                           Rng& rng);

// Two-channel delayed-coincidence task: channel 0 carries probe spikes,
// channel 1 echoes each probe `lag_k` steps later; the class is the lag.
// Both channels receive Bernoulli background noise.
struct SyntheticTaskSpec {
  int n_classes = 4;
  std::vector<int> lags{2, 6, 11, 17};
  int t_steps = 60;
  double background_rate = 0.02;
  int probes = 6;
  int n_samples = 1500;
  std::uint64_t seed = 1;
};

struct DataSplits {
  Dataset train, val, test;
};

DataSplits gen_delayed_coincidence(const SyntheticTaskSpec& spec);

// Text format: per sample a header line "label T" followed by one "t ch"
// line per spike, blocks separated by a blank line.
void save_dataset_text(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset_text(const std::filesystem::path& path);

// Binary format: magic "DREC", u16 version, u16 kind, little-endian u32
// dimensions, then (t, ch, count) triplets per sample.
void save_dataset_drec(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset_drec(const std::filesystem::path& path);

// Sniffs the DREC magic, otherwise parses as text.
Dataset load_dataset_auto(const std::filesystem::path& path);

// Fixed seeded pixel permutation for flattened-sequence tasks. Applying the
// inverse permutation recovers the original order exactly.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);
std::vector<std::size_t> invert_permutation(
    const std::vector<std::size_t>& perm);

// Flattens an (H, W) image into a (H*W, 1) sequence in permuted pixel order.
Tensor permuted_sequence(const Tensor& image,
                         const std::vector<std::size_t>& perm);
Tensor restore_image(const Tensor& seq, const std::vector<std::size_t>& perm,
                     std::size_t h, std::size_t w);

}  // namespace delrec
