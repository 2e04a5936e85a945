#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "delrec/datasets.hpp"
#include "delrec/io.hpp"

namespace delrec {

std::size_t Dataset::max_t_steps() const {
  std::size_t t = 0;
  for (const auto& s : samples) t = std::max(t, s.t_steps());
  return t;
}

void Dataset::clamp_binary() {
  for (auto& s : samples)
    for (std::size_t e = 0; e < s.grid.size(); ++e)
      s.grid(e) = s.grid(e) > 0.0 ? 1.0 : 0.0;
}

BinnedSample bin_events(std::span<const EventRecord> events, int label,
                        double delta_t_s, int spatial_factor,
                        int n_channels_in, bool clamp_binary,
                        std::size_t fixed_t) {
  DELREC_CHECK_ARG(delta_t_s > 0.0, "bin_events: delta_t must be positive");
  DELREC_CHECK_ARG(spatial_factor >= 1, "bin_events: bad spatial factor");
  const std::size_t n_out =
      static_cast<std::size_t>((n_channels_in + spatial_factor - 1) /
                               spatial_factor);

  std::size_t t_max = 0;
  for (const auto& e : events) {
    DELREC_CHECK_ARG(e.time_s >= 0.0, "bin_events: negative event time");
    DELREC_CHECK_ARG(e.channel >= 0 && e.channel < n_channels_in,
                     "bin_events: channel out of range");
    t_max = std::max(t_max,
                     static_cast<std::size_t>(std::floor(e.time_s / delta_t_s)));
  }
  std::size_t t_steps = events.empty() ? 1 : t_max + 1;
  if (fixed_t > 0) {
    DELREC_CHECK_ARG(events.empty() || t_max < fixed_t,
                     "bin_events: event beyond fixed_t");
    t_steps = fixed_t;
  }

  BinnedSample out;
  out.label = label;
  out.grid = Tensor(t_steps, n_out);
  for (const auto& e : events) {
    const auto t = static_cast<std::size_t>(std::floor(e.time_s / delta_t_s));
    const auto c = static_cast<std::size_t>(e.channel / spatial_factor);
    out.grid(t, c) += 1.0;
  }
  if (clamp_binary)
    for (std::size_t e = 0; e < out.grid.size(); ++e)
      out.grid(e) = out.grid(e) > 0.0 ? 1.0 : 0.0;
  return out;
}

void shift_sample(BinnedSample& s, long shift) {
  if (shift == 0) return;
  const long t_steps = static_cast<long>(s.t_steps());
  const std::size_t c = s.channels();
  Tensor shifted(s.t_steps(), c);
  for (long t = 0; t < t_steps; ++t) {
    const long src = t - shift;
    if (src < 0 || src >= t_steps) continue;
    for (std::size_t j = 0; j < c; ++j)
      shifted(static_cast<std::size_t>(t), j) =
          s.grid(static_cast<std::size_t>(src), j);
  }
  s.grid = std::move(shifted);
}

void augment_shift(BinnedSample& s, int max_abs_shift, Rng& rng) {
  if (max_abs_shift <= 0) return;
  shift_sample(s, rng.uniform_int(-max_abs_shift, max_abs_shift));
}

long temporal_center_of_mass(const Tensor& grid) {
  double mass = 0.0, weighted = 0.0;
  for (std::size_t t = 0; t < grid.dim(0); ++t)
    for (std::size_t c = 0; c < grid.dim(1); ++c) {
      mass += grid(t, c);
      weighted += grid(t, c) * static_cast<double>(t);
    }
  if (mass == 0.0) return 0;
  return std::lround(weighted / mass);
}

BinnedSample blend_samples(const BinnedSample& a, const BinnedSample& b,
                           Rng& rng) {
  DELREC_CHECK_ARG(a.label == b.label, "blend_samples: labels differ");
  DELREC_CHECK_ARG(a.channels() == b.channels(),
                   "blend_samples: channel count differs");
  BinnedSample bb = b;
  if (bb.t_steps() != a.t_steps()) {
    Tensor resized(a.t_steps(), a.channels());
    const std::size_t t_copy = std::min(a.t_steps(), bb.t_steps());
    for (std::size_t t = 0; t < t_copy; ++t)
      for (std::size_t c = 0; c < a.channels(); ++c)
        resized(t, c) = bb.grid(t, c);
    bb.grid = std::move(resized);
  }
  shift_sample(bb, temporal_center_of_mass(a.grid) -
                       temporal_center_of_mass(bb.grid));

  BinnedSample out;
  out.label = a.label;
  out.grid = Tensor(a.t_steps(), a.channels());
  for (std::size_t t = 0; t < a.t_steps(); ++t) {
    const Tensor& src = rng.bernoulli(0.5) ? bb.grid : a.grid;
    for (std::size_t c = 0; c < a.channels(); ++c) out.grid(t, c) = src(t, c);
  }
  return out;
}

DataSplits gen_delayed_coincidence(const SyntheticTaskSpec& spec) {
  DELREC_CHECK_ARG(spec.n_classes >= 2, "synthetic task: need >= 2 classes");
  DELREC_CHECK_ARG(static_cast<int>(spec.lags.size()) == spec.n_classes,
                   "synthetic task: one lag per class");
  DELREC_CHECK_ARG(spec.probes >= 1, "synthetic task: need >= 1 probe");
  for (std::size_t i = 0; i < spec.lags.size(); ++i) {
    DELREC_CHECK_ARG(spec.lags[i] >= 1 && spec.lags[i] < spec.t_steps,
                     "synthetic task: lag must lie in [1, T)");
    for (std::size_t j = i + 1; j < spec.lags.size(); ++j)
      DELREC_CHECK_ARG(spec.lags[i] != spec.lags[j],
                       "synthetic task: lags must be distinct");
    DELREC_CHECK_ARG(spec.t_steps - spec.lags[i] >= spec.probes,
                     "synthetic task: not enough room for distinct probes");
  }

  int max_lag = 0;
  for (int lag : spec.lags) max_lag = std::max(max_lag, lag);

  Rng rng(spec.seed);
  std::vector<BinnedSample> all;
  all.reserve(spec.n_samples);
  std::vector<char> used;
  for (int s = 0; s < spec.n_samples; ++s) {
    const int k = s % spec.n_classes;
    const int lag = spec.lags[static_cast<std::size_t>(k)];
    BinnedSample sample;
    sample.label = k;
    sample.grid = Tensor(static_cast<std::size_t>(spec.t_steps), 2);
    // distinct probe times, drawn from the same window for every class so
    // the probe distribution itself carries no label information; the class
    // is a function of the echo lag alone
    const int t_lim = spec.t_steps - max_lag;
    used.assign(static_cast<std::size_t>(t_lim), 0);
    for (int n = 0; n < spec.probes;) {
      const auto t = static_cast<std::size_t>(rng.uniform_int(0, t_lim - 1));
      if (used[t]) continue;
      used[t] = 1;
      ++n;
      sample.grid(t, 0) = 1.0;
      sample.grid(t + static_cast<std::size_t>(lag), 1) = 1.0;
    }
    if (spec.background_rate > 0.0)
      for (std::size_t t = 0; t < sample.t_steps(); ++t)
        for (std::size_t c = 0; c < 2; ++c)
          if (rng.bernoulli(spec.background_rate)) sample.grid(t, c) = 1.0;
    all.push_back(std::move(sample));
  }

  // shuffle, then split 70/15/15
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1],
              order[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);

  DataSplits splits;
  for (Dataset* d : {&splits.train, &splits.val, &splits.test}) {
    d->n_channels = 2;
    d->n_classes = spec.n_classes;
  }
  const std::size_t n_train = (all.size() * 70) / 100;
  const std::size_t n_val = (all.size() * 15) / 100;
  for (std::size_t i = 0; i < order.size(); ++i) {
    BinnedSample& s = all[order[i]];
    if (i < n_train)
      splits.train.samples.push_back(std::move(s));
    else if (i < n_train + n_val)
      splits.val.samples.push_back(std::move(s));
    else
      splits.test.samples.push_back(std::move(s));
  }
  return splits;
}

// ---------------------------------------------------------------------------
// File formats

void save_dataset_text(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  DELREC_CHECK(out.good(), "save_dataset_text: cannot open " + path.string());
  out << "channels " << ds.n_channels << " classes " << ds.n_classes << "\n\n";
  for (const auto& s : ds.samples) {
    out << s.label << ' ' << s.t_steps() << "\n";
    for (std::size_t t = 0; t < s.t_steps(); ++t)
      for (std::size_t c = 0; c < s.channels(); ++c) {
        const long count = std::lround(s.grid(t, c));
        for (long k = 0; k < count; ++k) out << t << ' ' << c << "\n";
      }
    out << "\n";
  }
  DELREC_CHECK(out.good(), "save_dataset_text: write failed");
}

Dataset load_dataset_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  DELREC_CHECK(in.good(), "load_dataset_text: cannot open " + path.string());
  Dataset ds;
  std::string line;
  bool have_meta = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (!have_meta) {
      std::string kw1, kw2;
      std::size_t ch = 0;
      int cls = 0;
      std::istringstream first(line);
      if (first >> kw1 >> ch >> kw2 >> cls && kw1 == "channels" &&
          kw2 == "classes") {
        ds.n_channels = ch;
        ds.n_classes = cls;
        have_meta = true;
        continue;
      }
      have_meta = true;  // headerless file: first line is a sample header
    }
    int label = 0;
    std::size_t t_steps = 0;
    DELREC_CHECK(static_cast<bool>(std::istringstream(line) >> label >> t_steps),
                 "load_dataset_text: bad sample header '" + line + "'");
    BinnedSample s;
    s.label = label;
    std::vector<std::pair<std::size_t, std::size_t>> events;
    std::size_t ch_max = 0;
    while (std::getline(in, line) && !line.empty()) {
      std::istringstream es(line);
      std::size_t t = 0, c = 0;
      DELREC_CHECK(static_cast<bool>(es >> t >> c),
                   "load_dataset_text: bad event line '" + line + "'");
      DELREC_CHECK(t < t_steps, "load_dataset_text: event beyond T");
      events.emplace_back(t, c);
      ch_max = std::max(ch_max, c + 1);
    }
    const std::size_t channels = std::max(ds.n_channels, ch_max);
    s.grid = Tensor(t_steps, channels);
    for (auto [t, c] : events) s.grid(t, c) += 1.0;
    ds.n_channels = std::max(ds.n_channels, channels);
    ds.n_classes = std::max(ds.n_classes, label + 1);
    ds.samples.push_back(std::move(s));
  }
  // normalize widths if the metadata line was absent
  for (auto& s : ds.samples)
    if (s.channels() != ds.n_channels) {
      Tensor g(s.t_steps(), ds.n_channels);
      for (std::size_t t = 0; t < s.t_steps(); ++t)
        for (std::size_t c = 0; c < s.channels(); ++c) g(t, c) = s.grid(t, c);
      s.grid = std::move(g);
    }
  return ds;
}

void save_dataset_drec(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  DELREC_CHECK(out.good(), "save_dataset_drec: cannot open " + path.string());
  io::write_magic(out, io::kKindDataset);
  io::write_u32(out, static_cast<std::uint32_t>(ds.samples.size()));
  io::write_u32(out, static_cast<std::uint32_t>(ds.n_channels));
  io::write_u32(out, static_cast<std::uint32_t>(ds.n_classes));
  for (const auto& s : ds.samples) {
    io::write_u32(out, static_cast<std::uint32_t>(s.label));
    io::write_u32(out, static_cast<std::uint32_t>(s.t_steps()));
    std::uint32_t n_events = 0;
    for (std::size_t e = 0; e < s.grid.size(); ++e)
      if (s.grid(e) != 0.0) ++n_events;
    io::write_u32(out, n_events);
    for (std::size_t t = 0; t < s.t_steps(); ++t)
      for (std::size_t c = 0; c < s.channels(); ++c)
        if (s.grid(t, c) != 0.0) {
          io::write_u32(out, static_cast<std::uint32_t>(t));
          io::write_u32(out, static_cast<std::uint32_t>(c));
          io::write_u32(out,
                        static_cast<std::uint32_t>(std::lround(s.grid(t, c))));
        }
  }
  DELREC_CHECK(out.good(), "save_dataset_drec: write failed");
}

Dataset load_dataset_drec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  DELREC_CHECK(in.good(), "load_dataset_drec: cannot open " + path.string());
  io::read_magic(in, io::kKindDataset);
  Dataset ds;
  const std::uint32_t n_samples = io::read_u32(in);
  ds.n_channels = io::read_u32(in);
  ds.n_classes = static_cast<int>(io::read_u32(in));
  ds.samples.reserve(n_samples);
  for (std::uint32_t i = 0; i < n_samples; ++i) {
    BinnedSample s;
    s.label = static_cast<int>(io::read_u32(in));
    const std::uint32_t t_steps = io::read_u32(in);
    const std::uint32_t n_events = io::read_u32(in);
    s.grid = Tensor(t_steps, ds.n_channels);
    for (std::uint32_t e = 0; e < n_events; ++e) {
      const std::uint32_t t = io::read_u32(in);
      const std::uint32_t c = io::read_u32(in);
      const std::uint32_t count = io::read_u32(in);
      DELREC_CHECK(t < t_steps && c < ds.n_channels,
                   "load_dataset_drec: event out of bounds");
      s.grid(t, c) += static_cast<double>(count);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset load_dataset_auto(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  DELREC_CHECK(probe.good(), "load_dataset: cannot open " + path.string());
  char magic[4] = {};
  probe.read(magic, 4);
  probe.close();
  if (std::string_view(magic, 4) == io::kMagic)
    return load_dataset_drec(path);
  return load_dataset_text(path);
}

// ---------------------------------------------------------------------------
// Permuted flattened sequences

std::vector<std::size_t> seeded_permutation(std::size_t n,
                                            std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i)
    std::swap(perm[i - 1],
              perm[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
  return perm;
}

std::vector<std::size_t> invert_permutation(
    const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

Tensor permuted_sequence(const Tensor& image,
                         const std::vector<std::size_t>& perm) {
  DELREC_CHECK_ARG(image.rank() == 2, "permuted_sequence: expected (H,W)");
  DELREC_CHECK_ARG(perm.size() == image.size(),
                   "permuted_sequence: permutation size mismatch");
  Tensor seq(perm.size(), static_cast<std::size_t>(1));
  for (std::size_t i = 0; i < perm.size(); ++i) seq(i, 0) = image(perm[i]);
  return seq;
}

Tensor restore_image(const Tensor& seq, const std::vector<std::size_t>& perm,
                     std::size_t h, std::size_t w) {
  DELREC_CHECK_ARG(seq.size() == perm.size() && h * w == perm.size(),
                   "restore_image: size mismatch");
  Tensor img(h, w);
  for (std::size_t i = 0; i < perm.size(); ++i) img(perm[i]) = seq(i, 0);
  return img;
}

}  // namespace delrec
