#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "delrec/checkpoint.hpp"
#include "delrec/train.hpp"
#include "delrec/version.hpp"

namespace delrec {

namespace fs = std::filesystem;

namespace {

fs::path find_split_file(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".drec", ".txt"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  fail_arg("dataset: no " + stem + ".drec or " + stem + ".txt under " +
           dir.string());
}

void cap_time(Dataset& ds, std::size_t cap) {
  if (cap == 0) return;
  for (auto& s : ds.samples) {
    if (s.t_steps() == cap) continue;
    Tensor g(cap, s.channels());
    const std::size_t t_copy = std::min(cap, s.t_steps());
    for (std::size_t t = 0; t < t_copy; ++t)
      for (std::size_t c = 0; c < s.channels(); ++c) g(t, c) = s.grid(t, c);
    s.grid = std::move(g);
  }
}

}  // namespace

LoadedData load_data(const DatasetConfig& cfg, std::uint64_t run_seed) {
  LoadedData out;
  if (cfg.kind == "synthetic") {
    DataSplits splits = gen_delayed_coincidence(cfg.synth);
    out.train = std::move(splits.train);
    out.val = std::move(splits.val);
    out.test = std::move(splits.test);
    return out;
  }

  DELREC_CHECK_ARG(!cfg.path.empty(), "dataset: path required for kind=file");
  const fs::path dir(cfg.path);
  DELREC_CHECK_ARG(fs::exists(dir), "dataset: path not found: " + cfg.path);
  Dataset train_full = load_dataset_auto(find_split_file(dir, "train"));
  out.test = load_dataset_auto(find_split_file(dir, "test"));
  if (cfg.binary_clamp) {
    train_full.clamp_binary();
    out.test.clamp_binary();
  }
  const std::size_t cap =
      cfg.time_cap > 0 ? cfg.time_cap
                       : std::max(train_full.max_t_steps(),
                                  out.test.max_t_steps());
  cap_time(train_full, cap);
  cap_time(out.test, cap);

  // held-out validation share of the training set
  std::vector<std::size_t> order(train_full.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(run_seed ^ 0x76616c73ull);  // decorrelated from the run stream
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1],
              order[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
  const std::size_t n_val = static_cast<std::size_t>(
      std::lround(cfg.val_fraction * static_cast<double>(order.size())));
  out.train.n_channels = out.val.n_channels = train_full.n_channels;
  out.train.n_classes = out.val.n_classes = train_full.n_classes;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_val ? out.val : out.train;
    dst.samples.push_back(std::move(train_full.samples[order[i]]));
  }
  return out;
}

Tensor assemble_batch(const Dataset& data, const std::vector<std::size_t>& idx,
                      std::size_t first, std::size_t last, std::size_t t_steps,
                      std::vector<int>& labels_out) {
  const std::size_t batch = last - first;
  Tensor x(t_steps, batch, data.n_channels);
  labels_out.resize(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const BinnedSample& s = data.samples[idx[first + b]];
    labels_out[b] = s.label;
    const std::size_t t_copy = std::min(t_steps, s.t_steps());
    for (std::size_t t = 0; t < t_copy; ++t)
      for (std::size_t c = 0; c < s.channels(); ++c) x(t, b, c) = s.grid(t, c);
  }
  return x;
}

EvalResult evaluate_dataset(Network& net, const Dataset& data, int batch_size,
                            double sigma) {
  EvalResult res;
  if (data.samples.empty()) return res;
  const std::size_t n = data.samples.size();
  const std::size_t t_steps = data.max_t_steps();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> labels;
  double loss_sum = 0.0, rate_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t first = 0; first < n;
       first += static_cast<std::size_t>(batch_size)) {
    const std::size_t last =
        std::min(n, first + static_cast<std::size_t>(batch_size));
    Tensor x = assemble_batch(data, idx, first, last, t_steps, labels);
    Context ctx;
    ctx.training = false;
    ctx.sigma = sigma;
    Network::Output out = net.forward_loss(x, labels, ctx, false);
    const auto bsz = static_cast<double>(last - first);
    loss_sum += out.loss * bsz;
    rate_sum += out.spike_rate * bsz;
    correct += out.correct;
  }
  res.loss = loss_sum / static_cast<double>(n);
  res.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  res.spike_rate = rate_sum / static_cast<double>(n);
  return res;
}

EvalResult evaluate_dataset_rounded(Network& net, const Dataset& data,
                                    int batch_size) {
  // integer delays at sigma = 0 run through the same spread machinery as a
  // single unit tap, so a value round-trip is all that is needed
  std::vector<std::pair<Tensor*, Tensor>> stashed;
  auto round_values = [&](Tensor& d) {
    stashed.emplace_back(&d, d);
    for (std::size_t e = 0; e < d.size(); ++e)
      d(e) = std::floor(d(e) + 0.5);
  };
  for (SpikingLayer* s : net.spiking_layers())
    if (s->recurrent()) round_values(s->delays().value);
  for (FeedforwardDelayLayer* f : net.ff_delay_layers())
    round_values(f->delays().value);
  const EvalResult res = evaluate_dataset(net, data, batch_size, 0.0);
  for (auto& [ptr, saved] : stashed) *ptr = std::move(saved);
  return res;
}

TrainOutcome train_run(const RunConfig& cfg_in, const fs::path& resume,
                       int stop_after_epochs) {
  RunConfig cfg = cfg_in;
  LoadedData data = load_data(cfg.dataset, cfg.seed);
  DELREC_CHECK(!data.train.samples.empty(), "train: empty training set");
  cfg.arch.n_inputs = data.train.n_channels;
  cfg.arch.n_classes = static_cast<std::size_t>(data.train.n_classes);

  const fs::path run_dir(cfg.out_dir);
  fs::create_directories(run_dir);
  {
    std::ofstream copy(run_dir / "config.txt");
    copy << cfg.canonical_text();
    std::ofstream ver(run_dir / "version.txt");
    ver << kGitDescribe << "\n";
  }

  Rng rng(cfg.seed);
  Network net = Network::build(cfg.arch, rng);
  Optimizer opt(net.params(), cfg.optim.decoupled, cfg.optim.weight_decay,
                cfg.optim.weight_decay_positions);

  const std::size_t n_train = data.train.samples.size();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const long n_batches = static_cast<long>((n_train + batch - 1) / batch);
  const long total_steps = n_batches * cfg.epochs;
  const LrSchedule sched_w{cfg.optim.sched_weights, cfg.optim.lr_weights,
                           total_steps};
  const LrSchedule sched_p{cfg.optim.sched_positions, cfg.optim.lr_positions,
                           total_steps};
  const SigmaSchedule sigma_sched = cfg.sigma_schedule();
  const std::size_t t_steps = data.train.max_t_steps();

  TrainOutcome outcome;
  outcome.run_dir = run_dir;
  outcome.best_checkpoint = run_dir / "best.ckpt";
  outcome.last_checkpoint = run_dir / "last.ckpt";
  outcome.metrics_path = run_dir / "metrics.csv";

  int start_epoch = 0;
  if (!resume.empty()) {
    CheckpointMeta meta = load_checkpoint(resume, net, &opt);
    DELREC_CHECK(meta.config_hash == cfg.hash(),
                 "resume: checkpoint was written by a different config");
    rng.deserialize(meta.rng_state);
    start_epoch = meta.epoch;
    outcome.best_val_acc = meta.best_val_acc;
    outcome.best_epoch = meta.best_epoch;
  }
  MetricsWriter metrics(outcome.metrics_path, /*append=*/!resume.empty());

  // per-class index lists for the blend augmentation
  std::vector<std::vector<std::size_t>> by_class;
  if (cfg.dataset.augment_blend) {
    by_class.resize(static_cast<std::size_t>(data.train.n_classes));
    for (std::size_t i = 0; i < n_train; ++i)
      by_class[static_cast<std::size_t>(data.train.samples[i].label)]
          .push_back(i);
  }

  const int end_epoch = stop_after_epochs > 0
                            ? std::min(cfg.epochs, stop_after_epochs)
                            : cfg.epochs;
  std::vector<std::size_t> order(n_train);
  std::vector<int> labels;
  for (int epoch = start_epoch; epoch < end_epoch; ++epoch) {
    const auto wall_start = std::chrono::steady_clock::now();
    const double sigma = sigma_at_epoch(sigma_sched, epoch);

    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (long bi = 0; bi < n_batches; ++bi) {
      const std::size_t first = static_cast<std::size_t>(bi) * batch;
      const std::size_t last = std::min(n_train, first + batch);
      Tensor x;
      if (cfg.dataset.augment_shift > 0 || cfg.dataset.augment_blend) {
        const std::size_t bsz = last - first;
        labels.resize(bsz);
        x = Tensor(t_steps, bsz, data.train.n_channels);
        for (std::size_t b = 0; b < bsz; ++b) {
          const BinnedSample& base = data.train.samples[order[first + b]];
          BinnedSample s = base;
          if (cfg.dataset.augment_blend) {
            const auto& peers =
                by_class[static_cast<std::size_t>(base.label)];
            const auto pick = static_cast<std::size_t>(rng.uniform_int(
                0, static_cast<std::int64_t>(peers.size()) - 1));
            s = blend_samples(base, data.train.samples[peers[pick]], rng);
          }
          if (cfg.dataset.augment_shift > 0)
            augment_shift(s, cfg.dataset.augment_shift, rng);
          labels[b] = s.label;
          const std::size_t t_copy = std::min(t_steps, s.t_steps());
          for (std::size_t t = 0; t < t_copy; ++t)
            for (std::size_t c = 0; c < s.channels(); ++c)
              x(t, b, c) = s.grid(t, c);
        }
      } else {
        x = assemble_batch(data.train, order, first, last, t_steps, labels);
      }

      Context ctx;
      ctx.training = true;
      ctx.sigma = sigma;
      ctx.rng = &rng;
      Network::Output out = net.forward_loss(x, labels, ctx, true);
      if (!std::isfinite(out.loss))
        throw NumericalFailure("non-finite loss at epoch " +
                               std::to_string(epoch) + ", batch " +
                               std::to_string(bi));
      for (Parameter* p : net.params()) p->zero_grad();
      net.backward();
      const long step = opt.step_count();  // 0-based position in the schedule
      opt.step(lr_at(sched_w, step), lr_at(sched_p, step));
      net.clamp_delays();
      loss_sum += out.loss * static_cast<double>(last - first);
      correct += out.correct;
    }

    // validation follows the deployment protocol: rounded integer delays
    const EvalResult val =
        evaluate_dataset_rounded(net, data.val, cfg.batch_size);
    EpochMetrics row;
    row.epoch = epoch;
    row.sigma = sigma;
    row.train_loss = loss_sum / static_cast<double>(n_train);
    row.train_acc = static_cast<double>(correct) / static_cast<double>(n_train);
    row.val_loss = val.loss;
    row.val_acc = val.accuracy;
    row.spike_rate = val.spike_rate;
    row.wall_s = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - wall_start)
                     .count();
    metrics.append(row);
    outcome.history.push_back(row);

    CheckpointMeta meta;
    meta.config_text = cfg.canonical_text();
    meta.config_hash = cfg.hash();
    meta.epoch = epoch + 1;
    meta.sigma_epoch = sigma;
    meta.rng_state = rng.serialize();
    if (val.accuracy >= outcome.best_val_acc || outcome.best_epoch < 0) {
      outcome.best_val_acc = val.accuracy;
      outcome.best_epoch = epoch;
      meta.best_val_acc = outcome.best_val_acc;
      meta.best_epoch = outcome.best_epoch;
      save_checkpoint(outcome.best_checkpoint, net, &opt, meta);
    }
    meta.best_val_acc = outcome.best_val_acc;
    meta.best_epoch = outcome.best_epoch;
    save_checkpoint(outcome.last_checkpoint, net, &opt, meta);
  }
  return outcome;
}

}  // namespace delrec
