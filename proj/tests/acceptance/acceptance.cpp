// Acceptance suite: one checkable criterion per function, each printing a
// single PASS/FAIL line. Run all with --all or one with --criterion N.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "delrec/checkpoint.hpp"
#include "delrec/delay_kernel.hpp"
#include "delrec/layers.hpp"
#include "delrec/train.hpp"
#include "delrec/verify.hpp"

using namespace delrec;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

bool report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  return pass;
}

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "delrec_acceptance";
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// shared run configurations

// Delayed-coincidence task and training recipe used by criteria 6-8.
RunConfig ordering_config(bool learned_delays, std::uint64_t seed) {
  RunConfig rc;
  rc.seed = seed;
  rc.epochs = 30;
  rc.batch_size = 32;
  rc.dataset.kind = "synthetic";
  rc.dataset.synth.n_classes = 4;
  rc.dataset.synth.lags = {2, 6, 11, 17};
  rc.dataset.synth.t_steps = 60;
  rc.dataset.synth.background_rate = 0.05;
  rc.dataset.synth.probes = 10;
  rc.dataset.synth.n_samples = 2000;
  rc.dataset.synth.seed = 99;
  rc.arch.hidden = {28, 28};
  rc.arch.recurrent = {false, true};
  rc.arch.rec_delay_mode =
      learned_delays ? RecDelayMode::learned : RecDelayMode::none;
  rc.arch.readout = ReadoutKind::softmax_over_time;
  rc.arch.neuron.tau_mem = 1.5;
  rc.arch.neuron.v_threshold = 1.0;
  rc.arch.neuron.reset = ResetKind::soft;
  rc.arch.neuron.surrogate = SurrogateKind::triangle;
  rc.arch.readout_tau = 1.5;
  rc.arch.weight_init = InitKind::kaiming_uniform;
  rc.arch.rec_delay_init = InitKind::uniform_range;
  rc.arch.rec_delay_init_a = 0.0;
  rc.arch.rec_delay_init_b = 20.0;
  rc.optim.lr_weights = 0.02;
  rc.optim.lr_positions = 0.12;
  rc.optim.sched_weights = ScheduleKind::one_cycle;
  rc.optim.sched_positions = ScheduleKind::constant;
  return rc;
}

struct TrainedModel {
  TrainOutcome outcome;
  LoadedData data;
  Network net;
};

TrainedModel train_ordering_model(bool learned_delays, std::uint64_t seed,
                                  const std::string& tag) {
  RunConfig rc = ordering_config(learned_delays, seed);
  rc.out_dir = (scratch_dir() / tag).string();
  fs::remove_all(rc.out_dir);
  TrainOutcome outcome = train_run(rc);
  LoadedData data = load_data(rc.dataset, rc.seed);
  rc.arch.n_inputs = data.train.n_channels;
  rc.arch.n_classes = static_cast<std::size_t>(data.train.n_classes);
  Rng rng(rc.seed);
  TrainedModel model{std::move(outcome), std::move(data),
                     Network::build(rc.arch, rng)};
  load_checkpoint(model.outcome.best_checkpoint, model.net, nullptr);
  return model;
}

// ---------------------------------------------------------------------------
// criterion 1: triangle-kernel invariants

bool criterion_1() {
  Timer timer;
  Rng rng(1001);
  double worst_sum = 0.0;
  bool support_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const double d = rng.uniform(0.0, 40.0);
    const SpreadParams params{.sigma = 0.0, .d = d};
    const std::vector<double> ds{d};
    const Horizon hz = horizon(0.0, ds);
    const auto [lo, hi] = support_bounds(params);
    double sum = 0.0;
    for (int tau = 0; tau <= hz.upper; ++tau) {
      const double v = spread_value(tau, params);
      sum += v;
      if ((tau < lo || tau > hi) && v != 0.0) support_ok = false;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  // support check across nonzero widths as well
  for (int trial = 0; trial < 500; ++trial) {
    SpreadParams params{.sigma = rng.uniform(0.0, 10.0),
                        .d = rng.uniform(0.0, 40.0)};
    const std::vector<double> ds{params.d};
    const Horizon hz = horizon(params.sigma, ds);
    const auto [lo, hi] = support_bounds(params);
    for (int tau = 0; tau <= hz.upper; ++tau) {
      const double v = spread_value(tau, params);
      if ((tau < lo || tau > hi) && v != 0.0) support_ok = false;
    }
  }
  const double secs = timer.seconds();
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "sum-to-one worst |err| = %.2e (tol 1e-12), support clean = "
                "%s, %.2fs (budget 1s)",
                worst_sum, support_ok ? "yes" : "NO", secs);
  return report(1, worst_sum < 1e-12 && support_ok && secs < 1.0, buf);
}

// ---------------------------------------------------------------------------
// criterion 2: buffered scheduling equals the dense reference

bool criterion_2() {
  Timer timer;
  const OracleCheckReport r = oracle_check_run(424242, 100, true);
  const double secs = timer.seconds();
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d trials, max |buffered - dense| = %.2e (tol 1e-9), %.1fs "
                "(budget 30s)",
                r.trials, r.max_deviation, secs);
  return report(2, r.pass() && secs < 30.0, buf);
}

// ---------------------------------------------------------------------------
// criterion 3: finite-difference gradient verification

bool criterion_3() {
  Timer timer;
  const GradCheckReport r = gradcheck_run(90210, 10);
  const double secs = timer.seconds();
  double worst = 0.0;
  for (const auto& s : r.stats) worst = std::max(worst, s.max_rel);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "10 nets, 6 classes, max rel err = %.2e (tol 1e-4), %.1fs "
                "(budget 120s)",
                worst, secs);
  const bool pass = r.pass() && secs < 120.0;
  if (!pass) std::fputs(r.format().c_str(), stdout);
  return report(3, pass, buf);
}

// ---------------------------------------------------------------------------
// criterion 4: sigma annealing schedule

bool criterion_4() {
  // independent high-precision route: extended-precision pow via exp/log
  auto reference = [](double init, double decay, int n, int e) {
    const long double exponent =
        100.0L * static_cast<long double>(e) / static_cast<long double>(n);
    return static_cast<double>(
        static_cast<long double>(init) *
        expl(exponent * logl(static_cast<long double>(decay))));
  };
  double worst = 0.0;
  for (int n : {30, 100, 150}) {
    const SigmaSchedule sched{10.0, 0.95, n};
    for (int e = 0; e <= n; ++e)
      worst = std::max(worst, std::abs(sigma_at_epoch(sched, e) -
                                       reference(10.0, 0.95, n, e)));
  }
  const double final_sigma = sigma_at_epoch(SigmaSchedule{10.0, 0.95, 100}, 100);
  const double frozen = 0.05920529220334025;  // 10 * 0.95^100
  const bool final_ok = std::abs(final_sigma - frozen) < 1e-12;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max |schedule - reference| = %.2e (tol 1e-12), final sigma "
                "= %.10f",
                worst, final_sigma);
  return report(4, worst < 1e-12 && final_ok, buf);
}

// ---------------------------------------------------------------------------
// criterion 5: two-neuron pattern generator found by brute force

struct PatternCircuit {
  int d_blue_self, d_blue_to_pink, d_pink_to_blue, d_pink_self;
};

// Simulates two coincidence units (fire iff input > 1) wired with unit
// recurrent weights and per-connection integer delays, using the real
// engine in synaptic mode. Returns the (T, 2) spike raster.
std::vector<std::array<int, 2>> simulate_circuit(const PatternCircuit& c,
                                                 int t_steps) {
  SpikingLayerOptions opt;
  opt.name = "fig1a";
  opt.n = 2;
  opt.recurrent = true;
  opt.learn_delays = true;
  opt.granularity = DelayGranularity::synaptic;
  // tau just above 1 makes H track the input; threshold 1.5 fires exactly
  // when at least two unit spikes coincide
  opt.neuron.tau_mem = 1.005;
  opt.neuron.v_threshold = 1.5;
  opt.neuron.reset = ResetKind::hard;
  opt.neuron.v_reset = 0.0;
  SpikingLayer layer(opt);
  layer.w_rec().value.fill(1.0);
  // effective transmission delay is 1 + d
  layer.delays().value(0, 0) = c.d_blue_self - 1;
  layer.delays().value(1, 0) = c.d_blue_to_pink - 1;
  layer.delays().value(0, 1) = c.d_pink_to_blue - 1;
  layer.delays().value(1, 1) = c.d_pink_self - 1;

  Tensor drive(static_cast<std::size_t>(t_steps), 1, 2);
  drive(1, 0, 0) = 1.0;  // blue input spikes at t and t+3
  drive(4, 0, 0) = 1.0;
  drive(2, 0, 1) = 2.0;  // pink receives two simultaneous spikes at t+1

  Context ctx;
  ctx.sigma = 0.0;
  const Tensor spikes = layer.forward(drive, ctx);
  std::vector<std::array<int, 2>> raster(static_cast<std::size_t>(t_steps));
  for (int t = 0; t < t_steps; ++t)
    raster[static_cast<std::size_t>(t)] = {
        static_cast<int>(spikes(static_cast<std::size_t>(t), 0, 0)),
        static_cast<int>(spikes(static_cast<std::size_t>(t), 0, 1))};
  return raster;
}

bool is_transient(const std::vector<std::array<int, 2>>& raster) {
  int blue = 0, pink = 0;
  for (std::size_t t = 0; t < raster.size(); ++t) {
    if (t >= 20 && (raster[t][0] || raster[t][1])) return false;
    blue += raster[t][0];
    pink += raster[t][1];
  }
  return blue >= 1 && pink >= 1;  // the inputs trigger firing, then silence
}

bool is_sustained_periodic(const std::vector<std::array<int, 2>>& raster) {
  bool late_activity = false;
  for (std::size_t t = raster.size() - 10; t < raster.size(); ++t)
    if (raster[t][0] || raster[t][1]) late_activity = true;
  if (!late_activity) return false;
  for (std::size_t period = 1; period <= 12; ++period) {
    bool periodic = true;
    for (std::size_t t = 24; t + period < raster.size(); ++t)
      if (raster[t] != raster[t + period]) {
        periodic = false;
        break;
      }
    if (periodic) return true;
  }
  return false;
}

// Golden raster of the sustained pattern, frozen from the first search hit:
// effective delays blue->blue 3, blue->pink 1, pink->blue 2, pink self
// raised 1 -> 3. Period-3 alternation after ignition.
constexpr int kGoldenConfig[4] = {3, 1, 2, 3};
constexpr int kGoldenRasterLen = 24;
constexpr int kGoldenRaster[kGoldenRasterLen][2] = {
    {0, 0}, {0, 0}, {0, 1}, {0, 0}, {1, 0}, {0, 1}, {0, 0}, {1, 0},
    {0, 1}, {0, 0}, {1, 0}, {0, 1}, {0, 0}, {1, 0}, {0, 1}, {0, 0},
    {1, 0}, {0, 1}, {0, 0}, {1, 0}, {0, 1}, {0, 0}, {1, 0}, {0, 1}};

bool criterion_5() {
  Timer timer;
  const int t_steps = 60;
  bool found = false;
  PatternCircuit hit{};
  std::vector<std::array<int, 2>> sustained_raster;
  for (int bb = 1; bb <= 5 && !found; ++bb)
    for (int bp = 1; bp <= 5 && !found; ++bp)
      for (int pb = 1; pb <= 5 && !found; ++pb) {
        const PatternCircuit low{bb, bp, pb, 1};
        const PatternCircuit high{bb, bp, pb, 3};
        const auto raster_low = simulate_circuit(low, t_steps);
        if (!is_transient(raster_low)) continue;
        const auto raster_high = simulate_circuit(high, t_steps);
        if (!is_sustained_periodic(raster_high)) continue;
        found = true;
        hit = high;
        sustained_raster = raster_high;
      }
  const double secs = timer.seconds();

  bool golden_ok = found && hit.d_blue_self == kGoldenConfig[0] &&
                   hit.d_blue_to_pink == kGoldenConfig[1] &&
                   hit.d_pink_to_blue == kGoldenConfig[2] &&
                   hit.d_pink_self == kGoldenConfig[3];
  if (golden_ok)
    for (int t = 0; t < kGoldenRasterLen; ++t)
      if (sustained_raster[static_cast<std::size_t>(t)][0] !=
              kGoldenRaster[t][0] ||
          sustained_raster[static_cast<std::size_t>(t)][1] !=
              kGoldenRaster[t][1])
        golden_ok = false;

  char buf[200];
  if (found)
    std::snprintf(buf, sizeof(buf),
                  "delays (b->b %d, b->p %d, p->b %d, p->p 1->3) turn "
                  "transient into sustained, golden raster %s, %.2fs "
                  "(budget 5s)",
                  hit.d_blue_self, hit.d_blue_to_pink, hit.d_pink_to_blue,
                  golden_ok ? "matched" : "MISMATCH", secs);
  else
    std::snprintf(buf, sizeof(buf), "no qualifying delay assignment found");
  return report(5, found && golden_ok && secs < 5.0, buf);
}

// ---------------------------------------------------------------------------
// criterion 6: learned recurrent delays beat the vanilla RSNN

bool criterion_6() {
  Timer timer;
  TrainedModel learned = train_ordering_model(true, 2, "c6_learned");
  learned.net.round_delays_for_eval();
  const EvalResult learned_eval =
      evaluate_dataset(learned.net, learned.data.test, 32, 0.0);

  TrainedModel vanilla = train_ordering_model(false, 2, "c6_vanilla");
  vanilla.net.round_delays_for_eval();
  const EvalResult vanilla_eval =
      evaluate_dataset(vanilla.net, vanilla.data.test, 32, 0.0);
  const double secs = timer.seconds();

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "learned delays %.1f%% (need >= 90), vanilla RSNN %.1f%% "
                "(need <= 70), 30 epochs each, %.0fs (budget 600s)",
                100.0 * learned_eval.accuracy, 100.0 * vanilla_eval.accuracy,
                secs);
  return report(6,
                learned_eval.accuracy >= 0.90 && vanilla_eval.accuracy <= 0.70 &&
                    secs < 600.0,
                buf);
}

// ---------------------------------------------------------------------------
// criterion 7: rounding the converged model costs at most 2 points

bool criterion_7() {
  TrainedModel model = train_ordering_model(true, 2, "c7_learned");
  // sigma -> 0 forward with the real-valued delays (pure interpolation)
  const EvalResult interp =
      evaluate_dataset(model.net, model.data.test, 32, 0.0);
  model.net.round_delays_for_eval();
  const EvalResult rounded =
      evaluate_dataset(model.net, model.data.test, 32, 0.0);
  const double drop = 100.0 * (interp.accuracy - rounded.accuracy);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "interpolated %.1f%%, rounded %.1f%%, drop %+.1fpp (tol 2pp)",
                100.0 * interp.accuracy, 100.0 * rounded.accuracy, drop);
  return report(7, drop <= 2.0, buf);
}

// ---------------------------------------------------------------------------
// criterion 8: bit-identical metrics under a fixed seed

std::vector<std::string> metrics_without_wall(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    if (pos != std::string::npos) line.resize(pos);  // strip wall_s
    rows.push_back(line);
  }
  return rows;
}

bool criterion_8() {
  RunConfig rc = ordering_config(true, 7);
  rc.epochs = 3;
  rc.dataset.synth.n_samples = 400;
  rc.arch.dropout_ff = 0.1;  // exercise the stochastic paths too
  rc.arch.dropout_rec = 0.1;

  rc.out_dir = (scratch_dir() / "c8_a").string();
  fs::remove_all(rc.out_dir);
  train_run(rc);
  rc.out_dir = (scratch_dir() / "c8_b").string();
  fs::remove_all(rc.out_dir);
  train_run(rc);

  const auto a = metrics_without_wall(scratch_dir() / "c8_a" / "metrics.csv");
  const auto b = metrics_without_wall(scratch_dir() / "c8_b" / "metrics.csv");
  const bool same = !a.empty() && a == b;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "two seeded runs, %zu metric rows, identical after dropping "
                "the wall-time column: %s",
                a.size() > 0 ? a.size() - 1 : 0, same ? "yes" : "NO");
  return report(8, same, buf);
}

// ---------------------------------------------------------------------------
// criterion 9: optional SHD small-model ordering

fs::path shd_dir() {
  if (const char* env = std::getenv("DELREC_SHD_DIR")) return env;
  return "data/shd";
}

bool criterion_9() {
  const fs::path dir = shd_dir();
  const bool present =
      (fs::exists(dir / "train.drec") || fs::exists(dir / "train.txt")) &&
      (fs::exists(dir / "test.drec") || fs::exists(dir / "test.txt"));
  if (!present) {
    std::printf(
        "criterion  9: SKIP  converted SHD dataset not found under %s "
        "(set DELREC_SHD_DIR)\n",
        dir.string().c_str());
    return true;
  }

  Timer timer;
  auto run_variant = [&](AblationVariant variant, std::uint64_t seed) {
    RunConfig rc;
    rc.seed = seed;
    rc.epochs = 30;
    rc.batch_size = 64;
    rc.dataset.kind = "file";
    rc.dataset.path = dir.string();
    rc.dataset.val_fraction = 0.2;
    rc.arch = ablation_spec(variant, 42);
    rc.optim.decoupled = true;
    rc.optim.lr_weights = 5e-3;
    rc.optim.lr_positions = 0.1;
    rc.optim.weight_decay = 1e-5;
    rc.optim.sched_weights = ScheduleKind::one_cycle;
    rc.optim.sched_positions = ScheduleKind::one_cycle;
    rc.out_dir = (scratch_dir() /
                  ("c9_" + to_string(variant) + "_s" + std::to_string(seed)))
                     .string();
    fs::remove_all(rc.out_dir);
    TrainOutcome out = train_run(rc);
    LoadedData data = load_data(rc.dataset, rc.seed);
    rc.arch.n_inputs = data.train.n_channels;
    rc.arch.n_classes = static_cast<std::size_t>(data.train.n_classes);
    Rng rng(rc.seed);
    Network net = Network::build(rc.arch, rng);
    load_checkpoint(out.best_checkpoint, net, nullptr);
    return evaluate_dataset_rounded(net, data.test, 64).accuracy;
  };

  double learned = 0.0, vanilla = 0.0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    learned += run_variant(AblationVariant::learned_rec_delays, seed) / 3.0;
    vanilla += run_variant(AblationVariant::vanilla_rsnn, seed) / 3.0;
  }
  const double secs = timer.seconds();
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "SHD 2x42: learned rec delays %.1f%%, vanilla RSNN %.1f%% "
                "(need +5pp), 3 seeds, %.0fs",
                100.0 * learned, 100.0 * vanilla, secs);
  return report(9, learned - vanilla >= 0.05, buf);
}

// ---------------------------------------------------------------------------
// criterion 10: spike-penalty sweep yields non-increasing firing rates

bool criterion_10() {
  Timer timer;
  const double lambdas[] = {1e-4, 1e-2, 1.0, 10.0};
  std::vector<double> rates;
  for (const double lambda : lambdas) {
    double mean_rate = 0.0;
    for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
      RunConfig rc = ordering_config(true, seed);
      rc.dataset.synth.n_samples = 1200;
      rc.arch.lambda_spike = lambda;
      // constant weight lr keeps the penalty active through convergence
      rc.optim.sched_weights = ScheduleKind::constant;
      rc.optim.lr_weights = 0.01;
      rc.out_dir = (scratch_dir() / ("c10_l" + std::to_string(lambda) + "_s" +
                                     std::to_string(seed)))
                       .string();
      fs::remove_all(rc.out_dir);
      const TrainOutcome out = train_run(rc);
      // firing rate at convergence: mean over the last five epochs
      double tail = 0.0;
      for (int k = 0; k < 5; ++k)
        tail += out.history[out.history.size() - 1 - static_cast<std::size_t>(k)]
                    .spike_rate /
                5.0;
      mean_rate += tail / 3.0;
    }
    rates.push_back(mean_rate);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rates.size(); ++i)
    if (rates[i] > rates[i - 1]) monotone = false;
  const double secs = timer.seconds();
  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "mean rates over lambda {1e-4, 1e-2, 1, 10}: %.4f >= %.4f >= "
                "%.4f >= %.4f: %s (3 seeds, %.0fs)",
                rates[0], rates[1], rates[2], rates[3],
                monotone ? "monotone" : "NOT monotone", secs);
  return report(10, monotone, buf);
}

}  // namespace

int main(int argc, char** argv) {
  int which = 0;  // 0 = all
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      which = std::atoi(argv[++i]);
    else if (std::strcmp(argv[i], "--all") == 0)
      which = 0;
    else {
      std::fprintf(stderr, "usage: %s [--all | --criterion N]\n", argv[0]);
      return 1;
    }
  }

  bool (*criteria[])() = {criterion_1, criterion_2, criterion_3, criterion_4,
                          criterion_5, criterion_6, criterion_7, criterion_8,
                          criterion_9, criterion_10};
  bool all_pass = true;
  try {
    if (which == 0) {
      for (int i = 0; i < 10; ++i) all_pass = criteria[i]() && all_pass;
    } else if (which >= 1 && which <= 10) {
      all_pass = criteria[which - 1]();
    } else {
      std::fprintf(stderr, "criterion must be 1..10\n");
      return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: exception: %s\n", e.what());
    return 2;
  }
  return all_pass ? 0 : 2;
}
