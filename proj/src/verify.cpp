#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "delrec/verify.hpp"

namespace delrec {

namespace {

std::string class_of(const std::string& param_name) {
  auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return param_name.size() >= s.size() &&
           param_name.compare(param_name.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with(".w_rec")) return "w_rec";
  if (ends_with(".d_ff")) return "d_ff";
  if (ends_with(".d")) return "d";
  if (ends_with(".p")) return "p";
  if (ends_with(".tau")) return "tau_mem";
  return "w";
}

// Distance (in d units) from the nearest spread-kernel kink: the peak or a
// support edge landing exactly on an integer offset.
double kink_distance_rec(double d, double sigma_eff, int horizon_upper) {
  double dist = 1e9;
  for (int tau = 0; tau <= horizon_upper; ++tau) {
    const double u = static_cast<double>(tau) - (1.0 + d);
    dist = std::min(dist, std::abs(u));
    dist = std::min(dist, std::abs(std::abs(u) - (1.0 + sigma_eff)));
  }
  return dist;
}

void nudge_rec_delays(SpikingLayer& layer, double sigma) {
  Tensor& d = layer.delays().value;
  const Parameter* p = layer.p();
  const bool axonal = layer.granularity() == DelayGranularity::axonal;
  for (std::size_t e = 0; e < d.size(); ++e) {
    double se = sigma;
    if (axonal && p) se = 2.0 * sigmoid(p->value(e)) * sigma;
    for (int guard = 0; guard < 64; ++guard) {
      const Horizon hz = layer.current_horizon(sigma);
      if (kink_distance_rec(d(e), se, hz.upper) >= 2e-3) break;
      d(e) += 0.0037;
    }
  }
}

void nudge_ff_delays(FeedforwardDelayLayer& layer) {
  Tensor& d = layer.delays().value;
  for (std::size_t e = 0; e < d.size(); ++e) {
    for (int guard = 0; guard < 64; ++guard) {
      const double frac = d(e) - std::floor(d(e));
      if (std::min(frac, 1.0 - frac) >= 2e-3) break;
      d(e) += 0.0037;
    }
  }
}

struct GradCheckNet {
  ArchitectureSpec spec;
  double sigma = 1.0;
  std::size_t t_steps = 16;
  std::size_t batch = 2;
};

GradCheckNet make_net_spec(std::uint64_t seed, int index,
                           const ArchitectureSpec* base) {
  Rng rng(seed * 1000003u + static_cast<std::uint64_t>(index));
  GradCheckNet net;
  ArchitectureSpec& a = net.spec;
  a.n_inputs = static_cast<std::size_t>(rng.uniform_int(3, 6));
  a.n_classes = static_cast<std::size_t>(rng.uniform_int(2, 3));
  a.hidden = {static_cast<std::size_t>(rng.uniform_int(3, 8)),
              static_cast<std::size_t>(rng.uniform_int(3, 8))};
  a.recurrent = {rng.bernoulli(0.4), true};
  a.rec_delay_mode = RecDelayMode::learned;
  a.granularity = index % 4 == 1 ? DelayGranularity::synaptic
                                 : DelayGranularity::axonal;
  a.per_neuron_p = a.granularity == DelayGranularity::axonal;
  a.ff_delay_mode = index % 3 == 2 ? FfDelayMode::none : FfDelayMode::learned;
  a.readout = index % 2 == 0 ? ReadoutKind::softmax_over_time
                             : ReadoutKind::linear_ce;
  a.neuron.tau_mem = rng.uniform(1.5, 3.0);
  // thresholds low enough that the soft fire stays responsive
  a.neuron.v_threshold = rng.uniform(0.2, 0.5);
  a.neuron.reset = index % 2 == 0 ? ResetKind::soft : ResetKind::hard;
  // detach_reset intentionally drops a gradient path, so finite differences
  // cannot agree with it; verification nets keep the full graph
  a.neuron.detach_reset = false;
  a.readout_tau = 2.0;
  a.train_tau = true;
  a.bias = index % 2 == 1;
  a.batchnorm = index == 7;
  a.dropout_ff = index == 5 ? 0.2 : 0.0;
  a.dropout_rec = index == 5 ? 0.2 : 0.0;
  a.lambda_spike = 0.1;
  a.weight_init = InitKind::kaiming_uniform;
  a.rec_delay_init = InitKind::uniform_range;
  a.rec_delay_init_a = 0.0;
  a.rec_delay_init_b = 5.0;
  a.ff_delay_init_lo = 0.0;
  a.ff_delay_init_hi = 4.0;
  if (base && index == 0) {
    a.readout = base->readout;
    a.neuron.reset = base->neuron.reset;
    a.granularity = base->granularity;
    a.per_neuron_p =
        base->per_neuron_p && a.granularity == DelayGranularity::axonal;
  }
  net.sigma = rng.uniform(0.5, 2.5);
  net.t_steps = static_cast<std::size_t>(rng.uniform_int(10, 20));
  return net;
}

}  // namespace

bool GradCheckReport::pass() const {
  if (stats.empty()) return false;
  for (const auto& s : stats)
    if (s.max_rel >= tolerance || s.n_live == 0) return false;
  return true;
}

std::string GradCheckReport::format() const {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific;
  for (const auto& s : stats)
    os << "class " << s.cls << ": max_rel_err = " << s.max_rel
       << "  (checked " << s.n_checked << ", live " << s.n_live << ", skipped "
       << s.n_skipped << ")"
       << (s.max_rel < tolerance && s.n_live > 0 ? "  ok" : "  FAIL") << "\n";
  return os.str();
}

GradCheckReport gradcheck_run(std::uint64_t seed, int n_nets,
                              const ArchitectureSpec* base, double fd_step) {
  GradCheckReport report;
  for (const char* cls : {"w", "w_rec", "d", "d_ff", "p", "tau_mem"})
    report.stats.push_back({cls, 0.0, 0, 0});
  auto stat_for = [&](const std::string& cls) -> GradCheckClassStat& {
    for (auto& s : report.stats)
      if (s.cls == cls) return s;
    fail("gradcheck: unknown class " + cls);
  };

  const char* corrupt_env = std::getenv("DELREC_GRADCHECK_CORRUPT");
  const std::string corrupt_class = corrupt_env ? corrupt_env : "";

  for (int net_i = 0; net_i < n_nets; ++net_i) {
    const GradCheckNet nspec = make_net_spec(seed, net_i, base);
    Rng build_rng(seed + static_cast<std::uint64_t>(net_i) * 7919u);
    Network net = Network::build(nspec.spec, build_rng);
    for (SpikingLayer* s : net.spiking_layers())
      if (s->recurrent()) nudge_rec_delays(*s, nspec.sigma);
    for (FeedforwardDelayLayer* f : net.ff_delay_layers())
      nudge_ff_delays(*f);

    Tensor input(nspec.t_steps, nspec.batch, nspec.spec.n_inputs);
    std::vector<int> labels(nspec.batch);
    {
      Rng data_rng(seed ^ (0xabcdefull + static_cast<std::uint64_t>(net_i)));
      for (std::size_t e = 0; e < input.size(); ++e)
        input(e) = data_rng.bernoulli(0.35) ? data_rng.uniform(0.5, 1.5) : 0.0;
      for (auto& l : labels)
        l = static_cast<int>(data_rng.uniform_int(
            0, static_cast<std::int64_t>(nspec.spec.n_classes) - 1));
    }

    const std::uint64_t eval_seed = seed * 31337u + 7u;
    auto loss_of = [&]() {
      Rng eval_rng(eval_seed);
      Context ctx;
      ctx.training = true;
      ctx.soft = true;
      ctx.sigma = nspec.sigma;
      ctx.rng = &eval_rng;
      return net.forward_loss(input, labels, ctx, false).loss;
    };

    // analytic gradients
    for (Parameter* p : net.params()) p->zero_grad();
    {
      Rng eval_rng(eval_seed);
      Context ctx;
      ctx.training = true;
      ctx.soft = true;
      ctx.sigma = nspec.sigma;
      ctx.rng = &eval_rng;
      net.forward_loss(input, labels, ctx, true);
      net.backward();
    }
    if (!corrupt_class.empty())
      for (Parameter* p : net.params())
        if (p->trainable && class_of(p->name) == corrupt_class) {
          p->grad(0) += 1.0 + std::abs(p->grad(0));
          break;
        }

    for (Parameter* p : net.params()) {
      if (!p->trainable) continue;
      GradCheckClassStat& stat = stat_for(class_of(p->name));
      for (std::size_t e = 0; e < p->value.size(); ++e) {
        const double saved = p->value(e);
        p->value(e) = saved + fd_step;
        const double lp = loss_of();
        p->value(e) = saved - fd_step;
        const double lm = loss_of();
        p->value(e) = saved;
        const double fd = (lp - lm) / (2.0 * fd_step);
        const double an = p->grad(e);
        const double scale = std::max(std::abs(an), std::abs(fd));
        ++stat.n_checked;
        // Central differences carry ~1e-11 of loss-roundoff noise at this
        // step size; gradients below 1e-6 are checked absolutely since a
        // relative measure there reads pure noise.
        if (scale < 1e-6) {
          if (std::abs(an - fd) >= 1e-7)
            stat.max_rel = std::max(stat.max_rel, 1.0);
          continue;
        }
        const double rel = std::abs(an - fd) / scale;
        stat.max_rel = std::max(stat.max_rel, rel);
        ++stat.n_live;
      }
    }
  }
  return report;
}

OracleCheckReport oracle_check_run(std::uint64_t seed, int n_trials,
                                   bool include_synaptic) {
  OracleCheckReport report;
  for (int trial = 0; trial < n_trials; ++trial) {
    Rng rng(seed + static_cast<std::uint64_t>(trial) * 2654435761u);
    SpikingLayerOptions opt;
    opt.name = "oracle";
    // fixed degenerate cases first, then random draws
    std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 16));
    if (trial == 0) n = 1;
    bool zero_weights = trial == 1;
    double sigma = rng.uniform(0.0, 10.0);
    if (trial == 2) sigma = 10.0;  // support spans the whole horizon
    const std::size_t t_steps =
        static_cast<std::size_t>(rng.uniform_int(8, 64));
    const std::size_t batch = static_cast<std::size_t>(rng.uniform_int(1, 2));

    opt.n = n;
    opt.recurrent = true;
    opt.learn_delays = true;
    opt.granularity = (include_synaptic && trial % 2 == 1)
                          ? DelayGranularity::synaptic
                          : DelayGranularity::axonal;
    opt.per_neuron_p =
        opt.granularity == DelayGranularity::axonal && trial % 3 == 0;
    opt.neuron.tau_mem = rng.uniform(1.2, 3.0);
    opt.neuron.v_threshold = rng.uniform(0.5, 1.5);
    opt.neuron.reset = rng.bernoulli(0.5) ? ResetKind::soft : ResetKind::hard;
    SpikingLayer layer(opt);

    const double w_scale = 1.2 / std::sqrt(static_cast<double>(n));
    for (std::size_t e = 0; e < layer.w_rec().value.size(); ++e)
      layer.w_rec().value(e) =
          zero_weights ? 0.0 : rng.uniform(-w_scale, w_scale);
    for (std::size_t e = 0; e < layer.delays().value.size(); ++e)
      layer.delays().value(e) = rng.uniform(0.0, 6.0);
    if (Parameter* p = layer.p())
      for (std::size_t e = 0; e < p->value.size(); ++e)
        p->value(e) = rng.uniform(-1.0, 1.0);

    Tensor drive(t_steps, batch, n);
    for (std::size_t e = 0; e < drive.size(); ++e)
      if (rng.bernoulli(0.2)) drive(e) = rng.uniform(0.5, 2.5);

    Context ctx;
    ctx.training = false;
    ctx.sigma = sigma;
    const Tensor spikes = layer.forward(drive, ctx);
    const Tensor& x_rec = layer.last_recurrent_input();

    const DenseOracleOut oracle = dense_oracle_forward(layer, drive, sigma);
    double dev = 0.0;
    for (std::size_t e = 0; e < spikes.size(); ++e) {
      dev = std::max(dev, std::abs(spikes(e) - oracle.spikes(e)));
      dev = std::max(dev, std::abs(x_rec(e) - oracle.x_rec(e)));
    }
    report.max_deviation = std::max(report.max_deviation, dev);
    ++report.trials;
  }
  return report;
}

}  // namespace delrec
