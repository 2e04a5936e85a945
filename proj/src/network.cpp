#include <algorithm>
#include <cmath>
#include <limits>

#include "delrec/network.hpp"

namespace delrec {

namespace {

void validate_spec(const ArchitectureSpec& spec) {
  DELREC_CHECK_ARG(spec.n_inputs > 0, "architecture: n_inputs must be > 0");
  DELREC_CHECK_ARG(spec.n_classes >= 2, "architecture: need >= 2 classes");
  DELREC_CHECK_ARG(!spec.hidden.empty(),
                   "architecture: at least one hidden layer is required");
  DELREC_CHECK_ARG(
      spec.recurrent.empty() || spec.recurrent.size() == spec.hidden.size(),
      "architecture: recurrent flags must match hidden layer count");
  if (spec.ff_delay_mode == FfDelayMode::learned)
    DELREC_CHECK_ARG(spec.hidden.size() >= 2,
                     "architecture: feedforward delays sit on hidden->hidden "
                     "maps and need at least two hidden layers");
  if (spec.per_neuron_p) {
    DELREC_CHECK_ARG(spec.granularity == DelayGranularity::axonal,
                     "architecture: per-neuron p requires axonal delays");
    DELREC_CHECK_ARG(spec.rec_delay_mode == RecDelayMode::learned,
                     "architecture: per-neuron p requires learned delays");
  }
  spec.neuron.validate();
}

bool layer_recurrent(const ArchitectureSpec& spec, std::size_t i) {
  return !spec.recurrent.empty() && spec.recurrent[i];
}

}  // namespace

Network Network::build(const ArchitectureSpec& spec, Rng& rng) {
  validate_spec(spec);
  Network net;
  net.spec_ = spec;

  const InitKind w_init = spec.weight_init;
  auto init_linear = [&](Linear& lin) {
    init_params(w_init, lin.weight().value, rng,
                static_cast<double>(lin.in_features()));
    if (lin.bias())
      init_params(InitKind::bias_uniform, lin.bias()->value, rng,
                  static_cast<double>(lin.in_features()));
  };

  std::size_t prev = spec.n_inputs;
  for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
    const std::size_t width = spec.hidden[i];
    DELREC_CHECK_ARG(width > 0, "architecture: zero-width hidden layer");
    const std::string idx = std::to_string(i + 1);

    if (i > 0 && spec.ff_delay_mode == FfDelayMode::learned && i == 1) {
      auto ffd = std::make_unique<FeedforwardDelayLayer>("ffd" + idx, prev,
                                                         width);
      init_params(w_init, ffd->weight().value, rng, static_cast<double>(prev));
      init_params(InitKind::uniform_range, ffd->delays().value, rng,
                  spec.ff_delay_init_lo, spec.ff_delay_init_hi);
      net.ff_delay_.push_back(ffd.get());
      net.chain_.push_back(std::move(ffd));
    } else {
      auto lin = std::make_unique<Linear>("lin" + idx, prev, width, spec.bias);
      init_linear(*lin);
      net.chain_.push_back(std::move(lin));
    }

    if (spec.batchnorm)
      net.chain_.push_back(std::make_unique<BatchNorm>("bn" + idx, width));

    SpikingLayerOptions opt;
    opt.name = "h" + idx;
    opt.n = width;
    opt.neuron = spec.neuron;
    opt.recurrent = layer_recurrent(spec, i);
    opt.granularity = spec.granularity;
    opt.learn_delays =
        opt.recurrent && spec.rec_delay_mode == RecDelayMode::learned;
    opt.per_neuron_p = opt.learn_delays && spec.per_neuron_p;
    opt.dropout_rec = spec.dropout_rec;
    opt.train_tau = spec.train_tau;
    auto spk = std::make_unique<SpikingLayer>(opt);
    if (opt.recurrent) {
      init_params(w_init, spk->w_rec().value, rng, static_cast<double>(width));
      if (spec.rec_delay_mode != RecDelayMode::none) {
        init_params(spec.rec_delay_init, spk->delays().value, rng,
                    spec.rec_delay_init_a, spec.rec_delay_init_b);
        // delays start nonnegative by construction of the named inits;
        // fixed_random leaves them frozen at the drawn values
        spk->delays().trainable =
            spec.rec_delay_mode == RecDelayMode::learned;
      }
    }
    net.spiking_.push_back(spk.get());
    net.n_hidden_total_ += width;
    net.chain_.push_back(std::move(spk));

    if (spec.dropout_ff > 0.0)
      net.chain_.push_back(
          std::make_unique<Dropout>("drop" + idx, spec.dropout_ff));
    prev = width;
  }

  auto readout =
      std::make_unique<Linear>("readout", prev, spec.n_classes, spec.bias);
  init_linear(*readout);
  net.chain_.push_back(std::move(readout));
  if (spec.readout == ReadoutKind::softmax_over_time)
    net.chain_.push_back(std::make_unique<ReadoutLif>(
        "readout_lif", spec.n_classes, spec.readout_tau, spec.train_tau));
  return net;
}

Network::Output Network::forward_loss(const Tensor& input,
                                      const std::vector<int>& labels,
                                      Context& ctx, bool with_grad) {
  DELREC_CHECK_ARG(input.rank() == 3, "Network: expected (T,B,C) input");
  DELREC_CHECK_ARG(input.dim(1) == labels.size(),
                   "Network: batch/labels mismatch");
  tape_.clear();
  if (with_grad) ctx.tape = &tape_;

  Tensor x = input;
  for (auto& layer : chain_) x = layer->forward(x, ctx);

  Output out;
  const std::size_t t_steps = input.dim(0);

  // spike statistics over all hidden layers
  std::vector<const Tensor*> spikes;
  spikes.reserve(spiking_.size());
  for (SpikingLayer* s : spiking_) spikes.push_back(&s->last_spikes());
  const SpikeStats stats = spike_stats(spikes);
  out.penalty = stats.penalty;
  out.spike_rate = stats.mean_rate;

  Tensor grad_scores;
  if (spec_.readout == ReadoutKind::softmax_over_time) {
    out.scores = softmax_over_time(x);
    out.cross_entropy = cross_entropy_scores(out.scores, labels);
    if (with_grad)
      loss_grad_seed_ = softmax_over_time_backward(
          x, cross_entropy_scores_grad(out.scores, labels));
  } else {
    const Tensor logits = pool_over_time(x, spec_.readout_pool);
    Tensor grad_logits;
    out.cross_entropy = cross_entropy_logits(
        logits, labels, with_grad ? &grad_logits : nullptr, &out.scores);
    if (with_grad)
      loss_grad_seed_ =
          pool_over_time_backward(t_steps, grad_logits, spec_.readout_pool);
  }
  out.loss = out.cross_entropy + spec_.lambda_spike * out.penalty;

  if (with_grad && spec_.lambda_spike != 0.0)
    for (SpikingLayer* s : spiking_)
      s->add_output_grad(spike_penalty_grad(s->last_spikes(), n_hidden_total_,
                                            spec_.lambda_spike));

  for (std::size_t b = 0; b < labels.size(); ++b) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < spec_.n_classes; ++c)
      if (out.scores(b, c) > out.scores(b, best)) best = c;
    if (static_cast<int>(best) == labels[b]) ++out.correct;
  }
  return out;
}

void Network::backward() {
  DELREC_CHECK(!loss_grad_seed_.empty(), "Network::backward without forward");
  tape_.backward(loss_grad_seed_);
  loss_grad_seed_ = Tensor();
}

std::vector<Parameter*> Network::params() {
  std::vector<Parameter*> out;
  for (auto& layer : chain_) layer->collect_params(out);
  return out;
}

Parameter* Network::param_by_name(const std::string& name) {
  for (Parameter* p : params())
    if (p->name == name) return p;
  return nullptr;
}

std::size_t Network::count_trainable_params() {
  std::size_t n = 0;
  for (Parameter* p : params())
    if (p->trainable) n += p->value.size();
  return n;
}

void Network::round_delays_for_eval() {
  DELREC_CHECK(!rounded_, "Network: delays already rounded");
  for (SpikingLayer* s : spiking_)
    if (s->recurrent()) s->round_delays_for_eval();
  for (FeedforwardDelayLayer* f : ff_delay_) f->round_delays_for_eval();
  rounded_ = true;
}

void Network::clamp_delays() {
  const double cap = spec_.d_max > 0.0 ? spec_.d_max
                                       : std::numeric_limits<double>::max();
  for (SpikingLayer* s : spiking_) s->clamp_delays(cap);
  for (FeedforwardDelayLayer* f : ff_delay_) f->clamp_delays(cap);
}

// ---------------------------------------------------------------------------
// Ablation presets

const std::vector<AblationVariant>& all_ablation_variants() {
  static const std::vector<AblationVariant> v{
      AblationVariant::vanilla_snn,
      AblationVariant::vanilla_rsnn,
      AblationVariant::learned_ff_delays,
      AblationVariant::fixed_rec_delays,
      AblationVariant::learned_rec_delays,
      AblationVariant::learned_ff_and_rec_delays,
  };
  return v;
}

std::string to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::vanilla_snn: return "vanilla_snn";
    case AblationVariant::vanilla_rsnn: return "vanilla_rsnn";
    case AblationVariant::learned_ff_delays: return "learned_ff_delays";
    case AblationVariant::fixed_rec_delays: return "fixed_rec_delays";
    case AblationVariant::learned_rec_delays: return "learned_rec_delays";
    case AblationVariant::learned_ff_and_rec_delays:
      return "learned_ff_and_rec_delays";
  }
  return "?";
}

AblationVariant ablation_variant_from_string(const std::string& s) {
  for (AblationVariant v : all_ablation_variants())
    if (to_string(v) == s) return v;
  fail_arg("unknown ablation variant '" + s + "'");
}

void apply_ablation_variant(ArchitectureSpec& spec, AblationVariant variant,
                            std::size_t hidden) {
  spec.hidden = {hidden, hidden};
  spec.recurrent.clear();
  spec.ff_delay_mode = FfDelayMode::none;
  spec.per_neuron_p = false;

  const bool rec = variant != AblationVariant::vanilla_snn &&
                   variant != AblationVariant::learned_ff_delays;
  if (rec) spec.recurrent = {false, true};
  switch (variant) {
    case AblationVariant::vanilla_snn:
    case AblationVariant::learned_ff_delays:
    case AblationVariant::vanilla_rsnn:
      spec.rec_delay_mode = RecDelayMode::none;  // intrinsic delay of 1 only
      break;
    case AblationVariant::fixed_rec_delays:
      spec.rec_delay_mode = RecDelayMode::fixed_random;
      break;
    case AblationVariant::learned_rec_delays:
    case AblationVariant::learned_ff_and_rec_delays:
      spec.rec_delay_mode = RecDelayMode::learned;
      break;
  }
  if (variant == AblationVariant::learned_ff_delays ||
      variant == AblationVariant::learned_ff_and_rec_delays)
    spec.ff_delay_mode = FfDelayMode::learned;
}

ArchitectureSpec ablation_spec(AblationVariant variant, std::size_t hidden,
                               std::size_t n_inputs, std::size_t n_classes) {
  ArchitectureSpec spec;
  spec.n_inputs = n_inputs;
  spec.n_classes = n_classes;
  spec.readout = ReadoutKind::softmax_over_time;
  spec.neuron.tau_mem = 2.0;
  spec.neuron.v_threshold = 1.0;
  spec.neuron.reset = ResetKind::hard;
  spec.neuron.v_reset = 0.0;
  spec.neuron.detach_reset = true;
  spec.neuron.surrogate = SurrogateKind::arctan;
  spec.readout_tau = 2.0;
  spec.bias = false;
  spec.batchnorm = false;
  spec.weight_init = InitKind::kaiming_uniform;
  spec.rec_delay_init = InitKind::uniform_range;
  spec.rec_delay_init_a = 10.0;
  spec.rec_delay_init_b = 30.0;
  apply_ablation_variant(spec, variant, hidden);
  return spec;
}

}  // namespace delrec
