#pragma once

#include <memory>
#include <string>
#include <vector>

#include "delrec/autodiff.hpp"
#include "delrec/init.hpp"
#include "delrec/layers.hpp"
#include "delrec/loss.hpp"

namespace delrec {

enum class RecDelayMode { none, fixed_random, learned };
enum class FfDelayMode { none, learned };
enum class ReadoutKind { linear_ce, softmax_over_time };

struct ArchitectureSpec {
  std::size_t n_inputs = 0;
  std::size_t n_classes = 0;
  std::vector<std::size_t> hidden;
  std::vector<bool> recurrent;  // per hidden layer; empty means none

  RecDelayMode rec_delay_mode = RecDelayMode::none;
  DelayGranularity granularity = DelayGranularity::axonal;
  FfDelayMode ff_delay_mode = FfDelayMode::none;
  bool per_neuron_p = false;

  ReadoutKind readout = ReadoutKind::linear_ce;
  PoolKind readout_pool = PoolKind::mean;

  NeuronConfig neuron;
  double readout_tau = 2.0;
  bool train_tau = false;
  bool bias = false;
  bool batchnorm = false;
  double dropout_ff = 0.0;
  double dropout_rec = 0.0;
  double lambda_spike = 0.0;

  InitKind weight_init = InitKind::default_uniform;
  InitKind rec_delay_init = InitKind::half_gaussian;
  double rec_delay_init_a = 12.0;  // sd, or lo for uniform
  double rec_delay_init_b = 0.0;   // hi for uniform
  double ff_delay_init_lo = 0.0;
  double ff_delay_init_hi = 50.0;
  double d_max = 0.0;  // 0 = unbounded
};

// Layer chain assembled from an ArchitectureSpec:
//   input Linear -> [BatchNorm?] -> Spiking -> [Dropout?]
//   -> (Linear | FfDelay) -> ... -> readout Linear [-> ReadoutLif]
// Input and readout maps never carry delays.
class Network {
 public:
  struct Output {
    double loss = 0.0;
    double cross_entropy = 0.0;
    double penalty = 0.0;      // unweighted L_spike
    double spike_rate = 0.0;   // hidden spikes per neuron per time-step
    Tensor scores;             // (B, C), positive class scores
    std::size_t correct = 0;
  };

  static Network build(const ArchitectureSpec& spec, Rng& rng);

  // Forward to the loss. When ctx.tape is null and grads are wanted the
  // network records on its own tape; call backward() afterwards.
  Output forward_loss(const Tensor& input, const std::vector<int>& labels,
                      Context& ctx, bool with_grad);

  // Reverse sweep; parameter gradients accumulate into Parameter::grad.
  void backward();

  std::vector<Parameter*> params();
  Parameter* param_by_name(const std::string& name);
  std::size_t count_trainable_params();

  void round_delays_for_eval();
  bool delays_rounded() const { return rounded_; }
  void clamp_delays();

  const ArchitectureSpec& spec() const { return spec_; }
  std::vector<SpikingLayer*>& spiking_layers() { return spiking_; }
  std::vector<FeedforwardDelayLayer*>& ff_delay_layers() { return ff_delay_; }
  double lambda_spike() const { return spec_.lambda_spike; }
  void set_lambda_spike(double l) { spec_.lambda_spike = l; }

 private:
  ArchitectureSpec spec_;
  std::vector<std::unique_ptr<Layer>> chain_;
  std::vector<SpikingLayer*> spiking_;
  std::vector<FeedforwardDelayLayer*> ff_delay_;
  Tape tape_;
  Tensor loss_grad_seed_;
  std::size_t n_hidden_total_ = 0;
  bool rounded_ = false;
};

// The six small-model variants compared in the desk-scale study.
enum class AblationVariant {
  vanilla_snn,
  vanilla_rsnn,
  learned_ff_delays,
  fixed_rec_delays,
  learned_rec_delays,
  learned_ff_and_rec_delays,
};

AblationVariant ablation_variant_from_string(const std::string& s);
std::string to_string(AblationVariant v);
const std::vector<AblationVariant>& all_ablation_variants();

// Rewrites the topology fields of `spec` for one variant: two hidden layers
// of the given width, recurrence only in the second, feedforward delays only
// on the hidden1->hidden2 map.
void apply_ablation_variant(ArchitectureSpec& spec, AblationVariant variant,
                            std::size_t hidden);

// Small-model architecture with the topology above and the small-model
// hyperparameters (hard reset, detached, arctan surrogate, no bias/norm).
ArchitectureSpec ablation_spec(AblationVariant variant, std::size_t hidden,
                               std::size_t n_inputs = 140,
                               std::size_t n_classes = 20);

}  // namespace delrec
