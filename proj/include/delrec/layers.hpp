#pragma once

#include <memory>
#include <string>
#include <vector>

#include "delrec/autodiff.hpp"
#include "delrec/delay_kernel.hpp"
#include "delrec/neuron.hpp"
#include "delrec/tensor.hpp"

namespace delrec {

// Sequence-level network building block. forward() maps a time-major
// activation tensor (T, B, C_in) -> (T, B, C_out) and records a backward
// node on the context tape.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& input, Context& ctx) = 0;
  virtual void collect_params(std::vector<Parameter*>& out) {}
  virtual const std::string& name() const = 0;
};

class Linear : public Layer {
 public:
  Linear(std::string name, std::size_t in, std::size_t out, bool bias);

  Tensor forward(const Tensor& input, Context& ctx) override;
  void collect_params(std::vector<Parameter*>& out) override;
  const std::string& name() const override { return name_; }

  Parameter& weight() { return w_; }
  Parameter* bias() { return has_bias_ ? &b_ : nullptr; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  Tensor backward(const Tensor& grad_out);

  std::string name_;
  std::size_t in_, out_;
  bool has_bias_;
  Parameter w_;  // (out, in)
  Parameter b_;  // (out)
  Tensor cached_in_;
  const kernels::Backend* bk_ = nullptr;
};

// Per-channel normalization of the feedforward drive, statistics taken over
// (time x batch) in training with running-stat evaluation.
class BatchNorm : public Layer {
 public:
  BatchNorm(std::string name, std::size_t channels, double momentum = 0.1,
            double eps = 1e-5);

  Tensor forward(const Tensor& input, Context& ctx) override;
  void collect_params(std::vector<Parameter*>& out) override;
  const std::string& name() const override { return name_; }

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }

 private:
  Tensor backward(const Tensor& grad_out);

  std::string name_;
  std::size_t c_;
  double momentum_, eps_;
  Parameter gamma_, beta_;
  Parameter running_mean_, running_var_;  // frozen buffers, checkpointed
  Tensor xhat_;
  std::vector<double> inv_std_;
  bool trained_stats_ = false;
};

// Inverted dropout; identity at evaluation time.
class Dropout : public Layer {
 public:
  Dropout(std::string name, double rate);

  Tensor forward(const Tensor& input, Context& ctx) override;
  const std::string& name() const override { return name_; }
  double rate() const { return rate_; }

 private:
  std::string name_;
  double rate_;
  Tensor mask_;
};

enum class DelayGranularity { axonal, synaptic };
enum class DelayMode { train_spread, eval_rounded };

// Circular schedule of future recurrent input: slot (pointer + tau) mod L
// holds the weighted spikes arriving tau steps from now. Layout (L, B, N).
struct ScheduleBuffer {
  Tensor slots;
  int pointer = 0;

  ScheduleBuffer() = default;
  ScheduleBuffer(int length, std::size_t batch, std::size_t n)
      : slots(static_cast<std::size_t>(length), batch, n) {}

  int length() const { return static_cast<int>(slots.dim(0)); }
  std::size_t batch() const { return slots.dim(1); }
  std::size_t neurons() const { return slots.dim(2); }
};

struct SpikingLayerOptions {
  std::string name = "spk";
  std::size_t n = 0;
  NeuronConfig neuron;
  bool recurrent = false;
  DelayGranularity granularity = DelayGranularity::axonal;
  bool learn_delays = false;   // trainable delays, spread width follows sigma
  bool per_neuron_p = false;   // axonal only
  double dropout_rec = 0.0;    // applied to X^rec after the buffer read
  bool train_tau = false;
};

// LIF layer, optionally with delayed recurrent connections realized through
// the circular ScheduleBuffer. In train_spread mode a spike scheduled at the
// real-valued delay d is spread over integer offsets with the triangle
// kernel; eval_rounded uses integer delays (a single unit-weight tap).
class SpikingLayer : public Layer {
 public:
  explicit SpikingLayer(const SpikingLayerOptions& opt);
  ~SpikingLayer() override;

  Tensor forward(const Tensor& drive, Context& ctx) override;
  void collect_params(std::vector<Parameter*>& out) override;
  const std::string& name() const override { return name_; }

  // One time step against caller-owned state. Reads the slot under the
  // pointer, runs charge/fire/reset, zeroes the slot, schedules this step's
  // spikes at offsets 1..L-1, then advances the pointer. `v` is the (B, N)
  // membrane state, updated in place. Errors if the buffer length does not
  // match the horizon for `sigma`.
  Tensor step(ScheduleBuffer& buffer, const Tensor& x_ff, Tensor& v,
              double sigma, bool soft = false) const;

  Horizon current_horizon(double sigma) const;
  double resolved_sigma(double ctx_sigma) const;
  void round_delays_for_eval();
  void clamp_delays(double d_max);
  DelayMode mode() const { return mode_; }

  std::size_t size() const { return n_; }
  bool recurrent() const { return recurrent_; }
  DelayGranularity granularity() const { return granularity_; }
  const NeuronConfig& neuron_config() const { return cfg_; }
  double tau_mem() const { return tau_.value(0); }

  Parameter& w_rec() { return w_rec_; }
  const Parameter& w_rec() const { return w_rec_; }
  Parameter& delays() { return d_; }
  const Parameter& delays() const { return d_; }
  Parameter* p() { return has_p_ ? &p_ : nullptr; }
  const Parameter* p() const { return has_p_ ? &p_ : nullptr; }
  Parameter& tau() { return tau_; }

  const Tensor& last_spikes() const { return spikes_; }
  const Tensor& last_recurrent_input() const { return x_rec_raw_; }

  // Extra gradient fanned into this layer's spike output (spike penalty).
  void add_output_grad(const Tensor& g);

 private:
  struct SpreadTables;
  void build_tables(double sigma, SpreadTables& tabs) const;
  Tensor backward(const Tensor& grad_out);
  Tensor transposed_w_rec() const;
  void schedule_step(const SpreadTables& tabs, const Tensor& w_rec_t,
                     ScheduleBuffer& buffer, const double* spikes_row,
                     std::size_t batch_index,
                     const kernels::Backend& bk) const;

  std::string name_;
  std::size_t n_;
  NeuronConfig cfg_;
  bool recurrent_;
  DelayGranularity granularity_;
  bool learn_delays_;
  bool has_p_;
  double dropout_rec_;
  DelayMode mode_ = DelayMode::train_spread;

  Parameter w_rec_;  // (N, N), w[i][j]: presynaptic j -> postsynaptic i
  Parameter d_;      // (N) axonal or (N, N) synaptic
  Parameter p_;      // (N)
  Parameter tau_;    // shared scalar

  // forward caches for BPTT
  Tensor spikes_, h_, input_current_, x_rec_raw_, rec_mask_;
  Tensor w_rec_t_;  // (N, N) transpose: row j = outgoing weights of neuron j
  bool soft_forward_ = false;
  double sigma_forward_ = 0.0;
  Tensor pending_output_grad_;

  std::unique_ptr<SpreadTables> tabs_;
};

// Per-synapse feedforward delays with two-point linear interpolation between
// the neighbouring integer offsets.
class FeedforwardDelayLayer : public Layer {
 public:
  FeedforwardDelayLayer(std::string name, std::size_t in, std::size_t out);

  Tensor forward(const Tensor& input, Context& ctx) override;
  void collect_params(std::vector<Parameter*>& out) override;
  const std::string& name() const override { return name_; }

  void round_delays_for_eval();
  void clamp_delays(double d_max);
  DelayMode mode() const { return mode_; }

  Parameter& weight() { return w_; }
  Parameter& delays() { return d_; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  Tensor backward(const Tensor& grad_out);

  std::string name_;
  std::size_t in_, out_;
  DelayMode mode_ = DelayMode::train_spread;
  Parameter w_;  // (out, in)
  Parameter d_;  // (out, in)
  Tensor cached_in_;
};

// Readout LIF with infinite threshold: integrates its drive and never fires;
// the output is the membrane trace.
class ReadoutLif : public Layer {
 public:
  ReadoutLif(std::string name, std::size_t n, double tau_mem, bool train_tau);

  Tensor forward(const Tensor& input, Context& ctx) override;
  void collect_params(std::vector<Parameter*>& out) override;
  const std::string& name() const override { return name_; }

  Parameter& tau() { return tau_; }

 private:
  Tensor backward(const Tensor& grad_out);

  std::string name_;
  std::size_t n_;
  Parameter tau_;
  Tensor v_;  // cached trace
};

// Independent reference forward for a recurrent SpikingLayer: a full (T,B,N)
// scheduling matrix updated with plain loops, no circular buffer, no kernel
// dispatch. Used by the buffered-vs-dense equivalence checks.
struct DenseOracleOut {
  Tensor spikes;
  Tensor x_rec;
};
DenseOracleOut dense_oracle_forward(const SpikingLayer& layer,
                                    const Tensor& drive, double sigma);

}  // namespace delrec
