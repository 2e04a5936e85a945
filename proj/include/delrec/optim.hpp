#pragma once

#include <string>
#include <vector>

#include "delrec/autodiff.hpp"
#include "delrec/tensor.hpp"

namespace delrec {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Tensor m, v;
};

// One adaptive-moment update with bias correction. `t` is the 1-based step
// count. Coupled weight decay adds wd*param to the gradient before the
// moment updates; decoupled applies it directly to the parameter (AdamW).
// A non-finite gradient raises an error naming the parameter.
void adam_step(Tensor& value, const Tensor& grad, AdamState& state, long t,
               double lr, double weight_decay, bool decoupled,
               const AdamConfig& cfg = {}, const std::string& name = "");

enum class ScheduleKind { constant, one_cycle, cosine_annealing };

struct LrSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double max_lr = 1e-3;
  long total_steps = 1;
  double warmup_frac = 0.3;   // one-cycle
  double div_factor = 25.0;   // start lr = max/div
  double final_div = 1e4;     // end lr = max/final_div
};

double lr_at(const LrSchedule& schedule, long step);

ScheduleKind schedule_kind_from_string(const std::string& s);

// Adam/AdamW over the two parameter groups with independent learning rates.
class Optimizer {
 public:
  Optimizer(std::vector<Parameter*> params, bool decoupled,
            double weight_decay_weights, double weight_decay_positions,
            AdamConfig cfg = {});

  void zero_grad();
  void step(double lr_weights, double lr_positions);
  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }

  const std::vector<Parameter*>& params() const { return params_; }
  AdamState& state_for(const Parameter& p);

 private:
  std::vector<Parameter*> params_;
  std::vector<AdamState> states_;
  bool decoupled_;
  double wd_weights_, wd_positions_;
  AdamConfig cfg_;
  long t_ = 0;
};

}  // namespace delrec
