#include <cmath>

#include "delrec/optim.hpp"

namespace delrec {

void adam_step(Tensor& value, const Tensor& grad, AdamState& state, long t,
               double lr, double weight_decay, bool decoupled,
               const AdamConfig& cfg, const std::string& name) {
  DELREC_CHECK_ARG(value.same_shape(grad), "adam_step: shape mismatch");
  if (state.m.size() != value.size()) {
    state.m = zeros_like(value);
    state.v = zeros_like(value);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t e = 0; e < value.size(); ++e) {
    double g = grad(e);
    DELREC_CHECK(std::isfinite(g),
                 "adam_step: non-finite gradient in parameter '" + name + "'");
    if (weight_decay != 0.0) {
      if (decoupled)
        value(e) -= lr * weight_decay * value(e);
      else
        g += weight_decay * value(e);
    }
    state.m(e) = cfg.beta1 * state.m(e) + (1.0 - cfg.beta1) * g;
    state.v(e) = cfg.beta2 * state.v(e) + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m(e) / bc1;
    const double v_hat = state.v(e) / bc2;
    value(e) -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

double lr_at(const LrSchedule& schedule, long step) {
  DELREC_CHECK_ARG(schedule.total_steps >= 1, "lr_at: empty schedule");
  DELREC_CHECK_ARG(step >= 0 && step <= schedule.total_steps,
                   "lr_at: step out of range");
  const double total = static_cast<double>(schedule.total_steps);
  const double s = static_cast<double>(step);
  switch (schedule.kind) {
    case ScheduleKind::constant:
      return schedule.max_lr;
    case ScheduleKind::cosine_annealing:
      return schedule.max_lr * (1.0 + std::cos(M_PI * s / total)) / 2.0;
    case ScheduleKind::one_cycle: {
      const double warm = schedule.warmup_frac * total;
      const double lo = schedule.max_lr / schedule.div_factor;
      const double end = schedule.max_lr / schedule.final_div;
      if (s <= warm) {
        const double u = warm > 0.0 ? s / warm : 1.0;
        return lo + (schedule.max_lr - lo) * (1.0 - std::cos(M_PI * u)) / 2.0;
      }
      const double v = (s - warm) / (total - warm);
      return end + (schedule.max_lr - end) * (1.0 + std::cos(M_PI * v)) / 2.0;
    }
  }
  fail("lr_at: unknown schedule kind");
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "one_cycle") return ScheduleKind::one_cycle;
  if (s == "cosine_annealing" || s == "cosine")
    return ScheduleKind::cosine_annealing;
  fail_arg("unknown lr schedule '" + s + "'");
}

Optimizer::Optimizer(std::vector<Parameter*> params, bool decoupled,
                     double weight_decay_weights, double weight_decay_positions,
                     AdamConfig cfg)
    : params_(std::move(params)),
      states_(params_.size()),
      decoupled_(decoupled),
      wd_weights_(weight_decay_weights),
      wd_positions_(weight_decay_positions),
      cfg_(cfg) {}

void Optimizer::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Optimizer::step(double lr_weights, double lr_positions) {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter* p = params_[i];
    if (!p->trainable) continue;
    const bool weights = p->group == Parameter::Group::weights;
    adam_step(p->value, p->grad, states_[i], t_,
              weights ? lr_weights : lr_positions,
              weights ? wd_weights_ : wd_positions_, decoupled_, cfg_,
              p->name);
  }
}

AdamState& Optimizer::state_for(const Parameter& p) {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i] == &p) return states_[i];
  fail("Optimizer: unknown parameter '" + p.name + "'");
}

}  // namespace delrec
