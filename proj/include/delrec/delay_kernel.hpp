#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "delrec/check.hpp"

namespace delrec {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Parameters of the triangle spread kernel used to schedule a spike around
// its real-valued delay. `sigma` is the layer-wide annealed width; `p`, when
// enabled, modulates the width per neuron through 2*sig(p)*sigma.
struct SpreadParams {
  double sigma = 0.0;
  double d = 0.0;
  bool has_p = false;
  double p = 0.0;
};

inline double effective_sigma(const SpreadParams& params) {
  return params.has_p ? 2.0 * sigmoid(params.p) * params.sigma : params.sigma;
}

// Triangle kernel value at integer (or real) offset tau. Peak 1/(1+sigma_eff)
// at tau = 1+d; normalized so the integer-sampled mass sums to 1 once
// sigma_eff reaches 0 (pure two-point interpolation).
inline double spread_value(double tau, const SpreadParams& params) {
  const double s = 1.0 + effective_sigma(params);
  const double u = tau - (1.0 + params.d);
  return std::max(0.0, (s - std::abs(u)) / (s * s));
}

// Partial derivative of spread_value w.r.t. d. Subgradient at kink points is
// the left-slope value (approached from smaller d).
inline double spread_grad_d(double tau, const SpreadParams& params) {
  const double s = 1.0 + effective_sigma(params);
  const double u = tau - (1.0 + params.d);
  const double slope = 1.0 / (s * s);
  if (u > 0.0) return u >= s ? 0.0 : slope;
  if (u == 0.0) return slope;  // peak: left side is the ascending branch
  return u < -s ? 0.0 : -slope;
}

// Partial derivative w.r.t. the per-neuron width modulator p; zero when p is
// not enabled and on/outside the support boundary.
inline double spread_grad_p(double tau, const SpreadParams& params) {
  if (!params.has_p) return 0.0;
  const double sig = sigmoid(params.p);
  const double s = 1.0 + 2.0 * sig * params.sigma;
  const double au = std::abs(tau - (1.0 + params.d));
  if (au >= s) return 0.0;
  const double dh_ds = (2.0 * au - s) / (s * s * s);
  const double ds_dp = 2.0 * params.sigma * sig * (1.0 - sig);
  return dh_ds * ds_dp;
}

// Closed support of the kernel: [d - sigma_eff, 2 + d + sigma_eff]. The value
// is zero at the endpoints and strictly outside.
inline std::pair<double, double> support_bounds(const SpreadParams& params) {
  const double se = effective_sigma(params);
  return {params.d - se, 2.0 + params.d + se};
}

// Integer scheduling range for a layer: offsets 0..upper cover the
// nonnegative part of every neuron's kernel support.
struct Horizon {
  int upper = 0;          // inclusive
  int length = 0;         // upper + 1 buffer slots
};

inline Horizon horizon(double sigma, std::span<const double> delays) {
  DELREC_CHECK_ARG(!delays.empty(), "horizon: no delays given");
  DELREC_CHECK_ARG(sigma >= 0.0, "horizon: sigma must be nonnegative");
  double d_max = delays[0];
  for (double d : delays) d_max = std::max(d_max, d);
  const int upper =
      static_cast<int>(std::ceil(1.0 + d_max + (1.0 + sigma)));
  return Horizon{upper, upper + 1};
}

// Exponential annealing of the spread width over training.
struct SigmaSchedule {
  double sigma_init = 10.0;
  double decay = 0.95;
  int n_epochs = 0;
};

inline double sigma_at_epoch(const SigmaSchedule& schedule, int epoch) {
  DELREC_CHECK_ARG(schedule.n_epochs > 0, "sigma_at_epoch: n_epochs must be positive");
  DELREC_CHECK_ARG(schedule.sigma_init >= 0.0, "sigma_at_epoch: sigma_init < 0");
  DELREC_CHECK_ARG(schedule.decay > 0.0 && schedule.decay < 1.0,
                   "sigma_at_epoch: decay must lie in (0,1)");
  DELREC_CHECK_ARG(epoch >= 0 && epoch <= schedule.n_epochs,
                   "sigma_at_epoch: epoch out of range");
  const double exponent =
      100.0 * static_cast<double>(epoch) / static_cast<double>(schedule.n_epochs);
  return schedule.sigma_init * std::pow(schedule.decay, exponent);
}

}  // namespace delrec
