#pragma once

#include <cmath>

#include "delrec/check.hpp"

namespace delrec {

enum class ResetKind { hard, soft };
enum class SurrogateKind { triangle, arctan };

struct NeuronConfig {
  double tau_mem = 2.0;  // membrane time constant, time-steps; must be > 1
  double v_threshold = 1.0;
  ResetKind reset = ResetKind::soft;
  double v_reset = 0.0;  // hard reset target
  bool detach_reset = false;
  SurrogateKind surrogate = SurrogateKind::triangle;

  void validate() const {
    DELREC_CHECK_ARG(tau_mem > 1.0, "NeuronConfig: tau_mem must be > 1");
    DELREC_CHECK_ARG(std::isfinite(v_threshold),
                     "NeuronConfig: v_threshold must be finite");
  }
};

// Heaviside with the convention theta(0) = 1.
inline double heaviside(double x) { return x >= 0.0 ? 1.0 : 0.0; }

inline constexpr double kArctanSurrogateScale = 2.0;

// Backward-pass stand-in for the Heaviside derivative.
inline double surrogate_grad(double x, SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::triangle:
      return std::max(0.0, 1.0 - std::abs(x));
    case SurrogateKind::arctan: {
      const double a = kArctanSurrogateScale;
      const double t = (M_PI / 2.0) * a * x;
      return a / (2.0 * (1.0 + t * t));
    }
  }
  return 0.0;
}

// Smooth replacement for the Heaviside when the whole network is run in
// soft mode for finite-difference verification.
inline constexpr double kSoftFireSlope = 10.0;

inline double soft_fire(double x) {
  return 1.0 / (1.0 + std::exp(-kSoftFireSlope * x));
}

inline double soft_fire_grad(double x) {
  const double s = soft_fire(x);
  return kSoftFireSlope * s * (1.0 - s);
}

// LIF charge: H[t] = (1 - 1/tau) V[t-1] + (1/tau) I[t].
inline double charge(double v_prev, double input, double tau_mem) {
  DELREC_CHECK_ARG(std::isfinite(input), "charge: non-finite input current");
  return (1.0 - 1.0 / tau_mem) * v_prev + input / tau_mem;
}

inline double fire(double h, double v_threshold) {
  return heaviside(h - v_threshold);
}

inline double reset_potential(double h, double s, const NeuronConfig& cfg) {
  if (cfg.reset == ResetKind::hard) return h * (1.0 - s) + cfg.v_reset * s;
  return h - cfg.v_threshold * s;
}

}  // namespace delrec
