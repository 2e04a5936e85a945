#include <cmath>

#include "delrec/layers.hpp"

namespace delrec {

// Reference forward with a full (T, B, N) scheduling matrix, written as
// plain nested loops. Deliberately shares nothing with the buffered path
// except the kernel formula and the layer's parameters: scheduling targets
// absolute times, there is no pointer arithmetic and no wraparound, so any
// circular-buffer defect shows up as a mismatch.
DenseOracleOut dense_oracle_forward(const SpikingLayer& layer,
                                    const Tensor& drive, double sigma) {
  DELREC_CHECK(layer.recurrent(), "dense_oracle_forward: layer not recurrent");
  DELREC_CHECK_ARG(drive.rank() == 3 && drive.dim(2) == layer.size(),
                   "dense_oracle_forward: expected (T,B,N) drive");

  const std::size_t t_steps = drive.dim(0);
  const std::size_t batch = drive.dim(1);
  const std::size_t n = layer.size();
  const NeuronConfig& cfg = layer.neuron_config();
  const double tau_mem = layer.tau_mem();
  const double leak = 1.0 - 1.0 / tau_mem;
  const double gain = 1.0 / tau_mem;
  const double eff_sigma = layer.resolved_sigma(sigma);
  const Horizon hz = layer.current_horizon(sigma);
  const bool axonal = layer.granularity() == DelayGranularity::axonal;
  const Tensor& w = layer.w_rec().value;
  const Tensor& d = layer.delays().value;
  const Parameter* p = layer.p();

  auto kernel_at = [&](std::size_t i, std::size_t j, int tau) {
    SpreadParams params;
    params.sigma = eff_sigma;
    if (axonal) {
      params.d = d(j);
      if (p) {
        params.has_p = true;
        params.p = p->value(j);
      }
    } else {
      params.d = d(i, j);
    }
    return spread_value(tau, params);
  };

  DenseOracleOut out;
  out.spikes = Tensor(t_steps, batch, n);
  out.x_rec = Tensor(t_steps, batch, n);
  Tensor v(batch, n);

  for (std::size_t t = 0; t < t_steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < n; ++i) {
        const double current = drive(t, b, i) + out.x_rec(t, b, i);
        const double h = leak * v(b, i) + gain * current;
        const double s = heaviside(h - cfg.v_threshold);
        out.spikes(t, b, i) = s;
        v(b, i) = cfg.reset == ResetKind::hard
                      ? h * (1.0 - s) + cfg.v_reset * s
                      : h - cfg.v_threshold * s;
      }
      // Schedule this step's spikes at absolute future times t + tau.
      // Offsets start at 1: mass at tau = 0 would land on an input already
      // consumed, matching the buffered path's drop.
      for (std::size_t j = 0; j < n; ++j) {
        const double s = out.spikes(t, b, j);
        if (s == 0.0) continue;
        for (int tau = 1; tau <= hz.upper; ++tau) {
          const std::size_t target = t + static_cast<std::size_t>(tau);
          if (target >= t_steps) break;
          for (std::size_t i = 0; i < n; ++i) {
            const double hv = kernel_at(i, j, tau);
            if (hv == 0.0) continue;
            out.x_rec(target, b, i) += w(i, j) * hv * s;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace delrec
