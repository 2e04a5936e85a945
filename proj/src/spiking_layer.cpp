#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "delrec/layers.hpp"

namespace delrec {

// Per-forward spread kernel tables. Row r holds h(tau) for tau = 0..L-1 for
// one presynaptic neuron (axonal) or one synapse i*N+j (synaptic), together
// with the analytic derivatives w.r.t. d and p. lo/hi bound the nonzero taus,
// clamped to the causal window [1, L-1]; mass at tau = 0 is dropped (the
// current slot was already read).
struct SpikingLayer::SpreadTables {
  double sigma = -1.0;
  int length = 0;
  Tensor h, dh, dp;
  std::vector<int> lo, hi;
};

SpikingLayer::~SpikingLayer() = default;

SpikingLayer::SpikingLayer(const SpikingLayerOptions& opt)
    : name_(opt.name),
      n_(opt.n),
      cfg_(opt.neuron),
      recurrent_(opt.recurrent),
      granularity_(opt.granularity),
      learn_delays_(opt.learn_delays),
      has_p_(opt.per_neuron_p),
      dropout_rec_(opt.dropout_rec) {
  DELREC_CHECK_ARG(n_ > 0, "SpikingLayer: zero neurons");
  cfg_.validate();
  DELREC_CHECK_ARG(dropout_rec_ >= 0.0 && dropout_rec_ < 1.0,
                   "SpikingLayer: recurrent dropout rate must be in [0,1)");
  DELREC_CHECK_ARG(!has_p_ || granularity_ == DelayGranularity::axonal,
                   "SpikingLayer: per-neuron p requires axonal delays");

  tau_ = Parameter(name_ + ".tau", Parameter::Group::weights, Tensor(1));
  tau_.value(0) = cfg_.tau_mem;
  tau_.trainable = opt.train_tau;

  if (recurrent_) {
    w_rec_ = Parameter(name_ + ".w_rec", Parameter::Group::weights,
                       Tensor(n_, n_));
    d_ = Parameter(name_ + ".d", Parameter::Group::positions,
                   granularity_ == DelayGranularity::axonal ? Tensor(n_)
                                                            : Tensor(n_, n_));
    d_.trainable = learn_delays_;
    if (has_p_) {
      p_ = Parameter(name_ + ".p", Parameter::Group::positions, Tensor(n_));
      p_.trainable = learn_delays_;
    }
  }
}

double SpikingLayer::resolved_sigma(double ctx_sigma) const {
  if (!recurrent_ || mode_ == DelayMode::eval_rounded || !learn_delays_)
    return 0.0;
  return ctx_sigma;
}

Horizon SpikingLayer::current_horizon(double sigma) const {
  DELREC_CHECK(recurrent_, "current_horizon: layer has no recurrence");
  return horizon(resolved_sigma(sigma),
                 std::span<const double>(d_.value.data(), d_.value.size()));
}

void SpikingLayer::build_tables(double sigma, SpreadTables& tabs) const {
  const Horizon hz = horizon(
      sigma, std::span<const double>(d_.value.data(), d_.value.size()));
  const int length = hz.length;
  const std::size_t rows =
      granularity_ == DelayGranularity::axonal ? n_ : n_ * n_;

  tabs.sigma = sigma;
  tabs.length = length;
  tabs.h = Tensor(rows, static_cast<std::size_t>(length));
  tabs.dh = Tensor(rows, static_cast<std::size_t>(length));
  tabs.dp = has_p_ ? Tensor(rows, static_cast<std::size_t>(length)) : Tensor();
  tabs.lo.assign(rows, 1);
  tabs.hi.assign(rows, 0);

  for (std::size_t r = 0; r < rows; ++r) {
    SpreadParams params;
    params.sigma = sigma;
    if (granularity_ == DelayGranularity::axonal) {
      params.d = d_.value(r);
      if (has_p_) {
        params.has_p = true;
        params.p = p_.value(r);
      }
    } else {
      params.d = d_.value(r);  // flat (i*N + j)
    }
    int lo = -1, hi = -1;
    for (int tau = 0; tau < length; ++tau) {
      const double v = spread_value(tau, params);
      tabs.h(r, tau) = v;
      tabs.dh(r, tau) = spread_grad_d(tau, params);
      if (has_p_) tabs.dp(r, tau) = spread_grad_p(tau, params);
      if (v != 0.0 && tau >= 1) {
        if (lo < 0) lo = tau;
        hi = tau;
      }
    }
    tabs.lo[r] = lo < 0 ? 1 : lo;
    tabs.hi[r] = lo < 0 ? 0 : hi;
  }
}

Tensor SpikingLayer::transposed_w_rec() const {
  Tensor wt(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) wt(j, i) = w_rec_.value(i, j);
  return wt;
}

void SpikingLayer::schedule_step(const SpreadTables& tabs,
                                 const Tensor& w_rec_t, ScheduleBuffer& buffer,
                                 const double* spikes_row,
                                 std::size_t batch_index,
                                 const kernels::Backend& bk) const {
  const int length = buffer.length();
  const int ptr = buffer.pointer;
  if (granularity_ == DelayGranularity::axonal) {
    for (std::size_t j = 0; j < n_; ++j) {
      const double s = spikes_row[j];
      if (s == 0.0) continue;
      for (int tau = tabs.lo[j]; tau <= tabs.hi[j]; ++tau) {
        const double coef = tabs.h(j, tau) * s;
        if (coef == 0.0) continue;
        const int slot = (ptr + tau) % length;
        bk.axpy(n_, coef, w_rec_t.row(j), buffer.slots.row(slot, batch_index));
      }
    }
  } else {
    for (std::size_t j = 0; j < n_; ++j) {
      const double s = spikes_row[j];
      if (s == 0.0) continue;
      for (std::size_t i = 0; i < n_; ++i) {
        const double w = w_rec_.value(i, j);
        if (w == 0.0) continue;
        const std::size_t r = i * n_ + j;
        for (int tau = tabs.lo[r]; tau <= tabs.hi[r]; ++tau) {
          const int slot = (ptr + tau) % length;
          buffer.slots(slot, batch_index, i) += w * tabs.h(r, tau) * s;
        }
      }
    }
  }
}

Tensor SpikingLayer::step(ScheduleBuffer& buffer, const Tensor& x_ff,
                          Tensor& v, double sigma, bool soft) const {
  DELREC_CHECK(recurrent_, "step: layer has no recurrent buffer");
  DELREC_CHECK_ARG(x_ff.rank() == 2 && x_ff.dim(1) == n_,
                   "step: x_ff must be (B, N)");
  const Horizon hz = current_horizon(sigma);
  DELREC_CHECK(buffer.length() == hz.length,
               "step: buffer length does not match the current horizon");
  DELREC_CHECK(buffer.neurons() == n_ && buffer.batch() == x_ff.dim(0),
               "step: buffer shape mismatch");

  SpreadTables tabs;
  build_tables(resolved_sigma(sigma), tabs);
  const Tensor wt = transposed_w_rec();

  const std::size_t batch = x_ff.dim(0);
  const double tau_mem = tau_.value(0);
  const double leak = 1.0 - 1.0 / tau_mem;
  const double gain = 1.0 / tau_mem;
  const kernels::Backend& bk = kernels::active_backend();

  Tensor spikes(batch, n_);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < n_; ++j) {
      const double current = x_ff(b, j) + buffer.slots(buffer.pointer, b, j);
      DELREC_CHECK(std::isfinite(current), "step: non-finite input current");
      const double h = leak * v(b, j) + gain * current;
      const double x = h - cfg_.v_threshold;
      const double s = soft ? soft_fire(x) : heaviside(x);
      spikes(b, j) = s;
      v(b, j) = reset_potential(h, s, cfg_);
    }
  }
  std::memset(buffer.slots.row(buffer.pointer), 0,
              sizeof(double) * batch * n_);
  for (std::size_t b = 0; b < batch; ++b)
    schedule_step(tabs, wt, buffer, spikes.row(b), b, bk);
  buffer.pointer = (buffer.pointer + 1) % buffer.length();
  return spikes;
}

Tensor SpikingLayer::forward(const Tensor& drive, Context& ctx) {
  DELREC_CHECK_ARG(drive.rank() == 3 && drive.dim(2) == n_,
                   "SpikingLayer: expected (T,B,N) drive");
  for (std::size_t i = 0; i < drive.size(); ++i)
    DELREC_CHECK(std::isfinite(drive(i)),
                 name_ + ": non-finite input current");

  const std::size_t t_steps = drive.dim(0);
  const std::size_t batch = drive.dim(1);
  const std::size_t bn = batch * n_;
  const double tau_mem = tau_.value(0);
  DELREC_CHECK(tau_mem > 1.0, name_ + ": tau_mem must stay > 1");
  const double leak = 1.0 - 1.0 / tau_mem;
  const double gain = 1.0 / tau_mem;
  const kernels::Backend& bk = *ctx.backend;

  soft_forward_ = ctx.soft;
  sigma_forward_ = resolved_sigma(ctx.sigma);

  spikes_ = Tensor(t_steps, batch, n_);
  h_ = Tensor(t_steps, batch, n_);
  input_current_ = Tensor(t_steps, batch, n_);

  ScheduleBuffer buffer;
  const bool use_rec_dropout =
      recurrent_ && ctx.training && dropout_rec_ > 0.0;
  if (recurrent_) {
    if (mode_ == DelayMode::eval_rounded)
      for (std::size_t i = 0; i < d_.value.size(); ++i)
        DELREC_CHECK(d_.value(i) == std::floor(d_.value(i)),
                     name_ + ": eval_rounded requires integer delays");
    tabs_ = std::make_unique<SpreadTables>();
    build_tables(sigma_forward_, *tabs_);
    buffer = ScheduleBuffer(tabs_->length, batch, n_);
    x_rec_raw_ = Tensor(t_steps, batch, n_);
    w_rec_t_ = transposed_w_rec();
    if (use_rec_dropout) {
      DELREC_CHECK(ctx.rng != nullptr,
                   name_ + ": recurrent dropout needs an rng");
      rec_mask_ = Tensor(t_steps, batch, n_);
    } else {
      rec_mask_ = Tensor();
    }
  } else {
    x_rec_raw_ = Tensor();
  }

  std::vector<double> v(bn, 0.0);
  const double keep_scale = 1.0 / (1.0 - dropout_rec_);

  for (std::size_t t = 0; t < t_steps; ++t) {
    double* cur = input_current_.row(t);
    if (recurrent_) {
      const double* slot = buffer.slots.row(buffer.pointer);
      double* raw = x_rec_raw_.row(t);
      std::memcpy(raw, slot, sizeof(double) * bn);
      const double* ff = drive.row(t);
      if (use_rec_dropout) {
        double* mask = rec_mask_.row(t);
        for (std::size_t e = 0; e < bn; ++e) {
          mask[e] = ctx.rng->bernoulli(dropout_rec_) ? 0.0 : keep_scale;
          cur[e] = ff[e] + raw[e] * mask[e];
        }
      } else {
        for (std::size_t e = 0; e < bn; ++e) cur[e] = ff[e] + raw[e];
      }
    } else {
      std::memcpy(cur, drive.row(t), sizeof(double) * bn);
    }

    double* h_row = h_.row(t);
    bk.lif_charge(bn, leak, gain, v.data(), cur, h_row);

    double* s_row = spikes_.row(t);
    if (soft_forward_) {
      for (std::size_t e = 0; e < bn; ++e)
        s_row[e] = soft_fire(h_row[e] - cfg_.v_threshold);
    } else {
      for (std::size_t e = 0; e < bn; ++e)
        s_row[e] = heaviside(h_row[e] - cfg_.v_threshold);
    }
    if (cfg_.reset == ResetKind::hard) {
      for (std::size_t e = 0; e < bn; ++e)
        v[e] = h_row[e] * (1.0 - s_row[e]) + cfg_.v_reset * s_row[e];
    } else {
      for (std::size_t e = 0; e < bn; ++e)
        v[e] = h_row[e] - cfg_.v_threshold * s_row[e];
    }

    if (recurrent_) {
      std::memset(buffer.slots.row(buffer.pointer), 0, sizeof(double) * bn);
      for (std::size_t b = 0; b < batch; ++b)
        schedule_step(*tabs_, w_rec_t_, buffer, spikes_.row(t, b), b, bk);
      buffer.pointer = (buffer.pointer + 1) % buffer.length();
    }
  }

  if (ctx.tape) {
    ctx.tape->push(name_, [this](const Tensor& g) { return backward(g); });
  } else {
    h_ = Tensor();
    input_current_ = Tensor();
    rec_mask_ = Tensor();
  }
  return spikes_;
}

void SpikingLayer::add_output_grad(const Tensor& g) {
  if (pending_output_grad_.empty()) {
    pending_output_grad_ = g;
  } else {
    DELREC_CHECK(pending_output_grad_.same_shape(g),
                 name_ + ": extra output grad shape mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) pending_output_grad_(i) += g(i);
  }
}

Tensor SpikingLayer::backward(const Tensor& grad_out) {
  DELREC_CHECK(grad_out.same_shape(spikes_),
               name_ + ": backward grad shape mismatch");
  const std::size_t t_steps = grad_out.dim(0);
  const std::size_t batch = grad_out.dim(1);
  const std::size_t bn = batch * n_;
  const double tau_mem = tau_.value(0);
  const double leak = 1.0 - 1.0 / tau_mem;
  const double gain = 1.0 / tau_mem;
  const double vth = cfg_.v_threshold;
  const bool hard = cfg_.reset == ResetKind::hard;
  const kernels::Backend& bk = kernels::active_backend();
  const bool want_d = recurrent_ && d_.trainable;
  const bool want_p = recurrent_ && has_p_ && p_.trainable;
  const bool synaptic =
      recurrent_ && granularity_ == DelayGranularity::synaptic;

  Tensor g_total = grad_out;
  if (!pending_output_grad_.empty()) {
    for (std::size_t i = 0; i < g_total.size(); ++i)
      g_total(i) += pending_output_grad_(i);
    pending_output_grad_ = Tensor();
  }

  Tensor grad_in(t_steps, batch, n_);
  // Axonal mode backpropagates scheduling through m = W_rec^T gXrec;
  // synaptic mode needs the raw gXrec stream since each synapse has its own
  // kernel.
  Tensor m_stream, gxrec_stream;
  if (recurrent_) {
    if (synaptic)
      gxrec_stream = Tensor(t_steps, batch, n_);
    else
      m_stream = Tensor(t_steps, batch, n_);
  }

  std::vector<double> gv(bn, 0.0);
  std::vector<double> gs(bn, 0.0);
  std::vector<double> gh(bn, 0.0);
  Tensor gxrec_t(batch, n_);
  Tensor q_t(batch, n_);
  double gtau = 0.0;
  const bool has_mask = !rec_mask_.empty();

  for (std::size_t t = t_steps; t-- > 0;) {
    std::memcpy(gs.data(), g_total.row(t), sizeof(double) * bn);

    // Scheduling backward: contributions of S[t] to future recurrent input.
    if (recurrent_ && !synaptic) {
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < n_; ++j) {
          const int hi = std::min<int>(tabs_->hi[j],
                                       static_cast<int>(t_steps - 1 - t));
          double acc_s = 0.0, acc_d = 0.0, acc_p = 0.0;
          for (int tau = tabs_->lo[j]; tau <= hi; ++tau) {
            const double mv = m_stream(t + tau, b, j);
            acc_s += tabs_->h(j, tau) * mv;
            acc_d += tabs_->dh(j, tau) * mv;
            if (want_p) acc_p += tabs_->dp(j, tau) * mv;
          }
          gs[b * n_ + j] += acc_s;
          const double s = spikes_(t, b, j);
          if (s != 0.0) {
            if (want_d) d_.grad(j) += s * acc_d;
            if (want_p) p_.grad(j) += s * acc_p;
          }
        }
      }
    } else if (synaptic) {
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < n_; ++j) {
          const double s = spikes_(t, b, j);
          double acc_s = 0.0;
          for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t r = i * n_ + j;
            const int hi = std::min<int>(tabs_->hi[r],
                                         static_cast<int>(t_steps - 1 - t));
            double acc_h = 0.0, acc_dh = 0.0;
            for (int tau = tabs_->lo[r]; tau <= hi; ++tau) {
              const double gx = gxrec_stream(t + tau, b, i);
              acc_h += tabs_->h(r, tau) * gx;
              acc_dh += tabs_->dh(r, tau) * gx;
            }
            acc_s += w_rec_.value(i, j) * acc_h;
            if (s != 0.0) {
              w_rec_.grad(i, j) += s * acc_h;
              if (want_d) d_.grad(i, j) += s * w_rec_.value(i, j) * acc_dh;
            }
          }
          gs[b * n_ + j] += acc_s;
        }
      }
    }

    const double* h_row = h_.row(t);
    const double* s_row = spikes_.row(t);

    if (!cfg_.detach_reset) {
      if (hard) {
        for (std::size_t e = 0; e < bn; ++e)
          gs[e] += gv[e] * (cfg_.v_reset - h_row[e]);
      } else {
        for (std::size_t e = 0; e < bn; ++e) gs[e] += -vth * gv[e];
      }
    }

    if (soft_forward_) {
      for (std::size_t e = 0; e < bn; ++e) {
        const double base = hard ? gv[e] * (1.0 - s_row[e]) : gv[e];
        gh[e] = base + gs[e] * soft_fire_grad(h_row[e] - vth);
      }
    } else {
      for (std::size_t e = 0; e < bn; ++e) {
        const double base = hard ? gv[e] * (1.0 - s_row[e]) : gv[e];
        gh[e] = base + gs[e] * surrogate_grad(h_row[e] - vth, cfg_.surrogate);
      }
    }

    if (tau_.trainable) {
      const double* h_prev = t > 0 ? h_.row(t - 1) : nullptr;
      const double* s_prev = t > 0 ? spikes_.row(t - 1) : nullptr;
      const double* cur = input_current_.row(t);
      for (std::size_t e = 0; e < bn; ++e) {
        double v_prev = 0.0;
        if (h_prev)
          v_prev = hard ? h_prev[e] * (1.0 - s_prev[e]) +
                              cfg_.v_reset * s_prev[e]
                        : h_prev[e] - vth * s_prev[e];
        gtau += gh[e] * (v_prev - cur[e]) / (tau_mem * tau_mem);
      }
    }

    double* gi_row = grad_in.row(t);
    for (std::size_t e = 0; e < bn; ++e) gi_row[e] = gain * gh[e];

    if (recurrent_) {
      double* gx = synaptic ? gxrec_stream.row(t) : gxrec_t.data();
      if (has_mask) {
        const double* mask = rec_mask_.row(t);
        for (std::size_t e = 0; e < bn; ++e) gx[e] = gi_row[e] * mask[e];
      } else {
        std::memcpy(gx, gi_row, sizeof(double) * bn);
      }
      if (!synaptic) {
        bk.gemm_nn(batch, n_, n_, gx, w_rec_.value.data(), m_stream.row(t),
                   false);
        // q_t: spike mass scheduled to arrive at t, per presynaptic neuron.
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t j = 0; j < n_; ++j) {
            const int hi = std::min<int>(tabs_->hi[j], static_cast<int>(t));
            double acc = 0.0;
            for (int tau = tabs_->lo[j]; tau <= hi; ++tau)
              acc += tabs_->h(j, tau) * spikes_(t - tau, b, j);
            q_t(b, j) = acc;
          }
        bk.gemm_tn(n_, n_, batch, gx, q_t.data(), w_rec_.grad.data(), true);
      }
    }

    for (std::size_t e = 0; e < bn; ++e) gv[e] = leak * gh[e];
  }

  if (tau_.trainable) tau_.grad(0) += gtau;

  h_ = Tensor();
  input_current_ = Tensor();
  rec_mask_ = Tensor();
  return grad_in;
}

void SpikingLayer::round_delays_for_eval() {
  DELREC_CHECK(mode_ == DelayMode::train_spread,
               name_ + ": delays already rounded");
  if (recurrent_)
    for (std::size_t i = 0; i < d_.value.size(); ++i)
      d_.value(i) = std::floor(d_.value(i) + 0.5);  // ties round half up
  mode_ = DelayMode::eval_rounded;
}

void SpikingLayer::clamp_delays(double d_max) {
  if (!recurrent_) return;
  for (std::size_t i = 0; i < d_.value.size(); ++i)
    d_.value(i) = std::clamp(d_.value(i), 0.0, d_max);
}

void SpikingLayer::collect_params(std::vector<Parameter*>& out) {
  if (recurrent_) {
    out.push_back(&w_rec_);
    out.push_back(&d_);
    if (has_p_) out.push_back(&p_);
  }
  out.push_back(&tau_);
}

}  // namespace delrec
