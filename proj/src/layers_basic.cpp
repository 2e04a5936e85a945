#include <cmath>

#include "delrec/layers.hpp"

namespace delrec {

namespace {

void check_sequence(const Tensor& t, std::size_t channels, const char* who) {
  DELREC_CHECK_ARG(t.rank() == 3, std::string(who) + ": expected (T,B,C) input");
  DELREC_CHECK_ARG(t.dim(2) == channels,
                   std::string(who) + ": channel count mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::string name, std::size_t in, std::size_t out, bool bias)
    : name_(std::move(name)),
      in_(in),
      out_(out),
      has_bias_(bias),
      w_(name_ + ".w", Parameter::Group::weights, Tensor(out, in)),
      b_(name_ + ".b", Parameter::Group::weights, Tensor(out)) {
  DELREC_CHECK_ARG(in > 0 && out > 0, "Linear: zero-sized layer");
}

Tensor Linear::forward(const Tensor& input, Context& ctx) {
  check_sequence(input, in_, "Linear");
  bk_ = ctx.backend;
  const std::size_t rows = input.dim(0) * input.dim(1);
  Tensor out(input.dim(0), input.dim(1), out_);
  bk_->gemm_nt(rows, out_, in_, input.data(), w_.value.data(), out.data(),
               false);
  if (has_bias_) {
    double* o = out.data();
    const double* b = b_.value.data();
    for (std::size_t r = 0; r < rows; ++r, o += out_)
      for (std::size_t c = 0; c < out_; ++c) o[c] += b[c];
  }
  if (ctx.tape) {
    cached_in_ = input;
    ctx.tape->push(name_, [this](const Tensor& g) { return backward(g); });
  }
  return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const std::size_t rows = grad_out.dim(0) * grad_out.dim(1);
  bk_->gemm_tn(out_, in_, rows, grad_out.data(), cached_in_.data(),
               w_.grad.data(), true);
  if (has_bias_) {
    const double* g = grad_out.data();
    double* gb = b_.grad.data();
    for (std::size_t r = 0; r < rows; ++r, g += out_)
      for (std::size_t c = 0; c < out_; ++c) gb[c] += g[c];
  }
  Tensor grad_in(grad_out.dim(0), grad_out.dim(1), in_);
  bk_->gemm_nn(rows, in_, out_, grad_out.data(), w_.value.data(),
               grad_in.data(), false);
  cached_in_ = Tensor();
  return grad_in;
}

void Linear::collect_params(std::vector<Parameter*>& out) {
  out.push_back(&w_);
  if (has_bias_) out.push_back(&b_);
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t channels, double momentum,
                     double eps)
    : name_(std::move(name)),
      c_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(name_ + ".bn_gamma", Parameter::Group::weights, Tensor(channels)),
      beta_(name_ + ".bn_beta", Parameter::Group::weights, Tensor(channels)),
      running_mean_(name_ + ".bn_rmean", Parameter::Group::weights,
                    Tensor(channels)),
      running_var_(name_ + ".bn_rvar", Parameter::Group::weights,
                   Tensor(channels)) {
  gamma_.value.fill(1.0);
  running_var_.value.fill(1.0);
  running_mean_.trainable = false;
  running_var_.trainable = false;
}

Tensor BatchNorm::forward(const Tensor& input, Context& ctx) {
  check_sequence(input, c_, "BatchNorm");
  const std::size_t rows = input.dim(0) * input.dim(1);
  Tensor out = input;
  trained_stats_ = ctx.training;
  inv_std_.assign(c_, 0.0);

  if (ctx.training) {
    std::vector<double> mean(c_, 0.0), var(c_, 0.0);
    const double* x = input.data();
    for (std::size_t r = 0; r < rows; ++r, x += c_)
      for (std::size_t c = 0; c < c_; ++c) mean[c] += x[c];
    for (std::size_t c = 0; c < c_; ++c) mean[c] /= static_cast<double>(rows);
    x = input.data();
    for (std::size_t r = 0; r < rows; ++r, x += c_)
      for (std::size_t c = 0; c < c_; ++c) {
        const double dx = x[c] - mean[c];
        var[c] += dx * dx;
      }
    for (std::size_t c = 0; c < c_; ++c) var[c] /= static_cast<double>(rows);

    xhat_ = Tensor(input.dim(0), input.dim(1), c_);
    double* xh = xhat_.data();
    double* o = out.data();
    x = input.data();
    for (std::size_t c = 0; c < c_; ++c)
      inv_std_[c] = 1.0 / std::sqrt(var[c] + eps_);
    for (std::size_t r = 0; r < rows; ++r, x += c_, xh += c_, o += c_)
      for (std::size_t c = 0; c < c_; ++c) {
        xh[c] = (x[c] - mean[c]) * inv_std_[c];
        o[c] = gamma_.value(c) * xh[c] + beta_.value(c);
      }
    const double unbias =
        rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1)
                 : 1.0;
    for (std::size_t c = 0; c < c_; ++c) {
      running_mean_.value(c) =
          (1.0 - momentum_) * running_mean_.value(c) + momentum_ * mean[c];
      running_var_.value(c) = (1.0 - momentum_) * running_var_.value(c) +
                              momentum_ * var[c] * unbias;
    }
  } else {
    for (std::size_t c = 0; c < c_; ++c)
      inv_std_[c] = 1.0 / std::sqrt(running_var_.value(c) + eps_);
    if (ctx.tape) xhat_ = Tensor(input.dim(0), input.dim(1), c_);
    double* o = out.data();
    const double* x = input.data();
    double* xh = ctx.tape ? xhat_.data() : nullptr;
    for (std::size_t r = 0; r < rows; ++r, x += c_, o += c_) {
      for (std::size_t c = 0; c < c_; ++c) {
        const double norm = (x[c] - running_mean_.value(c)) * inv_std_[c];
        if (xh) xh[c] = norm;
        o[c] = gamma_.value(c) * norm + beta_.value(c);
      }
      if (xh) xh += c_;
    }
  }

  if (ctx.tape)
    ctx.tape->push(name_, [this](const Tensor& g) { return backward(g); });
  return out;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  const std::size_t rows = grad_out.dim(0) * grad_out.dim(1);
  Tensor grad_in = zeros_like(grad_out);

  if (!trained_stats_) {
    // Running-stat normalization: no batch-statistic coupling across rows.
    const double* g = grad_out.data();
    const double* xh = xhat_.data();
    double* gi = grad_in.data();
    for (std::size_t r = 0; r < rows; ++r, g += c_, xh += c_, gi += c_)
      for (std::size_t c = 0; c < c_; ++c) {
        gi[c] = g[c] * gamma_.value(c) * inv_std_[c];
        gamma_.grad(c) += g[c] * xh[c];
        beta_.grad(c) += g[c];
      }
    xhat_ = Tensor();
    return grad_in;
  }

  std::vector<double> sum_g(c_, 0.0), sum_gx(c_, 0.0);
  const double* g = grad_out.data();
  const double* xh = xhat_.data();
  for (std::size_t r = 0; r < rows; ++r, g += c_, xh += c_)
    for (std::size_t c = 0; c < c_; ++c) {
      sum_g[c] += g[c];
      sum_gx[c] += g[c] * xh[c];
    }
  for (std::size_t c = 0; c < c_; ++c) {
    gamma_.grad(c) += sum_gx[c];
    beta_.grad(c) += sum_g[c];
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  g = grad_out.data();
  xh = xhat_.data();
  double* gi = grad_in.data();
  for (std::size_t r = 0; r < rows; ++r, g += c_, xh += c_, gi += c_)
    for (std::size_t c = 0; c < c_; ++c)
      gi[c] = gamma_.value(c) * inv_std_[c] *
              (g[c] - inv_rows * sum_g[c] - xh[c] * inv_rows * sum_gx[c]);
  xhat_ = Tensor();
  return grad_in;
}

void BatchNorm::collect_params(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(std::string name, double rate)
    : name_(std::move(name)), rate_(rate) {
  DELREC_CHECK_ARG(rate >= 0.0 && rate < 1.0, "Dropout: rate must be in [0,1)");
}

Tensor Dropout::forward(const Tensor& input, Context& ctx) {
  if (!ctx.training || rate_ == 0.0) {
    if (ctx.tape) ctx.tape->push(name_, [](const Tensor& g) { return g; });
    return input;
  }
  DELREC_CHECK(ctx.rng != nullptr, "Dropout: training forward needs an rng");
  const double keep_scale = 1.0 / (1.0 - rate_);
  mask_ = zeros_like(input);
  Tensor out = input;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double m = ctx.rng->bernoulli(rate_) ? 0.0 : keep_scale;
    mask_(i) = m;
    out(i) = input(i) * m;
  }
  if (ctx.tape)
    ctx.tape->push(name_, [this](const Tensor& g) {
      Tensor gi = g;
      for (std::size_t i = 0; i < gi.size(); ++i) gi(i) *= mask_(i);
      return gi;
    });
  return out;
}

// ---------------------------------------------------------------------------
// ReadoutLif

ReadoutLif::ReadoutLif(std::string name, std::size_t n, double tau_mem,
                       bool train_tau)
    : name_(std::move(name)),
      n_(n),
      tau_(name_ + ".tau", Parameter::Group::weights, Tensor(1)) {
  DELREC_CHECK_ARG(tau_mem > 1.0, "ReadoutLif: tau_mem must be > 1");
  tau_.value(0) = tau_mem;
  tau_.trainable = train_tau;
}

Tensor ReadoutLif::forward(const Tensor& input, Context& ctx) {
  check_sequence(input, n_, "ReadoutLif");
  const std::size_t t_steps = input.dim(0);
  const std::size_t bn = input.dim(1) * n_;
  const double tau = tau_.value(0);
  const double leak = 1.0 - 1.0 / tau;
  const double gain = 1.0 / tau;

  v_ = zeros_like(input);
  std::vector<double> v_prev(bn, 0.0);
  for (std::size_t t = 0; t < t_steps; ++t) {
    ctx.backend->lif_charge(bn, leak, gain, v_prev.data(), input.row(t),
                            v_.row(t));
    std::copy(v_.row(t), v_.row(t) + bn, v_prev.begin());
  }
  if (ctx.tape)
    ctx.tape->push(name_, [this](const Tensor& g) { return backward(g); });
  return v_;
}

Tensor ReadoutLif::backward(const Tensor& grad_out) {
  const std::size_t t_steps = grad_out.dim(0);
  const std::size_t bn = grad_out.dim(1) * grad_out.dim(2);
  const double tau = tau_.value(0);
  const double leak = 1.0 - 1.0 / tau;
  const double gain = 1.0 / tau;

  Tensor grad_in = zeros_like(grad_out);
  std::vector<double> gv(bn, 0.0);
  double gtau = 0.0;
  for (std::size_t t = t_steps; t-- > 0;) {
    const double* g = grad_out.row(t);
    double* gi = grad_in.row(t);
    const double* v_t = v_.row(t);
    const double* v_p = t > 0 ? v_.row(t - 1) : nullptr;
    for (std::size_t e = 0; e < bn; ++e) {
      const double gtot = g[e] + leak * gv[e];
      gi[e] = gain * gtot;
      if (tau_.trainable) {
        const double vp = v_p ? v_p[e] : 0.0;
        const double cur = (v_t[e] - leak * vp) / gain;
        gtau += gtot * (vp - cur) / (tau * tau);
      }
      gv[e] = gtot;
    }
  }
  if (tau_.trainable) tau_.grad(0) += gtau;
  return grad_in;
}

void ReadoutLif::collect_params(std::vector<Parameter*>& out) {
  out.push_back(&tau_);
}

}  // namespace delrec
