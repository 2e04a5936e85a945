#include <algorithm>
#include <cmath>
#include <vector>

#include "delrec/layers.hpp"

namespace delrec {

FeedforwardDelayLayer::FeedforwardDelayLayer(std::string name, std::size_t in,
                                             std::size_t out)
    : name_(std::move(name)),
      in_(in),
      out_(out),
      w_(name_ + ".w", Parameter::Group::weights, Tensor(out, in)),
      d_(name_ + ".d_ff", Parameter::Group::positions, Tensor(out, in)) {
  DELREC_CHECK_ARG(in > 0 && out > 0, "FeedforwardDelayLayer: zero-sized");
}

// X_i[t] = sum_j w_ij ((1-f) S_j[t-k] + f S_j[t-k-1]),  k = floor(d), f = d-k.
// Out-of-range past indices contribute zero.
Tensor FeedforwardDelayLayer::forward(const Tensor& input, Context& ctx) {
  DELREC_CHECK_ARG(input.rank() == 3 && input.dim(2) == in_,
                   "FeedforwardDelayLayer: expected (T,B,in)");
  const std::size_t t_steps = input.dim(0);
  const std::size_t batch = input.dim(1);

  std::vector<long> k(out_ * in_);
  std::vector<double> f(out_ * in_);
  for (std::size_t e = 0; e < out_ * in_; ++e) {
    const double dv = d_.value(e);
    DELREC_CHECK(dv >= 0.0, name_ + ": negative feedforward delay");
    k[e] = static_cast<long>(std::floor(dv));
    f[e] = dv - static_cast<double>(k[e]);
  }

  Tensor out(t_steps, batch, out_);
  for (std::size_t t = 0; t < t_steps; ++t)
    for (std::size_t b = 0; b < batch; ++b) {
      double* o = out.row(t, b);
      for (std::size_t i = 0; i < out_; ++i) {
        const double* wr = w_.value.row(i);
        const long* kr = k.data() + i * in_;
        const double* fr = f.data() + i * in_;
        double acc = 0.0;
        for (std::size_t j = 0; j < in_; ++j) {
          const long t0 = static_cast<long>(t) - kr[j];
          double v = 0.0;
          if (t0 >= 0) {
            v = (1.0 - fr[j]) * input(t0, b, j);
            if (t0 >= 1 && fr[j] != 0.0) v += fr[j] * input(t0 - 1, b, j);
          }
          acc += wr[j] * v;
        }
        o[i] = acc;
      }
    }

  if (ctx.tape) {
    cached_in_ = input;
    ctx.tape->push(name_, [this](const Tensor& g) { return backward(g); });
  }
  return out;
}

Tensor FeedforwardDelayLayer::backward(const Tensor& grad_out) {
  const std::size_t t_steps = grad_out.dim(0);
  const std::size_t batch = grad_out.dim(1);
  Tensor grad_in(t_steps, batch, in_);
  const bool want_d = d_.trainable;

  for (std::size_t t = 0; t < t_steps; ++t)
    for (std::size_t b = 0; b < batch; ++b) {
      const double* g = grad_out.row(t, b);
      for (std::size_t i = 0; i < out_; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        for (std::size_t j = 0; j < in_; ++j) {
          const double dv = d_.value(i, j);
          const long kk = static_cast<long>(std::floor(dv));
          const double ff = dv - static_cast<double>(kk);
          const long t0 = static_cast<long>(t) - kk;
          const double wij = w_.value(i, j);
          double v1 = 0.0, v2 = 0.0;
          if (t0 >= 0) {
            v1 = cached_in_(t0, b, j);
            if (t0 >= 1) v2 = cached_in_(t0 - 1, b, j);
          }
          w_.grad(i, j) += gi * ((1.0 - ff) * v1 + ff * v2);
          if (want_d) d_.grad(i, j) += gi * wij * (v2 - v1);
          if (t0 >= 0) {
            grad_in(t0, b, j) += gi * wij * (1.0 - ff);
            if (t0 >= 1) grad_in(t0 - 1, b, j) += gi * wij * ff;
          }
        }
      }
    }
  cached_in_ = Tensor();
  return grad_in;
}

void FeedforwardDelayLayer::round_delays_for_eval() {
  DELREC_CHECK(mode_ == DelayMode::train_spread,
               name_ + ": delays already rounded");
  for (std::size_t e = 0; e < d_.value.size(); ++e)
    d_.value(e) = std::floor(d_.value(e) + 0.5);
  mode_ = DelayMode::eval_rounded;
}

void FeedforwardDelayLayer::clamp_delays(double d_max) {
  for (std::size_t e = 0; e < d_.value.size(); ++e)
    d_.value(e) = std::clamp(d_.value(e), 0.0, d_max);
}

void FeedforwardDelayLayer::collect_params(std::vector<Parameter*>& out) {
  out.push_back(&w_);
  out.push_back(&d_);
}

}  // namespace delrec
