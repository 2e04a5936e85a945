#include <algorithm>
#include <cmath>

#include "delrec/check.hpp"
#include "delrec/loss.hpp"

namespace delrec {

Tensor softmax_over_time(const Tensor& v) {
  DELREC_CHECK_ARG(v.rank() == 3, "softmax_over_time: expected (T,B,C)");
  const std::size_t t_steps = v.dim(0), batch = v.dim(1), c = v.dim(2);
  Tensor scores(batch, c);
  std::vector<double> p(c);
  for (std::size_t t = 0; t < t_steps; ++t)
    for (std::size_t b = 0; b < batch; ++b) {
      const double* row = v.row(t, b);
      double mx = row[0];
      for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, row[i]);
      double z = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        p[i] = std::exp(row[i] - mx);
        z += p[i];
      }
      for (std::size_t i = 0; i < c; ++i) scores(b, i) += p[i] / z;
    }
  return scores;
}

Tensor softmax_over_time_backward(const Tensor& v, const Tensor& grad_scores) {
  const std::size_t t_steps = v.dim(0), batch = v.dim(1), c = v.dim(2);
  Tensor grad_v(t_steps, batch, c);
  std::vector<double> p(c);
  for (std::size_t t = 0; t < t_steps; ++t)
    for (std::size_t b = 0; b < batch; ++b) {
      const double* row = v.row(t, b);
      double mx = row[0];
      for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, row[i]);
      double z = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        p[i] = std::exp(row[i] - mx);
        z += p[i];
      }
      double dot = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        p[i] /= z;
        dot += grad_scores(b, i) * p[i];
      }
      double* g = grad_v.row(t, b);
      for (std::size_t i = 0; i < c; ++i)
        g[i] = p[i] * (grad_scores(b, i) - dot);
    }
  return grad_v;
}

double cross_entropy_scores(const Tensor& scores,
                            const std::vector<int>& labels) {
  DELREC_CHECK_ARG(scores.rank() == 2 && scores.dim(0) == labels.size(),
                   "cross_entropy: batch size mismatch");
  double loss = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double y = scores(b, static_cast<std::size_t>(labels[b]));
    DELREC_CHECK(std::isfinite(y) && y > 0.0,
                 "cross_entropy: non-finite or non-positive class score");
    loss -= std::log(y);
  }
  loss /= static_cast<double>(labels.size());
  DELREC_CHECK(std::isfinite(loss), "cross_entropy: non-finite loss");
  return loss;
}

Tensor cross_entropy_scores_grad(const Tensor& scores,
                                 const std::vector<int>& labels) {
  Tensor g(scores.dim(0), scores.dim(1));
  const double inv_b = 1.0 / static_cast<double>(labels.size());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const std::size_t y = static_cast<std::size_t>(labels[b]);
    g(b, y) = -inv_b / scores(b, y);
  }
  return g;
}

double cross_entropy_logits(const Tensor& logits,
                            const std::vector<int>& labels, Tensor* grad,
                            Tensor* probs) {
  DELREC_CHECK_ARG(logits.rank() == 2 && logits.dim(0) == labels.size(),
                   "cross_entropy_logits: batch size mismatch");
  const std::size_t batch = logits.dim(0), c = logits.dim(1);
  const double inv_b = 1.0 / static_cast<double>(batch);
  Tensor p(batch, c);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = logits.row(b);
    double mx = row[0];
    for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, row[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      p(b, i) = std::exp(row[i] - mx);
      z += p(b, i);
    }
    for (std::size_t i = 0; i < c; ++i) p(b, i) /= z;
    const double py = p(b, static_cast<std::size_t>(labels[b]));
    DELREC_CHECK(std::isfinite(py) && py > 0.0,
                 "cross_entropy_logits: degenerate softmax");
    loss -= std::log(py) * inv_b;
  }
  if (grad) {
    *grad = p;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < c; ++i) (*grad)(b, i) *= inv_b;
      (*grad)(b, static_cast<std::size_t>(labels[b])) -= inv_b;
    }
  }
  if (probs) *probs = p;
  DELREC_CHECK(std::isfinite(loss), "cross_entropy_logits: non-finite loss");
  return loss;
}

Tensor pool_over_time(const Tensor& z, PoolKind kind) {
  DELREC_CHECK_ARG(z.rank() == 3, "pool_over_time: expected (T,B,C)");
  const std::size_t t_steps = z.dim(0), batch = z.dim(1), c = z.dim(2);
  Tensor out(batch, c);
  if (kind == PoolKind::last) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < c; ++i) out(b, i) = z(t_steps - 1, b, i);
    return out;
  }
  for (std::size_t t = 0; t < t_steps; ++t)
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < c; ++i) out(b, i) += z(t, b, i);
  if (kind == PoolKind::mean)
    for (std::size_t e = 0; e < out.size(); ++e)
      out(e) /= static_cast<double>(t_steps);
  return out;
}

Tensor pool_over_time_backward(std::size_t t_steps, const Tensor& grad_pooled,
                               PoolKind kind) {
  const std::size_t batch = grad_pooled.dim(0), c = grad_pooled.dim(1);
  Tensor g(t_steps, batch, c);
  if (kind == PoolKind::last) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < c; ++i)
        g(t_steps - 1, b, i) = grad_pooled(b, i);
    return g;
  }
  const double scale =
      kind == PoolKind::mean ? 1.0 / static_cast<double>(t_steps) : 1.0;
  for (std::size_t t = 0; t < t_steps; ++t)
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < c; ++i) g(t, b, i) = grad_pooled(b, i) * scale;
  return g;
}

SpikeStats spike_stats(const std::vector<const Tensor*>& spikes) {
  SpikeStats out;
  if (spikes.empty()) return out;
  std::size_t n_total = 0;
  for (const Tensor* s : spikes) n_total += s->dim(2);
  const std::size_t t_steps = spikes.front()->dim(0);
  const std::size_t batch = spikes.front()->dim(1);
  double sum_sq = 0.0, sum = 0.0;
  for (const Tensor* s : spikes)
    for (std::size_t e = 0; e < s->size(); ++e) {
      sum_sq += (*s)(e) * (*s)(e);
      sum += (*s)(e);
    }
  const double denom =
      static_cast<double>(t_steps) * static_cast<double>(batch) *
      static_cast<double>(n_total);
  out.penalty = sum_sq / (2.0 * denom);
  out.mean_rate = sum / denom;
  return out;
}

Tensor spike_penalty_grad(const Tensor& spikes, std::size_t n_total,
                          double lambda) {
  const double denom = static_cast<double>(spikes.dim(0)) *
                       static_cast<double>(spikes.dim(1)) *
                       static_cast<double>(n_total);
  Tensor g = spikes;
  const double scale = lambda / denom;
  for (std::size_t e = 0; e < g.size(); ++e) g(e) *= scale;
  return g;
}

}  // namespace delrec
