#pragma once

#include <vector>

#include "delrec/tensor.hpp"

namespace delrec {

enum class PoolKind { mean, sum, last };

// Per-step softmax of readout membrane traces summed over time:
// scores_i = sum_t exp(V_i[t]) / sum_j exp(V_j[t]).  (T,B,C) -> (B,C).
// Each step is max-subtracted before exponentiation.
Tensor softmax_over_time(const Tensor& v);

// Gradient of the scores w.r.t. the trace: pass dL/dscores, get dL/dV.
Tensor softmax_over_time_backward(const Tensor& v, const Tensor& grad_scores);

// Mean over the batch of -log(score of the true class). Scores must be
// positive (probabilities, or per-step softmax sums).
double cross_entropy_scores(const Tensor& scores,
                            const std::vector<int>& labels);
Tensor cross_entropy_scores_grad(const Tensor& scores,
                                 const std::vector<int>& labels);

// Softmax cross-entropy on raw logits (B,C). Fills grad when non-null and
// returns the softmax probabilities through probs when requested.
double cross_entropy_logits(const Tensor& logits,
                            const std::vector<int>& labels, Tensor* grad,
                            Tensor* probs = nullptr);

Tensor pool_over_time(const Tensor& z, PoolKind kind);
Tensor pool_over_time_backward(std::size_t t_steps, const Tensor& grad_pooled,
                               PoolKind kind);

// L_spike = sum S^2 / (2 T B N_total) over all hidden spike tensors; for
// binary spikes this is half the mean firing rate.
struct SpikeStats {
  double penalty = 0.0;
  double mean_rate = 0.0;  // spikes per neuron per time-step
};
SpikeStats spike_stats(const std::vector<const Tensor*>& spikes);

// dL_spike/dS for one layer's spikes, given the total neuron count across
// all penalized layers.
Tensor spike_penalty_grad(const Tensor& spikes, std::size_t n_total,
                          double lambda);

}  // namespace delrec
