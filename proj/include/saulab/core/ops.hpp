#pragma once

#include <vector>

#include "saulab/core/autograd.hpp"
#include "saulab/core/tensor.hpp"

namespace sau {

// Floor applied inside every logarithm so saturated probabilities stay finite.
inline constexpr float kProbFloor = 1e-12f;

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);

// a[m,k] * b[k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

// m[B,K] + v[K] broadcast over rows.
Tensor add_rowvec(const Tensor& m, const Tensor& v);

// x[B,C,H,W] + b[C] broadcast over batch and space.
Tensor add_channel_bias(const Tensor& x, const Tensor& b);

// batch[B,...] + eps[...] with eps shared across the batch; eps gradients
// accumulate over all samples (the universal-perturbation path).
Tensor add_sample_broadcast(const Tensor& batch, const Tensor& eps);

// Clamp to [0,1] with pass-through gradients inside the range.
Tensor clamp01(const Tensor& a);

// Row-wise stabilized softmax. Accepts [B,K] or a single [K] vector.
Tensor softmax_rows(const Tensor& logits);

// Scalar reductions (double accumulation).
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

// -log(probs[label]); probs must be a valid probability vector.
Tensor cross_entropy(const Tensor& probs, int label);
// Mean of per-row cross entropies over a batch.
Tensor cross_entropy_mean(const Tensor& probs, const std::vector<int>& labels);

// Jensen-Shannon divergence, natural log, 0*log(0/.) := 0.
Tensor js_divergence(const Tensor& p, const Tensor& q);
Tensor js_divergence_mean(const Tensor& p, const Tensor& q);

// Mean over rows of -I(bd_pred != label) * log(1 - probs[bd_pred]).
// Gradient flows only through probs.
Tensor sar_loss(const Tensor& probs, const std::vector<int>& bd_pred,
                const std::vector<int>& labels);

// x[B,Cin,H,W] (*) w[Cout,Cin,kh,kw], stride 1, zero padding `pad`.
Tensor conv2d(const Tensor& x, const Tensor& w, int pad);

// 2x2 average pooling, stride 2; H and W must be even.
Tensor avg_pool2(const Tensor& x);

// [B,C,H,W] -> [B,C] spatial mean.
Tensor global_avg_pool(const Tensor& x);

// Per-channel batch normalization over [B,C,H,W] or [B,C].
// use_batch_stats: normalize with the batch's own statistics and fold them
// into running_mean/running_var with the given momentum (the training path).
// Otherwise normalize with the stored running statistics and leave them
// untouched (the eval / frozen-statistics path). gamma and beta are the
// trainable affine parameters either way.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Tensor& running_mean, Tensor& running_var, bool use_batch_stats,
                 float momentum = 0.1f, float eps = 1e-5f);

// Same data, new shape (element count preserved); gradients pass through.
Tensor reshape(const Tensor& x, Shape new_shape);

// --- non-differentiable helpers ---

// Index of the row maximum; ties resolve to the lowest index.
int argmax(const float* row, int n);
std::vector<int> argmax_rows(const Tensor& m);

// Elementwise sign in {-1, 0, +1}; never recorded.
Tensor sign_of(const Tensor& a);

// Throws DomainError unless v is K>=2, entries >= 0, sum within 1e-5 of 1.
void check_probability_vector(const float* v, int k);

}  // namespace sau
