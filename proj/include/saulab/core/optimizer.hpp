#pragma once

#include <cstdint>
#include <vector>

#include "saulab/core/tensor.hpp"

namespace sau {

enum class OptimizerKind { Sgd, Adam };

// Per-run optimizer state. SGD keeps one velocity buffer per parameter;
// Adam keeps first/second moments and a step counter for bias correction.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Sgd;
  float learning_rate = 0.01f;
  float momentum = 0.0f;  // sgd
  float beta1 = 0.9f;     // adam
  float beta2 = 0.999f;
  float eps = 1e-8f;
  std::int64_t step_count = 0;
  std::vector<Tensor> velocity;  // sgd
  std::vector<Tensor> m1, m2;    // adam

  static OptimizerState sgd(float lr, float momentum = 0.0f);
  static OptimizerState adam(float lr);
};

// One update of params from grads (aligned lists, identical shapes).
// SGD: v <- mu*v + g; p <- p - lr*v. Adam: bias-corrected moment update.
void optimizer_step(OptimizerState& state, std::vector<Tensor>& params,
                    const std::vector<Tensor>& grads);

// Convenience: read gradients straight from the parameter tensors.
void optimizer_step(OptimizerState& state, std::vector<Tensor>& params);

}  // namespace sau
