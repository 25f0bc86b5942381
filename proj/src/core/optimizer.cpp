#include "saulab/core/optimizer.hpp"

#include <cmath>

#include "saulab/core/error.hpp"

namespace sau {

OptimizerState OptimizerState::sgd(float lr, float momentum) {
  if (lr <= 0.0f) throw DomainError("learning rate must be positive");
  OptimizerState s;
  s.kind = OptimizerKind::Sgd;
  s.learning_rate = lr;
  s.momentum = momentum;
  return s;
}

OptimizerState OptimizerState::adam(float lr) {
  if (lr <= 0.0f) throw DomainError("learning rate must be positive");
  OptimizerState s;
  s.kind = OptimizerKind::Adam;
  s.learning_rate = lr;
  return s;
}

void optimizer_step(OptimizerState& state, std::vector<Tensor>& params,
                    const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) {
    throw ContractError("optimizer_step: parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) {
      throw ContractError("optimizer_step: shape mismatch at parameter " + std::to_string(i));
    }
  }

  if (state.kind == OptimizerKind::Sgd) {
    if (state.velocity.empty()) {
      for (const Tensor& p : params) state.velocity.push_back(Tensor::zeros(p.shape()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto v = state.velocity[i].array();
      v = state.momentum * v + grads[i].array();
      params[i].array() -= state.learning_rate * v;
    }
    ++state.step_count;
    return;
  }

  if (state.m1.empty()) {
    for (const Tensor& p : params) {
      state.m1.push_back(Tensor::zeros(p.shape()));
      state.m2.push_back(Tensor::zeros(p.shape()));
    }
  }
  ++state.step_count;
  const float t = static_cast<float>(state.step_count);
  const float c1 = 1.0f - std::pow(state.beta1, t);
  const float c2 = 1.0f - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.m1[i].array();
    auto v = state.m2[i].array();
    auto g = grads[i].array();
    m = state.beta1 * m + (1.0f - state.beta1) * g;
    v = state.beta2 * v + (1.0f - state.beta2) * g.square();
    params[i].array() -= state.learning_rate * (m / c1) / ((v / c2).sqrt() + state.eps);
  }
}

void optimizer_step(OptimizerState& state, std::vector<Tensor>& params) {
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (Tensor& p : params) {
    grads.push_back(Tensor::from_data(p.shape(),
                                      std::vector<float>(p.grad().data(), p.grad().data() + p.size())));
  }
  optimizer_step(state, params, grads);
}

}  // namespace sau
