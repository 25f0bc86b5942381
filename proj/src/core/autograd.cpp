#include "saulab/core/autograd.hpp"

#include <algorithm>
#include <unordered_set>

#include "saulab/core/error.hpp"

namespace sau {

namespace {
thread_local GradTape* g_active_tape = nullptr;
}

GradTape::GradTape() {
  previous_ = g_active_tape;
  g_active_tape = this;
}

GradTape::~GradTape() { g_active_tape = previous_; }

GradTape* GradTape::active() { return g_active_tape; }

bool tracing(const Tensor& a) { return g_active_tape != nullptr && a.requires_grad(); }

bool tracing(const Tensor& a, const Tensor& b) {
  return g_active_tape != nullptr && (a.requires_grad() || b.requires_grad());
}

void GradTape::record(std::vector<Tensor> inputs, Tensor output,
                      std::function<void(const Tensor&)> backfn) {
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backfn)});
}

void GradTape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  // Mark tensors on the path from the loss back to graph leaves so that ops
  // feeding other outputs (e.g. diagnostics built under the same tape) are
  // skipped.
  std::unordered_set<const void*> needed;
  needed.insert(loss.storage_id());
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (needed.count(it->output.storage_id())) {
      for (const Tensor& in : it->inputs) needed.insert(in.storage_id());
    }
  }

  Tensor l = loss;
  l.grad()[0] = 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!needed.count(it->output.storage_id())) continue;
    it->backfn(it->output);
  }
}

}  // namespace sau
