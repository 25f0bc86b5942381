#pragma once

#include <functional>
#include <vector>

#include "saulab/core/tensor.hpp"

namespace sau {

// Reverse-mode tape. Constructing a tape makes it the active one for the
// current thread; primitive ops record onto the active tape whenever an
// input requires gradients. backward() replays the recorded ops in exact
// reverse order, accumulating additively across fan-out.
//
// One tape per thread; tapes nest LIFO.
class GradTape {
 public:
  GradTape();
  ~GradTape();
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  // backfn receives upstream d(loss)/d(output) and must add each input's
  // contribution into input.grad().
  void record(std::vector<Tensor> inputs, Tensor output,
              std::function<void(const Tensor& output)> backfn);

  // Seeds d(loss)/d(loss) = 1 and replays the tape backwards. loss must be
  // a scalar produced under this tape.
  void backward(const Tensor& loss);

  std::size_t num_ops() const { return nodes_.size(); }

  static GradTape* active();

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void(const Tensor&)> backfn;
  };
  std::vector<Node> nodes_;
  GradTape* previous_ = nullptr;
};

// True when an op on these inputs should be recorded.
bool tracing(const Tensor& a);
bool tracing(const Tensor& a, const Tensor& b);

}  // namespace sau
