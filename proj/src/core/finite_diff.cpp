#include "saulab/core/finite_diff.hpp"

#include <cmath>

#include "saulab/core/autograd.hpp"
#include "saulab/core/error.hpp"

namespace sau {

float finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                              float step) {
  Tensor probe = x.clone();
  probe.set_requires_grad(true);
  std::vector<float> analytic(static_cast<std::size_t>(x.size()));
  {
    GradTape tape;
    Tensor loss = f(probe);
    if (loss.size() != 1) throw ContractError("finite_difference_check: f must return a scalar");
    if (!std::isfinite(loss.item())) throw NumericError("finite_difference_check: f(x) not finite");
    tape.backward(loss);
    for (std::int64_t i = 0; i < x.size(); ++i) analytic[i] = probe.grad()[i];
  }

  Tensor plain = x.clone();  // requires_grad stays false; no tape active below
  float worst = 0.0f;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const float saved = plain.data()[i];
    plain.data()[i] = saved + step;
    const double up = f(plain).item();
    plain.data()[i] = saved - step;
    const double down = f(plain).item();
    plain.data()[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference_check: non-finite probe value at coordinate " +
                         std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * static_cast<double>(step));
    const double err = std::abs(analytic[i] - numeric) /
                       (std::abs(analytic[i]) + std::abs(numeric) + 1e-8);
    worst = std::max(worst, static_cast<float>(err));
  }
  return worst;
}

}  // namespace sau
