#pragma once

#include <functional>

#include "saulab/core/tensor.hpp"

namespace sau {

// Checks the tape gradient of f at x against central finite differences.
// f is evaluated under a fresh tape once for the analytic gradient, then
// twice per coordinate (x +- step*e_i) without recording. Returns
// max_i |analytic_i - numeric_i| / (|analytic_i| + |numeric_i| + 1e-8).
// Throws NumericError if f produces a non-finite value.
float finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                              float step);

}  // namespace sau
