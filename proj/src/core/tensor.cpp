#include "saulab/core/tensor.hpp"

#include <sstream>

#include "saulab/core/error.hpp"
#include "saulab/core/rng.hpp"

namespace sau {

std::int64_t shape_size(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dims must be positive, got " + shape_str(shape));
  }
  auto impl = std::make_shared<Impl>();
  impl->data.assign(static_cast<std::size_t>(shape_size(shape)), 0.0f);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  t.array().setConstant(value);
  return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return full({1}, value, requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  if (shape_size(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::uniform(Shape shape, float lo, float hi, Rng& rng, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  float* p = t.data();
  for (std::int64_t i = 0; i < t.size(); ++i) p[i] = rng.uniform(lo, hi);
  return t;
}

const Shape& Tensor::shape() const {
  if (!impl_) throw ContractError("undefined tensor");
  return impl_->shape;
}

std::int64_t Tensor::size() const {
  if (!impl_) throw ContractError("undefined tensor");
  return static_cast<std::int64_t>(impl_->data.size());
}

int Tensor::dim(int i) const { return shape().at(static_cast<std::size_t>(i)); }

int Tensor::rank() const { return static_cast<int>(shape().size()); }

float* Tensor::data() const {
  if (!impl_) throw ContractError("undefined tensor");
  return impl_->data.data();
}

ArrayMap Tensor::array() const { return ArrayMap(data(), size()); }

float Tensor::item() const {
  if (size() != 1) throw ContractError("item() requires a scalar tensor, shape " + shape_str(shape()));
  return impl_->data[0];
}

float Tensor::at(std::int64_t i) const {
  if (i < 0 || i >= size()) throw ContractError("index out of range");
  return impl_->data[static_cast<std::size_t>(i)];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool rg) const {
  if (!impl_) throw ContractError("undefined tensor");
  impl_->requires_grad = rg;
}

void Tensor::ensure_grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
}

ArrayMap Tensor::grad() const {
  if (!impl_) throw ContractError("undefined tensor");
  ensure_grad();
  return ArrayMap(impl_->grad.data(), size());
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

void Tensor::zero_grad() const {
  if (!impl_) throw ContractError("undefined tensor");
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

Tensor Tensor::clone() const {
  if (!impl_) return Tensor();
  auto impl = std::make_shared<Impl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::detached() const {
  if (!impl_) return Tensor();
  Tensor t = clone();
  t.impl_->requires_grad = false;
  return t;
}

}  // namespace sau
