#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

namespace sau {

using Shape = std::vector<int>;

using ArrayMap = Eigen::Map<Eigen::ArrayXf>;
using ConstArrayMap = Eigen::Map<const Eigen::ArrayXf>;
using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<MatrixRM>;
using ConstMatrixMap = Eigen::Map<const MatrixRM>;

std::int64_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense float32 array in row-major order with an optional gradient buffer.
// Tensor is a handle with reference semantics: copies share the same
// storage, which is what gives recorded operations a stable identity for
// gradient accumulation, and a const handle still exposes writable views
// (as with a shared_ptr). Use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor uniform(Shape shape, float lo, float hi, class Rng& rng,
                        bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t size() const;
  int dim(int i) const;
  int rank() const;

  float* data() const;
  ArrayMap array() const;

  float item() const;  // scalar tensors only
  float at(std::int64_t i) const;

  bool requires_grad() const;
  void set_requires_grad(bool rg) const;

  // Gradient buffer; allocated zero-filled on first touch.
  ArrayMap grad() const;
  bool has_grad() const;
  void zero_grad() const;

  Tensor clone() const;
  Tensor detached() const;  // deep copy with requires_grad = false

  // Handle identity (same storage).
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const void* storage_id() const { return impl_.get(); }

 private:
  struct Impl {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty until touched
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;

  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  void ensure_grad() const;
};

}  // namespace sau
