#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saulab/core/tensor.hpp"

namespace sau {

enum class Arch { Mlp, Cnn };

struct ModelConfig {
  Arch arch = Arch::Cnn;
  int in_channels = 1;
  int in_height = 16;
  int in_width = 16;
  int num_classes = 4;
  std::vector<int> hidden_widths = {64, 64};  // mlp
  std::vector<int> conv_channels = {8, 16};   // cnn, one entry per block
  std::vector<int> kernel_sizes = {3, 3};
  bool use_norm_layers = true;

  void validate() const;
  std::int64_t param_count() const;
  std::int64_t stats_count() const;
  bool operator==(const ModelConfig&) const = default;
};

// A classifier with an explicit parameter list. Parameters are stored in a
// fixed canonical order (per layer: weight, bias, then gamma/beta when
// normalized); running normalization statistics live in a parallel list
// (per normalized layer: mean, var). Tensors are handles, so copies of a
// Model share storage; use clone() to snapshot.
class Model {
 public:
  Model() = default;

  static Model init(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  std::vector<Tensor>& running_stats() { return stats_; }
  const std::vector<Tensor>& running_stats() const { return stats_; }

  bool norm_stats_frozen() const { return norm_stats_frozen_; }

  // Softmax probabilities, one row per sample. training selects batch
  // statistics for normalization layers (and folds them into the running
  // estimates) unless the statistics are frozen; stats-frozen training and
  // eval both normalize with the stored running statistics and never write
  // them.
  Tensor forward(const Tensor& x, bool training = false) const;
  Tensor forward_logits(const Tensor& x, bool training = false) const;

  // Argmax class per sample; ties resolve to the lowest class index.
  std::vector<int> predict(const Tensor& x) const;

  Model clone() const;
  void set_requires_grad(bool rg);
  void zero_grad();

 private:
  ModelConfig cfg_;
  std::vector<Tensor> params_;
  std::vector<Tensor> stats_;
  bool norm_stats_frozen_ = false;

  friend Model assemble_model(const ModelConfig&, std::vector<Tensor>, std::vector<Tensor>, bool);
  friend void freeze_norm_stats(Model&);
};

// Fixed-normalization-statistics mode: later forward passes keep normalizing
// with the current running statistics, training included; the affine
// scale/shift parameters stay trainable. No-op for models without
// normalization layers.
void freeze_norm_stats(Model& model);

// Rebuild a model from raw parts (checkpoint loading).
Model assemble_model(const ModelConfig& cfg, std::vector<Tensor> params, std::vector<Tensor> stats,
                     bool norm_stats_frozen);

// FNV-1a over parameter and running-statistic bytes.
std::uint64_t model_hash(const Model& m);

// Frozen poisoned parameters next to the trainable copy being purified.
struct ModelPair {
  Model frozen;     // theta_bd: never updated, gradients disabled
  Model trainable;  // theta
  bool norm_stats_frozen = false;

  static ModelPair make(const Model& poisoned, bool freeze_norm);
};

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);

}  // namespace sau
