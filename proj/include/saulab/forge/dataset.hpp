#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saulab/core/tensor.hpp"
#include "saulab/forge/trigger.hpp"

namespace sau {

enum class TargetMode { AllToOne, AllToAll };

// Label mapping for poisoned samples: a single fixed target class, or the
// cyclic shift y -> (y+1) mod K.
struct TargetMap {
  TargetMode mode = TargetMode::AllToOne;
  int target_label = 0;
  int num_classes = 2;

  static TargetMap all_to_one(int target, int num_classes);
  static TargetMap all_to_all(int num_classes);
};

int map_target(int y, const TargetMap& tm);

// Images [N,C,H,W] in [0,1] with labels; poisoned samples carry the flag
// and their pre-poison label.
struct LabeledDataset {
  Tensor images;
  std::vector<int> labels;
  std::vector<bool> poison_mask;
  std::vector<int> original_labels;
  int num_classes = 0;

  int size() const { return images.defined() ? images.dim(0) : 0; }
  Tensor image(int i) const;  // [C,H,W] copy
  LabeledDataset subset(const std::vector<int>& indices) const;
};

// Replaces round(ratio*N) seeded-uniform samples with their triggered,
// relabeled versions (in place in the copy; N and order preserved). Under
// all-to-one, samples already labeled with the target class are not
// selected. clean_label instead poisons only target-class samples and keeps
// their labels (the sinusoidal attack's usual protocol).
LabeledDataset poison_dataset(const LabeledDataset& clean, const TriggerSpec& trigger,
                              const TargetMap& tm, float ratio, std::uint64_t seed,
                              bool clean_label = false);

// Per-class geometric templates (bars at class-indexed positions) plus
// Gaussian pixel noise, clamped to [0,1]. Deterministic given the seed.
LabeledDataset gen_synthetic(int num_classes, int samples_per_class, int channels, int height,
                             int width, float noise_sigma, std::uint64_t seed);

// Noise-free template image for one class.
Tensor class_template(int cls, int num_classes, int channels, int height, int width);

// Native dataset file (float payload + labels + poison metadata).
void save_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

}  // namespace sau
