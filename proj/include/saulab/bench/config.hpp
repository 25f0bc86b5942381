#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "saulab/engine/sau.hpp"
#include "saulab/forge/dataset.hpp"
#include "saulab/forge/trigger.hpp"
#include "saulab/zoo/model.hpp"

namespace sau {

// Sectioned key = value text ([data], [attack], [train], [defense], [eval];
// '#' or ';' comments).
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  double get_num(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  const std::string& text() const { return text_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string text_;
};

// The whole pipeline's knobs, typed.
struct ExperimentConfig {
  // [data]
  std::string source = "synthetic";  // synthetic | idx
  int num_classes = 4;
  int samples_per_class = 500;
  int test_samples_per_class = 125;
  int channels = 1, height = 16, width = 16;
  float noise_sigma = 0.12f;
  std::string train_images, train_labels, test_images, test_labels;  // idx paths
  std::uint64_t seed = 7;

  // [attack]
  std::string trigger_kind = "patch";
  int patch_row = -1, patch_col = -1;  // -1: bottom-right corner
  int patch_height = 3, patch_width = 3;
  float patch_value = 1.0f;
  float alpha = 0.2f;
  float amplitude = 0.08f, frequency = 6.0f;
  std::uint64_t pattern_seed = 99;  // blended pattern
  std::string target_mode = "all_to_one";
  int target_label = 0;
  float ratio = 0.1f;
  bool clean_label = false;

  // [train]
  std::string arch = "cnn";
  bool use_norm_layers = true;
  int train_epochs = 60;
  float train_lr = 0.01f;
  float train_momentum = 0.9f;
  int train_batch_size = 32;
  double asr_gate = 85.0;
  int plateau_epochs = 5;
  double plateau_delta = 0.25;

  // [defense]
  std::string variant = "sau";  // or "none"
  SauConfig sau;
  float clean_budget = 0.05f;
  std::string ball = "linf";
  float radius = 0.2f;

  // [eval]
  std::string out_dir = "runs/exp";
  bool verify_bounds = false;
  int grid_instances = 200;
  bool risk_report = false;

  std::string raw_text;

  TriggerSpec build_trigger() const;
  TargetMap build_target_map() const;
  ModelConfig build_model_config() const;
  PerturbationSet build_set() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_text(const std::string& text);

}  // namespace sau
