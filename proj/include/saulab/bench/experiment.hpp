#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "saulab/bench/config.hpp"
#include "saulab/bench/report.hpp"
#include "saulab/engine/sau.hpp"

namespace sau {

struct TrainOptions {
  int epochs = 60;
  float lr = 0.01f;
  float momentum = 0.9f;
  int batch_size = 32;
  double asr_gate = 85.0;  // 0 disables the attack-success requirement
  int plateau_epochs = 5;
  double plateau_delta = 0.25;  // percentage points of clean accuracy
};

struct TrainResult {
  Model model;
  std::vector<std::string> log;
  double final_acc = 0.0;
  double final_asr = 0.0;
  int epochs_run = 0;
};

// Standard CE + momentum-SGD training on the (poisoned) training set.
// Stops early once clean accuracy has plateaued and the attack is implanted
// (test ASR above the gate); throws if the gate is never reached.
TrainResult train_poisoned(const ModelConfig& mc, const LabeledDataset& train,
                           const LabeledDataset& clean_test, const TriggerSpec& trigger,
                           const TargetMap& tm, const TrainOptions& opt, std::uint64_t seed);

// Seeded choice of the defender's clean samples.
LabeledDataset select_defense_set(const LabeledDataset& clean_train, float fraction,
                                  std::uint64_t seed);

// Data stages shared by the monolithic run and the staged CLI commands;
// seeded from the config so both paths see identical bytes.
struct PipelineData {
  LabeledDataset clean_train;
  LabeledDataset clean_test;
  LabeledDataset poisoned_train;
  TriggerSpec trigger;
  TargetMap tm;
};
PipelineData prepare_data(const ExperimentConfig& cfg);

// Defense stage on an already trained poisoned model. Returns the purified
// model and writes nothing.
struct DefenseOutcome {
  Model purified;
  SauRunResult run;
};
DefenseOutcome run_defense(const Model& poisoned, const PipelineData& data,
                           const ExperimentConfig& cfg);

// The full pipeline: data -> poison -> train -> defend -> evaluate -> report.
// Writes report.txt, summary.csv, checkpoints and the epoch log under the
// config's out_dir. Deterministic for a fixed config and seed.
ExperimentReport run_experiment(const ExperimentConfig& cfg);
ExperimentReport run_experiment_file(const std::string& config_path,
                                     std::optional<std::uint64_t> seed_override = std::nullopt);

struct BoundsSummary {
  int instances = 0;
  int violations = 0;
  double min_slack_sub_adv = 1.0;   // min over instances of r_adv - r_sub
  double min_slack_bd_sub = 1.0;    // min of r_sub - r_bd
  double max_gap1_margin = 0.0;     // max of gap1 - bound1 (must stay <= 0)
  std::vector<std::string> failures;
};

// Generates seeded random grid instances, runs the exact risk oracle on each
// and checks every inequality chain plus the relaxation-gap bound.
BoundsSummary verify_bounds_run(int instances, std::uint64_t seed, bool include_all_to_all = true);

}  // namespace sau
