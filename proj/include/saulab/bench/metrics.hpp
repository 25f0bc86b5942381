#pragma once

#include "saulab/forge/dataset.hpp"
#include "saulab/zoo/model.hpp"

namespace sau {

// ACC / ASR / R-ACC as percentages, with the counts behind each fraction.
// ASR and R-ACC share the denominator n_eligible (samples whose mapped
// target differs from their true label).
struct MetricSet {
  double acc = 0.0;
  double asr = 0.0;
  double r_acc = 0.0;
  long n_correct = 0;
  long n_total = 0;
  long n_target_hits = 0;
  long n_recovered = 0;
  long n_eligible = 0;

  bool operator==(const MetricSet&) const = default;
};

// ACC over the full clean test set; ASR = triggered samples predicted as the
// target; R-ACC = triggered samples still predicted as their true label.
MetricSet compute_metrics(const Model& model, const LabeledDataset& clean_test,
                          const TriggerSpec& trigger, const TargetMap& tm);

// Defense effectiveness rating, percentage-point convention:
// [max(0, asr_before - asr_after) - max(0, acc_before - acc_after) + 100] / 2.
double der(double acc_before, double asr_before, double acc_after, double asr_after);

}  // namespace sau
