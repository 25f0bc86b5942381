#include "saulab/bench/metrics.hpp"

#include <algorithm>

#include "saulab/core/error.hpp"

namespace sau {

MetricSet compute_metrics(const Model& model, const LabeledDataset& clean_test,
                          const TriggerSpec& trigger, const TargetMap& tm) {
  if (clean_test.size() == 0) throw DomainError("empty test set");
  MetricSet m;
  m.n_total = clean_test.size();

  std::vector<int> clean_pred = model.predict(clean_test.images);
  for (int i = 0; i < clean_test.size(); ++i) {
    if (clean_pred[i] == clean_test.labels[i]) ++m.n_correct;
  }

  std::vector<int> trig_pred = model.predict(apply_trigger(clean_test.images, trigger));
  for (int i = 0; i < clean_test.size(); ++i) {
    const int target = map_target(clean_test.labels[i], tm);
    if (target == clean_test.labels[i]) continue;
    ++m.n_eligible;
    if (trig_pred[i] == target) ++m.n_target_hits;
    if (trig_pred[i] == clean_test.labels[i]) ++m.n_recovered;
  }
  if (m.n_eligible == 0) throw DomainError("no samples outside the target class");

  m.acc = 100.0 * m.n_correct / m.n_total;
  m.asr = 100.0 * m.n_target_hits / m.n_eligible;
  m.r_acc = 100.0 * m.n_recovered / m.n_eligible;
  return m;
}

double der(double acc_before, double asr_before, double acc_after, double asr_after) {
  for (double v : {acc_before, asr_before, acc_after, asr_after}) {
    if (!(v >= 0.0 && v <= 100.0)) throw DomainError("der inputs must be percentages in [0,100]");
  }
  const double delta_asr = asr_before - asr_after;
  const double delta_acc = acc_before - acc_after;
  return (std::max(0.0, delta_asr) - std::max(0.0, delta_acc) + 100.0) / 2.0;
}

}  // namespace sau
