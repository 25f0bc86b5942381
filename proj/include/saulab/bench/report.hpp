#pragma once

#include <optional>
#include <string>

#include "saulab/bench/metrics.hpp"
#include "saulab/risk/risk.hpp"

namespace sau {

struct ExperimentReport {
  std::string config_echo;
  MetricSet before;  // poisoned model, no defense
  MetricSet after;   // purified model
  double der_value = 50.0;
  std::string epoch_log_path;  // "-" when absent
  std::optional<RiskReport> risks;
  double wall_clock_seconds = 0.0;

  bool operator==(const ExperimentReport&) const = default;
};

std::string emit_report(const ExperimentReport& report);
ExperimentReport parse_report(const std::string& text);

// One CSV row in the ACC/ASR/R-ACC/DER column layout.
struct SummaryRow {
  std::string attack;
  std::string defense;
  MetricSet before;
  MetricSet after;
  double der_value = 0.0;
};
std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace sau
