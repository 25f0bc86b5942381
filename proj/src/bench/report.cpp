#include "saulab/bench/report.hpp"

#include <cstdio>
#include <sstream>

#include "saulab/core/error.hpp"

namespace sau {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

std::string metric_line(const char* name, const MetricSet& m) {
  std::ostringstream os;
  os << name << " acc " << num(m.acc) << " correct " << m.n_correct << " total " << m.n_total
     << " asr " << num(m.asr) << " hits " << m.n_target_hits << " racc " << num(m.r_acc)
     << " recovered " << m.n_recovered << " eligible " << m.n_eligible;
  return os.str();
}

MetricSet parse_metric_line(const std::string& line) {
  std::istringstream is(line);
  std::string tag, k;
  MetricSet m;
  is >> tag;
  is >> k >> m.acc >> k >> m.n_correct >> k >> m.n_total >> k >> m.asr >> k >> m.n_target_hits >>
      k >> m.r_acc >> k >> m.n_recovered >> k >> m.n_eligible;
  if (!is) throw FormatError("bad metric line '" + line + "'");
  return m;
}

}  // namespace

std::string emit_report(const ExperimentReport& r) {
  std::ostringstream os;
  os << "experiment-report v1\n";
  os << "config_begin\n" << r.config_echo;
  if (!r.config_echo.empty() && r.config_echo.back() != '\n') os << "\n";
  os << "config_end\n";
  os << metric_line("before", r.before) << "\n";
  os << metric_line("after", r.after) << "\n";
  os << "der " << num(r.der_value) << "\n";
  os << "epoch_log " << (r.epoch_log_path.empty() ? "-" : r.epoch_log_path) << "\n";
  os << "wall_clock_seconds " << num(r.wall_clock_seconds) << "\n";
  if (r.risks) {
    os << "risk_begin\n" << r.risks->to_text() << "risk_end\n";
  }
  return os.str();
}

ExperimentReport parse_report(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "experiment-report v1") {
    throw FormatError("not an experiment report");
  }
  ExperimentReport r;
  if (!std::getline(is, line) || line != "config_begin") {
    throw FormatError("expected config_begin");
  }
  std::ostringstream cfg;
  bool closed = false;
  while (std::getline(is, line)) {
    if (line == "config_end") {
      closed = true;
      break;
    }
    cfg << line << "\n";
  }
  if (!closed) throw FormatError("unterminated config block");
  r.config_echo = cfg.str();

  if (!std::getline(is, line)) throw FormatError("missing before metrics");
  r.before = parse_metric_line(line);
  if (!std::getline(is, line)) throw FormatError("missing after metrics");
  r.after = parse_metric_line(line);

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "der") {
      ls >> r.der_value;
    } else if (key == "epoch_log") {
      ls >> r.epoch_log_path;
    } else if (key == "wall_clock_seconds") {
      ls >> r.wall_clock_seconds;
    } else if (key == "risk_begin") {
      std::ostringstream risk;
      bool done = false;
      while (std::getline(is, line)) {
        if (line == "risk_end") {
          done = true;
          break;
        }
        risk << line << "\n";
      }
      if (!done) throw FormatError("unterminated risk block");
      r.risks = RiskReport::from_text(risk.str());
    } else {
      throw FormatError("unknown report key '" + key + "'");
    }
  }
  return r;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "attack,defense,acc_before,asr_before,racc_before,acc_after,asr_after,racc_after,der\n";
  char buf[32];
  auto pct = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  for (const SummaryRow& r : rows) {
    os << r.attack << "," << r.defense << "," << pct(r.before.acc) << "," << pct(r.before.asr)
       << "," << pct(r.before.r_acc) << "," << pct(r.after.acc) << "," << pct(r.after.asr) << ","
       << pct(r.after.r_acc) << "," << pct(r.der_value) << "\n";
  }
  return os.str();
}

}  // namespace sau
