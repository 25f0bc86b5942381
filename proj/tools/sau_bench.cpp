#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "saulab/bench/experiment.hpp"
#include "saulab/forge/idx.hpp"
#include "saulab/zoo/checkpoint.hpp"

namespace {

using namespace sau;

ExperimentConfig load_config(const std::string& path, std::uint64_t seed, bool seed_set) {
  ExperimentConfig cfg = load_experiment_config(path);
  if (seed_set) cfg.seed = seed;
  return cfg;
}

void print_metrics(const char* tag, const MetricSet& m) {
  std::printf("%s acc %.2f asr %.2f r_acc %.2f (eligible %ld of %ld)\n", tag, m.acc, m.asr,
              m.r_acc, m.n_eligible, m.n_total);
}

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& split, const std::string& out,
                 const std::string& format) {
  PipelineData data = prepare_data(cfg);
  const LabeledDataset& ds = split == "test" ? data.clean_test : data.clean_train;
  if (format == "idx") {
    write_idx(ds, out + "-images.idx", out + "-labels.idx");
    std::printf("wrote %s-images.idx / %s-labels.idx (%d samples)\n", out.c_str(), out.c_str(),
                ds.size());
  } else {
    save_dataset(ds, out);
    std::printf("wrote %s (%d samples, %d classes)\n", out.c_str(), ds.size(), ds.num_classes);
  }
  return 0;
}

int cmd_poison(const ExperimentConfig& cfg, const std::string& out) {
  PipelineData data = prepare_data(cfg);
  save_dataset(data.poisoned_train, out);
  long poisoned = 0;
  for (bool b : data.poisoned_train.poison_mask) poisoned += b ? 1 : 0;
  std::printf("wrote %s (%d samples, %ld poisoned)\n", out.c_str(),
              data.poisoned_train.size(), poisoned);
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  PipelineData data = prepare_data(cfg);
  TrainOptions topt;
  topt.epochs = cfg.train_epochs;
  topt.lr = cfg.train_lr;
  topt.momentum = cfg.train_momentum;
  topt.batch_size = cfg.train_batch_size;
  topt.asr_gate = cfg.ratio > 0.0f ? cfg.asr_gate : 0.0;
  topt.plateau_epochs = cfg.plateau_epochs;
  topt.plateau_delta = cfg.plateau_delta;
  TrainResult trained = train_poisoned(cfg.build_model_config(), data.poisoned_train,
                                       data.clean_test, data.trigger, data.tm, topt, cfg.seed);
  std::ofstream log(cfg.out_dir + "/train.log", std::ios::trunc);
  for (const std::string& line : trained.log) log << line << "\n";
  save_checkpoint(trained.model, cfg.out_dir + "/theta_bd.ckpt");
  std::printf("trained %d epochs, acc %.2f asr %.2f -> %s/theta_bd.ckpt\n", trained.epochs_run,
              trained.final_acc, trained.final_asr, cfg.out_dir.c_str());
  return 0;
}

int cmd_defend(const ExperimentConfig& cfg) {
  PipelineData data = prepare_data(cfg);
  Model poisoned = load_checkpoint(cfg.out_dir + "/theta_bd.ckpt", cfg.build_model_config());
  DefenseOutcome defense = run_defense(poisoned, data, cfg);
  std::ofstream log(cfg.out_dir + "/epochs.log", std::ios::trunc);
  for (const EpochLog& e : defense.run.log) log << e.to_line() << "\n";
  save_checkpoint(defense.purified, cfg.out_dir + "/purified.ckpt");
  if (!defense.run.log.empty() && defense.run.log.back().eval) {
    const EpochEval& e = *defense.run.log.back().eval;
    std::printf("defense %s done: acc %.2f asr %.2f r_acc %.2f -> %s/purified.ckpt\n",
                cfg.variant.c_str(), e.acc, e.asr, e.r_acc, cfg.out_dir.c_str());
  } else {
    std::printf("defense %s done -> %s/purified.ckpt\n", cfg.variant.c_str(),
                cfg.out_dir.c_str());
  }
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint) {
  PipelineData data = prepare_data(cfg);
  const std::string path = checkpoint.empty() ? cfg.out_dir + "/purified.ckpt" : checkpoint;
  Model model = load_checkpoint(path);
  MetricSet m = compute_metrics(model, data.clean_test, data.trigger, data.tm);
  print_metrics(path.c_str(), m);
  return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
  PipelineData data = prepare_data(cfg);
  Model before_model = load_checkpoint(cfg.out_dir + "/theta_bd.ckpt");
  ExperimentReport report;
  report.config_echo = cfg.raw_text;
  report.before = compute_metrics(before_model, data.clean_test, data.trigger, data.tm);
  if (cfg.variant != "none" && std::filesystem::exists(cfg.out_dir + "/purified.ckpt")) {
    Model after_model = load_checkpoint(cfg.out_dir + "/purified.ckpt");
    report.after = compute_metrics(after_model, data.clean_test, data.trigger, data.tm);
    report.epoch_log_path = cfg.out_dir + "/epochs.log";
  } else {
    report.after = report.before;
    report.epoch_log_path = "-";
  }
  report.der_value = der(report.before.acc, report.before.asr, report.after.acc, report.after.asr);
  std::ofstream out(cfg.out_dir + "/report.txt", std::ios::trunc);
  out << emit_report(report);
  SummaryRow row{cfg.trigger_kind, cfg.variant, report.before, report.after, report.der_value};
  std::ofstream csv(cfg.out_dir + "/summary.csv", std::ios::trunc);
  csv << summary_csv({row});
  print_metrics("before", report.before);
  print_metrics("after", report.after);
  std::printf("der %.2f -> %s/report.txt\n", report.der_value, cfg.out_dir.c_str());
  return 0;
}

int cmd_verify_bounds(int instances, std::uint64_t seed) {
  if (instances <= 0) {
    std::printf("verify-bounds: 0 instances requested, vacuous pass (warning)\n");
    return 0;
  }
  BoundsSummary s = verify_bounds_run(instances, seed);
  std::printf("verify-bounds: %d instances, %d violations\n", s.instances, s.violations);
  std::printf("  min slack r_sub - r_bd: %.6f\n", s.min_slack_bd_sub);
  std::printf("  min slack r_adv - r_sub: %.6f\n", s.min_slack_sub_adv);
  std::printf("  max gap1 - bound1: %.6f (must be <= 0)\n", s.max_gap1_margin);
  for (const std::string& f : s.failures) std::printf("  FAIL %s\n", f.c_str());
  return s.violations == 0 ? 0 : 1;
}

int cmd_run(const ExperimentConfig& cfg) {
  ExperimentReport report = run_experiment(cfg);
  print_metrics("before", report.before);
  print_metrics("after", report.after);
  std::printf("der %.2f wall %.1fs -> %s/report.txt\n", report.der_value,
              report.wall_clock_seconds, cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"backdoor attack/defense laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "experiment config file")->required(false);
  app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  std::string split = "train", out = "data.dst", format = "native";
  gen->add_option("--split", split, "train or test");
  gen->add_option("--out", out, "output path");
  gen->add_option("--format", format, "native or idx");

  auto* poison = app.add_subcommand("poison", "write the poisoned training set");
  std::string poison_out = "poisoned.dst";
  poison->add_option("--out", poison_out, "output path");

  app.add_subcommand("train", "train the backdoored model");
  app.add_subcommand("defend", "purify the trained model");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint path (default: purified)");

  auto* vb = app.add_subcommand("verify-bounds", "check the risk inequality chains");
  int instances = 200;
  std::uint64_t vb_seed = 2024;
  vb->add_option("--instances", instances, "number of random grid instances");
  vb->add_option("--bounds-seed", vb_seed, "instance generator seed");

  app.add_subcommand("report", "assemble the experiment report from artifacts");
  app.add_subcommand("run", "run the full pipeline");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("verify-bounds")) return cmd_verify_bounds(instances, vb_seed);
    ExperimentConfig cfg = load_config(config_path, seed, seed_set);
    if (app.got_subcommand("gen-data")) return cmd_gen_data(cfg, split, out, format);
    if (app.got_subcommand("poison")) return cmd_poison(cfg, poison_out);
    if (app.got_subcommand("train")) return cmd_train(cfg);
    if (app.got_subcommand("defend")) return cmd_defend(cfg);
    if (app.got_subcommand("eval")) return cmd_eval(cfg, checkpoint);
    if (app.got_subcommand("report")) return cmd_report(cfg);
    if (app.got_subcommand("run")) return cmd_run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
