#include "saulab/bench/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "saulab/core/error.hpp"
#include "saulab/core/ops.hpp"
#include "saulab/core/rng.hpp"
#include "saulab/forge/idx.hpp"
#include "saulab/risk/instance_gen.hpp"
#include "saulab/zoo/checkpoint.hpp"

namespace sau {

namespace {

// Independent seed streams for each pipeline stage.
enum : std::uint64_t {
  kStreamTrainData = 1,
  kStreamTestData = 2,
  kStreamPoison = 3,
  kStreamInit = 4,
  kStreamTrainLoop = 5,
  kStreamDefenseSet = 6,
  kStreamDefense = 7,
};

std::uint64_t stage_seed(std::uint64_t master, std::uint64_t stream) {
  return Rng(master).split(stream).next_u64();
}

}  // namespace

TrainResult train_poisoned(const ModelConfig& mc, const LabeledDataset& train,
                           const LabeledDataset& clean_test, const TriggerSpec& trigger,
                           const TargetMap& tm, const TrainOptions& opt, std::uint64_t seed) {
  TrainResult result;
  result.model = Model::init(mc, stage_seed(seed, kStreamInit));
  OptimizerState sgd = OptimizerState::sgd(opt.lr, opt.momentum);

  double best_acc = 0.0;
  int epochs_since_gain = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::vector<int> order(static_cast<std::size_t>(train.size()));
    std::iota(order.begin(), order.end(), 0);
    Rng erng = Rng(stage_seed(seed, kStreamTrainLoop)).split(static_cast<std::uint64_t>(epoch));
    erng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < train.size(); start += opt.batch_size) {
      const int end = std::min(start + opt.batch_size, train.size());
      std::vector<int> idx(order.begin() + start, order.begin() + end);
      LabeledDataset batch = train.subset(idx);
      result.model.zero_grad();
      {
        GradTape tape;
        Tensor loss =
            cross_entropy_mean(result.model.forward(batch.images, /*training=*/true), batch.labels);
        loss_sum += loss.item();
        tape.backward(loss);
      }
      optimizer_step(sgd, result.model.params());
      ++batches;
    }

    MetricSet m = compute_metrics(result.model, clean_test, trigger, tm);
    result.final_acc = m.acc;
    result.final_asr = m.asr;
    result.epochs_run = epoch + 1;
    {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %d loss %.6f acc %.2f asr %.2f", epoch,
                    loss_sum / std::max(batches, 1), m.acc, m.asr);
      result.log.emplace_back(buf);
    }

    if (m.acc > best_acc + opt.plateau_delta) {
      best_acc = m.acc;
      epochs_since_gain = 0;
    } else {
      ++epochs_since_gain;
    }
    const bool attack_ready = opt.asr_gate <= 0.0 || m.asr >= opt.asr_gate;
    if (epochs_since_gain >= opt.plateau_epochs && attack_ready) break;
  }

  if (opt.asr_gate > 0.0 && result.final_asr < opt.asr_gate) {
    throw NumericError("train: attack failed to implant (ASR " +
                       std::to_string(result.final_asr) + "% < gate " +
                       std::to_string(opt.asr_gate) + "%)");
  }
  return result;
}

LabeledDataset select_defense_set(const LabeledDataset& clean_train, float fraction,
                                  std::uint64_t seed) {
  if (fraction <= 0.0f || fraction > 1.0f) throw DomainError("clean budget must be in (0,1]");
  const int want =
      std::max(1, static_cast<int>(std::lround(static_cast<double>(fraction) * clean_train.size())));
  Rng rng(seed);
  std::vector<int> picked = rng.choose(clean_train.size(), want);
  std::sort(picked.begin(), picked.end());
  return clean_train.subset(picked);
}

namespace {

struct StageGuard {
  std::string out_dir;
  std::string stage = "setup";
  bool completed = false;

  ~StageGuard() {
    if (completed || out_dir.empty()) return;
    std::ofstream marker(out_dir + "/incomplete.txt", std::ios::trunc);
    marker << "failed at stage: " << stage << "\n";
  }
};

}  // namespace

PipelineData prepare_data(const ExperimentConfig& cfg) {
  PipelineData d;
  if (cfg.source == "synthetic") {
    d.clean_train =
        gen_synthetic(cfg.num_classes, cfg.samples_per_class, cfg.channels, cfg.height, cfg.width,
                      cfg.noise_sigma, stage_seed(cfg.seed, kStreamTrainData));
    d.clean_test =
        gen_synthetic(cfg.num_classes, cfg.test_samples_per_class, cfg.channels, cfg.height,
                      cfg.width, cfg.noise_sigma, stage_seed(cfg.seed, kStreamTestData));
  } else if (cfg.source == "idx") {
    d.clean_train = load_idx(cfg.train_images, cfg.train_labels);
    d.clean_test = load_idx(cfg.test_images, cfg.test_labels);
  } else {
    throw DomainError("unknown data source '" + cfg.source + "'");
  }
  d.trigger = cfg.build_trigger();
  d.tm = cfg.build_target_map();
  d.poisoned_train = poison_dataset(d.clean_train, d.trigger, d.tm, cfg.ratio,
                                    stage_seed(cfg.seed, kStreamPoison), cfg.clean_label);
  return d;
}

DefenseOutcome run_defense(const Model& poisoned, const PipelineData& data,
                           const ExperimentConfig& cfg) {
  LabeledDataset defense_set = select_defense_set(data.clean_train, cfg.clean_budget,
                                                  stage_seed(cfg.seed, kStreamDefenseSet));
  ModelPair pair = ModelPair::make(poisoned, cfg.sau.freeze_norm);
  const std::uint64_t bd_hash = model_hash(pair.frozen);
  SauConfig sc = cfg.sau;
  sc.seed = stage_seed(cfg.seed, kStreamDefense);
  EvalCallback epoch_eval = [&](const Model& m) {
    MetricSet ms = compute_metrics(m, data.clean_test, data.trigger, data.tm);
    return EpochEval{ms.acc, ms.asr, ms.r_acc};
  };
  DefenseOutcome out;
  out.run = run_sau(pair, defense_set, sc, epoch_eval);
  if (model_hash(pair.frozen) != bd_hash) {
    throw ContractError("defend: frozen parameters changed during the run");
  }
  out.purified = pair.trainable;
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir);
  StageGuard guard{cfg.out_dir};

  guard.stage = "gen-data";
  PipelineData data = prepare_data(cfg);
  const LabeledDataset& clean_test = data.clean_test;
  const TriggerSpec& trigger = data.trigger;
  const TargetMap& tm = data.tm;
  const LabeledDataset& poisoned = data.poisoned_train;

  // train the backdoored model
  guard.stage = "train";
  TrainOptions topt;
  topt.epochs = cfg.train_epochs;
  topt.lr = cfg.train_lr;
  topt.momentum = cfg.train_momentum;
  topt.batch_size = cfg.train_batch_size;
  topt.asr_gate = cfg.ratio > 0.0f ? cfg.asr_gate : 0.0;
  topt.plateau_epochs = cfg.plateau_epochs;
  topt.plateau_delta = cfg.plateau_delta;
  TrainResult trained =
      train_poisoned(cfg.build_model_config(), poisoned, clean_test, trigger, tm, topt, cfg.seed);
  {
    std::ofstream log(cfg.out_dir + "/train.log", std::ios::trunc);
    for (const std::string& line : trained.log) log << line << "\n";
  }
  save_checkpoint(trained.model, cfg.out_dir + "/theta_bd.ckpt");

  ExperimentReport report;
  report.config_echo = cfg.raw_text;
  report.before = compute_metrics(trained.model, clean_test, trigger, tm);

  // defend
  guard.stage = "defend";
  Model purified = trained.model;
  std::string epoch_log_path = "-";
  if (cfg.variant != "none") {
    DefenseOutcome defense = run_defense(trained.model, data, cfg);
    purified = defense.purified;
    epoch_log_path = cfg.out_dir + "/epochs.log";
    std::ofstream log(epoch_log_path, std::ios::trunc);
    for (const EpochLog& e : defense.run.log) log << e.to_line() << "\n";
    save_checkpoint(purified, cfg.out_dir + "/purified.ckpt");
  }

  // evaluate
  guard.stage = "eval";
  report.after = compute_metrics(purified, clean_test, trigger, tm);
  report.der_value = der(report.before.acc, report.before.asr, report.after.acc, report.after.asr);
  report.epoch_log_path = epoch_log_path;

  if (cfg.risk_report) {
    ModelPair pair;
    pair.frozen = trained.model.clone();
    pair.frozen.set_requires_grad(false);
    pair.trainable = purified.clone();
    pair.trainable.set_requires_grad(false);
    std::vector<int> head(static_cast<std::size_t>(std::min(clean_test.size(), 64)));
    std::iota(head.begin(), head.end(), 0);
    report.risks = compute_risk_report(pair, trigger, tm, clean_test.subset(head), cfg.build_set(),
                                       RiskSolver::PgdLowerBound, /*include_universal=*/false,
                                       /*include_targeted=*/tm.mode == TargetMode::AllToOne,
                                       PgdOptions{cfg.sau.pgd_steps, cfg.sau.pgd_step_size});
  }

  if (cfg.verify_bounds) {
    guard.stage = "verify-bounds";
    BoundsSummary bounds = verify_bounds_run(cfg.grid_instances, cfg.seed);
    if (bounds.violations != 0) {
      throw NumericError("verify-bounds: " + std::to_string(bounds.violations) +
                         " inequality violations");
    }
  }

  // report
  guard.stage = "report";
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ofstream out(cfg.out_dir + "/report.txt", std::ios::trunc);
    out << emit_report(report);
  }
  {
    SummaryRow row{cfg.trigger_kind, cfg.variant, report.before, report.after, report.der_value};
    std::ofstream out(cfg.out_dir + "/summary.csv", std::ios::trunc);
    out << summary_csv({row});
  }
  guard.completed = true;
  return report;
}

ExperimentReport run_experiment_file(const std::string& config_path,
                                     std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_override) cfg.seed = *seed_override;
  return run_experiment(cfg);
}

BoundsSummary verify_bounds_run(int instances, std::uint64_t seed, bool include_all_to_all) {
  BoundsSummary summary;
  summary.instances = instances;
  for (int i = 0; i < instances; ++i) {
    InstanceOptions opt;
    opt.all_to_all = include_all_to_all && (i % 5 == 4);
    GridInstance inst = make_grid_instance(Rng(seed).split(static_cast<std::uint64_t>(i)).next_u64(),
                                           opt);
    const bool targeted = inst.tm.mode == TargetMode::AllToOne;
    RiskReport r = compute_risk_report(inst.pair, inst.trigger, inst.tm, inst.data, inst.grid,
                                       RiskSolver::ExactGrid, /*include_universal=*/true,
                                       /*include_targeted=*/targeted);
    ChainVerdict verdict = verify_chain(r);
    for (const InequalityCheck& c : verdict.checks) {
      if (!c.ok) {
        ++summary.violations;
        summary.failures.push_back("instance " + std::to_string(i) + ": " + c.name);
      }
      if (c.name == "r_bd <= r_sub") {
        summary.min_slack_bd_sub = std::min(summary.min_slack_bd_sub, c.slack);
      }
      if (c.name == "r_sub <= r_adv") {
        summary.min_slack_sub_adv = std::min(summary.min_slack_sub_adv, c.slack);
      }
    }
    RelaxationGaps gaps = relaxation_gap_bounds(inst.pair, inst.trigger, inst.tm, inst.data,
                                                inst.grid, RiskSolver::ExactGrid);
    summary.max_gap1_margin = std::max(summary.max_gap1_margin, gaps.gap1 - gaps.bound1);
    if (!gaps.gap1_within_bound) {
      ++summary.violations;
      summary.failures.push_back("instance " + std::to_string(i) + ": gap1 > bound1");
    }
    if (!gaps.decomposition_exact) {
      ++summary.violations;
      summary.failures.push_back("instance " + std::to_string(i) + ": r_share decomposition");
    }
  }
  return summary;
}

}  // namespace sau
