#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "saulab/core/optimizer.hpp"
#include "saulab/core/projection.hpp"
#include "saulab/forge/dataset.hpp"
#include "saulab/zoo/model.hpp"

namespace sau {

// sau        = shared-AE maximization + unlearning minimization (A+B)
// vanilla_at = plain adversarial training (C+D)
// abl_AD     = shared-AE maximization + vanilla-AT minimization
// abl_CB     = vanilla maximization + unlearning minimization
// uap        = sau with one persistent perturbation shared across samples
// targeted   = sau with the inner CE terms aimed at a known target label
enum class SauVariant { Sau, VanillaAt, AblAD, AblCB, Uap, Targeted };

struct SauConfig {
  float lambda1 = 1.0f;
  float lambda2 = 1.0f;
  float lambda3 = 0.01f;
  float lambda4 = 1.0f;
  int pgd_steps = 5;
  float pgd_step_size = 0.2f;
  PerturbationSet set = PerturbationSet::linf_ball(0.2f);
  OptimizerKind optimizer = OptimizerKind::Adam;
  float learning_rate = 1e-4f;
  float momentum = 0.9f;  // sgd only
  int epochs = 30;
  int batch_size = 10;
  std::uint64_t seed = 0;
  SauVariant variant = SauVariant::Sau;
  int targeted_label = 0;
  bool freeze_norm = true;
  bool clamp_inputs = false;  // clamp x+eps to [0,1] inside the inner loop

  void validate() const;
};

// ---- surrogate losses ----

// Mean CE of the model's prediction against the labels.
Tensor loss_cl(const Model& model, const Tensor& x, const std::vector<int>& labels,
               bool training = false);

// Mean of 1/2 (CE through the trainable model + CE through the frozen one).
// The frozen parameters receive no gradient; perturbation gradients flow
// through both terms.
Tensor loss_adv(const ModelPair& pair, const Tensor& x_tilde, const std::vector<int>& labels);

// Negative Jensen-Shannon divergence between the two predictive
// distributions; 0 when the models agree exactly, -ln 2 at disjoint one-hots.
Tensor loss_share(const ModelPair& pair, const Tensor& x_tilde);

// Unlearning loss: with y~ the frozen model's prediction on x~, penalizes
// -log(1 - p_y~(x~)) through the trainable model wherever y~ != y.
Tensor loss_sar(const ModelPair& pair, const Tensor& x_tilde, const std::vector<int>& labels,
                bool training = false);

// ---- the bi-level loop ----

struct InnerResult {
  Tensor eps;  // per-sample [B,...], or the shared buffer shape in UAP mode
  std::vector<float> objective_trajectory;  // value before each ascent step
  int shared_ae_count = 0;                  // shared AEs in the batch at the final eps
};

// Sign-ascent PGD on the variant's inner objective, starting from zero
// (or from *persistent_eps in UAP mode, which is updated in place).
// Model parameters and frozen normalization statistics are untouched.
InnerResult inner_maximize(const ModelPair& pair, const Tensor& batch_x,
                           const std::vector<int>& batch_y, const SauConfig& cfg,
                           Tensor* persistent_eps = nullptr);

struct OuterStepResult {
  float loss_cl_value = 0.0f;
  float loss_unlearn_value = 0.0f;  // L_sar, or adversarial CE for the AT variants
};

// One optimizer update of the trainable parameters on the variant's outer
// objective; the frozen model is never touched.
OuterStepResult outer_step(ModelPair& pair, const Tensor& batch_x,
                           const std::vector<int>& batch_y, const Tensor& eps_star,
                           const SauConfig& cfg, OptimizerState& opt);

struct EpochEval {
  double acc = 0.0, asr = 0.0, r_acc = 0.0;
};
using EvalCallback = std::function<EpochEval(const Model& purified)>;

struct EpochLog {
  int epoch = 0;
  float loss_cl = 0.0f;
  float loss_sar = 0.0f;
  float inner_obj = 0.0f;
  std::optional<EpochEval> eval;

  std::string to_line() const;
};

struct SauRunResult {
  std::vector<EpochLog> log;
};

// Algorithm: T epochs of per-batch inner maximization + outer update over a
// seeded shuffle of the clean set. Deterministic for a fixed config.
// The optional callback computes ACC/ASR/R-ACC per epoch.
SauRunResult run_sau(ModelPair& pair, const LabeledDataset& clean, const SauConfig& cfg,
                     const EvalCallback& eval = nullptr);

// One persistent perturbation shared across all samples, updated per batch.
SauRunResult run_uap_variant(ModelPair& pair, const LabeledDataset& clean, const SauConfig& cfg,
                             const EvalCallback& eval = nullptr);

// Inner CE terms aimed at the (estimated) target label.
SauRunResult run_targeted_variant(ModelPair& pair, const LabeledDataset& clean, int target_label,
                                  const SauConfig& cfg, const EvalCallback& eval = nullptr);

const char* variant_name(SauVariant v);
SauVariant variant_from_name(const std::string& name);

}  // namespace sau
