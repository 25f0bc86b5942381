#include "saulab/engine/sau.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "saulab/core/autograd.hpp"
#include "saulab/core/error.hpp"
#include "saulab/core/ops.hpp"
#include "saulab/core/rng.hpp"

namespace sau {

void SauConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || lambda4 < 0) {
    throw DomainError("trade-off weights must be nonnegative");
  }
  if (pgd_steps < 1) throw DomainError("pgd_steps must be >= 1");
  if (pgd_step_size <= 0) throw DomainError("pgd_step_size must be positive");
  if (learning_rate <= 0) throw DomainError("learning rate must be positive");
  if (epochs < 0) throw DomainError("epochs must be nonnegative");
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
}

Tensor loss_cl(const Model& model, const Tensor& x, const std::vector<int>& labels,
               bool training) {
  return cross_entropy_mean(model.forward(x, training), labels);
}

Tensor loss_adv(const ModelPair& pair, const Tensor& x_tilde, const std::vector<int>& labels) {
  Tensor a = cross_entropy_mean(pair.trainable.forward(x_tilde), labels);
  Tensor b = cross_entropy_mean(pair.frozen.forward(x_tilde), labels);
  return scale(add(a, b), 0.5f);
}

Tensor loss_share(const ModelPair& pair, const Tensor& x_tilde) {
  return neg(js_divergence_mean(pair.trainable.forward(x_tilde), pair.frozen.forward(x_tilde)));
}

Tensor loss_sar(const ModelPair& pair, const Tensor& x_tilde, const std::vector<int>& labels,
                bool training) {
  std::vector<int> bd_pred = pair.frozen.predict(x_tilde.detached());
  return sar_loss(pair.trainable.forward(x_tilde, training), bd_pred, labels);
}

namespace {

// Inner objective at the current perturbed batch; nullopt target for the
// untargeted variants.
Tensor inner_objective(const ModelPair& pair, const Tensor& x_tilde,
                       const std::vector<int>& labels, const SauConfig& cfg) {
  switch (cfg.variant) {
    case SauVariant::VanillaAt:
    case SauVariant::AblCB:
      return cross_entropy_mean(pair.trainable.forward(x_tilde), labels);
    case SauVariant::Targeted: {
      std::vector<int> target(labels.size(), cfg.targeted_label);
      Tensor towards = scale(add(cross_entropy_mean(pair.trainable.forward(x_tilde), target),
                                 cross_entropy_mean(pair.frozen.forward(x_tilde), target)),
                             -0.5f);
      return add(scale(towards, cfg.lambda3), scale(loss_share(pair, x_tilde), cfg.lambda4));
    }
    case SauVariant::Sau:
    case SauVariant::AblAD:
    case SauVariant::Uap:
    default:
      return add(scale(loss_adv(pair, x_tilde, labels), cfg.lambda3),
                 scale(loss_share(pair, x_tilde), cfg.lambda4));
  }
}

void project_eps(Tensor& eps, const PerturbationSet& set, bool per_sample) {
  if (!per_sample) {
    eps = project(eps, set);
    return;
  }
  const int n = eps.dim(0);
  const std::int64_t stride = eps.size() / n;
  Shape one(eps.shape().begin() + 1, eps.shape().end());
  for (int i = 0; i < n; ++i) {
    Tensor row = Tensor::from_data(
        one, std::vector<float>(eps.data() + i * stride, eps.data() + (i + 1) * stride));
    Tensor proj = project(row, set);
    ArrayMap(eps.data() + i * stride, stride) = proj.array();
  }
}

}  // namespace

InnerResult inner_maximize(const ModelPair& pair, const Tensor& batch_x,
                           const std::vector<int>& batch_y, const SauConfig& cfg,
                           Tensor* persistent_eps) {
  const bool uap = cfg.variant == SauVariant::Uap;
  if (uap && persistent_eps == nullptr) {
    throw ContractError("UAP mode needs the persistent perturbation buffer");
  }

  InnerResult result;
  Tensor eps = uap ? *persistent_eps : Tensor::zeros(batch_x.shape());

  for (int step = 0; step < cfg.pgd_steps; ++step) {
    eps.set_requires_grad(true);
    eps.zero_grad();
    float value = 0.0f;
    {
      GradTape tape;
      Tensor xt = uap ? add_sample_broadcast(batch_x, eps) : add(batch_x, eps);
      if (cfg.clamp_inputs) xt = clamp01(xt);
      Tensor obj = inner_objective(pair, xt, batch_y, cfg);
      value = obj.item();
      tape.backward(obj);
    }
    result.objective_trajectory.push_back(value);
    if (!eps.grad().isFinite().all()) {
      throw NumericError("inner maximization: non-finite gradient at step " +
                         std::to_string(step));
    }
    Tensor ascent = Tensor::zeros(eps.shape());
    ascent.array() = eps.array() + cfg.pgd_step_size * eps.grad().sign();
    eps.set_requires_grad(false);
    eps = ascent;
    project_eps(eps, cfg.set, /*per_sample=*/!uap);
  }
  eps.set_requires_grad(false);

  // Shared-AE tally at the final perturbation.
  {
    Tensor xt = uap ? add_sample_broadcast(batch_x, eps) : add(batch_x, eps);
    if (cfg.clamp_inputs) xt = clamp01(xt);
    std::vector<int> pt = pair.trainable.predict(xt);
    std::vector<int> pb = pair.frozen.predict(xt);
    for (std::size_t i = 0; i < batch_y.size(); ++i) {
      if (pt[i] == pb[i] && pt[i] != batch_y[i]) ++result.shared_ae_count;
    }
  }

  if (uap) *persistent_eps = eps;
  result.eps = eps;
  return result;
}

OuterStepResult outer_step(ModelPair& pair, const Tensor& batch_x,
                           const std::vector<int>& batch_y, const Tensor& eps_star,
                           const SauConfig& cfg, OptimizerState& opt) {
  const bool uap = cfg.variant == SauVariant::Uap;
  Tensor eps = eps_star.detached();
  Tensor x_tilde = uap ? add_sample_broadcast(batch_x, eps) : add(batch_x, eps);
  if (cfg.clamp_inputs) x_tilde = clamp01(x_tilde);

  pair.trainable.zero_grad();
  OuterStepResult res;
  {
    GradTape tape;
    Tensor clean = loss_cl(pair.trainable, batch_x, batch_y, /*training=*/true);
    Tensor unlearn;
    if (cfg.variant == SauVariant::VanillaAt || cfg.variant == SauVariant::AblAD) {
      unlearn = cross_entropy_mean(pair.trainable.forward(x_tilde, /*training=*/true), batch_y);
    } else {
      unlearn = loss_sar(pair, x_tilde, batch_y, /*training=*/true);
    }
    res.loss_cl_value = clean.item();
    res.loss_unlearn_value = unlearn.item();
    Tensor total = add(scale(clean, cfg.lambda1), scale(unlearn, cfg.lambda2));
    tape.backward(total);
  }
  optimizer_step(opt, pair.trainable.params());
  return res;
}

namespace {

SauRunResult run_loop(ModelPair& pair, const LabeledDataset& clean, const SauConfig& cfg,
                      const EvalCallback& eval) {
  cfg.validate();
  if (clean.size() == 0) throw DomainError("empty defense dataset");
  if (cfg.freeze_norm) {
    freeze_norm_stats(pair.trainable);
    freeze_norm_stats(pair.frozen);
    pair.norm_stats_frozen = true;
  }

  OptimizerState opt = cfg.optimizer == OptimizerKind::Adam
                           ? OptimizerState::adam(cfg.learning_rate)
                           : OptimizerState::sgd(cfg.learning_rate, cfg.momentum);

  const Shape& s = clean.images.shape();
  Tensor uap_eps = Tensor::zeros({s[1], s[2], s[3]});
  const bool uap = cfg.variant == SauVariant::Uap;

  SauRunResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(static_cast<std::size_t>(clean.size()));
    std::iota(order.begin(), order.end(), 0);
    Rng epoch_rng = Rng(cfg.seed).split(static_cast<std::uint64_t>(epoch) + 1);
    epoch_rng.shuffle(order);

    double sum_cl = 0.0, sum_unlearn = 0.0, sum_inner = 0.0;
    int batches = 0;
    for (int start = 0; start < clean.size(); start += cfg.batch_size) {
      const int end = std::min(start + cfg.batch_size, clean.size());
      std::vector<int> idx(order.begin() + start, order.begin() + end);
      LabeledDataset batch = clean.subset(idx);
      InnerResult inner =
          inner_maximize(pair, batch.images, batch.labels, cfg, uap ? &uap_eps : nullptr);
      OuterStepResult st = outer_step(pair, batch.images, batch.labels, inner.eps, cfg, opt);
      sum_cl += st.loss_cl_value;
      sum_unlearn += st.loss_unlearn_value;
      sum_inner += inner.objective_trajectory.empty() ? 0.0f : inner.objective_trajectory.back();
      ++batches;
    }

    EpochLog log;
    log.epoch = epoch;
    log.loss_cl = static_cast<float>(sum_cl / batches);
    log.loss_sar = static_cast<float>(sum_unlearn / batches);
    log.inner_obj = static_cast<float>(sum_inner / batches);
    if (eval) log.eval = eval(pair.trainable);
    result.log.push_back(std::move(log));
  }
  return result;
}

}  // namespace

SauRunResult run_sau(ModelPair& pair, const LabeledDataset& clean, const SauConfig& cfg,
                     const EvalCallback& eval) {
  return run_loop(pair, clean, cfg, eval);
}

SauRunResult run_uap_variant(ModelPair& pair, const LabeledDataset& clean, const SauConfig& cfg,
                             const EvalCallback& eval) {
  SauConfig c = cfg;
  c.variant = SauVariant::Uap;
  return run_loop(pair, clean, c, eval);
}

SauRunResult run_targeted_variant(ModelPair& pair, const LabeledDataset& clean, int target_label,
                                  const SauConfig& cfg, const EvalCallback& eval) {
  SauConfig c = cfg;
  c.variant = SauVariant::Targeted;
  c.targeted_label = target_label;
  return run_loop(pair, clean, c, eval);
}

std::string EpochLog::to_line() const {
  char buf[256];
  if (eval) {
    std::snprintf(buf, sizeof buf,
                  "epoch %d loss_cl %.6f loss_sar %.6f inner_obj %.6f acc %.4f asr %.4f "
                  "r_acc %.4f",
                  epoch, loss_cl, loss_sar, inner_obj, eval->acc, eval->asr, eval->r_acc);
  } else {
    std::snprintf(buf, sizeof buf, "epoch %d loss_cl %.6f loss_sar %.6f inner_obj %.6f", epoch,
                  loss_cl, loss_sar, inner_obj);
  }
  return std::string(buf);
}

const char* variant_name(SauVariant v) {
  switch (v) {
    case SauVariant::Sau:
      return "sau";
    case SauVariant::VanillaAt:
      return "vanilla_at";
    case SauVariant::AblAD:
      return "abl_AD";
    case SauVariant::AblCB:
      return "abl_CB";
    case SauVariant::Uap:
      return "uap";
    case SauVariant::Targeted:
      return "targeted";
  }
  return "?";
}

SauVariant variant_from_name(const std::string& name) {
  if (name == "sau") return SauVariant::Sau;
  if (name == "vanilla_at") return SauVariant::VanillaAt;
  if (name == "abl_AD") return SauVariant::AblAD;
  if (name == "abl_CB") return SauVariant::AblCB;
  if (name == "uap") return SauVariant::Uap;
  if (name == "targeted") return SauVariant::Targeted;
  throw DomainError("unknown defense variant '" + name + "'");
}

}  // namespace sau
