#include "saulab/risk/risk.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "saulab/core/error.hpp"
#include "saulab/core/ops.hpp"

namespace sau {

namespace {

// x_i + eps for every sample, eps broadcast over the batch.
Tensor add_broadcast(const Tensor& images, const Tensor& eps) {
  if (eps.size() * images.dim(0) != images.size()) {
    throw ShapeError("perturbation size does not match one sample");
  }
  Tensor out = Tensor::zeros(images.shape());
  const std::int64_t stride = eps.size();
  for (int i = 0; i < images.dim(0); ++i) {
    ArrayMap(out.data() + i * stride, stride) =
        ConstArrayMap(images.data() + i * stride, stride) + eps.array();
  }
  return out;
}

void require_nonempty(const LabeledDataset& data) {
  if (data.size() == 0) throw DomainError("empty dataset");
}

std::vector<char> eligibility(const LabeledDataset& data, const TargetMap& tm) {
  std::vector<char> e(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) {
    e[i] = map_target(data.labels[i], tm) != data.labels[i] ? 1 : 0;
  }
  return e;
}

long count_of(const std::vector<char>& v) {
  long n = 0;
  for (char c : v) n += c ? 1 : 0;
  return n;
}

// Predictions of both models on the clean, triggered and grid-perturbed
// dataset; everything the exact risks need.
struct Tables {
  int n = 0;
  int g = 0;
  std::vector<int> labels;
  std::vector<int> targets;
  std::vector<char> eligible;
  std::vector<char> in_ds;
  std::vector<int> base_theta, base_bd;
  std::vector<int> trig_theta, trig_bd;
  std::vector<std::vector<int>> pert_theta, pert_bd;  // [grid][sample]
  long d_minus = 0, d_s = 0;
};

Tables build_tables(const ModelPair& pair, const TriggerSpec& trigger, const TargetMap& tm,
                    const LabeledDataset& data, const PerturbationSet& grid) {
  require_nonempty(data);
  if (grid.kind != SetKind::FiniteGrid) {
    throw SolverMismatchError("exact risks require a finite perturbation grid, got " +
                              std::string(set_kind_name(grid.kind)));
  }
  Tables t;
  t.n = data.size();
  t.g = static_cast<int>(grid.grid_points.size());
  t.labels = data.labels;
  t.eligible = eligibility(data, tm);
  t.base_theta = pair.trainable.predict(data.images);
  t.base_bd = pair.frozen.predict(data.images);
  Tensor triggered = apply_trigger(data.images, trigger);
  t.trig_theta = pair.trainable.predict(triggered);
  t.trig_bd = pair.frozen.predict(triggered);
  t.targets.resize(static_cast<std::size_t>(t.n));
  t.in_ds.resize(static_cast<std::size_t>(t.n));
  for (int i = 0; i < t.n; ++i) {
    t.targets[i] = map_target(data.labels[i], tm);
    t.in_ds[i] = (t.eligible[i] && t.trig_bd[i] == t.targets[i]) ? 1 : 0;
  }
  t.d_minus = count_of(t.eligible);
  t.d_s = count_of(t.in_ds);
  for (const Tensor& eps : grid.grid_points) {
    Tensor shifted = add_broadcast(data.images, eps);
    t.pert_theta.push_back(pair.trainable.predict(shifted));
    t.pert_bd.push_back(pair.frozen.predict(shifted));
  }
  return t;
}

bool type1_at(const Tables& t, int g, int i) {
  return t.pert_bd[g][i] == t.pert_theta[g][i] && t.pert_theta[g][i] != t.labels[i];
}

// Per-sample projection for batched perturbations.
void project_batch(Tensor& eps, const PerturbationSet& set) {
  const int n = eps.dim(0);
  const std::int64_t stride = eps.size() / n;
  Shape per_shape(eps.shape().begin() + 1, eps.shape().end());
  for (int i = 0; i < n; ++i) {
    Tensor row = Tensor::from_data(per_shape,
                                   std::vector<float>(eps.data() + i * stride,
                                                      eps.data() + (i + 1) * stride));
    Tensor proj = project(row, set);
    ArrayMap(eps.data() + i * stride, stride) = proj.array();
  }
}

enum class PgdObjective { VanillaCe, SharedSurrogate, TargetedCe };

// Sign-PGD on the chosen surrogate; returns the final x + eps batch.
// Weights for the shared surrogate follow the defense defaults.
Tensor pgd_perturb(const ModelPair& pair, const LabeledDataset& data, const PerturbationSet& set,
                   const PgdOptions& opt, PgdObjective objective, int target_label) {
  Tensor eps = Tensor::zeros(data.images.shape());
  std::vector<int> target_vec(static_cast<std::size_t>(data.size()), target_label);
  for (int step = 0; step < opt.steps; ++step) {
    eps.set_requires_grad(true);
    eps.zero_grad();
    {
      GradTape tape;
      Tensor xt = add(data.images, eps);
      Tensor objective_value;
      switch (objective) {
        case PgdObjective::VanillaCe: {
          objective_value = cross_entropy_mean(pair.trainable.forward(xt), data.labels);
          break;
        }
        case PgdObjective::SharedSurrogate: {
          Tensor p = pair.trainable.forward(xt);
          Tensor q = pair.frozen.forward(xt);
          Tensor l_adv = scale(add(cross_entropy_mean(p, data.labels),
                                   cross_entropy_mean(q, data.labels)),
                               0.5f);
          Tensor l_share = neg(js_divergence_mean(p, q));
          objective_value = add(scale(l_adv, 0.01f), l_share);
          break;
        }
        case PgdObjective::TargetedCe: {
          Tensor p = pair.trainable.forward(xt);
          Tensor q = pair.frozen.forward(xt);
          Tensor towards = scale(add(cross_entropy_mean(p, target_vec),
                                     cross_entropy_mean(q, target_vec)),
                                 -0.5f);
          objective_value = add(scale(towards, 0.01f), neg(js_divergence_mean(p, q)));
          break;
        }
      }
      tape.backward(objective_value);
    }
    Tensor g = Tensor::zeros(eps.shape());
    g.array() = eps.grad();
    eps.set_requires_grad(false);
    eps.array() += opt.step_size * g.array().sign();
    project_batch(eps, set);
  }
  Tensor out = Tensor::zeros(data.images.shape());
  out.array() = data.images.array() + eps.array();
  return out;
}

}  // namespace

double classification_risk(const Model& model, const LabeledDataset& data,
                           bool use_original_labels) {
  require_nonempty(data);
  const std::vector<int>& labels = use_original_labels ? data.original_labels : data.labels;
  std::vector<int> pred = model.predict(data.images);
  long wrong = 0;
  for (int i = 0; i < data.size(); ++i) wrong += pred[i] != labels[i] ? 1 : 0;
  return static_cast<double>(wrong) / data.size();
}

double backdoor_risk(const Model& model, const TriggerSpec& trigger, const TargetMap& tm,
                     const LabeledDataset& data) {
  require_nonempty(data);
  std::vector<char> eligible = eligibility(data, tm);
  const long denom = count_of(eligible);
  if (denom == 0) throw DomainError("no samples outside the target class");
  std::vector<int> pred = model.predict(apply_trigger(data.images, trigger));
  long hits = 0;
  for (int i = 0; i < data.size(); ++i) {
    if (eligible[i] && pred[i] == map_target(data.labels[i], tm)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(denom);
}

double backdoor_risk_multi(const Model& model, const std::vector<TriggerTargetPair>& pairs,
                           const LabeledDataset& data) {
  require_nonempty(data);
  if (pairs.empty()) throw DomainError("no trigger/target pairs");
  std::vector<char> any_eligible(static_cast<std::size_t>(data.size()), 0);
  std::vector<char> hit(static_cast<std::size_t>(data.size()), 0);
  for (const TriggerTargetPair& p : pairs) {
    std::vector<char> eligible = eligibility(data, p.tm);
    std::vector<int> pred = model.predict(apply_trigger(data.images, p.trigger));
    for (int i = 0; i < data.size(); ++i) {
      if (!eligible[i]) continue;
      any_eligible[i] = 1;
      if (pred[i] == map_target(data.labels[i], p.tm)) hit[i] = 1;
    }
  }
  const long denom = count_of(any_eligible);
  if (denom == 0) throw DomainError("no eligible samples under any pair");
  return static_cast<double>(count_of(hit)) / static_cast<double>(denom);
}

double adversarial_risk(const Model& model, const TargetMap& tm, const LabeledDataset& data,
                        const PerturbationSet& set, RiskSolver solver, const PgdOptions& pgd) {
  require_nonempty(data);
  std::vector<char> eligible = eligibility(data, tm);
  const long denom = count_of(eligible);
  if (denom == 0) throw DomainError("no samples outside the target class");

  std::vector<char> adversarial(static_cast<std::size_t>(data.size()), 0);
  if (solver == RiskSolver::ExactGrid) {
    if (set.kind != SetKind::FiniteGrid) {
      throw SolverMismatchError("exact solver requires a finite grid");
    }
    for (const Tensor& eps : set.grid_points) {
      std::vector<int> pred = model.predict(add_broadcast(data.images, eps));
      for (int i = 0; i < data.size(); ++i) {
        if (pred[i] != data.labels[i]) adversarial[i] = 1;
      }
    }
  } else {
    ModelPair wrapper;
    wrapper.trainable = model;
    wrapper.frozen = model;
    Tensor xt = pgd_perturb(wrapper, data, set, pgd, PgdObjective::VanillaCe, 0);
    std::vector<int> pred = model.predict(xt);
    for (int i = 0; i < data.size(); ++i) {
      if (pred[i] != data.labels[i]) adversarial[i] = 1;
    }
  }
  long total = 0;
  for (int i = 0; i < data.size(); ++i) total += (eligible[i] && adversarial[i]) ? 1 : 0;
  return static_cast<double>(total) / static_cast<double>(denom);
}

AEType classify_ae_type(const ModelPair& pair, const Tensor& x_tilde, int label) {
  Tensor batch = x_tilde.rank() == 4
                     ? x_tilde
                     : reshape(x_tilde, [&] {
                         Shape s = x_tilde.shape();
                         s.insert(s.begin(), 1);
                         return s;
                       }());
  const int p_theta = pair.trainable.predict(batch)[0];
  const int p_bd = pair.frozen.predict(batch)[0];
  if (p_theta == label) return AEType::NotAdversarial;
  if (p_bd == p_theta) return AEType::TypeI;
  if (p_bd == label) return AEType::TypeII;
  return AEType::TypeIII;
}

double sub_adversarial_risk(const ModelPair& pair, const TriggerSpec& trigger, const TargetMap& tm,
                            const LabeledDataset& data, const PerturbationSet& set,
                            RiskSolver solver, const PgdOptions& pgd) {
  if (solver == RiskSolver::ExactGrid) {
    Tables t = build_tables(pair, trigger, tm, data, set);
    if (t.d_minus == 0) throw DomainError("no samples outside the target class");
    long total = 0;
    for (int i = 0; i < t.n; ++i) {
      if (!t.eligible[i]) continue;
      bool ind = false;
      for (int g = 0; g < t.g && !ind; ++g) {
        ind = t.in_ds[i] ? type1_at(t, g, i) : t.pert_theta[g][i] != t.labels[i];
      }
      total += ind ? 1 : 0;
    }
    return static_cast<double>(total) / static_cast<double>(t.d_minus);
  }

  require_nonempty(data);
  std::vector<char> eligible = eligibility(data, tm);
  const long denom = count_of(eligible);
  if (denom == 0) throw DomainError("no samples outside the target class");
  std::vector<int> trig_bd = pair.frozen.predict(apply_trigger(data.images, trigger));
  Tensor shared_xt = pgd_perturb(pair, data, set, pgd, PgdObjective::SharedSurrogate, 0);
  Tensor vanilla_xt = pgd_perturb(pair, data, set, pgd, PgdObjective::VanillaCe, 0);
  std::vector<int> sh_theta = pair.trainable.predict(shared_xt);
  std::vector<int> sh_bd = pair.frozen.predict(shared_xt);
  std::vector<int> va_theta = pair.trainable.predict(vanilla_xt);
  long total = 0;
  for (int i = 0; i < data.size(); ++i) {
    if (!eligible[i]) continue;
    const bool in_ds = trig_bd[i] == map_target(data.labels[i], tm);
    const bool ind = in_ds ? (sh_bd[i] == sh_theta[i] && sh_theta[i] != data.labels[i])
                           : va_theta[i] != data.labels[i];
    total += ind ? 1 : 0;
  }
  return static_cast<double>(total) / static_cast<double>(denom);
}

double shared_adversarial_risk(const ModelPair& pair, const LabeledDataset& data,
                               const PerturbationSet& set, RiskSolver solver,
                               const PgdOptions& pgd) {
  require_nonempty(data);
  std::vector<char> shared(static_cast<std::size_t>(data.size()), 0);
  if (solver == RiskSolver::ExactGrid) {
    if (set.kind != SetKind::FiniteGrid) {
      throw SolverMismatchError("exact solver requires a finite grid");
    }
    for (const Tensor& eps : set.grid_points) {
      Tensor shifted = add_broadcast(data.images, eps);
      std::vector<int> pt = pair.trainable.predict(shifted);
      std::vector<int> pb = pair.frozen.predict(shifted);
      for (int i = 0; i < data.size(); ++i) {
        if (pt[i] == pb[i] && pt[i] != data.labels[i]) shared[i] = 1;
      }
    }
  } else {
    Tensor xt = pgd_perturb(pair, data, set, pgd, PgdObjective::SharedSurrogate, 0);
    std::vector<int> pt = pair.trainable.predict(xt);
    std::vector<int> pb = pair.frozen.predict(xt);
    for (int i = 0; i < data.size(); ++i) {
      if (pt[i] == pb[i] && pt[i] != data.labels[i]) shared[i] = 1;
    }
  }
  return static_cast<double>(count_of(shared)) / data.size();
}

UniversalRisks universal_risks(const ModelPair& pair, const TriggerSpec& trigger,
                               const TargetMap& tm, const LabeledDataset& data,
                               const PerturbationSet& grid) {
  Tables t = build_tables(pair, trigger, tm, data, grid);
  if (t.d_minus == 0) throw DomainError("no samples outside the target class");
  UniversalRisks out;
  for (int g = 0; g < t.g; ++g) {
    long uadv = 0, usub = 0;
    for (int i = 0; i < t.n; ++i) {
      if (!t.eligible[i]) continue;
      if (t.pert_theta[g][i] != t.labels[i]) ++uadv;
      if (t.in_ds[i] ? type1_at(t, g, i) : t.pert_theta[g][i] != t.labels[i]) ++usub;
    }
    out.n_uadv = std::max(out.n_uadv, uadv);
    out.n_usub = std::max(out.n_usub, usub);
  }
  out.r_uadv = static_cast<double>(out.n_uadv) / static_cast<double>(t.d_minus);
  out.r_usub = static_cast<double>(out.n_usub) / static_cast<double>(t.d_minus);
  return out;
}

TargetedRisks targeted_risks(const ModelPair& pair, const TriggerSpec& trigger,
                             const TargetMap& tm, const LabeledDataset& data,
                             const PerturbationSet& set, RiskSolver solver,
                             const PgdOptions& pgd) {
  TargetedRisks out;
  if (solver == RiskSolver::ExactGrid) {
    Tables t = build_tables(pair, trigger, tm, data, set);
    if (t.d_minus == 0) throw DomainError("no samples outside the target class");
    for (int i = 0; i < t.n; ++i) {
      if (!t.eligible[i]) continue;
      bool tadv = false, tsub = false;
      for (int g = 0; g < t.g; ++g) {
        const bool on_target = t.pert_theta[g][i] == t.targets[i];
        tadv = tadv || on_target;
        tsub = tsub || (t.in_ds[i] ? (on_target && t.pert_bd[g][i] == t.targets[i]) : on_target);
      }
      out.n_tadv += tadv ? 1 : 0;
      out.n_tsub += tsub ? 1 : 0;
    }
    out.r_tadv = static_cast<double>(out.n_tadv) / static_cast<double>(t.d_minus);
    out.r_tsub = static_cast<double>(out.n_tsub) / static_cast<double>(t.d_minus);
    return out;
  }

  require_nonempty(data);
  std::vector<char> eligible = eligibility(data, tm);
  const long denom = count_of(eligible);
  if (denom == 0) throw DomainError("no samples outside the target class");
  if (tm.mode != TargetMode::AllToOne) {
    throw DomainError("targeted lower bound needs a single target label");
  }
  std::vector<int> trig_bd = pair.frozen.predict(apply_trigger(data.images, trigger));
  Tensor xt = pgd_perturb(pair, data, set, pgd, PgdObjective::TargetedCe, tm.target_label);
  std::vector<int> pt = pair.trainable.predict(xt);
  std::vector<int> pb = pair.frozen.predict(xt);
  for (int i = 0; i < data.size(); ++i) {
    if (!eligible[i]) continue;
    const bool in_ds = trig_bd[i] == tm.target_label;
    const bool on_target = pt[i] == tm.target_label;
    out.n_tadv += on_target ? 1 : 0;
    out.n_tsub += (in_ds ? (on_target && pb[i] == tm.target_label) : on_target) ? 1 : 0;
  }
  out.r_tadv = static_cast<double>(out.n_tadv) / static_cast<double>(denom);
  out.r_tsub = static_cast<double>(out.n_tsub) / static_cast<double>(denom);
  return out;
}

RiskReport compute_risk_report(const ModelPair& pair, const TriggerSpec& trigger,
                               const TargetMap& tm, const LabeledDataset& data,
                               const PerturbationSet& set, RiskSolver solver,
                               bool include_universal, bool include_targeted,
                               const PgdOptions& pgd) {
  RiskReport r;
  r.solver = solver;
  r.dataset_size = data.size();

  if (solver == RiskSolver::ExactGrid) {
    Tables t = build_tables(pair, trigger, tm, data, set);
    if (t.d_minus == 0) throw DomainError("no samples outside the target class");
    r.d_minus_target_size = t.d_minus;
    r.d_s_size = t.d_s;
    for (int i = 0; i < t.n; ++i) {
      r.n_cl += t.base_theta[i] != t.labels[i] ? 1 : 0;
      if (t.eligible[i] && t.trig_theta[i] == t.targets[i]) ++r.n_bd;
      bool adv = false, sub = false, share = false;
      for (int g = 0; g < t.g; ++g) {
        const bool miss = t.pert_theta[g][i] != t.labels[i];
        const bool t1 = type1_at(t, g, i);
        adv = adv || miss;
        share = share || t1;
        if (t.eligible[i]) sub = sub || (t.in_ds[i] ? t1 : miss);
        if (miss) {
          if (t1) {
            ++r.ae_type1;
          } else if (t.pert_bd[g][i] == t.labels[i]) {
            ++r.ae_type2;
          } else {
            ++r.ae_type3;
          }
        }
      }
      if (t.eligible[i]) {
        r.n_adv += adv ? 1 : 0;
        r.n_sub += sub ? 1 : 0;
      }
      r.n_share += share ? 1 : 0;
    }
    r.r_cl = static_cast<double>(r.n_cl) / r.dataset_size;
    r.r_bd = static_cast<double>(r.n_bd) / r.d_minus_target_size;
    r.r_adv = static_cast<double>(r.n_adv) / r.d_minus_target_size;
    r.r_sub = static_cast<double>(r.n_sub) / r.d_minus_target_size;
    r.r_share = static_cast<double>(r.n_share) / r.dataset_size;
    if (include_universal) {
      UniversalRisks u = universal_risks(pair, trigger, tm, data, set);
      r.r_uadv = u.r_uadv;
      r.r_usub = u.r_usub;
      r.n_uadv = u.n_uadv;
      r.n_usub = u.n_usub;
    }
    if (include_targeted) {
      TargetedRisks tg = targeted_risks(pair, trigger, tm, data, set, solver);
      r.r_tadv = tg.r_tadv;
      r.r_tsub = tg.r_tsub;
      r.n_tadv = tg.n_tadv;
      r.n_tsub = tg.n_tsub;
    }
    return r;
  }

  std::vector<char> eligible = eligibility(data, tm);
  r.d_minus_target_size = count_of(eligible);
  if (r.d_minus_target_size == 0) throw DomainError("no samples outside the target class");
  std::vector<int> trig_bd = pair.frozen.predict(apply_trigger(data.images, trigger));
  for (int i = 0; i < data.size(); ++i) {
    if (eligible[i] && trig_bd[i] == map_target(data.labels[i], tm)) ++r.d_s_size;
  }
  r.r_cl = classification_risk(pair.trainable, data);
  r.n_cl = static_cast<long>(std::lround(r.r_cl * r.dataset_size));
  r.r_bd = backdoor_risk(pair.trainable, trigger, tm, data);
  r.n_bd = static_cast<long>(std::lround(r.r_bd * r.d_minus_target_size));
  r.r_adv = adversarial_risk(pair.trainable, tm, data, set, solver, pgd);
  r.n_adv = static_cast<long>(std::lround(r.r_adv * r.d_minus_target_size));
  r.r_sub = sub_adversarial_risk(pair, trigger, tm, data, set, solver, pgd);
  r.n_sub = static_cast<long>(std::lround(r.r_sub * r.d_minus_target_size));
  r.r_share = shared_adversarial_risk(pair, data, set, solver, pgd);
  r.n_share = static_cast<long>(std::lround(r.r_share * r.dataset_size));
  if (include_targeted && tm.mode == TargetMode::AllToOne) {
    TargetedRisks tg = targeted_risks(pair, trigger, tm, data, set, solver, pgd);
    r.r_tadv = tg.r_tadv;
    r.r_tsub = tg.r_tsub;
    r.n_tadv = tg.n_tadv;
    r.n_tsub = tg.n_tsub;
  }
  return r;
}

ChainVerdict verify_chain(const RiskReport& report) {
  if (report.solver != RiskSolver::ExactGrid) {
    throw SolverMismatchError("verify_chain needs exact-grid risks; lower bounds prove nothing");
  }
  ChainVerdict v;
  auto check = [&](const std::string& name, long n_lhs, double lhs, long n_rhs, double rhs) {
    InequalityCheck c;
    c.name = name;
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = rhs - lhs;
    c.ok = n_lhs <= n_rhs;
    v.checks.push_back(c);
  };
  check("r_bd <= r_sub", report.n_bd, report.r_bd, report.n_sub, report.r_sub);
  check("r_sub <= r_adv", report.n_sub, report.r_sub, report.n_adv, report.r_adv);
  check("r_bd <= r_adv", report.n_bd, report.r_bd, report.n_adv, report.r_adv);
  if (report.r_uadv && report.r_usub) {
    check("r_bd <= r_usub", report.n_bd, report.r_bd, report.n_usub, *report.r_usub);
    check("r_usub <= r_uadv", report.n_usub, *report.r_usub, report.n_uadv, *report.r_uadv);
    check("r_uadv <= r_adv", report.n_uadv, *report.r_uadv, report.n_adv, report.r_adv);
  }
  if (report.r_tadv && report.r_tsub) {
    check("r_bd <= r_tsub", report.n_bd, report.r_bd, report.n_tsub, *report.r_tsub);
    check("r_tsub <= r_tadv", report.n_tsub, *report.r_tsub, report.n_tadv, *report.r_tadv);
    check("r_tadv <= r_adv", report.n_tadv, *report.r_tadv, report.n_adv, report.r_adv);
    check("r_tsub <= r_sub", report.n_tsub, *report.r_tsub, report.n_sub, report.r_sub);
  }
  v.pass = true;
  for (const InequalityCheck& c : v.checks) v.pass = v.pass && c.ok;
  return v;
}

RelaxationGaps relaxation_gap_bounds(const ModelPair& pair, const TriggerSpec& trigger,
                                     const TargetMap& tm, const LabeledDataset& data,
                                     const PerturbationSet& set, RiskSolver solver) {
  if (solver != RiskSolver::ExactGrid) {
    throw SolverMismatchError("relaxation gaps require the exact solver");
  }
  Tables t = build_tables(pair, trigger, tm, data, set);
  if (t.d_minus == 0) throw DomainError("no samples outside the target class");

  long n_sub = 0, n_r1 = 0, n_share_all = 0, n_share_target = 0, n_bd_frozen = 0;
  for (int i = 0; i < t.n; ++i) {
    bool t1_any = false, miss_any = false;
    for (int g = 0; g < t.g; ++g) {
      t1_any = t1_any || type1_at(t, g, i);
      miss_any = miss_any || t.pert_theta[g][i] != t.labels[i];
    }
    n_share_all += t1_any ? 1 : 0;
    if (t.eligible[i]) {
      n_sub += (t.in_ds[i] ? t1_any : miss_any) ? 1 : 0;
      n_r1 += t1_any ? 1 : 0;
      if (t.trig_bd[i] == t.targets[i]) ++n_bd_frozen;
    } else {
      n_share_target += t1_any ? 1 : 0;
    }
  }

  RelaxationGaps out;
  out.r1 = static_cast<double>(n_r1) / t.d_minus;
  out.gap1 = static_cast<double>(n_sub - n_r1) / t.d_minus;
  out.bound1 = static_cast<double>(t.d_minus - n_bd_frozen) / t.d_minus;
  out.gap1_within_bound = (n_sub - n_r1) <= (t.d_minus - n_bd_frozen);
  out.scale_fraction = static_cast<double>(t.d_minus) / t.n;
  out.target_class_term = static_cast<double>(n_share_target) / t.n;
  out.r_share = static_cast<double>(n_share_all) / t.n;
  out.decomposition_exact = n_share_all == n_r1 + n_share_target;
  return out;
}

std::string RiskReport::to_text() const {
  std::ostringstream os;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "risk-report v1\n";
  os << "solver " << solver_name(solver) << "\n";
  os << "dataset_size " << dataset_size << "\n";
  os << "d_minus_target_size " << d_minus_target_size << "\n";
  os << "d_s_size " << d_s_size << "\n";
  os << "r_cl " << num(r_cl) << " n_cl " << n_cl << "\n";
  os << "r_bd " << num(r_bd) << " n_bd " << n_bd << "\n";
  os << "r_adv " << num(r_adv) << " n_adv " << n_adv << "\n";
  os << "r_sub " << num(r_sub) << " n_sub " << n_sub << "\n";
  os << "r_share " << num(r_share) << " n_share " << n_share << "\n";
  if (r_uadv) os << "r_uadv " << num(*r_uadv) << " n_uadv " << n_uadv << "\n";
  if (r_usub) os << "r_usub " << num(*r_usub) << " n_usub " << n_usub << "\n";
  if (r_tadv) os << "r_tadv " << num(*r_tadv) << " n_tadv " << n_tadv << "\n";
  if (r_tsub) os << "r_tsub " << num(*r_tsub) << " n_tsub " << n_tsub << "\n";
  os << "ae_type1 " << ae_type1 << "\n";
  os << "ae_type2 " << ae_type2 << "\n";
  os << "ae_type3 " << ae_type3 << "\n";
  return os.str();
}

RiskReport RiskReport::from_text(const std::string& text) {
  RiskReport r;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "risk-report v1") {
    throw FormatError("not a risk report");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "solver") {
      std::string s;
      ls >> s;
      if (s == "exact_grid") {
        r.solver = RiskSolver::ExactGrid;
      } else if (s == "pgd_lower_bound") {
        r.solver = RiskSolver::PgdLowerBound;
      } else {
        throw FormatError("unknown solver '" + s + "'");
      }
    } else if (key == "dataset_size") {
      ls >> r.dataset_size;
    } else if (key == "d_minus_target_size") {
      ls >> r.d_minus_target_size;
    } else if (key == "d_s_size") {
      ls >> r.d_s_size;
    } else if (key == "ae_type1") {
      ls >> r.ae_type1;
    } else if (key == "ae_type2") {
      ls >> r.ae_type2;
    } else if (key == "ae_type3") {
      ls >> r.ae_type3;
    } else {
      double value = 0.0;
      std::string nkey;
      long count = 0;
      ls >> value >> nkey >> count;
      if (!ls) throw FormatError("bad risk line '" + line + "'");
      if (key == "r_cl") {
        r.r_cl = value;
        r.n_cl = count;
      } else if (key == "r_bd") {
        r.r_bd = value;
        r.n_bd = count;
      } else if (key == "r_adv") {
        r.r_adv = value;
        r.n_adv = count;
      } else if (key == "r_sub") {
        r.r_sub = value;
        r.n_sub = count;
      } else if (key == "r_share") {
        r.r_share = value;
        r.n_share = count;
      } else if (key == "r_uadv") {
        r.r_uadv = value;
        r.n_uadv = count;
      } else if (key == "r_usub") {
        r.r_usub = value;
        r.n_usub = count;
      } else if (key == "r_tadv") {
        r.r_tadv = value;
        r.n_tadv = count;
      } else if (key == "r_tsub") {
        r.r_tsub = value;
        r.n_tsub = count;
      } else {
        throw FormatError("unknown risk key '" + key + "'");
      }
    }
  }
  return r;
}

const char* ae_type_name(AEType t) {
  switch (t) {
    case AEType::TypeI:
      return "type1";
    case AEType::TypeII:
      return "type2";
    case AEType::TypeIII:
      return "type3";
    case AEType::NotAdversarial:
      return "not_adversarial";
  }
  return "?";
}

const char* solver_name(RiskSolver s) {
  return s == RiskSolver::ExactGrid ? "exact_grid" : "pgd_lower_bound";
}

}  // namespace sau
