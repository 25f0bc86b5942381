#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saulab/core/projection.hpp"
#include "saulab/forge/dataset.hpp"
#include "saulab/zoo/model.hpp"

namespace sau {

// How a perturbed sample relates to the model pair at a given label:
// TypeI  - both models misled, to the same wrong class (a shared AE)
// TypeII - the trainable model misled, the frozen one still correct
// TypeIII- both misled, to different wrong classes
enum class AEType { TypeI, TypeII, TypeIII, NotAdversarial };

enum class RiskSolver { ExactGrid, PgdLowerBound };

struct PgdOptions {
  int steps = 5;
  float step_size = 0.2f;
};

// Exact 0-1 risks over one dataset. Fractions are backed by integer
// numerators so inequality chains can be checked with no tolerance; risks
// over non-target samples share the denominator d_minus_target_size, and
// r_cl / r_share use dataset_size.
struct RiskReport {
  double r_cl = 0.0, r_bd = 0.0, r_adv = 0.0, r_sub = 0.0, r_share = 0.0;
  std::optional<double> r_uadv, r_usub, r_tadv, r_tsub;
  long n_cl = 0, n_bd = 0, n_adv = 0, n_sub = 0, n_share = 0;
  long n_uadv = 0, n_usub = 0, n_tadv = 0, n_tsub = 0;
  long ae_type1 = 0, ae_type2 = 0, ae_type3 = 0;  // tallies over sample x grid pairs
  long d_s_size = 0;
  long d_minus_target_size = 0;
  long dataset_size = 0;
  RiskSolver solver = RiskSolver::ExactGrid;

  std::string to_text() const;
  static RiskReport from_text(const std::string& text);
  bool operator==(const RiskReport&) const = default;
};

// ---- individual risk operations (Eqs. 2, 4, 6 and the appendix variants) ----

// Fraction of misclassified samples. With use_original_labels, poisoned
// datasets are scored against their pre-poison labels.
double classification_risk(const Model& model, const LabeledDataset& data,
                           bool use_original_labels = false);

// Fraction of eligible samples (those whose mapped target differs from their
// label) whose triggered version lands on the target class.
double backdoor_risk(const Model& model, const TriggerSpec& trigger, const TargetMap& tm,
                     const LabeledDataset& data);

// Per-sample max over feasible trigger/target pairs (the multi-trigger
// extension); all samples eligible under any pair count in the denominator.
struct TriggerTargetPair {
  TriggerSpec trigger;
  TargetMap tm;
};
double backdoor_risk_multi(const Model& model, const std::vector<TriggerTargetPair>& pairs,
                           const LabeledDataset& data);

double adversarial_risk(const Model& model, const TargetMap& tm, const LabeledDataset& data,
                        const PerturbationSet& set, RiskSolver solver,
                        const PgdOptions& pgd = {});

AEType classify_ae_type(const ModelPair& pair, const Tensor& x_tilde, int label);

double sub_adversarial_risk(const ModelPair& pair, const TriggerSpec& trigger, const TargetMap& tm,
                            const LabeledDataset& data, const PerturbationSet& set,
                            RiskSolver solver, const PgdOptions& pgd = {});

// Shared adversarial risk over the whole clean set (both relaxations).
double shared_adversarial_risk(const ModelPair& pair, const LabeledDataset& data,
                               const PerturbationSet& set, RiskSolver solver,
                               const PgdOptions& pgd = {});

// One perturbation shared by every sample; the max is taken outside the
// sample sum, so a finite grid is required.
struct UniversalRisks {
  double r_uadv = 0.0, r_usub = 0.0;
  long n_uadv = 0, n_usub = 0;
};
UniversalRisks universal_risks(const ModelPair& pair, const TriggerSpec& trigger,
                               const TargetMap& tm, const LabeledDataset& data,
                               const PerturbationSet& grid);

struct TargetedRisks {
  double r_tadv = 0.0, r_tsub = 0.0;
  long n_tadv = 0, n_tsub = 0;
};
TargetedRisks targeted_risks(const ModelPair& pair, const TriggerSpec& trigger,
                             const TargetMap& tm, const LabeledDataset& data,
                             const PerturbationSet& set, RiskSolver solver,
                             const PgdOptions& pgd = {});

// All risks (and AE tallies) from one pass over the prediction tables.
// include_universal requires a finite grid.
RiskReport compute_risk_report(const ModelPair& pair, const TriggerSpec& trigger,
                               const TargetMap& tm, const LabeledDataset& data,
                               const PerturbationSet& set, RiskSolver solver,
                               bool include_universal = true, bool include_targeted = true,
                               const PgdOptions& pgd = {});

// ---- inequality chain verification ----

struct InequalityCheck {
  std::string name;  // e.g. "r_bd <= r_sub"
  double lhs = 0.0, rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool ok = false;     // exact comparison on the integer numerators
};

struct ChainVerdict {
  bool pass = false;
  std::vector<InequalityCheck> checks;
};

// Checks r_bd <= r_sub <= r_adv (zero tolerance) plus the universal and
// targeted chains when those risks are present. Requires an exact-grid
// report; lower-bound reports are rejected.
ChainVerdict verify_chain(const RiskReport& report);

// First-relaxation gap (replacing D_s with the non-target set) and its
// paper bound, plus the second-relaxation decomposition of r_share.
struct RelaxationGaps {
  double r1 = 0.0;          // shared-AE risk over non-target samples
  double gap1 = 0.0;        // r_sub - r1
  double bound1 = 0.0;      // 1 - r_bd(frozen model)
  bool gap1_within_bound = false;
  double scale_fraction = 0.0;      // |D_-target| / N
  double target_class_term = 0.0;   // shared-AE mass on target-class samples / N
  double r_share = 0.0;
  bool decomposition_exact = false;  // r_share == r1*scale + target term (on counts)
};
RelaxationGaps relaxation_gap_bounds(const ModelPair& pair, const TriggerSpec& trigger,
                                     const TargetMap& tm, const LabeledDataset& data,
                                     const PerturbationSet& set, RiskSolver solver);

const char* ae_type_name(AEType t);
const char* solver_name(RiskSolver s);

}  // namespace sau
