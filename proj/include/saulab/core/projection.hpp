#pragma once

#include <vector>

#include "saulab/core/tensor.hpp"

namespace sau {

enum class SetKind { LinfBall, L2Ball, L1Ball, FiniteGrid };

// The admissible perturbation set: a norm ball of radius `radius`, or an
// explicit finite list of perturbation vectors for exact enumeration.
struct PerturbationSet {
  SetKind kind = SetKind::LinfBall;
  float radius = 0.0f;
  std::vector<Tensor> grid_points;

  static PerturbationSet linf_ball(float radius);
  static PerturbationSet l2_ball(float radius);
  static PerturbationSet l1_ball(float radius);
  // The zero vector must be among the points; added automatically if absent.
  static PerturbationSet finite_grid(std::vector<Tensor> points);

  bool is_ball() const { return kind != SetKind::FiniteGrid; }
};

// Membership with absolute slack 1e-6 (balls: norm test; grid: distance to
// the nearest point).
bool set_contains(const PerturbationSet& set, const Tensor& eps, float slack = 1e-6f);

// Euclidean projection onto the set. Componentwise clamp for Linf, radial
// rescale for L2, sorted-threshold (simplex style) for L1, nearest point with
// lowest-index tie break for grids. Members are returned unchanged, which
// makes the projection idempotent bit for bit.
Tensor project(const Tensor& eps, const PerturbationSet& set);

const char* set_kind_name(SetKind k);

}  // namespace sau
