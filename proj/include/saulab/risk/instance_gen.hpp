#pragma once

#include <cstdint>

#include "saulab/risk/risk.hpp"

namespace sau {

// A small random instance for exact risk verification: a tiny model pair on
// low-dimensional inputs, an additive (sinusoidal) trigger whose exact delta
// is one of the grid points, and a handful of extra random perturbations.
// Samples live in [0.3, 0.7] and the trigger amplitude stays below 0.2, so
// no clamping occurs and x + delta reproduces g(x) bit for bit, which is
// what makes the inequality chains hold with zero tolerance.
struct GridInstance {
  ModelPair pair;
  LabeledDataset data;
  TriggerSpec trigger;
  TargetMap tm;
  PerturbationSet grid;
};

struct InstanceOptions {
  int max_samples = 12;
  int max_dim = 6;
  int max_classes = 4;
  int max_extra_grid_points = 5;  // grid size <= extras + zero + trigger delta <= 8
  bool all_to_all = false;        // otherwise all-to-one with a random target
};

GridInstance make_grid_instance(std::uint64_t seed, const InstanceOptions& opt = {});

}  // namespace sau
