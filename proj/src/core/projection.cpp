#include "saulab/core/projection.hpp"

#include <algorithm>
#include <cmath>

#include "saulab/core/error.hpp"

namespace sau {

namespace {

PerturbationSet make_ball(SetKind kind, float radius) {
  if (radius < 0.0f) throw DomainError("ball radius must be nonnegative");
  PerturbationSet s;
  s.kind = kind;
  s.radius = radius;
  return s;
}

double norm_of(const Tensor& eps, SetKind kind) {
  ArrayMap v = eps.array();
  switch (kind) {
    case SetKind::LinfBall:
      return v.abs().maxCoeff();
    case SetKind::L2Ball:
      return std::sqrt(v.cast<double>().square().sum());
    case SetKind::L1Ball:
      return v.cast<double>().abs().sum();
    default:
      throw ContractError("norm_of on a grid set");
  }
}

}  // namespace

PerturbationSet PerturbationSet::linf_ball(float radius) {
  return make_ball(SetKind::LinfBall, radius);
}
PerturbationSet PerturbationSet::l2_ball(float radius) { return make_ball(SetKind::L2Ball, radius); }
PerturbationSet PerturbationSet::l1_ball(float radius) { return make_ball(SetKind::L1Ball, radius); }

PerturbationSet PerturbationSet::finite_grid(std::vector<Tensor> points) {
  if (points.empty()) throw DomainError("finite grid needs at least one point");
  const Shape& shape = points.front().shape();
  bool has_zero = false;
  for (const Tensor& p : points) {
    if (p.shape() != shape) throw ShapeError("grid points must share one shape");
    if ((p.array() == 0.0f).all()) has_zero = true;
  }
  if (!has_zero) points.push_back(Tensor::zeros(shape));
  PerturbationSet s;
  s.kind = SetKind::FiniteGrid;
  s.grid_points = std::move(points);
  return s;
}

bool set_contains(const PerturbationSet& set, const Tensor& eps, float slack) {
  if (set.kind == SetKind::FiniteGrid) {
    for (const Tensor& p : set.grid_points) {
      if (p.size() != eps.size()) continue;
      const double d2 = (eps.array().cast<double>() - p.array().cast<double>()).square().sum();
      if (std::sqrt(d2) <= slack) return true;
    }
    return false;
  }
  return norm_of(eps, set.kind) <= static_cast<double>(set.radius) + slack;
}

Tensor project(const Tensor& eps, const PerturbationSet& set) {
  switch (set.kind) {
    case SetKind::LinfBall: {
      Tensor out = Tensor::zeros(eps.shape());
      out.array() = eps.array().min(set.radius).max(-set.radius);
      return out;
    }
    case SetKind::L2Ball: {
      const double n = norm_of(eps, SetKind::L2Ball);
      if (n <= static_cast<double>(set.radius) + 1e-6) return eps.clone();
      Tensor out = Tensor::zeros(eps.shape());
      out.array() = eps.array() * static_cast<float>(set.radius / n);
      return out;
    }
    case SetKind::L1Ball: {
      const double n = norm_of(eps, SetKind::L1Ball);
      if (n <= static_cast<double>(set.radius) + 1e-6) return eps.clone();
      // Duchi et al. sorted-threshold projection of |eps| onto the simplex
      // of radius rho, signs restored afterwards.
      std::vector<float> mag(static_cast<std::size_t>(eps.size()));
      for (std::int64_t i = 0; i < eps.size(); ++i) mag[i] = std::abs(eps.at(i));
      std::vector<float> sorted = mag;
      std::sort(sorted.begin(), sorted.end(), std::greater<float>());
      double cum = 0.0;
      double theta = 0.0;
      for (std::size_t j = 0; j < sorted.size(); ++j) {
        cum += sorted[j];
        const double t = (cum - set.radius) / static_cast<double>(j + 1);
        if (sorted[j] - t > 0.0) {
          theta = t;
        } else {
          break;
        }
      }
      Tensor out = Tensor::zeros(eps.shape());
      for (std::int64_t i = 0; i < eps.size(); ++i) {
        const float m = std::max(mag[i] - static_cast<float>(theta), 0.0f);
        out.data()[i] = std::copysign(m, eps.at(i));
      }
      return out;
    }
    case SetKind::FiniteGrid: {
      if (set.grid_points.empty()) throw ContractError("empty grid");
      std::size_t best = 0;
      double best_d = -1.0;
      for (std::size_t i = 0; i < set.grid_points.size(); ++i) {
        const Tensor& p = set.grid_points[i];
        if (p.size() != eps.size()) {
          throw ShapeError("grid point shape " + shape_str(p.shape()) +
                           " incompatible with eps " + shape_str(eps.shape()));
        }
        const double d =
            (eps.array().cast<double>() - p.array().cast<double>()).square().sum();
        if (best_d < 0.0 || d < best_d) {
          best_d = d;
          best = i;
        }
      }
      return set.grid_points[best].clone();
    }
  }
  throw ContractError("unreachable");
}

const char* set_kind_name(SetKind k) {
  switch (k) {
    case SetKind::LinfBall:
      return "linf_ball";
    case SetKind::L2Ball:
      return "l2_ball";
    case SetKind::L1Ball:
      return "l1_ball";
    case SetKind::FiniteGrid:
      return "finite_grid";
  }
  return "?";
}

}  // namespace sau
