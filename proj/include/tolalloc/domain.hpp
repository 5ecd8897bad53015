#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tolalloc/evaluator.hpp"
#include "tolalloc/tolerance.hpp"

namespace tolalloc {

struct AxisThreshold {
  double distance = 0.0;  // |mu| of the first outward crossing, or the cap
  bool capped = false;
  bool tangent = false;   // crossing with non-increasing outward slope
  int evaluations = 0;
};

/// Smallest t > 0 with Q(nominal + direction * t * e_axis) = q_allow, found
/// by doubling outward from 1e-3 * search_cap and refining with Brent to
/// |q - q_allow| <= 1e-10 q_allow. Returns search_cap when nothing crosses.
AxisThreshold axis_threshold(const Evaluator& evaluator, const Vector& nominal, double q_allow,
                             int axis, int direction, double search_cap);

struct DomainSizing {
  BoundingBox bbox;
  Intervals sampling_domain;           // [nominal_i - tau_max_i, nominal_i + tau_max_i]
  std::vector<AxisThreshold> minus;    // per axis, direction -1
  std::vector<AxisThreshold> plus;     // per axis, direction +1
  std::vector<std::string> warnings;
};

/// Throws ConstraintError("constraint violated at nominal") unless Q(nominal) < q_allow.
void check_nominal_constraint(const Evaluator& evaluator, const Vector& nominal, double q_allow);

/// (tau_max)_i is the nearer of the two signed axis crossings.
DomainSizing size_bounding_box(const Evaluator& evaluator, const Vector& nominal, double q_allow,
                               const Vector& caps, const std::optional<Vector>& tau_min = std::nullopt);

Intervals sampling_domain(const Vector& nominal, const ToleranceVector& tau_max);

}  // namespace tolalloc
