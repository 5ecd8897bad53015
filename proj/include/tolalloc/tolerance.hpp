#pragma once

#include <cmath>

#include "tolalloc/types.hpp"

namespace tolalloc {

/// Tolerance half-widths tau (one per design parameter, tau_i >= 0).
using ToleranceVector = Vector;

inline void check_tolerance(const ToleranceVector& tau) {
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    if (!(tau(i) >= 0.0) || !std::isfinite(tau(i))) {
      throw DomainError("tolerance components must be finite and >= 0");
    }
  }
}

/// {mu : |mu_i - center_i| <= half_widths_i}
struct ToleranceBox {
  Vector center;
  ToleranceVector half_widths;

  ToleranceBox() = default;
  ToleranceBox(Vector c, ToleranceVector tau) : center(std::move(c)), half_widths(std::move(tau)) {
    check_dim(half_widths.size(), center.size(), "tolerance box");
    check_tolerance(half_widths);
  }

  int dim() const { return static_cast<int>(center.size()); }
  Vector lower() const { return center - half_widths; }
  Vector upper() const { return center + half_widths; }

  bool contains(const Eigen::Ref<const Vector>& mu) const {
    for (Eigen::Index i = 0; i < center.size(); ++i) {
      if (std::abs(mu(i) - center(i)) > half_widths(i)) return false;
    }
    return true;
  }
};

/// Search region [tau_min, tau_max] for the allocation.
struct BoundingBox {
  ToleranceVector tau_min;
  ToleranceVector tau_max;

  BoundingBox() = default;
  BoundingBox(ToleranceVector lo, ToleranceVector hi) : tau_min(std::move(lo)), tau_max(std::move(hi)) {
    validate();
  }

  int dim() const { return static_cast<int>(tau_min.size()); }

  void validate() const {
    check_dim(tau_max.size(), tau_min.size(), "bounding box");
    for (Eigen::Index i = 0; i < tau_min.size(); ++i) {
      if (!(tau_min(i) >= 0.0 && tau_min(i) < tau_max(i)) || !std::isfinite(tau_max(i))) {
        throw DomainError("bounding box requires 0 <= tau_min_i < tau_max_i");
      }
    }
  }

  bool contains(const Eigen::Ref<const Vector>& tau) const {
    return (tau.array() >= tau_min.array()).all() && (tau.array() <= tau_max.array()).all();
  }

  Vector clamp(const Eigen::Ref<const Vector>& tau) const {
    return tau.cwiseMax(tau_min).cwiseMin(tau_max);
  }
};

}  // namespace tolalloc
