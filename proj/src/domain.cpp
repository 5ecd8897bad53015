#include "tolalloc/domain.hpp"

#include <cmath>

#include "tolalloc/brent.hpp"
#include "tolalloc/io.hpp"

namespace tolalloc {

void check_nominal_constraint(const Evaluator& evaluator, const Vector& nominal, double q_allow) {
  const double q0 = evaluator.value(nominal);
  if (!std::isfinite(q0)) throw NumericError("non-finite performance at the nominal design");
  if (!(q0 < q_allow)) {
    throw ConstraintError("constraint violated at nominal: Q(nominal) = " + format_double(q0) +
                          " >= q_allow = " + format_double(q_allow));
  }
}

AxisThreshold axis_threshold(const Evaluator& evaluator, const Vector& nominal, double q_allow,
                             int axis, int direction, double search_cap) {
  check_dim(nominal.size(), evaluator.dim(), "axis_threshold nominal");
  if (axis < 0 || axis >= evaluator.dim()) throw DimensionError("axis_threshold: axis out of range");
  if (direction != 1 && direction != -1) throw PreconditionError("axis_threshold: direction must be +1 or -1");
  if (!(search_cap > 0.0)) throw PreconditionError("axis_threshold: search cap must be > 0");

  AxisThreshold out;
  Vector mu = nominal;
  auto q_at = [&](double t) {
    mu(axis) = nominal(axis) + direction * t;
    const double q = evaluator.value(mu);
    ++out.evaluations;
    if (!std::isfinite(q)) throw NumericError("non-finite performance along axis " + std::to_string(axis + 1));
    return q;
  };

  const double q0 = q_at(0.0);
  if (!(q0 < q_allow)) {
    throw ConstraintError("constraint violated at nominal: Q(nominal) = " + format_double(q0) +
                          " >= q_allow = " + format_double(q_allow));
  }
  const double ftol = 1e-10 * std::abs(q_allow);

  double t_prev = 0.0;
  double q_prev = q0;
  double t = 1e-3 * search_cap;
  bool bracketed = false;
  double t_hi = 0.0, q_hi = 0.0;
  for (int k = 0; k <= 60; ++k) {
    const double te = std::min(t, search_cap);
    const double q = q_at(te);
    if (q >= q_allow) {
      bracketed = true;
      t_hi = te;
      q_hi = q;
      break;
    }
    if (te >= search_cap) break;
    t_prev = te;
    q_prev = q;
    t *= 2.0;
  }
  if (!bracketed) {
    out.distance = search_cap;
    out.capped = true;
    return out;
  }

  const auto root = brent_root([&](double s) { return q_at(s) - q_allow; }, t_prev, t_hi,
                               q_prev - q_allow, q_hi - q_allow, ftol);
  out.distance = root.x;

  // Outward slope at the crossing; a tangential touch is reported, not rejected.
  mu(axis) = nominal(axis) + direction * out.distance;
  const double slope = direction * evaluator.gradient(mu)(axis);
  out.tangent = !(slope > 0.0);
  return out;
}

Intervals sampling_domain(const Vector& nominal, const ToleranceVector& tau_max) {
  check_dim(tau_max.size(), nominal.size(), "sampling domain");
  Intervals out;
  out.reserve(static_cast<std::size_t>(nominal.size()));
  for (Eigen::Index i = 0; i < nominal.size(); ++i) {
    out.emplace_back(nominal(i) - tau_max(i), nominal(i) + tau_max(i));
  }
  return out;
}

DomainSizing size_bounding_box(const Evaluator& evaluator, const Vector& nominal, double q_allow,
                               const Vector& caps, const std::optional<Vector>& tau_min) {
  const int d = evaluator.dim();
  check_dim(nominal.size(), d, "size_bounding_box nominal");
  check_dim(caps.size(), d, "size_bounding_box caps");
  check_nominal_constraint(evaluator, nominal, q_allow);

  DomainSizing out;
  Vector tau_max(d);
  for (int i = 0; i < d; ++i) {
    out.minus.push_back(axis_threshold(evaluator, nominal, q_allow, i, -1, caps(i)));
    out.plus.push_back(axis_threshold(evaluator, nominal, q_allow, i, +1, caps(i)));
    const AxisThreshold& lo = out.minus.back();
    const AxisThreshold& hi = out.plus.back();
    tau_max(i) = std::min(lo.distance, hi.distance);
    const std::string axis = "mu_" + std::to_string(i + 1);
    if (lo.capped && hi.capped) {
      out.warnings.push_back(axis + ": no constraint crossing within the search cap; tau_max capped at " +
                             format_double(caps(i)));
    }
    for (const auto* th : {&lo, &hi}) {
      if (!th->capped && th->tangent) {
        out.warnings.push_back(axis + ": tangential constraint crossing at distance " +
                               format_double(th->distance));
      }
    }
  }
  Vector lo = tau_min.value_or(Vector::Zero(d));
  check_dim(lo.size(), d, "size_bounding_box tau_min");
  out.bbox = BoundingBox(std::move(lo), tau_max);
  out.sampling_domain = sampling_domain(nominal, tau_max);
  return out;
}

}  // namespace tolalloc
