#include "tolalloc/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tolalloc/brent.hpp"
#include "tolalloc/io.hpp"

namespace tolalloc {

void TraversalConfig::validate() const {
  if (max_iters < 1) throw PreconditionError("traversal max_iters must be >= 1");
  for (double t : {f_increase_tol, retraction_tol, line_search_tol, tangent_tol, wall_rel_tol}) {
    if (!(t > 0.0) || !std::isfinite(t)) throw PreconditionError("traversal tolerances must be > 0");
  }
}

std::string method_name(Method m) { return m == Method::GA ? "GA" : "CG"; }

Method method_from_name(const std::string& s) {
  if (s == "ga" || s == "GA") return Method::GA;
  if (s == "cg" || s == "CG") return Method::CG;
  throw ParseError("unknown traversal method '" + s + "' (expected ga or cg)");
}

namespace {

double residual_scale(double q_allow) { return q_allow != 0.0 ? std::abs(q_allow) : 1.0; }

struct Retracted {
  ToleranceVector tau;
  double g = 0.0;  // G(tau)
};

Retracted retract_impl(const ToleranceVector& tau, const Vector& eta, const ManifoldContext& ctx) {
  const BoundingBox& bb = ctx.bbox;
  check_dim(tau.size(), bb.dim(), "retract tau");
  check_dim(eta.size(), bb.dim(), "retract eta");
  const double q = ctx.q_allow;
  const double ftol = ctx.tol * residual_scale(q);

  const Vector p = bb.clamp(tau + eta);
  const double gp = ctx.G.value(p);
  if (std::abs(gp - q) <= ftol) return {p, gp};

  // Above the manifold the retractor points back at tau_min, below it points
  // out to tau_max; s runs over [-1, 0] or [0, 1] respectively.
  const bool above = gp > q;
  const Vector v = above ? Vector(p - bb.tau_min) : Vector(bb.tau_max - p);
  const double s_end = above ? -1.0 : 1.0;
  auto point = [&](double s) -> Vector { return bb.clamp(p + s * v); };
  auto f = [&](double s) { return ctx.G.value(point(s)) - q; };

  if (v.maxCoeff() <= 0.0) {
    throw RetractionError(std::string("retraction: start point sits on the ") +
                          (above ? "tau_min" : "tau_max") + " corner with G on the wrong side of q_allow");
  }
  const double f_end = f(s_end);
  if (std::abs(f_end) > ftol && (f_end > 0.0) == above) {
    throw RetractionError("retraction: no crossing of G = q_allow along the retractor line inside the "
                          "bounding box (G at the far end = " + format_double(f_end + q) + ")");
  }
  const RootResult r = brent_root(f, 0.0, s_end, gp - q, f_end, ftol, 0.0, 300);
  if (std::abs(r.fx) > ftol) {
    throw RetractionError("retraction: root solve stopped at residual " + format_double(r.fx) +
                          " (G may be discontinuous along the retractor line)");
  }
  return {point(r.x), r.fx + q};
}

}  // namespace

ToleranceVector retract(const ToleranceVector& tau, const Vector& eta, const ManifoldContext& ctx) {
  return retract_impl(tau, eta, ctx).tau;
}

TangentFrame build_projection(const ToleranceVector& tau, const BoundingBox& bbox, const Vector& grad_G,
                              const Vector& grad_F, double wall_rel_tol, double tangent_tol) {
  const Eigen::Index d = tau.size();
  check_dim(bbox.dim(), d, "build_projection bbox");
  check_dim(grad_G.size(), d, "build_projection grad G");
  check_dim(grad_F.size(), d, "build_projection grad F");
  const double gnorm = grad_G.norm();
  if (!std::isfinite(gnorm) || gnorm <= tangent_tol) {
    throw DegenerateNormalError("grad G vanishes at the current point; the manifold tangent is undefined");
  }

  TangentFrame frame;
  frame.normal = grad_G / gnorm;
  Eigen::HouseholderQR<Matrix> qr(Matrix(frame.normal));
  const Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  frame.basis = Q.rightCols(d - 1);
  frame.projector = frame.basis * frame.basis.transpose();

  std::vector<int> lower, upper;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double w = wall_rel_tol * (bbox.tau_max(k) - bbox.tau_min(k));
    if (tau(k) - bbox.tau_min(k) <= w) lower.push_back(static_cast<int>(k));
    else if (bbox.tau_max(k) - tau(k) <= w) upper.push_back(static_cast<int>(k));
  }
  auto on_lower = [&](int k) { return std::find(lower.begin(), lower.end(), k) != lower.end(); };
  auto zero = [&](int k) {
    frame.projector.row(k).setZero();
    frame.walls.push_back(k);
    frame.cg_flag = false;
  };
  auto is_zeroed = [&](int k) {
    return std::find(frame.walls.begin(), frame.walls.end(), k) != frame.walls.end();
  };

  // Walls whose outward normal the measure gradient points along.
  for (int k : lower) if (-grad_F(k) >= 0.0) zero(k);
  for (int k : upper) if (grad_F(k) >= 0.0) zero(k);

  // Walls the projected direction itself would cross; repeat until stable.
  for (bool changed = true; changed;) {
    changed = false;
    const Vector g = frame.projector * grad_F;
    std::vector<int> on_wall = lower;
    on_wall.insert(on_wall.end(), upper.begin(), upper.end());
    std::sort(on_wall.begin(), on_wall.end());
    for (int k : on_wall) {
      if (is_zeroed(k)) continue;
      const double outward = on_lower(k) ? -g(k) : g(k);
      if (outward > 0.0) {
        zero(k);
        changed = true;
        break;
      }
    }
  }
  std::sort(frame.walls.begin(), frame.walls.end());
  return frame;
}

ToleranceVector initial_guess(const MeasureSpec& measure, const ManifoldContext& ctx) {
  const BoundingBox& bb = ctx.bbox;
  const int d = bb.dim();
  measure.validate(d);
  Vector dir = measure.singular_at_zero() ? Vector(Vector::Ones(d)) : measure_grad(measure, bb.tau_min);
  const double n = dir.norm();
  if (!(n > 0.0) || (dir.array() < 0.0).any()) {
    throw InitializationError("initial guess: measure gradient at tau_min is not an admissible ray direction");
  }
  dir /= n;

  double s_max = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    if (dir(i) > 0.0) s_max = std::min(s_max, (bb.tau_max(i) - bb.tau_min(i)) / dir(i));
  }
  const double q = ctx.q_allow;
  const double ftol = ctx.tol * residual_scale(q);
  auto point = [&](double s) -> Vector { return bb.clamp(bb.tau_min + s * dir); };
  auto f = [&](double s) { return ctx.G.value(point(s)) - q; };

  const double f0 = f(0.0);
  if (std::abs(f0) <= ftol) return point(0.0);
  if (f0 > 0.0) {
    throw InitializationError("initial guess: G(tau_min) = " + format_double(f0 + q) + " already exceeds q_allow");
  }
  const double f1 = f(s_max);
  if (f1 < -ftol) {
    throw InitializationError("initial guess: the ray from tau_min exits the bounding box before reaching "
                              "G = q_allow (G at exit = " + format_double(f1 + q) + ")");
  }
  const RootResult r = brent_root(f, 0.0, s_max, f0, f1, ftol, 0.0, 300);
  if (std::abs(r.fx) > ftol) {
    throw InitializationError("initial guess: root solve stopped at residual " + format_double(r.fx));
  }
  return point(r.x);
}

namespace {

struct LineSearchInternal {
  LineSearchResult result;
  double g = 0.0;
};

LineSearchInternal line_search_impl(const ToleranceVector& tau, double f_tau, const Vector& v,
                                    const MeasureSpec& measure, const ManifoldContext& ctx, double tol) {
  const BoundingBox& bb = ctx.bbox;
  const Eigen::Index d = tau.size();
  check_dim(v.size(), d, "line_search direction");
  const double vn = v.norm();
  if (!(vn > 0.0) || !std::isfinite(vn)) throw PreconditionError("line_search: zero search direction");
  const Vector u = v / vn;

  // Components at rounding level do not limit the step; the retraction
  // clamps into the box anyway.
  constexpr double negligible = 1e-12;
  double a_max = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (u(i) > negligible) a_max = std::min(a_max, (bb.tau_max(i) - tau(i)) / u(i));
    else if (u(i) < -negligible) a_max = std::min(a_max, (bb.tau_min(i) - tau(i)) / u(i));
  }
  a_max = std::max(a_max, 0.0);

  LineSearchInternal out;
  out.result.tau = tau;
  out.result.f = f_tau;
  const double scale = 1.0 + bb.tau_max.cwiseAbs().maxCoeff();
  if (!std::isfinite(a_max) || a_max <= 1e-14 * scale) {
    out.result.stalled = true;
    return out;
  }

  const double penalty = f_tau - (1.0 + std::abs(f_tau));
  bool have_best = false;
  double best_f = 0.0, best_t = 0.0, best_g = 0.0;
  ToleranceVector best_tau;
  auto phi = [&](double t) {
    try {
      Retracted r = retract_impl(tau, (t * a_max) * u, ctx);
      const double f = measure_value(measure, r.tau);
      if (!have_best || f >= best_f) {
        have_best = true;
        best_f = f;
        best_t = t;
        best_g = r.g;
        best_tau = std::move(r.tau);
      }
      return f;
    } catch (const RetractionError&) {
      ++out.result.failed_probes;
      return penalty;
    }
  };
  phi(1.0);
  brent_maximize(phi, 0.0, 1.0, tol, tol, 200);

  if (!have_best || !(best_f > f_tau)) {
    out.result.stalled = true;
    return out;
  }
  out.result.alpha = best_t * a_max / vn;
  out.result.tau = std::move(best_tau);
  out.result.f = best_f;
  out.g = best_g;
  return out;
}

}  // namespace

LineSearchResult line_search(const ToleranceVector& tau, double f_tau, const Vector& v,
                             const MeasureSpec& measure, const ManifoldContext& ctx, double tol) {
  return line_search_impl(tau, f_tau, v, measure, ctx, tol).result;
}

Vector vector_transport(const TangentFrame& frame_new, const Vector& v_old) {
  check_dim(v_old.size(), frame_new.projector.rows(), "vector_transport");
  return frame_new.projector * v_old;
}

AllocationResult traverse(Method method, const ToleranceVector& tau0, const WorstCaseFunction& G,
                          const BoundingBox& bbox, double q_allow, const MeasureSpec& measure,
                          const TraversalConfig& config) {
  config.validate();
  bbox.validate();
  const int d = bbox.dim();
  check_dim(tau0.size(), d, "traversal tau0");
  check_dim(G.dim(), d, "traversal G");
  measure.validate(d);
  if (!bbox.contains(tau0)) throw PreconditionError("traversal: tau0 lies outside the bounding box");

  const ManifoldContext ctx{G, bbox, q_allow, config.retraction_tol};
  const double qs = residual_scale(q_allow);

  AllocationResult res;
  res.method = method;
  ToleranceVector tau = tau0;
  double resid = std::abs(G.value(tau) - q_allow) / qs;
  if (resid > config.retraction_tol) {
    throw PreconditionError("traversal: tau0 is off the manifold (relative residual " + format_double(resid) + ")");
  }
  double F = measure_value(measure, tau);
  TraversalTrace& tr = res.trace;
  auto record = [&](const std::string& event) {
    tr.iterates.push_back(tau);
    tr.f_values.push_back(F);
    tr.g_residuals.push_back(resid);
    tr.events.push_back(event);
  };
  record("start");

  Vector g_prev, v_prev;
  for (int it = 0; it < config.max_iters; ++it) {
    const Vector gG = G.gradient(tau);
    const Vector gF = measure_grad(measure, tau);
    const TangentFrame frame = build_projection(tau, bbox, gG, gF, config.wall_rel_tol, config.tangent_tol);
    for (int k : frame.walls) tr.wall_events.emplace_back(it, k);

    const Vector g = frame.projector * gF;
    Vector v = g;
    bool restart = false;
    if (method == Method::CG && it > 0) {
      const double gp2 = g_prev.squaredNorm();
      if (frame.cg_flag && gp2 > 0.0) {
        const double beta = g.squaredNorm() / gp2;
        v = g + beta * vector_transport(frame, v_prev);
        // Not an ascent direction: fall back to the projected gradient.
        if (!(v.dot(g) > 0.0)) {
          v = g;
          restart = true;
        }
      } else {
        restart = true;
      }
    }
    if (restart) tr.restarts.push_back(it);

    // Without walls the direction lies in the tangent space; rebuild it from
    // its tangent coordinates so only the orientation within T matters. With
    // d = 2 this makes the step a function of sign alone.
    auto search_direction = [&](const Vector& dir) -> Vector {
      if (frame.walls.empty() && d > 1) {
        const Vector xi = frame.basis.transpose() * dir;
        const double xn = xi.norm();
        if (xn > 0.0) return frame.basis * (xi / xn);
      }
      return dir;
    };
    const Vector u = search_direction(v);
    if (!(u.norm() > 0.0)) {
      res.converged = true;
      tr.events.back() += ";stationary";
      break;
    }

    LineSearchInternal ls = line_search_impl(tau, F, u, measure, ctx, config.line_search_tol);
    if (ls.result.stalled && method == Method::CG && it > 0 && !restart) {
      // The conjugate direction can lead straight out through a wall; retry
      // from the projected gradient before giving up.
      v = g;
      restart = true;
      tr.restarts.push_back(it);
      ls = line_search_impl(tau, F, search_direction(v), measure, ctx, config.line_search_tol);
    }
    if (ls.result.stalled) {
      res.stalled = true;
      res.converged = it > 0;
      tr.events.back() += ";stall";
      break;
    }
    const double dF = ls.result.f - F;
    const double dtau = (ls.result.tau - tau).cwiseAbs().maxCoeff();
    tau = ls.result.tau;
    F = ls.result.f;
    resid = std::abs(ls.g - q_allow) / qs;
    res.iterations = it + 1;

    std::string event = "step";
    if (restart) event += ";restart";
    if (!frame.walls.empty()) event += ";wall";
    record(event);

    g_prev = g;
    v_prev = v;
    if (dF < config.f_increase_tol || dtau < config.f_increase_tol) {
      res.converged = true;
      tr.events.back() += ";converged";
      break;
    }
  }
  res.tau = tau;
  res.f_opt = F;
  res.g_residual = resid;
  return res;
}

AllocationResult gradient_ascent(const ToleranceVector& tau0, const WorstCaseFunction& G,
                                 const BoundingBox& bbox, double q_allow, const MeasureSpec& measure,
                                 const TraversalConfig& config) {
  return traverse(Method::GA, tau0, G, bbox, q_allow, measure, config);
}

AllocationResult conjugate_gradient(const ToleranceVector& tau0, const WorstCaseFunction& G,
                                    const BoundingBox& bbox, double q_allow, const MeasureSpec& measure,
                                    const TraversalConfig& config) {
  return traverse(Method::CG, tau0, G, bbox, q_allow, measure, config);
}

std::string format_trace_csv(const TraversalTrace& trace) {
  std::ostringstream os;
  const std::size_t d = trace.iterates.empty() ? 0 : static_cast<std::size_t>(trace.iterates.front().size());
  os << "iter";
  for (std::size_t i = 1; i <= d; ++i) os << ",tau_" << i;
  os << ",F,G_residual,event\n";
  for (std::size_t r = 0; r < trace.iterates.size(); ++r) {
    os << r;
    for (Eigen::Index i = 0; i < trace.iterates[r].size(); ++i) os << ',' << format_double(trace.iterates[r](i));
    os << ',' << format_double(trace.f_values[r]) << ',' << format_double(trace.g_residuals[r]) << ','
       << trace.events[r] << '\n';
  }
  return os.str();
}

}  // namespace tolalloc
