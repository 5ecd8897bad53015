#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tolalloc/measures.hpp"
#include "tolalloc/tolerance.hpp"
#include "tolalloc/worst_case.hpp"

namespace tolalloc {

struct TraversalConfig {
  int max_iters = 200;
  double f_increase_tol = 1e-6;
  double retraction_tol = 1e-10;  // relative to q_allow
  double line_search_tol = 1e-8;  // on the normalized step in [0, 1]
  double tangent_tol = 1e-14;     // ||grad G|| at or below this is treated as zero
  double wall_rel_tol = 1e-8;     // relative to the bounding-box width

  void validate() const;
};

/// Orthonormal frame of the tangent space at a manifold point.
struct TangentFrame {
  Vector normal;             // grad G / ||grad G||
  Matrix basis;              // d x (d-1), orthonormal columns
  Matrix projector;          // T T^T with wall rows zeroed
  std::vector<int> walls;    // axes whose rows were zeroed
  bool cg_flag = true;
};

enum class Method { GA, CG };
std::string method_name(Method m);
Method method_from_name(const std::string& s);

struct TraversalTrace {
  std::vector<ToleranceVector> iterates;
  std::vector<double> f_values;
  std::vector<double> g_residuals;              // |G - q_allow| / q_allow
  std::vector<std::pair<int, int>> wall_events; // (iteration, axis)
  std::vector<int> restarts;
  std::vector<std::string> events;              // one tag per iterate
};

struct AllocationResult {
  ToleranceVector tau;
  double f_opt = 0.0;
  double g_residual = 0.0;
  int iterations = 0;
  Method method = Method::GA;
  TraversalTrace trace;
  bool converged = false;
  bool stalled = false;
};

/// Everything a retraction needs besides the point and the step.
struct ManifoldContext {
  const WorstCaseFunction& G;
  BoundingBox bbox;
  double q_allow;
  double tol;  // relative residual target
};

/// Retractor-induced retraction: moves tau + eta along the retractor line
/// (towards tau_min when above the manifold, towards tau_max when below)
/// until G = q_allow. The start point is clamped into the bounding box first.
ToleranceVector retract(const ToleranceVector& tau, const Vector& eta, const ManifoldContext& ctx);

TangentFrame build_projection(const ToleranceVector& tau, const BoundingBox& bbox, const Vector& grad_G,
                              const Vector& grad_F, double wall_rel_tol = 1e-8,
                              double tangent_tol = 1e-14);

/// Root of G = q_allow on the ray from tau_min along grad F(tau_min), or
/// along the ones vector for measures singular at zero.
ToleranceVector initial_guess(const MeasureSpec& measure, const ManifoldContext& ctx);

struct LineSearchResult {
  double alpha = 0.0;
  ToleranceVector tau;
  double f = 0.0;
  bool stalled = false;  // no admissible improving step
  int failed_probes = 0; // probes whose retraction found no crossing
};

/// Maximizes alpha -> F(R_tau(alpha v)) on [0, alpha_max]. f_tau is F(tau).
LineSearchResult line_search(const ToleranceVector& tau, double f_tau, const Vector& v,
                             const MeasureSpec& measure, const ManifoldContext& ctx, double tol);

/// Projection of v_old into the new tangent space.
Vector vector_transport(const TangentFrame& frame_new, const Vector& v_old);

AllocationResult gradient_ascent(const ToleranceVector& tau0, const WorstCaseFunction& G,
                                 const BoundingBox& bbox, double q_allow, const MeasureSpec& measure,
                                 const TraversalConfig& config = {});

AllocationResult conjugate_gradient(const ToleranceVector& tau0, const WorstCaseFunction& G,
                                    const BoundingBox& bbox, double q_allow, const MeasureSpec& measure,
                                    const TraversalConfig& config = {});

AllocationResult traverse(Method method, const ToleranceVector& tau0, const WorstCaseFunction& G,
                          const BoundingBox& bbox, double q_allow, const MeasureSpec& measure,
                          const TraversalConfig& config = {});

/// CSV with columns iter, tau_1..tau_d, F, G_residual, event.
std::string format_trace_csv(const TraversalTrace& trace);

}  // namespace tolalloc
