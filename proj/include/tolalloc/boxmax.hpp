#pragma once

#include <cstdint>
#include <vector>

#include "tolalloc/response.hpp"
#include "tolalloc/tolerance.hpp"
#include "tolalloc/worst_case.hpp"

namespace tolalloc {

struct BoxMaxConfig {
  int n_multistarts = 8;
  int polish_max_iters = 500;
  double grad_step_tol = 1e-10;  // relative to the largest half-width
  double tie_rel_tol = 1e-8;
  double wall_rel_tol = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BoxMaxResult {
  double value = 0.0;                                  // G(tau)
  std::vector<Vector> maximizers;                      // K(tau), sorted lexicographically
  std::vector<std::vector<std::size_t>> wall_contacts; // per axis: indices into maximizers
  ToleranceBox box;                                    // the box this result belongs to
  int evaluations = 0;
};

/// Deterministic multistart projected gradient ascent over the box.
///
/// Starts are the center, the 2d axis extremes, every corner when d <= 10
/// (otherwise n_multistarts corners seeded from the gradient signs at the
/// center) and n_multistarts Latin-hypercube interior points. Axes with a
/// zero half-width are frozen at the center.
BoxMaxResult box_maximize(const Response& response, const ToleranceBox& box,
                          const BoxMaxConfig& config = {});

/// dG/dtau_i: over maximizers on wall i, the largest outward slope clipped at
/// zero; zero when no maximizer touches wall i. For a zero half-width the two
/// walls coincide and the slope is |dQ/dmu_i|.
Vector grad_G(const Response& response, const ToleranceBox& box, const BoxMaxResult& result);

/// G(tau) = max of a response over the tolerance box around a fixed nominal.
/// Remembers the last box it solved so value() and gradient() at the same tau
/// share one maximization. Not safe for concurrent use.
class SurrogateWorstCase final : public WorstCaseFunction {
 public:
  SurrogateWorstCase(Response response, Vector nominal, BoxMaxConfig config = {});

  int dim() const override { return static_cast<int>(nominal_.size()); }
  double value(const ToleranceVector& tau) const override;
  Vector gradient(const ToleranceVector& tau) const override;

  const BoxMaxResult& solve(const ToleranceVector& tau) const;
  const Response& response() const { return response_; }
  const Vector& nominal() const { return nominal_; }

 private:
  Response response_;
  Vector nominal_;
  BoxMaxConfig config_;
  mutable bool cached_ = false;
  mutable BoxMaxResult last_;
};

}  // namespace tolalloc
