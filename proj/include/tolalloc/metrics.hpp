#pragma once

#include <json.hpp>

#include "tolalloc/measures.hpp"
#include "tolalloc/samples.hpp"
#include "tolalloc/surrogate.hpp"
#include "tolalloc/worst_case.hpp"

namespace tolalloc {

struct ErrorReport {
  double mean_rel = 0.0;  // mean |Q - Q~| / |Q|
  double max_rel = 0.0;   // max  |Q - Q~| / |Q|
  std::size_t n_compared = 0;
};

/// Relative errors of the model on held-out samples. Throws MetricError when
/// a held-out value is zero.
ErrorReport surrogate_errors(const SeparatedModel& model, const SampleSet& holdout);

struct AllocationErrorReport {
  double tol_err_inf = 0.0;         // ||tau_ref - tau||_inf
  double objective_rel_err = 0.0;   // |F(tau_ref) - F(tau)| / F(tau_ref)
  double constraint_rel_err = 0.0;  // |q_allow - G_ref(tau)| / q_allow
};

AllocationErrorReport allocation_errors(const ToleranceVector& tau, const ToleranceVector& tau_ref,
                                        const MeasureSpec& measure, const WorstCaseFunction& G_ref,
                                        double q_allow);

nlohmann::json to_json(const ErrorReport& r);
nlohmann::json to_json(const AllocationErrorReport& r);

}  // namespace tolalloc
