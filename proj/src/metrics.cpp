#include "tolalloc/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace tolalloc {

ErrorReport surrogate_errors(const SeparatedModel& model, const SampleSet& holdout) {
  const Eigen::Index n = holdout.values.size();
  if (n == 0) throw MetricError("surrogate_errors: empty holdout set");
  holdout.validate();
  check_dim(holdout.points.cols(), model.dim(), "holdout samples");
  ErrorReport r;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double q = holdout.values(j);
    if (q == 0.0) {
      throw MetricError("surrogate_errors: relative error undefined, Q = 0 at holdout sample " + std::to_string(j));
    }
    const double e = std::abs(q - model_eval(model, holdout.points.row(j).transpose())) / std::abs(q);
    sum += e;
    r.max_rel = std::max(r.max_rel, e);
  }
  r.n_compared = static_cast<std::size_t>(n);
  r.mean_rel = std::min(sum / static_cast<double>(n), r.max_rel);
  return r;
}

AllocationErrorReport allocation_errors(const ToleranceVector& tau, const ToleranceVector& tau_ref,
                                        const MeasureSpec& measure, const WorstCaseFunction& G_ref,
                                        double q_allow) {
  check_dim(tau.size(), tau_ref.size(), "allocation_errors tau");
  check_dim(G_ref.dim(), tau.size(), "allocation_errors G_ref");
  if (q_allow == 0.0) throw MetricError("allocation_errors: q_allow = 0, constraint error undefined");
  const double f_ref = measure_value(measure, tau_ref);
  if (f_ref == 0.0) throw MetricError("allocation_errors: F(tau_ref) = 0, objective error undefined");
  AllocationErrorReport r;
  r.tol_err_inf = tau.size() == 0 ? 0.0 : (tau_ref - tau).cwiseAbs().maxCoeff();
  r.objective_rel_err = std::abs(f_ref - measure_value(measure, tau)) / std::abs(f_ref);
  r.constraint_rel_err = std::abs(q_allow - G_ref.value(tau)) / std::abs(q_allow);
  return r;
}

nlohmann::json to_json(const ErrorReport& r) {
  return {{"mean_rel", r.mean_rel}, {"max_rel", r.max_rel}, {"n_compared", r.n_compared}};
}

nlohmann::json to_json(const AllocationErrorReport& r) {
  return {{"tol_err_inf", r.tol_err_inf},
          {"objective_rel_err", r.objective_rel_err},
          {"constraint_rel_err", r.constraint_rel_err}};
}

}  // namespace tolalloc
