#include "tolalloc/response.hpp"

#include <cmath>

namespace tolalloc {

Response Response::from_model(SeparatedModel model) {
  auto m = std::make_shared<const SeparatedModel>(std::move(model));
  const int d = m->dim();
  Intervals domain = m->intervals();
  return Response(
      d,
      [m](const Vector& mu, Vector* grad) {
        return grad ? model_eval_grad(*m, mu, *grad) : model_eval(*m, mu);
      },
      std::move(domain));
}

Response Response::max_of(std::vector<SeparatedModel> models) {
  if (models.empty()) throw PreconditionError("max_of: no models");
  if (models.size() == 1) return from_model(std::move(models.front()));
  const int d = models.front().dim();
  Intervals domain = models.front().intervals();
  for (const auto& m : models) {
    check_dim(m.dim(), d, "max_of models");
    // Admissible region is the intersection of the model intervals.
    for (int i = 0; i < d; ++i) {
      auto& iv = domain[static_cast<std::size_t>(i)];
      const auto& mi = m.intervals()[static_cast<std::size_t>(i)];
      iv = Interval(std::max(iv.lo, mi.lo), std::min(iv.hi, mi.hi));
    }
  }
  auto ms = std::make_shared<const std::vector<SeparatedModel>>(std::move(models));
  return Response(
      d,
      [ms](const Vector& mu, Vector* grad) {
        std::vector<double> v;
        v.reserve(ms->size());
        for (const auto& m : *ms) v.push_back(model_eval(m, mu));
        double best = v.front();
        for (double x : v) best = std::max(best, x);
        std::size_t k = 0;
        while (v[k] < best - 1e-12 * std::abs(best)) ++k;
        if (grad) *grad = model_grad((*ms)[k], mu);
        return best;
      },
      std::move(domain));
}

Response Response::from_evaluator(EvaluatorPtr evaluator) {
  const int d = evaluator->dim();
  return Response(d, [ev = std::move(evaluator)](const Vector& mu, Vector* grad) {
    if (grad) *grad = ev->gradient(mu);
    return ev->value(mu);
  });
}

}  // namespace tolalloc
