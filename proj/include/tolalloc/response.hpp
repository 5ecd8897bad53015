#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "tolalloc/evaluator.hpp"
#include "tolalloc/surrogate.hpp"

namespace tolalloc {

/// A differentiable scalar field over design space, as seen by the box
/// maximizer: a fitted surrogate, a max of surrogates, or an evaluator.
class Response {
 public:
  /// Returns Q(mu); writes the gradient into *grad when grad is non-null.
  using Fn = std::function<double(const Vector& mu, Vector* grad)>;

  Response(int dim, Fn fn, std::optional<Intervals> domain = std::nullopt)
      : dim_(dim), fn_(std::move(fn)), domain_(std::move(domain)) {}

  static Response from_model(SeparatedModel model);
  /// Pointwise max; the gradient follows the attaining model, lowest index on
  /// ties within 1e-12 relative.
  static Response max_of(std::vector<SeparatedModel> models);
  static Response from_evaluator(EvaluatorPtr evaluator);

  int dim() const { return dim_; }
  const std::optional<Intervals>& domain() const { return domain_; }

  double value(const Vector& mu) const { return fn_(mu, nullptr); }
  double value_grad(const Vector& mu, Vector& grad) const { return fn_(mu, &grad); }
  Vector gradient(const Vector& mu) const {
    Vector g;
    fn_(mu, &g);
    return g;
  }

 private:
  int dim_;
  Fn fn_;
  std::optional<Intervals> domain_;
};

}  // namespace tolalloc
