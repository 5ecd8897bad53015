#pragma once

#include <functional>

#include "tolalloc/tolerance.hpp"

namespace tolalloc {

/// G(tau): worst-case performance over the tolerance box of size tau,
/// together with its gradient in tau.
class WorstCaseFunction {
 public:
  virtual ~WorstCaseFunction() = default;
  virtual int dim() const = 0;
  virtual double value(const ToleranceVector& tau) const = 0;
  virtual Vector gradient(const ToleranceVector& tau) const = 0;
};

/// G given in closed form; used for analytic problems and tests.
class AnalyticWorstCase final : public WorstCaseFunction {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  AnalyticWorstCase(int dim, ValueFn value, GradFn grad)
      : dim_(dim), value_(std::move(value)), grad_(std::move(grad)) {}

  int dim() const override { return dim_; }
  double value(const ToleranceVector& tau) const override { return value_(tau); }
  Vector gradient(const ToleranceVector& tau) const override { return grad_(tau); }

 private:
  int dim_;
  ValueFn value_;
  GradFn grad_;
};

}  // namespace tolalloc
