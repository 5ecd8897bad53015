#pragma once

#include <string>
#include <variant>

#include <json.hpp>

#include "tolalloc/surrogate.hpp"
#include "tolalloc/tolerance.hpp"

namespace tolalloc {

/// F(tau) = sum_i tau_i
struct OneNorm {};
/// F(tau) = sum_i w_i tau_i
struct MuNorm {
  Vector weights;
};
/// F(tau) = (sum_i 1/tau_i)^-1, zero when any tau_i = 0
struct MinusOneNorm {};
/// F(tau) = 1 / sum_i (a_i + b_i / tau_i^k_i), zero when any tau_i = 0
struct ReciprocalPowerCost {
  Vector a, b, k;
};

struct MeasureSpec {
  std::variant<OneNorm, MuNorm, MinusOneNorm, ReciprocalPowerCost> kind;

  /// Throws unless the parameters satisfy the kind's invariants for dimension d.
  void validate(int d) const;
  std::string name() const;
  /// True where the gradient is singular on the tau_i = 0 faces.
  bool singular_at_zero() const;
};

double measure_value(const MeasureSpec& spec, const ToleranceVector& tau);
Vector measure_grad(const MeasureSpec& spec, const ToleranceVector& tau);

struct MuWeights {
  Vector weights;
  bool degenerate = false;  // all weights zero: nominal is stationary
};

/// |dQ/dmu_i| of the surrogate at the nominal design.
MuWeights compute_mu_weights(const SeparatedModel& model, const Vector& nominal);

/// JSON form: {"kind": "one-norm" | "mu-norm" | "minus-one-norm" | "reciprocal-power", ...}.
/// A mu-norm without "weights" parses with an empty weight vector, to be
/// filled from the surrogate.
MeasureSpec measure_spec_from_json(const nlohmann::json& j);
nlohmann::json measure_spec_to_json(const MeasureSpec& spec);

}  // namespace tolalloc
