#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "tolalloc/legendre.hpp"
#include "tolalloc/samples.hpp"
#include "tolalloc/types.hpp"

namespace tolalloc {

/// Evaluation may overshoot an interval by this fraction of its width
/// (round-off at box edges); the argument is clamped. Anything larger throws.
inline constexpr double kOvershootSlack = 1e-9;

struct StandardCoordinate {
  double x = 0.0;
  bool extrapolated = false;
};

/// Affine map [lo, hi] -> [-1, 1].
inline StandardCoordinate to_standard(const Interval& interval, double mu) {
  const double x = 2.0 * (mu - interval.lo) / interval.width() - 1.0;
  return {x, x < -1.0 || x > 1.0};
}

inline double from_standard(const Interval& interval, double x) {
  return interval.lo + 0.5 * (x + 1.0) * interval.width();
}

/// Rank-r sum of products of univariate Legendre expansions,
///   Q(mu) = sum_l scales[l] * prod_i sum_j c[l][i][j] L_j(x_i),
/// with x_i the standardized coordinate of mu_i on intervals[i].
/// Coefficients are stored row-wise: row l*dim + i holds c[l][i][0..degree].
class SeparatedModel {
 public:
  SeparatedModel() = default;
  SeparatedModel(int dim, int rank, int degree, Intervals intervals);
  SeparatedModel(Intervals intervals, Vector scales, Matrix coeffs);

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  int degree() const { return degree_; }
  const Intervals& intervals() const { return intervals_; }
  const Vector& scales() const { return scales_; }
  const Matrix& coeffs() const { return coeffs_; }

  Vector& scales() { return scales_; }
  Matrix& coeffs() { return coeffs_; }

  auto factor(int l, int i) { return coeffs_.row(static_cast<Eigen::Index>(l) * dim_ + i); }
  auto factor(int l, int i) const {
    return coeffs_.row(static_cast<Eigen::Index>(l) * dim_ + i);
  }

  /// Append one rank term; its coefficients are left to the caller.
  void add_term(double scale, const Matrix& factors);

  /// Rescale every factor to unit coefficient 2-norm, absorbing into scales.
  void normalize();

  /// Throws unless every structural invariant holds.
  void validate() const;

  /// Standardized coordinates of mu with the overshoot clamp applied.
  Vector standardize(const Eigen::Ref<const Vector>& mu) const;

 private:
  int dim_ = 0;
  int rank_ = 0;
  int degree_ = 0;
  Intervals intervals_;
  Vector scales_;
  Matrix coeffs_;
};

/// Coefficient-wise concatenation of two models sharing dim, degree and intervals.
SeparatedModel merge_models(const SeparatedModel& a, const SeparatedModel& b);

double model_eval(const SeparatedModel& model, const Eigen::Ref<const Vector>& mu);

Vector model_grad(const SeparatedModel& model, const Eigen::Ref<const Vector>& mu);

/// Value and gradient in one pass.
double model_eval_grad(const SeparatedModel& model, const Eigen::Ref<const Vector>& mu,
                       Vector& grad);

struct FitConfig {
  int target_rank = 1;
  int degree = 3;
  int max_sweeps = 200;  // per rank
  double rel_residual_tol = 1e-12;
  double sweep_stall_tol = 1e-6;
  double regularization = 1e-10;  // times the mean squared sample value
  bool normalize_factors = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitReport {
  int final_rank = 0;
  int sweeps_used = 0;
  std::vector<double> residual_history;
  bool converged = false;
};

struct FitResult {
  SeparatedModel model;
  FitReport report;
};

/// Relative least-squares residual ||q - Q(mu)|| / ||q|| over a sample set.
double relative_residual(const SeparatedModel& model, const SampleSet& samples);

/// Alternating least squares with rank growth from 1 up to config.target_rank.
FitResult als_fit(const SampleSet& samples, const FitConfig& config, const Intervals& intervals);

}  // namespace tolalloc
