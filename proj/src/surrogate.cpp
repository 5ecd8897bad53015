#include "tolalloc/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tolalloc/rng.hpp"

namespace tolalloc {

SeparatedModel::SeparatedModel(int dim, int rank, int degree, Intervals intervals)
    : dim_(dim),
      rank_(rank),
      degree_(degree),
      intervals_(std::move(intervals)),
      scales_(Vector::Ones(rank)),
      coeffs_(Matrix::Zero(static_cast<Eigen::Index>(rank) * dim, degree + 1)) {
  validate();
}

SeparatedModel::SeparatedModel(Intervals intervals, Vector scales, Matrix coeffs)
    : dim_(static_cast<int>(intervals.size())),
      rank_(static_cast<int>(scales.size())),
      degree_(static_cast<int>(coeffs.cols()) - 1),
      intervals_(std::move(intervals)),
      scales_(std::move(scales)),
      coeffs_(std::move(coeffs)) {
  validate();
}

void SeparatedModel::validate() const {
  if (dim_ < 1) throw PreconditionError("separated model needs dim >= 1");
  if (rank_ < 1) throw PreconditionError("separated model needs rank >= 1");
  if (degree_ < 0) throw PreconditionError("separated model needs degree >= 0");
  if (static_cast<int>(intervals_.size()) != dim_) {
    throw DimensionError("separated model: one interval per dimension required");
  }
  for (const auto& iv : intervals_) {
    if (!(iv.lo < iv.hi)) throw DomainError("separated model: interval with lo >= hi");
  }
  if (scales_.size() != rank_) throw DimensionError("separated model: scales size != rank");
  if (coeffs_.rows() != static_cast<Eigen::Index>(rank_) * dim_ || coeffs_.cols() != degree_ + 1) {
    throw DimensionError("separated model: coefficient array must be (rank*dim) x (degree+1)");
  }
  if (!scales_.allFinite() || !coeffs_.allFinite()) {
    throw NumericError("separated model: non-finite coefficients");
  }
}

void SeparatedModel::add_term(double scale, const Matrix& factors) {
  check_dim(factors.rows(), dim_, "add_term factors rows");
  check_dim(factors.cols(), degree_ + 1, "add_term factors cols");
  Matrix grown(coeffs_.rows() + dim_, coeffs_.cols());
  grown.topRows(coeffs_.rows()) = coeffs_;
  grown.bottomRows(dim_) = factors;
  coeffs_ = std::move(grown);
  scales_.conservativeResize(rank_ + 1);
  scales_(rank_) = scale;
  ++rank_;
}

void SeparatedModel::normalize() {
  for (int l = 0; l < rank_; ++l) {
    for (int i = 0; i < dim_; ++i) {
      const double n = factor(l, i).norm();
      if (n > 0.0) {
        factor(l, i) /= n;
        scales_(l) *= n;
      }
    }
  }
}

Vector SeparatedModel::standardize(const Eigen::Ref<const Vector>& mu) const {
  check_dim(mu.size(), dim_, "model evaluation");
  Vector x(dim_);
  for (int i = 0; i < dim_; ++i) {
    const auto sc = to_standard(intervals_[static_cast<std::size_t>(i)], mu(i));
    double xi = sc.x;
    if (sc.extrapolated) {
      // Overshoot measured as a fraction of the interval width.
      const double over = 0.5 * (std::abs(xi) - 1.0);
      if (!(over <= kOvershootSlack)) {
        throw DomainError("design parameter mu_" + std::to_string(i + 1) + " = " +
                          std::to_string(mu(i)) + " lies outside the model interval");
      }
      xi = std::clamp(xi, -1.0, 1.0);
    }
    x(i) = xi;
  }
  return x;
}

SeparatedModel merge_models(const SeparatedModel& a, const SeparatedModel& b) {
  if (a.dim() != b.dim() || a.degree() != b.degree() || a.intervals() != b.intervals()) {
    throw DimensionError("merge_models: models must share dim, degree and intervals");
  }
  Vector s(a.rank() + b.rank());
  s << a.scales(), b.scales();
  Matrix c(a.coeffs().rows() + b.coeffs().rows(), a.coeffs().cols());
  c << a.coeffs(), b.coeffs();
  return SeparatedModel(a.intervals(), std::move(s), std::move(c));
}

double model_eval(const SeparatedModel& model, const Eigen::Ref<const Vector>& mu) {
  const Vector x = model.standardize(mu);
  const int d = model.dim();
  const int p = model.degree();
  Matrix basis(p + 1, d);
  for (int i = 0; i < d; ++i) basis.col(i) = legendre_values<double>(p, x(i));
  double total = 0.0;
  for (int l = 0; l < model.rank(); ++l) {
    double prod = model.scales()(l);
    for (int i = 0; i < d; ++i) prod *= model.factor(l, i).dot(basis.col(i));
    total += prod;
  }
  return total;
}

double model_eval_grad(const SeparatedModel& model, const Eigen::Ref<const Vector>& mu,
                       Vector& grad) {
  const Vector x = model.standardize(mu);
  const int d = model.dim();
  const int p = model.degree();
  Matrix basis(p + 1, d);
  Matrix dbasis(p + 1, d);
  for (int i = 0; i < d; ++i) {
    basis.col(i) = legendre_values<double>(p, x(i));
    dbasis.col(i) = legendre_derivatives<double>(Vector(basis.col(i)));
  }
  grad.setZero(d);
  Vector g(d), dg(d), prefix(d + 1), suffix(d + 1);
  double total = 0.0;
  for (int l = 0; l < model.rank(); ++l) {
    for (int i = 0; i < d; ++i) {
      g(i) = model.factor(l, i).dot(basis.col(i));
      dg(i) = model.factor(l, i).dot(dbasis.col(i));
    }
    prefix(0) = 1.0;
    for (int i = 0; i < d; ++i) prefix(i + 1) = prefix(i) * g(i);
    suffix(d) = 1.0;
    for (int i = d - 1; i >= 0; --i) suffix(i) = suffix(i + 1) * g(i);
    const double s = model.scales()(l);
    total += s * prefix(d);
    for (int i = 0; i < d; ++i) grad(i) += s * prefix(i) * dg(i) * suffix(i + 1);
  }
  for (int i = 0; i < d; ++i) grad(i) *= 2.0 / model.intervals()[static_cast<std::size_t>(i)].width();
  return total;
}

Vector model_grad(const SeparatedModel& model, const Eigen::Ref<const Vector>& mu) {
  Vector grad;
  model_eval_grad(model, mu, grad);
  return grad;
}

void FitConfig::validate() const {
  if (target_rank < 1) throw PreconditionError("fit: target_rank must be >= 1");
  if (degree < 0) throw PreconditionError("fit: degree must be >= 0");
  if (max_sweeps < 1) throw PreconditionError("fit: max_sweeps must be >= 1");
  if (!(rel_residual_tol > 0.0)) throw PreconditionError("fit: rel_residual_tol must be > 0");
  if (!(sweep_stall_tol > 0.0)) throw PreconditionError("fit: sweep_stall_tol must be > 0");
  if (!(regularization >= 0.0)) throw PreconditionError("fit: regularization must be >= 0");
}

double relative_residual(const SeparatedModel& model, const SampleSet& samples) {
  const double qn = samples.values.norm();
  double r2 = 0.0;
  for (Eigen::Index n = 0; n < samples.size(); ++n) {
    const double e = samples.values(n) - model_eval(model, samples.points.row(n).transpose());
    r2 += e * e;
  }
  return qn > 0.0 ? std::sqrt(r2) / qn : std::sqrt(r2);
}

namespace {

// Per-sample Legendre tables and current factor values; owned by one fit.
class AlsState {
 public:
  AlsState(const SampleSet& samples, SeparatedModel& model)
      : q_(samples.values), model_(model), n_(samples.size()), d_(model.dim()), p_(model.degree()) {
    basis_.resize(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i) {
      Matrix& b = basis_[static_cast<std::size_t>(i)];
      b.resize(n_, p_ + 1);
      const Interval& iv = model.intervals()[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double x = std::clamp(to_standard(iv, samples.points(k, i)).x, -1.0, 1.0);
        b.row(k) = legendre_values<double>(p_, x).transpose();
      }
    }
    refresh_factor_values();
  }

  void refresh_factor_values() {
    const int r = model_.rank();
    values_.resize(n_, static_cast<Eigen::Index>(r) * d_);
    for (int l = 0; l < r; ++l) {
      for (int i = 0; i < d_; ++i) update_column(l, i);
    }
  }

  // Joint least-squares solve for every rank's factor in dimension i.
  void solve_direction(int i, double lambda, bool normalize) {
    const int r = model_.rank();
    const int m = p_ + 1;
    const Matrix& b = basis_[static_cast<std::size_t>(i)];
    const Eigen::Index cols = static_cast<Eigen::Index>(r) * m;
    for (int l = 0; l < r; ++l) {
      // A vanished term is revived with unit scale; its factor in i is re-solved below.
      if (model_.scales()(l) == 0.0) {
        model_.scales()(l) = 1.0;
        model_.factor(l, i).setZero();
      }
    }
    Matrix a(n_ + cols, cols);
    a.setZero();
    for (int l = 0; l < r; ++l) {
      Vector w = Vector::Constant(n_, model_.scales()(l));
      for (int k = 0; k < d_; ++k) {
        if (k != i) w.array() *= values_.col(column(l, k)).array();
      }
      a.block(0, static_cast<Eigen::Index>(l) * m, n_, m) = b.array().colwise() * w.array();
    }
    const double sqrt_lambda = std::sqrt(lambda);
    a.bottomRows(cols).diagonal().setConstant(sqrt_lambda);
    Vector rhs = Vector::Zero(n_ + cols);
    rhs.head(n_) = q_;

    Eigen::HouseholderQR<Matrix> qr(a);
    const auto rdiag = qr.matrixQR().diagonal().cwiseAbs();
    const double rmax = rdiag.maxCoeff();
    if (!(rmax > 0.0) || !(rdiag.minCoeff() > rmax * 1e-15)) {
      throw FitError("ALS: rank-deficient linear system in direction mu_" + std::to_string(i + 1));
    }
    const Vector sol = qr.solve(rhs);
    if (!sol.allFinite()) throw FitError("ALS: non-finite solution in direction mu_" + std::to_string(i + 1));

    for (int l = 0; l < r; ++l) {
      // The columns carry s_l, so the solution is the factor itself.
      model_.factor(l, i) = sol.segment(static_cast<Eigen::Index>(l) * m, m).transpose();
      if (normalize) {
        const double nrm = model_.factor(l, i).norm();
        if (nrm > 0.0) {
          model_.factor(l, i) /= nrm;
          model_.scales()(l) *= nrm;
        }
      }
      update_column(l, i);
    }
  }

  double residual_norm() const {
    Vector pred = Vector::Zero(n_);
    for (int l = 0; l < model_.rank(); ++l) {
      Vector t = Vector::Constant(n_, model_.scales()(l));
      for (int i = 0; i < d_; ++i) t.array() *= values_.col(column(l, i)).array();
      pred += t;
    }
    return (q_ - pred).norm();
  }

 private:
  Eigen::Index column(int l, int i) const { return static_cast<Eigen::Index>(l) * d_ + i; }
  void update_column(int l, int i) {
    values_.col(column(l, i)) = basis_[static_cast<std::size_t>(i)] * model_.factor(l, i).transpose();
  }

  const Vector& q_;
  SeparatedModel& model_;
  Eigen::Index n_;
  int d_;
  int p_;
  std::vector<Matrix> basis_;
  Matrix values_;  // N x (rank*dim) factor values
};

Matrix random_factors(CounterRng& rng, int dim, int degree) {
  Matrix f(dim, degree + 1);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= degree; ++j) f(i, j) = rng.uniform(-1.0, 1.0);
  }
  return f;
}

// Each term with its scale spread evenly over the factors, so a term is a
// continuous function of these rows regardless of normalization.
Matrix distributed_factors(const SeparatedModel& model) {
  Matrix out = model.coeffs();
  const int d = model.dim();
  for (int l = 0; l < model.rank(); ++l) {
    const double s = model.scales()(l);
    const double w = std::copysign(std::pow(std::abs(s), 1.0 / d), s);
    out.middleRows(static_cast<Eigen::Index>(l) * d, d) *= w;
    if (s < 0.0) out.middleRows(static_cast<Eigen::Index>(l) * d + 1, d - 1) *= -1.0;
  }
  return out;
}

void set_distributed_factors(SeparatedModel& model, const Matrix& rows) {
  model.coeffs() = rows;
  model.scales().setOnes();
  model.normalize();
}

}  // namespace

constexpr double kResidualNoise = 1e-14;

FitResult als_fit(const SampleSet& samples, const FitConfig& config, const Intervals& intervals) {
  config.validate();
  samples.validate();
  const int d = samples.dim();
  check_dim(static_cast<Eigen::Index>(intervals.size()), d, "als_fit intervals");
  const Eigen::Index needed = static_cast<Eigen::Index>(config.target_rank) * (config.degree + 1);
  if (samples.size() < needed) {
    throw PreconditionError("als_fit: need at least rank*(degree+1) = " + std::to_string(needed) +
                            " samples, got " + std::to_string(samples.size()));
  }
  samples.check_inside(intervals, kOvershootSlack);

  const double qnorm = samples.values.norm();
  const double mean_sq = samples.values.squaredNorm() / static_cast<double>(samples.size());
  const double lambda = config.regularization * (mean_sq > 0.0 ? mean_sq : 1.0);
  const double denom = qnorm > 0.0 ? qnorm : 1.0;

  CounterRng rng(config.seed, /*stream=*/0xA15);
  SeparatedModel model(d, 1, config.degree, intervals);
  model.coeffs() = random_factors(rng, d, config.degree);

  FitReport report;
  AlsState state(samples, model);
  double rel = state.residual_norm() / denom;

  while (true) {
    bool stalled = false;
    int sweeps_here = 0;
    double step = 1.0;
    while (sweeps_here < config.max_sweeps) {
      const Matrix before = distributed_factors(model);
      for (int i = 0; i < d; ++i) state.solve_direction(i, lambda, config.normalize_factors);
      ++sweeps_here;
      ++report.sweeps_used;
      const double prev = rel;
      rel = state.residual_norm() / denom;

      // Extrapolate along the sweep's change; kept only when it lowers the residual.
      if (sweeps_here > 1 && rel > config.rel_residual_tol) {
        const Matrix after = distributed_factors(model);
        const Vector scales = model.scales();
        const Matrix coeffs = model.coeffs();
        bool accepted = false;
        while (!accepted) {
          set_distributed_factors(model, after + step * (after - before));
          state.refresh_factor_values();
          const double rel_ext = state.residual_norm() / denom;
          if (rel_ext < rel) {
            rel = rel_ext;
            accepted = true;
            step = std::min(2.0 * step, 64.0);
          } else if (step > 1.0) {
            step = 1.0;
          } else {
            break;
          }
        }
        if (!accepted) {
          model.scales() = scales;
          model.coeffs() = coeffs;
          state.refresh_factor_values();
        }
      }
      report.residual_history.push_back(rel);
      if (rel <= config.rel_residual_tol) break;
      // Changes below the rounding noise of the residual count as a stall too.
      if (std::abs(prev - rel) <= std::max(config.sweep_stall_tol * prev, kResidualNoise)) {
        stalled = true;
        break;
      }
    }
    if (rel <= config.rel_residual_tol) {
      report.converged = true;
      break;
    }
    if (model.rank() >= config.target_rank) {
      report.converged = stalled;
      break;
    }
    model.add_term(1.0, random_factors(rng, d, config.degree));
    state.refresh_factor_values();
  }

  if (config.normalize_factors) model.normalize();
  model.validate();
  report.final_rank = model.rank();
  return {std::move(model), std::move(report)};
}

}  // namespace tolalloc
