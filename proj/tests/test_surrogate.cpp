#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tolalloc/evaluator.hpp"
#include "tolalloc/io.hpp"
#include "tolalloc/model_io.hpp"
#include "tolalloc/surrogate.hpp"

using namespace tolalloc;
using namespace testing_support;

namespace {

// Explicit Legendre polynomials up to degree 3.
double legendre_closed(int j, double x) {
  switch (j) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return 0.5 * (3 * x * x - 1);
    case 3: return 0.5 * (5 * x * x * x - 3 * x);
  }
  return NAN;
}

double naive_eval(const SeparatedModel& m, const Vector& mu) {
  double total = 0.0;
  for (int l = 0; l < m.rank(); ++l) {
    double prod = m.scales()(l);
    for (int i = 0; i < m.dim(); ++i) {
      const Interval& iv = m.intervals()[i];
      const double x = 2.0 * (mu(i) - iv.lo) / (iv.hi - iv.lo) - 1.0;
      double s = 0.0;
      for (int j = 0; j <= m.degree(); ++j) s += m.coeffs()(l * m.dim() + i, j) * legendre_closed(j, x);
      prod *= s;
    }
    total += prod;
  }
  return total;
}

SeparatedModel random_model(CounterRng& rng, int d, int r, int p, const Intervals& ivs) {
  SeparatedModel m(d, r, p, ivs);
  for (Eigen::Index k = 0; k < m.coeffs().size(); ++k) m.coeffs().data()[k] = rng.uniform(-1, 1);
  for (int l = 0; l < r; ++l) m.scales()(l) = rng.uniform(0.5, 2.0);
  return m;
}

Vector random_point(CounterRng& rng, const Intervals& ivs) {
  Vector mu(static_cast<Eigen::Index>(ivs.size()));
  for (std::size_t i = 0; i < ivs.size(); ++i) mu(i) = rng.uniform(ivs[i].lo, ivs[i].hi);
  return mu;
}

}  // namespace

TEST(SeparatedModel, ProductOfUnitFactors) {
  Intervals ivs(2, Interval(-1, 1));
  Matrix c(2, 2);
  c << 1, 1,    // 1 + mu_1
      1, -1;    // 1 - mu_2
  const SeparatedModel m(ivs, vec({1.0}), c);
  EXPECT_DOUBLE_EQ(model_eval(m, vec({0.0, 0.0})), 1.0);
  EXPECT_DOUBLE_EQ(model_eval(m, vec({0.5, -0.5})), 1.5 * 1.5);
}

TEST(SeparatedModel, MatchesNaiveSumOfProducts) {
  CounterRng rng(11);
  const Intervals ivs{Interval(-1, 2), Interval(0, 0.5), Interval(-3, -1)};
  const SeparatedModel m = random_model(rng, 3, 2, 3, ivs);
  for (int k = 0; k < 100; ++k) {
    const Vector mu = random_point(rng, ivs);
    const double ref = naive_eval(m, mu);
    EXPECT_LE(std::abs(model_eval(m, mu) - ref), 1e-13 * std::max(1.0, std::abs(ref)));
  }
}

TEST(SeparatedModel, GradientMatchesCentralDifferences) {
  CounterRng rng(12);
  const Intervals ivs{Interval(-1, 2), Interval(0, 0.5), Interval(-3, -1), Interval(5, 6)};
  const SeparatedModel m = random_model(rng, 4, 3, 5, ivs);
  for (int k = 0; k < 100; ++k) {
    Vector mu = random_point(rng, ivs);
    Vector grad;
    const double v = model_eval_grad(m, mu, grad);
    EXPECT_NEAR(v, model_eval(m, mu), 1e-14 * (1 + std::abs(v)));
    for (int i = 0; i < 4; ++i) {
      const double h = 1e-6 * ivs[i].width();
      // Keep the stencil inside the interval.
      mu(i) = std::clamp(mu(i), ivs[i].lo + h, ivs[i].hi - h);
      model_eval_grad(m, mu, grad);
      Vector up = mu, dn = mu;
      up(i) += h;
      dn(i) -= h;
      const double fd = (model_eval(m, up) - model_eval(m, dn)) / (2 * h);
      if (std::abs(grad(i)) < 1e-10) {
        EXPECT_NEAR(grad(i), fd, 1e-8);
      } else {
        EXPECT_LE(rel_diff(grad(i), fd), 1e-6) << "axis " << i;
      }
    }
  }
}

TEST(SeparatedModel, OvershootClampedFarOutsideRejected) {
  Intervals ivs(1, Interval(0, 1));
  const SeparatedModel m(ivs, vec({1.0}), (Matrix(1, 2) << 0.0, 1.0).finished());
  EXPECT_DOUBLE_EQ(model_eval(m, vec({1.0 + 1e-12})), 1.0);
  EXPECT_THROW(model_eval(m, vec({1.01})), DomainError);
  EXPECT_THROW(model_eval(m, vec({0.5, 0.5})), DimensionError);
}

TEST(SeparatedModel, InvariantsEnforced) {
  Intervals ivs(2, Interval(-1, 1));
  EXPECT_THROW(SeparatedModel(ivs, vec({1.0}), Matrix::Zero(3, 2)), DimensionError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = NAN;
  EXPECT_THROW(SeparatedModel(ivs, vec({1.0}), bad), NumericError);
  EXPECT_THROW(Interval(1.0, 1.0), DomainError);
}

TEST(SeparatedModel, MergeAddsTerms) {
  CounterRng rng(13);
  Intervals ivs(2, Interval(-1, 1));
  const SeparatedModel a = random_model(rng, 2, 1, 2, ivs), b = random_model(rng, 2, 2, 2, ivs);
  const SeparatedModel m = merge_models(a, b);
  EXPECT_EQ(m.rank(), 3);
  const Vector mu = vec({0.3, -0.4});
  EXPECT_NEAR(model_eval(m, mu), model_eval(a, mu) + model_eval(b, mu), 1e-14);
}

TEST(Als, RecoversRankOneDegreeOne) {
  const Intervals ivs(2, Interval(-1, 1));
  FunctionEvaluator truth(2, [](const Vector& mu) { return (1 + mu(0)) * (1 - mu(1)); });
  const SampleSet s = draw_samples(truth, ivs, 50, 5);
  FitConfig cfg;
  cfg.target_rank = 1;
  cfg.degree = 1;
  const FitResult fit = als_fit(s, cfg, ivs);
  EXPECT_LT(relative_residual(fit.model, s), 1e-10);
  EXPECT_TRUE(fit.report.converged);
  EXPECT_EQ(fit.report.final_rank, 1);
  EXPECT_NEAR(model_eval(fit.model, vec({0.2, 0.4})), 1.2 * 0.6, 1e-10);
}

TEST(Als, ResidualNonIncreasingWithinRank) {
  const Intervals ivs(3, Interval(-1, 1));
  FunctionEvaluator truth(3, [](const Vector& mu) { return std::exp(0.5 * mu(0)) * std::cos(mu(1)) + mu(2) * mu(0); });
  const SampleSet s = draw_samples(truth, ivs, 300, 6);
  FitConfig cfg;
  cfg.target_rank = 1;
  cfg.degree = 4;
  const FitResult fit = als_fit(s, cfg, ivs);
  const auto& h = fit.report.residual_history;
  ASSERT_GE(h.size(), 2u);
  for (std::size_t k = 1; k < h.size(); ++k) EXPECT_LE(h[k], h[k - 1] * (1 + 1e-6) + 1e-12);
}

TEST(Als, ReportedResidualMatchesModel) {
  const Intervals ivs(2, Interval(0, 3));
  FunctionEvaluator truth(2, [](const Vector& mu) { return 1.0 + std::sin(mu(0)) * mu(1) + mu(1) * mu(1); });
  const SampleSet s = draw_samples(truth, ivs, 200, 7);
  FitConfig cfg;
  cfg.target_rank = 3;
  cfg.degree = 4;
  const FitResult fit = als_fit(s, cfg, ivs);
  EXPECT_NEAR(fit.report.residual_history.back(), relative_residual(fit.model, s), 1e-12);
  EXPECT_LT(fit.report.residual_history.back(), 1e-3);
}

TEST(Als, DeterministicInSeed) {
  const Intervals ivs(2, Interval(-1, 1));
  auto ev = make_builtin("exp-cos");
  const SampleSet s = draw_samples(*ev, ivs, 100, 8);
  FitConfig cfg;
  cfg.target_rank = 2;
  cfg.degree = 3;
  cfg.seed = 99;
  const FitResult a = als_fit(s, cfg, ivs), b = als_fit(s, cfg, ivs);
  EXPECT_EQ(a.model.coeffs(), b.model.coeffs());
  EXPECT_EQ(a.model.scales(), b.model.scales());
}

TEST(Als, Preconditions) {
  const Intervals ivs(2, Interval(-1, 1));
  FunctionEvaluator truth(2, [](const Vector& mu) { return mu.sum(); });
  const SampleSet s = draw_samples(truth, ivs, 5, 1);
  FitConfig cfg;
  cfg.target_rank = 2;
  cfg.degree = 3;
  EXPECT_THROW(als_fit(s, cfg, ivs), PreconditionError);
  const Intervals narrow(2, Interval(-0.5, 0.5));
  cfg.target_rank = 1;
  cfg.degree = 1;
  EXPECT_THROW(als_fit(draw_samples(truth, ivs, 50, 2), cfg, narrow), DomainError);
  cfg.degree = -1;
  EXPECT_THROW(cfg.validate(), PreconditionError);
}

TEST(ModelIo, RoundTripIsExact) {
  CounterRng rng(14);
  const Intervals ivs{Interval(-1, 2), Interval(0.125, 0.5)};
  const SeparatedModel m = random_model(rng, 2, 3, 4, ivs);
  const auto dir = fresh_dir("modelio");
  save_model(dir / "m.json", m);
  const SeparatedModel back = load_model(dir / "m.json");
  EXPECT_EQ(back.coeffs(), m.coeffs());
  EXPECT_EQ(back.scales(), m.scales());
  EXPECT_EQ(back.intervals(), m.intervals());
  EXPECT_EQ(model_eval(back, vec({0.3, 0.2})), model_eval(m, vec({0.3, 0.2})));
}

TEST(ModelIo, RejectsMalformedFiles) {
  const auto dir = fresh_dir("modelio_bad");
  write_text(dir / "a.json", "{\"format_version\": 2}");
  EXPECT_THROW(load_model(dir / "a.json"), ParseError);
  write_text(dir / "b.json", "not json");
  EXPECT_THROW(load_model(dir / "b.json"), ParseError);
  write_text(dir / "c.json",
             R"({"format_version":1,"dim":1,"rank":1,"degree":1,"intervals":[[0,1]],"scales":[1],"coeffs":[[[1]]]})");
  EXPECT_THROW(load_model(dir / "c.json"), ParseError);
}
