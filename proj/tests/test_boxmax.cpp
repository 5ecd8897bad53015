#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tolalloc/boxmax.hpp"

using namespace tolalloc;
using namespace testing_support;

namespace {
double grid_max(const Response& r, const ToleranceBox& box, int n) {
  double best = -INFINITY;
  const Vector lo = box.lower(), hi = box.upper();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      Vector mu(2);
      mu << lo(0) + (hi(0) - lo(0)) * a / (n - 1), lo(1) + (hi(1) - lo(1)) * b / (n - 1);
      best = std::max(best, r.value(mu));
    }
  }
  return best;
}
}  // namespace

TEST(BoxMax, AgreesWithDenseGrid) {
  const Response r = Response::from_model(rank2_synthetic_model(2));
  CounterRng rng(41);
  for (int k = 0; k < 10; ++k) {
    const Vector c = uniform_vector(rng, 2, -0.5, 0.5);
    const Vector tau = uniform_vector(rng, 2, 0.0, 0.45);
    const ToleranceBox box(c, tau);
    const BoxMaxResult res = box_maximize(r, box);
    const double g = grid_max(r, box, 101);
    EXPECT_GE(res.value, g - 1e-12);
    EXPECT_LE(rel_diff(res.value, g), 1e-3);
    for (const Vector& m : res.maximizers) {
      EXPECT_LE(((m - c).cwiseAbs() - tau).maxCoeff(), 1e-15);
    }
  }
}

TEST(BoxMax, ClosedFormAndGradient) {
  // exp(x) cos(y) on a box with y > 0: maximum at (x_hi, y_lo).
  const Response r = Response::from_evaluator(make_builtin("exp-cos"));
  const ToleranceBox box(vec({0.1, 0.2}), vec({0.1, 0.15}));
  const BoxMaxResult res = box_maximize(r, box);
  EXPECT_NEAR(res.value, std::exp(0.2) * std::cos(0.05), 1e-12);
  ASSERT_EQ(res.maximizers.size(), 1u);
  EXPECT_NEAR(res.maximizers[0](0), 0.2, 1e-12);
  EXPECT_NEAR(res.maximizers[0](1), 0.05, 1e-12);
  const Vector g = grad_G(r, box, res);
  EXPECT_NEAR(g(0), std::exp(0.2) * std::cos(0.05), 1e-10);
  EXPECT_NEAR(g(1), std::exp(0.2) * std::sin(0.05), 1e-10);
}

TEST(BoxMax, InteriorMaximumHasZeroGradient) {
  const Response r(2, [](const Vector& mu, Vector* g) {
    if (g) *g = -2.0 * mu;
    return 1.0 - mu.squaredNorm();
  });
  const ToleranceBox box(vec({0, 0}), vec({0.3, 0.2}));
  const BoxMaxResult res = box_maximize(r, box);
  EXPECT_NEAR(res.value, 1.0, 1e-14);
  EXPECT_EQ(grad_G(r, box, res), vec({0, 0}));
}

TEST(BoxMax, SymmetricTiesKeepEveryMaximizer) {
  const Response r(1, [](const Vector& mu, Vector* g) {
    if (g) *g = 2.0 * mu;
    return mu.squaredNorm();
  });
  const ToleranceBox box(vec({0}), vec({0.5}));
  const BoxMaxResult res = box_maximize(r, box);
  EXPECT_EQ(res.maximizers.size(), 2u);
  EXPECT_NEAR(grad_G(r, box, res)(0), 1.0, 1e-12);
}

TEST(BoxMax, ZeroHalfWidthUsesAbsoluteSlope) {
  const Response r = Response::from_evaluator(make_builtin("linear", {{"a", {-2.0, 1.0}}}));
  const ToleranceBox box(vec({0, 0}), vec({0.0, 0.3}));
  const BoxMaxResult res = box_maximize(r, box);
  EXPECT_NEAR(res.value, 0.3, 1e-14);
  EXPECT_EQ(grad_G(r, box, res), vec({2.0, 1.0}));
}

TEST(BoxMax, GradientMatchesOneSidedDifferences) {
  const SurrogateWorstCase G(Response::from_model(rank2_synthetic_model(3)), vec({0.1, -0.2, 0.05}));
  CounterRng rng(42);
  for (int k = 0; k < 5; ++k) {
    const Vector tau = uniform_vector(rng, 3, 0.05, 0.4);
    const Vector g = G.gradient(tau);
    const double g0 = G.value(tau);
    for (int i = 0; i < 3; ++i) {
      Vector t = tau;
      t(i) += 1e-6;
      EXPECT_NEAR(g(i), (G.value(t) - g0) / 1e-6, 1e-4 * (1 + std::abs(g(i))));
    }
  }
}

TEST(BoxMax, MonotoneUnderNesting) {
  const SurrogateWorstCase G(Response::from_model(rank2_synthetic_model(2)), vec({0.2, 0.1}));
  CounterRng rng(43);
  for (int k = 0; k < 20; ++k) {
    const Vector small = uniform_vector(rng, 2, 0.0, 0.3);
    const Vector big = small + uniform_vector(rng, 2, 0.0, 0.3);
    EXPECT_LE(G.value(small), G.value(big) + 1e-14);
  }
}

TEST(BoxMax, Errors) {
  const Response r = Response::from_model(rank2_synthetic_model(2));
  EXPECT_THROW(box_maximize(r, ToleranceBox(vec({0.9, 0}), vec({0.5, 0.1}))), DomainError);
  const ToleranceBox a(vec({0, 0}), vec({0.1, 0.1}));
  const ToleranceBox b(vec({0, 0}), vec({0.2, 0.1}));
  EXPECT_THROW(grad_G(r, b, box_maximize(r, a)), PreconditionError);
  BoxMaxConfig bad;
  bad.n_multistarts = -1;
  EXPECT_THROW(bad.validate(), PreconditionError);
}

TEST(BoxMax, Deterministic) {
  const Response r = Response::from_model(rank2_synthetic_model(3));
  const ToleranceBox box(vec({0, 0.1, -0.1}), vec({0.3, 0.2, 0.25}));
  const BoxMaxResult a = box_maximize(r, box), b = box_maximize(r, box);
  EXPECT_EQ(a.value, b.value);
  ASSERT_EQ(a.maximizers.size(), b.maximizers.size());
  for (std::size_t k = 0; k < a.maximizers.size(); ++k) EXPECT_EQ(a.maximizers[k], b.maximizers[k]);
}
