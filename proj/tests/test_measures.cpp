#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tolalloc/evaluator.hpp"
#include "tolalloc/measures.hpp"

using namespace tolalloc;
using namespace testing_support;

namespace {
std::vector<MeasureSpec> all_measures() {
  return {MeasureSpec{OneNorm{}}, MeasureSpec{MuNorm{vec({2.0, 0.5, 1.0})}}, MeasureSpec{MinusOneNorm{}},
          MeasureSpec{ReciprocalPowerCost{vec({0.1, 0.2, 0.0}), vec({1.0, 2.0, 0.5}), vec({1.0, 2.0, 0.5})}}};
}
}  // namespace

TEST(Measures, Values) {
  const Vector tau = vec({0.5, 0.25, 1.0});
  EXPECT_DOUBLE_EQ(measure_value({OneNorm{}}, tau), 1.75);
  EXPECT_DOUBLE_EQ(measure_value({MuNorm{vec({2.0, 0.5, 1.0})}}, tau), 1.0 + 0.125 + 1.0);
  EXPECT_DOUBLE_EQ(measure_value({MinusOneNorm{}}, tau), 1.0 / 7.0);
  const double cost = (0.1 + 1.0 / 0.5) + (0.2 + 2.0 / 0.0625) + (0.0 + 0.5 / 1.0);
  EXPECT_NEAR(measure_value(all_measures()[3], tau), 1.0 / cost, 1e-15);
}

TEST(Measures, ZeroComponentGivesZeroForSingularKinds) {
  const Vector tau = vec({0.5, 0.0, 1.0});
  EXPECT_EQ(measure_value({MinusOneNorm{}}, tau), 0.0);
  EXPECT_EQ(measure_value(all_measures()[3], tau), 0.0);
  EXPECT_THROW(measure_grad({MinusOneNorm{}}, tau), DomainError);
  EXPECT_FALSE(MeasureSpec{OneNorm{}}.singular_at_zero());
  EXPECT_TRUE(MeasureSpec{MinusOneNorm{}}.singular_at_zero());
}

TEST(Measures, GradientsMatchCentralDifferences) {
  CounterRng rng(51);
  for (const MeasureSpec& m : all_measures()) {
    for (int k = 0; k < 20; ++k) {
      const Vector tau = uniform_vector(rng, 3, 0.1, 2.0);
      const Vector g = measure_grad(m, tau);
      for (int i = 0; i < 3; ++i) {
        const double h = 1e-6 * tau(i);
        Vector up = tau, dn = tau;
        up(i) += h;
        dn(i) -= h;
        const double fd = (measure_value(m, up) - measure_value(m, dn)) / (2 * h);
        EXPECT_NEAR(g(i), fd, 1e-8 * (std::abs(fd) + measure_value(m, tau))) << m.name();
      }
    }
  }
}

TEST(Measures, MonotoneUnderNesting) {
  CounterRng rng(52);
  for (const MeasureSpec& m : all_measures()) {
    for (int k = 0; k < 100; ++k) {
      const Vector small = uniform_vector(rng, 3, 0.0, 1.0);
      const Vector big = small + uniform_vector(rng, 3, 0.0, 1.0);
      EXPECT_LE(measure_value(m, small), measure_value(m, big)) << m.name();
    }
  }
}

TEST(Measures, Validation) {
  EXPECT_THROW(MeasureSpec{MuNorm{vec({0.0, 0.0})}}.validate(2), PreconditionError);
  EXPECT_THROW(MeasureSpec{MuNorm{vec({1.0, -1.0})}}.validate(2), PreconditionError);
  EXPECT_THROW(MeasureSpec{MuNorm{vec({1.0})}}.validate(2), DimensionError);
  EXPECT_THROW((MeasureSpec{ReciprocalPowerCost{vec({0.0}), vec({0.0}), vec({1.0})}}.validate(1)),
               PreconditionError);
  EXPECT_THROW(measure_value({OneNorm{}}, vec({-0.1})), DomainError);
  for (const MeasureSpec& m : all_measures()) EXPECT_NO_THROW(m.validate(3));
}

TEST(Measures, JsonRoundTrip) {
  for (const MeasureSpec& m : all_measures()) {
    const nlohmann::json j = measure_spec_to_json(m);
    EXPECT_EQ(measure_spec_to_json(measure_spec_from_json(j)), j);
    EXPECT_EQ(measure_spec_from_json(j).name(), m.name());
  }
  const MeasureSpec open = measure_spec_from_json({{"kind", "mu-norm"}});
  EXPECT_EQ(std::get<MuNorm>(open.kind).weights.size(), 0);
  EXPECT_THROW(measure_spec_from_json({{"kind", "two-norm"}}), ParseError);
}

TEST(Measures, MuWeightsFromSurrogate) {
  const SeparatedModel m = rank2_synthetic_model(3);
  const Vector nominal = vec({0.1, -0.2, 0.3});
  const MuWeights w = compute_mu_weights(m, nominal);
  EXPECT_FALSE(w.degenerate);
  EXPECT_EQ(w.weights, Vector(model_grad(m, nominal).cwiseAbs()));
}
