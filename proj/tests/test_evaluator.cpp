#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tolalloc/evaluator.hpp"
#include "tolalloc/io.hpp"
#include "tolalloc/samples.hpp"

using namespace tolalloc;
using namespace testing_support;

TEST(Builtins, QuadraticBowl) {
  auto ev = make_builtin("quadratic-bowl", {{"a", {1.0, 4.0}}});
  EXPECT_EQ(ev->dim(), 2);
  EXPECT_DOUBLE_EQ(ev->value(vec({1.0, 0.5})), 2.0);
  EXPECT_EQ(ev->gradient(vec({1.0, 0.5})), vec({2.0, 4.0}));
  auto centered = make_builtin("quadratic-bowl", {{"a", {1.0}}, {"center", {2.0}}});
  EXPECT_DOUBLE_EQ(centered->value(vec({3.0})), 1.0);
}

TEST(Builtins, GradientsMatchFiniteDifferences) {
  const std::vector<std::pair<std::string, nlohmann::json>> cases = {
      {"quadratic-bowl", {{"a", {1.0, 4.0, 0.5}}}},
      {"exp-cos", nlohmann::json::object()},
      {"rank2-synthetic", {{"dim", 3}}},
      {"linear", {{"a", {1.0, -2.0}}, {"b", 3.0}}},
  };
  CounterRng rng(21);
  for (const auto& [name, params] : cases) {
    auto ev = make_builtin(name, params);
    for (int k = 0; k < 10; ++k) {
      const Vector mu = uniform_vector(rng, ev->dim(), -0.9, 0.9);
      const Vector g = ev->gradient(mu);
      for (int i = 0; i < ev->dim(); ++i) {
        Vector up = mu, dn = mu;
        up(i) += 1e-6;
        dn(i) -= 1e-6;
        EXPECT_NEAR(g(i), (ev->value(up) - ev->value(dn)) / 2e-6, 1e-6 * (1 + std::abs(g(i)))) << name;
      }
    }
  }
}

TEST(Builtins, Rank2SyntheticMatchesItsSeparatedModel) {
  auto ev = make_builtin("rank2-synthetic", {{"dim", 4}});
  const SeparatedModel m = rank2_synthetic_model(4);
  CounterRng rng(22);
  for (int k = 0; k < 50; ++k) {
    const Vector mu = uniform_vector(rng, 4, -1, 1);
    EXPECT_NEAR(model_eval(m, mu), ev->value(mu), 1e-13);
  }
}

TEST(Builtins, CatalogAndLookup) {
  for (const auto& info : builtin_catalog()) EXPECT_FALSE(info.formula.empty());
  EXPECT_THROW(make_builtin("no-such-thing"), LookupError);
  EXPECT_THROW(make_builtin("quadratic-bowl"), PreconditionError);
}

TEST(MaxComposite, PicksLowestIndexOnTies) {
  auto a = make_builtin("linear", {{"a", {1.0, 0.0}}});
  auto b = make_builtin("linear", {{"a", {0.0, 1.0}}});
  MaxCompositeEvaluator m({a, b});
  EXPECT_EQ(m.active_branch(vec({0.5, 0.2})), 0u);
  EXPECT_EQ(m.active_branch(vec({0.2, 0.5})), 1u);
  EXPECT_EQ(m.active_branch(vec({0.3, 0.3})), 0u);
  EXPECT_DOUBLE_EQ(m.value(vec({0.2, 0.5})), 0.5);
  EXPECT_EQ(m.gradient(vec({0.3, 0.3})), vec({1.0, 0.0}));
}

TEST(Tabulated, MultilinearReproducesBilinearFunctions) {
  SampleSet grid;
  const std::vector<double> xs{0.0, 0.5, 2.0}, ys{-1.0, 1.0};
  grid.points.resize(6, 2);
  grid.values.resize(6);
  int k = 0;
  // Shuffled row order on purpose.
  for (double y : ys) {
    for (double x : xs) {
      grid.points.row(k) << x, y;
      grid.values(k) = 1 + 2 * x - y + 0.5 * x * y;
      ++k;
    }
  }
  TabulatedEvaluator lin(grid, Interpolation::Multilinear);
  EXPECT_NEAR(lin.value(vec({1.25, 0.3})), 1 + 2.5 - 0.3 + 0.5 * 1.25 * 0.3, 1e-14);
  EXPECT_DOUBLE_EQ(lin.value(vec({2.0, 1.0})), 1 + 4 - 1 + 1);
  EXPECT_THROW(lin.value(vec({2.1, 0.0})), DomainError);

  TabulatedEvaluator near(grid, Interpolation::Nearest);
  EXPECT_DOUBLE_EQ(near.value(vec({0.6, 0.9})), 1 + 1 - 1 + 0.25);
}

TEST(Tabulated, RejectsIncompleteGrid) {
  SampleSet grid;
  grid.points = (Matrix(3, 2) << 0, 0, 1, 0, 0, 1).finished();
  grid.values = vec({1, 2, 3});
  EXPECT_THROW(TabulatedEvaluator(grid, Interpolation::Multilinear), PreconditionError);
}

TEST(Sampling, DeterministicAndIndependentOfJobs) {
  auto ev = make_builtin("exp-cos");
  const Intervals dom{Interval(-0.5, 0.5), Interval(0, 1)};
  const SampleSet a = draw_samples(*ev, dom, 100, 3, 1);
  const SampleSet b = draw_samples(*ev, dom, 100, 3, 4);
  const SampleSet c = draw_samples(*ev, dom, 100, 4, 1);
  EXPECT_EQ(format_samples_csv(a), format_samples_csv(b));
  EXPECT_NE(format_samples_csv(a), format_samples_csv(c));
  EXPECT_NO_THROW(a.check_inside(dom));
  for (Eigen::Index j = 0; j < a.size(); ++j) EXPECT_EQ(a.values(j), ev->value(a.points.row(j).transpose()));
}

TEST(Sampling, QuadraticBowlValuesNonNegative) {
  auto ev = make_builtin("quadratic-bowl", {{"a", {1.0, 4.0}}});
  const SampleSet s = draw_samples(*ev, {Interval(-1, 1), Interval(-0.5, 0.5)}, 1000, 1);
  EXPECT_GE(s.values.minCoeff(), 0.0);
}

TEST(Sampling, FailuresNameTheSample) {
  FunctionEvaluator bad(1, [](const Vector& mu) {
    if (mu(0) > 0.5) throw DomainError("too big");
    return mu(0);
  });
  try {
    draw_samples(bad, {Interval(0, 1)}, 50, 1);
    FAIL() << "expected an evaluator error";
  } catch (const EvaluatorError& e) {
    EXPECT_NE(std::string(e.what()).find("sample "), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("mu = "), std::string::npos);
  }
}

TEST(SamplesCsv, RoundTripAndErrors) {
  SampleSet s;
  s.points = (Matrix(2, 2) << 0.1, 1.0 / 3.0, -2.5e-7, 4).finished();
  s.values = vec({std::exp(1.0), -1});
  const std::string text = format_samples_csv(s);
  EXPECT_EQ(text.substr(0, text.find('\n')), "mu_1,mu_2,q");
  const SampleSet back = parse_samples_csv(text);
  EXPECT_EQ(back.points, s.points);
  EXPECT_EQ(back.values, s.values);
  EXPECT_THROW(parse_samples_csv("x,q\n1,2\n"), ParseError);
  EXPECT_THROW(parse_samples_csv("mu_1,q\n1\n"), ParseError);
  EXPECT_THROW(parse_samples_csv("mu_1,q\n1,zz\n"), ParseError);
  EXPECT_THROW(parse_samples_csv(""), ParseError);
}

TEST(EvaluatorSpec, JsonRoundTrip) {
  const nlohmann::json j = {{"type", "max"},
                            {"children",
                             {{{"type", "builtin"}, {"name", "exp-cos"}, {"parameters", nlohmann::json::object()}},
                              {{"type", "external"},
                               {"command", "x"},
                               {"args", {"1"}},
                               {"timeout_seconds", 5.0},
                               {"dim", 2}}}}};
  EXPECT_EQ(evaluator_spec_to_json(evaluator_spec_from_json(j)), j);
  EXPECT_THROW(evaluator_spec_from_json({{"type", "nope"}}), ParseError);
  EXPECT_THROW(evaluator_spec_from_json({{"type", "external"}, {"command", "x"}}), ParseError);
}

namespace {
ExternalSpec shell(const std::string& script, double timeout = 10.0) {
  ExternalSpec s;
  s.command = "/bin/sh";
  s.args = {"-c", script};
  s.dim = 2;
  s.timeout_seconds = timeout;
  return s;
}
}  // namespace

TEST(External, HelperMatchesBuiltinBitForBit) {
  ExternalSpec spec;
  spec.command = QUADRATIC_BOWL_HELPER;
  spec.args = {"1", "4"};
  spec.dim = 2;
  ExternalEvaluator ext(spec);
  auto builtin = make_builtin("quadratic-bowl", {{"a", {1.0, 4.0}}});
  CounterRng rng(31);
  for (int k = 0; k < 200; ++k) {
    const Vector mu = uniform_vector(rng, 2, -1, 1);
    EXPECT_EQ(ext.value(mu), builtin->value(mu));
  }
  EXPECT_FALSE(ext.thread_safe());
}

TEST(External, CrashReportsStderrAndStatus) {
  ExternalEvaluator ext(shell("read line; echo 'solver blew up' >&2; exit 7"));
  try {
    ext.value(vec({0.1, 0.2}));
    FAIL() << "expected an evaluator error";
  } catch (const EvaluatorError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("solver blew up"), std::string::npos) << msg;
    EXPECT_NE(msg.find("status 7"), std::string::npos) << msg;
  }
  EXPECT_THROW(ext.value(vec({0.1, 0.2})), EvaluatorError);
}

TEST(External, NonNumericResponseKeepsRawOutput) {
  ExternalEvaluator ext(shell("while read line; do echo 'NaN-ish garbage'; done"));
  try {
    ext.value(vec({0.1, 0.2}));
    FAIL() << "expected an evaluator error";
  } catch (const EvaluatorError& e) {
    EXPECT_EQ(e.raw_output(), "NaN-ish garbage");
  }
}

TEST(External, TimeoutKillsChild) {
  ExternalEvaluator ext(shell("read line; sleep 30", 0.3));
  try {
    ext.value(vec({0.1, 0.2}));
    FAIL() << "expected an evaluator error";
  } catch (const EvaluatorError& e) {
    EXPECT_NE(std::string(e.what()).find("timed out"), std::string::npos);
  }
}

TEST(External, MissingProgram) {
  ExternalSpec s;
  s.command = "/nonexistent/evaluator";
  s.dim = 1;
  EXPECT_THROW(
      {
        ExternalEvaluator ext(s);
        ext.value(vec({0.0}));
      },
      EvaluatorError);
}

TEST(External, SerialSamplingEvenWithJobs) {
  ExternalSpec spec;
  spec.command = QUADRATIC_BOWL_HELPER;
  spec.args = {"1", "4"};
  spec.dim = 2;
  const EvaluatorPtr ext = make_evaluator({spec});
  auto builtin = make_builtin("quadratic-bowl", {{"a", {1.0, 4.0}}});
  const Intervals dom(2, Interval(-1, 1));
  EXPECT_EQ(format_samples_csv(draw_samples(*ext, dom, 64, 5, 4)),
            format_samples_csv(draw_samples(*builtin, dom, 64, 5, 1)));
}
