#include "tolalloc/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include "tolalloc/io.hpp"
#include "tolalloc/model_io.hpp"
#include "tolalloc/rng.hpp"

namespace tolalloc {

using nlohmann::json;

Vector Evaluator::gradient(const Eigen::Ref<const Vector>& mu) const {
  check_dim(mu.size(), dim(), "evaluator gradient");
  Vector g(mu.size());
  Vector x = mu;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(mu(i)));
    x(i) = mu(i) + h;
    const double fp = value(x);
    x(i) = mu(i) - h;
    const double fm = value(x);
    x(i) = mu(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

double FunctionEvaluator::value(const Eigen::Ref<const Vector>& mu) const {
  check_dim(mu.size(), dim_, "function evaluator");
  return value_(mu);
}

Vector FunctionEvaluator::gradient(const Eigen::Ref<const Vector>& mu) const {
  if (!grad_) return Evaluator::gradient(mu);
  check_dim(mu.size(), dim_, "function evaluator gradient");
  return grad_(mu);
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

Vector param_vector(const json& params, const char* key, const std::string& builtin) {
  if (!params.contains(key)) {
    throw PreconditionError(builtin + ": missing parameter '" + key + "'");
  }
  return vector_from_json(params.at(key), key);
}

Vector param_vector_or(const json& params, const char* key, Vector fallback) {
  return params.contains(key) ? vector_from_json(params.at(key), key) : fallback;
}

double sgn(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

// Q = sum_i a_i (mu_i - c_i)^2
class QuadraticBowl final : public Evaluator {
 public:
  QuadraticBowl(Vector a, Vector c) : a_(std::move(a)), c_(std::move(c)) {
    check_dim(c_.size(), a_.size(), "quadratic-bowl center");
  }
  int dim() const override { return static_cast<int>(a_.size()); }
  double value(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), dim(), "quadratic-bowl");
    return (a_.array() * (mu - c_).array().square()).sum();
  }
  Vector gradient(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), dim(), "quadratic-bowl");
    return 2.0 * (a_.array() * (mu - c_).array()).matrix();
  }
  bool has_analytic_gradient() const override { return true; }

 private:
  Vector a_, c_;
};

// Q = sum_i a_i |mu_i - nominal_i|
class AbsSum final : public Evaluator {
 public:
  AbsSum(Vector a, Vector nominal) : a_(std::move(a)), nominal_(std::move(nominal)) {
    check_dim(nominal_.size(), a_.size(), "abs-sum nominal");
  }
  int dim() const override { return static_cast<int>(a_.size()); }
  double value(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), dim(), "abs-sum");
    return (a_.array() * (mu - nominal_).array().abs()).sum();
  }
  // Subgradient; zero on the kink.
  Vector gradient(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), dim(), "abs-sum");
    Vector g(dim());
    for (int i = 0; i < dim(); ++i) g(i) = a_(i) * sgn(mu(i) - nominal_(i));
    return g;
  }
  bool has_analytic_gradient() const override { return true; }

 private:
  Vector a_, nominal_;
};

// Q = exp(mu_1) cos(mu_2)
class ExpCos final : public Evaluator {
 public:
  int dim() const override { return 2; }
  double value(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), 2, "exp-cos");
    return std::exp(mu(0)) * std::cos(mu(1));
  }
  Vector gradient(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), 2, "exp-cos");
    Vector g(2);
    g << std::exp(mu(0)) * std::cos(mu(1)), -std::exp(mu(0)) * std::sin(mu(1));
    return g;
  }
  bool has_analytic_gradient() const override { return true; }
};

// Q = a . mu + b
class Linear final : public Evaluator {
 public:
  Linear(Vector a, double b) : a_(std::move(a)), b_(b) {}
  int dim() const override { return static_cast<int>(a_.size()); }
  double value(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), dim(), "linear");
    return a_.dot(mu) + b_;
  }
  Vector gradient(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), dim(), "linear");
    return a_;
  }
  bool has_analytic_gradient() const override { return true; }

 private:
  Vector a_;
  double b_;
};

// Two-term separated polynomial, written in monomial form:
//   Q = prod_i (1 + alpha_i x_i - 0.2 x_i^2) + 0.8 prod_i (0.5 - 0.4 x_i + 0.25 x_i^3),
// alpha_i = 0.3 (i+1) / d. Both factors stay positive on [-1, 1].
double synthetic_alpha(int i, int d) { return 0.3 * (i + 1) / d; }

class Rank2Synthetic final : public Evaluator {
 public:
  explicit Rank2Synthetic(int d) : d_(d) {
    if (d < 1) throw PreconditionError("rank2-synthetic: dim must be >= 1");
  }
  int dim() const override { return d_; }
  double value(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), d_, "rank2-synthetic");
    double p1 = 1.0, p2 = 1.0;
    for (int i = 0; i < d_; ++i) {
      const double x = mu(i);
      p1 *= f1(i, x);
      p2 *= f2(x);
    }
    return p1 + 0.8 * p2;
  }
  Vector gradient(const Eigen::Ref<const Vector>& mu) const override {
    check_dim(mu.size(), d_, "rank2-synthetic");
    Vector g(d_);
    for (int i = 0; i < d_; ++i) {
      double p1 = 1.0, p2 = 1.0;
      for (int k = 0; k < d_; ++k) {
        const double x = mu(k);
        p1 *= k == i ? synthetic_alpha(i, d_) - 0.4 * x : f1(k, x);
        p2 *= k == i ? -0.4 + 0.75 * x * x : f2(x);
      }
      g(i) = p1 + 0.8 * p2;
    }
    return g;
  }
  bool has_analytic_gradient() const override { return true; }

 private:
  double f1(int i, double x) const { return 1.0 + synthetic_alpha(i, d_) * x - 0.2 * x * x; }
  static double f2(double x) { return 0.5 - 0.4 * x + 0.25 * x * x * x; }
  int d_;
};

int param_int_or(const json& params, const char* key, int fallback) {
  if (!params.contains(key)) return fallback;
  if (!params.at(key).is_number_integer()) {
    throw PreconditionError(std::string("parameter '") + key + "' must be an integer");
  }
  return params.at(key).get<int>();
}

}  // namespace

std::vector<BuiltinInfo> builtin_catalog() {
  return {
      {"quadratic-bowl", "Q = sum_i a_i (mu_i - center_i)^2", "a: list, center: list (default 0)", true},
      {"abs-sum", "Q = sum_i a_i |mu_i - nominal_i|", "a: list, nominal: list (default 0)", false},
      {"exp-cos", "Q = exp(mu_1) cos(mu_2)", "none (dim 2)", true},
      {"rank2-synthetic",
       "Q = prod_i (1 + 0.3(i+1)/d mu_i - 0.2 mu_i^2) + 0.8 prod_i (0.5 - 0.4 mu_i + 0.25 mu_i^3)",
       "dim: integer (default 4); exactly rank 2, degree 3 on [-1,1]^dim", true},
      {"linear", "Q = a . mu + b", "a: list, b: number (default 0)", true},
  };
}

EvaluatorPtr make_builtin(const std::string& name, const json& parameters) {
  const json params = parameters.is_null() ? json::object() : parameters;
  if (name == "quadratic-bowl") {
    Vector a = param_vector(params, "a", name);
    Vector c = param_vector_or(params, "center", Vector::Zero(a.size()));
    return std::make_shared<QuadraticBowl>(std::move(a), std::move(c));
  }
  if (name == "abs-sum") {
    Vector a = param_vector(params, "a", name);
    Vector nominal = param_vector_or(params, "nominal", Vector::Zero(a.size()));
    return std::make_shared<AbsSum>(std::move(a), std::move(nominal));
  }
  if (name == "exp-cos") return std::make_shared<ExpCos>();
  if (name == "rank2-synthetic") return std::make_shared<Rank2Synthetic>(param_int_or(params, "dim", 4));
  if (name == "linear") {
    const double b = params.contains("b") ? params.at("b").get<double>() : 0.0;
    return std::make_shared<Linear>(param_vector(params, "a", name), b);
  }
  throw LookupError("unknown builtin evaluator '" + name + "'");
}

SeparatedModel rank2_synthetic_model(int dim) {
  if (dim < 1) throw PreconditionError("rank2-synthetic: dim must be >= 1");
  Intervals intervals(static_cast<std::size_t>(dim), Interval(-1.0, 1.0));
  SeparatedModel model(dim, 2, 3, intervals);
  // x^2 = (2 L2 + L0) / 3,  x^3 = (2 L3 + 3 L1) / 5
  for (int i = 0; i < dim; ++i) {
    model.factor(0, i) << 1.0 - 0.2 / 3.0, synthetic_alpha(i, dim), -0.2 * 2.0 / 3.0, 0.0;
    model.factor(1, i) << 0.5, -0.4 + 0.25 * 3.0 / 5.0, 0.0, 0.25 * 2.0 / 5.0;
  }
  model.scales() << 1.0, 0.8;
  return model;
}

// ---------------------------------------------------------------------------
// Max composite

MaxCompositeEvaluator::MaxCompositeEvaluator(std::vector<EvaluatorPtr> children)
    : children_(std::move(children)) {
  if (children_.empty()) throw PreconditionError("max composite needs at least one child");
  dim_ = children_.front()->dim();
  for (const auto& c : children_) {
    if (c->dim() != dim_) throw DimensionError("max composite children must share one dimension");
  }
}

double MaxCompositeEvaluator::value(const Eigen::Ref<const Vector>& mu) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : children_) best = std::max(best, c->value(mu));
  return best;
}

std::size_t MaxCompositeEvaluator::active_branch(const Eigen::Ref<const Vector>& mu) const {
  std::vector<double> v;
  v.reserve(children_.size());
  for (const auto& c : children_) v.push_back(c->value(mu));
  const double best = *std::max_element(v.begin(), v.end());
  const double tie = 1e-12 * std::abs(best);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] >= best - tie) return k;
  }
  return 0;
}

Vector MaxCompositeEvaluator::gradient(const Eigen::Ref<const Vector>& mu) const {
  return children_[active_branch(mu)]->gradient(mu);
}

bool MaxCompositeEvaluator::has_analytic_gradient() const {
  return std::all_of(children_.begin(), children_.end(),
                     [](const EvaluatorPtr& c) { return c->has_analytic_gradient(); });
}

bool MaxCompositeEvaluator::thread_safe() const {
  return std::all_of(children_.begin(), children_.end(),
                     [](const EvaluatorPtr& c) { return c->thread_safe(); });
}

// ---------------------------------------------------------------------------
// Tabulated

TabulatedEvaluator::TabulatedEvaluator(const SampleSet& grid, Interpolation interpolation)
    : interpolation_(interpolation) {
  grid.validate();
  const int d = grid.dim();
  axes_.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    auto& ax = axes_[static_cast<std::size_t>(i)];
    ax.assign(grid.points.col(i).data(), grid.points.col(i).data() + grid.size());
    std::sort(ax.begin(), ax.end());
    ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
    if (ax.size() < 2) throw PreconditionError("tabulated grid needs >= 2 nodes per axis");
  }
  strides_.assign(static_cast<std::size_t>(d), 1);
  std::size_t total = 1;
  for (int i = d - 1; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] = total;
    total *= axes_[static_cast<std::size_t>(i)].size();
  }
  if (total != static_cast<std::size_t>(grid.size())) {
    throw PreconditionError("tabulated data is not a full tensor-product grid (" +
                            std::to_string(grid.size()) + " rows, " + std::to_string(total) +
                            " grid nodes)");
  }
  table_.assign(total, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(total, false);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d));
  for (Eigen::Index n = 0; n < grid.size(); ++n) {
    for (int i = 0; i < d; ++i) {
      const auto& ax = axes_[static_cast<std::size_t>(i)];
      idx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(
          std::lower_bound(ax.begin(), ax.end(), grid.points(n, i)) - ax.begin());
    }
    const std::size_t f = flat_index(idx);
    if (seen[f]) throw PreconditionError("tabulated grid has a duplicate node");
    seen[f] = true;
    table_[f] = grid.values(n);
  }
}

std::size_t TabulatedEvaluator::flat_index(const std::vector<std::size_t>& idx) const {
  std::size_t f = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) f += idx[i] * strides_[i];
  return f;
}

double TabulatedEvaluator::value(const Eigen::Ref<const Vector>& mu) const {
  const int d = dim();
  check_dim(mu.size(), d, "tabulated evaluator");
  std::vector<std::size_t> lo(static_cast<std::size_t>(d));
  std::vector<double> t(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const auto& ax = axes_[static_cast<std::size_t>(i)];
    const double x = mu(i);
    if (!(x >= ax.front() && x <= ax.back())) {
      throw DomainError("tabulated query outside the grid hull in mu_" + std::to_string(i + 1));
    }
    std::size_t k = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), x) - ax.begin());
    k = std::clamp<std::size_t>(k, 1, ax.size() - 1) - 1;
    lo[static_cast<std::size_t>(i)] = k;
    t[static_cast<std::size_t>(i)] = (x - ax[k]) / (ax[k + 1] - ax[k]);
  }
  if (interpolation_ == Interpolation::Nearest) {
    std::vector<std::size_t> idx(lo);
    for (int i = 0; i < d; ++i) {
      if (t[static_cast<std::size_t>(i)] > 0.5) ++idx[static_cast<std::size_t>(i)];
    }
    return table_[flat_index(idx)];
  }
  double total = 0.0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d));
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const bool up = (corner >> i) & 1U;
      const double ti = t[static_cast<std::size_t>(i)];
      w *= up ? ti : 1.0 - ti;
      idx[static_cast<std::size_t>(i)] = lo[static_cast<std::size_t>(i)] + (up ? 1 : 0);
    }
    if (w != 0.0) total += w * table_[flat_index(idx)];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Spec plumbing

EvaluatorSpec evaluator_spec_from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "builtin") {
      BuiltinSpec b;
      b.name = j.at("name").get<std::string>();
      if (j.contains("parameters")) b.parameters = j.at("parameters");
      return {b};
    }
    if (type == "tabulated") {
      TabulatedSpec t;
      t.path = j.at("path").get<std::string>();
      const std::string interp = j.value("interpolation", std::string("multilinear"));
      if (interp == "multilinear") {
        t.interpolation = Interpolation::Multilinear;
      } else if (interp == "nearest") {
        t.interpolation = Interpolation::Nearest;
      } else {
        throw ParseError("tabulated interpolation must be 'nearest' or 'multilinear'");
      }
      return {t};
    }
    if (type == "external") {
      ExternalSpec e;
      e.command = j.at("command").get<std::string>();
      if (j.contains("args")) e.args = j.at("args").get<std::vector<std::string>>();
      e.timeout_seconds = j.value("timeout_seconds", 60.0);
      e.dim = j.at("dim").get<int>();
      return {e};
    }
    if (type == "max") {
      MaxCompositeSpec m;
      for (const auto& c : j.at("children")) m.children.push_back(evaluator_spec_from_json(c));
      return {m};
    }
    throw ParseError("unknown evaluator type '" + type + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("evaluator spec: ") + e.what());
  }
}

json evaluator_spec_to_json(const EvaluatorSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BuiltinSpec>) {
          return {{"type", "builtin"}, {"name", s.name}, {"parameters", s.parameters}};
        } else if constexpr (std::is_same_v<T, TabulatedSpec>) {
          return {{"type", "tabulated"},
                  {"path", s.path.string()},
                  {"interpolation", s.interpolation == Interpolation::Nearest ? "nearest" : "multilinear"}};
        } else if constexpr (std::is_same_v<T, ExternalSpec>) {
          return {{"type", "external"},
                  {"command", s.command},
                  {"args", s.args},
                  {"timeout_seconds", s.timeout_seconds},
                  {"dim", s.dim}};
        } else {
          json children = json::array();
          for (const auto& c : s.children) children.push_back(evaluator_spec_to_json(c));
          return {{"type", "max"}, {"children", children}};
        }
      },
      spec.variant);
}

EvaluatorPtr make_evaluator(const EvaluatorSpec& spec) {
  return std::visit(
      [](const auto& s) -> EvaluatorPtr {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BuiltinSpec>) {
          return make_builtin(s.name, s.parameters);
        } else if constexpr (std::is_same_v<T, TabulatedSpec>) {
          return std::make_shared<TabulatedEvaluator>(read_samples_csv(s.path), s.interpolation);
        } else if constexpr (std::is_same_v<T, ExternalSpec>) {
          return std::make_shared<ExternalEvaluator>(s);
        } else {
          std::vector<EvaluatorPtr> children;
          for (const auto& c : s.children) children.push_back(make_evaluator(c));
          return std::make_shared<MaxCompositeEvaluator>(std::move(children));
        }
      },
      spec.variant);
}

double evaluate(const EvaluatorSpec& spec, const Eigen::Ref<const Vector>& mu) {
  return make_evaluator(spec)->value(mu);
}

// ---------------------------------------------------------------------------
// Sampling

Matrix draw_uniform_points(const Intervals& domain, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("draw_samples: n must be >= 1");
  const auto d = static_cast<Eigen::Index>(domain.size());
  if (d < 1) throw PreconditionError("draw_samples: empty domain");
  const CounterRng rng(seed, /*stream=*/0x5A3);
  Matrix pts(n, d);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const Interval& iv = domain[static_cast<std::size_t>(i)];
      const auto counter = static_cast<std::uint64_t>(j * d + i);
      pts(j, i) = std::clamp(rng.uniform_at(counter, iv.lo, iv.hi), iv.lo, iv.hi);
    }
  }
  return pts;
}

namespace {
std::string format_point(const Eigen::Ref<const Vector>& mu) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (i) s += ", ";
    s += format_double(mu(i));
  }
  return s + ")";
}
}  // namespace

SampleSet draw_samples(const Evaluator& evaluator, const Intervals& domain, Eigen::Index n,
                       std::uint64_t seed, int jobs) {
  check_dim(static_cast<Eigen::Index>(domain.size()), evaluator.dim(), "draw_samples domain");
  SampleSet out;
  out.points = draw_uniform_points(domain, n, seed);
  out.values.resize(n);

  auto run_range = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index j = begin; j < end; ++j) {
      const Vector mu = out.points.row(j).transpose();
      try {
        out.values(j) = evaluator.value(mu);
      } catch (const EvaluatorError& e) {
        throw EvaluatorError("sample " + std::to_string(j) + " at mu = " + format_point(mu) + ": " +
                                 e.what(),
                             e.raw_output());
      } catch (const Error& e) {
        throw EvaluatorError("sample " + std::to_string(j) + " at mu = " + format_point(mu) + ": " +
                             e.what());
      }
      if (!std::isfinite(out.values(j))) {
        throw EvaluatorError("sample " + std::to_string(j) + " at mu = " + format_point(mu) +
                             ": non-finite value");
      }
    }
  };

  const int workers = evaluator.thread_safe() ? std::max(1, std::min<int>(jobs, static_cast<int>(n))) : 1;
  if (workers == 1) {
    run_range(0, n);
    return out;
  }
  // Contiguous chunks; the first failure by sample index is reported.
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> threads;
  const Eigen::Index chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index b = w * chunk;
    const Eigen::Index e = std::min(n, b + chunk);
    threads.emplace_back([&, w, b, e] {
      try {
        run_range(b, e);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return out;
}

}  // namespace tolalloc
