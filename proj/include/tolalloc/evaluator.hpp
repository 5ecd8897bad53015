#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tolalloc/samples.hpp"
#include "tolalloc/surrogate.hpp"
#include "tolalloc/types.hpp"

namespace tolalloc {

/// System performance Q(mu).
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  virtual int dim() const = 0;
  virtual double value(const Eigen::Ref<const Vector>& mu) const = 0;

  /// Analytic gradient where available; otherwise central differences.
  virtual Vector gradient(const Eigen::Ref<const Vector>& mu) const;
  virtual bool has_analytic_gradient() const { return false; }

  /// Whether value() may be called from several threads at once.
  virtual bool thread_safe() const { return true; }
};

using EvaluatorPtr = std::shared_ptr<const Evaluator>;

/// Wraps plain callables; mostly for tests and embedding.
class FunctionEvaluator final : public Evaluator {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  FunctionEvaluator(int dim, ValueFn value, GradFn grad = {})
      : dim_(dim), value_(std::move(value)), grad_(std::move(grad)) {}

  int dim() const override { return dim_; }
  double value(const Eigen::Ref<const Vector>& mu) const override;
  Vector gradient(const Eigen::Ref<const Vector>& mu) const override;
  bool has_analytic_gradient() const override { return static_cast<bool>(grad_); }

 private:
  int dim_;
  ValueFn value_;
  GradFn grad_;
};

enum class Interpolation { Nearest, Multilinear };

struct BuiltinSpec {
  std::string name;
  nlohmann::json parameters = nlohmann::json::object();
};

struct TabulatedSpec {
  std::filesystem::path path;
  Interpolation interpolation = Interpolation::Multilinear;
};

struct ExternalSpec {
  std::string command;
  std::vector<std::string> args;
  double timeout_seconds = 60.0;
  int dim = 0;  // required: the protocol carries no header
};

struct EvaluatorSpec;

struct MaxCompositeSpec {
  std::vector<EvaluatorSpec> children;
};

struct EvaluatorSpec {
  std::variant<BuiltinSpec, TabulatedSpec, ExternalSpec, MaxCompositeSpec> variant;
};

EvaluatorSpec evaluator_spec_from_json(const nlohmann::json& j);
nlohmann::json evaluator_spec_to_json(const EvaluatorSpec& spec);

EvaluatorPtr make_evaluator(const EvaluatorSpec& spec);

/// One-shot convenience: builds the evaluator and queries it once.
double evaluate(const EvaluatorSpec& spec, const Eigen::Ref<const Vector>& mu);

// -- builtin analytic problems ----------------------------------------------

struct BuiltinInfo {
  std::string name;
  std::string formula;
  std::string parameters;
  bool smooth;
};

std::vector<BuiltinInfo> builtin_catalog();

EvaluatorPtr make_builtin(const std::string& name,
                          const nlohmann::json& parameters = nlohmann::json::object());

/// The separated representation of the "rank2-synthetic" builtin on [-1, 1]^dim.
SeparatedModel rank2_synthetic_model(int dim);

// -- composites and data-backed evaluators -----------------------------------

/// Pointwise maximum of children. The gradient is that of the attaining child;
/// children within 1e-12 relative of the maximum resolve to the lowest index.
class MaxCompositeEvaluator final : public Evaluator {
 public:
  explicit MaxCompositeEvaluator(std::vector<EvaluatorPtr> children);

  int dim() const override { return dim_; }
  double value(const Eigen::Ref<const Vector>& mu) const override;
  Vector gradient(const Eigen::Ref<const Vector>& mu) const override;
  bool has_analytic_gradient() const override;
  bool thread_safe() const override;

  /// Index of the attaining child under the tie rule.
  std::size_t active_branch(const Eigen::Ref<const Vector>& mu) const;

 private:
  std::vector<EvaluatorPtr> children_;
  int dim_ = 0;
};

/// Interpolant over a full tensor-product grid of samples.
class TabulatedEvaluator final : public Evaluator {
 public:
  TabulatedEvaluator(const SampleSet& grid, Interpolation interpolation);

  int dim() const override { return static_cast<int>(axes_.size()); }
  double value(const Eigen::Ref<const Vector>& mu) const override;

  const std::vector<std::vector<double>>& axes() const { return axes_; }

 private:
  std::size_t flat_index(const std::vector<std::size_t>& idx) const;

  std::vector<std::vector<double>> axes_;
  std::vector<double> table_;
  std::vector<std::size_t> strides_;
  Interpolation interpolation_;
};

/// Resident child process answering one line per request:
/// request  "mu_1 mu_2 ... mu_d\n", response "q\n".
class ExternalEvaluator final : public Evaluator {
 public:
  explicit ExternalEvaluator(const ExternalSpec& spec);
  ~ExternalEvaluator() override;
  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  int dim() const override { return spec_.dim; }
  double value(const Eigen::Ref<const Vector>& mu) const override;
  bool thread_safe() const override { return false; }

 private:
  struct Process;
  ExternalSpec spec_;
  std::unique_ptr<Process> proc_;
};

// -- sampling ----------------------------------------------------------------

/// n points i.i.d. uniform on the box, deterministic in seed; point j,
/// coordinate i uses draw j*d + i of the counter stream. `jobs` > 1 evaluates
/// in parallel for thread-safe evaluators; output order never depends on it.
SampleSet draw_samples(const Evaluator& evaluator, const Intervals& domain, Eigen::Index n,
                       std::uint64_t seed, int jobs = 1);

/// The uniform design points alone.
Matrix draw_uniform_points(const Intervals& domain, Eigen::Index n, std::uint64_t seed);

}  // namespace tolalloc
