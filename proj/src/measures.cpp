#include "tolalloc/measures.hpp"

#include <cmath>

#include "tolalloc/model_io.hpp"

namespace tolalloc {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_nonnegative(const ToleranceVector& tau) {
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    if (!(tau(i) >= 0.0)) throw DomainError("tolerance measure: tau_" + std::to_string(i + 1) + " < 0");
  }
}

void check_positive(const ToleranceVector& tau, const char* what) {
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    if (!(tau(i) > 0.0)) {
      throw DomainError(std::string(what) + " gradient is undefined at tau_" + std::to_string(i + 1) + " = 0");
    }
  }
}
}  // namespace

void MeasureSpec::validate(int d) const {
  std::visit(overloaded{
                 [](const OneNorm&) {},
                 [](const MinusOneNorm&) {},
                 [d](const MuNorm& m) {
                   check_dim(m.weights.size(), d, "mu-norm weights");
                   if (!m.weights.allFinite() || (m.weights.array() < 0.0).any()) {
                     throw PreconditionError("mu-norm weights must be finite and >= 0");
                   }
                   if ((m.weights.array() == 0.0).all()) {
                     throw PreconditionError("mu-norm weights are all zero");
                   }
                 },
                 [d](const ReciprocalPowerCost& c) {
                   check_dim(c.a.size(), d, "reciprocal-power a");
                   check_dim(c.b.size(), d, "reciprocal-power b");
                   check_dim(c.k.size(), d, "reciprocal-power k");
                   if ((c.b.array() <= 0.0).any() || (c.k.array() <= 0.0).any()) {
                     throw PreconditionError("reciprocal-power b and k must be > 0");
                   }
                 },
             },
             kind);
}

std::string MeasureSpec::name() const {
  return std::visit(overloaded{
                        [](const OneNorm&) { return std::string("one-norm"); },
                        [](const MuNorm&) { return std::string("mu-norm"); },
                        [](const MinusOneNorm&) { return std::string("minus-one-norm"); },
                        [](const ReciprocalPowerCost&) { return std::string("reciprocal-power"); },
                    },
                    kind);
}

bool MeasureSpec::singular_at_zero() const {
  return std::holds_alternative<MinusOneNorm>(kind) || std::holds_alternative<ReciprocalPowerCost>(kind);
}

double measure_value(const MeasureSpec& spec, const ToleranceVector& tau) {
  check_nonnegative(tau);
  return std::visit(overloaded{
                        [&](const OneNorm&) { return tau.sum(); },
                        [&](const MuNorm& m) {
                          check_dim(m.weights.size(), tau.size(), "mu-norm");
                          return m.weights.dot(tau);
                        },
                        [&](const MinusOneNorm&) {
                          if ((tau.array() == 0.0).any()) return 0.0;
                          return 1.0 / tau.cwiseInverse().sum();
                        },
                        [&](const ReciprocalPowerCost& c) {
                          check_dim(c.a.size(), tau.size(), "reciprocal-power");
                          if ((tau.array() == 0.0).any()) return 0.0;
                          const double cost =
                              (c.a.array() + c.b.array() / tau.array().pow(c.k.array())).sum();
                          return 1.0 / cost;
                        },
                    },
                    spec.kind);
}

Vector measure_grad(const MeasureSpec& spec, const ToleranceVector& tau) {
  check_nonnegative(tau);
  return std::visit(overloaded{
                        [&](const OneNorm&) -> Vector { return Vector::Ones(tau.size()); },
                        [&](const MuNorm& m) -> Vector {
                          check_dim(m.weights.size(), tau.size(), "mu-norm");
                          return m.weights;
                        },
                        [&](const MinusOneNorm&) -> Vector {
                          check_positive(tau, "minus-one-norm");
                          const double f = 1.0 / tau.cwiseInverse().sum();
                          return (f * f) * tau.array().square().inverse().matrix();
                        },
                        [&](const ReciprocalPowerCost& c) -> Vector {
                          check_dim(c.a.size(), tau.size(), "reciprocal-power");
                          check_positive(tau, "reciprocal-power");
                          const auto powk = tau.array().pow(c.k.array());
                          const double cost = (c.a.array() + c.b.array() / powk).sum();
                          // dF/dtau_i = -C^-2 dC/dtau_i,  dC/dtau_i = -k_i b_i tau_i^(-k_i - 1)
                          return ((c.k.array() * c.b.array() / (powk * tau.array())) / (cost * cost)).matrix();
                        },
                    },
                    spec.kind);
}

MuWeights compute_mu_weights(const SeparatedModel& model, const Vector& nominal) {
  MuWeights out;
  out.weights = model_grad(model, nominal).cwiseAbs();
  out.degenerate = (out.weights.array() == 0.0).all();
  return out;
}

MeasureSpec measure_spec_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "one-norm") return {OneNorm{}};
    if (kind == "minus-one-norm") return {MinusOneNorm{}};
    if (kind == "mu-norm") {
      MuNorm m;
      if (j.contains("weights")) m.weights = vector_from_json(j.at("weights"), "weights");
      return {m};
    }
    if (kind == "reciprocal-power") {
      return {ReciprocalPowerCost{vector_from_json(j.at("a"), "a"), vector_from_json(j.at("b"), "b"),
                                  vector_from_json(j.at("k"), "k")}};
    }
    throw ParseError("unknown measure kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("measure: ") + e.what());
  }
}

nlohmann::json measure_spec_to_json(const MeasureSpec& spec) {
  return std::visit(overloaded{
                        [](const OneNorm&) { return nlohmann::json{{"kind", "one-norm"}}; },
                        [](const MinusOneNorm&) { return nlohmann::json{{"kind", "minus-one-norm"}}; },
                        [](const MuNorm& m) {
                          return nlohmann::json{{"kind", "mu-norm"}, {"weights", vector_to_json(m.weights)}};
                        },
                        [](const ReciprocalPowerCost& c) {
                          return nlohmann::json{{"kind", "reciprocal-power"},
                                                {"a", vector_to_json(c.a)},
                                                {"b", vector_to_json(c.b)},
                                                {"k", vector_to_json(c.k)}};
                        },
                    },
                    spec.kind);
}

}  // namespace tolalloc
