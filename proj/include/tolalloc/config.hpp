#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "tolalloc/boxmax.hpp"
#include "tolalloc/domain.hpp"
#include "tolalloc/evaluator.hpp"
#include "tolalloc/manifold.hpp"
#include "tolalloc/measures.hpp"
#include "tolalloc/surrogate.hpp"

namespace tolalloc {

inline constexpr int kConfigFormatVersion = 1;

struct BoundingBoxOverrides {
  std::optional<Vector> tau_min;
  std::optional<Vector> tau_max;
  std::optional<Vector> caps;  // search limits for the axis crossings
};

/// Pass/fail limits applied by `check` and `report`. Unset entries are not checked.
struct Thresholds {
  std::optional<double> tol_err_inf;
  std::optional<double> objective_rel_err;
  std::optional<double> constraint_rel_err;
  std::optional<double> surrogate_mean_rel;
  std::optional<double> surrogate_max_rel;
};

/// One file drives one reproducible run.
struct RunConfig {
  std::optional<EvaluatorSpec> evaluator;
  std::optional<Vector> nominal;
  std::optional<double> q_allow;
  MeasureSpec measure{OneNorm{}};
  FitConfig fit;
  BoxMaxConfig boxmax;
  TraversalConfig traversal;
  BoundingBoxOverrides bbox;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = ".";
  Thresholds thresholds;
  Method method = Method::GA;
  int n_train = 400;
  int n_holdout = 200;
  int jobs = 1;

  const EvaluatorSpec& require_evaluator() const;
  const Vector& require_nominal() const;
  double require_q_allow() const;
  std::uint64_t require_seed() const;
};

nlohmann::json fit_config_to_json(const FitConfig& c);
FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base = {});
nlohmann::json boxmax_config_to_json(const BoxMaxConfig& c);
BoxMaxConfig boxmax_config_from_json(const nlohmann::json& j, BoxMaxConfig base = {});
nlohmann::json traversal_config_to_json(const TraversalConfig& c);
TraversalConfig traversal_config_from_json(const nlohmann::json& j, TraversalConfig base = {});

nlohmann::json run_config_to_json(const RunConfig& c);
/// Relative paths inside the config (tabulated data, output_dir) resolve
/// against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Domain file: {format_version, nominal, q_allow, tau_min, tau_max, sampling_domain, axes, warnings}.
nlohmann::json domain_sizing_to_json(const DomainSizing& s, const Vector& nominal, double q_allow);
struct DomainFile {
  BoundingBox bbox;
  Intervals sampling_domain;
};
DomainFile domain_file_from_json(const nlohmann::json& j);

nlohmann::json allocation_result_to_json(const AllocationResult& r, const MeasureSpec& measure,
                                         const ToleranceVector& tau0, double q_allow);
nlohmann::json fit_report_to_json(const FitReport& r);

/// Tolerance vector from a result file ("tau" field) or a bare JSON array.
ToleranceVector tolerance_from_json(const nlohmann::json& j);

nlohmann::json parse_json_text(const std::string& text, const std::string& what);
std::string dump_json(const nlohmann::json& j);

}  // namespace tolalloc
