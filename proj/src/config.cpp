#include "tolalloc/config.hpp"

#include <initializer_list>
#include <set>

#include "tolalloc/io.hpp"
#include "tolalloc/model_io.hpp"

namespace tolalloc {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw ParseError(what + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) throw ParseError(what + ": unknown field '" + item.key() + "'");
  }
}

template <class T>
void read_field(const json& j, const char* key, T& out, const std::string& what) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(what + "." + key + ": wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

void resolve_paths(EvaluatorSpec& spec, const std::filesystem::path& base) {
  if (auto* t = std::get_if<TabulatedSpec>(&spec.variant)) {
    t->path = resolve(t->path, base);
  } else if (auto* e = std::get_if<ExternalSpec>(&spec.variant)) {
    if (e->command.find('/') != std::string::npos) e->command = resolve(e->command, base).string();
  } else if (auto* m = std::get_if<MaxCompositeSpec>(&spec.variant)) {
    for (auto& c : m->children) resolve_paths(c, base);
  }
}

json optional_vector(const std::optional<Vector>& v) { return v ? vector_to_json(*v) : json(nullptr); }

}  // namespace

const EvaluatorSpec& RunConfig::require_evaluator() const {
  if (!evaluator) throw ParseError("config: 'evaluator' is required for this command");
  return *evaluator;
}

const Vector& RunConfig::require_nominal() const {
  if (!nominal) throw ParseError("config: 'nominal' is required for this command");
  return *nominal;
}

double RunConfig::require_q_allow() const {
  if (!q_allow) throw ParseError("config: 'q_allow' is required for this command");
  return *q_allow;
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ParseError("a seed is required: pass --seed or set 'seed' in the config");
  return *seed;
}

json fit_config_to_json(const FitConfig& c) {
  return {{"rank", c.target_rank},
          {"degree", c.degree},
          {"max_sweeps", c.max_sweeps},
          {"rel_residual_tol", c.rel_residual_tol},
          {"sweep_stall_tol", c.sweep_stall_tol},
          {"regularization", c.regularization},
          {"normalize_factors", c.normalize_factors}};
}

FitConfig fit_config_from_json(const json& j, FitConfig c) {
  check_keys(j, {"rank", "degree", "max_sweeps", "rel_residual_tol", "sweep_stall_tol", "regularization",
                 "normalize_factors"},
             "fit");
  read_field(j, "rank", c.target_rank, "fit");
  read_field(j, "degree", c.degree, "fit");
  read_field(j, "max_sweeps", c.max_sweeps, "fit");
  read_field(j, "rel_residual_tol", c.rel_residual_tol, "fit");
  read_field(j, "sweep_stall_tol", c.sweep_stall_tol, "fit");
  read_field(j, "regularization", c.regularization, "fit");
  read_field(j, "normalize_factors", c.normalize_factors, "fit");
  c.validate();
  return c;
}

json boxmax_config_to_json(const BoxMaxConfig& c) {
  return {{"n_multistarts", c.n_multistarts},
          {"polish_max_iters", c.polish_max_iters},
          {"grad_step_tol", c.grad_step_tol},
          {"tie_rel_tol", c.tie_rel_tol},
          {"wall_rel_tol", c.wall_rel_tol}};
}

BoxMaxConfig boxmax_config_from_json(const json& j, BoxMaxConfig c) {
  check_keys(j, {"n_multistarts", "polish_max_iters", "grad_step_tol", "tie_rel_tol", "wall_rel_tol"}, "boxmax");
  read_field(j, "n_multistarts", c.n_multistarts, "boxmax");
  read_field(j, "polish_max_iters", c.polish_max_iters, "boxmax");
  read_field(j, "grad_step_tol", c.grad_step_tol, "boxmax");
  read_field(j, "tie_rel_tol", c.tie_rel_tol, "boxmax");
  read_field(j, "wall_rel_tol", c.wall_rel_tol, "boxmax");
  c.validate();
  return c;
}

json traversal_config_to_json(const TraversalConfig& c) {
  return {{"max_iters", c.max_iters},
          {"f_increase_tol", c.f_increase_tol},
          {"retraction_tol", c.retraction_tol},
          {"line_search_tol", c.line_search_tol},
          {"tangent_tol", c.tangent_tol},
          {"wall_rel_tol", c.wall_rel_tol}};
}

TraversalConfig traversal_config_from_json(const json& j, TraversalConfig c) {
  check_keys(j, {"max_iters", "f_increase_tol", "retraction_tol", "line_search_tol", "tangent_tol", "wall_rel_tol"},
             "traversal");
  read_field(j, "max_iters", c.max_iters, "traversal");
  read_field(j, "f_increase_tol", c.f_increase_tol, "traversal");
  read_field(j, "retraction_tol", c.retraction_tol, "traversal");
  read_field(j, "line_search_tol", c.line_search_tol, "traversal");
  read_field(j, "tangent_tol", c.tangent_tol, "traversal");
  read_field(j, "wall_rel_tol", c.wall_rel_tol, "traversal");
  c.validate();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json j;
  j["format_version"] = kConfigFormatVersion;
  j["evaluator"] = c.evaluator ? evaluator_spec_to_json(*c.evaluator) : json(nullptr);
  j["nominal"] = optional_vector(c.nominal);
  j["q_allow"] = c.q_allow ? json(*c.q_allow) : json(nullptr);
  j["measure"] = measure_spec_to_json(c.measure);
  j["fit"] = fit_config_to_json(c.fit);
  j["boxmax"] = boxmax_config_to_json(c.boxmax);
  j["traversal"] = traversal_config_to_json(c.traversal);
  j["bbox"] = {{"tau_min", optional_vector(c.bbox.tau_min)},
               {"tau_max", optional_vector(c.bbox.tau_max)},
               {"caps", optional_vector(c.bbox.caps)}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["output_dir"] = c.output_dir.string();
  json t = json::object();
  auto put = [&](const char* k, const std::optional<double>& v) {
    if (v) t[k] = *v;
  };
  put("tol_err_inf", c.thresholds.tol_err_inf);
  put("objective_rel_err", c.thresholds.objective_rel_err);
  put("constraint_rel_err", c.thresholds.constraint_rel_err);
  put("surrogate_mean_rel", c.thresholds.surrogate_mean_rel);
  put("surrogate_max_rel", c.thresholds.surrogate_max_rel);
  j["thresholds"] = t;
  j["method"] = c.method == Method::GA ? "ga" : "cg";
  j["sampling"] = {{"n_train", c.n_train}, {"n_holdout", c.n_holdout}};
  j["jobs"] = c.jobs;
  return j;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"format_version", "evaluator", "nominal", "q_allow", "measure", "fit", "boxmax", "traversal", "bbox",
                 "seed", "output_dir", "thresholds", "method", "sampling", "jobs"},
             "config");
  if (!j.contains("format_version")) throw ParseError("config: missing format_version");
  if (j.at("format_version") != kConfigFormatVersion) {
    throw ParseError("config: unsupported format_version " + j.at("format_version").dump());
  }
  RunConfig c;
  auto present = [&](const char* k) { return j.contains(k) && !j.at(k).is_null(); };
  if (present("evaluator")) {
    c.evaluator = evaluator_spec_from_json(j.at("evaluator"));
    resolve_paths(*c.evaluator, base_dir);
  }
  if (present("nominal")) c.nominal = vector_from_json(j.at("nominal"), "nominal");
  if (present("q_allow")) {
    if (!j.at("q_allow").is_number()) throw ParseError("config.q_allow: expected a number");
    c.q_allow = j.at("q_allow").get<double>();
  }
  if (present("measure")) c.measure = measure_spec_from_json(j.at("measure"));
  if (present("fit")) c.fit = fit_config_from_json(j.at("fit"), c.fit);
  if (present("boxmax")) c.boxmax = boxmax_config_from_json(j.at("boxmax"), c.boxmax);
  if (present("traversal")) c.traversal = traversal_config_from_json(j.at("traversal"), c.traversal);
  if (present("bbox")) {
    const json& b = j.at("bbox");
    check_keys(b, {"tau_min", "tau_max", "caps"}, "bbox");
    if (b.contains("tau_min") && !b.at("tau_min").is_null()) c.bbox.tau_min = vector_from_json(b.at("tau_min"), "bbox.tau_min");
    if (b.contains("tau_max") && !b.at("tau_max").is_null()) c.bbox.tau_max = vector_from_json(b.at("tau_max"), "bbox.tau_max");
    if (b.contains("caps") && !b.at("caps").is_null()) c.bbox.caps = vector_from_json(b.at("caps"), "bbox.caps");
  }
  if (present("seed")) {
    const json& sj = j.at("seed");
    if (!sj.is_number_integer() || (!sj.is_number_unsigned() && sj.get<std::int64_t>() < 0)) {
      throw ParseError("config.seed: expected a non-negative integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (present("output_dir")) {
    std::string out;
    read_field(j, "output_dir", out, "config");
    c.output_dir = resolve(out, base_dir);
  } else if (!base_dir.empty()) {
    c.output_dir = base_dir;
  }
  if (present("thresholds")) {
    const json& t = j.at("thresholds");
    check_keys(t, {"tol_err_inf", "objective_rel_err", "constraint_rel_err", "surrogate_mean_rel", "surrogate_max_rel"},
               "thresholds");
    auto get = [&](const char* k, std::optional<double>& out) {
      if (t.contains(k)) {
        if (!t.at(k).is_number()) throw ParseError(std::string("thresholds.") + k + ": expected a number");
        out = t.at(k).get<double>();
      }
    };
    get("tol_err_inf", c.thresholds.tol_err_inf);
    get("objective_rel_err", c.thresholds.objective_rel_err);
    get("constraint_rel_err", c.thresholds.constraint_rel_err);
    get("surrogate_mean_rel", c.thresholds.surrogate_mean_rel);
    get("surrogate_max_rel", c.thresholds.surrogate_max_rel);
  }
  if (present("method")) {
    std::string m;
    read_field(j, "method", m, "config");
    c.method = method_from_name(m);
  }
  if (present("sampling")) {
    const json& s = j.at("sampling");
    check_keys(s, {"n_train", "n_holdout"}, "sampling");
    read_field(s, "n_train", c.n_train, "sampling");
    read_field(s, "n_holdout", c.n_holdout, "sampling");
    if (c.n_train < 1 || c.n_holdout < 0) throw ParseError("sampling: n_train must be >= 1 and n_holdout >= 0");
  }
  if (present("jobs")) {
    read_field(j, "jobs", c.jobs, "config");
    if (c.jobs < 1) throw ParseError("config.jobs must be >= 1");
  }
  if (c.nominal && c.evaluator) {
    if (const auto* e = std::get_if<ExternalSpec>(&c.evaluator->variant)) {
      check_dim(e->dim, c.nominal->size(), "external evaluator dim");
    }
  }
  return c;
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

RunConfig load_run_config(const std::filesystem::path& path) {
  const json j = parse_json_text(read_text_file(path), path.string());
  try {
    return run_config_from_json(j, path.parent_path());
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

json domain_sizing_to_json(const DomainSizing& s, const Vector& nominal, double q_allow) {
  json axes = json::array();
  for (std::size_t i = 0; i < s.minus.size(); ++i) {
    auto side = [](const AxisThreshold& t) {
      return json{{"distance", t.distance}, {"capped", t.capped}, {"tangent", t.tangent}};
    };
    axes.push_back({{"minus", side(s.minus[i])}, {"plus", side(s.plus[i])}});
  }
  return {{"format_version", kConfigFormatVersion},
          {"nominal", vector_to_json(nominal)},
          {"q_allow", q_allow},
          {"tau_min", vector_to_json(s.bbox.tau_min)},
          {"tau_max", vector_to_json(s.bbox.tau_max)},
          {"sampling_domain", intervals_to_json(s.sampling_domain)},
          {"axes", axes},
          {"warnings", s.warnings}};
}

DomainFile domain_file_from_json(const json& j) {
  try {
    DomainFile f;
    f.bbox = BoundingBox(vector_from_json(j.at("tau_min"), "tau_min"), vector_from_json(j.at("tau_max"), "tau_max"));
    f.sampling_domain = intervals_from_json(j.at("sampling_domain"));
    check_dim(static_cast<Eigen::Index>(f.sampling_domain.size()), f.bbox.dim(), "domain file sampling_domain");
    return f;
  } catch (const json::exception& e) {
    throw ParseError(std::string("domain file: ") + e.what());
  }
}

json allocation_result_to_json(const AllocationResult& r, const MeasureSpec& measure, const ToleranceVector& tau0,
                               double q_allow) {
  json walls = json::array();
  for (const auto& [it, k] : r.trace.wall_events) walls.push_back({it, k + 1});
  return {{"format_version", kConfigFormatVersion},
          {"method", method_name(r.method)},
          {"measure", measure_spec_to_json(measure)},
          {"q_allow", q_allow},
          {"tau0", vector_to_json(tau0)},
          {"tau", vector_to_json(r.tau)},
          {"f_opt", r.f_opt},
          {"g_residual", r.g_residual},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"stalled", r.stalled},
          {"restarts", r.trace.restarts},
          {"wall_events", walls}};
}

json fit_report_to_json(const FitReport& r) {
  return {{"final_rank", r.final_rank},
          {"sweeps_used", r.sweeps_used},
          {"converged", r.converged},
          {"final_residual", r.residual_history.empty() ? json(nullptr) : json(r.residual_history.back())},
          {"residual_history", r.residual_history}};
}

ToleranceVector tolerance_from_json(const json& j) {
  if (j.is_object() && !j.contains("tau")) throw ParseError("tolerance file: no 'tau' field");
  ToleranceVector tau = vector_from_json(j.is_object() ? j.at("tau") : j, "tau");
  check_tolerance(tau);
  return tau;
}

}  // namespace tolalloc
