// Command-line front end: sample, fit, size-domain, allocate, check, report.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tolalloc/boxmax.hpp"
#include "tolalloc/config.hpp"
#include "tolalloc/domain.hpp"
#include "tolalloc/evaluator.hpp"
#include "tolalloc/io.hpp"
#include "tolalloc/manifold.hpp"
#include "tolalloc/measures.hpp"
#include "tolalloc/metrics.hpp"
#include "tolalloc/model_io.hpp"
#include "tolalloc/response.hpp"
#include "tolalloc/samples.hpp"
#include "tolalloc/surrogate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tolalloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitThreshold = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

constexpr double kDefaultSearchCap = 10.0;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> output_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "seed; overrides the config");
  cmd->add_option("--jobs", o.jobs, "worker threads for sampling")->check(CLI::PositiveNumber);
  cmd->add_option("-o,--output-dir", o.output_dir, "directory for default output paths");
}

RunConfig load_config(const CommonOptions& o) {
  RunConfig c = load_run_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.output_dir) c.output_dir = *o.output_dir;
  return c;
}

fs::path out_path(const RunConfig& c, const std::string& flag_value, const char* default_name) {
  return flag_value.empty() ? c.output_dir / default_name : fs::path(flag_value);
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

// -- shared pipeline steps ----------------------------------------------------

DomainSizing size_domain(const RunConfig& c, const Evaluator& evaluator) {
  const Vector& nominal = c.require_nominal();
  check_dim(evaluator.dim(), nominal.size(), "evaluator vs nominal");
  const Vector caps = c.bbox.caps.value_or(Vector::Constant(nominal.size(), kDefaultSearchCap));
  DomainSizing s = size_bounding_box(evaluator, nominal, c.require_q_allow(), caps, c.bbox.tau_min);
  if (c.bbox.tau_max) {
    check_dim(c.bbox.tau_max->size(), nominal.size(), "bbox.tau_max");
    s.bbox = BoundingBox(s.bbox.tau_min, *c.bbox.tau_max);
    s.sampling_domain = sampling_domain(nominal, s.bbox.tau_max);
    s.warnings.push_back("tau_max taken from the config instead of the axis crossings");
  }
  return s;
}

DomainFile domain_from(const RunConfig& c, const std::string& domain_path) {
  if (!domain_path.empty()) {
    return domain_file_from_json(parse_json_text(read_text_file(domain_path), domain_path));
  }
  const DomainSizing s = size_domain(c, *make_evaluator(c.require_evaluator()));
  for (const auto& w : s.warnings) warn(w);
  return {s.bbox, s.sampling_domain};
}

Response response_from_models(const std::vector<std::string>& paths) {
  if (paths.empty()) throw ParseError("at least one --model is required");
  std::vector<SeparatedModel> models;
  for (const auto& p : paths) models.push_back(load_model(p));
  if (models.size() == 1) return Response::from_model(std::move(models.front()));
  return Response::max_of(std::move(models));
}

// Fills sensitivity weights for a mu-norm given without them.
MeasureSpec resolve_measure(const MeasureSpec& m, const Response& response, const Vector& nominal,
                            std::vector<std::string>& warnings) {
  const auto* mu = std::get_if<MuNorm>(&m.kind);
  if (!mu || mu->weights.size() != 0) return m;
  const Vector w = response.gradient(nominal).cwiseAbs();
  if ((w.array() == 0.0).all()) {
    warnings.push_back("mu-norm weights vanish at the nominal design (stationary point); using the one-norm");
    return {OneNorm{}};
  }
  return {MuNorm{w}};
}

struct AllocationRun {
  AllocationResult result;
  MeasureSpec measure;
  ToleranceVector tau0;
  std::vector<std::string> warnings;
};

AllocationRun run_allocation(const RunConfig& c, const Response& response, const BoundingBox& bbox, Method method) {
  const Vector& nominal = c.require_nominal();
  check_dim(response.dim(), nominal.size(), "model vs nominal");
  check_dim(bbox.dim(), nominal.size(), "bounding box vs nominal");
  AllocationRun run;
  run.measure = resolve_measure(c.measure, response, nominal, run.warnings);
  run.measure.validate(bbox.dim());
  BoxMaxConfig bm = c.boxmax;
  bm.seed = c.require_seed();
  SurrogateWorstCase G(response, nominal, bm);
  const ManifoldContext ctx{G, bbox, c.require_q_allow(), c.traversal.retraction_tol};
  run.tau0 = initial_guess(run.measure, ctx);
  run.result = traverse(method, run.tau0, G, bbox, c.require_q_allow(), run.measure, c.traversal);
  if (run.result.stalled && run.result.iterations == 0) {
    run.warnings.push_back("the first line search found no improving step; returning the initial guess");
  }
  return run;
}

json allocation_json(const AllocationRun& run, double q_allow) {
  json j = allocation_result_to_json(run.result, run.measure, run.tau0, q_allow);
  j["warnings"] = run.warnings;
  return j;
}

std::string manifold_scan_csv(const WorstCaseFunction& G, const BoundingBox& bbox, int n) {
  std::ostringstream os;
  os << "tau_1,tau_2,G\n";
  Vector tau(2);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      tau(0) = bbox.tau_min(0) + (bbox.tau_max(0) - bbox.tau_min(0)) * a / (n - 1);
      tau(1) = bbox.tau_min(1) + (bbox.tau_max(1) - bbox.tau_min(1)) * b / (n - 1);
      os << format_double(tau(0)) << ',' << format_double(tau(1)) << ',' << format_double(G.value(tau)) << '\n';
    }
  }
  return os.str();
}

std::string format_row(const std::string& label, const Vector& v) {
  std::string s = label;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : " (") + format_double(v(i));
  return s + ")";
}

bool within(const std::optional<double>& limit, double value, const char* name, json& failures) {
  if (!limit || value <= *limit) return true;
  failures.push_back({{"metric", name}, {"value", value}, {"threshold", *limit}});
  return false;
}

// -- subcommands --------------------------------------------------------------

struct SizeDomainOptions {
  CommonOptions common;
  std::string out;
};

int cmd_size_domain(const SizeDomainOptions& o) {
  const RunConfig c = load_config(o.common);
  const DomainSizing s = size_domain(c, *make_evaluator(c.require_evaluator()));
  for (const auto& w : s.warnings) warn(w);
  const fs::path path = out_path(c, o.out, "domain.json");
  write_file_atomic(path, dump_json(domain_sizing_to_json(s, c.require_nominal(), c.require_q_allow())));
  std::cout << format_row("tau_max", s.bbox.tau_max) << "\nwrote " << path.string() << "\n";
  return kExitOk;
}

struct SampleOptions {
  CommonOptions common;
  std::optional<int> n;
  std::string domain;
  std::string out;
};

int cmd_sample(const SampleOptions& o) {
  const RunConfig c = load_config(o.common);
  const int n = o.n.value_or(c.n_train);
  if (n < 1) throw ParseError("--n must be >= 1");
  const std::uint64_t seed = c.require_seed();
  const DomainFile dom = domain_from(c, o.domain);
  const EvaluatorPtr ev = make_evaluator(c.require_evaluator());
  const SampleSet samples = draw_samples(*ev, dom.sampling_domain, n, seed, c.jobs);
  const fs::path path = out_path(c, o.out, "samples.csv");
  write_samples_csv(path, samples);
  std::cout << "wrote " << n << " samples to " << path.string() << "\n";
  return kExitOk;
}

struct FitOptions {
  CommonOptions common;
  std::string samples;
  std::string holdout;
  std::string domain;
  std::optional<int> rank;
  std::optional<int> degree;
  std::string out;
  std::string report;
};

int cmd_fit(const FitOptions& o) {
  RunConfig c = load_config(o.common);
  if (o.rank) c.fit.target_rank = *o.rank;
  if (o.degree) c.fit.degree = *o.degree;
  c.fit.seed = c.require_seed();
  const SampleSet train = read_samples_csv(o.samples);
  std::optional<SampleSet> holdout;
  if (!o.holdout.empty()) holdout = read_samples_csv(o.holdout);
  const DomainFile dom = domain_from(c, o.domain);

  const FitResult fit = als_fit(train, c.fit, dom.sampling_domain);
  json report = fit_report_to_json(fit.report);
  report["rank"] = c.fit.target_rank;
  report["degree"] = c.fit.degree;
  report["n_train"] = train.size();
  std::cout << "rank " << fit.report.final_rank << ", degree " << c.fit.degree << ", sweeps "
            << fit.report.sweeps_used << ", relative residual "
            << format_double(fit.report.residual_history.back()) << (fit.report.converged ? "" : " (not converged)")
            << "\n";
  bool ok = true;
  json failures = json::array();
  if (holdout) {
    const ErrorReport e = surrogate_errors(fit.model, *holdout);
    report["holdout"] = to_json(e);
    std::cout << "holdout: mean_rel " << format_double(e.mean_rel) << ", max_rel " << format_double(e.max_rel)
              << ", n " << e.n_compared << "\n";
    ok &= within(c.thresholds.surrogate_mean_rel, e.mean_rel, "surrogate_mean_rel", failures);
    ok &= within(c.thresholds.surrogate_max_rel, e.max_rel, "surrogate_max_rel", failures);
  }
  report["threshold_failures"] = failures;
  const fs::path model_path = out_path(c, o.out, "model.json");
  const fs::path report_path = out_path(c, o.report, "fit_report.json");
  save_model(model_path, fit.model);
  write_file_atomic(report_path, dump_json(report));
  std::cout << "wrote " << model_path.string() << " and " << report_path.string() << "\n";
  return ok ? kExitOk : kExitThreshold;
}

struct AllocateOptions {
  CommonOptions common;
  std::vector<std::string> models;
  std::string domain;
  std::optional<std::string> method;
  std::string out;
  std::string trace;
  std::string scan;
  int scan_resolution = 101;
};

int cmd_allocate(const AllocateOptions& o) {
  RunConfig c = load_config(o.common);
  if (o.method) c.method = method_from_name(*o.method);
  const Response response = response_from_models(o.models);
  const DomainFile dom = domain_from(c, o.domain);
  if (!o.scan.empty() && dom.bbox.dim() != 2) {
    throw ParseError("--emit-manifold-scan needs a two-parameter problem");
  }
  const AllocationRun run = run_allocation(c, response, dom.bbox, c.method);
  for (const auto& w : run.warnings) warn(w);

  const fs::path result_path = out_path(c, o.out, "result.json");
  const fs::path trace_path = out_path(c, o.trace, "trace.csv");
  std::string scan;
  if (!o.scan.empty()) {
    BoxMaxConfig bm = c.boxmax;
    bm.seed = c.require_seed();
    scan = manifold_scan_csv(SurrogateWorstCase(response, c.require_nominal(), bm), dom.bbox, o.scan_resolution);
  }
  write_file_atomic(trace_path, format_trace_csv(run.result.trace));
  write_file_atomic(result_path, dump_json(allocation_json(run, c.require_q_allow())));
  if (!scan.empty()) write_file_atomic(o.scan, scan);

  const AllocationResult& r = run.result;
  std::cout << method_name(r.method) << ": " << format_row("tau", r.tau) << ", F " << format_double(r.f_opt)
            << ", iterations " << r.iterations << ", G residual " << format_double(r.g_residual) << "\n";
  std::cout << "wrote " << result_path.string() << " and " << trace_path.string() << "\n";
  return kExitOk;
}

struct CheckOptions {
  CommonOptions common;
  std::string tau;
  std::string reference;
  std::vector<std::string> reference_models;
  std::string out;
};

int cmd_check(const CheckOptions& o) {
  const RunConfig c = load_config(o.common);
  const json tau_json = parse_json_text(read_text_file(o.tau), o.tau);
  const ToleranceVector tau = tolerance_from_json(tau_json);
  const ToleranceVector tau_ref = tolerance_from_json(parse_json_text(read_text_file(o.reference), o.reference));
  check_dim(tau.size(), tau_ref.size(), "tau vs reference");

  MeasureSpec measure = c.measure;
  if (const auto* mu = std::get_if<MuNorm>(&measure.kind); mu && mu->weights.size() == 0) {
    if (!tau_json.is_object() || !tau_json.contains("measure")) {
      throw ParseError("mu-norm without weights: the tolerance file must carry its resolved measure");
    }
    measure = measure_spec_from_json(tau_json.at("measure"));
  }
  measure.validate(static_cast<int>(tau.size()));

  const Response ref = o.reference_models.empty() ? Response::from_evaluator(make_evaluator(c.require_evaluator()))
                                                  : response_from_models(o.reference_models);
  BoxMaxConfig bm = c.boxmax;
  if (c.seed) bm.seed = *c.seed;
  const SurrogateWorstCase G_ref(ref, c.require_nominal(), bm);
  const AllocationErrorReport e = allocation_errors(tau, tau_ref, measure, G_ref, c.require_q_allow());

  json failures = json::array();
  bool ok = true;
  ok &= within(c.thresholds.tol_err_inf, e.tol_err_inf, "tol_err_inf", failures);
  ok &= within(c.thresholds.objective_rel_err, e.objective_rel_err, "objective_rel_err", failures);
  ok &= within(c.thresholds.constraint_rel_err, e.constraint_rel_err, "constraint_rel_err", failures);
  json j = to_json(e);
  j["pass"] = ok;
  j["threshold_failures"] = failures;
  const fs::path path = out_path(c, o.out, "check.json");
  write_file_atomic(path, dump_json(j));
  std::cout << "tol_err_inf " << format_double(e.tol_err_inf) << ", objective_rel_err "
            << format_double(e.objective_rel_err) << ", constraint_rel_err " << format_double(e.constraint_rel_err)
            << (ok ? "\nPASS\n" : "\nFAIL: threshold exceeded\n");
  return ok ? kExitOk : kExitThreshold;
}

struct ReportOptions {
  CommonOptions common;
};

int cmd_report(const ReportOptions& o) {
  RunConfig c = load_config(o.common);
  const std::uint64_t seed = c.require_seed();
  c.fit.seed = seed;
  const fs::path dir = c.output_dir;
  const EvaluatorPtr ev = make_evaluator(c.require_evaluator());
  const double q_allow = c.require_q_allow();
  const Vector& nominal = c.require_nominal();

  const DomainSizing sizing = size_domain(c, *ev);
  for (const auto& w : sizing.warnings) warn(w);
  const SampleSet train = draw_samples(*ev, sizing.sampling_domain, c.n_train, seed, c.jobs);
  std::optional<SampleSet> holdout;
  if (c.n_holdout > 0) holdout = draw_samples(*ev, sizing.sampling_domain, c.n_holdout, seed + 1, c.jobs);
  const FitResult fit = als_fit(train, c.fit, sizing.sampling_domain);

  json report;
  report["format_version"] = kConfigFormatVersion;
  report["seed"] = seed;
  report["q_allow"] = q_allow;
  report["tau_max"] = vector_to_json(sizing.bbox.tau_max);
  json fit_json = fit_report_to_json(fit.report);
  fit_json["rank"] = c.fit.target_rank;
  fit_json["degree"] = c.fit.degree;
  json failures = json::array();
  bool ok = true;
  if (holdout) {
    const ErrorReport e = surrogate_errors(fit.model, *holdout);
    fit_json["holdout"] = to_json(e);
    ok &= within(c.thresholds.surrogate_mean_rel, e.mean_rel, "surrogate_mean_rel", failures);
    ok &= within(c.thresholds.surrogate_max_rel, e.max_rel, "surrogate_max_rel", failures);
  }
  report["fit"] = fit_json;

  const Response response = Response::from_model(fit.model);
  BoxMaxConfig bm = c.boxmax;
  bm.seed = seed;
  const SurrogateWorstCase G_true(Response::from_evaluator(ev), nominal, bm);

  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_file_atomic(dir / name, text);
    files.push_back(name);
  };
  emit("domain.json", dump_json(domain_sizing_to_json(sizing, nominal, q_allow)));
  emit("samples.csv", format_samples_csv(train));
  if (holdout) emit("holdout.csv", format_samples_csv(*holdout));
  emit("model.json", dump_json(model_to_json(fit.model)));

  std::ostringstream table;
  table << "method  iterations  F                   constraint_rel_err  tau\n";
  json allocations = json::object();
  for (Method m : {Method::GA, Method::CG}) {
    const AllocationRun run = run_allocation(c, response, sizing.bbox, m);
    for (const auto& w : run.warnings) warn(w);
    const std::string tag = m == Method::GA ? "ga" : "cg";
    json j = allocation_json(run, q_allow);
    const double gamma = std::abs(q_allow - G_true.value(run.result.tau)) / std::abs(q_allow);
    j["constraint_rel_err_true"] = gamma;
    ok &= within(c.thresholds.constraint_rel_err, gamma, "constraint_rel_err", failures);
    emit("result_" + tag + ".json", dump_json(j));
    emit("trace_" + tag + ".csv", format_trace_csv(run.result.trace));
    allocations[tag] = j;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s  %10d  %-18.12g  %-18.6g  ", method_name(m).c_str(), run.result.iterations,
                  run.result.f_opt, gamma);
    table << line;
    for (Eigen::Index i = 0; i < run.result.tau.size(); ++i) table << (i ? " " : "") << format_double(run.result.tau(i));
    table << "\n";
  }
  report["allocations"] = allocations;
  report["threshold_failures"] = failures;
  report["pass"] = ok;
  files.push_back("report.json");
  report["artifacts"] = files;
  write_file_atomic(dir / "report.json", dump_json(report));

  std::cout << "surrogate: rank " << fit.report.final_rank << ", degree " << c.fit.degree << ", residual "
            << format_double(fit.report.residual_history.back());
  if (holdout) std::cout << ", holdout mean_rel " << format_double(fit_json["holdout"]["mean_rel"].get<double>());
  std::cout << "\n" << table.str() << "artifacts in " << dir.string() << "\n";
  if (!ok) std::cout << "FAIL: threshold exceeded\n";
  return ok ? kExitOk : kExitThreshold;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConstraintError*>(&e)) return kExitThreshold;
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const FitError*>(&e) ||
      dynamic_cast<const MetricError*>(&e) || dynamic_cast<const EvaluatorError*>(&e)) {
    return kExitNumeric;
  }
  if (dynamic_cast<const Error*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kExitUsage;
  return kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tolalloc: worst-case tolerance allocation with separated surrogates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tolalloc 0.1.0");

  SizeDomainOptions size_o;
  auto* size_cmd = app.add_subcommand("size-domain", "size the tolerance bounding box and sampling domain");
  add_common(size_cmd, size_o.common);
  size_cmd->add_option("--out", size_o.out, "domain file (default <output_dir>/domain.json)");

  SampleOptions sample_o;
  auto* sample_cmd = app.add_subcommand("sample", "draw seeded uniform samples of the evaluator");
  add_common(sample_cmd, sample_o.common);
  sample_cmd->add_option("-n,--n", sample_o.n, "number of samples (default: sampling.n_train)");
  sample_cmd->add_option("--domain", sample_o.domain, "domain file from size-domain")->check(CLI::ExistingFile);
  sample_cmd->add_option("--out", sample_o.out, "sample CSV (default <output_dir>/samples.csv)");

  FitOptions fit_o;
  auto* fit_cmd = app.add_subcommand("fit", "fit a separated surrogate by alternating least squares");
  add_common(fit_cmd, fit_o.common);
  fit_cmd->add_option("--samples", fit_o.samples, "training samples CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--holdout", fit_o.holdout, "held-out samples CSV")->check(CLI::ExistingFile);
  fit_cmd->add_option("--domain", fit_o.domain, "domain file from size-domain")->check(CLI::ExistingFile);
  fit_cmd->add_option("--rank", fit_o.rank, "target rank")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--degree", fit_o.degree, "polynomial degree")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--out", fit_o.out, "model file (default <output_dir>/model.json)");
  fit_cmd->add_option("--report", fit_o.report, "fit report (default <output_dir>/fit_report.json)");

  AllocateOptions alloc_o;
  auto* alloc_cmd = app.add_subcommand("allocate", "optimal tolerance allocation on a fitted surrogate");
  add_common(alloc_cmd, alloc_o.common);
  alloc_cmd->add_option("--model", alloc_o.models, "model file; repeat for the pointwise max of several")
      ->required()
      ->check(CLI::ExistingFile);
  alloc_cmd->add_option("--domain", alloc_o.domain, "domain file from size-domain")->check(CLI::ExistingFile);
  alloc_cmd->add_option("--method", alloc_o.method, "ga or cg (default: config)");
  alloc_cmd->add_option("--out", alloc_o.out, "result file (default <output_dir>/result.json)");
  alloc_cmd->add_option("--trace", alloc_o.trace, "trace CSV (default <output_dir>/trace.csv)");
  alloc_cmd->add_option("--emit-manifold-scan", alloc_o.scan, "write a G grid over the bounding box (d = 2)");
  alloc_cmd->add_option("--scan-resolution", alloc_o.scan_resolution, "grid points per axis")
      ->check(CLI::Range(2, 2001));

  CheckOptions check_o;
  auto* check_cmd = app.add_subcommand("check", "compare an allocation against a reference");
  add_common(check_cmd, check_o.common);
  check_cmd->add_option("--tau", check_o.tau, "result file or JSON array")->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--reference", check_o.reference, "reference result file or JSON array")
      ->required()
      ->check(CLI::ExistingFile);
  check_cmd->add_option("--reference-model", check_o.reference_models,
                        "evaluate G_ref on these models instead of the evaluator")
      ->check(CLI::ExistingFile);
  check_cmd->add_option("--out", check_o.out, "check file (default <output_dir>/check.json)");

  ReportOptions report_o;
  auto* report_cmd = app.add_subcommand("report", "full pipeline: size, sample, fit, allocate with GA and CG");
  add_common(report_cmd, report_o.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*size_cmd) return cmd_size_domain(size_o);
    if (*sample_cmd) return cmd_sample(sample_o);
    if (*fit_cmd) return cmd_fit(fit_o);
    if (*alloc_cmd) return cmd_allocate(alloc_o);
    if (*check_cmd) return cmd_check(check_o);
    if (*report_cmd) return cmd_report(report_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}
