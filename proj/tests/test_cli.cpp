#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"
#include <json.hpp>

#include "tolalloc/io.hpp"

using namespace testing_support;
namespace fs = std::filesystem;

namespace {
const std::string kCli = TOLALLOC_CLI;

fs::path bowl_config(const fs::path& dir, const std::string& extra = "") {
  write_text(dir / "run.json", R"({
  "format_version": 1,
  "evaluator": {"type": "builtin", "name": "quadratic-bowl", "parameters": {"a": [1, 4]}},
  "nominal": [0, 0],
  "q_allow": 1,
  "seed": 11,
  "fit": {"rank": 2, "degree": 2},
  "sampling": {"n_train": 60, "n_holdout": 20})" + extra + R"(
})");
  return dir / "run.json";
}

CommandResult cli(const std::string& args) { return run_command(kCli + " " + args); }
}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(cli("").exit_code, 2);
  EXPECT_EQ(cli("frobnicate").exit_code, 2);
  EXPECT_EQ(cli("sample -c /nonexistent.json").exit_code, 2);
  EXPECT_EQ(cli("--help").exit_code, 0);
}

TEST(Cli, NominalViolationExitsWithOne) {
  const auto dir = fresh_dir("cli_nominal");
  write_text(dir / "run.json", R"({"format_version": 1,
    "evaluator": {"type": "builtin", "name": "quadratic-bowl", "parameters": {"a": [1], "center": [2]}},
    "nominal": [0], "q_allow": 1, "seed": 1})");
  const CommandResult r = cli("size-domain -c " + (dir / "run.json").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("constraint violated at nominal"), std::string::npos) << r.output;
}

TEST(Cli, SampleIsReproducible) {
  const auto dir = fresh_dir("cli_sample");
  const fs::path cfg = bowl_config(dir);
  ASSERT_EQ(cli("sample -c " + cfg.string() + " --out " + (dir / "a.csv").string()).exit_code, 0);
  ASSERT_EQ(cli("sample -c " + cfg.string() + " --jobs 3 --out " + (dir / "b.csv").string()).exit_code, 0);
  ASSERT_EQ(cli("sample -c " + cfg.string() + " --seed 12 --out " + (dir / "c.csv").string()).exit_code, 0);
  const std::string a = tolalloc::read_text_file(dir / "a.csv");
  EXPECT_EQ(a, tolalloc::read_text_file(dir / "b.csv"));
  EXPECT_NE(a, tolalloc::read_text_file(dir / "c.csv"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 61);
}

TEST(Cli, MissingSamplesLeaveNoModel) {
  const auto dir = fresh_dir("cli_missing");
  const fs::path cfg = bowl_config(dir);
  const CommandResult r = cli("fit -c " + cfg.string() + " --samples " + (dir / "nope.csv").string() + " --out " +
                              (dir / "model.json").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(fs::exists(dir / "model.json"));
}

TEST(Cli, MalformedSamplesExitWithTwo) {
  const auto dir = fresh_dir("cli_malformed");
  const fs::path cfg = bowl_config(dir);
  write_text(dir / "bad.csv", "mu_1,mu_2,q\n0.1,oops,3\n");
  const CommandResult r = cli("fit -c " + cfg.string() + " --samples " + (dir / "bad.csv").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(fs::exists(dir / "model.json"));
}

TEST(Cli, StepwisePipeline) {
  const auto dir = fresh_dir("cli_pipeline");
  const std::string cfg = "-c " + bowl_config(dir).string() + " -o " + dir.string();
  ASSERT_EQ(cli("size-domain " + cfg).exit_code, 0);
  const std::string dom = " --domain " + (dir / "domain.json").string();
  ASSERT_EQ(cli("sample " + cfg + dom).exit_code, 0);
  ASSERT_EQ(cli("sample " + cfg + dom + " --seed 99 -n 20 --out " + (dir / "holdout.csv").string()).exit_code, 0);
  const CommandResult fit = cli("fit " + cfg + dom + " --samples " + (dir / "samples.csv").string() +
                                " --holdout " + (dir / "holdout.csv").string());
  ASSERT_EQ(fit.exit_code, 0) << fit.output;
  EXPECT_TRUE(fs::exists(dir / "fit_report.json"));
  const std::string model = " --model " + (dir / "model.json").string();
  const CommandResult ga = cli("allocate " + cfg + dom + model + " --method ga --out " +
                               (dir / "ga.json").string() + " --emit-manifold-scan " + (dir / "scan.csv").string() +
                               " --scan-resolution 11");
  ASSERT_EQ(ga.exit_code, 0) << ga.output;
  ASSERT_EQ(cli("allocate " + cfg + dom + model + " --method cg --out " + (dir / "cg.json").string()).exit_code, 0);
  EXPECT_TRUE(fs::exists(dir / "trace.csv"));
  const std::string scan = tolalloc::read_text_file(dir / "scan.csv");
  EXPECT_EQ(std::count(scan.begin(), scan.end(), '\n'), 1 + 11 * 11);

  write_text(dir / "exact.json", "[0.894427190999916, 0.223606797749979]");
  const CommandResult chk = cli("check " + cfg + " --tau " + (dir / "ga.json").string() + " --reference " +
                                (dir / "exact.json").string());
  EXPECT_EQ(chk.exit_code, 0) << chk.output;
  const auto j = nlohmann::json::parse(tolalloc::read_text_file(dir / "check.json"));
  EXPECT_LT(j.at("tol_err_inf").get<double>(), 1e-4);
}

TEST(Cli, ThresholdFailureExitsWithOne) {
  const auto dir = fresh_dir("cli_threshold");
  const std::string cfg = "-c " + bowl_config(dir, R"(, "thresholds": {"tol_err_inf": 1e-3})").string();
  write_text(dir / "tau.json", "[0.5, 0.4]");
  write_text(dir / "ref.json", "[0.894427190999916, 0.223606797749979]");
  const CommandResult r = cli("check " + cfg + " --tau " + (dir / "tau.json").string() + " --reference " +
                              (dir / "ref.json").string());
  EXPECT_EQ(r.exit_code, 1) << r.output;
  const auto j = nlohmann::json::parse(tolalloc::read_text_file(dir / "check.json"));
  EXPECT_FALSE(j.at("pass").get<bool>());
}

TEST(Cli, UnknownConfigKeyExitsWithTwo) {
  const auto dir = fresh_dir("cli_badkey");
  const CommandResult r = cli("size-domain -c " + bowl_config(dir, R"(, "colour": "red")").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("colour"), std::string::npos);
}
