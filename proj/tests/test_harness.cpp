#include "nvsplit/harness.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nvsplit;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "model": "OU",
  "schemes": ["euler"],
  "payoff": {"type": "moment2"},
  "grid": [-1, 0, 1]
})";

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("nvsplit_test_" + name);
    fs::remove_all(dir);
    return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text)
{
    fs::create_directories(dir);
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<ConfigIssue> issues_of(std::string_view text)
{
    try {
        validate_config(text);
    } catch (const ConfigValidationError& e) {
        return e.issues();
    }
    return {};
}

bool has_issue(const std::vector<ConfigIssue>& issues, const std::string& path, const std::string& message)
{
    for (const auto& i : issues)
        if (i.path == path && i.message.find(message) != std::string::npos) return true;
    return false;
}

int run_quiet(Command c, const RunOptions& o)
{
    std::ostringstream out, err;
    return run(c, o, out, err);
}

// A Monte Carlo study small enough to run in a unit test.
const char* kSmallMc = R"({
  "model": {"name": "LINEAR_GROWTH_1D"},
  "schemes": ["euler", "nv"],
  "payoff": {"type": "moment1"},
  "steps": [2, 4, 8],
  "npaths": 300,
  "grid": [-1.0, 0.5],
  "reference": {"kind": "fine-nv", "factor": 4},
  "evaluation": "monte-carlo",
  "seed": 5
})";

} // namespace

TEST(ValidateConfig, MinimalConfigFillsDefaults)
{
    const StudyConfig c = validate_config(kMinimal);
    const ExperimentConfig& e = c.experiment;
    EXPECT_EQ(e.model.name, "OU");
    ASSERT_EQ(e.schemes.size(), 1u);
    EXPECT_EQ(e.schemes[0].name, "euler");
    EXPECT_EQ(e.steps, (std::vector<int>{8, 16, 32, 64, 128}));
    EXPECT_EQ(e.npaths, 10000);
    EXPECT_EQ(e.T, 1.0);
    EXPECT_EQ(e.grid.size(), 3u);
    EXPECT_EQ(e.reference.kind, ReferenceKind::ExactOracle);
    EXPECT_EQ(e.reference.factor, 8);
    EXPECT_EQ(e.reference.paths_factor, 10);
    EXPECT_EQ(e.resolution_threshold, 0.3);
    EXPECT_EQ(c.snapshots, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(ValidateConfig, NpathsBelowMinimum)
{
    auto doc = nlohmann::json::parse(kMinimal);
    doc["npaths"] = 10;
    EXPECT_TRUE(has_issue(issues_of(doc.dump()), "/npaths", "npaths below minimum 100"));
}

TEST(ValidateConfig, StepsMustIncrease)
{
    auto doc = nlohmann::json::parse(kMinimal);
    doc["steps"] = {64, 32, 128};
    EXPECT_TRUE(has_issue(issues_of(doc.dump()), "/steps", "step counts must be strictly increasing"));
}

TEST(ValidateConfig, ReportsEveryIssue)
{
    auto doc = nlohmann::json::parse(kMinimal);
    doc["npaths"] = 10;
    doc["steps"] = {64, 32, 128};
    doc["bogus"] = 1;
    doc["schemes"] = {"midpoint"};
    const auto issues = issues_of(doc.dump());
    EXPECT_GE(issues.size(), 4u);
    EXPECT_TRUE(has_issue(issues, "/bogus", "unknown"));
    EXPECT_TRUE(has_issue(issues, "/schemes/0", "midpoint"));
}

TEST(ValidateConfig, MissingRequiredKeys)
{
    const auto issues = issues_of(R"({"schemes": ["nv"]})");
    EXPECT_TRUE(has_issue(issues, "/model", "missing"));
    EXPECT_TRUE(has_issue(issues, "/payoff", "missing"));
    EXPECT_TRUE(has_issue(issues, "/grid", "missing"));
}

TEST(ValidateConfig, MalformedJsonIsConfigError)
{
    EXPECT_THROW(validate_config("{\"model\": "), ConfigError);
}

TEST(ValidateConfig, BundledConfigsParse)
{
    for (const auto& entry : fs::directory_iterator(fs::path(NVSPLIT_SOURCE_DIR) / "configs")) {
        EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    }
}

TEST(ValidateConfig, HjmConfigBuildsCurveGrid)
{
    const StudyConfig c = load_config(fs::path(NVSPLIT_SOURCE_DIR) / "configs" / "hjm_bond.json");
    ASSERT_TRUE(c.hjm.has_value());
    EXPECT_EQ(c.experiment.grid.front().size(), c.hjm->spec.intervals + 1);
    EXPECT_EQ(c.experiment.payoff.kind, PayoffSpec::Kind::Custom);
}

TEST(ConfigHash, InvariantUnderKeyReordering)
{
    const std::string a = R"({"model": "OU", "payoff": {"type": "moment2", "coordinate": 0}, "grid": [0]})";
    const std::string b = R"({"grid": [0], "payoff": {"coordinate": 0, "type": "moment2"}, "model": "OU"})";
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(R"({"model": "OU", "payoff": {"type": "moment1"}, "grid": [0]})"));
    EXPECT_EQ(validate_config(kMinimal).hash, config_hash(kMinimal));
}

TEST(ParseCommand, KnownNames)
{
    EXPECT_EQ(parse_command("convergence"), Command::Convergence);
    EXPECT_EQ(parse_command("supermartingale"), Command::Supermartingale);
    EXPECT_EQ(parse_command("hjm-demo"), Command::HjmDemo);
    EXPECT_EQ(parse_command("list-models"), Command::ListModels);
    EXPECT_EQ(parse_command("selftest"), Command::Selftest);
    EXPECT_FALSE(parse_command("plot").has_value());
}

TEST(ExitCodes, Stable)
{
    EXPECT_EQ(exit_code_for(ErrorKind::Configuration), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::Argument), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::Capability), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::Overflow), 3);
    EXPECT_EQ(exit_code_for(ErrorKind::Inconclusive), 4);
}

TEST(Run, ListModels)
{
    std::ostringstream out, err;
    EXPECT_EQ(run(Command::ListModels, {}, out, err), 0);
    const std::string text = out.str();
    for (const char* name : {"OU", "GBM", "LINEAR_GROWTH_1D", "HEAT_SPDE", "hjm"})
        EXPECT_NE(text.find(name), std::string::npos) << name;
}

TEST(Run, ConvergenceOnBundledOuNv)
{
    const fs::path dir = fresh_dir("ou_nv");
    RunOptions o;
    o.config = fs::path(NVSPLIT_SOURCE_DIR) / "configs" / "ou_nv.json";
    o.out = dir;
    ASSERT_EQ(run_quiet(Command::Convergence, o), 0);
    std::istringstream summary(slurp(dir / "summary.csv"));
    std::string header, row;
    std::getline(summary, header);
    std::getline(summary, row);
    EXPECT_EQ(header, "scheme,slope,residual,levels_used");
    ASSERT_EQ(row.substr(0, 3), "nv,");
    const double slope = std::stod(row.substr(3));
    EXPECT_GE(slope, 1.7);
    EXPECT_LE(slope, 2.3);
    const std::string errors = slurp(dir / "errors.csv");
    EXPECT_EQ(errors.substr(0, errors.find('\n')), "scheme,nsteps,dt,grid_point,raw_error,weighted_error,stderr,argmax_flag");
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["library_version"], std::string(kLibraryVersion));
    EXPECT_TRUE(manifest.contains("config_hash"));
    EXPECT_EQ(manifest["seed"], 20260101u);
}

TEST(Run, RepeatedRunsAreByteIdentical)
{
    const fs::path cfg = write_file(fresh_dir("det_cfg"), "mc.json", kSmallMc);
    std::vector<std::string> errors, summaries;
    for (int workers : {1, 1, 3}) {
        const fs::path dir = fresh_dir("det_" + std::to_string(errors.size()));
        RunOptions o;
        o.config = cfg;
        o.out = dir;
        o.workers = workers;
        const int code = run_quiet(Command::Convergence, o);
        EXPECT_TRUE(code == 0 || code == 4) << code;
        errors.push_back(slurp(dir / "errors.csv"));
        summaries.push_back(slurp(dir / "summary.csv"));
    }
    EXPECT_FALSE(errors[0].empty());
    EXPECT_EQ(errors[0], errors[1]);
    EXPECT_EQ(errors[0], errors[2]);
    EXPECT_EQ(summaries[0], summaries[2]);
}

TEST(Run, SeedOverrideChangesResults)
{
    const fs::path cfg = write_file(fresh_dir("seed_cfg"), "mc.json", kSmallMc);
    RunOptions a, b;
    a.config = b.config = cfg;
    a.out = fresh_dir("seed_a");
    b.out = fresh_dir("seed_b");
    b.seed = 6;
    run_quiet(Command::Convergence, a);
    run_quiet(Command::Convergence, b);
    EXPECT_NE(slurp(a.out / "errors.csv"), slurp(b.out / "errors.csv"));
    EXPECT_EQ(nlohmann::json::parse(slurp(b.out / "manifest.json"))["seed"], 6u);
}

TEST(Run, ConfigErrorExitsTwoWithRecords)
{
    const fs::path dir = fresh_dir("bad");
    auto doc = nlohmann::json::parse(kMinimal);
    doc["npaths"] = 10;
    RunOptions o;
    o.config = write_file(dir, "bad.json", doc.dump());
    o.out = dir / "out";
    std::ostringstream out, err;
    EXPECT_EQ(run(Command::Convergence, o, out, err), 2);
    const auto rec = nlohmann::json::parse(err.str());
    EXPECT_EQ(rec["exit_code"], 2);
    EXPECT_EQ(rec["issues"][0]["path"], "/npaths");
    EXPECT_TRUE(fs::exists(o.out / "error.json"));
    EXPECT_EQ(nlohmann::json::parse(slurp(o.out / "manifest.json"))["status"], "error");
}

TEST(Run, MissingConfigExitsTwo)
{
    RunOptions o;
    o.out = fresh_dir("noconfig");
    EXPECT_EQ(run_quiet(Command::Convergence, o), 2);
    o.config = o.out / "does_not_exist.json";
    EXPECT_EQ(run_quiet(Command::Supermartingale, o), 2);
}

TEST(Run, OverflowExitsThree)
{
    const fs::path dir = fresh_dir("overflow");
    const char* text = R"({
      "model": {"name": "GBM", "params": {"mu": 800.0, "sigma": 0.2}},
      "schemes": ["euler"],
      "payoff": {"type": "moment1"},
      "steps": [2, 4, 8],
      "npaths": 100,
      "grid": [1.0],
      "evaluation": "monte-carlo"
    })";
    RunOptions o;
    o.config = write_file(dir, "gbm.json", text);
    o.out = dir / "out";
    std::ostringstream out, err;
    EXPECT_EQ(run(Command::Convergence, o, out, err), 3);
    const auto rec = nlohmann::json::parse(err.str());
    EXPECT_EQ(rec["kind"], "numerical-overflow");
    EXPECT_GE(rec["path"].get<long>(), 0);
}

TEST(Run, InconclusiveExitsFourButWritesReport)
{
    auto doc = nlohmann::json::parse(kSmallMc);
    doc["resolution_threshold"] = 1e-9;
    const fs::path dir = fresh_dir("inconclusive");
    RunOptions o;
    o.config = write_file(dir, "mc.json", doc.dump());
    o.out = dir / "out";
    EXPECT_EQ(run_quiet(Command::Convergence, o), 4);
    EXPECT_TRUE(fs::exists(o.out / "errors.csv"));
    EXPECT_TRUE(fs::exists(o.out / "summary.csv"));
}

TEST(Run, SupermartingaleWritesReport)
{
    auto doc = nlohmann::json::parse(kMinimal);
    doc["supermartingale"] = {{"npaths", 200}, {"steps_per_unit", 8}};
    const fs::path dir = fresh_dir("super");
    RunOptions o;
    o.config = write_file(dir, "s.json", doc.dump());
    o.out = dir / "out";
    ASSERT_EQ(run_quiet(Command::Supermartingale, o), 0);
    const std::string csv = slurp(o.out / "supermartingale.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "grid_point,t,ratio,stderr,bound,violation");
    const auto manifest = nlohmann::json::parse(slurp(o.out / "manifest.json"));
    EXPECT_EQ(manifest["violations"], 0);
}

TEST(Selftest, AllChecksPass)
{
    for (const auto& r : run_selftest()) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}
