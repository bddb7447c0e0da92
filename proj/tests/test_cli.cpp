#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "experiment.hpp"

using namespace arboreal;
using namespace arboreal::cli;
namespace fs = std::filesystem;

namespace {

fs::path presets() { return fs::path(ARBOREAL_SOURCE_DIR) / "presets"; }

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("arboreal-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsEnableEveryStage) {
  auto c = parse_config(R"({"scale": {"recipe": "f2"}})");
  EXPECT_EQ(c.stages, stage_order());
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, ChecksDropStages) {
  auto c = parse_config(R"({"scale": {"recipe": "f2"}, "checks": {"walk": false, "records": false}})");
  EXPECT_EQ(c.stages, (std::vector<std::string>{"build-ladder", "check-ladder", "build-forest", "report"}));
}

TEST(Config, DiagnosticsNameTheField) {
  EXPECT_NE(error_of(R"({"scale": {"recipe": "f2"}, "simulation": {"length": "x"}})").find("simulation.length"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"scale": {"recipe": "f2"}, "simulation": {"lenght": 3}})").find("simulation.lenght"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"scale": {"recipe": "f2"}, "stages": ["bogus"]})").find("stages[0]"), std::string::npos);
  EXPECT_NE(error_of(R"({"law": "power:3"})").find("'scale'"), std::string::npos);
  EXPECT_NE(error_of(R"({"scale": {"recipe": "f2"}, "law": "cauchy:1"})").find("field 'law'"), std::string::npos);
  EXPECT_NE(error_of(R"({"scale": {"recipe": "f2"}, "simulation": {"paths": 0}})").find("simulation.paths"),
            std::string::npos);
}

TEST(Config, SyntaxErrorsCarryLineAndColumn) {
  std::string msg = error_of("{\"scale\": {\"recipe\": \"f2\"},\n \"law\": }");
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Config, LawAndAlphaSpecs) {
  EXPECT_EQ(parse_law("power:3").tail(), TailKind::power);
  EXPECT_EQ(parse_law("geometric:0.5").tail(), TailKind::geometric);
  EXPECT_NEAR(parse_law("lazy:0.9998:power:3").p(0), 0.9998, 1e-15);
  EXPECT_NEAR(parse_law("table:0.5,0.25,0.25").p(2), 0.25, 1e-15);
  EXPECT_THROW(parse_law("lazy:0.5:cauchy:1"), ConfigError);
  EXPECT_THROW(parse_law("power:abc"), ConfigError);
  EXPECT_EQ(parse_alpha("zero").kind, AlphaSequence::Kind::zero);
  EXPECT_EQ(parse_alpha("power:0.5:2").kind, AlphaSequence::Kind::power);
  EXPECT_THROW(parse_alpha("power:1"), ConfigError);
}

TEST(Config, ScaleForms) {
  Scale r = resolve_scale(nlohmann::json::parse(R"({"recipe": "z2z3-fast"})"));
  EXPECT_EQ(r.horizon(), 3);
  Scale e = resolve_scale(nlohmann::json::parse(
      R"({"group": "F2", "lambda": [1], "sigma": [["a^3", "a^-3"]], "filling": [["e", "a", "a^-1"], []]})"));
  EXPECT_EQ(e.horizon(), 1);
  fs::path dir = scratch("scalefile");
  fs::create_directories(dir);
  std::ofstream(dir / "s.txt") << serialize_scale(r);
  Scale f = resolve_scale(nlohmann::json::parse(R"({"file": "s.txt"})"), dir);
  EXPECT_EQ(serialize_scale(f), serialize_scale(r));
  EXPECT_THROW(resolve_scale(nlohmann::json::parse(R"({"recipe": "nope"})")), ConfigError);
  EXPECT_THROW(resolve_scale(nlohmann::json::parse(R"({"group": "F2", "lambda": [1]})")), ConfigError);
  EXPECT_THROW(resolve_scale(nlohmann::json::parse(R"({"group": "F2", "lambda": [1], "sigma": [["q"]], "filling": [[]]})")),
               ConfigError);
}

TEST(Run, EmptyStageListWritesNothing) {
  auto c = parse_config(R"({"scale": {"recipe": "f2"}, "stages": []})");
  fs::path out = scratch("empty");
  RunResult r = run_experiment(c, out);
  EXPECT_EQ(r.exit_code, kOk);
  EXPECT_TRUE(r.artifacts.empty());
  EXPECT_FALSE(fs::exists(out));
}

TEST(Run, F2PresetPassesWithFullBundle) {
  auto c = load_config(presets() / "f2.json");
  fs::path out = scratch("f2");
  RunResult r = run_experiment(c, out, presets());
  EXPECT_EQ(r.exit_code, kOk);
  EXPECT_TRUE(r.failures.empty());
  for (const char* a : {"scale.txt", "ladder.json", "forest.json", "forest.dot", "forest_check.json", "records.json",
                        "walk_epochs.csv", "walk.json", "manifest.json", "summary.txt"})
    EXPECT_TRUE(fs::exists(out / a)) << a;
  EXPECT_NE(r.summary.find("failures: 0"), std::string::npos);
  EXPECT_NE(r.summary.find("INCONCLUSIVE"), std::string::npos);
}

TEST(Run, CollidingFixtureFailsCheckLadder) {
  auto c = load_config(presets() / "colliding.json");
  fs::path out = scratch("colliding");
  RunResult r = run_experiment(c, out, presets());
  EXPECT_EQ(r.exit_code, kInvariantFailure);
  ASSERT_FALSE(r.failures.empty());
  EXPECT_EQ(r.failures.front().rfind("check-ladder", 0), 0u);
  auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  std::map<std::string, std::string> status;
  for (const auto& s : manifest["stages"]) status[s["stage"]] = s["status"];
  EXPECT_EQ(status["check-ladder"], "failed");
  EXPECT_EQ(status["build-forest"], "skipped");
  EXPECT_EQ(status["simulate"], "skipped");
  EXPECT_EQ(status["verify"], "skipped");
  EXPECT_FALSE(fs::exists(out / "forest.json"));
}

TEST(Run, SimplicityFailureIsAConfigError) {
  auto c = parse_config(R"({"scale": {"recipe": "z2z3-fast"}, "law": "geometric:0.5",
                            "stages": ["build-ladder", "simulate"]})");
  EXPECT_THROW(run_experiment(c, scratch("geom")), ConfigError);
}

TEST(Run, IdenticalSeedsGiveIdenticalBundles) {
  auto c = parse_config(R"({"scale": {"recipe": "z2z3-fast"}, "forest": {"radius": 5},
                            "records": {"runs": 200, "transitions": 2000, "dichotomy_runs": 100, "mixed_runs": 100},
                            "simulation": {"paths": 100, "length": 3000}})");
  fs::path a = scratch("det-a"), b = scratch("det-b");
  auto ra = run_experiment(c, a);
  auto rb = run_experiment(c, b);
  ASSERT_EQ(ra.artifacts, rb.artifacts);
  for (const auto& name : ra.artifacts) EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  c.seed = 2;
  fs::path d = scratch("det-c");
  run_experiment(c, d);
  EXPECT_NE(slurp(a / "walk.json"), slurp(d / "walk.json"));
}

TEST(Report, MissingArtifactNamesTheStage) {
  EXPECT_THROW(render_report(scratch("nowhere")), ConfigError);
  auto c = parse_config(R"({"scale": {"recipe": "f2"}, "stages": ["build-ladder", "check-ladder"]})");
  fs::path out = scratch("partial");
  run_experiment(c, out);
  EXPECT_EQ(render_report(out), render_report(out));
  fs::remove(out / "ladder.json");
  try {
    render_report(out);
    FAIL() << "expected a missing-artifact error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("check-ladder"), std::string::npos) << e.what();
  }
}

TEST(Run, KappaWritesConstrainedForest) {
  auto c = parse_config(R"({"scale": {"recipe": "z2z3-fast"}, "forest": {"radius": 5, "kappa": [1]},
                            "stages": ["build-ladder", "build-forest"]})");
  fs::path out = scratch("kappa");
  EXPECT_EQ(run_experiment(c, out).exit_code, kOk);
  auto full = nlohmann::json::parse(slurp(out / "forest.json"));
  auto cut = nlohmann::json::parse(slurp(out / "forest_constrained.json"));
  long cuts = 0;
  for (const auto& v : cut["vertices"]) cuts += v["cut"].get<bool>();
  EXPECT_GT(cuts, 0);
  EXPECT_EQ(full["vertices"].size(), cut["vertices"].size());
}
