#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sidforest/errors.hpp"
#include "sidforest/experiment.hpp"
#include "sidforest/models.hpp"

using namespace sidforest;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sidforest-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Configs must name a command; tests that do not care use decompose.
json with_command(json config) {
  if (!config.contains("command")) config["command"] = "decompose";
  return config;
}

std::string field_of(const json& config) {
  try {
    (void)resolve_config(with_command(config));
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

json small(const std::string& command) {
  return {{"command", command},
          {"model", {{"id", "sparse-quadratic"}, {"params", {{"noise", 0.2}}}}},
          {"data", {{"n", 200}}},
          {"forest", {{"k", 2}, {"M", 3}, {"gamma0", 2.0 / 3.0}}},
          {"evaluation", {{"n_test", 200}}}};
}

#ifdef SIDFOREST_TOOL_PATH
struct ToolResult {
  int code = -1;
  std::string out;
  std::string err;
};

ToolResult run_tool(const std::string& args, const std::string& env = "") {
  const fs::path dir = fs::temp_directory_path() / "sidforest-tests";
  fs::create_directories(dir);
  const fs::path out = dir / "tool.out", err = dir / "tool.err";
  const std::string cmd = env + " \"" SIDFOREST_TOOL_PATH "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::size_t data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++rows;
  }
  return rows;
}
#endif

}  // namespace

TEST(Experiment, DefaultsValidateAgainstTheSchema) {
  EXPECT_NO_THROW(validate_against_schema(default_config()));
  for (const auto& c : experiment_commands()) {
    json d = default_config();
    d["command"] = c;
    EXPECT_NO_THROW(validate_against_schema(d)) << c;
  }
}

TEST(Experiment, SchemaErrorsNameTheField) {
  EXPECT_EQ(field_of({{"forest", {{"gamma0", 1.5}}}}), "forest.gamma0");
  EXPECT_EQ(field_of({{"forest", {{"k", -1}}}}), "forest.k");
  EXPECT_EQ(field_of({{"forest", {{"splitter", "gini"}}}}), "forest.splitter");
  EXPECT_EQ(field_of({{"command", "fit"}}), "command");
  try {
    (void)resolve_config(json::object());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "command");
  }
  EXPECT_EQ(field_of({{"bogus", 1}}), "bogus");
  EXPECT_EQ(field_of({{"data", {{"n", "many"}}}}), "data.n");
  EXPECT_EQ(field_of({{"model", {{"id", "binary-linaer"}}}}), "model.id");
  EXPECT_EQ(field_of({{"forest", {{"exclude_features", {11}}}}}), "forest.exclude_features");
  EXPECT_EQ(field_of({{"command", "relevance"}, {"relevance", {{"feature", 20}}}}), "relevance.feature");
  EXPECT_EQ(field_of({{"command", "prop2"}, {"prop2", {{"s_star", 12}}}}), "prop2.s_star");
  try {
    (void)resolve_config(with_command({{"forest", {{"gamma0", 1.5}}}}));
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("1.5"), std::string::npos);
  }
}

TEST(Experiment, ResolveFillsDefaultsAndTheSplitter) {
  const json r = resolve_config(with_command({{"model", {{"id", "indicator"}}}}));
  EXPECT_EQ(r["forest"]["splitter"], "sample");
  EXPECT_EQ(r["forest"]["k"], 3);
  EXPECT_EQ(r["model"]["params"]["b"], 0.5);
  const json b = resolve_config(with_command(json::object()));
  EXPECT_EQ(b["forest"]["splitter"], "binary");
  EXPECT_EQ(b["model"]["params"]["s_star"], 3);
  // Model parameters replace, never merge, so only the given keys plus defaults of that model remain.
  const json p = resolve_config(with_command({{"model", {{"id", "indicator"}, {"params", {{"b", 0.3}}}}}}));
  EXPECT_EQ(p["model"]["params"]["b"], 0.3);
  EXPECT_FALSE(p["model"]["params"].contains("s_star"));
}

TEST(Experiment, ResolvedConfigsResolveToThemselves) {
  for (const auto& m : describe_models()["models"]) {
    const json once = resolve_config(with_command({{"model", {{"id", m["id"]}}}}));
    EXPECT_EQ(resolve_config(once), once) << m["id"];
  }
}

TEST(Experiment, Overrides) {
  json c = json::object();
  apply_override(c, "forest.k=4");
  apply_override(c, "model.id=indicator");
  apply_override(c, "sweep.n_grid=[100,200]");
  apply_override(c, "forest.gamma0=0.5");
  EXPECT_EQ(c["forest"]["k"], 4);
  EXPECT_EQ(c["model"]["id"], "indicator");
  EXPECT_EQ(c["sweep"]["n_grid"], json::array({100, 200}));
  EXPECT_EQ(c["forest"]["gamma0"], 0.5);
  EXPECT_THROW(apply_override(c, "no-equals-sign"), ValidationError);
}

TEST(Experiment, EchoDropsRunLocalKeys) {
  const json e = config_echo(resolve_config(with_command({{"workers", 3}, {"output_dir", "x"}})));
  EXPECT_FALSE(e.contains("workers"));
  EXPECT_FALSE(e.contains("output_dir"));
  EXPECT_TRUE(e.contains("forest"));
}

TEST(Experiment, PublishedSchemaMatchesTheLibrary) {
  const fs::path path = fs::path(SIDFOREST_SOURCE_DIR) / "docs" / "config.schema.json";
  ASSERT_TRUE(fs::exists(path)) << path;
  EXPECT_EQ(json::parse(slurp(path)), config_schema());
}

TEST(Experiment, ReportsAreIdenticalForAnyWorkerCount) {
  for (const char* command : {"decompose", "train"}) {
    json one = small(command);
    one["workers"] = 1;
    json three = one;
    three["workers"] = 3;
    const fs::path a = scratch(std::string("w1-") + command), b = scratch(std::string("w3-") + command);
    const auto oa = run_experiment(resolve_config(one), a);
    const auto ob = run_experiment(resolve_config(three), b);
    EXPECT_EQ(oa.exit_code, ob.exit_code);
    for (const char* f : {"report.csv", "report.json", "config.resolved.json"}) {
      EXPECT_EQ(slurp(a / f), slurp(b / f)) << command << " " << f;
    }
  }
}

TEST(Experiment, ReportLayout) {
  const fs::path dir = scratch("layout");
  const auto outcome = run_experiment(resolve_config(small("decompose")), dir);
  EXPECT_EQ(outcome.exit_code, kExitOk);
  const std::string csv = slurp(dir / "report.csv");
  EXPECT_EQ(csv.rfind(std::string("# sidforest ") + version() + "\n", 0), 0u);
  EXPECT_NE(csv.find("\n# config: {"), std::string::npos);
  EXPECT_NE(csv.find("model_id,n,p,k,gamma0,b,B,M,sq_bias,sq_bias_se,est_var,est_var_se,total_loss,total_loss_se"),
            std::string::npos);
  const json report = json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["sidforest_version"], version());
  EXPECT_EQ(report["command"], "decompose");
  EXPECT_TRUE(report["bounds_hold"].get<bool>());
  EXPECT_EQ(json::parse(slurp(dir / "config.resolved.json")), report["config"]);
}

TEST(Experiment, ErrorJsonAndExitCodes) {
  const ValidationError v("forest.k", "bad");
  const json j = error_json(v);
  EXPECT_EQ(j["error"]["field"], "forest.k");
  EXPECT_EQ(j["error"]["kind"], "validation");
  EXPECT_EQ(exit_code_for(v), kExitValidation);
  EXPECT_EQ(error_json(ParseError(4, "x"))["error"]["line"], 4);
  EXPECT_EQ(exit_code_for(ParseError(4, "x")), kExitValidation);
  EXPECT_EQ(exit_code_for(VersionError("x")), kExitValidation);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitRuntime);
}

#ifdef SIDFOREST_TOOL_PATH

TEST(Cli, OnePointSweepWritesOneRow) {
  const fs::path dir = scratch("cli-sweep");
  const auto r = run_tool("sweep -q -o \"" + dir.string() +
                          "\" -s model.id=indicator 'sweep.n_grid=[200]' 'sweep.k_grid=[2]' evaluation.n_test=100");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_rows(slurp(dir / "report.csv")), 1u);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "config.resolved.json"));
}

TEST(Cli, OutOfRangeValueExitsOneNamingTheField) {
  const auto r = run_tool("decompose -o \"" + scratch("cli-bad").string() + "\" -s forest.gamma0=1.5");
  EXPECT_EQ(r.code, 1);
  const json e = json::parse(r.err);
  EXPECT_EQ(e["error"]["field"], "forest.gamma0");
}

TEST(Cli, UnknownModelGetsSuggestions) {
  const auto r = run_tool("describe-models binary-linaer");
  EXPECT_NE(r.code, 0);
  const json e = json::parse(r.err);
  ASSERT_FALSE(e["error"]["suggestions"].empty());
  EXPECT_EQ(e["error"]["suggestions"][0], "binary-linear");
}

TEST(Cli, ModelListingAsJson) {
  const auto r = run_tool("describe-models --json");
  EXPECT_EQ(r.code, 0);
  EXPECT_GE(json::parse(r.out)["models"].size(), 9u);
}

TEST(Cli, VersionAndUsage) {
  const auto v = run_tool("--version");
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.out, std::string("sidforest ") + version() + "\n");
  const auto u = run_tool("train --no-such-flag");
  EXPECT_EQ(u.code, 1);
  EXPECT_EQ(json::parse(u.err)["error"]["kind"], "usage");
}

TEST(Cli, OutputDirectoryFromTheEnvironment) {
  const fs::path env_dir = scratch("cli-env"), flag_dir = scratch("cli-flag");
  const std::string args = "train -q -s data.n=100 forest.M=2 forest.k=2";
  auto r = run_tool(args, "SIDFOREST_OUTPUT_DIR=\"" + env_dir.string() + "\"");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(env_dir / "forest.json"));
  r = run_tool(args + " -o \"" + flag_dir.string() + "\"", "SIDFOREST_OUTPUT_DIR=\"" + env_dir.string() + "/x\"");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(flag_dir / "report.json"));
  EXPECT_FALSE(fs::exists(env_dir / "x"));
}

TEST(Cli, MalformedConfigFileIsAParseError) {
  const fs::path dir = scratch("cli-parse");
  std::ofstream(dir / "c.json") << "{\"forest\": ";
  const auto r = run_tool("run -c \"" + (dir / "c.json").string() + "\"");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "parse");
}

#endif
