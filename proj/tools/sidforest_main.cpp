// Command line front end: resolves a JSON config (file, then --set overrides,
// then flags), runs it and writes the reports.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sidforest/errors.hpp"
#include "sidforest/experiment.hpp"
#include "sidforest/models.hpp"

namespace {

using nlohmann::json;
using namespace sidforest;

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--config", "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(0, "config file " + path + " is not valid JSON: " + e.what());
  }
}

int fail(const std::exception& e) {
  std::cerr << error_json(e).dump() << "\n";
  return exit_code_for(e);
}

void print_models(const json& listing, bool as_json) {
  if (as_json) {
    std::cout << listing.dump(2) << "\n";
    return;
  }
  for (const auto& m : listing["models"]) {
    std::cout << m["id"].get<std::string>() << "  (" << m["label"].get<std::string>() << ")\n";
    std::cout << "  " << m["description"].get<std::string>() << "\n";
    std::cout << "  features: " << m["feature_law"].get<std::string>()
              << "; SID constant: " << m["sid_constant"].get<std::string>() << "\n";
    for (auto it = m["parameters"].begin(); it != m["parameters"].end(); ++it) {
      std::cout << "    " << it.key() << " (" << it.value().value("type", "") << ", default "
                << it.value().value("default", json()).dump() << "): " << it.value().value("description", "") << "\n";
    }
  }
}

struct RunFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  long long workers = -1;
  long long seed = -1;
  bool quiet = false;
};

int run_command(const std::string& command, const RunFlags& flags) {
  json user = json::object();
  if (!flags.config_path.empty()) user = read_config_file(flags.config_path);
  if (!user.is_object()) throw ValidationError("config", "config must be a JSON object");
  if (!command.empty()) user["command"] = command;
  for (const auto& s : flags.overrides) apply_override(user, s);
  if (flags.workers >= 0) user["workers"] = flags.workers;
  if (flags.seed >= 0) user["seed"] = flags.seed;
  if (!flags.output_dir.empty()) {
    user["output_dir"] = flags.output_dir;
  } else if (const char* env = std::getenv("SIDFOREST_OUTPUT_DIR"); env && *env) {
    user["output_dir"] = env;
  }
  const json resolved = resolve_config(user);
  const ExperimentOutcome outcome = run_experiment(resolved, resolved["output_dir"].get<std::string>());
  if (!flags.quiet) {
    for (const auto& f : outcome.files) std::cout << f.string() << "\n";
  }
  if (outcome.exit_code == kExitBoundViolated) {
    std::cerr << json{{"error",
                       {{"kind", "bound-violated"},
                        {"message", "a checked bound does not hold within tolerance; see report.json"}}}}
                     .dump()
              << "\n";
  }
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sidforest: random forest regression experiments"};
  app.set_version_flag("--version", std::string("sidforest ") + version());
  app.require_subcommand(1);

  RunFlags flags;
  std::vector<CLI::App*> runners;

  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("-c,--config", flags.config_path, "JSON config file");
    sub->add_option("-s,--set", flags.overrides, "Override a config key, e.g. forest.k=4")->take_all();
    sub->add_option("-o,--output-dir", flags.output_dir, "Output directory (beats SIDFOREST_OUTPUT_DIR)");
    sub->add_option("-w,--workers", flags.workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", flags.seed, "Master seed")->check(CLI::NonNegativeNumber);
    sub->add_flag("-q,--quiet", flags.quiet, "Do not list written files");
  };

  CLI::App* run = app.add_subcommand("run", "Run the command named in the config file");
  add_run_options(run);
  runners.push_back(run);
  for (const auto& name : experiment_commands()) {
    CLI::App* sub = app.add_subcommand(name, "Run the '" + name + "' experiment");
    add_run_options(sub);
    runners.push_back(sub);
  }

  bool models_json = false;
  std::string model_query;
  CLI::App* models = app.add_subcommand("describe-models", "List registered regression models");
  models->add_flag("--json", models_json, "Machine-readable listing");
  models->add_option("id", model_query, "Show a single model");

  std::string schema_out;
  CLI::App* schema = app.add_subcommand("schema", "Print the config JSON Schema");
  schema->add_option("-o,--output", schema_out, "Write to this file instead of stdout");

  CLI::App* defaults = app.add_subcommand("defaults", "Print the default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return kExitValidation;
  }

  try {
    if (models->parsed()) {
      json listing = describe_models();
      if (!model_query.empty()) {
        json match;
        for (const auto& m : listing["models"]) {
          if (m["id"] == model_query) match = m;
        }
        if (match.is_null()) {
          std::cerr << json{{"error",
                             {{"kind", "validation"},
                              {"field", "id"},
                              {"message", "unknown model id '" + model_query + "'"},
                              {"suggestions", suggest_model_ids(model_query)}}}}
                           .dump()
                    << "\n";
          return kExitValidation;
        }
        listing = {{"models", json::array({match})}};
      }
      print_models(listing, models_json);
      return kExitOk;
    }
    if (schema->parsed()) {
      const std::string text = config_schema().dump(2) + "\n";
      if (schema_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(schema_out, std::ios::binary);
        if (!out) throw Error("io", "cannot write " + schema_out);
        out << text;
      }
      return kExitOk;
    }
    if (defaults->parsed()) {
      std::cout << default_config().dump(2) << "\n";
      return kExitOk;
    }
    for (CLI::App* sub : runners) {
      if (sub->parsed()) return run_command(sub == run ? std::string() : sub->get_name(), flags);
    }
  } catch (const std::exception& e) {
    return fail(e);
  }
  return kExitRuntime;
}
