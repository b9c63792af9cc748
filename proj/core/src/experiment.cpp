#include "sidforest/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sidforest/errors.hpp"
#include "sidforest/evaluation.hpp"
#include "sidforest/format.hpp"
#include "sidforest/models.hpp"
#include "sidforest/population.hpp"
#include "sidforest/rng.hpp"
#include "sidforest/serialization.hpp"

namespace sidforest {

using nlohmann::json;

const char* version() { return SIDFOREST_VERSION_STRING; }

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> commands{"train", "decompose", "sweep", "sid-check",
                                                 "prop2", "relevance", "envelope"};
  return commands;
}

// ---- schema -----------------------------------------------------------------------

namespace {

constexpr const char* kSchema = R"json({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "sidforest experiment config",
  "type": "object",
  "additionalProperties": false,
  "required": ["command"],
  "properties": {
    "command": {"enum": ["train", "decompose", "sweep", "sid-check", "prop2", "relevance", "envelope"]},
    "seed": {"type": "integer", "minimum": 0},
    "workers": {"type": "integer", "minimum": 0},
    "output_dir": {"type": "string"},
    "model": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "id": {"type": "string"},
        "params": {"type": "object"}
      }
    },
    "data": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "csv": {"type": ["string", "null"]},
        "n": {"type": "integer", "minimum": 1}
      }
    },
    "forest": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "k": {"type": "integer", "minimum": 0, "maximum": 20},
        "gamma0": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "b": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "B": {"type": "integer", "minimum": 1},
        "M": {"type": "integer", "minimum": 1},
        "splitter": {"enum": ["auto", "sample", "binary"]},
        "exclude_features": {"type": "array", "items": {"type": "integer", "minimum": 1}}
      }
    },
    "evaluation": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "n_test": {"type": "integer", "minimum": 2}
      }
    },
    "sweep": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "k_grid": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 20}},
        "c_height": {"type": "number", "minimum": 0},
        "gamma0_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}}
      }
    },
    "sid": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "budget": {"type": "integer", "minimum": 1},
        "max_depth": {"type": "integer", "minimum": 0, "maximum": 30},
        "grid_points": {"type": "integer", "minimum": 1}
      }
    },
    "prop2": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "s_star": {"type": "integer", "minimum": 1},
        "beta": {"type": "number"},
        "p": {"type": "integer", "minimum": 1},
        "gamma0": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "n": {"type": "integer", "minimum": 1},
        "k_grid": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0, "maximum": 20}},
        "noise": {"type": "number", "minimum": 0},
        "M": {"type": "integer", "minimum": 1},
        "B": {"type": "integer", "minimum": 1},
        "b": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "n_test": {"type": "integer", "minimum": 2}
      }
    },
    "relevance": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "feature": {"type": "integer", "minimum": 1},
        "iota_budget": {"type": "integer", "minimum": 2}
      }
    },
    "envelope": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "alpha1": {"type": ["number", "null"], "minimum": 1},
        "gamma0": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "k_max": {"type": "integer", "minimum": 0, "maximum": 20},
        "draws": {"type": "integer", "minimum": 1}
      }
    }
  }
})json";

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

bool has_type(const json& v, const std::string& type) {
  if (type == "null") return v.is_null();
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  return false;
}

void check_node(const json& schema, const json& v, const std::string& path) {
  const std::string where = path.empty() ? "config" : path;
  if (schema.contains("type")) {
    std::vector<std::string> types;
    if (schema["type"].is_array()) {
      for (const auto& t : schema["type"]) types.push_back(t.get<std::string>());
    } else {
      types.push_back(schema["type"].get<std::string>());
    }
    if (std::none_of(types.begin(), types.end(), [&](const std::string& t) { return has_type(v, t); })) {
      std::string expected;
      for (const auto& t : types) expected += (expected.empty() ? "" : " or ") + t;
      throw ValidationError(where, where + " must be of type " + expected);
    }
  }
  if (schema.contains("enum")) {
    const auto& options = schema["enum"];
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o.dump();
      throw ValidationError(where, where + " must be one of " + list);
    }
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>()) {
      throw ValidationError(where, where + " = " + format_double(x) + " is below the minimum " +
                                       format_double(schema["minimum"].get<double>()));
    }
    if (schema.contains("maximum") && x > schema["maximum"].get<double>()) {
      throw ValidationError(where, where + " = " + format_double(x) + " exceeds the maximum " +
                                       format_double(schema["maximum"].get<double>()));
    }
    if (schema.contains("exclusiveMinimum") && !(x > schema["exclusiveMinimum"].get<double>())) {
      throw ValidationError(where, where + " = " + format_double(x) + " must be greater than " +
                                       format_double(schema["exclusiveMinimum"].get<double>()));
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) {
      throw ValidationError(where, where + " needs at least " + schema["minItems"].dump() + " items");
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check_node(schema["items"], v[i], where + "[" + std::to_string(i) + "]");
    }
  }
  if (v.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!v.contains(key.get<std::string>())) {
          const std::string field = join_path(path, key.get<std::string>());
          throw ValidationError(field, field + " is required");
        }
      }
    }
    const json props = schema.value("properties", json::object());
    const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string field = join_path(path, it.key());
      if (props.contains(it.key())) {
        check_node(props[it.key()], it.value(), field);
      } else if (closed) {
        throw ValidationError(field, "unknown key " + field);
      }
    }
  }
}

}  // namespace

const json& config_schema() {
  static const json schema = json::parse(kSchema);
  return schema;
}

void validate_against_schema(const json& config) { check_node(config_schema(), config, ""); }

json default_config() {
  return {
      {"command", "decompose"},
      {"seed", 1},
      {"workers", 0},
      {"output_dir", "sidforest-out"},
      {"model", {{"id", "binary-linear"}, {"params", json::object()}}},
      {"data", {{"csv", nullptr}, {"n", 1000}}},
      {"forest",
       {{"k", 3},
        {"gamma0", 1.0},
        {"b", 1.0},
        {"B", 1},
        {"M", 10},
        {"splitter", "auto"},
        {"exclude_features", json::array()}}},
      {"evaluation", {{"n_test", 1000}}},
      {"sweep",
       {{"n_grid", json::array({250, 500, 1000, 2000})},
        {"k_grid", json::array()},
        {"c_height", 0.125},
        {"gamma0_grid", json::array({1.0})}}},
      {"sid", {{"budget", 2000}, {"max_depth", 8}, {"grid_points", 512}}},
      {"prop2",
       {{"s_star", 2},
        {"beta", 1.0},
        {"p", 10},
        {"gamma0", 1.0},
        {"n", 5000},
        {"k_grid", json::array({0, 1, 2, 3})},
        {"noise", 0.0},
        {"M", 50},
        {"B", 1},
        {"b", 1.0},
        {"n_test", 2000}}},
      {"relevance", {{"feature", 1}, {"iota_budget", 4096}}},
      {"envelope", {{"alpha1", nullptr}, {"gamma0", 1.0}, {"k_max", 6}, {"draws", 500}}},
  };
}

namespace {

void deep_merge(json& base, const json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    // model.params replaces wholesale so stale keys never leak between models.
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object() && it.key() != "params") {
      deep_merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

}  // namespace

json resolve_config(const json& user) {
  if (!user.is_object()) throw ValidationError("config", "config must be a JSON object");
  validate_against_schema(user);
  json cfg = default_config();
  deep_merge(cfg, user);
  validate_against_schema(cfg);

  const std::string command = cfg["command"].get<std::string>();
  // Commands that need a model build it now, so model errors surface as
  // validation errors before any computation.
  if (command != "prop2") {
    const RegressionModel model = make_model(cfg["model"]["id"].get<std::string>(), cfg["model"]["params"]);
    cfg["model"]["params"] = model.params();
    for (const auto& j : cfg["forest"]["exclude_features"]) {
      if (j.get<std::size_t>() > model.p()) {
        throw ValidationError("forest.exclude_features", "excluded feature " + j.dump() + " exceeds p = " +
                                                             std::to_string(model.p()));
      }
    }
    if (cfg["forest"]["exclude_features"].size() >= model.p()) {
      std::vector<std::size_t> e = cfg["forest"]["exclude_features"].get<std::vector<std::size_t>>();
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
      if (e.size() >= model.p()) throw ValidationError("forest.exclude_features", "every feature is excluded");
    }
    if (cfg["forest"]["splitter"] == "auto") {
      cfg["forest"]["splitter"] = model.law() == FeatureLaw::Bernoulli ? "binary" : "sample";
    }
    if (cfg["relevance"]["feature"].get<std::size_t>() > model.p()) {
      throw ValidationError("relevance.feature", "relevance.feature exceeds p = " + std::to_string(model.p()));
    }
  } else {
    const auto& p2 = cfg["prop2"];
    if (p2["s_star"].get<std::size_t>() > p2["p"].get<std::size_t>()) {
      throw ValidationError("prop2.s_star", "prop2.s_star must not exceed prop2.p");
    }
    if (p2["beta"].get<double>() == 0.0) throw ValidationError("prop2.beta", "prop2.beta must be non-zero");
    if (cfg["forest"]["splitter"] == "auto") cfg["forest"]["splitter"] = "binary";
  }
  if (command == "sweep" && cfg["sweep"]["n_grid"].empty()) throw ValidationError("sweep.n_grid", "empty sweep");
  if (command == "sweep" && cfg["sweep"]["gamma0_grid"].empty()) {
    throw ValidationError("sweep.gamma0_grid", "empty sweep");
  }
  return cfg;
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("--set", "override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("--set", "override key '" + key + "' has an empty component");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

json config_echo(const json& resolved) {
  json echo = resolved;
  echo.erase("workers");
  echo.erase("output_dir");
  return echo;
}

// ---- reports ----------------------------------------------------------------------

namespace {

std::size_t workers_of(const json& cfg) { return cfg["workers"].get<std::size_t>(); }

ForestConfig forest_from(const json& cfg) {
  const json& f = cfg["forest"];
  ForestConfig fc;
  fc.k = f["k"].get<std::size_t>();
  fc.gamma0 = f["gamma0"].get<double>();
  fc.b = f["b"].get<double>();
  fc.B = f["B"].get<std::size_t>();
  fc.M = f["M"].get<std::size_t>();
  fc.seed = cfg["seed"].get<std::uint64_t>();
  fc.splitter = parse_splitter(f["splitter"].get<std::string>());
  for (const auto& j : f["exclude_features"]) fc.excluded_features.push_back(j.get<std::size_t>() - 1);
  fc.workers = workers_of(cfg);
  return fc;
}

RegressionModel model_from(const json& cfg) {
  return make_model(cfg["model"]["id"].get<std::string>(), cfg["model"]["params"]);
}

Dataset data_from(const json& cfg, const RegressionModel& model) {
  const json& d = cfg["data"];
  if (d["csv"].is_string()) {
    Dataset data = load_csv(d["csv"].get<std::string>());
    if (data.p() != model.p()) {
      throw ValidationError("data.csv", "CSV has p = " + std::to_string(data.p()) + " but the model has p = " +
                                            std::to_string(model.p()));
    }
    return data;
  }
  return generate_sample(model, d["n"].get<std::size_t>(), derive_seed(cfg["seed"].get<std::uint64_t>(), {0xDA7A}));
}

std::string csv_field(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

/// A table: column names plus rows of JSON scalars keyed by column.
struct Table {
  std::vector<std::string> columns;
  std::vector<json> rows;
};

void write_csv_report(const std::filesystem::path& path, const Table& table, const json& echo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << "# sidforest " << version() << "\n";
  out << "# config: " << echo.dump() << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << "\n";
  for (const json& row : table.rows) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out << (c ? "," : "") << (row.contains(table.columns[c]) ? csv_field(row[table.columns[c]]) : "");
    }
    out << "\n";
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

const std::vector<std::string> kDecompositionColumns{
    "model_id", "n",          "p",          "k",        "gamma0",        "b",        "B",
    "M",        "sq_bias",    "sq_bias_se", "est_var",  "est_var_se",    "total_loss", "total_loss_se",
    "bound_bias", "bound_var", "pass_bias", "pass_var", "pass_decomposition", "error"};

json decomposition_row(const BiasVarianceReport& r) {
  return {{"model_id", r.model_id},
          {"n", r.n},
          {"p", r.p},
          {"k", r.forest.k},
          {"gamma0", r.forest.gamma0},
          {"b", r.forest.b},
          {"B", r.forest.B},
          {"M", r.forest.M},
          {"sq_bias", r.sq_bias.mean},
          {"sq_bias_se", r.sq_bias.se},
          {"sq_bias_exact", r.sq_bias_exact.mean},
          {"est_var", r.est_var.mean},
          {"est_var_se", r.est_var.se},
          {"total_loss", r.total_loss.mean},
          {"total_loss_se", r.total_loss.se},
          {"per_tree_loss", r.per_tree_loss.mean},
          {"pass_decomposition", r.decomposition_holds()}};
}

struct CommandResult {
  Table table;
  json body;
  bool bounds_hold = true;
};

CommandResult run_train(const json& cfg, const std::filesystem::path& dir, std::vector<std::filesystem::path>& files) {
  const RegressionModel model = model_from(cfg);
  const Dataset data = data_from(cfg, model);
  const ForestConfig fc = forest_from(cfg);
  const Forest forest = train_forest(fc, data);
  double sse = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double d = data.y(i) - forest.predict(data.row(i));
    sse += d * d;
  }
  const double train_mse = sse / static_cast<double>(data.n());
  json trees = json::array();
  for (const Tree& t : forest.trees()) trees.push_back(tree_to_json(t));
  const auto forest_path = dir / "forest.json";
  write_json_file(forest_path, {{"format", "sidforest-forest"}, {"version", kTreeFormatVersion}, {"trees", trees}});
  files.push_back(forest_path);

  CommandResult r;
  r.table.columns = {"model_id", "n", "p", "k", "gamma0", "b", "B", "M", "trees", "train_mse"};
  json row = {{"model_id", model.id()}, {"n", data.n()},  {"p", data.p()}, {"k", fc.k},
              {"gamma0", fc.gamma0},     {"b", fc.b},       {"B", fc.B},     {"M", fc.M},
              {"trees", forest.trees().size()}, {"train_mse", train_mse}};
  r.table.rows.push_back(row);
  r.body = {{"summary", row}, {"forest_file", "forest.json"}};
  return r;
}

CommandResult run_decompose(const json& cfg) {
  const RegressionModel model = model_from(cfg);
  const Dataset data = data_from(cfg, model);
  const BiasVarianceReport rep =
      bias_variance_decompose(model, data, forest_from(cfg), cfg["evaluation"]["n_test"].get<std::size_t>(),
                              derive_seed(cfg["seed"].get<std::uint64_t>(), {0x7E57}));
  CommandResult r;
  r.table.columns = kDecompositionColumns;
  r.table.rows.push_back(decomposition_row(rep));
  r.body = {{"rows", json::array({rep.to_json()})}};
  r.bounds_hold = rep.decomposition_holds();
  return r;
}

CommandResult run_sweep(const json& cfg) {
  SweepConfig sc;
  sc.model_id = cfg["model"]["id"].get<std::string>();
  sc.model_params = cfg["model"]["params"];
  sc.n_grid = cfg["sweep"]["n_grid"].get<std::vector<std::size_t>>();
  sc.k_grid = cfg["sweep"]["k_grid"].get<std::vector<std::size_t>>();
  sc.c_height = cfg["sweep"]["c_height"].get<double>();
  sc.gamma0_grid = cfg["sweep"]["gamma0_grid"].get<std::vector<double>>();
  sc.forest = forest_from(cfg);
  sc.n_test = cfg["evaluation"]["n_test"].get<std::size_t>();
  sc.seed = cfg["seed"].get<std::uint64_t>();
  const SweepResult res = run_convergence_sweep(sc);

  CommandResult r;
  r.table.columns = kDecompositionColumns;
  json rows = json::array();
  for (const SweepRow& row : res.rows) {
    json line;
    if (row.report) {
      line = decomposition_row(*row.report);
      rows.push_back(row.report->to_json());
    } else {
      line = {{"model_id", res.model_id}, {"n", row.n}, {"p", res.p}, {"k", row.k}, {"gamma0", row.gamma0},
              {"error", row.error}};
      rows.push_back({{"n", row.n}, {"k", row.k}, {"gamma0", row.gamma0}, {"error", row.error}});
    }
    r.table.rows.push_back(line);
  }
  r.body = {{"rows", rows}, {"slopes", res.slopes}, {"s_star", res.s_star}};
  return r;
}

CommandResult run_sid_check(const json& cfg) {
  const RegressionModel model = model_from(cfg);
  SidSearchConfig sc;
  sc.budget = cfg["sid"]["budget"].get<std::size_t>();
  sc.max_depth = cfg["sid"]["max_depth"].get<std::size_t>();
  sc.search.grid_points = cfg["sid"]["grid_points"].get<std::size_t>();
  sc.seed = cfg["seed"].get<std::uint64_t>();
  sc.workers = workers_of(cfg);
  const SidCertificate cert = estimate_sid_alpha(model, sc);
  CommandResult r;
  r.table.columns = {"model_id", "budget", "alpha_hat", "root_ratio", "claimed_alpha", "skipped", "refutes_claim"};
  const json j = cert.to_json();
  r.table.rows.push_back({{"model_id", cert.model_id},
                          {"budget", cert.budget},
                          {"alpha_hat", std::isinf(cert.alpha_hat) ? json("inf") : json(cert.alpha_hat)},
                          {"root_ratio", j["root_ratio"]},
                          {"claimed_alpha", j["claimed_alpha"]},
                          {"skipped", cert.skipped},
                          {"refutes_claim", cert.refutes_claim()}});
  r.body = {{"certificate", j}};
  r.bounds_hold = !cert.refutes_claim();
  return r;
}

CommandResult run_prop2(const json& cfg) {
  const json& p2 = cfg["prop2"];
  Prop2Config pc;
  pc.s_star = p2["s_star"].get<std::size_t>();
  pc.beta = p2["beta"].get<double>();
  pc.p = p2["p"].get<std::size_t>();
  pc.gamma0 = p2["gamma0"].get<double>();
  pc.n = p2["n"].get<std::size_t>();
  pc.k_grid = p2["k_grid"].get<std::vector<std::size_t>>();
  pc.noise = p2["noise"].get<double>();
  pc.M = p2["M"].get<std::size_t>();
  pc.B = p2["B"].get<std::size_t>();
  pc.b = p2["b"].get<double>();
  pc.n_test = p2["n_test"].get<std::size_t>();
  pc.seed = cfg["seed"].get<std::uint64_t>();
  pc.workers = workers_of(cfg);
  const Prop2Table table = check_prop2_bounds(pc);

  CommandResult r;
  r.table.columns = kDecompositionColumns;
  r.table.columns.insert(r.table.columns.end() - 1, "bound_bias_gamma1");
  json rows = json::array();
  for (const Prop2Row& row : table.rows) {
    json line = decomposition_row(row.report);
    line["bound_bias"] = row.bound_bias;
    line["bound_var"] = row.bound_var;
    line["bound_bias_gamma1"] = row.bound_bias_gamma1 ? json(*row.bound_bias_gamma1) : json(nullptr);
    line["pass_bias"] = row.pass_bias;
    line["pass_var"] = row.pass_var;
    r.table.rows.push_back(line);
    json full = row.report.to_json();
    full["bound_bias"] = line["bound_bias"];
    full["bound_bias_gamma1"] = line["bound_bias_gamma1"];
    full["bound_var"] = row.bound_var;
    full["pass_bias"] = row.pass_bias;
    full["pass_var"] = row.pass_var;
    rows.push_back(full);
  }
  r.body = {{"variance", table.variance}, {"root_sup_decrease", table.root_sup_ii}, {"rows", rows},
            {"pass", table.all_pass()}};
  r.bounds_hold = table.all_pass();
  return r;
}

CommandResult run_relevance(const json& cfg) {
  const RegressionModel model = model_from(cfg);
  const std::size_t j = cfg["relevance"]["feature"].get<std::size_t>() - 1;
  const RelevanceCheck chk = check_theorem2_relevance(
      model, j, forest_from(cfg), cfg["data"]["n"].get<std::size_t>(), cfg["evaluation"]["n_test"].get<std::size_t>(),
      cfg["seed"].get<std::uint64_t>(), cfg["relevance"]["iota_budget"].get<std::size_t>());
  CommandResult r;
  r.table.columns = {"model_id", "feature", "loss", "loss_se", "iota", "iota_se", "pass"};
  json row = chk.to_json();
  row["model_id"] = model.id();
  r.table.rows.push_back(row);
  r.body = {{"relevance", row}};
  r.bounds_hold = chk.pass;
  return r;
}

CommandResult run_envelope(const json& cfg) {
  const RegressionModel model = model_from(cfg);
  const json& env = cfg["envelope"];
  double alpha1 = 0.0;
  if (env["alpha1"].is_number()) {
    alpha1 = env["alpha1"].get<double>();
  } else if (model.claimed_alpha()) {
    alpha1 = *model.claimed_alpha();
  } else {
    throw ValidationError("envelope.alpha1", "model '" + model.id() + "' has no known SID constant; set envelope.alpha1");
  }
  const Theorem3Table table =
      check_theorem3_bound(model, alpha1, env["gamma0"].get<double>(), env["k_max"].get<std::size_t>(),
                           env["draws"].get<std::size_t>(), cfg["seed"].get<std::uint64_t>(), workers_of(cfg));
  CommandResult r;
  r.table.columns = {"model_id", "k", "gamma0", "alpha1", "bias", "bias_se", "bound", "pass"};
  for (const EnvelopeRow& row : table.rows) {
    r.table.rows.push_back({{"model_id", model.id()},
                            {"k", row.k},
                            {"gamma0", table.gamma0},
                            {"alpha1", alpha1},
                            {"bias", row.bias.mean},
                            {"bias_se", row.bias.se},
                            {"bound", row.bound},
                            {"pass", row.pass}});
  }
  r.body = table.to_json();
  r.bounds_hold = table.all_pass();
  return r;
}

}  // namespace

ExperimentOutcome run_experiment(const json& resolved, const std::filesystem::path& output_dir) {
  const std::string command = resolved.at("command").get<std::string>();
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw Error("io", "cannot create output directory " + output_dir.string() + ": " + ec.message());

  ExperimentOutcome outcome;
  CommandResult res;
  if (command == "train") {
    res = run_train(resolved, output_dir, outcome.files);
  } else if (command == "decompose") {
    res = run_decompose(resolved);
  } else if (command == "sweep") {
    res = run_sweep(resolved);
  } else if (command == "sid-check") {
    res = run_sid_check(resolved);
  } else if (command == "prop2") {
    res = run_prop2(resolved);
  } else if (command == "relevance") {
    res = run_relevance(resolved);
  } else if (command == "envelope") {
    res = run_envelope(resolved);
  } else {
    throw ValidationError("command", "unknown command '" + command + "'");
  }

  const json echo = config_echo(resolved);
  outcome.report = {{"sidforest_version", version()},
                    {"command", command},
                    {"config", echo},
                    {"bounds_hold", res.bounds_hold},
                    {"result", res.body}};
  const auto csv_path = output_dir / "report.csv";
  const auto json_path = output_dir / "report.json";
  const auto cfg_path = output_dir / "config.resolved.json";
  write_csv_report(csv_path, res.table, echo);
  write_json_file(json_path, outcome.report);
  write_json_file(cfg_path, echo);
  outcome.files.insert(outcome.files.end(), {csv_path, json_path, cfg_path});
  outcome.exit_code = res.bounds_hold ? kExitOk : kExitBoundViolated;
  return outcome;
}

json error_json(const std::exception& e) {
  json err = {{"kind", "runtime"}, {"message", e.what()}};
  if (const auto* se = dynamic_cast<const Error*>(&e)) err["kind"] = se->kind();
  if (const auto* ve = dynamic_cast<const ValidationError*>(&e)) err["field"] = ve->field();
  if (const auto* pe = dynamic_cast<const ParseError*>(&e); pe && pe->line() > 0) err["line"] = pe->line();
  return {{"error", err}};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const VersionError*>(&e)) {
    return kExitValidation;
  }
  return kExitRuntime;
}

}  // namespace sidforest
