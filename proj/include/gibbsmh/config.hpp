#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gibbsmh/gibbs_model.hpp"
#include "gibbsmh/graph_lattice.hpp"
#include "gibbsmh/io.hpp"
#include "gibbsmh/rwm_sampler.hpp"
#include "gibbsmh/scaling.hpp"
#include "json.hpp"

namespace gibbsmh {

inline constexpr const char* kCodeVersion = "gibbsmh 0.1.0";

//! Invalid experiment document. `field` is a dotted path such as "run.tau".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace config_detail {

using nlohmann::json;

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) throw ConfigError(path.empty() ? k : path + "." + k, "unknown key");
  }
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline double get_number(const json& j, const std::string& path, const char* key, std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "required");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(join(path, key), "must be finite");
  return x;
}

inline std::uint64_t get_count(const json& j, const std::string& path, const char* key, std::uint64_t min,
                               std::optional<std::uint64_t> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "required");
  }
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(join(path, key), "expected a nonnegative integer");
  const auto x = v.get<std::uint64_t>();
  if (x < min) throw ConfigError(join(path, key), "must be >= " + std::to_string(min));
  return x;
}

inline std::string get_string(const json& j, const std::string& path, const char* key, std::optional<std::string> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "required");
  }
  if (!j.at(key).is_string()) throw ConfigError(join(path, key), "expected a string");
  return j.at(key).get<std::string>();
}

}  // namespace config_detail

struct ModelConfig {
  std::string family = "gaussian_product";
  nlohmann::json parameters = nlohmann::json::object();
  std::optional<nlohmann::json> neighborhood;
};

struct GraphConfig {
  std::size_t d = 1;
  std::optional<std::int64_t> L;     // box [-L, L]^d
  std::optional<std::int64_t> side;  // cube [0, side-1]^d
  std::optional<std::vector<std::vector<std::int64_t>>> vertex_list;
  BoundaryMode boundary_mode = BoundaryMode::zero;
  double boundary_constant = 0.0;
};

struct InitConfig {
  std::string mode = "auto";  // auto | exact_gaussian | burn_in
  std::optional<std::uint64_t> steps;
  std::optional<double> tau0;
};

struct RunConfig {
  std::optional<double> tau;
  std::optional<std::vector<double>> tau_grid;
  std::optional<std::size_t> n;
  std::optional<std::vector<std::size_t>> n_list;
  std::uint64_t steps = 10000;
  std::size_t replicas = 8;
  std::size_t thinning = 10;
  InitConfig init;
  IncrementFamily increments = IncrementFamily::standard_normal;
  std::optional<std::string> function;
  std::optional<double> s_hat;
  std::uint64_t pilot_steps = 20000;
};

struct OracleConfig {
  std::vector<std::string> checks;
  bool inject_seed_corruption = false;
};

inline const std::vector<std::string>& known_oracle_checks() {
  static const std::vector<std::string> k = {"quad_acceptance", "detailed_balance", "gaussian_sampling",
                                             "s2_exact",        "c_mc",             "quad_1d",
                                             "determinism"};
  return k;
}

struct ExperimentConfig {
  ModelConfig model;
  GraphConfig graph;
  RunConfig run;
  std::optional<OracleConfig> oracle;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  InteractionModel build_model() const;
  BoundaryCondition boundary() const;
  //! Window from the graph block, falling back to run.n.
  WindowPtr build_window(const InteractionModel& m) const;
  InitMode init_mode(const InteractionModel& m) const;
  SweepOptions sweep_options(std::size_t threads) const;
};

inline std::string to_string(IncrementFamily f) {
  return f == IncrementFamily::uniform ? "uniform" : "standard_normal";
}

inline IncrementFamily increment_family_from_string(const std::string& s, const std::string& field) {
  if (s == "standard_normal") return IncrementFamily::standard_normal;
  if (s == "uniform") return IncrementFamily::uniform;
  throw ConfigError(field, "unknown increment family '" + s + "'");
}

// ---------------------------------------------------------------------------
// Parsing

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  using namespace config_detail;
  ExperimentConfig c;
  allow_keys(doc, "", {"model", "graph", "run", "oracle", "seed", "output_dir"});
  c.seed = get_count(doc, "", "seed", 0, 1);
  c.output_dir = get_string(doc, "", "output_dir", std::string("out"));

  if (!doc.contains("model")) throw ConfigError("model", "required");
  const auto& m = doc.at("model");
  allow_keys(m, "model", {"family", "parameters", "neighborhood"});
  c.model.family = get_string(m, "model", "family");
  if (m.contains("parameters")) {
    if (!m.at("parameters").is_object()) throw ConfigError("model.parameters", "expected an object");
    c.model.parameters = m.at("parameters");
  }
  if (m.contains("neighborhood")) c.model.neighborhood = m.at("neighborhood");

  const json g = doc.value("graph", json::object());
  allow_keys(g, "graph", {"d", "L", "side", "vertex_list", "boundary_mode", "boundary_constant"});
  c.graph.d = get_count(g, "graph", "d", 1, 1);
  const int shapes = g.contains("L") + g.contains("side") + g.contains("vertex_list");
  if (shapes > 1) throw ConfigError("graph", "give at most one of L, side, vertex_list");
  if (g.contains("L")) c.graph.L = static_cast<std::int64_t>(get_count(g, "graph", "L", 0));
  if (g.contains("side")) c.graph.side = static_cast<std::int64_t>(get_count(g, "graph", "side", 1));
  if (g.contains("vertex_list")) {
    try {
      c.graph.vertex_list = g.at("vertex_list").get<std::vector<std::vector<std::int64_t>>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("graph.vertex_list", "expected a list of integer coordinate lists");
    }
    if (c.graph.vertex_list->empty()) throw ConfigError("graph.vertex_list", "must not be empty");
    for (const auto& v : *c.graph.vertex_list)
      if (v.size() != c.graph.d) throw ConfigError("graph.vertex_list", "vertex dimension differs from d");
  }
  try {
    c.graph.boundary_mode = boundary_mode_from_string(get_string(g, "graph", "boundary_mode", std::string("zero")));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("graph.boundary_mode", e.what());
  }
  if (c.graph.boundary_mode == BoundaryMode::explicit_values)
    throw ConfigError("graph.boundary_mode", "explicit boundary values are not configurable; use zero, free or constant");
  c.graph.boundary_constant = get_number(g, "graph", "boundary_constant", 0.0);

  const json r = doc.value("run", json::object());
  allow_keys(r, "run", {"tau", "tau_grid", "n", "n_list", "steps", "replicas", "thinning", "init", "increments",
                        "function", "s_hat", "pilot_steps"});
  if (r.contains("tau")) {
    c.run.tau = get_number(r, "run", "tau");
    if (*c.run.tau < 0) throw ConfigError("run.tau", "must be >= 0");
  }
  if (r.contains("tau_grid")) {
    const auto& tg = r.at("tau_grid");
    std::vector<double> grid;
    if (tg.is_object()) {
      allow_keys(tg, "run.tau_grid", {"start", "stop", "step"});
      const double lo = get_number(tg, "run.tau_grid", "start"), hi = get_number(tg, "run.tau_grid", "stop"),
                   st = get_number(tg, "run.tau_grid", "step");
      if (!(st > 0) || hi < lo) throw ConfigError("run.tau_grid", "need step > 0 and stop >= start");
      grid = tau_grid(lo, hi, st);
    } else if (tg.is_array()) {
      for (const auto& v : tg) {
        if (!v.is_number()) throw ConfigError("run.tau_grid", "expected numbers");
        grid.push_back(v.get<double>());
      }
    } else {
      throw ConfigError("run.tau_grid", "expected a list or {start, stop, step}");
    }
    if (grid.empty()) throw ConfigError("run.tau_grid", "must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!std::isfinite(grid[i]) || grid[i] < 0) throw ConfigError("run.tau_grid", "values must be finite and >= 0");
      if (i && !(grid[i] > grid[i - 1])) throw ConfigError("run.tau_grid", "must be strictly increasing");
    }
    c.run.tau_grid = std::move(grid);
  }
  if (r.contains("n")) c.run.n = get_count(r, "run", "n", 1);
  if (r.contains("n_list")) {
    std::vector<std::size_t> ns;
    if (!r.at("n_list").is_array()) throw ConfigError("run.n_list", "expected a list");
    for (const auto& v : r.at("n_list")) {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1) throw ConfigError("run.n_list", "entries must be integers >= 1");
      ns.push_back(v.get<std::size_t>());
    }
    if (ns.empty()) throw ConfigError("run.n_list", "must not be empty");
    for (std::size_t i = 1; i < ns.size(); ++i)
      if (!(ns[i] > ns[i - 1])) throw ConfigError("run.n_list", "must be strictly increasing");
    c.run.n_list = std::move(ns);
  }
  c.run.steps = get_count(r, "run", "steps", 1, 10000);
  c.run.replicas = get_count(r, "run", "replicas", 1, 8);
  c.run.thinning = get_count(r, "run", "thinning", 1, 10);
  c.run.pilot_steps = get_count(r, "run", "pilot_steps", 1, 20000);
  if (r.contains("init")) {
    const auto& in = r.at("init");
    if (in.is_string()) {
      c.run.init.mode = in.get<std::string>();
    } else {
      allow_keys(in, "run.init", {"mode", "steps", "tau0"});
      c.run.init.mode = get_string(in, "run.init", "mode");
      if (in.contains("steps")) c.run.init.steps = get_count(in, "run.init", "steps", 1);
      if (in.contains("tau0")) {
        c.run.init.tau0 = get_number(in, "run.init", "tau0");
        if (*c.run.init.tau0 < 0) throw ConfigError("run.init.tau0", "must be >= 0");
      }
    }
    if (c.run.init.mode != "auto" && c.run.init.mode != "exact_gaussian" && c.run.init.mode != "burn_in")
      throw ConfigError("run.init.mode", "expected auto, exact_gaussian or burn_in");
  }
  c.run.increments =
      increment_family_from_string(get_string(r, "run", "increments", std::string("standard_normal")), "run.increments");
  if (r.contains("function")) {
    c.run.function = get_string(r, "run", "function");
    try {
      CylinderFunction::builtin(*c.run.function);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("run.function", e.what());
    }
  }
  if (r.contains("s_hat")) {
    c.run.s_hat = get_number(r, "run", "s_hat");
    if (!(*c.run.s_hat > 0)) throw ConfigError("run.s_hat", "must be > 0");
  }

  if (doc.contains("oracle")) {
    const auto& o = doc.at("oracle");
    allow_keys(o, "oracle", {"checks", "inject_seed_corruption"});
    OracleConfig oc;
    if (o.contains("checks")) {
      if (!o.at("checks").is_array()) throw ConfigError("oracle.checks", "expected a list");
      for (const auto& v : o.at("checks")) {
        if (!v.is_string()) throw ConfigError("oracle.checks", "expected check names");
        const auto name = v.get<std::string>();
        const auto& known = known_oracle_checks();
        if (std::find(known.begin(), known.end(), name) == known.end())
          throw ConfigError("oracle.checks", "unknown check '" + name + "'");
        oc.checks.push_back(name);
      }
    } else {
      oc.checks = known_oracle_checks();
    }
    if (oc.checks.empty()) throw ConfigError("oracle.checks", "empty battery");
    if (o.contains("inject_seed_corruption")) {
      if (!o.at("inject_seed_corruption").is_boolean()) throw ConfigError("oracle.inject_seed_corruption", "expected a boolean");
      oc.inject_seed_corruption = o.at("inject_seed_corruption").get<bool>();
    }
    c.oracle = std::move(oc);
  }

  // Building the model validates its parameter block.
  (void)c.build_model();
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed document: ") + e.what());
  }
  return parse_config(doc);
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
  std::string text;
  try {
    text = read_file(p);
  } catch (const std::exception& e) {
    throw ConfigError("", e.what());
  }
  return parse_config_text(text);
}

// ---------------------------------------------------------------------------
// Serialization; parse_config(to_json(c)) reproduces c.

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["model"] = {{"family", c.model.family}, {"parameters", c.model.parameters}};
  if (c.model.neighborhood) j["model"]["neighborhood"] = *c.model.neighborhood;
  auto& g = j["graph"];
  g["d"] = c.graph.d;
  if (c.graph.L) g["L"] = *c.graph.L;
  if (c.graph.side) g["side"] = *c.graph.side;
  if (c.graph.vertex_list) g["vertex_list"] = *c.graph.vertex_list;
  g["boundary_mode"] = to_string(c.graph.boundary_mode);
  g["boundary_constant"] = c.graph.boundary_constant;
  auto& r = j["run"];
  if (c.run.tau) r["tau"] = *c.run.tau;
  if (c.run.tau_grid) r["tau_grid"] = *c.run.tau_grid;
  if (c.run.n) r["n"] = *c.run.n;
  if (c.run.n_list) r["n_list"] = *c.run.n_list;
  r["steps"] = c.run.steps;
  r["replicas"] = c.run.replicas;
  r["thinning"] = c.run.thinning;
  r["pilot_steps"] = c.run.pilot_steps;
  nlohmann::json init = {{"mode", c.run.init.mode}};
  if (c.run.init.steps) init["steps"] = *c.run.init.steps;
  if (c.run.init.tau0) init["tau0"] = *c.run.init.tau0;
  r["init"] = init;
  r["increments"] = to_string(c.run.increments);
  if (c.run.function) r["function"] = *c.run.function;
  if (c.run.s_hat) r["s_hat"] = *c.run.s_hat;
  if (c.oracle) j["oracle"] = {{"checks", c.oracle->checks}, {"inject_seed_corruption", c.oracle->inject_seed_corruption}};
  return j;
}

//! FNV-1a of the canonical (key-sorted, compact) document. The output
//! directory is not part of an experiment's identity and is left out.
inline std::string config_hash(nlohmann::json doc) {
  doc.erase("output_dir");
  return hex64(fnv1a64(doc.dump()));
}

inline std::string config_hash(const ExperimentConfig& c) { return config_hash(to_json(c)); }

// ---------------------------------------------------------------------------
// Model and window construction

inline InteractionModel model_from_json(const nlohmann::json& block_parameters, const std::string& family, std::size_t d) {
  using namespace config_detail;
  const auto& p = block_parameters;
  const std::string path = "model.parameters";
  try {
    if (family == "gaussian_product") {
      allow_keys(p, path, {"variance"});
      return InteractionModel::gaussian_product(d, get_number(p, path, "variance", 1.0));
    }
    if (family == "gff") {
      allow_keys(p, path, {"beta", "mass2"});
      return InteractionModel::gff(d, get_number(p, path, "beta", 1.0), get_number(p, path, "mass2", 1.0));
    }
    if (family == "phi4") {
      allow_keys(p, path, {"a", "b", "beta"});
      return InteractionModel::phi4(d, get_number(p, path, "a", 1.0), get_number(p, path, "b", 0.0),
                                    get_number(p, path, "beta", 1.0));
    }
    if (family == "custom_pairwise") {
      allow_keys(p, path, {"self_poly", "couplings", "supports_free_boundary"});
      std::vector<double> poly;
      if (p.contains("self_poly")) poly = p.at("self_poly").get<std::vector<double>>();
      std::vector<std::pair<VertexId, double>> couplings;
      if (p.contains("couplings"))
        for (const auto& e : p.at("couplings")) {
          allow_keys(e, path + ".couplings", {"offset", "J"});
          couplings.emplace_back(VertexId(e.at("offset").get<std::vector<std::int64_t>>()), e.at("J").get<double>());
        }
      return InteractionModel::custom_pairwise(d, std::move(poly), std::move(couplings),
                                               p.value("supports_free_boundary", true));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError("model.family", "unknown family '" + family + "'");
}

inline InteractionModel ExperimentConfig::build_model() const {
  InteractionModel m = model_from_json(model.parameters, model.family, graph.d);
  if (model.neighborhood) {
    Neighborhood given = [&] {
      try {
        return neighborhood_from_json(*model.neighborhood, graph.d);
      } catch (const std::exception& e) {
        throw ConfigError("model.neighborhood", e.what());
      }
    }();
    if (!(given == m.neighborhood()))
      throw ConfigError("model.neighborhood", "does not match the neighborhood of family " + model.family);
  }
  return m;
}

inline BoundaryCondition ExperimentConfig::boundary() const {
  switch (graph.boundary_mode) {
    case BoundaryMode::free: return BoundaryCondition::free();
    case BoundaryMode::constant: return BoundaryCondition::constant_value(graph.boundary_constant);
    default: return BoundaryCondition::zero();
  }
}

inline WindowPtr ExperimentConfig::build_window(const InteractionModel& m) const {
  try {
    if (graph.L) return std::make_shared<const Window>(gibbsmh::build_box(m, *graph.L, boundary()));
    if (graph.side) return std::make_shared<const Window>(gibbsmh::build_cube(m, *graph.side, boundary()));
    if (graph.vertex_list) {
      std::vector<VertexId> vs;
      for (const auto& v : *graph.vertex_list) vs.emplace_back(v);
      auto w = std::make_shared<const Window>(Window::from_vertices(std::move(vs), m.neighborhood(), boundary()));
      check_compatible(m, *w);
      return w;
    }
    if (run.n) return window_for_size(m, *run.n, boundary());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("graph", e.what());
  }
  throw ConfigError("graph", "no window: give graph.L, graph.side, graph.vertex_list or run.n");
}

inline InitMode ExperimentConfig::init_mode(const InteractionModel& m) const {
  const bool exact = run.init.mode == "exact_gaussian" || (run.init.mode == "auto" && m.is_gaussian());
  if (exact) {
    if (!m.is_gaussian()) throw ConfigError("run.init.mode", "exact_gaussian needs a Gaussian family");
    return ExactGaussianInit{};
  }
  return BurnInInit{run.init.steps.value_or(0), run.init.tau0};
}

inline SweepOptions ExperimentConfig::sweep_options(std::size_t threads) const {
  SweepOptions o;
  o.replicas = run.replicas;
  o.threads = threads;
  o.increments = run.increments;
  o.burn_in_steps = run.init.steps;
  o.s_hat = run.s_hat;
  o.pilot_steps = run.pilot_steps;
  o.thinning = run.thinning;
  o.boundary = boundary();
  return o;
}

// ---------------------------------------------------------------------------
// Reproducibility manifest

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string code_version = kCodeVersion;
  std::string started_at;
  std::string finished_at;
  double wall_time = 0.0;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const {
    return {{"command", command},       {"config", config},         {"config_hash", config_hash},
            {"seed", seed},             {"code_version", code_version}, {"started_at", started_at},
            {"finished_at", finished_at}, {"wall_time", wall_time},   {"outputs", outputs}};
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.code_version = j.at("code_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.wall_time = j.at("wall_time").get<double>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  }

  //! True when the stored hash matches the echoed config.
  bool verify() const { return gibbsmh::config_hash(config) == config_hash; }

  void write(const std::filesystem::path& p) const { write_file_atomic(p, to_json().dump(2) + "\n"); }
};

}  // namespace gibbsmh
