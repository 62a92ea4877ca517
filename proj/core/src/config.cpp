#include "cdlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "cdlab/errors.hpp"

namespace cdlab {

using nlohmann::json;

std::shared_ptr<const Model> build_model(const ModelSpec& spec) {
  if (spec.family == "gaussian_mean") return std::make_shared<GaussianMeanModel>(spec.dim, spec.rho);
  if (spec.family == "boltzmann") return std::make_shared<BoltzmannModel>(spec.units);
  if (spec.family == "ergm") return std::make_shared<ErgmModel>(spec.nodes);
  throw ConfigError("model.family: unknown family '" + spec.family + "'");
}

bool ExperimentConfig::needs_alpha() const {
  return !alpha.fixed && (bounds || estimator.steps.kind != StepsRule::Kind::kFixed ||
                          estimator.step.kind != StepRule::Kind::kFixed);
}

bool ExperimentConfig::needs_constants() const {
  return bounds || estimator.step.kind != StepRule::Kind::kFixed ||
         estimator.steps.kind == StepsRule::Kind::kMuTildeFraction;
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::size_t get_count(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(where + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}

double get_real(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
  return v;
}

Vector get_vector(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = get_real(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

BatchVariant variant_from_string(const std::string& s) {
  if (s == "online") return BatchVariant::kOnline;
  if (s == "full_batch") return BatchVariant::kFullBatch;
  if (s == "with_replacement") return BatchVariant::kWithReplacement;
  if (s == "reshuffle") return BatchVariant::kReshuffle;
  throw ConfigError("estimator.variant: unknown variant '" + s + "'");
}

AlphaMode alpha_mode_from_string(const std::string& s) {
  if (s == "auto") return AlphaMode::kAuto;
  if (s == "exact") return AlphaMode::kExact;
  if (s == "monte_carlo") return AlphaMode::kMonteCarlo;
  throw ConfigError("alpha.mode: unknown mode '" + s + "'");
}

const char* alpha_mode_name(AlphaMode m) {
  switch (m) {
    case AlphaMode::kAuto: return "auto";
    case AlphaMode::kExact: return "exact";
    case AlphaMode::kMonteCarlo: return "monte_carlo";
  }
  return "auto";
}

ModelSpec parse_model(const json& j) {
  check_keys(j, "model", {"family", "dim", "rho", "units", "nodes"});
  ModelSpec m;
  if (!j.contains("family")) throw ConfigError("model.family: required");
  m.family = get<std::string>(j["family"], "model.family");
  if (j.contains("dim")) m.dim = get_count(j["dim"], "model.dim");
  if (j.contains("rho")) m.rho = get_real(j["rho"], "model.rho");
  if (j.contains("units")) m.units = get_count(j["units"], "model.units");
  if (j.contains("nodes")) m.nodes = get_count(j["nodes"], "model.nodes");
  return m;
}

StepRule parse_step(const json& j) {
  StepRule r;
  if (j.is_number()) {
    r.kind = StepRule::Kind::kFixed;
    r.value = get_real(j, "estimator.C");
    return r;
  }
  check_keys(j, "estimator.C", {"per_mu_tilde", "stability_fraction"});
  if (j.size() != 1) throw ConfigError("estimator.C: give exactly one of per_mu_tilde, stability_fraction");
  if (j.contains("per_mu_tilde")) {
    r.kind = StepRule::Kind::kMuTildeMultiple;
    r.value = get_real(j["per_mu_tilde"], "estimator.C.per_mu_tilde");
  } else {
    r.kind = StepRule::Kind::kStability;
    r.value = get_real(j["stability_fraction"], "estimator.C.stability_fraction");
  }
  if (!(r.value > 0.0)) throw ConfigError("estimator.C: multiplier must be > 0");
  return r;
}

StepsRule parse_steps(const json& j) {
  StepsRule r;
  if (j.is_string()) {
    if (j.get<std::string>() != "auto") throw ConfigError("estimator.m: expected an integer, \"auto\" or an object");
    r.kind = StepsRule::Kind::kSchedule;
    return r;
  }
  if (j.is_number()) {
    r.kind = StepsRule::Kind::kFixed;
    r.fixed = get_count(j, "estimator.m");
    return r;
  }
  check_keys(j, "estimator.m", {"mu_tilde_fraction"});
  if (!j.contains("mu_tilde_fraction")) throw ConfigError("estimator.m: mu_tilde_fraction required");
  r.kind = StepsRule::Kind::kMuTildeFraction;
  r.fraction = get_real(j["mu_tilde_fraction"], "estimator.m.mu_tilde_fraction");
  return r;
}

EstimatorSpec parse_estimator(const json& j) {
  check_keys(j, "estimator",
             {"variant", "C", "beta", "m", "epochs", "batch_size", "burn_in", "psi0", "checkpoints"});
  EstimatorSpec e;
  if (j.contains("variant")) e.variant = variant_from_string(get<std::string>(j["variant"], "estimator.variant"));
  if (j.contains("C")) e.step = parse_step(j["C"]);
  if (j.contains("beta")) e.beta = get_real(j["beta"], "estimator.beta");
  if (j.contains("m")) e.steps = parse_steps(j["m"]);
  if (j.contains("epochs")) e.epochs = get_count(j["epochs"], "estimator.epochs");
  if (j.contains("batch_size")) e.batch_size = get_count(j["batch_size"], "estimator.batch_size");
  if (j.contains("burn_in")) e.burn_in = get_real(j["burn_in"], "estimator.burn_in");
  if (j.contains("psi0")) e.psi0 = get_vector(j["psi0"], "estimator.psi0");
  if (j.contains("checkpoints")) {
    if (!j["checkpoints"].is_array()) throw ConfigError("estimator.checkpoints: expected an array");
    for (const auto& c : j["checkpoints"]) e.checkpoints.push_back(get_count(c, "estimator.checkpoints[]"));
  }
  return e;
}

AlphaSpec parse_alpha(const json& j) {
  check_keys(j, "alpha", {"mode", "outer", "inner", "grid_resolution", "z", "value"});
  AlphaSpec a;
  if (j.contains("mode")) a.mode = alpha_mode_from_string(get<std::string>(j["mode"], "alpha.mode"));
  if (j.contains("outer")) a.outer = get_count(j["outer"], "alpha.outer");
  if (j.contains("inner")) a.inner = get_count(j["inner"], "alpha.inner");
  if (j.contains("grid_resolution")) a.grid_resolution = get_count(j["grid_resolution"], "alpha.grid_resolution");
  if (j.contains("z")) a.z = get_real(j["z"], "alpha.z");
  if (j.contains("value")) a.fixed = get_real(j["value"], "alpha.value");
  return a;
}

OutputSpec parse_outputs(const json& j) {
  check_keys(j, "outputs", {"out_dir", "stem", "csv", "json", "svg"});
  OutputSpec o;
  if (j.contains("out_dir")) o.out_dir = get<std::string>(j["out_dir"], "outputs.out_dir");
  if (j.contains("stem")) o.stem = get<std::string>(j["stem"], "outputs.stem");
  if (j.contains("csv")) o.csv = get<bool>(j["csv"], "outputs.csv");
  if (j.contains("json")) o.json = get<bool>(j["json"], "outputs.json");
  if (j.contains("svg")) o.svg = get<bool>(j["svg"], "outputs.svg");
  return o;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  std::shared_ptr<const Model> model;
  try {
    model = build_model(cfg.model);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  const auto p = static_cast<Eigen::Index>(model->dim());
  if (cfg.psi_star.size() != p) throw ConfigError("psi_star: expected " + std::to_string(p) + " entries");
  if (cfg.domain_center.size() != p) throw ConfigError("domain.center: expected " + std::to_string(p) + " entries");
  if (!(cfg.domain_radius > 0.0)) throw ConfigError("domain.radius: must be > 0");
  const ParamDomain domain = cfg.domain();
  if (!domain.interior(cfg.psi_star, 1e-6 * cfg.domain_radius)) {
    throw ConfigError("psi_star: must lie in the interior of the domain (margin 1e-6 * radius)");
  }
  const Vector psi0 = cfg.psi0();
  if (psi0.size() != p) throw ConfigError("estimator.psi0: expected " + std::to_string(p) + " entries");
  if (!domain.contains(psi0)) throw ConfigError("estimator.psi0: outside the domain");

  if (cfg.n_grid.empty()) throw ConfigError("n_grid: must not be empty");
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] < 1) throw ConfigError("n_grid: entries must be >= 1");
    if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]) throw ConfigError("n_grid: must be strictly increasing");
  }
  if (cfg.replications < 1) throw ConfigError("replications: must be >= 1");
  if (cfg.workers < 1) throw ConfigError("workers: must be >= 1");

  const EstimatorSpec& e = cfg.estimator;
  if (!(e.beta >= 0.0 && e.beta <= 1.0)) throw ConfigError("estimator.beta: must lie in [0, 1]");
  if (e.step.kind == StepRule::Kind::kFixed && !(e.step.value >= 0.0)) throw ConfigError("estimator.C: must be >= 0");
  if (!(e.burn_in >= 0.0 && e.burn_in < 1.0)) throw ConfigError("estimator.burn_in: must lie in [0, 1)");
  if (e.steps.kind == StepsRule::Kind::kSchedule && !(e.beta > 0.5 && e.beta < 1.0)) {
    throw ConfigError("estimator.m: \"auto\" needs beta in (1/2, 1)");
  }
  if (e.steps.kind == StepsRule::Kind::kMuTildeFraction && !(e.steps.fraction >= 0.0 && e.steps.fraction < 1.0)) {
    throw ConfigError("estimator.m.mu_tilde_fraction: must lie in [0, 1)");
  }
  if (e.variant == BatchVariant::kOnline) {
    if (!e.checkpoints.empty()) throw ConfigError("estimator.checkpoints: offline variants only");
  } else {
    if (e.epochs < 1) throw ConfigError("estimator.epochs: must be >= 1");
    if (e.variant != BatchVariant::kFullBatch) {
      if (e.batch_size < 1) throw ConfigError("estimator.batch_size: must be >= 1");
      if (e.batch_size > cfg.n_grid.front()) throw ConfigError("estimator.batch_size: exceeds the smallest n");
    }
    for (std::size_t c : e.checkpoints) {
      if (c < 1 || c > e.epochs) throw ConfigError("estimator.checkpoints: entries must lie in [1, epochs]");
    }
  }

  if (model->exactness() == Exactness::kNone) {
    throw ConfigError("model: data generation needs an exact sampler; " + model->name() + " has none");
  }
  try {
    MarkovKernel(model, cfg.kernel);
  } catch (const Error& err) {
    throw ConfigError(std::string("kernel: ") + err.what());
  }
  if (cfg.alpha.fixed && !(*cfg.alpha.fixed >= 0.0)) throw ConfigError("alpha.value: must be >= 0");
  if (!(cfg.alpha.z >= 0.0)) throw ConfigError("alpha.z: must be >= 0");
  if (cfg.alpha.grid_resolution < 2 || cfg.grid_resolution < 2) throw ConfigError("grid_resolution: must be >= 2");
  if (cfg.alpha.outer < 2 || cfg.alpha.inner < 1) throw ConfigError("alpha: outer >= 2 and inner >= 1 required");
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"name", "model", "psi_star", "domain", "kernel", "estimator", "n_grid", "replications", "root_seed",
              "workers", "alpha", "bounds", "grid_resolution", "strict", "outputs"});
  ExperimentConfig cfg;
  if (j.contains("name")) cfg.name = get<std::string>(j["name"], "name");
  if (!j.contains("model")) throw ConfigError("model: required");
  cfg.model = parse_model(j["model"]);
  if (!j.contains("psi_star")) throw ConfigError("psi_star: required");
  cfg.psi_star = get_vector(j["psi_star"], "psi_star");
  if (!j.contains("domain")) throw ConfigError("domain: required");
  check_keys(j["domain"], "domain", {"center", "radius"});
  if (!j["domain"].contains("radius")) throw ConfigError("domain.radius: required");
  cfg.domain_radius = get_real(j["domain"]["radius"], "domain.radius");
  cfg.domain_center = j["domain"].contains("center") ? get_vector(j["domain"]["center"], "domain.center")
                                                     : Vector(Vector::Zero(cfg.psi_star.size()));
  if (j.contains("kernel")) {
    try {
      cfg.kernel = kernel_kind_from_string(get<std::string>(j["kernel"], "kernel"));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("kernel: ") + e.what());
    }
  }
  if (j.contains("estimator")) cfg.estimator = parse_estimator(j["estimator"]);
  if (!j.contains("n_grid") || !j["n_grid"].is_array()) throw ConfigError("n_grid: required array");
  for (const auto& n : j["n_grid"]) cfg.n_grid.push_back(get_count(n, "n_grid[]"));
  if (j.contains("replications")) cfg.replications = get_count(j["replications"], "replications");
  if (j.contains("root_seed")) {
    if (!j["root_seed"].is_number_unsigned() && !j["root_seed"].is_number_integer()) {
      throw ConfigError("root_seed: expected an integer");
    }
    cfg.root_seed = j["root_seed"].get<std::uint64_t>();
  }
  if (j.contains("workers")) cfg.workers = get_count(j["workers"], "workers");
  if (j.contains("alpha")) cfg.alpha = parse_alpha(j["alpha"]);
  if (j.contains("bounds")) cfg.bounds = get<bool>(j["bounds"], "bounds");
  if (j.contains("grid_resolution")) cfg.grid_resolution = get_count(j["grid_resolution"], "grid_resolution");
  if (j.contains("strict")) cfg.strict = get<bool>(j["strict"], "strict");
  if (j.contains("outputs")) cfg.outputs = parse_outputs(j["outputs"]);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  json model{{"family", cfg.model.family}};
  if (cfg.model.family == "gaussian_mean") {
    model["dim"] = cfg.model.dim;
    model["rho"] = cfg.model.rho;
  } else if (cfg.model.family == "boltzmann") {
    model["units"] = cfg.model.units;
  } else {
    model["nodes"] = cfg.model.nodes;
  }
  j["model"] = model;
  j["psi_star"] = vector_json(cfg.psi_star);
  j["domain"] = {{"center", vector_json(cfg.domain_center)}, {"radius", cfg.domain_radius}};
  j["kernel"] = to_string(cfg.kernel);

  const EstimatorSpec& e = cfg.estimator;
  json est;
  est["variant"] = to_string(e.variant);
  switch (e.step.kind) {
    case StepRule::Kind::kFixed: est["C"] = e.step.value; break;
    case StepRule::Kind::kMuTildeMultiple: est["C"] = {{"per_mu_tilde", e.step.value}}; break;
    case StepRule::Kind::kStability: est["C"] = {{"stability_fraction", e.step.value}}; break;
  }
  est["beta"] = e.beta;
  switch (e.steps.kind) {
    case StepsRule::Kind::kFixed: est["m"] = e.steps.fixed; break;
    case StepsRule::Kind::kSchedule: est["m"] = "auto"; break;
    case StepsRule::Kind::kMuTildeFraction: est["m"] = {{"mu_tilde_fraction", e.steps.fraction}}; break;
  }
  est["epochs"] = e.epochs;
  est["batch_size"] = e.batch_size;
  est["burn_in"] = e.burn_in;
  if (e.psi0) est["psi0"] = vector_json(*e.psi0);
  if (!e.checkpoints.empty()) est["checkpoints"] = e.checkpoints;
  j["estimator"] = est;

  j["n_grid"] = cfg.n_grid;
  j["replications"] = cfg.replications;
  j["root_seed"] = cfg.root_seed;
  j["workers"] = cfg.workers;
  json alpha{{"mode", alpha_mode_name(cfg.alpha.mode)},
             {"outer", cfg.alpha.outer},
             {"inner", cfg.alpha.inner},
             {"grid_resolution", cfg.alpha.grid_resolution},
             {"z", cfg.alpha.z}};
  if (cfg.alpha.fixed) alpha["value"] = *cfg.alpha.fixed;
  j["alpha"] = alpha;
  j["bounds"] = cfg.bounds;
  j["grid_resolution"] = cfg.grid_resolution;
  j["strict"] = cfg.strict;
  j["outputs"] = {{"out_dir", cfg.outputs.out_dir},
                  {"stem", cfg.outputs.stem},
                  {"csv", cfg.outputs.csv},
                  {"json", cfg.outputs.json},
                  {"svg", cfg.outputs.svg}};
  return j;
}

}  // namespace cdlab
