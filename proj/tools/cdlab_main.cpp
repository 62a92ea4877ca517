#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cdlab/bounds.hpp"
#include "cdlab/config.hpp"
#include "cdlab/errors.hpp"
#include "cdlab/harness.hpp"
#include "cdlab/report.hpp"

namespace {

using nlohmann::json;

enum ExitCode { kOk = 0, kFailure = 1, kInvalidConfig = 2, kConditionViolated = 3 };

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out_dir;
  std::optional<bool> svg;
  bool strict = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override root_seed");
  cmd->add_option("--workers", o.workers, "override worker thread count")->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", o.out_dir, "override outputs.out_dir");
  cmd->add_flag("--svg,!--no-svg", o.svg, "write (or skip) the SVG plot");
  cmd->add_flag("--strict", o.strict, "exit with code 3 when a theoretical condition fails");
  cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
}

cdlab::ExperimentConfig load(const CommonOptions& o) {
  cdlab::ExperimentConfig cfg = cdlab::load_config(o.config_path);
  if (o.seed) cfg.root_seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.out_dir) cfg.outputs.out_dir = *o.out_dir;
  if (o.svg) cfg.outputs.svg = *o.svg;
  if (o.strict) cfg.strict = true;
  cdlab::validate(cfg);
  return cfg;
}

void write_json(const cdlab::ExperimentConfig& cfg, const std::string& suffix, const json& j) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.outputs.out_dir);
  const std::string path = (fs::path(cfg.outputs.out_dir) / (cfg.outputs.stem + suffix)).string();
  std::ofstream out(path);
  if (!out) throw cdlab::Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  std::cout << "wrote " << path << "\n";
}

json vec(const cdlab::Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json constants_json(const cdlab::ModelConstants& mc) {
  json j;
  j["theory"] = {{"mu", mc.theory.mu},
                 {"L", mc.theory.L},
                 {"sigma", mc.theory.sigma},
                 {"C_chi", mc.theory.C_chi},
                 {"chi2_overflow", mc.theory.chi2_overflow},
                 {"grid_points", mc.theory.grid_points}};
  j["logZ_norms"] = {{"norm_1", mc.norms.norm_1}, {"norm_2", mc.norms.norm_2}, {"norm_3", mc.norms.norm_3}};
  if (mc.alpha) {
    j["alpha"] = {{"value", mc.alpha->value},
                  {"stderr", mc.alpha->std_error},
                  {"psi", vec(mc.alpha->psi)},
                  {"component", mc.alpha->label},
                  {"exact", mc.alpha->exact}};
  }
  j["alpha_used"] = mc.alpha_upper;
  return j;
}

void print_warnings(const cdlab::ExperimentReport& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

int finish(const cdlab::ExperimentConfig& cfg, bool violated) {
  return (cfg.strict && violated) ? kConditionViolated : kOk;
}

cdlab::ExperimentReport run(const cdlab::ExperimentConfig& cfg, bool quiet) {
  cdlab::ProgressFn progress;
  if (!quiet) {
    progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 50 == 0) std::fprintf(stderr, "\r%zu/%zu replications", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  }
  auto report = cdlab::run_experiment(cfg, progress);
  print_warnings(report);
  for (const auto& path : cdlab::emit_report(report, cfg.outputs)) std::cout << "wrote " << path << "\n";
  return report;
}

int cmd_fit(const CommonOptions& o, std::optional<std::size_t> n_opt, std::size_t rep) {
  const auto cfg = load(o);
  const std::size_t n = n_opt.value_or(cfg.n_grid.back());
  const auto model = cdlab::build_model(cfg.model);
  const cdlab::MarkovKernel kernel(model, cfg.kernel);

  std::optional<cdlab::TheoryConstants> theory;
  std::optional<double> alpha;
  std::optional<cdlab::ModelConstants> mc;
  if (cfg.needs_constants() || cfg.needs_alpha()) {
    mc = cdlab::compute_constants(cfg, kernel);
    theory = mc->theory;
    alpha = mc->alpha_upper;
  }
  const std::size_t m = cdlab::resolve_steps(cfg, n, theory, alpha);
  std::optional<cdlab::BoundConstants> k;
  if (mc) k = cdlab::make_bound_constants(mc->theory, mc->alpha_upper, m, mc->norms);
  const double C = cdlab::resolve_step_size(cfg, k);
  const auto traj = cdlab::run_estimator(cfg, kernel, n, rep, m, C);

  json j{{"n", n},
         {"replication", rep},
         {"m", m},
         {"C", C},
         {"psi_star", vec(cfg.psi_star)},
         {"final", vec(traj.final)},
         {"average", vec(traj.average)},
         {"sq_error_final", (traj.final - cfg.psi_star).squaredNorm()},
         {"sq_error_average", (traj.average - cfg.psi_star).squaredNorm()},
         {"updates", traj.update_count},
         {"projection_hits", traj.projection_hits}};
  std::cout << j.dump(2) << "\n";
  write_json(cfg, ".fit.json", j);
  const bool violated = k && !k->mu_tilde_positive();
  if (violated) std::cerr << "warning: mu_tilde = " << k->mu_tilde << " <= 0\n";
  return finish(cfg, violated);
}

int cmd_rates(const CommonOptions& o) {
  const auto cfg = load(o);
  const auto r = run(cfg, o.quiet);
  std::printf("%10s %6s %12s %14s %14s %14s\n", "n", "m", "C", "mse_last", "mse_average", "bound");
  for (const auto& s : r.sizes) {
    std::printf("%10zu %6zu %12.5g %14.6g %14.6g %14.6g\n", s.n, s.m, s.C, s.mse_last.mean, s.mse_average.mean,
                s.bound ? s.bound->total : NAN);
  }
  if (r.slope_last) {
    std::printf("slope (last)    %.4f +- %.4f\n", r.slope_last->slope, r.slope_last->slope_stderr);
    std::printf("slope (average) %.4f +- %.4f\n", r.slope_average->slope, r.slope_average->slope_stderr);
  }
  return finish(cfg, r.condition_violated);
}

int cmd_variance(const CommonOptions& o) {
  const auto cfg = load(o);
  const auto r = run(cfg, o.quiet);
  std::printf("tr(I^-1) = %.6g\n", r.fisher_inverse_trace);
  std::printf("%10s %6s %22s %22s\n", "n", "m", "ratio_last", "ratio_average");
  for (const auto& s : r.sizes) {
    std::printf("%10zu %6zu %12.4f +- %7.4f %12.4f +- %7.4f\n", s.n, s.m, s.variance_ratio_last,
                s.variance_ratio_last_stderr, s.variance_ratio_average, s.variance_ratio_average_stderr);
  }
  return finish(cfg, r.condition_violated);
}

int cmd_constants(const CommonOptions& o, std::size_t m) {
  const auto cfg = load(o);
  const auto model = cdlab::build_model(cfg.model);
  const cdlab::MarkovKernel kernel(model, cfg.kernel);
  const auto mc = cdlab::compute_constants(cfg, kernel);
  json j = constants_json(mc);
  const auto k = cdlab::make_bound_constants(mc.theory, mc.alpha_upper, m, mc.norms);
  j["derived"] = {{"m", m}, {"mu_tilde", k.mu_tilde}, {"L_tilde", k.L_tilde}, {"sigma_tilde_sq", k.sigma_tilde_sq}};
  std::cout << j.dump(2) << "\n";
  write_json(cfg, ".constants.json", j);
  if (!k.mu_tilde_positive()) std::cerr << "warning: mu_tilde <= 0 at m = " << m << "\n";
  return finish(cfg, !k.mu_tilde_positive());
}

struct BoundArgs {
  std::size_t m = 1;
  std::size_t n = 1024;
  double C = 1.0;
  double beta = 1.0;
  double delta0 = 0.0;
  std::size_t T = 0;
  std::size_t B = 0;
  double sigma_offline = 0.0;
};

int cmd_bounds(const CommonOptions& o, const BoundArgs& a) {
  const auto cfg = load(o);
  const auto model = cdlab::build_model(cfg.model);
  const cdlab::MarkovKernel kernel(model, cfg.kernel);
  const auto mc = cdlab::compute_constants(cfg, kernel);
  const auto k = cdlab::make_bound_constants(mc.theory, mc.alpha_upper, a.m, mc.norms);
  json j = constants_json(mc);
  j["derived"] = {{"m", a.m}, {"mu_tilde", k.mu_tilde}, {"L_tilde", k.L_tilde}, {"sigma_tilde_sq", k.sigma_tilde_sq}};
  try {
    const auto terms = cdlab::online_bound_terms(k, a.delta0, a.n, a.C, a.beta);
    j["online_bound"] = {{"n", a.n},
                         {"C", a.C},
                         {"beta", a.beta},
                         {"delta0", a.delta0},
                         {"total", terms.total},
                         {"transient", terms.transient},
                         {"stationary", terms.stationary}};
    if (a.T > 0) {
      const std::size_t B = a.B == 0 ? a.n : a.B;
      const std::size_t N = (a.n + B - 1) / B;
      const auto e = cdlab::offline_transients(k.mu_tilde, k.L, a.C, a.beta, a.T, N);
      j["offline"] = {{"T", a.T},
                      {"B", B},
                      {"N", N},
                      {"E1", e.E1},
                      {"E2", e.E2},
                      {"sigma_offline", a.sigma_offline},
                      {"sqrt_delta_bound",
                       cdlab::offline_bound(k, a.delta0, a.sigma_offline, a.n, B, a.T, a.C, a.beta)}};
    }
  } catch (const cdlab::ConditionViolated& e) {
    j["error"] = e.what();
    std::cout << j.dump(2) << "\n";
    std::cerr << "condition violated: " << e.what() << "\n";
    return cfg.strict ? kConditionViolated : kOk;
  }
  std::cout << j.dump(2) << "\n";
  write_json(cfg, ".bounds.json", j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive divergence experiments on exponential families"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* fit = app.add_subcommand("fit", "single estimator run on one dataset");
  add_common(fit, common);
  std::optional<std::size_t> fit_n;
  std::size_t fit_rep = 0;
  fit->add_option("--n", fit_n, "sample size (default: largest n in n_grid)")->check(CLI::PositiveNumber);
  fit->add_option("--replication", fit_rep, "replication index selecting the data and chain streams");

  auto* rates = app.add_subcommand("rates", "n-grid sweep with log-log slope fit");
  add_common(rates, common);

  auto* variance = app.add_subcommand("variance", "averaged-iterate variance against the Cramer-Rao bound");
  add_common(variance, common);

  auto* constants = app.add_subcommand("constants", "theory constants, alpha and log-partition norms");
  add_common(constants, common);
  std::size_t const_m = 1;
  constants->add_option("--m", const_m, "kernel steps for the derived constants");

  auto* bounds = app.add_subcommand("bounds", "evaluate the online and offline bound formulas");
  add_common(bounds, common);
  BoundArgs ba;
  bounds->add_option("--m", ba.m, "kernel steps");
  bounds->add_option("--n", ba.n, "sample size")->check(CLI::PositiveNumber);
  bounds->add_option("--C", ba.C, "initial learning rate");
  bounds->add_option("--beta", ba.beta, "learning rate decay exponent")->check(CLI::Range(0.0, 1.0));
  bounds->add_option("--delta0", ba.delta0, "initial squared error");
  bounds->add_option("--T", ba.T, "epochs for the offline bound (0 skips it)");
  bounds->add_option("--B", ba.B, "batch size for the offline bound (default n)");
  bounds->add_option("--sigma-offline", ba.sigma_offline, "aggregate offline noise level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalidConfig;
  }

  try {
    if (*fit) return cmd_fit(common, fit_n, fit_rep);
    if (*rates) return cmd_rates(common);
    if (*variance) return cmd_variance(common);
    if (*constants) return cmd_constants(common, const_m);
    if (*bounds) return cmd_bounds(common, ba);
  } catch (const cdlab::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const cdlab::ConditionViolated& e) {
    std::cerr << "condition violated: " << e.what() << "\n";
    return kConditionViolated;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
