#include "cdlab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "cdlab/cd.hpp"
#include "cdlab/errors.hpp"

namespace cdlab {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

BatchSchedule batching_for(const EstimatorSpec& e) {
  switch (e.variant) {
    case BatchVariant::kOnline: return BatchSchedule::online();
    case BatchVariant::kFullBatch: return BatchSchedule::full_batch();
    case BatchVariant::kWithReplacement: return BatchSchedule::with_replacement(e.batch_size);
    case BatchVariant::kReshuffle: return BatchSchedule::reshuffle(e.batch_size);
  }
  return BatchSchedule::online();
}

AlphaOptions alpha_options(const ExperimentConfig& cfg) {
  AlphaOptions opts;
  opts.mode = cfg.alpha.mode;
  opts.outer = cfg.alpha.outer;
  opts.inner = cfg.alpha.inner;
  opts.seed = substream_seed(cfg.root_seed, StreamTag::kAlpha);
  return opts;
}

}  // namespace

ModelConstants compute_constants(const ExperimentConfig& cfg, const MarkovKernel& kernel) {
  const Model& model = kernel.model();
  const ParamDomain domain = cfg.domain();
  ModelConstants out;
  out.theory = theory_constants(model, domain, cfg.psi_star, cfg.grid_resolution);
  out.norms = logZ_norms(model, domain, cfg.grid_resolution);
  if (cfg.alpha.fixed) {
    out.alpha_upper = *cfg.alpha.fixed;
  } else {
    out.alpha = alpha_sup(kernel, domain, cfg.alpha.grid_resolution, alpha_options(cfg));
    out.alpha_upper = out.alpha->value + cfg.alpha.z * out.alpha->std_error;
  }
  return out;
}

std::size_t resolve_steps(const ExperimentConfig& cfg, std::size_t n, const std::optional<TheoryConstants>& theory,
                          const std::optional<double>& alpha_upper) {
  const StepsRule& rule = cfg.estimator.steps;
  switch (rule.kind) {
    case StepsRule::Kind::kFixed:
      return rule.fixed;
    case StepsRule::Kind::kSchedule:
      if (!alpha_upper) throw InvalidInput("resolve_steps: m = \"auto\" needs alpha");
      return m_schedule(n, cfg.estimator.beta, *alpha_upper);
    case StepsRule::Kind::kMuTildeFraction:
      if (!theory || !alpha_upper) throw InvalidInput("resolve_steps: mu_tilde_fraction needs constants and alpha");
      return steps_for_mu_tilde(*theory, *alpha_upper, rule.fraction);
  }
  return rule.fixed;
}

double resolve_step_size(const ExperimentConfig& cfg, const std::optional<BoundConstants>& constants) {
  const StepRule& rule = cfg.estimator.step;
  if (rule.kind == StepRule::Kind::kFixed) return rule.value;
  if (!constants) throw InvalidInput("resolve_step_size: this learning-rate rule needs bound constants");
  if (!constants->mu_tilde_positive()) {
    throw ConditionViolated("learning rate rule needs mu_tilde > 0, got " + format_double(constants->mu_tilde));
  }
  if (rule.kind == StepRule::Kind::kMuTildeMultiple) return rule.value / constants->mu_tilde;
  return rule.value * constants->mu_tilde / (4.0 * constants->L * constants->L);
}

Trajectory run_estimator(const ExperimentConfig& cfg, const MarkovKernel& kernel, std::size_t n,
                         std::size_t replication, std::size_t m, double C) {
  const Model& model = kernel.model();
  Rng data_rng(cfg.root_seed, StreamTag::kData, n, replication);
  const std::vector<Point> data = model.sample_n(cfg.psi_star, n, data_rng);

  const EstimatorSpec& e = cfg.estimator;
  CdConfig cd(cfg.domain(), cfg.psi0());
  cd.m = m;
  cd.schedule = {C, e.beta};
  cd.batching = batching_for(e);
  cd.epochs = e.epochs;
  cd.seed = substream_seed(cfg.root_seed, StreamTag::kReplication, n, replication);
  cd.workers = 1;

  if (e.variant == BatchVariant::kOnline) return online_cd(data, kernel, cd);
  cd.storage = (e.burn_in > 0.0) ? IterateStorage::kEveryUpdate : IterateStorage::kEpochEnds;
  return offline_cd(data, kernel, cd);
}

ReplicationResult run_replication(const ExperimentConfig& cfg, const MarkovKernel& kernel, std::size_t n,
                                  std::size_t replication, std::size_t m, double C) {
  const EstimatorSpec& e = cfg.estimator;
  const Trajectory traj = run_estimator(cfg, kernel, n, replication, m, C);
  const bool epoch_ends = e.variant != BatchVariant::kOnline && !(e.burn_in > 0.0);

  ReplicationResult out;
  out.sq_error_last = (traj.final - cfg.psi_star).squaredNorm();
  const Vector avg = e.burn_in > 0.0 ? polyak_average(traj, e.burn_in) : traj.average;
  out.sq_error_average = (avg - cfg.psi_star).squaredNorm();
  out.projection_hit_fraction = traj.projection_hit_fraction();
  if (!e.checkpoints.empty()) {
    const std::size_t per_epoch = traj.update_count / e.epochs;
    for (std::size_t c : e.checkpoints) {
      const Vector& at = epoch_ends ? traj.iterates[c - 1] : traj.iterates[c * per_epoch - 1];
      out.sq_error_checkpoints.push_back((at - cfg.psi_star).squaredNorm());
    }
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.config = cfg;
  report.estimator = to_string(cfg.estimator.variant);

  const std::shared_ptr<const Model> model = build_model(cfg.model);
  const MarkovKernel kernel(model, cfg.kernel);
  const ParamDomain domain = cfg.domain();

  const auto warn = [&report](std::string msg, bool violation = false) {
    report.warnings.push_back(std::move(msg));
    if (violation) report.condition_violated = true;
  };

  report.fisher_inverse_trace = inverse_trace(model->fisher_information(cfg.psi_star));

  if (cfg.needs_constants()) {
    const ModelConstants mc = compute_constants(cfg, kernel);
    report.theory = mc.theory;
    report.norms = mc.norms;
    report.alpha = mc.alpha;
    report.alpha_upper = mc.alpha_upper;
    if (mc.theory.chi2_overflow) warn("chi^2 overflowed on the grid; C_chi is infinite", true);
  } else if (cfg.alpha.fixed) {
    report.alpha_upper = *cfg.alpha.fixed;
  } else if (cfg.needs_alpha()) {
    report.alpha = alpha_sup(kernel, domain, cfg.alpha.grid_resolution, alpha_options(cfg));
    report.alpha_upper = report.alpha->value + cfg.alpha.z * report.alpha->std_error;
  }

  // per-size m, C and constants
  const std::size_t sizes = cfg.n_grid.size();
  std::vector<std::size_t> steps(sizes);
  std::vector<double> rates(sizes);
  std::vector<std::optional<BoundConstants>> constants(sizes);
  for (std::size_t i = 0; i < sizes; ++i) {
    steps[i] = resolve_steps(cfg, cfg.n_grid[i], report.theory, report.alpha_upper);
    if (report.theory && report.alpha_upper && report.norms) {
      constants[i] = make_bound_constants(*report.theory, *report.alpha_upper, steps[i], *report.norms);
    }
    rates[i] = resolve_step_size(cfg, constants[i]);
  }
  if (constants.front()) report.constants = constants.front();
  for (std::size_t i = 0; i < sizes; ++i) {
    if (constants[i] && !constants[i]->mu_tilde_positive()) {
      warn("mu_tilde = " + format_double(constants[i]->mu_tilde) + " <= 0 at m = " + std::to_string(steps[i]) +
               "; the bounds do not apply",
           true);
      break;
    }
  }
  if (cfg.estimator.variant == BatchVariant::kOnline && cfg.estimator.beta == 1.0 && constants.front() &&
      constants.front()->mu_tilde_positive() && !(rates.front() * constants.front()->mu_tilde > 2.0)) {
    warn("beta = 1 needs C > 2 / mu_tilde; got C * mu_tilde = " +
             format_double(rates.front() * constants.front()->mu_tilde),
         true);
  }

  if (cfg.strict && report.condition_violated) throw ConditionViolated("strict mode: " + report.warnings.back());

  // replications
  const std::size_t reps = cfg.replications;
  const std::size_t total = sizes * reps;
  std::vector<ReplicationResult> results(total);
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      const std::size_t i = k / reps, r = k % reps;
      try {
        results[k] = run_replication(cfg, kernel, cfg.n_grid[i], r, steps[i], rates[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      std::lock_guard<std::mutex> lock(mu);
      ++done;
      if (progress) progress(done, total);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, total));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  // ordered reduction by (n, replication)
  const double tr = report.fisher_inverse_trace;
  double worst_hits = 0.0;
  for (std::size_t i = 0; i < sizes; ++i) {
    const std::size_t n = cfg.n_grid[i];
    std::vector<double> last(reps), avg(reps), hits(reps);
    std::vector<std::vector<double>> checkpoints(cfg.estimator.checkpoints.size(), std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r) {
      const ReplicationResult& rr = results[i * reps + r];
      last[r] = rr.sq_error_last;
      avg[r] = rr.sq_error_average;
      hits[r] = rr.projection_hit_fraction;
      for (std::size_t c = 0; c < checkpoints.size(); ++c) checkpoints[c][r] = rr.sq_error_checkpoints[c];
    }
    SizeResult s;
    s.n = n;
    s.m = steps[i];
    s.C = rates[i];
    s.mse_last = mean_and_stderr(last);
    s.mse_average = mean_and_stderr(avg);
    s.projection_hits = mean_and_stderr(hits);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      s.mse_checkpoints.emplace_back(cfg.estimator.checkpoints[c], mean_and_stderr(checkpoints[c]));
    }
    const double nd = static_cast<double>(n);
    s.variance_ratio_last = nd * s.mse_last.mean / tr;
    s.variance_ratio_last_stderr = nd * s.mse_last.std_error / tr;
    s.variance_ratio_average = nd * s.mse_average.mean / tr;
    s.variance_ratio_average_stderr = nd * s.mse_average.std_error / tr;
    if (cfg.bounds && cfg.estimator.variant == BatchVariant::kOnline && constants[i] &&
        constants[i]->mu_tilde_positive() && s.C > 0.0) {
      const double delta0 = (cfg.psi0() - cfg.psi_star).squaredNorm();
      s.bound = online_bound_terms(*constants[i], delta0, n, s.C, cfg.estimator.beta);
    }
    worst_hits = std::max(worst_hits, s.projection_hits.mean);
    report.sizes.push_back(std::move(s));
  }
  if (worst_hits > 0.1) {
    warn("more than 10% of updates hit the projection boundary (worst mean fraction " + format_double(worst_hits) +
         ")");
  }

  if (sizes >= 3) {
    auto fit = [&](auto pick) -> std::optional<RateFit> {
      std::vector<std::pair<double, double>> pts;
      for (const SizeResult& s : report.sizes) {
        const double v = pick(s);
        if (!(v > 0.0)) return std::nullopt;
        pts.emplace_back(static_cast<double>(s.n), v);
      }
      return rate_fit(pts);
    };
    report.slope_last = fit([](const SizeResult& s) { return s.mse_last.mean; });
    report.slope_average = fit([](const SizeResult& s) { return s.mse_average.mean; });
    if (!report.slope_last || !report.slope_average) warn("zero mean squared error at some n; slope not fitted");
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace cdlab
