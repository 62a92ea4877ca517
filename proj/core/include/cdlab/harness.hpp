#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cdlab/bounds.hpp"
#include "cdlab/cd.hpp"
#include "cdlab/config.hpp"
#include "cdlab/kernels.hpp"
#include "cdlab/stats.hpp"

namespace cdlab {

// Outcome of one replication at one sample size.
struct ReplicationResult {
  double sq_error_last = 0.0;
  double sq_error_average = 0.0;
  double projection_hit_fraction = 0.0;
  // Squared error of the epoch-end iterate at each configured checkpoint.
  std::vector<double> sq_error_checkpoints;
};

struct SizeResult {
  std::size_t n = 0;
  std::size_t m = 0;
  double C = 0.0;
  MeanEstimate mse_last;
  MeanEstimate mse_average;
  MeanEstimate projection_hits;
  std::vector<std::pair<std::size_t, MeanEstimate>> mse_checkpoints;
  // n * mse / trace(I^{-1}) and its standard error.
  double variance_ratio_last = 0.0;
  double variance_ratio_last_stderr = 0.0;
  double variance_ratio_average = 0.0;
  double variance_ratio_average_stderr = 0.0;
  // Online bound on E||psi_n - psi*||^2, when constants allow it.
  std::optional<OnlineBoundTerms> bound;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string estimator;  // e.g. "online", "full_batch"
  std::vector<SizeResult> sizes;
  std::optional<RateFit> slope_last;
  std::optional<RateFit> slope_average;

  std::optional<TheoryConstants> theory;
  std::optional<AlphaSup> alpha;
  // Value used downstream: alpha + z * std_error, or the configured one.
  std::optional<double> alpha_upper;
  std::optional<LogZNorms> norms;
  // Constants at the m of the first sample size (m may vary with n).
  std::optional<BoundConstants> constants;
  double fisher_inverse_trace = 0.0;

  std::vector<std::string> warnings;
  // Set when mu_tilde <= 0 or another theoretical condition fails.
  bool condition_violated = false;
  double wall_seconds = 0.0;
};

struct ModelConstants {
  TheoryConstants theory;
  LogZNorms norms;
  std::optional<AlphaSup> alpha;
  // alpha + z * std_error, or the configured fixed value.
  double alpha_upper = 0.0;
};

// Theory constants, log-partition norms and alpha_sup as configured.
ModelConstants compute_constants(const ExperimentConfig& cfg, const MarkovKernel& kernel);

// Called after each finished replication with (done, total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

// Runs every (n, replication) pair of the config. Replication r at size n
// draws its data from substream (root_seed, kData, n, r) and its chains
// from (root_seed, kReplication, n, r), so the report does not depend on
// the worker count.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// Trajectory of replication `replication` at size n with m steps and rate C.
Trajectory run_estimator(const ExperimentConfig& cfg, const MarkovKernel& kernel, std::size_t n,
                         std::size_t replication, std::size_t m, double C);

// Single replication reduced to squared errors.
ReplicationResult run_replication(const ExperimentConfig& cfg, const MarkovKernel& kernel, std::size_t n,
                                  std::size_t replication, std::size_t m, double C);

// Resolves the learning rate and step count rules for sample size n.
std::size_t resolve_steps(const ExperimentConfig& cfg, std::size_t n, const std::optional<TheoryConstants>& theory,
                          const std::optional<double>& alpha_upper);
double resolve_step_size(const ExperimentConfig& cfg, const std::optional<BoundConstants>& constants);

}  // namespace cdlab
