#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdlab/cd.hpp"
#include "cdlab/domain.hpp"
#include "cdlab/expfam.hpp"
#include "cdlab/kernels.hpp"

namespace cdlab {

struct ModelSpec {
  std::string family = "gaussian_mean";  // gaussian_mean | boltzmann | ergm
  std::size_t dim = 2;                   // gaussian_mean
  double rho = 0.0;                      // gaussian_mean
  std::size_t units = 3;                 // boltzmann
  std::size_t nodes = 3;                 // ergm
};

std::shared_ptr<const Model> build_model(const ModelSpec& spec);

// How the initial learning rate C is obtained.
struct StepRule {
  enum class Kind {
    kFixed,           // C = value
    kMuTildeMultiple, // C = value / mu_tilde
    kStability,       // C = value * mu_tilde / (4 L^2)
  };
  Kind kind = Kind::kFixed;
  double value = 1.0;
};

// How the number of kernel steps m is obtained.
struct StepsRule {
  enum class Kind {
    kFixed,            // m = value
    kSchedule,         // m = m_schedule(n, beta, alpha upper confidence value)
    kMuTildeFraction,  // smallest m with mu_tilde >= fraction * mu
  };
  Kind kind = Kind::kFixed;
  std::size_t fixed = 1;
  double fraction = 0.9;
};

struct EstimatorSpec {
  BatchVariant variant = BatchVariant::kOnline;
  StepRule step;
  double beta = 1.0;
  StepsRule steps;
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  double burn_in = 0.0;
  // Defaults to the domain center.
  std::optional<Vector> psi0;
  // Offline only: epochs at which the squared error is also recorded.
  std::vector<std::size_t> checkpoints;
};

struct AlphaSpec {
  AlphaMode mode = AlphaMode::kAuto;
  std::size_t outer = 20000;
  std::size_t inner = 1;
  std::size_t grid_resolution = kDefaultGridResolution;
  // alpha used for m and bounds is value + z * std_error.
  double z = 3.0;
  // Skips the estimate entirely when set.
  std::optional<double> fixed;
};

struct OutputSpec {
  std::string out_dir = "out";
  std::string stem = "experiment";
  bool csv = true;
  bool json = true;
  bool svg = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelSpec model;
  Vector psi_star;
  Vector domain_center;
  double domain_radius = 1.0;
  KernelKind kernel = KernelKind::kGibbs;
  EstimatorSpec estimator;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 1;
  std::uint64_t root_seed = 0;
  std::size_t workers = 1;
  AlphaSpec alpha;
  // Evaluate theory constants and bounds even when no rule needs them.
  bool bounds = true;
  std::size_t grid_resolution = kDefaultGridResolution;
  bool strict = false;
  OutputSpec outputs;

  ParamDomain domain() const { return ParamDomain(domain_center, domain_radius); }
  Vector psi0() const { return estimator.psi0 ? *estimator.psi0 : domain_center; }
  // True when some rule needs theory constants or alpha.
  bool needs_constants() const;
  bool needs_alpha() const;
};

// Parses and validates; throws ConfigError with a field path on failure.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Checks cross-field invariants (also run by parse_config).
void validate(const ExperimentConfig& cfg);

}  // namespace cdlab
