#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cdlab/domain.hpp"
#include "cdlab/expfam.hpp"
#include "cdlab/linalg.hpp"
#include "cdlab/rng.hpp"

namespace cdlab {

enum class KernelKind {
  // Random-scan Gibbs: pick a coordinate uniformly and redraw it from its
  // exact conditional. Gaussian mean and Boltzmann models.
  kGibbs,
  // Single-edge-toggle Metropolis-Hastings. ERGM models.
  kMetropolisToggle,
  // Draws directly from p_psi regardless of the current state.
  kExactSampler,
  // Returns the current state. Test fixture for the alpha = 1 extreme.
  kIdentity,
};

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

// Exact one-step transition matrix over an enumerated state space.
struct TransitionMatrix {
  std::vector<Point> states;
  Matrix matrix;  // row-stochastic, S x S

  // matrix^m by repeated squaring.
  Matrix power(std::size_t m) const;
  // || p' K - p' ||_inf.
  double stationarity_residual(const Vector& prob) const;
};

// Markov kernel k_psi with invariant distribution p_psi.
//
// Immutable; a step reads only (psi, the current state, the caller's Rng).
class MarkovKernel {
 public:
  MarkovKernel(std::shared_ptr<const Model> model, KernelKind kind);

  const Model& model() const noexcept { return *model_; }
  std::shared_ptr<const Model> model_ptr() const noexcept { return model_; }
  KernelKind kind() const noexcept { return kind_; }
  std::string name() const;

  // One transition from x.
  Point step(const Vector& psi, const Point& x, Rng& rng) const;

  // m sequential transitions from x (x itself when m == 0).
  Point run(const Vector& psi, const Point& x, std::size_t m, Rng& rng) const;

  // Transitions out of enumerated state `state` as (target state, probability)
  // pairs. Targets may repeat. Requires an enumerable model.
  std::vector<std::pair<std::size_t, double>> transitions(const Vector& psi, std::size_t state) const;

  // Dense one-step matrix. Requires an enumerable model with at most
  // kMaxDenseStates states.
  TransitionMatrix transition_matrix(const Vector& psi) const;

  // (K f)(x) for every enumerated state x, given f tabulated on states().
  // Works for every enumerable size without forming the dense matrix.
  Vector apply(const Vector& psi, const Vector& f_values) const;

  static constexpr std::size_t kMaxDenseStates = 4096;

 private:
  void run_inplace(const Vector& psi, Point& x, std::size_t m, Rng& rng) const;
  const EnumerableModel& enumerable(const char* op) const;

  std::shared_ptr<const Model> model_;
  KernelKind kind_;
  const GaussianMeanModel* gaussian_ = nullptr;
  const BoltzmannModel* boltzmann_ = nullptr;
  const ErgmModel* ergm_ = nullptr;
  const EnumerableModel* enumerable_ = nullptr;
};

// Free-function spellings of the kernel operations.
inline Point kernel_step(const MarkovKernel& k, const Vector& psi, const Point& x, Rng& rng) {
  return k.step(psi, x, rng);
}
inline Point kernel_m_steps(const MarkovKernel& k, const Vector& psi, const Point& x, std::size_t m, Rng& rng) {
  return k.run(psi, x, m, rng);
}

// Vector-valued statistic f(x); alpha is taken componentwise.
using Statistic = std::function<Vector(const Point&)>;

// f(x) = (phi_1..phi_p, phi_i phi_j for i <= j), the functions over which
// the restricted spectral gap is taken.
Statistic moment_statistic(const Model& model);
// Human-readable label of component c of moment_statistic.
std::string moment_statistic_label(std::size_t p, std::size_t c);

enum class AlphaMode { kAuto, kExact, kMonteCarlo };

struct AlphaOptions {
  AlphaMode mode = AlphaMode::kAuto;
  // Monte Carlo: number of x ~ p_psi draws.
  std::size_t outer = 10000;
  // Monte Carlo: independent pairs of one-step moves per draw.
  std::size_t inner = 1;
  std::uint64_t seed = 0;
  // Number of kernel steps composing the operator (1 for alpha itself).
  std::size_t steps = 1;
};

struct AlphaEstimate {
  double value = 0.0;
  double std_error = 0.0;  // zero in exact mode
  std::size_t component = 0;
  bool exact = true;
};

// alpha(f, psi) = ||K f~||_{L2(p_psi)} / ||f~||_{L2(p_psi)} with f~ = f - E f,
// maximised over the components of f. Components with zero variance are
// skipped; if all are degenerate DegenerateStatistic is thrown.
//
// Exact mode sums over the enumerated states. Monte Carlo mode draws
// x ~ p_psi with the exact sampler and two independent kernel moves y, y'
// from x, so that E[f~(y) f~(y') | x] = (K f~)(x)^2; centering is plug-in
// and the standard error comes from the delta method on the ratio.
AlphaEstimate restricted_alpha(const MarkovKernel& kernel, const Vector& psi, const Statistic& f,
                               const AlphaOptions& options = {});

struct AlphaSup {
  double value = 0.0;
  double std_error = 0.0;
  Vector psi;
  std::size_t component = 0;
  std::string label;
  std::size_t grid_points = 0;
  bool exact = true;
};

// Maximum of restricted_alpha(moment_statistic) over ball_grid(domain).
AlphaSup alpha_sup(const MarkovKernel& kernel, const ParamDomain& domain,
                   std::size_t grid_resolution = kDefaultGridResolution, const AlphaOptions& options = {});

}  // namespace cdlab
