#pragma once

#include <cstddef>

#include "cdlab/domain.hpp"
#include "cdlab/expfam.hpp"

namespace cdlab {

// phi_gamma(t) = (t^gamma - 1) / gamma, or log t when gamma == 0 exactly.
double varphi(double gamma, double t);

struct LogZNorms {
  double norm_1 = 0.0;
  double norm_2 = 0.0;
  double norm_3 = 0.0;  // 2 max(norm_1, norm_2)
};

// Sup over ball_grid(domain) of the coordinatewise cumulant expressions
//   norm_1 = sum_i (4 k1^2 k2 + 2 k2^2 + 4 k1 k3 + k4)^{1/2}
//   norm_2 = sum_i (F k2)^{1/4} + 2 |k1| k2^{1/2},
//   F = 15 k2^3 + 10 k3^2 + 15 k2 k4 + k6,
// where k_j is the j-th cumulant of phi_i. Tiny negative radicands from
// rounding are clamped to zero.
LogZNorms logZ_norms(const Model& model, const ParamDomain& domain,
                     std::size_t grid_resolution = kDefaultGridResolution);

struct BoundConstants {
  double mu = 0.0;
  double L = 0.0;
  double sigma = 0.0;
  double C_chi = 0.0;
  double alpha = 0.0;
  std::size_t m = 1;
  double logZ_norm_1 = 0.0;
  double logZ_norm_2 = 0.0;
  double logZ_norm_3 = 0.0;

  // mu - alpha^m sigma C_chi
  double mu_tilde = 0.0;
  // sqrt(L^2 + alpha^{m/2})
  double L_tilde = 0.0;
  // sigma^2 (2 + 2 alpha^{2m}) + alpha^{m/2} norm_3^2 C_chi^2
  double sigma_tilde_sq = 0.0;

  bool mu_tilde_positive() const noexcept { return mu_tilde > 0.0; }
};

BoundConstants make_bound_constants(const TheoryConstants& theory, double alpha, std::size_t m,
                                    const LogZNorms& norms);

// Smallest m >= 1 with mu - alpha^m sigma C_chi >= fraction * mu.
std::size_t steps_for_mu_tilde(const TheoryConstants& theory, double alpha, double fraction);

struct OnlineBoundTerms {
  double transient = 0.0;   // part multiplying (delta0 + sigma~^2 / L~^2)
  double stationary = 0.0;  // noise floor
  double total = 0.0;
};

// Non-asymptotic bound on E||psi_n - psi*||^2 for projected online CD with
// eta_t = C t^{-beta}. Throws ConditionViolated when mu_tilde <= 0.
OnlineBoundTerms online_bound_terms(const BoundConstants& k, double delta0, std::size_t n, double C, double beta);
double online_bound(const BoundConstants& k, double delta0, std::size_t n, double C, double beta);

struct Transients {
  double E1 = 0.0;
  double E2 = 0.0;
};

// Transient factors of the offline bound after T epochs of N updates.
// T = 0 is accepted and gives (e, 1).
Transients offline_transients(double mu_tilde, double L, double C, double beta, std::size_t T, std::size_t N);

// Bound on sqrt(E||psi_{T,N} - psi*||^2) for offline CD with batch size B
// (N = ceil(n / B) updates per epoch) and epoch step C t^{-beta}.
// `sigma_offline` is the aggregate noise level supplied by the caller.
double offline_bound(const BoundConstants& k, double delta00, double sigma_offline, std::size_t n, std::size_t B,
                     std::size_t T, double C, double beta);

}  // namespace cdlab
