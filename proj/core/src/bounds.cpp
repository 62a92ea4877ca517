#include "cdlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cdlab/errors.hpp"

namespace cdlab {

double varphi(double gamma, double t) {
  if (!(t > 0.0)) throw InvalidInput("varphi: t must be > 0");
  if (gamma == 0.0) return std::log(t);
  return std::expm1(gamma * std::log(t)) / gamma;
}

LogZNorms logZ_norms(const Model& model, const ParamDomain& domain, std::size_t grid_resolution) {
  if (model.exactness() == Exactness::kNone) {
    throw UnsupportedOracle("logZ_norms: " + model.name() + " has no exact cumulant oracle");
  }
  if (domain.dim() != model.dim()) throw InvalidInput("logZ_norms: domain dimension does not match the model");

  LogZNorms out;
  for (const Vector& psi : ball_grid(domain, grid_resolution)) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < model.dim(); ++i) {
      const auto k = model.coordinate_cumulants(psi, i);
      const double k1 = k[1], k2 = std::max(0.0, k[2]), k3 = k[3], k4 = k[4], k6 = k[6];
      s1 += std::sqrt(std::max(0.0, 4.0 * k1 * k1 * k2 + 2.0 * k2 * k2 + 4.0 * k1 * k3 + k4));
      const double F = 15.0 * k2 * k2 * k2 + 10.0 * k3 * k3 + 15.0 * k2 * k4 + k6;
      s2 += std::pow(std::max(0.0, F * k2), 0.25) + 2.0 * std::abs(k1) * std::sqrt(k2);
    }
    out.norm_1 = std::max(out.norm_1, s1);
    out.norm_2 = std::max(out.norm_2, s2);
  }
  out.norm_3 = 2.0 * std::max(out.norm_1, out.norm_2);
  return out;
}

BoundConstants make_bound_constants(const TheoryConstants& theory, double alpha, std::size_t m,
                                    const LogZNorms& norms) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidInput("make_bound_constants: alpha must be >= 0");
  BoundConstants k;
  k.mu = theory.mu;
  k.L = theory.L;
  k.sigma = theory.sigma;
  k.C_chi = theory.C_chi;
  k.alpha = alpha;
  k.m = m;
  k.logZ_norm_1 = norms.norm_1;
  k.logZ_norm_2 = norms.norm_2;
  k.logZ_norm_3 = norms.norm_3;

  const double md = static_cast<double>(m);
  const double a_m = std::pow(alpha, md);
  const double a_half = std::pow(alpha, md / 2.0);
  const double a_2m = std::pow(alpha, 2.0 * md);
  k.mu_tilde = k.mu - a_m * k.sigma * k.C_chi;
  k.L_tilde = std::sqrt(k.L * k.L + a_half);
  k.sigma_tilde_sq = k.sigma * k.sigma * (2.0 + 2.0 * a_2m) + a_half * k.logZ_norm_3 * k.logZ_norm_3 * k.C_chi * k.C_chi;
  return k;
}

std::size_t steps_for_mu_tilde(const TheoryConstants& theory, double alpha, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidInput("steps_for_mu_tilde: fraction must lie in [0, 1)");
  if (!(alpha >= 0.0)) throw InvalidInput("steps_for_mu_tilde: alpha must be >= 0");
  if (!(theory.mu > 0.0)) throw ConditionViolated("steps_for_mu_tilde: mu > 0 is required");
  const double slack = (1.0 - fraction) * theory.mu;
  const double scale = theory.sigma * theory.C_chi;
  if (scale <= slack || alpha == 0.0) return 1;
  if (alpha >= 1.0) {
    throw ConditionViolated("steps_for_mu_tilde: alpha >= 1, so alpha^m sigma C_chi never drops below (1 - fraction) mu");
  }
  // alpha^m <= slack / scale
  const double m = std::ceil(std::log(slack / scale) / std::log(alpha));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

namespace {

void require_mu_tilde(const BoundConstants& k, const char* op) {
  if (!(k.mu_tilde > 0.0)) {
    throw ConditionViolated(std::string(op) + ": mu_tilde = mu - alpha^m sigma C_chi = " + std::to_string(k.mu_tilde) +
                            " is not > 0");
  }
}

void check_step(double C, double beta, const char* op) {
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidInput(std::string(op) + ": C must be > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidInput(std::string(op) + ": beta must lie in [0, 1]");
}

}  // namespace

OnlineBoundTerms online_bound_terms(const BoundConstants& k, double delta0, std::size_t n, double C, double beta) {
  require_mu_tilde(k, "online_bound");
  check_step(C, beta, "online_bound");
  if (n < 1) throw InvalidInput("online_bound: n must be >= 1");
  if (!(delta0 >= 0.0)) throw InvalidInput("online_bound: delta0 must be >= 0");

  const double nd = static_cast<double>(n);
  const double start = delta0 + k.sigma_tilde_sq / (k.L_tilde * k.L_tilde);
  OnlineBoundTerms out;
  if (beta == 1.0) {
    const double log_factor = 2.0 * k.L_tilde * k.L_tilde * C * C - k.mu_tilde * C * std::log(nd);
    out.transient = std::exp(log_factor) * start;
    const double g = k.mu_tilde * C / 2.0;
    out.stationary = 2.0 * k.sigma_tilde_sq * C * C * varphi(g - 1.0, nd) * std::pow(nd, -g);
  } else {
    const double log_factor =
        4.0 * k.L_tilde * C * C * varphi(1.0 - 2.0 * beta, nd) - k.mu_tilde * C * std::pow(nd, 1.0 - beta) / 4.0;
    out.transient = 2.0 * std::exp(log_factor) * start;
    out.stationary = 4.0 * C * k.sigma_tilde_sq / (k.mu_tilde * std::pow(nd, beta));
  }
  out.total = out.transient + out.stationary;
  return out;
}

double online_bound(const BoundConstants& k, double delta0, std::size_t n, double C, double beta) {
  return online_bound_terms(k, delta0, n, C, beta).total;
}

Transients offline_transients(double mu_tilde, double L, double C, double beta, std::size_t T, std::size_t N) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidInput("offline_transients: beta must lie in [0, 1]");
  const double t1 = static_cast<double>(T) + 1.0;
  const double Nd = static_cast<double>(N);
  const double a = Nd * mu_tilde * C * varphi(1.0 - beta, t1);
  const double b = Nd * L * L * C * C * varphi(1.0 - 2.0 * beta, t1);
  return {std::exp(1.0 - a + b / 2.0), std::exp(-a / 2.0 + 2.0 * b)};
}

double offline_bound(const BoundConstants& k, double delta00, double sigma_offline, std::size_t n, std::size_t B,
                     std::size_t T, double C, double beta) {
  require_mu_tilde(k, "offline_bound");
  check_step(C, beta, "offline_bound");
  if (n < 1 || B < 1 || B > n) throw InvalidInput("offline_bound: need 1 <= B <= n");
  if (T < 1) throw InvalidInput("offline_bound: T must be >= 1");
  if (!(delta00 >= 0.0) || !(sigma_offline >= 0.0)) {
    throw InvalidInput("offline_bound: delta00 and sigma_offline must be >= 0");
  }

  const std::size_t N = (n + B - 1) / B;
  const double Nd = static_cast<double>(N);
  const double t1 = static_cast<double>(T) + 1.0;
  const double muC = k.mu_tilde * C;
  const double L2C2 = k.L * k.L * C * C;
  const Transients e = offline_transients(k.mu_tilde, k.L, C, beta, T, N);

  double noise = 0.0;
  if (beta == 0.5) {
    noise = 4.0 * std::exp(muC * Nd / std::sqrt(t1)) / muC +
            2.0 * Nd * std::pow(1.0 + muC, Nd - 1.0) * varphi(0.5 - L2C2 * Nd, t1) * e.E2;
  } else if (beta == 1.0) {
    noise = 4.0 / muC + 3.0 * Nd * std::pow(1.0 + L2C2 / 2.0, Nd - 1.0) * std::exp(2.0 * L2C2 * Nd) * std::log(t1) /
                            std::pow(t1, muC * Nd / 2.0);
  } else {
    noise = std::pow(2.0, 2.0 * beta + 1.0) / muC * std::exp(muC * Nd / (2.0 * (1.0 - beta) * std::pow(t1, beta))) +
            std::pow(3.0, beta) * std::pow(1.0 + muC, Nd - 1.0) * std::pow(t1 + 1.0, beta) / L2C2 * e.E2;
  }
  // keep 0 * inf out of the sum
  const double head = delta00 == 0.0 ? 0.0 : e.E1 * std::sqrt(delta00);
  return head + (sigma_offline == 0.0 ? 0.0 : C * sigma_offline * noise);
}

}  // namespace cdlab
