#include <gtest/gtest.h>

#include <cmath>

#include "cdlab/bounds.hpp"
#include "cdlab/errors.hpp"

using namespace cdlab;

namespace {

BoundConstants simple_constants(double mu_tilde, double L_tilde, double sigma_tilde_sq, double L = 1.0) {
  BoundConstants k;
  k.mu = mu_tilde;
  k.L = L;
  k.mu_tilde = mu_tilde;
  k.L_tilde = L_tilde;
  k.sigma_tilde_sq = sigma_tilde_sq;
  return k;
}

}  // namespace

TEST(Varphi, Examples) {
  EXPECT_DOUBLE_EQ(varphi(0.0, std::exp(2.0)), 2.0);
  EXPECT_DOUBLE_EQ(varphi(1.0, 5.0), 4.0);
  EXPECT_NEAR(varphi(-1.0, 4.0), 0.75, 1e-15);
  EXPECT_NEAR(varphi(0.5, 9.0), 4.0, 1e-14);
  EXPECT_EQ(varphi(0.3, 1.0), 0.0);
  EXPECT_THROW(varphi(1.0, 0.0), InvalidInput);
}

TEST(Varphi, ContinuousAtZeroAndIncreasing) {
  for (double t : {1.5, 10.0, 1e6}) {
    EXPECT_NEAR(varphi(1e-9, t), std::log(t), 1e-6 * std::max(1.0, std::log(t)));
    EXPECT_NEAR(varphi(-1e-9, t), std::log(t), 1e-6 * std::max(1.0, std::log(t)));
  }
  for (double g : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    double prev = -INFINITY;
    for (double t = 1.0; t < 1e4; t *= 1.7) {
      const double x = varphi(g, t);
      EXPECT_GT(x, prev);
      prev = x;
    }
  }
}

TEST(Varphi, ElementaryBounds) {
  // phi_g(t) <= t^g / g for g > 0, phi_g(t) <= 1 / |g| for g < 0,
  // and phi_g(t) >= log t >= phi_{-g}(t) for g >= 0
  for (double t = 1.0; t < 1e6; t *= 3.1) {
    for (double g : {0.1, 0.5, 1.0, 2.0}) {
      EXPECT_LE(varphi(g, t), std::pow(t, g) / g);
      EXPECT_LE(varphi(-g, t), 1.0 / g);
      EXPECT_GE(varphi(g, t), std::log(t) - 1e-12);
      EXPECT_LE(varphi(-g, t), std::log(t) + 1e-12);
    }
  }
}

TEST(Varphi, IncreasingOnRandomPairs) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double g = -2 + 4 * rng.uniform();
    double a = 100 * rng.uniform(), b = 100 * rng.uniform();
    if (a == b || a == 0 || b == 0) continue;
    if (a > b) std::swap(a, b);
    EXPECT_LT(varphi(g, a), varphi(g, b));
  }
}

TEST(Varphi, SandwichesPartialSums) {
  // phi_{1-b}(t2+1) - phi_{1-b}(t1) <= sum_{t1..t2} t^-b <= 2 (same difference)
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double beta = rng.uniform();
    std::size_t t1 = 1 + rng.index(500), t2 = 1 + rng.index(500);
    if (t1 > t2) std::swap(t1, t2);
    double sum = 0;
    for (std::size_t t = t1; t <= t2; ++t) sum += std::pow(static_cast<double>(t), -beta);
    const double diff = varphi(1 - beta, static_cast<double>(t2 + 1)) - varphi(1 - beta, static_cast<double>(t1));
    EXPECT_LE(diff, sum * (1 + 1e-12));
    EXPECT_LE(sum, 2 * diff * (1 + 1e-12));
  }
}

TEST(LogZNorms, GaussianMatchesDirectScan) {
  // independent coordinates: k1 = psi_i, k2 = 1, higher cumulants vanish
  const GaussianMeanModel g(2, 0.0);
  const double R = 1.5;
  const ParamDomain ball(Vector::Zero(2), R);
  const auto norms = logZ_norms(g, ball, 9);
  double n1 = 0, n2 = 0;
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) {
      const double x = R * (-1 + a * 0.25), y = R * (-1 + b * 0.25);
      if (x * x + y * y > R * R * (1 + 1e-12)) continue;
      n1 = std::max(n1, std::sqrt(4 * x * x + 2) + std::sqrt(4 * y * y + 2));
      n2 = std::max(n2, 2 * std::pow(15.0, 0.25) + 2 * std::abs(x) + 2 * std::abs(y));
    }
  EXPECT_NEAR(norms.norm_1, n1, 1e-12);
  EXPECT_NEAR(norms.norm_2, n2, 1e-12);
  EXPECT_DOUBLE_EQ(norms.norm_3, 2 * std::max(norms.norm_1, norms.norm_2));
}

TEST(LogZNorms, GaussianAtCenterOnlyClosedForm) {
  // a tiny ball around 0 leaves k1 ~ 0
  const GaussianMeanModel g(3, 0.0);
  const auto norms = logZ_norms(g, ParamDomain(Vector::Zero(3), 1e-9), 3);
  EXPECT_NEAR(norms.norm_1, 3 * std::sqrt(2.0), 1e-7);
  EXPECT_NEAR(norms.norm_2, 3 * std::pow(15.0, 0.25), 1e-7);
}

TEST(LogZNorms, EnumerableFiniteAndReproducible) {
  const BoltzmannModel b(3);
  const ParamDomain ball(Vector::Zero(6), 0.5);
  const auto a = logZ_norms(b, ball, 5);
  const auto c = logZ_norms(b, ball, 5);
  EXPECT_TRUE(std::isfinite(a.norm_1));
  EXPECT_TRUE(std::isfinite(a.norm_2));
  EXPECT_GT(a.norm_1, 0.0);
  EXPECT_EQ(a.norm_1, c.norm_1);
  EXPECT_EQ(a.norm_2, c.norm_2);
  EXPECT_EQ(a.norm_3, 2 * std::max(a.norm_1, a.norm_2));
  EXPECT_THROW(logZ_norms(BoltzmannModel(13), ParamDomain(Vector::Zero(91), 1.0), 3), UnsupportedOracle);
}

TEST(BoundConstants, Formulas) {
  TheoryConstants t;
  t.mu = 1.0;
  t.L = 2.0;
  t.sigma = 1.5;
  t.C_chi = 0.8;
  const LogZNorms norms{3.0, 4.0, 8.0};
  const auto k = make_bound_constants(t, 0.5, 2, norms);
  EXPECT_DOUBLE_EQ(k.mu_tilde, 1.0 - 0.25 * 1.5 * 0.8);
  EXPECT_DOUBLE_EQ(k.L_tilde, std::sqrt(4.0 + 0.5));
  EXPECT_DOUBLE_EQ(k.sigma_tilde_sq, 2.25 * (2 + 2 * 0.0625) + 0.5 * 64 * 0.64);
  EXPECT_TRUE(k.mu_tilde_positive());
}

TEST(BoundConstants, LargeStepLimits) {
  TheoryConstants t;
  t.mu = 0.7;
  t.L = 1.3;
  t.sigma = 2.0;
  t.C_chi = 5.0;
  const auto k = make_bound_constants(t, 0.5, 200, LogZNorms{10, 10, 20});
  EXPECT_NEAR(k.mu_tilde, t.mu, 1e-15);
  EXPECT_NEAR(k.L_tilde, t.L, 1e-15);
  EXPECT_NEAR(k.sigma_tilde_sq, 2 * t.sigma * t.sigma, 1e-12);
}

TEST(StepsForMuTilde, SmallestSufficientM) {
  TheoryConstants t;
  t.mu = 1.0;
  t.sigma = 1.0;
  t.C_chi = 1.0;
  EXPECT_EQ(steps_for_mu_tilde(t, 0.5, 0.9), 4u);  // 0.5^4 <= 0.1 < 0.5^3
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    t.mu = 0.1 + rng.uniform();
    t.sigma = 0.1 + 3 * rng.uniform();
    t.C_chi = 0.1 + 3 * rng.uniform();
    const double alpha = 0.05 + 0.9 * rng.uniform();
    const double frac = 0.95 * rng.uniform();
    const std::size_t m = steps_for_mu_tilde(t, alpha, frac);
    const auto mu_tilde = [&](std::size_t s) { return t.mu - std::pow(alpha, static_cast<double>(s)) * t.sigma * t.C_chi; };
    EXPECT_GE(mu_tilde(m), frac * t.mu - 1e-12);
    if (m > 1) {
      EXPECT_LT(mu_tilde(m - 1), frac * t.mu);
    }
  }
  t.mu = 1.0;
  EXPECT_THROW(steps_for_mu_tilde(t, 1.0, 0.9), ConditionViolated);
}

TEST(OnlineBound, SubstitutionBetaBelowOne) {
  const auto k = simple_constants(0.5, 1.2, 2.0);
  const double C = 0.8, beta = 0.6;
  const std::size_t n = 1000;
  const double nd = 1000.0;
  const double phi = (std::pow(nd, 1 - 2 * beta) - 1) / (1 - 2 * beta);
  const double transient =
      2 * std::exp(4 * 1.2 * C * C * phi - 0.5 * C * std::pow(nd, 1 - beta) / 4) * (0.0 + 2.0 / (1.2 * 1.2));
  const double stationary = 4 * C * 2.0 / (0.5 * std::pow(nd, beta));
  const auto terms = online_bound_terms(k, 0.0, n, C, beta);
  EXPECT_NEAR(terms.transient, transient, 1e-12 * transient);
  EXPECT_NEAR(terms.stationary, stationary, 1e-14);
  EXPECT_DOUBLE_EQ(online_bound(k, 0.0, n, C, beta), terms.transient + terms.stationary);
}

TEST(OnlineBound, SubstitutionBetaOne) {
  const auto k = simple_constants(0.5, 1.2, 2.0);
  const double C = 10.0;
  const std::size_t n = 5000;
  const double nd = 5000.0;
  const double g = 0.5 * C / 2;  // 2.5
  const double transient = std::exp(2 * 1.44 * C * C - 0.5 * C * std::log(nd)) * (0.3 + 2.0 / 1.44);
  const double stationary = 2 * 2.0 * C * C * (std::pow(nd, g - 1) - 1) / (g - 1) * std::pow(nd, -g);
  const auto terms = online_bound_terms(k, 0.3, n, C, 1.0);
  EXPECT_NEAR(terms.transient, transient, 1e-10 * transient);
  EXPECT_NEAR(terms.stationary, stationary, 1e-12 * stationary);
}

TEST(OnlineBound, StationaryTermScaling) {
  const auto k = simple_constants(0.4, 1.0, 3.0);
  for (double beta : {0.55, 0.7, 0.9}) {
    const double a = online_bound_terms(k, 0.1, 4096, 0.5, beta).stationary;
    const double b = online_bound_terms(k, 0.1, 8192, 0.5, beta).stationary;
    EXPECT_NEAR(b / a, std::pow(2.0, -beta), 1e-12);
  }
}

TEST(OnlineBound, DecreasingInN) {
  const auto k = simple_constants(1.0, 1.0, 1.0);
  for (double beta : {0.6, 0.75, 0.9}) {
    double prev = INFINITY;
    for (int e = 8; e <= 20; ++e) {
      const double b = online_bound(k, 1.0, std::size_t{1} << e, 0.5, beta);
      EXPECT_LT(b, prev) << "beta=" << beta << " n=2^" << e;
      prev = b;
    }
  }
}

TEST(OnlineBound, PreconditionErrors) {
  const auto bad = simple_constants(-0.1, 1.0, 1.0);
  EXPECT_THROW(online_bound(bad, 0.0, 100, 1.0, 0.7), ConditionViolated);
  const auto k = simple_constants(0.5, 1.0, 1.0);
  EXPECT_THROW(online_bound(k, 0.0, 100, 0.0, 0.7), InvalidInput);
  EXPECT_THROW(online_bound(k, 0.0, 100, 1.0, 1.2), InvalidInput);
  EXPECT_THROW(online_bound(k, -1.0, 100, 1.0, 0.7), InvalidInput);
}

TEST(OfflineTransients, Examples) {
  const auto zero = offline_transients(0.5, 1.0, 0.3, 0.7, 0, 10);
  EXPECT_NEAR(zero.E1, std::exp(1.0), 1e-15);
  EXPECT_NEAR(zero.E2, 1.0, 1e-15);

  // constant step: phi_1(T + 1) = T
  const double mu = 0.5, L = 1.0, C = 0.3;
  const std::size_t T = 7, N = 4;
  const double a = N * mu * C * T, b = N * L * L * C * C * T;
  const auto t = offline_transients(mu, L, C, 0.0, T, N);
  EXPECT_NEAR(t.E1, std::exp(1 - a + b / 2), 1e-12);
  EXPECT_NEAR(t.E2, std::exp(-a / 2 + 2 * b), 1e-12);
}

TEST(OfflineTransients, DecreasingInEpochs) {
  // mu C large relative to L^2 C^2 makes both exponents fall with T
  for (double beta : {0.0, 0.5, 0.8, 1.0}) {
    double p1 = INFINITY, p2 = INFINITY;
    for (std::size_t T = 1; T <= 200; ++T) {
      const auto t = offline_transients(0.8, 0.5, 0.1, beta, T, 3);
      EXPECT_LT(t.E1, p1);
      EXPECT_LT(t.E2, p2);
      p1 = t.E1;
      p2 = t.E2;
    }
  }
}

TEST(OfflineBound, ZeroWhenStartAndNoiseVanish) {
  const auto k = simple_constants(0.5, 1.0, 1.0);
  EXPECT_EQ(offline_bound(k, 0.0, 0.0, 100, 10, 5, 0.2, 0.7), 0.0);
}

TEST(OfflineBound, SubstitutionBetaOneSingleBatch) {
  const auto k = simple_constants(1.0, 1.0, 1.0, 1.0);
  const double C = 3.0, delta00 = 0.25, s = 0.1;
  const std::size_t T = 9, n = 50;
  const double t1 = 10.0, muC = 3.0, L2C2 = 9.0;
  const double a = muC * std::log(t1), b = L2C2 * (1 - 1 / t1);
  const double E1 = std::exp(1 - a + b / 2);
  const double noise = 4 / muC + 3 * std::exp(2 * L2C2) * std::log(t1) / std::pow(t1, muC / 2);
  const double expect = E1 * 0.5 + C * s * noise;
  EXPECT_NEAR(offline_bound(k, delta00, s, n, n, T, C, 1.0), expect, 1e-12 * expect);
}

TEST(OfflineBound, DecreasingInEpochs) {
  const auto k = simple_constants(1.0, 1.0, 1.0, 1.0);
  double prev = INFINITY;
  for (std::size_t T = 1; T <= 500; ++T) {
    const double b = offline_bound(k, 1.0, 0.1, 64, 64, T, 3.0, 1.0);
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(OfflineBound, PreconditionErrors) {
  const auto k = simple_constants(0.5, 1.0, 1.0);
  EXPECT_THROW(offline_bound(k, 1.0, 1.0, 10, 11, 5, 0.2, 0.7), InvalidInput);
  EXPECT_THROW(offline_bound(k, 1.0, 1.0, 10, 5, 0, 0.2, 0.7), InvalidInput);
  EXPECT_THROW(offline_bound(simple_constants(0.0, 1.0, 1.0), 1.0, 1.0, 10, 5, 5, 0.2, 0.7), ConditionViolated);
}
