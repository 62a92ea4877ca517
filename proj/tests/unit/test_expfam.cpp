#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "cdlab/errors.hpp"
#include "cdlab/expfam.hpp"
#include "oracles.hpp"

using namespace cdlab;

namespace {

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

Vector random_vector(Rng& rng, std::size_t p, double scale) {
  Vector out(static_cast<Eigen::Index>(p));
  for (auto& x : out) x = scale * (2 * rng.uniform() - 1);
  return out;
}

std::vector<std::shared_ptr<const Model>> all_models() {
  return {std::make_shared<GaussianMeanModel>(2, 0.0), std::make_shared<GaussianMeanModel>(3, 0.4),
          std::make_shared<BoltzmannModel>(2), std::make_shared<BoltzmannModel>(3), std::make_shared<ErgmModel>(3),
          std::make_shared<ErgmModel>(4)};
}

}  // namespace

TEST(Phi, Examples) {
  EXPECT_EQ(GaussianMeanModel(2, 0.0).phi(v({1.0, -2.0})), v({1.0, -2.0}));
  EXPECT_EQ(BoltzmannModel(3).phi(v({1, 0, 1})), v({1, 0, 1, 0, 1, 0}));
  EXPECT_EQ(ErgmModel(3).phi(v({1, 1, 1})), v({3, 1}));
  EXPECT_EQ(ErgmModel(3).phi(v({1, 1, 0})), v({2, 0}));
}

TEST(Phi, RejectsPointsOutsideSampleSpace) {
  EXPECT_THROW(GaussianMeanModel(2, 0.0).phi(v({1.0})), InvalidInput);
  EXPECT_THROW(BoltzmannModel(2).phi(v({1, 2})), InvalidInput);
  EXPECT_THROW(ErgmModel(3).phi(v({1, 0})), InvalidInput);
  EXPECT_THROW(GaussianMeanModel(2, 0.0).phi(v({NAN, 0})), InvalidInput);
}

TEST(Phi, MatchesHandBuiltStatistics) {
  const BoltzmannModel b(4);
  for (std::size_t s = 0; s < 16; ++s) {
    const auto x = oracle::bits(s, 4);
    Vector pt(4);
    for (int i = 0; i < 4; ++i) pt[i] = x[static_cast<std::size_t>(i)];
    EXPECT_EQ(b.phi(pt), oracle::boltzmann_phi(x));
  }
  const ErgmModel g(4);
  for (std::size_t s = 0; s < 64; ++s) {
    Vector pt(6);
    for (int e = 0; e < 6; ++e) pt[e] = static_cast<double>((s >> e) & 1u);
    EXPECT_EQ(g.phi(pt), oracle::ergm_phi(s, 4));
  }
}

TEST(Model, RejectsInvalidConstruction) {
  EXPECT_THROW(GaussianMeanModel(2, 1.0), InvalidInput);
  EXPECT_THROW(GaussianMeanModel(3, -0.6), InvalidInput);  // not positive definite for d = 3
  EXPECT_THROW(GaussianMeanModel(0, 0.0), InvalidInput);
  EXPECT_THROW(BoltzmannModel(0), InvalidInput);
  EXPECT_THROW(ErgmModel(1), InvalidInput);
}

TEST(Model, LargeInstancesAreNotExact) {
  const BoltzmannModel big(13);
  EXPECT_EQ(big.exactness(), Exactness::kNone);
  EXPECT_THROW(big.log_partition(Vector::Zero(static_cast<Eigen::Index>(big.dim()))), UnsupportedOracle);
  const ErgmModel graph(7);
  EXPECT_EQ(graph.exactness(), Exactness::kNone);
  EXPECT_THROW(graph.mean_statistic(Vector::Zero(2)), UnsupportedOracle);
  EXPECT_EQ(BoltzmannModel(12).exactness(), Exactness::kEnumerable);
  EXPECT_EQ(ErgmModel(6).exactness(), Exactness::kEnumerable);
}

TEST(LogPartition, Examples) {
  const GaussianMeanModel g(2, 0.0);
  EXPECT_DOUBLE_EQ(g.log_partition(v({0, 0})), 0.0);
  EXPECT_NEAR(g.log_partition(v({1, 1})), 1.0, 1e-15);
  EXPECT_NEAR(BoltzmannModel(2).log_partition(Vector::Zero(3)), std::log(4.0), 1e-15);
  EXPECT_NEAR(BoltzmannModel(5).log_partition(Vector::Zero(15)), 5 * std::log(2.0), 1e-13);
}

TEST(LogPartition, GaussianMatchesQuadrature) {
  for (double rho : {0.0, 0.5, -0.3}) {
    const GaussianMeanModel g(2, rho);
    for (const Vector& psi : {v({1, 1}), v({0.3, -0.7}), v({-1.2, 0.4})}) {
      EXPECT_NEAR(g.log_partition(psi), oracle::gaussian_log_z_quadrature(g.covariance(), psi), 1e-8)
          << "rho=" << rho;
    }
  }
}

TEST(LogPartition, EnumerableMatchesBruteForce) {
  Rng rng(11);
  const BoltzmannModel b(3);
  const ErgmModel g(4);
  const auto bo = oracle::boltzmann(3);
  const auto go = oracle::ergm(4);
  for (int t = 0; t < 20; ++t) {
    const Vector pb = random_vector(rng, 6, 1.5);
    const Vector pg = random_vector(rng, 2, 1.0);
    EXPECT_NEAR(b.log_partition(pb), bo.log_z(pb), 1e-12);
    EXPECT_NEAR(g.log_partition(pg), go.log_z(pg), 1e-12);
  }
}

TEST(LogPartition, BoltzmannRelabelingInvariance) {
  // permuting units permutes singles and pairs consistently
  const std::size_t d = 4;
  const BoltzmannModel b(d);
  Rng rng(5);
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    const Vector psi = random_vector(rng, b.dim(), 1.0);
    Vector permuted(psi.size());
    for (std::size_t i = 0; i < d; ++i) permuted[static_cast<Eigen::Index>(perm[i])] = psi[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        const std::size_t a = std::min(perm[i], perm[j]), c = std::max(perm[i], perm[j]);
        permuted[static_cast<Eigen::Index>(b.pair_slot(a, c))] = psi[static_cast<Eigen::Index>(b.pair_slot(i, j))];
      }
    EXPECT_NEAR(b.log_partition(psi), b.log_partition(permuted), 1e-12);
  }
}

TEST(MeanStatistic, Examples) {
  const GaussianMeanModel g(2, 0.0);
  const Vector m = g.mean_statistic(v({0.3, -0.7}));
  EXPECT_NEAR(m[0], 0.3, 1e-15);
  EXPECT_NEAR(m[1], -0.7, 1e-15);
  const Vector mb = BoltzmannModel(2).mean_statistic(Vector::Zero(3));
  EXPECT_NEAR(mb[0], 0.5, 1e-15);
  EXPECT_NEAR(mb[1], 0.5, 1e-15);
  EXPECT_NEAR(mb[2], 0.25, 1e-15);
}

TEST(MeanStatistic, MatchesFiniteDifferences) {
  Rng rng(3);
  for (const auto& model : all_models()) {
    const auto f = [&](const Vector& psi) { return model->log_partition(psi); };
    for (int t = 0; t < 100; ++t) {
      const Vector psi = random_vector(rng, model->dim(), 1.0);
      const Vector fd = oracle::fd_gradient(f, psi);
      const Vector mean = model->mean_statistic(psi);
      EXPECT_LE((mean - fd).lpNorm<Eigen::Infinity>(), 1e-5) << model->name();
      EXPECT_LE((mean - fd).lpNorm<Eigen::Infinity>(), 1e-6 * std::max(1.0, mean.lpNorm<Eigen::Infinity>()))
          << model->name();
    }
  }
}

TEST(Fisher, Examples) {
  const Matrix I = GaussianMeanModel(2, 0.0).fisher_information(v({0.4, 2.0}));
  EXPECT_TRUE(I.isApprox(Matrix::Identity(2, 2), 1e-15));

  Matrix expected(3, 3);
  expected << 0.25, 0, 0.125, 0, 0.25, 0.125, 0.125, 0.125, 0.1875;
  const Matrix F = BoltzmannModel(2).fisher_information(Vector::Zero(3));
  EXPECT_LE((F - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fisher, MatchesFiniteDifferenceHessianAndEnumeration) {
  Rng rng(4);
  for (const auto& model : all_models()) {
    const auto f = [&](const Vector& psi) { return model->log_partition(psi); };
    for (int t = 0; t < 10; ++t) {
      const Vector psi = random_vector(rng, model->dim(), 1.0);
      const Matrix F = model->fisher_information(psi);
      EXPECT_LE((F - oracle::fd_hessian(f, psi)).cwiseAbs().maxCoeff(), 1e-5) << model->name();
      EXPECT_LE((F - F.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      Eigen::SelfAdjointEigenSolver<Matrix> es(F);
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << model->name();
    }
  }
  const auto bo = oracle::boltzmann(3);
  const Vector psi = random_vector(rng, 6, 1.0);
  EXPECT_LE((BoltzmannModel(3).fisher_information(psi) - bo.cov(psi)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Cumulants, GaussianClosedForm) {
  const GaussianMeanModel g(2, 0.5);
  const Vector psi = v({0.3, -0.2});
  const auto k = g.coordinate_cumulants(psi, 0);
  EXPECT_NEAR(k[1], 0.3 - 0.1, 1e-15);
  EXPECT_NEAR(k[2], 1.0, 1e-15);
  for (int j = 3; j <= 6; ++j) EXPECT_EQ(k[j], 0.0);
}

TEST(Cumulants, EnumerableMatchCentralMomentFormulas) {
  Rng rng(8);
  const BoltzmannModel b(3);
  const auto bo = oracle::boltzmann(3);
  for (int t = 0; t < 5; ++t) {
    const Vector psi = random_vector(rng, 6, 1.0);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto m = bo.central_moments(psi, i);
      const auto k = b.coordinate_cumulants(psi, i);
      EXPECT_NEAR(k[1], m[1], 1e-13);
      EXPECT_NEAR(k[2], m[2], 1e-13);
      EXPECT_NEAR(k[3], m[3], 1e-13);
      EXPECT_NEAR(k[4], m[4] - 3 * m[2] * m[2], 1e-13);
      EXPECT_NEAR(k[5], m[5] - 10 * m[3] * m[2], 1e-13);
      EXPECT_NEAR(k[6], m[6] - 15 * m[4] * m[2] - 10 * m[3] * m[3] + 30 * m[2] * m[2] * m[2], 1e-13);
    }
  }
}

TEST(Cumulants, SecondAndThirdMatchDerivativesOfLogPartition) {
  // k2 and k3 are pure partial derivatives of log Z along one axis
  const ErgmModel g(4);
  const Vector psi = v({-0.3, 0.2});
  const double h = 1e-3;
  for (std::size_t i = 0; i < 2; ++i) {
    Vector e = Vector::Zero(2);
    e[static_cast<Eigen::Index>(i)] = h;
    const double f0 = g.log_partition(psi), fp = g.log_partition(psi + e), fm = g.log_partition(psi - e);
    const double fpp = g.log_partition(psi + 2 * e), fmm = g.log_partition(psi - 2 * e);
    const auto k = g.coordinate_cumulants(psi, i);
    EXPECT_NEAR(k[2], (fp - 2 * f0 + fm) / (h * h), 1e-5);
    EXPECT_NEAR(k[3], (fpp - 2 * fp + 2 * fm - fmm) / (2 * h * h * h), 1e-3);
  }
}

TEST(Chi2, Examples) {
  const GaussianMeanModel g(2, 0.0);
  const Vector star = v({0.2, 0.1});
  EXPECT_EQ(chi2_divergence(g, star, star).value, 0.0);
  const auto r = chi2_divergence(g, star, star + v({0.6, 0.8}));
  EXPECT_NEAR(r.value, std::exp(1.0) - 1.0, 1e-12);
  EXPECT_FALSE(r.overflow);
}

TEST(Chi2, GaussianCorrelatedClosedForm) {
  const GaussianMeanModel g(2, 0.5);
  const Vector star = v({0.3, -0.2}), psi = v({-0.5, 0.9});
  const Vector d = psi - star;
  EXPECT_NEAR(chi2_divergence(g, star, psi).value, std::expm1(d.dot(g.covariance() * d)), 1e-12);
}

TEST(Chi2, EnumerableMatchesBruteForce) {
  Rng rng(12);
  const BoltzmannModel b(2);
  const auto bo = oracle::boltzmann(2);
  for (int t = 0; t < 50; ++t) {
    const Vector star = random_vector(rng, 3, 1.5), psi = random_vector(rng, 3, 1.5);
    EXPECT_NEAR(chi2_divergence(b, star, psi).value, bo.chi2(star, psi), 1e-10);
    EXPECT_GT(chi2_divergence(b, star, psi).value, 0.0);
  }
}

TEST(Chi2, OverflowIsFlagged) {
  const GaussianMeanModel g(2, 0.0);
  const auto r = chi2_divergence(g, v({0, 0}), v({30, 30}));
  EXPECT_TRUE(r.overflow);
  EXPECT_TRUE(std::isinf(r.value));
}

TEST(TheoryConstants, GaussianIdentity) {
  const GaussianMeanModel g(2, 0.0);
  const ParamDomain ball(Vector::Zero(2), 1.5);
  const auto c = theory_constants(g, ball, v({0.1, 0.2}), 9);
  EXPECT_NEAR(c.mu, 1.0, 1e-12);
  EXPECT_NEAR(c.L, 1.0, 1e-12);
  EXPECT_NEAR(c.sigma, std::sqrt(2.0), 1e-12);
}

TEST(TheoryConstants, GaussianCchiAttainedOnBoundary) {
  const GaussianMeanModel g(2, 0.0);
  const Vector star = v({0.3, -0.2});
  const double R = 1.2;
  const ParamDomain ball(star, R);
  const auto c = theory_constants(g, ball, star, 9);
  // the lattice touches the sphere at the axis points, distance exactly R
  EXPECT_NEAR(c.C_chi, std::sqrt(std::expm1(R * R)) / R, 1e-12);
}

TEST(TheoryConstants, CorrelatedGaussianMatchesDirectGridScan) {
  const GaussianMeanModel g(2, 0.5);
  const ParamDomain ball(Vector::Zero(2), 2.0);
  const Vector star = v({0.3, -0.2});
  const auto c = theory_constants(g, ball, star, 9);
  EXPECT_NEAR(c.mu, 0.5, 1e-12);
  EXPECT_NEAR(c.L, 1.5, 1e-12);
  double best = 0;
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) {
      const Vector u = v({-1 + a * 0.25, -1 + b * 0.25});
      if (u.squaredNorm() > 1 + 1e-12) continue;
      const Vector d = 2.0 * u - star;
      if (d.norm() == 0) continue;
      best = std::max(best, std::sqrt(std::expm1(d.dot(g.covariance() * d))) / d.norm());
    }
  EXPECT_NEAR(c.C_chi, best, 1e-10);
}

TEST(TheoryConstants, EnumerableFiniteAndReproducible) {
  const BoltzmannModel b(2);
  const ParamDomain ball(Vector::Zero(3), 1.0);
  const auto c1 = theory_constants(b, ball, v({0.1, -0.1, 0.2}), 9);
  const auto c2 = theory_constants(b, ball, v({0.1, -0.1, 0.2}), 9);
  for (double x : {c1.mu, c1.L, c1.sigma, c1.C_chi}) {
    EXPECT_TRUE(std::isfinite(x));
    EXPECT_GT(x, 0.0);
  }
  EXPECT_EQ(c1.mu, c2.mu);
  EXPECT_EQ(c1.L, c2.L);
  EXPECT_EQ(c1.sigma, c2.sigma);
  EXPECT_EQ(c1.C_chi, c2.C_chi);
  EXPECT_LE(c1.mu, c1.L);
  EXPECT_LE(c1.sigma * c1.sigma, 3 * c1.L + 1e-12);
}

TEST(TheoryConstants, RejectsLowResolution) {
  const GaussianMeanModel g(2, 0.0);
  EXPECT_THROW(theory_constants(g, ParamDomain(Vector::Zero(2), 1.0), Vector::Zero(2), 1), InvalidInput);
}

TEST(Sampling, EnumerableFrequenciesMatchProbabilities) {
  const ErgmModel g(3);
  const Vector psi = v({0.4, -0.8});
  Rng rng(21);
  const auto draws = g.sample_n(psi, 100000, rng);
  std::vector<double> counts(g.num_states(), 0.0);
  for (const auto& x : draws) counts[g.index_of(x)] += 1;
  const Vector p = g.state_probabilities(psi);
  EXPECT_GT(oracle::chi_square_p_value(counts, std::vector<double>(p.data(), p.data() + p.size())), 1e-3);
}

TEST(Sampling, GaussianMomentsMatch) {
  const GaussianMeanModel g(2, 0.5);
  const Vector psi = v({0.3, -0.2});
  Rng rng(22);
  const int n = 100000;
  Vector s = Vector::Zero(2);
  Matrix ss = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const Point x = g.sample(psi, rng);
    s += x;
    ss += x * x.transpose();
  }
  const Vector mean = s / n;
  const Matrix cov = ss / n - mean * mean.transpose();
  const Vector expect = g.covariance() * psi;
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(mean[i], expect[i], 3 * std::sqrt(1.0 / n) * 1.5);
  EXPECT_LE((cov - g.covariance()).cwiseAbs().maxCoeff(), 0.02);
}
