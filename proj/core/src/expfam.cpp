#include "cdlab/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cdlab/errors.hpp"

namespace cdlab {

const char* to_string(SampleSpace s) {
  switch (s) {
    case SampleSpace::kContinuous: return "continuous";
    case SampleSpace::kBinaryHypercube: return "binary_hypercube";
    case SampleSpace::kSimpleGraphs: return "simple_graphs";
  }
  return "unknown";
}

const char* to_string(Exactness e) {
  switch (e) {
    case Exactness::kAnalytic: return "analytic";
    case Exactness::kEnumerable: return "enumerable";
    case Exactness::kNone: return "none";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Model

Vector Model::phi(const Point& x) const {
  if (static_cast<std::size_t>(x.size()) != point_size_) {
    throw InvalidInput(name() + ": point has size " + std::to_string(x.size()) + ", expected " +
                       std::to_string(point_size_));
  }
  if (!contains(x)) throw InvalidInput(name() + ": point outside the sample space");
  Vector out;
  statistic_into(x, out);
  return out;
}

std::vector<Point> Model::sample_n(const Vector& psi, std::size_t n, Rng& rng) const {
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample(psi, rng));
  return out;
}

void Model::check_parameter(const Vector& psi) const {
  if (static_cast<std::size_t>(psi.size()) != p_) {
    throw InvalidInput(name() + ": parameter has dimension " + std::to_string(psi.size()) + ", expected " +
                       std::to_string(p_));
  }
  if (!psi.allFinite()) throw InvalidInput(name() + ": parameter has non-finite entries");
}

void Model::require_exact(const char* op) const {
  if (exactness_ == Exactness::kNone) {
    throw UnsupportedOracle(std::string(op) + ": " + name() + " has no exact oracle");
  }
}

// ---------------------------------------------------------------------------
// GaussianMeanModel

namespace {

Matrix equicorrelation(std::size_t d, double rho) {
  Matrix s = Matrix::Constant(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), rho);
  s.diagonal().setOnes();
  return s;
}

}  // namespace

GaussianMeanModel::GaussianMeanModel(std::size_t d, double rho)
    : Model(d, d, SampleSpace::kContinuous, Exactness::kAnalytic), rho_(rho) {
  if (d == 0) throw InvalidInput("GaussianMeanModel: d must be positive");
  if (!(rho > -1.0 && rho < 1.0)) throw InvalidInput("GaussianMeanModel: rho must lie in (-1, 1)");
  sigma_ = equicorrelation(d, rho);
  Eigen::LLT<Matrix> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("GaussianMeanModel: covariance is not positive definite for rho = " + std::to_string(rho));
  }
  chol_ = llt.matrixL();
  precision_ = llt.solve(Matrix::Identity(sigma_.rows(), sigma_.cols()));
}

std::string GaussianMeanModel::name() const {
  return "gaussian_mean(d=" + std::to_string(dim()) + ", rho=" + std::to_string(rho_) + ")";
}

bool GaussianMeanModel::contains(const Point& x) const {
  return static_cast<std::size_t>(x.size()) == dim() && x.allFinite();
}

void GaussianMeanModel::statistic_into(const Point& x, Vector& out) const { out = x; }

double GaussianMeanModel::log_partition(const Vector& psi) const {
  check_parameter(psi);
  return 0.5 * psi.dot(sigma_ * psi);
}

Vector GaussianMeanModel::mean_statistic(const Vector& psi) const {
  check_parameter(psi);
  return sigma_ * psi;
}

Matrix GaussianMeanModel::fisher_information(const Vector& psi) const {
  check_parameter(psi);
  return sigma_;
}

std::array<double, 7> GaussianMeanModel::coordinate_cumulants(const Vector& psi, std::size_t i) const {
  check_parameter(psi);
  if (i >= dim()) throw InvalidInput("coordinate_cumulants: coordinate out of range");
  std::array<double, 7> k{};
  k[1] = sigma_.row(static_cast<Eigen::Index>(i)).dot(psi);
  k[2] = sigma_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  return k;
}

Point GaussianMeanModel::sample(const Vector& psi, Rng& rng) const {
  check_parameter(psi);
  Vector z(static_cast<Eigen::Index>(dim()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return sigma_ * psi + chol_ * z;
}

// ---------------------------------------------------------------------------
// EnumerableModel

void EnumerableModel::tabulate(std::vector<Point> states) {
  states_ = std::move(states);
  stats_.resize(static_cast<Eigen::Index>(states_.size()), static_cast<Eigen::Index>(dim()));
  Vector row;
  for (std::size_t s = 0; s < states_.size(); ++s) {
    statistic_into(states_[s], row);
    stats_.row(static_cast<Eigen::Index>(s)) = row.transpose();
  }
}

Vector EnumerableModel::state_probabilities(const Vector& psi) const {
  require_exact("state_probabilities");
  check_parameter(psi);
  Vector logw = stats_ * psi;
  const double top = logw.maxCoeff();
  Vector w = (logw.array() - top).exp().matrix();
  return w / w.sum();
}

double EnumerableModel::log_partition(const Vector& psi) const {
  require_exact("log_partition");
  check_parameter(psi);
  const Vector logw = stats_ * psi;
  const double top = logw.maxCoeff();
  return top + std::log((logw.array() - top).exp().sum());
}

Vector EnumerableModel::mean_statistic(const Vector& psi) const {
  require_exact("mean_statistic");
  const Vector prob = state_probabilities(psi);
  return stats_.transpose() * prob;
}

Matrix EnumerableModel::fisher_information(const Vector& psi) const {
  require_exact("fisher_information");
  const Vector prob = state_probabilities(psi);
  const Vector mean = stats_.transpose() * prob;
  const Matrix centered = stats_.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * prob.asDiagonal() * centered;
  return 0.5 * (cov + cov.transpose());
}

std::array<double, 7> EnumerableModel::coordinate_cumulants(const Vector& psi, std::size_t i) const {
  require_exact("coordinate_cumulants");
  if (i >= dim()) throw InvalidInput("coordinate_cumulants: coordinate out of range");
  const Vector prob = state_probabilities(psi);
  const auto col = stats_.col(static_cast<Eigen::Index>(i));
  const double mean = col.dot(prob);
  // centered moments m[2..6]
  std::array<double, 7> m{};
  for (Eigen::Index s = 0; s < prob.size(); ++s) {
    const double c = col[s] - mean;
    double pw = c * c;
    for (int k = 2; k <= 6; ++k) {
      m[k] += prob[s] * pw;
      pw *= c;
    }
  }
  std::array<double, 7> k{};
  k[1] = mean;
  k[2] = m[2];
  k[3] = m[3];
  k[4] = m[4] - 3.0 * m[2] * m[2];
  k[5] = m[5] - 10.0 * m[3] * m[2];
  k[6] = m[6] - 15.0 * m[4] * m[2] - 10.0 * m[3] * m[3] + 30.0 * m[2] * m[2] * m[2];
  return k;
}

Point EnumerableModel::sample(const Vector& psi, Rng& rng) const {
  require_exact("sample");
  const Vector prob = state_probabilities(psi);
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index s = 0; s < prob.size(); ++s) {
    acc += prob[s];
    if (u < acc) return states_[static_cast<std::size_t>(s)];
  }
  return states_.back();
}

std::vector<Point> EnumerableModel::sample_n(const Vector& psi, std::size_t n, Rng& rng) const {
  require_exact("sample_n");
  const Vector prob = state_probabilities(psi);
  std::vector<double> cdf(static_cast<std::size_t>(prob.size()));
  double acc = 0.0;
  for (Eigen::Index s = 0; s < prob.size(); ++s) {
    acc += prob[s];
    cdf[static_cast<std::size_t>(s)] = acc;
  }
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto s = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    out.push_back(states_[s]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// BoltzmannModel

namespace {

bool is_binary(const Point& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0 && x[i] != 1.0) return false;
  }
  return true;
}

Point bits_to_point(std::size_t s, std::size_t width) {
  Point x(static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < width; ++i) x[static_cast<Eigen::Index>(i)] = static_cast<double>((s >> i) & 1U);
  return x;
}

std::size_t point_to_bits(const Point& x) {
  std::size_t s = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) s |= std::size_t{1} << i;
  }
  return s;
}

std::vector<Point> all_bit_states(std::size_t width) {
  std::vector<Point> states;
  const std::size_t count = std::size_t{1} << width;
  states.reserve(count);
  for (std::size_t s = 0; s < count; ++s) states.push_back(bits_to_point(s, width));
  return states;
}

}  // namespace

BoltzmannModel::BoltzmannModel(std::size_t d)
    : EnumerableModel(d + d * (d - 1) / 2, d, SampleSpace::kBinaryHypercube,
                      d <= kMaxEnumerableUnits ? Exactness::kEnumerable : Exactness::kNone),
      d_(d) {
  if (d == 0) throw InvalidInput("BoltzmannModel: d must be positive");
  if (exactness() == Exactness::kEnumerable) tabulate(all_bit_states(d));
}

std::string BoltzmannModel::name() const { return "boltzmann(d=" + std::to_string(d_) + ")"; }

std::size_t BoltzmannModel::pair_slot(std::size_t i, std::size_t j) const {
  if (!(i < j && j < d_)) throw InvalidInput("BoltzmannModel::pair_slot: need i < j < d");
  // pairs (0,1),(0,2),...,(0,d-1),(1,2),...
  return d_ + i * (2 * d_ - i - 1) / 2 + (j - i - 1);
}

bool BoltzmannModel::contains(const Point& x) const {
  return static_cast<std::size_t>(x.size()) == d_ && is_binary(x);
}

void BoltzmannModel::statistic_into(const Point& x, Vector& out) const {
  out.resize(static_cast<Eigen::Index>(dim()));
  Eigen::Index slot = 0;
  for (std::size_t i = 0; i < d_; ++i) out[slot++] = x[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < d_; ++i) {
    for (std::size_t j = i + 1; j < d_; ++j) {
      out[slot++] = x[static_cast<Eigen::Index>(i)] * x[static_cast<Eigen::Index>(j)];
    }
  }
}

std::size_t BoltzmannModel::index_of(const Point& x) const {
  if (!contains(x)) throw InvalidInput(name() + ": point outside the sample space");
  return point_to_bits(x);
}

// ---------------------------------------------------------------------------
// ErgmModel

ErgmModel::ErgmModel(std::size_t k)
    : EnumerableModel(2, k * (k - 1) / 2, SampleSpace::kSimpleGraphs,
                      k <= kMaxEnumerableNodes ? Exactness::kEnumerable : Exactness::kNone),
      k_(k) {
  if (k < 2) throw InvalidInput("ErgmModel: need at least 2 nodes");
  for (std::size_t u = 0; u < k; ++u) {
    for (std::size_t v = u + 1; v < k; ++v) pairs_.emplace_back(u, v);
  }
  if (exactness() == Exactness::kEnumerable) tabulate(all_bit_states(pairs_.size()));
}

std::string ErgmModel::name() const { return "ergm(k=" + std::to_string(k_) + ")"; }

std::size_t ErgmModel::edge_slot(std::size_t u, std::size_t v) const {
  if (u > v) std::swap(u, v);
  if (!(u < v && v < k_)) throw InvalidInput("ErgmModel::edge_slot: need distinct nodes < k");
  return u * (2 * k_ - u - 1) / 2 + (v - u - 1);
}

std::size_t ErgmModel::common_neighbors(const Point& g, std::size_t u, std::size_t v) const {
  std::size_t count = 0;
  for (std::size_t w = 0; w < k_; ++w) {
    if (w == u || w == v) continue;
    if (g[static_cast<Eigen::Index>(edge_slot(u, w))] != 0.0 &&
        g[static_cast<Eigen::Index>(edge_slot(v, w))] != 0.0) {
      ++count;
    }
  }
  return count;
}

bool ErgmModel::contains(const Point& x) const {
  return static_cast<std::size_t>(x.size()) == pairs_.size() && is_binary(x);
}

void ErgmModel::statistic_into(const Point& x, Vector& out) const {
  out.resize(2);
  double edges = 0.0;
  for (Eigen::Index e = 0; e < x.size(); ++e) edges += x[e];
  double triangles = 0.0;
  for (std::size_t a = 0; a < k_; ++a) {
    for (std::size_t b = a + 1; b < k_; ++b) {
      if (x[static_cast<Eigen::Index>(edge_slot(a, b))] == 0.0) continue;
      for (std::size_t c = b + 1; c < k_; ++c) {
        if (x[static_cast<Eigen::Index>(edge_slot(a, c))] != 0.0 &&
            x[static_cast<Eigen::Index>(edge_slot(b, c))] != 0.0) {
          triangles += 1.0;
        }
      }
    }
  }
  out[0] = edges;
  out[1] = triangles;
}

std::size_t ErgmModel::index_of(const Point& x) const {
  if (!contains(x)) throw InvalidInput(name() + ": point outside the sample space");
  return point_to_bits(x);
}

// ---------------------------------------------------------------------------
// Divergence and theory constants

Chi2Result chi2_divergence(const Model& model, const Vector& psi_star, const Vector& psi) {
  model.check_parameter(psi_star);
  model.check_parameter(psi);
  // sum p*^2 / p - 1 written through log Z
  const double exponent =
      model.log_partition(2.0 * psi_star - psi) - 2.0 * model.log_partition(psi_star) + model.log_partition(psi);
  if (exponent > std::log(std::numeric_limits<double>::max())) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {std::max(0.0, std::expm1(exponent)), false};
}

TheoryConstants theory_constants(const Model& model, const ParamDomain& domain, const Vector& psi_star,
                                 std::size_t grid_resolution) {
  if (grid_resolution < 2) throw InvalidInput("theory_constants: grid_resolution must be >= 2");
  if (model.exactness() == Exactness::kNone) {
    throw UnsupportedOracle("theory_constants: " + model.name() + " has no exact oracle");
  }
  model.check_parameter(psi_star);
  if (domain.dim() != model.dim()) throw InvalidInput("theory_constants: domain dimension mismatch");

  const auto grid = ball_grid(domain, grid_resolution, psi_star);
  TheoryConstants out;
  out.mu = std::numeric_limits<double>::infinity();
  out.grid_points = grid.size();
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  for (const auto& psi : grid) {
    const Matrix fisher = model.fisher_information(psi);
    eig.compute(fisher, Eigen::EigenvaluesOnly);
    const auto& lambda = eig.eigenvalues();
    out.mu = std::min(out.mu, lambda.minCoeff());
    out.L = std::max(out.L, lambda.maxCoeff());
    out.sigma = std::max(out.sigma, std::sqrt(std::max(0.0, fisher.trace())));

    const double dist = (psi - psi_star).norm();
    if (dist > 0.0) {
      const Chi2Result chi2 = chi2_divergence(model, psi_star, psi);
      if (chi2.overflow) {
        out.chi2_overflow = true;
        out.C_chi = std::numeric_limits<double>::infinity();
      } else {
        out.C_chi = std::max(out.C_chi, std::sqrt(chi2.value) / dist);
      }
    }
  }
  return out;
}

}  // namespace cdlab
