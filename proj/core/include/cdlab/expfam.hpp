#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "cdlab/domain.hpp"
#include "cdlab/linalg.hpp"
#include "cdlab/rng.hpp"

namespace cdlab {

enum class SampleSpace { kContinuous, kBinaryHypercube, kSimpleGraphs };

// Which exact oracles a model instance provides.
enum class Exactness { kAnalytic, kEnumerable, kNone };

const char* to_string(SampleSpace s);
const char* to_string(Exactness e);

// Exponential family p_psi(dx) = exp(psi . phi(x) - log Z(psi)) c(dx).
//
// Instances are immutable after construction and may be shared freely
// between threads. Oracle methods throw UnsupportedOracle when
// exactness() == kNone.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;

  // Statistic dimension p.
  std::size_t dim() const noexcept { return p_; }
  // Length of a sample point vector.
  std::size_t point_size() const noexcept { return point_size_; }
  SampleSpace sample_space() const noexcept { return space_; }
  Exactness exactness() const noexcept { return exactness_; }

  // True if x is a valid point of the sample space.
  virtual bool contains(const Point& x) const = 0;

  // Sufficient statistic; throws InvalidInput if x is not in the sample space.
  Vector phi(const Point& x) const;

  // Writes phi(x) into out (resized as needed) without validating x.
  virtual void statistic_into(const Point& x, Vector& out) const = 0;

  virtual double log_partition(const Vector& psi) const = 0;
  // E[phi(X^psi)], the gradient of log Z.
  virtual Vector mean_statistic(const Vector& psi) const = 0;
  // Cov[phi(X^psi)], the Hessian of log Z.
  virtual Matrix fisher_information(const Vector& psi) const = 0;

  // Cumulants kappa_1..kappa_6 of the scalar phi_i(X^psi), i.e. the pure
  // partial derivatives d^k/dpsi_i^k log Z. Slot 0 is unused.
  virtual std::array<double, 7> coordinate_cumulants(const Vector& psi, std::size_t i) const = 0;

  // One exact draw from p_psi.
  virtual Point sample(const Vector& psi, Rng& rng) const = 0;
  // n i.i.d. exact draws from p_psi.
  virtual std::vector<Point> sample_n(const Vector& psi, std::size_t n, Rng& rng) const;

  // Throws InvalidInput unless psi has dimension p with finite entries.
  void check_parameter(const Vector& psi) const;

 protected:
  Model(std::size_t p, std::size_t point_size, SampleSpace space, Exactness exactness)
      : p_(p), point_size_(point_size), space_(space), exactness_(exactness) {}

  void require_exact(const char* op) const;

 private:
  std::size_t p_;
  std::size_t point_size_;
  SampleSpace space_;
  Exactness exactness_;
};

// Gaussian mean family: carrier N(0, Sigma) with unit diagonal and constant
// off-diagonal rho, phi(x) = x, so p_psi = N(Sigma psi, Sigma) and
// log Z(psi) = psi' Sigma psi / 2.
class GaussianMeanModel final : public Model {
 public:
  GaussianMeanModel(std::size_t d, double rho);

  std::string name() const override;
  double rho() const noexcept { return rho_; }
  const Matrix& covariance() const noexcept { return sigma_; }
  const Matrix& precision() const noexcept { return precision_; }

  bool contains(const Point& x) const override;
  void statistic_into(const Point& x, Vector& out) const override;
  double log_partition(const Vector& psi) const override;
  Vector mean_statistic(const Vector& psi) const override;
  Matrix fisher_information(const Vector& psi) const override;
  std::array<double, 7> coordinate_cumulants(const Vector& psi, std::size_t i) const override;
  Point sample(const Vector& psi, Rng& rng) const override;

 private:
  double rho_;
  Matrix sigma_;
  Matrix precision_;
  Matrix chol_;
};

// A model whose sample space is finite. When the instance is small enough,
// the states and their statistics are tabulated at construction and every
// oracle is computed by exact summation.
class EnumerableModel : public Model {
 public:
  std::size_t num_states() const noexcept { return states_.size(); }
  const std::vector<Point>& states() const noexcept { return states_; }
  // Row s holds phi(states()[s]).
  const Matrix& statistics() const noexcept { return stats_; }

  // Position of x in states(); x must lie in the sample space.
  virtual std::size_t index_of(const Point& x) const = 0;

  // p_psi over states(), computed with log-sum-exp.
  Vector state_probabilities(const Vector& psi) const;

  double log_partition(const Vector& psi) const override;
  Vector mean_statistic(const Vector& psi) const override;
  Matrix fisher_information(const Vector& psi) const override;
  std::array<double, 7> coordinate_cumulants(const Vector& psi, std::size_t i) const override;
  Point sample(const Vector& psi, Rng& rng) const override;
  std::vector<Point> sample_n(const Vector& psi, std::size_t n, Rng& rng) const override;

 protected:
  using Model::Model;
  // Called by derived constructors when the instance is enumerable.
  void tabulate(std::vector<Point> states);

 private:
  std::vector<Point> states_;
  Matrix stats_;
};

// Fully visible Boltzmann machine on {0,1}^d. phi lists the d unit states
// followed by the pair products x_i x_j for i < j in lexicographic order.
// State index s encodes x_i as bit i of s.
class BoltzmannModel final : public EnumerableModel {
 public:
  static constexpr std::size_t kMaxEnumerableUnits = 12;

  explicit BoltzmannModel(std::size_t d);

  std::string name() const override;
  std::size_t units() const noexcept { return d_; }
  // Offset of the pair (i, j), i < j, inside phi.
  std::size_t pair_slot(std::size_t i, std::size_t j) const;

  bool contains(const Point& x) const override;
  void statistic_into(const Point& x, Vector& out) const override;
  std::size_t index_of(const Point& x) const override;

 private:
  std::size_t d_;
};

// Exponential random graph model on simple undirected graphs with k
// labeled nodes; phi(g) = (edge count, triangle count). A point is the
// 0/1 vector of edge indicators over pairs (u, v), u < v, in lexicographic
// order; state index s encodes edge e as bit e of s.
class ErgmModel final : public EnumerableModel {
 public:
  static constexpr std::size_t kMaxEnumerableNodes = 6;

  explicit ErgmModel(std::size_t k);

  std::string name() const override;
  std::size_t nodes() const noexcept { return k_; }
  std::size_t num_pairs() const noexcept { return point_size(); }
  std::size_t edge_slot(std::size_t u, std::size_t v) const;
  // Node pair of edge slot e.
  std::pair<std::size_t, std::size_t> edge_nodes(std::size_t e) const { return pairs_[e]; }

  // Number of nodes adjacent to both u and v in graph g.
  std::size_t common_neighbors(const Point& g, std::size_t u, std::size_t v) const;

  bool contains(const Point& x) const override;
  void statistic_into(const Point& x, Vector& out) const override;
  std::size_t index_of(const Point& x) const override;

 private:
  std::size_t k_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

struct Chi2Result {
  double value = 0.0;
  // Set when the exponent overflowed; value is then +infinity.
  bool overflow = false;
};

// chi^2(p_{psi_star}, p_psi) = E_psi[(dp_{psi_star}/dp_psi - 1)^2], computed as
//   exp(log Z(2 psi_star - psi) - 2 log Z(psi_star) + log Z(psi)) - 1.
Chi2Result chi2_divergence(const Model& model, const Vector& psi_star, const Vector& psi);

struct TheoryConstants {
  double mu = 0.0;      // min over the grid of lambda_min(Hessian of log Z)
  double L = 0.0;       // max over the grid of lambda_max
  double sigma = 0.0;   // max over the grid of sqrt(trace)
  double C_chi = 0.0;   // max of sqrt(chi^2) / ||psi - psi_star||
  bool chi2_overflow = false;
  std::size_t grid_points = 0;
};

inline constexpr std::size_t kDefaultGridResolution = 9;

// Strong convexity, smoothness, noise and chi^2-smoothness constants of the
// cross-entropy over the domain, approximated on ball_grid(domain, resolution).
TheoryConstants theory_constants(const Model& model, const ParamDomain& domain, const Vector& psi_star,
                                 std::size_t grid_resolution = kDefaultGridResolution);

}  // namespace cdlab
