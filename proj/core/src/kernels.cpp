#include "cdlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cdlab/errors.hpp"

namespace cdlab {

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kGibbs: return "gibbs";
    case KernelKind::kMetropolisToggle: return "metropolis";
    case KernelKind::kExactSampler: return "exact";
    case KernelKind::kIdentity: return "identity";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "gibbs") return KernelKind::kGibbs;
  if (s == "metropolis" || s == "mh") return KernelKind::kMetropolisToggle;
  if (s == "exact") return KernelKind::kExactSampler;
  if (s == "identity") return KernelKind::kIdentity;
  throw InvalidInput("unknown kernel kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// TransitionMatrix

Matrix TransitionMatrix::power(std::size_t m) const {
  Matrix result = Matrix::Identity(matrix.rows(), matrix.cols());
  Matrix base = matrix;
  while (m > 0) {
    if (m & 1U) result = result * base;
    m >>= 1U;
    if (m > 0) base = base * base;
  }
  return result;
}

double TransitionMatrix::stationarity_residual(const Vector& prob) const {
  if (prob.size() != matrix.rows()) throw InvalidInput("stationarity_residual: size mismatch");
  const Vector moved = matrix.transpose() * prob;
  return (moved - prob).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// MarkovKernel

namespace {

double logistic(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

// Local field of unit i: psi_i + sum_{j != i} psi_{ij} x_j.
double boltzmann_field(const BoltzmannModel& model, const Vector& psi, const Point& x, std::size_t i) {
  double field = psi[static_cast<Eigen::Index>(i)];
  for (std::size_t j = 0; j < model.units(); ++j) {
    if (j == i || x[static_cast<Eigen::Index>(j)] == 0.0) continue;
    field += psi[static_cast<Eigen::Index>(i < j ? model.pair_slot(i, j) : model.pair_slot(j, i))];
  }
  return field;
}

// Log acceptance ratio psi . (phi(g') - phi(g)) for toggling edge e.
double toggle_log_ratio(const ErgmModel& model, const Vector& psi, const Point& g, std::size_t e) {
  const auto [u, v] = model.edge_nodes(e);
  const double common = static_cast<double>(model.common_neighbors(g, u, v));
  const double sign = g[static_cast<Eigen::Index>(e)] != 0.0 ? -1.0 : 1.0;
  return sign * (psi[0] + common * psi[1]);
}

}  // namespace

MarkovKernel::MarkovKernel(std::shared_ptr<const Model> model, KernelKind kind)
    : model_(std::move(model)), kind_(kind) {
  if (!model_) throw InvalidInput("MarkovKernel: null model");
  gaussian_ = dynamic_cast<const GaussianMeanModel*>(model_.get());
  boltzmann_ = dynamic_cast<const BoltzmannModel*>(model_.get());
  ergm_ = dynamic_cast<const ErgmModel*>(model_.get());
  enumerable_ = dynamic_cast<const EnumerableModel*>(model_.get());

  switch (kind_) {
    case KernelKind::kGibbs:
      if (!gaussian_ && !boltzmann_) {
        throw InvalidInput("gibbs kernel supports gaussian_mean and boltzmann models, not " + model_->name());
      }
      break;
    case KernelKind::kMetropolisToggle:
      if (!ergm_) throw InvalidInput("metropolis kernel supports ergm models, not " + model_->name());
      break;
    case KernelKind::kExactSampler:
      if (model_->exactness() == Exactness::kNone) {
        throw UnsupportedOracle("exact sampler unavailable for " + model_->name());
      }
      break;
    case KernelKind::kIdentity:
      break;
  }
}

std::string MarkovKernel::name() const { return std::string(to_string(kind_)) + "/" + model_->name(); }

Point MarkovKernel::step(const Vector& psi, const Point& x, Rng& rng) const { return run(psi, x, 1, rng); }

Point MarkovKernel::run(const Vector& psi, const Point& x, std::size_t m, Rng& rng) const {
  model_->check_parameter(psi);
  if (static_cast<std::size_t>(x.size()) != model_->point_size() || !model_->contains(x)) {
    throw InvalidInput(name() + ": start point outside the sample space");
  }
  Point y = x;
  run_inplace(psi, y, m, rng);
  return y;
}

void MarkovKernel::run_inplace(const Vector& psi, Point& x, std::size_t m, Rng& rng) const {
  if (m == 0) return;
  switch (kind_) {
    case KernelKind::kIdentity:
      return;
    case KernelKind::kExactSampler:
      // every step forgets the state; only the final draw matters
      for (std::size_t s = 0; s < m; ++s) x = model_->sample(psi, rng);
      return;
    case KernelKind::kGibbs:
      if (gaussian_) {
        const Vector mean = gaussian_->covariance() * psi;
        const Matrix& prec = gaussian_->precision();
        const auto d = static_cast<std::uint64_t>(x.size());
        for (std::size_t s = 0; s < m; ++s) {
          const auto i = static_cast<Eigen::Index>(rng.index(d));
          const double lii = prec(i, i);
          double shift = 0.0;
          for (Eigen::Index j = 0; j < x.size(); ++j) {
            if (j != i) shift += prec(i, j) * (x[j] - mean[j]);
          }
          x[i] = mean[i] - shift / lii + rng.normal() / std::sqrt(lii);
        }
      } else {
        const auto d = static_cast<std::uint64_t>(boltzmann_->units());
        for (std::size_t s = 0; s < m; ++s) {
          const auto i = static_cast<std::size_t>(rng.index(d));
          const double p1 = logistic(boltzmann_field(*boltzmann_, psi, x, i));
          x[static_cast<Eigen::Index>(i)] = rng.uniform() < p1 ? 1.0 : 0.0;
        }
      }
      return;
    case KernelKind::kMetropolisToggle: {
      const auto edges = static_cast<std::uint64_t>(ergm_->num_pairs());
      for (std::size_t s = 0; s < m; ++s) {
        const auto e = static_cast<std::size_t>(rng.index(edges));
        const double log_ratio = toggle_log_ratio(*ergm_, psi, x, e);
        const double u = rng.uniform();
        if (log_ratio >= 0.0 || u < std::exp(log_ratio)) {
          x[static_cast<Eigen::Index>(e)] = 1.0 - x[static_cast<Eigen::Index>(e)];
        }
      }
      return;
    }
  }
}

const EnumerableModel& MarkovKernel::enumerable(const char* op) const {
  if (!enumerable_ || model_->exactness() != Exactness::kEnumerable) {
    throw UnsupportedOracle(std::string(op) + ": " + model_->name() + " is not enumerable");
  }
  return *enumerable_;
}

std::vector<std::pair<std::size_t, double>> MarkovKernel::transitions(const Vector& psi, std::size_t state) const {
  const EnumerableModel& em = enumerable("transitions");
  model_->check_parameter(psi);
  if (state >= em.num_states()) throw InvalidInput("transitions: state index out of range");
  std::vector<std::pair<std::size_t, double>> out;
  const Point& x = em.states()[state];

  switch (kind_) {
    case KernelKind::kIdentity:
      out.emplace_back(state, 1.0);
      break;
    case KernelKind::kExactSampler: {
      const Vector prob = em.state_probabilities(psi);
      for (Eigen::Index t = 0; t < prob.size(); ++t) out.emplace_back(static_cast<std::size_t>(t), prob[t]);
      break;
    }
    case KernelKind::kGibbs: {
      const std::size_t d = boltzmann_->units();
      const double pick = 1.0 / static_cast<double>(d);
      for (std::size_t i = 0; i < d; ++i) {
        const double p1 = logistic(boltzmann_field(*boltzmann_, psi, x, i));
        const std::size_t bit = std::size_t{1} << i;
        out.emplace_back(state | bit, pick * p1);
        out.emplace_back(state & ~bit, pick * (1.0 - p1));
      }
      break;
    }
    case KernelKind::kMetropolisToggle: {
      const std::size_t edges = ergm_->num_pairs();
      const double pick = 1.0 / static_cast<double>(edges);
      double stay = 0.0;
      for (std::size_t e = 0; e < edges; ++e) {
        const double accept = std::min(1.0, std::exp(toggle_log_ratio(*ergm_, psi, x, e)));
        out.emplace_back(state ^ (std::size_t{1} << e), pick * accept);
        stay += pick * (1.0 - accept);
      }
      out.emplace_back(state, stay);
      break;
    }
  }
  return out;
}

TransitionMatrix MarkovKernel::transition_matrix(const Vector& psi) const {
  const EnumerableModel& em = enumerable("transition_matrix");
  const std::size_t n = em.num_states();
  if (n > kMaxDenseStates) {
    throw UnsupportedOracle("transition_matrix: " + std::to_string(n) + " states exceed the dense limit");
  }
  TransitionMatrix tm;
  tm.states = em.states();
  tm.matrix = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& [t, prob] : transitions(psi, s)) {
      tm.matrix(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) += prob;
    }
  }
  return tm;
}

Vector MarkovKernel::apply(const Vector& psi, const Vector& f_values) const {
  const EnumerableModel& em = enumerable("apply");
  const std::size_t n = em.num_states();
  if (static_cast<std::size_t>(f_values.size()) != n) throw InvalidInput("apply: f must be tabulated on every state");
  if (kind_ == KernelKind::kExactSampler) {
    return Vector::Constant(static_cast<Eigen::Index>(n), em.state_probabilities(psi).dot(f_values));
  }
  if (kind_ == KernelKind::kIdentity) return f_values;
  Vector out(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    double acc = 0.0;
    for (const auto& [t, prob] : transitions(psi, s)) acc += prob * f_values[static_cast<Eigen::Index>(t)];
    out[static_cast<Eigen::Index>(s)] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Restricted spectral gap

Statistic moment_statistic(const Model& model) {
  return [&model](const Point& x) {
    Vector phi;
    model.statistic_into(x, phi);
    const auto p = phi.size();
    Vector out(p + p * (p + 1) / 2);
    out.head(p) = phi;
    Eigen::Index c = p;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i; j < p; ++j) out[c++] = phi[i] * phi[j];
    }
    return out;
  };
}

std::string moment_statistic_label(std::size_t p, std::size_t c) {
  if (c < p) return "phi_" + std::to_string(c + 1);
  std::size_t k = p;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j, ++k) {
      if (k == c) return "phi_" + std::to_string(i + 1) + "*phi_" + std::to_string(j + 1);
    }
  }
  return "component_" + std::to_string(c);
}

namespace {

constexpr double kDegenerateVariance = 1e-13;

AlphaEstimate exact_alpha(const MarkovKernel& kernel, const EnumerableModel& em, const Vector& psi,
                          const Statistic& f, std::size_t steps) {
  const Vector prob = em.state_probabilities(psi);
  const auto n = static_cast<Eigen::Index>(em.num_states());
  Matrix values;
  for (Eigen::Index s = 0; s < n; ++s) {
    const Vector fs = f(em.states()[static_cast<std::size_t>(s)]);
    if (s == 0) values.resize(n, fs.size());
    values.row(s) = fs.transpose();
  }
  AlphaEstimate best;
  best.exact = true;
  bool any = false;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    Vector centered = values.col(c).array() - values.col(c).dot(prob);
    const double den = prob.dot(centered.cwiseProduct(centered));
    const double scale = std::max(1.0, prob.dot(values.col(c).cwiseProduct(values.col(c))));
    if (den <= kDegenerateVariance * scale) continue;
    Vector moved = centered;
    for (std::size_t s = 0; s < steps; ++s) moved = kernel.apply(psi, moved);
    const double num = prob.dot(moved.cwiseProduct(moved));
    const double a = std::sqrt(std::max(0.0, num) / den);
    if (!any || a > best.value) {
      best.value = a;
      best.component = static_cast<std::size_t>(c);
    }
    any = true;
  }
  if (!any) throw DegenerateStatistic("restricted_alpha: every component of f is constant under p_psi");
  return best;
}

AlphaEstimate monte_carlo_alpha(const MarkovKernel& kernel, const Vector& psi, const Statistic& f,
                                const AlphaOptions& opt) {
  if (opt.outer < 2 || opt.inner < 1) throw InvalidInput("restricted_alpha: need outer >= 2 and inner >= 1");
  const Model& model = kernel.model();
  Rng rng(opt.seed);
  const auto xs = model.sample_n(psi, opt.outer, rng);
  const auto n = static_cast<Eigen::Index>(xs.size());

  Matrix fx;
  std::vector<Matrix> fy(opt.inner), fy2(opt.inner);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Point& x = xs[static_cast<std::size_t>(k)];
    const Vector v = f(x);
    if (k == 0) {
      fx.resize(n, v.size());
      for (std::size_t r = 0; r < opt.inner; ++r) {
        fy[r].resize(n, v.size());
        fy2[r].resize(n, v.size());
      }
    }
    fx.row(k) = v.transpose();
    for (std::size_t r = 0; r < opt.inner; ++r) {
      fy[r].row(k) = f(kernel.run(psi, x, opt.steps, rng)).transpose();
      fy2[r].row(k) = f(kernel.run(psi, x, opt.steps, rng)).transpose();
    }
  }

  AlphaEstimate best;
  best.exact = false;
  bool any = false;
  const double nn = static_cast<double>(n);
  for (Eigen::Index c = 0; c < fx.cols(); ++c) {
    const double mean = fx.col(c).mean();
    Vector a = Vector::Zero(n);
    for (std::size_t r = 0; r < opt.inner; ++r) {
      a.array() += (fy[r].col(c).array() - mean) * (fy2[r].col(c).array() - mean);
    }
    a /= static_cast<double>(opt.inner);
    const Vector b = (fx.col(c).array() - mean).square().matrix();
    const double A = a.mean();
    const double B = b.mean();
    const double scale = std::max(1.0, fx.col(c).squaredNorm() / nn);
    if (B <= kDegenerateVariance * scale) continue;

    const double ratio = A / B;
    const Vector ac = a.array() - A;
    const Vector bc = b.array() - B;
    const double var_a = ac.squaredNorm() / (nn - 1.0);
    const double var_b = bc.squaredNorm() / (nn - 1.0);
    const double cov_ab = ac.dot(bc) / (nn - 1.0);
    const double var_ratio = std::max(0.0, (var_a - 2.0 * ratio * cov_ab + ratio * ratio * var_b) / (nn * B * B));
    const double value = std::sqrt(std::max(0.0, ratio));
    // delta method for sqrt; near zero fall back to the sqrt of the ratio error
    const double se = value > 1e-3 ? std::sqrt(var_ratio) / (2.0 * value) : std::sqrt(std::sqrt(var_ratio));
    if (!any || value > best.value) {
      best.value = value;
      best.std_error = se;
      best.component = static_cast<std::size_t>(c);
    }
    any = true;
  }
  if (!any) throw DegenerateStatistic("restricted_alpha: every component of f is constant under p_psi");
  return best;
}

}  // namespace

AlphaEstimate restricted_alpha(const MarkovKernel& kernel, const Vector& psi, const Statistic& f,
                               const AlphaOptions& options) {
  const Model& model = kernel.model();
  model.check_parameter(psi);
  AlphaMode mode = options.mode;
  if (mode == AlphaMode::kAuto) {
    mode = model.exactness() == Exactness::kEnumerable ? AlphaMode::kExact : AlphaMode::kMonteCarlo;
  }
  if (model.exactness() == Exactness::kNone) {
    throw UnsupportedOracle("restricted_alpha: " + model.name() + " has no exact sampler");
  }

  AlphaEstimate est;
  if (mode == AlphaMode::kExact) {
    const auto* em = dynamic_cast<const EnumerableModel*>(&model);
    if (!em || model.exactness() != Exactness::kEnumerable) {
      throw UnsupportedOracle("restricted_alpha: exact mode needs an enumerable model");
    }
    est = exact_alpha(kernel, *em, psi, f, options.steps);
  } else {
    est = monte_carlo_alpha(kernel, psi, f, options);
  }
  if (kernel.kind() == KernelKind::kExactSampler && options.steps > 0) {
    // K f~ is the constant E f~ = 0
    est.value = 0.0;
    est.std_error = 0.0;
  }
  return est;
}

AlphaSup alpha_sup(const MarkovKernel& kernel, const ParamDomain& domain, std::size_t grid_resolution,
                   const AlphaOptions& options) {
  const Model& model = kernel.model();
  if (domain.dim() != model.dim()) throw InvalidInput("alpha_sup: domain dimension mismatch");
  const auto grid = ball_grid(domain, grid_resolution);
  const Statistic f = moment_statistic(model);

  AlphaSup out;
  out.grid_points = grid.size();
  bool first = true;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    AlphaOptions opt = options;
    opt.seed = substream_seed(options.seed, StreamTag::kAlpha, g);
    const AlphaEstimate est = restricted_alpha(kernel, grid[g], f, opt);
    if (first || est.value > out.value) {
      out.value = est.value;
      out.std_error = est.std_error;
      out.psi = grid[g];
      out.component = est.component;
      out.exact = est.exact;
      first = false;
    }
  }
  out.label = moment_statistic_label(model.dim(), out.component);
  return out;
}

}  // namespace cdlab
