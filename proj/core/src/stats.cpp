#include "cdlab/stats.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "cdlab/errors.hpp"

namespace cdlab {

RateFit rate_fit(const std::vector<std::pair<double, double>>& points) {
  const std::size_t k = points.size();
  if (k < 3) throw InvalidInput("rate_fit: need at least 3 points");
  Vector x(static_cast<Eigen::Index>(k)), y(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto [n, delta] = points[i];
    if (!(n > 0.0)) throw InvalidInput("rate_fit: n must be > 0");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidInput("rate_fit: delta must be positive and finite");
    x[static_cast<Eigen::Index>(i)] = std::log(n);
    y[static_cast<Eigen::Index>(i)] = std::log(delta);
  }
  const double xm = x.mean(), ym = y.mean();
  const Vector xc = x.array() - xm;
  const double sxx = xc.squaredNorm();
  if (!(sxx > 0.0)) throw InvalidInput("rate_fit: n values must not all coincide");

  RateFit fit;
  fit.slope = xc.dot(y) / sxx;
  fit.intercept = ym - fit.slope * xm;
  const Vector resid = y - (Vector::Constant(x.size(), fit.intercept) + fit.slope * x);
  const double s2 = resid.squaredNorm() / static_cast<double>(k - 2);
  fit.slope_stderr = std::sqrt(s2 / sxx);
  return fit;
}

double inverse_trace(const Matrix& fisher) {
  if (fisher.rows() != fisher.cols() || fisher.rows() == 0) {
    throw InvalidInput("inverse_trace: fisher must be a non-empty square matrix");
  }
  Eigen::LLT<Matrix> llt(fisher);
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("inverse_trace: Fisher information is not positive definite");
  const Matrix inv = llt.solve(Matrix::Identity(fisher.rows(), fisher.cols()));
  const double tr = inv.trace();
  if (!std::isfinite(tr) || !(tr > 0.0)) throw LinearAlgebraError("inverse_trace: Fisher information is singular");
  return tr;
}

double variance_ratio(std::size_t n, double delta, const Matrix& fisher) {
  if (n < 1) throw InvalidInput("variance_ratio: n must be >= 1");
  if (!(delta >= 0.0)) throw InvalidInput("variance_ratio: delta must be >= 0");
  return static_cast<double>(n) * delta / inverse_trace(fisher);
}

MeanEstimate mean_and_stderr(const std::vector<double>& values) {
  MeanEstimate out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return out;
}

}  // namespace cdlab
