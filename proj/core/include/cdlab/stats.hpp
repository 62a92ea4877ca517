#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "cdlab/linalg.hpp"

namespace cdlab {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Ordinary least squares of log(delta) on log(n). Needs at least three
// points with positive n and delta.
RateFit rate_fit(const std::vector<std::pair<double, double>>& points);

// n * delta / trace(fisher^{-1}).
double variance_ratio(std::size_t n, double delta, const Matrix& fisher);

// trace(fisher^{-1}); LinearAlgebraError when fisher is not positive definite.
double inverse_trace(const Matrix& fisher);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // 0 when count < 2
  std::size_t count = 0;
};

MeanEstimate mean_and_stderr(const std::vector<double>& values);

}  // namespace cdlab
