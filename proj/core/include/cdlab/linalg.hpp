#pragma once

#include <Eigen/Dense>

namespace cdlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Sample points are stored as real vectors for every family: coordinates
// for Gaussian models, 0/1 unit states for Boltzmann machines and 0/1 edge
// indicators (pairs in lexicographic order) for random graphs.
using Point = Eigen::VectorXd;

}  // namespace cdlab
