#include "cdlab/domain.hpp"

#include <cmath>
#include <string>

#include "cdlab/errors.hpp"

namespace cdlab {

ParamDomain::ParamDomain(Vector center, double radius) : center_(std::move(center)), radius_(radius) {
  if (center_.size() == 0) throw InvalidInput("ParamDomain: empty center");
  if (!center_.allFinite()) throw InvalidInput("ParamDomain: non-finite center");
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw InvalidInput("ParamDomain: radius must be positive and finite, got " + std::to_string(radius_));
  }
}

bool ParamDomain::contains(const Vector& psi, double tol) const {
  if (psi.size() != center_.size()) return false;
  return (psi - center_).norm() <= radius_ + tol;
}

bool ParamDomain::interior(const Vector& psi, double margin) const {
  if (psi.size() != center_.size()) return false;
  return (psi - center_).norm() <= radius_ - margin;
}

Vector ParamDomain::project(const Vector& psi) const {
  if (psi.size() != center_.size()) {
    throw InvalidInput("project: dimension mismatch (" + std::to_string(psi.size()) + " vs " +
                       std::to_string(center_.size()) + ")");
  }
  const Vector offset = psi - center_;
  const double dist = offset.norm();
  if (dist <= radius_) return psi;
  return center_ + (radius_ / dist) * offset;
}

std::vector<Vector> ball_grid(const ParamDomain& domain, std::size_t resolution,
                              const std::optional<Vector>& extra) {
  if (resolution < 2) throw InvalidInput("ball_grid: resolution must be >= 2");
  const std::size_t p = domain.dim();
  std::vector<Vector> out;
  out.push_back(domain.center());
  if (extra) {
    if (static_cast<std::size_t>(extra->size()) != p) throw InvalidInput("ball_grid: extra point has wrong dimension");
    out.push_back(*extra);
  }

  std::vector<double> axis(resolution);
  for (std::size_t k = 0; k < resolution; ++k) {
    axis[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(resolution - 1);
  }

  // odometer over resolution^p lattice nodes
  std::vector<std::size_t> digit(p, 0);
  Vector unit(p);
  const double r = domain.radius();
  while (true) {
    double sq = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      unit[i] = axis[digit[i]];
      sq += unit[i] * unit[i];
    }
    if (sq <= 1.0 + 1e-12) out.push_back(domain.center() + r * unit);

    std::size_t i = 0;
    while (i < p && ++digit[i] == resolution) digit[i++] = 0;
    if (i == p) break;
  }
  return out;
}

}  // namespace cdlab
