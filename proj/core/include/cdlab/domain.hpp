#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cdlab/linalg.hpp"

namespace cdlab {

// Closed Euclidean ball used as the compact convex parameter set.
class ParamDomain {
 public:
  ParamDomain(Vector center, double radius);

  const Vector& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(center_.size()); }

  bool contains(const Vector& psi, double tol = 1e-12) const;

  // Euclidean projection onto the ball.
  Vector project(const Vector& psi) const;

  // True when psi sits in the interior with at least `margin` to spare.
  bool interior(const Vector& psi, double margin) const;

 private:
  Vector center_;
  double radius_;
};

// Lattice with `resolution` points per axis spanning the bounding cube of
// the ball, intersected with the ball. The center and any `extra` points are
// always included (first, in that order). Deterministic ordering.
std::vector<Vector> ball_grid(const ParamDomain& domain, std::size_t resolution,
                              const std::optional<Vector>& extra = std::nullopt);

}  // namespace cdlab
