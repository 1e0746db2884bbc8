#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "betascan/geometry.hpp"
#include "betascan/sample.hpp"

namespace betascan {

struct LocalDistance {
  double value = 0.0;
  bool both_empty = false;  // neither set meets the ball
};

/// d_{x,r}(E, F) = (1/r) max( sup_{E ∩ B} dist(., F), sup_{F ∩ B} dist(., E) ),
/// with sup over an empty set taken as 0.
inline LocalDistance local_hausdorff_distance(const PointSample& E, const PointSample& F,
                                              const Point& x, double r) {
  if (!(r > 0.0)) throw InputError("radius must be positive");
  detail::require_same_dim(E.ambient(), F.ambient());
  detail::require_same_dim(x.size(), E.ambient());
  const IndexList in_e = E.empty() ? IndexList{} : E.ball(x, r);
  const IndexList in_f = F.empty() ? IndexList{} : F.ball(x, r);
  LocalDistance out;
  if (in_e.empty() && in_f.empty()) {
    out.both_empty = true;
    return out;
  }
  double sup = 0.0;
  for (Index i : in_e) sup = std::max(sup, F.dist_to(E.point(i)));
  for (Index i : in_f) sup = std::max(sup, E.dist_to(F.point(i)));
  out.value = sup / r;
  return out;
}

namespace detail {

// Unit-cube grid in d dimensions with `per_axis` nodes per axis; when
// `surface_only`, keeps the nodes on the cube boundary projected to the
// sphere.
inline std::vector<Vector> cube_grid(int d, int per_axis, bool surface_only) {
  std::vector<Vector> out;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  const double step = per_axis > 1 ? 2.0 / (per_axis - 1) : 0.0;
  while (true) {
    Vector v(d);
    bool on_surface = false;
    for (int k = 0; k < d; ++k) {
      v[k] = per_axis > 1 ? -1.0 + step * idx[static_cast<std::size_t>(k)] : 0.0;
      if (idx[static_cast<std::size_t>(k)] == 0 || idx[static_cast<std::size_t>(k)] == per_axis - 1) {
        on_surface = true;
      }
    }
    if (!surface_only) {
      if (v.norm() < 1.0) out.push_back(v);
    } else if (on_surface) {
      out.push_back(v / v.norm());
    }
    int k = 0;
    while (k < d && ++idx[static_cast<std::size_t>(k)] == per_axis) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == d) break;
  }
  return out;
}

// Sup of dist(., other) over the open d-disk P ∩ B(x, r). The function is
// convex, so the boundary samples carry the supremum; interior grid nodes are
// kept as a cross-check.
inline double sup_over_disk(const AffinePlane& P, const AffinePlane& other, const Point& x,
                            double r, int grid, bool& empty) {
  const Point c = P.project(x);
  const double off2 = (x - c).squaredNorm();
  const double rho2 = r * r - off2;
  empty = !(rho2 > 0.0);
  if (empty) return 0.0;
  const double rho = std::sqrt(rho2);
  double sup = other.distance(c);
  for (bool surface : {true, false}) {
    for (const Vector& u : cube_grid(P.dim(), grid, surface)) {
      const Point y = c + rho * (P.frame() * u);
      sup = std::max(sup, other.normal_offset(y).norm());
    }
  }
  return sup;
}

}  // namespace detail

/// d_{x,r}(P1, P2) for two affine planes, evaluated on deterministic samples
/// of each plane within B(x, r) (grid^d interior nodes plus boundary nodes).
inline LocalDistance plane_local_distance(const AffinePlane& P1, const AffinePlane& P2,
                                          const Point& x, double r, int grid = 32) {
  if (!(r > 0.0)) throw InputError("radius must be positive");
  detail::require_same_dim(P1.ambient(), P2.ambient());
  detail::require_same_dim(x.size(), P1.ambient());
  bool e1 = false;
  bool e2 = false;
  const double a = detail::sup_over_disk(P1, P2, x, r, grid, e1);
  const double b = detail::sup_over_disk(P2, P1, x, r, grid, e2);
  LocalDistance out;
  out.both_empty = e1 && e2;
  out.value = std::max(a, b) / r;
  return out;
}

}  // namespace betascan
