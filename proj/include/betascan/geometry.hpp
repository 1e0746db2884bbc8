#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "betascan/error.hpp"

namespace betascan {

using Point = Eigen::VectorXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InputError(std::string(what) + " has non-finite coordinates");
}

inline void require_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    throw InputError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

// Two passes of modified Gram-Schmidt; throws when the columns are
// (numerically) linearly dependent.
inline Matrix orthonormalize(const Matrix& span) {
  Matrix q = span;
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      const double norm = q.col(j).norm();
      const double ref = span.col(j).norm();
      if (!(norm > 1e-12 * std::max(ref, 1e-300))) {
        throw InputError("plane directions are linearly dependent");
      }
      q.col(j) /= norm;
    }
  }
  return q;
}

// Orthonormal basis of the orthogonal complement of the column span of an
// orthonormal frame.
inline Matrix complement(const Matrix& frame) {
  const Eigen::Index n = frame.rows();
  const Eigen::Index d = frame.cols();
  if (d == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(frame);
  Matrix full = qr.householderQ() * Matrix::Identity(n, n);
  return full.rightCols(n - d);
}

}  // namespace detail

/// Open ball B(center, radius) = { y : |y - center| < radius }.
struct Ball {
  Point center;
  double radius;

  Ball(Point c, double r) : center(std::move(c)), radius(r) {
    detail::require_finite(center, "ball center");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("ball radius must be positive");
  }

  int ambient() const { return static_cast<int>(center.size()); }
  bool contains(const Point& y) const { return (y - center).norm() < radius; }
  Ball scaled(double factor) const { return Ball(center, radius * factor); }
};

/// Affine d-plane in R^n: a base point plus an orthonormal frame of d
/// directions. The orthogonal complement is cached at construction.
class AffinePlane {
 public:
  AffinePlane(Point base, const Matrix& spanning) : base_(std::move(base)) {
    detail::require_finite(base_, "plane base");
    detail::require_same_dim(base_.size(), spanning.rows());
    const Eigen::Index n = spanning.rows();
    const Eigen::Index d = spanning.cols();
    if (d < 1 || d >= n) throw InputError("plane dimension must satisfy 1 <= d < n");
    if (!spanning.allFinite()) throw InputError("plane directions are not finite");
    frame_ = detail::orthonormalize(spanning);
    normals_ = detail::complement(frame_);
  }

  /// Horizontal coordinate plane R^d x {0} shifted to `base`.
  static AffinePlane axis_aligned(const Point& base, int d) {
    const auto n = base.size();
    return AffinePlane(base, Matrix::Identity(n, d));
  }

  int ambient() const { return static_cast<int>(base_.size()); }
  int dim() const { return static_cast<int>(frame_.cols()); }
  const Point& base() const { return base_; }
  const Matrix& frame() const { return frame_; }
  /// Orthonormal basis of the normal space, n x (n - d).
  const Matrix& normals() const { return normals_; }

  Point project(const Point& x) const {
    detail::require_same_dim(x.size(), base_.size());
    const Vector v = x - base_;
    return base_ + frame_ * (frame_.transpose() * v);
  }

  double distance(const Point& x) const { return (x - project(x)).norm(); }

  /// Coordinates of x - base in the normal basis; its norm is the distance.
  Vector normal_offset(const Point& x) const {
    detail::require_same_dim(x.size(), base_.size());
    return normals_.transpose() * (x - base_);
  }

  /// Parallel plane through `p`.
  AffinePlane through(const Point& p) const { return AffinePlane(p, frame_); }

  /// Same plane, base moved to the foot of the perpendicular from `p`.
  AffinePlane rebased(const Point& p) const { return AffinePlane(project(p), frame_); }

  /// Image under y -> scale * R y + t.
  AffinePlane transformed(const Matrix& rotation, const Vector& shift, double scale) const {
    return AffinePlane(scale * (rotation * base_) + shift, rotation * frame_);
  }

 private:
  Point base_;
  Matrix frame_;
  Matrix normals_;
};

/// Largest principal angle between the direction spaces of two planes of the
/// same dimension, in radians.
inline double principal_angle(const AffinePlane& a, const AffinePlane& b) {
  detail::require_same_dim(a.ambient(), b.ambient());
  if (a.dim() != b.dim()) throw InputError("planes of different dimension");
  Eigen::JacobiSVD<Matrix> svd(a.frame().transpose() * b.frame());
  const double smallest = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
  return std::acos(smallest);
}

enum class ConeVariant { toward_V, toward_V_perp };

/// X(a, V, theta) = { x : dist(x - a, V) < sin(theta) |x - a| } (toward_V) or
/// X(a, V^perp, theta) = { x : dist(x - a, V^perp) < cos(theta) |x - a| }
/// (toward_V_perp), optionally intersected with B(a, radius).
class Cone {
 public:
  Cone(Point apex, const Matrix& directions, double half_angle, ConeVariant variant,
       std::optional<double> radius = std::nullopt)
      : apex_(std::move(apex)), half_angle_(half_angle), variant_(variant), radius_(radius) {
    detail::require_finite(apex_, "cone apex");
    detail::require_same_dim(apex_.size(), directions.rows());
    if (directions.cols() < 1 || directions.cols() >= directions.rows()) {
      throw InputError("cone subspace dimension must satisfy 1 <= d < n");
    }
    if (!(half_angle > 0.0 && half_angle < std::numbers::pi / 2)) {
      throw InputError("cone half angle must lie in (0, pi/2)");
    }
    if (radius_ && !(*radius_ > 0.0)) throw InputError("cone radius must be positive");
    directions_ = detail::orthonormalize(directions);
  }

  const Point& apex() const { return apex_; }
  const Matrix& directions() const { return directions_; }
  double half_angle() const { return half_angle_; }
  ConeVariant variant() const { return variant_; }
  const std::optional<double>& radius() const { return radius_; }

  /// Membership test. The apex itself belongs to the cone by convention.
  bool contains(const Point& x) const {
    detail::require_same_dim(x.size(), apex_.size());
    const Vector v = x - apex_;
    const double len = v.norm();
    if (len == 0.0) return true;
    if (radius_ && !(len < *radius_)) return false;
    const Vector along = directions_ * (directions_.transpose() * v);
    if (variant_ == ConeVariant::toward_V) {
      return (v - along).norm() < std::sin(half_angle_) * len;
    }
    return along.norm() < std::cos(half_angle_) * len;
  }

 private:
  Point apex_;
  Matrix directions_;
  double half_angle_;
  ConeVariant variant_;
  std::optional<double> radius_;
};

inline double dist_point_plane(const Point& x, const AffinePlane& plane) {
  return plane.distance(x);
}

inline Point project_plane(const Point& x, const AffinePlane& plane) { return plane.project(x); }

inline bool in_cone(const Point& x, const Cone& cone) { return cone.contains(x); }

}  // namespace betascan
