#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "betascan/geometry.hpp"

namespace betascan {

using Index = std::size_t;
using IndexList = std::vector<Index>;
using Metadata = std::map<std::string, std::string>;

/// Static kd-tree over the columns of an n x N coordinate matrix.
class KdTree {
 public:
  explicit KdTree(std::shared_ptr<const Matrix> coords) : coords_(std::move(coords)) {
    const Index count = static_cast<Index>(coords_->cols());
    perm_.resize(count);
    std::iota(perm_.begin(), perm_.end(), Index{0});
    if (count > 0) build(0, count);
  }

  /// Indices y with |y - c| < r, in increasing index order.
  IndexList ball(const Vector& c, double r) const {
    IndexList out;
    if (nodes_.empty() || !(r > 0.0)) return out;
    ball_rec(0, c, r, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Number of points with |y - c| < r.
  Index count_ball(const Vector& c, double r) const {
    Index n = 0;
    if (nodes_.empty() || !(r > 0.0)) return n;
    count_rec(0, c, r * r, n);
    return n;
  }

  /// Nearest point to c; ties go to the smaller index. Requires a nonempty tree.
  Index nearest(const Vector& c, double* dist = nullptr) const {
    if (nodes_.empty()) throw InputError("nearest-neighbour query on an empty sample");
    Index best = perm_[0];
    double best_d2 = std::numeric_limits<double>::infinity();
    nearest_rec(0, c, best, best_d2);
    if (dist) *dist = std::sqrt(best_d2);
    return best;
  }

 private:
  struct Node {
    Index begin, end;
    int axis;
    double split;
    Index left, right;  // 0 means leaf (root is never a child)
    Vector lo, hi;
  };

  static constexpr Index kLeaf = 16;

  Index build(Index begin, Index end) {
    const Matrix& X = *coords_;
    const Index id = nodes_.size();
    nodes_.push_back(Node{begin, end, -1, 0.0, 0, 0, Vector(), Vector()});
    Vector lo = X.col(static_cast<Eigen::Index>(perm_[begin]));
    Vector hi = lo;
    for (Index i = begin + 1; i < end; ++i) {
      const auto col = X.col(static_cast<Eigen::Index>(perm_[i]));
      lo = lo.cwiseMin(col);
      hi = hi.cwiseMax(col);
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (end - begin <= kLeaf) return id;
    Eigen::Index axis = 0;
    const double width = (hi - lo).maxCoeff(&axis);
    if (!(width > 0.0)) return id;
    const Index mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin),
                     perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                     perm_.begin() + static_cast<std::ptrdiff_t>(end), [&](Index a, Index b) {
                       const double va = X(axis, static_cast<Eigen::Index>(a));
                       const double vb = X(axis, static_cast<Eigen::Index>(b));
                       return va < vb || (va == vb && a < b);
                     });
    nodes_[id].axis = static_cast<int>(axis);
    nodes_[id].split = X(axis, static_cast<Eigen::Index>(perm_[mid]));
    const Index l = build(begin, mid);
    const Index r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  static double box_d2(const Node& nd, const Vector& c) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      double e = 0.0;
      if (c[i] < nd.lo[i]) e = nd.lo[i] - c[i];
      else if (c[i] > nd.hi[i]) e = c[i] - nd.hi[i];
      s += e * e;
    }
    return s;
  }

  static double box_far_d2(const Node& nd, const Vector& c) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double e = std::max(std::abs(c[i] - nd.lo[i]), std::abs(c[i] - nd.hi[i]));
      s += e * e;
    }
    return s;
  }

  double d2(Index i, const Vector& c) const {
    return (coords_->col(static_cast<Eigen::Index>(i)) - c).squaredNorm();
  }

  // Exact open-ball test uses the norm, matching Ball::contains.
  bool inside(Index i, const Vector& c, double r) const {
    return (coords_->col(static_cast<Eigen::Index>(i)) - c).norm() < r;
  }

  void ball_rec(Index id, const Vector& c, double r, double r2, IndexList& out) const {
    const Node& nd = nodes_[id];
    if (box_d2(nd, c) > r2 * (1.0 + 1e-12)) return;
    if (nd.left == 0) {
      for (Index k = nd.begin; k < nd.end; ++k) {
        if (inside(perm_[k], c, r)) out.push_back(perm_[k]);
      }
      return;
    }
    ball_rec(nd.left, c, r, r2, out);
    ball_rec(nd.right, c, r, r2, out);
  }

  void count_rec(Index id, const Vector& c, double r2, Index& n) const {
    const Node& nd = nodes_[id];
    if (box_d2(nd, c) > r2 * (1.0 + 1e-12)) return;
    if (box_far_d2(nd, c) < r2 * (1.0 - 1e-12)) {
      n += nd.end - nd.begin;
      return;
    }
    if (nd.left == 0) {
      const double r = std::sqrt(r2);
      for (Index k = nd.begin; k < nd.end; ++k) n += inside(perm_[k], c, r) ? 1 : 0;
      return;
    }
    count_rec(nd.left, c, r2, n);
    count_rec(nd.right, c, r2, n);
  }

  void nearest_rec(Index id, const Vector& c, Index& best, double& best_d2) const {
    const Node& nd = nodes_[id];
    if (box_d2(nd, c) > best_d2) return;
    if (nd.left == 0) {
      for (Index k = nd.begin; k < nd.end; ++k) {
        const double v = d2(perm_[k], c);
        if (v < best_d2 || (v == best_d2 && perm_[k] < best)) {
          best_d2 = v;
          best = perm_[k];
        }
      }
      return;
    }
    const bool go_left = c[nd.axis] < nd.split;
    nearest_rec(go_left ? nd.left : nd.right, c, best, best_d2);
    nearest_rec(go_left ? nd.right : nd.left, c, best, best_d2);
  }

  std::shared_ptr<const Matrix> coords_;
  IndexList perm_;
  std::vector<Node> nodes_;
};

/// Finite sample standing for a d-dimensional set E in R^n at covering
/// resolution h. Coordinates are stored column-wise (n x N) and shared between
/// copies; the spatial index is built on first use.
class PointSample {
 public:
  PointSample(Matrix coords, int intrinsic_d, double resolution_h, Metadata meta = {})
      : state_(std::make_shared<State>()) {
    const auto n = coords.rows();
    if (n < 1) throw InputError("ambient dimension must be at least 1");
    // d = 0 marks a bare point set such as a Whitney obstacle in R^m.
    if (intrinsic_d < 0 || intrinsic_d >= n) {
      throw InputError("intrinsic dimension must satisfy 0 <= d < n");
    }
    if (!(resolution_h >= 0.0) || !std::isfinite(resolution_h)) {
      throw InputError("resolution must be finite and nonnegative");
    }
    if (!coords.allFinite()) throw InputError("sample has non-finite coordinates");
    state_->coords = std::make_shared<const Matrix>(std::move(coords));
    d_ = intrinsic_d;
    h_ = resolution_h;
    meta_ = std::move(meta);
  }

  static PointSample from_points(const std::vector<Point>& pts, int n, int d, double h,
                                 Metadata meta = {}) {
    Matrix m(n, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      detail::require_same_dim(pts[i].size(), n);
      m.col(static_cast<Eigen::Index>(i)) = pts[i];
    }
    return PointSample(std::move(m), d, h, std::move(meta));
  }

  int ambient() const { return static_cast<int>(state_->coords->rows()); }
  int intrinsic() const { return d_; }
  double resolution() const { return h_; }
  Index size() const { return static_cast<Index>(state_->coords->cols()); }
  bool empty() const { return size() == 0; }
  const Matrix& coords() const { return *state_->coords; }
  Point point(Index i) const { return state_->coords->col(static_cast<Eigen::Index>(i)); }
  auto col(Index i) const { return state_->coords->col(static_cast<Eigen::Index>(i)); }
  const Metadata& metadata() const { return meta_; }

  PointSample with_metadata(Metadata meta) const {
    PointSample s = *this;
    s.meta_ = std::move(meta);
    return s;
  }

  /// Indices of points in the open ball B(c, r).
  IndexList ball(const Point& c, double r) const {
    detail::require_same_dim(c.size(), ambient());
    return index().ball(c, r);
  }
  IndexList ball(const Ball& b) const { return ball(b.center, b.radius); }

  Index count_ball(const Point& c, double r) const {
    detail::require_same_dim(c.size(), ambient());
    return index().count_ball(c, r);
  }

  Index nearest(const Point& c, double* dist = nullptr) const {
    detail::require_same_dim(c.size(), ambient());
    return index().nearest(c, dist);
  }

  double dist_to(const Point& c) const {
    if (empty()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    nearest(c, &d);
    return d;
  }

  PointSample subset(std::span<const Index> idx) const {
    Matrix m(ambient(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      m.col(static_cast<Eigen::Index>(k)) = col(idx[k]);
    }
    return PointSample(std::move(m), d_, h_, meta_);
  }

  /// Image under y -> scale * R y + shift; the resolution scales with |scale|.
  PointSample transformed(const Matrix& rotation, const Vector& shift, double scale) const {
    Matrix m = scale * (rotation * coords());
    m.colwise() += shift;
    return PointSample(std::move(m), d_, h_ * std::abs(scale), meta_);
  }

  double diameter_bound() const {
    if (empty()) return 0.0;
    const Vector lo = coords().rowwise().minCoeff();
    const Vector hi = coords().rowwise().maxCoeff();
    return (hi - lo).norm();
  }

 private:
  struct State {
    std::shared_ptr<const Matrix> coords;
    std::once_flag once;
    std::unique_ptr<KdTree> tree;
  };

  const KdTree& index() const {
    std::call_once(state_->once,
                   [this] { state_->tree = std::make_unique<KdTree>(state_->coords); });
    return *state_->tree;
  }

  std::shared_ptr<State> state_;
  int d_ = 1;
  double h_ = 0.0;
  Metadata meta_;
};

}  // namespace betascan
