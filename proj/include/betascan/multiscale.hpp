#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "betascan/beta.hpp"
#include "betascan/geometry.hpp"
#include "betascan/sample.hpp"
#include "betascan/util.hpp"

namespace betascan {

struct CubeId {
  int k = 0;
  std::size_t j = 0;
  bool operator==(const CubeId&) const = default;
};

struct ChristCube {
  CubeId id;
  Index center_index = 0;
  Point center;
  int scale_k = 0;
  IndexList members;
  std::optional<CubeId> parent;
  std::vector<CubeId> children;
  double ell = 0.0;
};

struct ChristOptions {
  double unit = 1.0;
  double lambda = 20.0;
  std::uint64_t seed = 1;
};

namespace detail {

struct CellHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto x : v) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// Centers on a uniform hash grid; supports "any center closer than s?".
class NetGrid {
 public:
  NetGrid(const PointSample& E, double s) : E_(E), s_(s) {}

  bool has_close(Index i) const {
    const auto key = cell(i);
    const int n = E_.ambient();
    std::vector<std::int64_t> probe(key.size());
    std::vector<int> off(static_cast<std::size_t>(n), -1);
    while (true) {
      for (int a = 0; a < n; ++a) probe[static_cast<std::size_t>(a)] = key[static_cast<std::size_t>(a)] + off[static_cast<std::size_t>(a)];
      auto it = cells_.find(probe);
      if (it != cells_.end()) {
        for (Index c : it->second) {
          if ((E_.col(c) - E_.col(i)).norm() < s_) return true;
        }
      }
      int a = 0;
      while (a < n && ++off[static_cast<std::size_t>(a)] > 1) off[static_cast<std::size_t>(a++)] = -1;
      if (a == n) break;
    }
    return false;
  }

  void add(Index i) { cells_[cell(i)].push_back(i); }

 private:
  std::vector<std::int64_t> cell(Index i) const {
    std::vector<std::int64_t> k(static_cast<std::size_t>(E_.ambient()));
    for (int a = 0; a < E_.ambient(); ++a) {
      k[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::floor(E_.col(i)[a] / s_));
    }
    return k;
  }

  const PointSample& E_;
  double s_;
  std::unordered_map<std::vector<std::int64_t>, std::vector<Index>, CellHash> cells_;
};

}  // namespace detail

/// Nested partition of a sample into Christ cubes at levels k_min..k_max.
class CubeTree {
 public:
  double delta = 0.5;
  double unit = 1.0;
  double C1 = 0.0;  // diam(Q) <= C1 * ell(Q)
  double a0 = 0.25;  // guaranteed inner-ball constant; 0 when none is
  int root_scale = 0;
  int finest_scale = 0;
  std::uint64_t seed = 1;
  std::vector<std::vector<ChristCube>> levels;  // levels[k - root_scale]

  const std::vector<ChristCube>& level(int k) const {
    return levels.at(static_cast<std::size_t>(k - root_scale));
  }
  const ChristCube& cube(const CubeId& id) const { return level(id.k).at(id.j); }
  double ell(int k) const { return unit * std::pow(delta, k); }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.size();
    return n;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["delta"] = delta;
    j["unit"] = unit;
    j["C1"] = C1;
    j["a0"] = a0;
    j["root_scale"] = root_scale;
    j["finest_scale"] = finest_scale;
    j["seed"] = seed;
    j["cubes"] = nlohmann::json::array();
    for (const auto& lvl : levels) {
      for (const auto& q : lvl) {
        nlohmann::json c;
        c["id"] = {q.id.k, q.id.j};
        c["center"] = std::vector<double>(q.center.data(), q.center.data() + q.center.size());
        c["scale"] = q.scale_k;
        c["ell"] = q.ell;
        c["members"] = q.members.size();
        c["parent"] = q.parent ? nlohmann::json{q.parent->k, q.parent->j} : nlohmann::json(nullptr);
        c["children"] = q.children.size();
        j["cubes"].push_back(c);
      }
    }
    return j;
  }
};

/// Christ cubes from nested greedy nets: level-k centers form a maximal
/// delta^k-separated net (in units of `unit`) containing the level k-1 net.
/// Every point goes to its nearest finest-level center and every center to
/// the nearest center one level up, so level-k cubes have radius at most
/// delta^k / (1 - delta). The same chain bound keeps every point within
/// a0 * delta^k of a level-k center inside that center's cube, with
/// a0 = 1/2 - delta / (1 - delta): 1/4 at delta = 1/5, nothing for
/// delta >= 1/3.
inline CubeTree build_christ_cubes(const PointSample& E, double delta, int k_min, int k_max,
                                   const ChristOptions& opts = {}) {
  if (!(delta > 0.0 && delta <= 0.5)) throw InputError("delta must lie in (0, 1/2]");
  if (k_min > k_max) throw InputError("k_min must not exceed k_max");
  if (!(opts.unit > 0.0)) throw InputError("unit must be positive");
  if (E.empty()) throw InputError("empty sample");
  const double floor_len = opts.lambda * E.resolution();
  while (k_max >= k_min && opts.unit * std::pow(delta, k_max) < floor_len) --k_max;
  if (k_max < k_min) throw PreconditionError("no cube scale survives the resolution cut");

  CubeTree tree;
  tree.delta = delta;
  tree.unit = opts.unit;
  tree.root_scale = k_min;
  tree.finest_scale = k_max;
  tree.seed = opts.seed;
  tree.C1 = 2.0 / (1.0 - delta);
  tree.a0 = std::max(0.0, 0.5 - delta / (1.0 - delta));
  const std::size_t L = static_cast<std::size_t>(k_max - k_min + 1);

  const auto order = seeded_permutation(E.size(), opts.seed);
  std::vector<IndexList> nets(L);
  IndexList current;
  for (std::size_t l = 0; l < L; ++l) {
    const double s = tree.ell(k_min + static_cast<int>(l));
    detail::NetGrid grid(E, s);
    for (Index c : current) grid.add(c);
    for (Index i : order) {
      if (!grid.has_close(i)) {
        grid.add(i);
        current.push_back(i);
      }
    }
    nets[l] = current;
  }

  // Label of every net point and every sample point per level.
  std::vector<PointSample> center_sets;
  for (const auto& net : nets) center_sets.push_back(E.subset(net));
  std::vector<std::vector<std::size_t>> label(L, std::vector<std::size_t>(E.size()));
  for (Index i = 0; i < E.size(); ++i) label[L - 1][i] = center_sets[L - 1].nearest(E.point(i));
  // parent_of[l][c]: index in nets[l-1] of the parent of nets[l][c].
  std::vector<std::vector<std::size_t>> parent_of(L);
  for (std::size_t l = L - 1; l >= 1; --l) {
    const auto& net = nets[l];
    parent_of[l].resize(net.size());
    const std::size_t shared = nets[l - 1].size();  // nets are prefixes of each other
    for (std::size_t c = 0; c < net.size(); ++c) {
      parent_of[l][c] = c < shared ? c : center_sets[l - 1].nearest(E.point(net[c]));
    }
    for (Index i = 0; i < E.size(); ++i) label[l - 1][i] = parent_of[l][label[l][i]];
  }

  tree.levels.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const int k = k_min + static_cast<int>(l);
    auto& lvl = tree.levels[l];
    lvl.resize(nets[l].size());
    for (std::size_t c = 0; c < nets[l].size(); ++c) {
      auto& q = lvl[c];
      q.id = {k, c};
      q.center_index = nets[l][c];
      q.center = E.point(nets[l][c]);
      q.scale_k = k;
      q.ell = tree.ell(k);
      if (l > 0) q.parent = CubeId{k - 1, parent_of[l][c]};
    }
    for (Index i = 0; i < E.size(); ++i) lvl[label[l][i]].members.push_back(i);
    if (l > 0) {
      for (std::size_t c = 0; c < nets[l].size(); ++c) {
        tree.levels[l - 1][parent_of[l][c]].children.push_back({k, c});
      }
    }
  }
  return tree;
}

struct ChristReport {
  bool partition = true;
  bool nesting = true;
  bool separation = true;
  bool radius = true;       // members within ell / (1 - delta) of the center
  bool center_ball = true;  // no other cube's member within a0 * ell of the center
  double worst_radius_ratio = 0.0;
  double empirical_a0 = std::numeric_limits<double>::infinity();
  bool ok() const { return partition && nesting && separation && radius && center_ball; }
};

/// Exhaustive structural verification of a cube tree against its sample.
inline ChristReport verify_christ_tree(const PointSample& E, const CubeTree& tree) {
  ChristReport rep;
  const std::size_t N = E.size();
  std::vector<std::vector<std::size_t>> owner(tree.levels.size(), std::vector<std::size_t>(N, SIZE_MAX));
  for (std::size_t l = 0; l < tree.levels.size(); ++l) {
    for (const auto& q : tree.levels[l]) {
      for (Index i : q.members) {
        if (owner[l][i] != SIZE_MAX) rep.partition = false;
        owner[l][i] = q.id.j;
      }
    }
    for (Index i = 0; i < N; ++i) {
      if (owner[l][i] == SIZE_MAX) rep.partition = false;
    }
  }
  if (!rep.partition) return rep;
  for (std::size_t l = 0; l < tree.levels.size(); ++l) {
    const auto& lvl = tree.levels[l];
    const double ell = lvl.empty() ? 0.0 : lvl.front().ell;
    for (const auto& q : lvl) {
      if (l > 0) {
        for (Index i : q.members) {
          if (!q.parent || owner[l - 1][i] != q.parent->j) rep.nesting = false;
        }
      }
      double rad = 0.0;
      for (Index i : q.members) rad = std::max(rad, (E.col(i) - q.center).norm());
      rep.worst_radius_ratio = std::max(rep.worst_radius_ratio, rad / ell);
      if (rad > ell / (1.0 - tree.delta) * (1.0 + 1e-12)) rep.radius = false;
      // Nearest point of another cube bounds the interior ball.
      double other = std::numeric_limits<double>::infinity();
      for (Index i : E.ball(q.center, 2.0 * ell)) {
        if (owner[l][i] != q.id.j) other = std::min(other, (E.col(i) - q.center).norm());
      }
      rep.empirical_a0 = std::min(rep.empirical_a0, other / ell);
      if (other < tree.a0 * ell) rep.center_ball = false;
    }
    const PointSample centers = [&] {
      IndexList idx;
      for (const auto& q : lvl) idx.push_back(q.center_index);
      return E.subset(idx);
    }();
    for (std::size_t c = 0; c < lvl.size(); ++c) {
      if (centers.count_ball(lvl[c].center, ell * (1.0 - 1e-12)) > 1) rep.separation = false;
    }
  }
  return rep;
}

/// beta_p over the ball B(x_Q, C1 * ell(Q)).
inline BetaValue beta_cube(const BetaEvaluator& ev, const ChristCube& Q, double p, double C1) {
  if (!(C1 > 0.0)) throw InputError("C1 must be positive");
  return ev.beta_p(Ball(Q.center, C1 * Q.ell), p);
}

struct WhitneyCube {
  Vector corner;
  double side = 0.0;
  double dist_to_F = 0.0;

  bool contains(const Vector& x) const {
    for (Eigen::Index a = 0; a < corner.size(); ++a) {
      if (!(x[a] >= corner[a] && x[a] < corner[a] + side)) return false;
    }
    return true;
  }
  double diam() const { return side * std::sqrt(static_cast<double>(corner.size())); }
};

struct WhitneyOptions {
  double A = 4.0;
  double min_side = 0.0;  // 0 means bbox side * 2^-12
};

struct WhitneyResult {
  std::vector<WhitneyCube> cubes;
  double split_ratio = 0.0;  // cubes split while side > dist / split_ratio
  std::size_t discarded = 0;  // cubes below min_side that still touched the collar
};

namespace detail {

inline double box_point_dist(const Vector& corner, double side, const Vector& y) {
  double s = 0.0;
  for (Eigen::Index a = 0; a < y.size(); ++a) {
    double e = 0.0;
    if (y[a] < corner[a]) e = corner[a] - y[a];
    else if (y[a] > corner[a] + side) e = y[a] - corner[a] - side;
    s += e * e;
  }
  return std::sqrt(s);
}

inline double box_set_dist(const PointSample& F, const Vector& corner, double side) {
  const Vector mid = corner + Vector::Constant(corner.size(), side / 2.0);
  double dc = 0.0;
  F.nearest(mid, &dc);
  const double half_diag = side * std::sqrt(static_cast<double>(corner.size())) / 2.0;
  double best = dc;
  for (Index i : F.ball(mid, dc + half_diag + 1e-12 * (1.0 + dc))) {
    best = std::min(best, box_point_dist(corner, side, F.point(i)));
  }
  return best;
}

}  // namespace detail

/// Dyadic Whitney cubes of the cube [corner, corner + side)^m away from F.
/// A cube of side s is split while s > dist(Q, F) / c. With c in
/// [1/A, (A - 2 sqrt(m)) / 2] every kept cube that arose from a split
/// satisfies dist / A <= s <= A dist.
inline WhitneyResult whitney_decompose(const PointSample& F, const Vector& corner, double side,
                                       const WhitneyOptions& opts = {}) {
  if (F.empty()) throw InputError("Whitney decomposition of an empty set");
  detail::require_same_dim(corner.size(), F.ambient());
  if (!(side > 0.0)) throw InputError("bounding box side must be positive");
  const double m = static_cast<double>(F.ambient());
  const double lo = 1.0 / opts.A;
  const double hi = (opts.A - 2.0 * std::sqrt(m)) / 2.0;
  if (!(hi >= lo)) throw InputError("Whitney constant A too small for this dimension");
  const double c = std::sqrt(lo * hi);
  const double min_side = opts.min_side > 0.0 ? opts.min_side : side * std::ldexp(1.0, -12);
  WhitneyResult res;
  res.split_ratio = c;
  std::function<void(const Vector&, double)> rec = [&](const Vector& cor, double s) {
    const double dist = detail::box_set_dist(F, cor, s);
    if (s > dist / c) {
      if (s / 2.0 < min_side) {
        ++res.discarded;
        return;
      }
      const auto dim = cor.size();
      for (std::int64_t mask = 0; mask < (std::int64_t{1} << dim); ++mask) {
        Vector child = cor;
        for (Eigen::Index a = 0; a < dim; ++a) {
          if (mask & (std::int64_t{1} << a)) child[a] += s / 2.0;
        }
        rec(child, s / 2.0);
      }
      return;
    }
    if (dist <= opts.A * s && s <= opts.A * dist) res.cubes.push_back({cor, s, dist});
    else ++res.discarded;
  };
  rec(corner, side);
  return res;
}

struct BubbleResult {
  IndexList points;
  bool empty_K_warning = false;
};

/// B(K) = { y in E ∩ 2 Q0 : y outside X(x, V^perp, theta, radius) for all x in K }.
inline BubbleResult bubble_region(const PointSample& E, const IndexList& K, const Matrix& V,
                                  double theta, double radius, const Ball& Q0) {
  BubbleResult out;
  const IndexList pool = E.ball(Q0.center, 2.0 * Q0.radius);
  if (K.empty()) {
    out.points = pool;
    out.empty_K_warning = true;
    return out;
  }
  const PointSample KS = E.subset(K);
  for (Index y : pool) {
    bool covered = false;
    const Point py = E.point(y);
    for (Index k : KS.ball(py, radius)) {
      const Cone cone(KS.point(k), V, theta, ConeVariant::toward_V_perp, radius);
      if (cone.contains(py)) {
        covered = true;
        break;
      }
    }
    if (!covered) out.points.push_back(y);
  }
  return out;
}

/// T_S: bubble points whose coordinates along V (relative to `origin`) fall in S.
inline IndexList cylinder_fibers(const WhitneyCube& S, const IndexList& bubble, const PointSample& E,
                                 const Matrix& V, const Point& origin) {
  detail::require_same_dim(S.corner.size(), V.cols());
  const Matrix Q = detail::orthonormalize(V);
  IndexList out;
  for (Index y : bubble) {
    if (S.contains(Q.transpose() * (E.point(y) - origin))) out.push_back(y);
  }
  return out;
}

}  // namespace betascan
