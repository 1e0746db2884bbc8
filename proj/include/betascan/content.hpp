#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "betascan/sample.hpp"
#include "betascan/util.hpp"

namespace betascan {

enum class ContentMethod { single_scale, adaptive_dp };

inline const char* to_string(ContentMethod m) {
  return m == ContentMethod::single_scale ? "single_scale" : "adaptive_dp";
}

struct ContentEstimate {
  double value = 0.0;
  ContentMethod method = ContentMethod::adaptive_dp;
  Vector grid_shift;
  double mesh_floor = 0.0;
};

/// A family of shifted, nested dyadic grids. Grid s has cells of side
/// m0 * 2^j with a fixed origin per shift, so cells at different levels (and
/// for different ball radii) nest. Origins sit far from 0 in units of m0 so
/// that the relative offset differs from level to level.
class GridFamily {
 public:
  GridFamily(int n, double m0, int shifts) : m0_(m0), origin_(n, shifts) {
    if (!(m0 > 0.0) || !std::isfinite(m0)) throw InputError("mesh floor must be positive");
    if (shifts < 1) throw InputError("shifts must be at least 1");
    static constexpr double kIrr[] = {1.4142135623730951, 1.7320508075688772, 2.23606797749979,
                                      2.6457513110645907, 3.3166247903554,    3.605551275463989,
                                      4.123105625617661,  4.358898943540674};
    for (int a = 0; a < n; ++a) {
      const double alpha = a < 8 ? kIrr[a] - std::floor(kIrr[a])
                                 : std::fmod(0.6180339887498949 * (a + 1), 1.0);
      for (int s = 0; s < shifts; ++s) {
        const double phi = std::fmod(0.5 + (s + 1) * alpha, 1.0);
        origin_(a, s) = phi * kSpread;
      }
    }
  }

  int ambient() const { return static_cast<int>(origin_.rows()); }
  int shifts() const { return static_cast<int>(origin_.cols()); }
  double m0() const { return m0_; }
  Vector shift_vector(int s) const { return origin_.col(s) * m0_; }

  /// Integer coordinates of the finest cell containing y in grid s.
  template <class Col>
  void finest_cell(const Col& y, int s, std::int64_t* out) const {
    for (Eigen::Index a = 0; a < origin_.rows(); ++a) {
      out[a] = static_cast<std::int64_t>(std::floor(y[a] / m0_ - origin_(a, s)));
    }
  }

  static constexpr double kSpread = 16777216.0;  // 2^24

 private:
  double m0_;
  Matrix origin_;  // in units of m0
};

namespace detail {

// Quadtree/octree forest over the occupied cells of one grid. Nodes
// [0, leaves) are the leaf cells; parents follow level by level.
struct Forest {
  std::vector<std::int32_t> parent;
  std::vector<double> cap;  // diam(Q)^d
  std::vector<std::size_t> level_start;
  std::size_t leaves = 0;

  std::size_t nodes() const { return parent.size(); }
  std::size_t levels() const { return level_start.size() - 1; }
  std::size_t level_count(std::size_t l) const { return level_start[l + 1] - level_start[l]; }
};

// Sorts keys (count x n, row-major) and returns, for each input row, the id of
// its distinct key; `distinct` receives the unique keys in sorted order.
inline std::vector<std::int32_t> group_keys(const std::vector<std::int64_t>& keys, int n,
                                            std::vector<std::int64_t>& distinct) {
  const std::size_t count = n ? keys.size() / static_cast<std::size_t>(n) : 0;
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto row = [&](std::size_t i) { return keys.data() + i * static_cast<std::size_t>(n); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(row(a), row(a) + n, row(b), row(b) + n);
  });
  std::vector<std::int32_t> id(count);
  distinct.clear();
  std::int32_t next = -1;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = order[k];
    if (k == 0 || !std::equal(row(i), row(i) + n, row(order[k - 1]))) {
      ++next;
      distinct.insert(distinct.end(), row(i), row(i) + n);
    }
    id[i] = next;
  }
  return id;
}

// Builds the forest above the given distinct leaf keys. Stops once a level
// has a single node, or once the side reaches `top_side`.
inline Forest build_forest(std::vector<std::int64_t> keys, int n, int d, double leaf_side,
                           double top_side) {
  Forest f;
  const double diam_factor = std::pow(std::sqrt(static_cast<double>(n)), d);
  std::size_t count = n ? keys.size() / static_cast<std::size_t>(n) : 0;
  f.leaves = count;
  f.level_start.push_back(0);
  double side = leaf_side;
  f.parent.assign(count, -1);
  f.cap.assign(count, diam_factor * std::pow(side, d));
  f.level_start.push_back(count);
  for (int guard = 0; count > 1 && side < top_side && guard < 80; ++guard) {
    for (auto& k : keys) k >>= 1;
    std::vector<std::int64_t> up;
    const auto id = group_keys(keys, n, up);
    const std::size_t base = f.parent.size();
    const std::size_t lo = f.level_start[f.level_start.size() - 2];
    for (std::size_t i = 0; i < count; ++i) {
      f.parent[lo + i] = static_cast<std::int32_t>(base + static_cast<std::size_t>(id[i]));
    }
    side *= 2.0;
    const std::size_t next = up.size() / static_cast<std::size_t>(n);
    f.parent.resize(base + next, -1);
    f.cap.resize(base + next, diam_factor * std::pow(side, d));
    f.level_start.push_back(base + next);
    keys = std::move(up);
    count = next;
  }
  return f;
}

// Incremental evaluation of cost(Q) = min(cap(Q), sum of children) while
// leaves are switched on one at a time.
struct ForestState {
  std::vector<double> cost;
  std::vector<double> childsum;
  double total = 0.0;

  void reset(const Forest& f) {
    cost.assign(f.nodes(), 0.0);
    childsum.assign(f.nodes(), 0.0);
    total = 0.0;
  }

  void activate(const Forest& f, std::size_t leaf) {
    if (cost[leaf] > 0.0) return;
    double delta = f.cap[leaf];
    cost[leaf] = delta;
    std::size_t v = leaf;
    while (true) {
      const std::int32_t p = f.parent[v];
      if (p < 0) {
        total += delta;
        return;
      }
      const auto up = static_cast<std::size_t>(p);
      childsum[up] += delta;
      const double nc = std::min(f.cap[up], childsum[up]);
      delta = nc - cost[up];
      cost[up] = nc;
      if (delta == 0.0) return;
      v = up;
    }
  }
};

inline double forest_cost(const Forest& f) {
  ForestState st;
  st.reset(f);
  for (std::size_t i = 0; i < f.leaves; ++i) st.activate(f, i);
  return st.total;
}

inline double single_scale_cost(const Forest& f) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < f.levels(); ++l) {
    best = std::min(best, static_cast<double>(f.level_count(l)) * f.cap[f.level_start[l]]);
  }
  return best;
}

struct LeafEntry {
  double value;
  int shift;
  std::size_t leaf;
};

// Level-set sweep: integral over t in (0, tmax] of H({f > t}) t^{p-1} with
// H = min over shifts of the forest cost of the active leaves, capped at
// `cap`. Each entry carries the maximum of f over one leaf.
inline double choquet_sweep(std::vector<LeafEntry>& entries, const std::vector<Forest>& forests,
                            std::vector<ForestState>& states, double p, double tmax, double cap) {
  std::sort(entries.begin(), entries.end(), [](const LeafEntry& a, const LeafEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.shift != b.shift) return a.shift < b.shift;
    return a.leaf < b.leaf;
  });
  for (std::size_t s = 0; s < forests.size(); ++s) states[s].reset(forests[s]);
  auto powp = [p](double t) { return p == 1.0 ? t : std::pow(t, p); };
  double acc = 0.0;
  std::size_t i = 0;
  while (i < entries.size()) {
    const double v = entries[i].value;
    if (!(v > 0.0)) break;
    while (i < entries.size() && entries[i].value == v) {
      const auto& e = entries[i];
      states[static_cast<std::size_t>(e.shift)].activate(forests[static_cast<std::size_t>(e.shift)],
                                                         e.leaf);
      ++i;
    }
    const double next = i < entries.size() ? std::max(entries[i].value, 0.0) : 0.0;
    const double a = std::min(v, tmax);
    const double b = std::min(next, tmax);
    if (a <= b) continue;
    double H = std::numeric_limits<double>::infinity();
    for (const auto& st : states) H = std::min(H, st.total);
    H = std::min(H, cap);
    acc += H * (powp(a) - powp(b)) / p;
  }
  return acc;
}

inline void require_content_args(int d, int n) {
  if (d < 1 || d >= n) throw InputError("content dimension must satisfy 1 <= d < n");
}

}  // namespace detail

/// Dyadic-cover estimate of H^d_inf over the points `idx` of A on a given grid
/// family. Leaves have side m0; the value is the minimum over shifts.
inline ContentEstimate hausdorff_content(const PointSample& A, std::span<const Index> idx, int d,
                                         const GridFamily& grid,
                                         ContentMethod method = ContentMethod::adaptive_dp) {
  detail::require_content_args(d, A.ambient());
  detail::require_same_dim(grid.ambient(), A.ambient());
  const int n = A.ambient();
  ContentEstimate out;
  out.method = method;
  out.mesh_floor = grid.m0();
  out.grid_shift = grid.shift_vector(0);
  if (idx.empty()) return out;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> keys(idx.size() * static_cast<std::size_t>(n));
  for (int s = 0; s < grid.shifts(); ++s) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      grid.finest_cell(A.col(idx[k]), s, keys.data() + k * static_cast<std::size_t>(n));
    }
    std::vector<std::int64_t> leaves;
    detail::group_keys(keys, n, leaves);
    const auto f = detail::build_forest(std::move(leaves), n, d, grid.m0(),
                                        std::numeric_limits<double>::infinity());
    const double v =
        method == ContentMethod::adaptive_dp ? detail::forest_cost(f) : detail::single_scale_cost(f);
    if (v < best) {
      best = v;
      out.grid_shift = grid.shift_vector(s);
    }
  }
  out.value = best;
  return out;
}

/// Dyadic-cover estimate of H^d_inf(A) with leaves of side `mesh_floor`.
inline ContentEstimate hausdorff_content(const PointSample& A, int d, double mesh_floor,
                                         int shifts = 4,
                                         ContentMethod method = ContentMethod::adaptive_dp) {
  if (!(mesh_floor > 0.0)) throw InputError("mesh floor must be positive");
  if (A.resolution() > 0.0 && mesh_floor < A.resolution()) {
    throw InputError("mesh floor below the sample resolution");
  }
  const GridFamily grid(A.ambient(), mesh_floor, shifts);
  IndexList all(A.size());
  std::iota(all.begin(), all.end(), Index{0});
  return hausdorff_content(A, all, d, grid, method);
}

/// p-Choquet integral of f over A, i.e. the integral over t > 0 of
/// H^d_inf({f > t}) t^{p-1}, with level sets cut exactly at the values of f.
inline double choquet_integral(const PointSample& A, std::span<const double> f, int d, double p,
                               double mesh_floor, int shifts = 4) {
  detail::require_content_args(d, A.ambient());
  if (f.size() != A.size()) throw InputError("one f value per point required");
  if (!(p >= 1.0)) throw InputError("p must be at least 1");
  if (!(mesh_floor > 0.0)) throw InputError("mesh floor must be positive");
  for (double v : f) {
    if (!std::isfinite(v) || v < 0.0) throw InputError("f must be finite and nonnegative");
  }
  if (A.empty()) return 0.0;
  const int n = A.ambient();
  const GridFamily grid(n, mesh_floor, shifts);
  std::vector<detail::Forest> forests;
  std::vector<detail::LeafEntry> entries;
  std::vector<std::int64_t> keys(A.size() * static_cast<std::size_t>(n));
  for (int s = 0; s < shifts; ++s) {
    for (Index k = 0; k < A.size(); ++k) {
      grid.finest_cell(A.col(k), s, keys.data() + k * static_cast<std::size_t>(n));
    }
    std::vector<std::int64_t> leaves;
    const auto id = detail::group_keys(keys, n, leaves);
    const std::size_t L = leaves.size() / static_cast<std::size_t>(n);
    std::vector<double> maxf(L, 0.0);
    for (Index k = 0; k < A.size(); ++k) {
      auto& m = maxf[static_cast<std::size_t>(id[k])];
      m = std::max(m, f[k]);
    }
    for (std::size_t l = 0; l < L; ++l) entries.push_back({maxf[l], s, l});
    forests.push_back(detail::build_forest(std::move(leaves), n, d, mesh_floor,
                                           std::numeric_limits<double>::infinity()));
  }
  std::vector<detail::ForestState> states(forests.size());
  return detail::choquet_sweep(entries, forests, states, p,
                               std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity());
}

struct ContentOptions {
  double mesh_floor = 0.0;  // 0 means 2 * resolution_h
  int shifts = 4;
  double mesh_rel = 1.0 / 64.0;  // leaf side is at most this fraction of the ball radius
};

/// Content of level sets inside one ball E ∩ B(x, r), precomputed so that
/// many Choquet integrals with different f can be evaluated cheaply. Leaves
/// have side m0 * 2^J, the largest such not exceeding max(m0, mesh_rel * r),
/// and every estimate is capped by (2r)^d, the content bound of any subset of
/// the ball.
class LocalContent {
 public:
  LocalContent(const PointSample& E, IndexList idx, double r, int d, const GridFamily& grid,
               double mesh_rel)
      : idx_(std::move(idx)), d_(d), cap_(std::pow(2.0 * r, d)) {
    const int n = E.ambient();
    int J = 0;
    double side = grid.m0();
    while (side * 2.0 <= mesh_rel * r && J < 62) {
      side *= 2.0;
      ++J;
    }
    side_ = side;
    std::vector<std::int64_t> keys(idx_.size() * static_cast<std::size_t>(n));
    leaf_of_.resize(static_cast<std::size_t>(grid.shifts()));
    for (int s = 0; s < grid.shifts(); ++s) {
      for (std::size_t k = 0; k < idx_.size(); ++k) {
        std::int64_t* row = keys.data() + k * static_cast<std::size_t>(n);
        grid.finest_cell(E.col(idx_[k]), s, row);
        for (int a = 0; a < n; ++a) row[a] >>= J;
      }
      std::vector<std::int64_t> leaves;
      leaf_of_[static_cast<std::size_t>(s)] = detail::group_keys(keys, n, leaves);
      forests_.push_back(detail::build_forest(std::move(leaves), n, d, side, 2.0 * r));
    }
  }

  const IndexList& indices() const { return idx_; }
  double leaf_side() const { return side_; }
  double cap() const { return cap_; }

  /// Estimated content of E ∩ B.
  double content() const {
    if (idx_.empty()) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : forests_) best = std::min(best, detail::forest_cost(f));
    return std::min(best, cap_);
  }

  /// Integral over t in (0, tmax] of H({f > t}) t^{p-1}; f is given per
  /// entry of indices().
  double choquet(std::span<const double> f, double p,
                 double tmax = std::numeric_limits<double>::infinity()) const {
    if (f.size() != idx_.size()) throw InputError("one f value per ball point required");
    std::vector<detail::LeafEntry> entries;
    for (std::size_t s = 0; s < forests_.size(); ++s) {
      std::vector<double> maxf(forests_[s].leaves, 0.0);
      const auto& ids = leaf_of_[s];
      for (std::size_t k = 0; k < f.size(); ++k) {
        auto& m = maxf[static_cast<std::size_t>(ids[k])];
        if (f[k] > m) m = f[k];
      }
      for (std::size_t l = 0; l < maxf.size(); ++l) {
        if (maxf[l] > 0.0) entries.push_back({maxf[l], static_cast<int>(s), l});
      }
    }
    std::vector<detail::ForestState> states(forests_.size());
    return detail::choquet_sweep(entries, forests_, states, p, tmax, cap_);
  }

 private:
  IndexList idx_;
  int d_;
  double cap_;
  double side_ = 0.0;
  std::vector<std::vector<std::int32_t>> leaf_of_;
  std::vector<detail::Forest> forests_;
};

/// Per-sample content machinery shared by every ball-restricted evaluation.
class ContentEngine {
 public:
  ContentEngine(const PointSample& E, int d, ContentOptions opts = {})
      : E_(E), d_(d), opts_(opts), grid_(E.ambient(), base_mesh(E, opts), opts.shifts) {
    detail::require_content_args(d, E.ambient());
    if (!(opts.mesh_rel > 0.0)) throw InputError("mesh_rel must be positive");
  }

  static double base_mesh(const PointSample& E, const ContentOptions& o) {
    if (o.mesh_floor > 0.0) return o.mesh_floor;
    if (E.resolution() > 0.0) return 2.0 * E.resolution();
    return std::ldexp(1.0, -30);
  }

  const PointSample& sample() const { return E_; }
  int dim() const { return d_; }
  const GridFamily& grid() const { return grid_; }
  const ContentOptions& options() const { return opts_; }

  LocalContent local(IndexList idx, double r) const {
    return LocalContent(E_, std::move(idx), r, d_, grid_, opts_.mesh_rel);
  }
  LocalContent local(const Ball& B) const { return local(E_.ball(B), B.radius); }

 private:
  PointSample E_;
  int d_;
  ContentOptions opts_;
  GridFamily grid_;
};

struct RegularityCell {
  Index center = 0;
  double radius = 0.0;
  double content = 0.0;
  double ratio = 0.0;  // content / r^d
  bool pass = false;
};

struct RegularityReport {
  std::vector<RegularityCell> cells;
  std::vector<double> scales_used;
  double worst_constant = std::numeric_limits<double>::infinity();
  bool pass = true;
};

struct RegularityOptions {
  double lambda = 20.0;
  std::size_t max_centers = 64;
  std::uint64_t seed = 1;
  ContentOptions content;
};

/// Checks H^d_inf(E ∩ B(x, r)) >= c0 r^d at sampled centers x of E and the
/// given scales. Scales below lambda * resolution are dropped.
inline RegularityReport check_lower_regularity(const PointSample& E, int d, double c0,
                                               const std::vector<double>& scales,
                                               const RegularityOptions& opts = {},
                                               const IndexList& centers_in = {}) {
  if (E.empty()) throw InputError("empty sample");
  RegularityReport rep;
  for (double r : scales) {
    if (!(r > 0.0)) throw InputError("scales must be positive");
    if (r >= opts.lambda * E.resolution()) rep.scales_used.push_back(r);
  }
  if (rep.scales_used.empty()) {
    throw PreconditionError("no scale survives the resolution cut lambda * h");
  }
  IndexList centers = centers_in;
  if (centers.empty()) {
    if (E.size() <= opts.max_centers) {
      centers.resize(E.size());
      std::iota(centers.begin(), centers.end(), Index{0});
    } else {
      auto perm = seeded_permutation(E.size(), opts.seed);
      centers.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(opts.max_centers));
      std::sort(centers.begin(), centers.end());
    }
  }
  const ContentEngine engine(E, d, opts.content);
  for (Index c : centers) {
    for (double r : rep.scales_used) {
      RegularityCell cell;
      cell.center = c;
      cell.radius = r;
      cell.content = engine.local(E.ball(E.point(c), r), r).content();
      cell.ratio = cell.content / std::pow(r, d);
      cell.pass = cell.ratio >= c0;
      rep.worst_constant = std::min(rep.worst_constant, cell.ratio);
      rep.pass = rep.pass && cell.pass;
      rep.cells.push_back(cell);
    }
  }
  return rep;
}

}  // namespace betascan
