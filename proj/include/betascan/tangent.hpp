#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "betascan/beta.hpp"
#include "betascan/error.hpp"
#include "betascan/geometry.hpp"
#include "betascan/multiscale.hpp"
#include "betascan/sample.hpp"

namespace betascan {

/// r0 * base^-k for k = 0, 1, ... while the scale stays at or above `floor`.
inline std::vector<double> scale_ladder(double r0, double base, double floor, int max_count = 64) {
  if (!(r0 > 0.0)) throw InputError("r0 must be positive");
  if (!(base > 1.0)) throw InputError("scale base must exceed 1");
  std::vector<double> out;
  for (int k = 0; k < max_count; ++k) {
    const double r = r0 * std::pow(base, -k);
    if (r < floor) break;
    out.push_back(r);
  }
  return out;
}

namespace detail {

inline void require_near_sample(const PointSample& E, const Point& x) {
  detail::require_same_dim(x.size(), E.ambient());
  if (E.empty()) throw InputError("empty sample");
  const double tol = std::max(E.resolution(), 1e-12 * (1.0 + x.norm()));
  if (E.dist_to(x) > tol * (1.0 + 1e-9)) throw InputError("center is farther than the resolution from the sample");
}

template <class F>
std::vector<BetaValue> map_scales(const std::vector<double>& scales, F&& f) {
  std::vector<std::optional<BetaValue>> tmp(scales.size());
  parallel_for(scales.size(), [&](std::size_t k) { tmp[k] = f(scales[k]); });
  std::vector<BetaValue> out;
  for (auto& v : tmp) out.push_back(std::move(*v));
  return out;
}

}  // namespace detail

struct FlatnessProfile {
  Point center;
  std::vector<double> scales;  // decreasing
  std::vector<BetaValue> betas;
  double truncation_scale = 0.0;
  std::vector<std::string> notes;
  std::optional<AffinePlane> plane;  // one plane serving the three finest scales
  double plane_score = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> values() const {
    std::vector<double> v;
    for (const auto& b : betas) v.push_back(b.value);
    return v;
  }
};

/// beta_infty(x, t) at each requested scale. Scales below lambda * h are
/// dropped with a note.
inline FlatnessProfile flatness_profile(const BetaEvaluator& ev, const Point& x,
                                        std::vector<double> scales, double lambda = 20.0) {
  const PointSample& E = ev.sample();
  detail::require_near_sample(E, x);
  std::sort(scales.begin(), scales.end(), std::greater<>());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
  FlatnessProfile out;
  out.center = x;
  out.truncation_scale = lambda * E.resolution();
  for (double t : scales) {
    if (!(t > 0.0)) throw InputError("scales must be positive");
    if (t < out.truncation_scale) {
      out.notes.push_back("dropped scale " + std::to_string(t) + " below truncation");
      continue;
    }
    out.scales.push_back(t);
  }
  out.betas = detail::map_scales(out.scales, [&](double t) { return ev.beta_infty(Ball(x, t)); });
  if (out.scales.empty()) return out;

  const std::size_t m = std::min<std::size_t>(3, out.scales.size());
  const std::size_t first = out.scales.size() - m;
  for (std::size_t c = out.scales.size(); c-- > first;) {
    const AffinePlane& L = out.betas[c].plane;
    double score = 0.0;
    for (std::size_t k = first; k < out.scales.size(); ++k) {
      score = std::max(score, ev.beta_infty_at(Ball(x, out.scales[k]), L));
    }
    if (!out.plane || score < out.plane_score) {
      out.plane = L;
      out.plane_score = score;
    }
  }
  return out;
}

struct BetaProfile {
  Point center;
  double base = 10.0;
  double r0 = 1.0;
  double p = 1.0;
  std::vector<double> scales;  // r0 * base^-k, strictly decreasing
  std::vector<BetaValue> betas;
  std::vector<double> partial_sums;  // cumulative sum of squares
  double truncation_scale = 0.0;
  std::vector<std::string> warnings;

  std::vector<double> values() const {
    std::vector<double> v;
    for (const auto& b : betas) v.push_back(b.value);
    return v;
  }
};

/// Largest admissible p for intrinsic dimension d (infinite for d <= 2).
inline double p_upper(int d) {
  return d <= 2 ? std::numeric_limits<double>::infinity() : 2.0 * d / (d - 2.0);
}

struct DiniOptions {
  double base = 10.0;
  double r0 = 1.0;
  double lambda = 20.0;
  bool allow_p_override = false;
};

/// beta_p(x, r_k) with r_k = r0 base^-k down to lambda * h, and the partial
/// sums of squares.
inline BetaProfile dini_profile(const BetaEvaluator& ev, const Point& x, double p,
                                const DiniOptions& o = {}) {
  const PointSample& E = ev.sample();
  detail::require_near_sample(E, x);
  if (!(p >= 1.0)) throw InputError("p must be at least 1");
  BetaProfile out;
  if (!(p < p_upper(ev.dim()))) {
    if (!o.allow_p_override) throw InputError("p outside the admissible range for this dimension");
    out.warnings.push_back("p outside the admissible range; override in effect");
  }
  out.center = x;
  out.base = o.base;
  out.r0 = o.r0;
  out.p = p;
  out.truncation_scale = o.lambda * E.resolution();
  out.scales = scale_ladder(o.r0, o.base, out.truncation_scale);
  if (out.scales.size() < 3) throw InputError("fewer than 3 usable scales above the truncation");
  out.betas = detail::map_scales(out.scales, [&](double t) { return ev.beta_p(Ball(x, t), p); });
  double s = 0.0;
  for (const auto& b : out.betas) {
    s += b.value * b.value;
    out.partial_sums.push_back(s);
  }
  return out;
}

/// Least-squares exponent of S_k against k + 1 in log-log coordinates, over
/// the partial sums above `floor` (smaller sums are rounding noise of flat
/// sets). Bounded sums give slopes near 0, sums growing linearly in k give
/// slopes near 1.
inline double partial_sum_slope(const std::vector<double>& partial_sums, double floor = 1e-12) {
  std::vector<double> X;
  std::vector<double> Y;
  for (std::size_t k = 0; k < partial_sums.size(); ++k) {
    if (partial_sums[k] > floor) {
      X.push_back(std::log(static_cast<double>(k + 1)));
      Y.push_back(std::log(partial_sums[k]));
    }
  }
  if (X.size() < 2) return 0.0;
  const double n = static_cast<double>(X.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    mx += X[i] / n;
    my += Y[i] / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxy += (X[i] - mx) * (Y[i] - my);
    sxx += (X[i] - mx) * (X[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

struct Comparability {
  double sum = 0.0;
  double integral_estimate = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Compares sum_{k>=1} beta(r_k)^2 with the integral of beta(t)^2 dt/t over
/// [r_K, r_0]. Each term is dominated by the interval just above it, with
/// constant base^{2(d+p)} / ln(base). The integral uses the trapezoid rule in
/// ln t with three interior nodes per interval.
inline Comparability sum_integral_comparability(const BetaEvaluator& ev, const BetaProfile& prof,
                                                double slack = 0.1) {
  if (prof.scales.size() < 2) throw InputError("comparability needs at least 2 scales");
  const double b = prof.base;
  const double p = prof.p;
  const std::size_t K = prof.scales.size();
  std::vector<double> nodes((K - 1) * 3);
  parallel_for(nodes.size(), [&](std::size_t i) {
    const std::size_t k = i / 3;
    const double t = prof.scales[k + 1] * std::pow(b, static_cast<double>(i % 3 + 1) / 4.0);
    nodes[i] = ev.beta_p(Ball(prof.center, t), p).value;
  });
  Comparability out;
  const double du = std::log(b) / 4.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    double g[5];
    g[0] = prof.betas[k + 1].value;
    for (int j = 1; j <= 3; ++j) g[j] = nodes[k * 3 + static_cast<std::size_t>(3 - j)];
    g[4] = prof.betas[k].value;
    for (int j = 0; j < 4; ++j) out.integral_estimate += 0.5 * (g[j] * g[j] + g[j + 1] * g[j + 1]) * du;
    out.sum += g[0] * g[0];
  }
  out.bound = std::pow(b, 2.0 * (ev.dim() + p)) / std::log(b);
  if (out.integral_estimate > 0.0) out.ratio = out.sum / out.integral_estimate;
  else out.ratio = out.sum > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  out.pass = out.sum <= out.bound * out.integral_estimate * (1.0 + slack);
  return out;
}

enum class TangentLabel { tangent, non_tangent, undecided };

inline const char* to_string(TangentLabel l) {
  switch (l) {
    case TangentLabel::tangent: return "tangent";
    case TangentLabel::non_tangent: return "non_tangent";
    default: return "undecided";
  }
}

struct TangentThresholds {
  double theta_tol = 0.05;
  double tau_tol = 0.01;
  double theta_floor = 0.2;
  double slope_floor = 0.5;
};

struct TangentVerdict {
  TangentLabel label = TangentLabel::undecided;
  double dini_tail = 0.0;       // sum of the last three increments
  double flatness_final = 0.0;  // max flatness over the three finest scales
  double slope = 0.0;
  std::optional<AffinePlane> plane;
};

/// tangent: flat at the three finest scales and a small Dini tail.
/// non_tangent: flatness above the floor at every scale, or partial sums
/// growing at least like (k + 1)^slope_floor. A point meeting both or
/// neither is undecided.
inline TangentVerdict classify_tangent(const FlatnessProfile& flat, const BetaProfile& dini,
                                       const TangentThresholds& th = {}) {
  if (flat.center.size() != dini.center.size() || flat.center != dini.center) {
    throw InputError("profiles have different centers");
  }
  if (flat.truncation_scale != dini.truncation_scale) throw InputError("profiles have different truncations");
  TangentVerdict v;
  const auto fv = flat.values();
  const std::size_t m = std::min<std::size_t>(3, fv.size());
  for (std::size_t k = fv.size() - m; k < fv.size(); ++k) v.flatness_final = std::max(v.flatness_final, fv[k]);
  const auto& S = dini.partial_sums;
  const std::size_t K = S.size();
  const std::size_t tail = std::min<std::size_t>(3, K);
  for (std::size_t k = K - tail; k < K; ++k) {
    v.dini_tail += S[k] - (k > 0 ? S[k - 1] : 0.0);
  }
  v.slope = partial_sum_slope(S);
  const bool flat_ok = m > 0 && v.flatness_final < th.theta_tol && v.dini_tail < th.tau_tol;
  const bool rough =
      (!fv.empty() && std::all_of(fv.begin(), fv.end(), [&](double b) { return b > th.theta_floor; })) ||
      v.slope >= th.slope_floor;
  if (flat_ok && !rough) {
    v.label = TangentLabel::tangent;
    v.plane = flat.plane;
  } else if (rough && !flat_ok) {
    v.label = TangentLabel::non_tangent;
  }
  return v;
}

struct ClassifyOptions {
  double p = 1.0;
  // Dyadic rather than decimal: at desk resolutions a decimal ladder leaves
  // three scales, and the tail would then be the whole sum.
  DiniOptions dini{2.0, 0.25, 20.0, false};
  double flat_r0 = 0.25;
  double flat_base = 2.0;
  TangentThresholds thresholds;
};

struct PointClassification {
  FlatnessProfile flatness;
  BetaProfile dini;
  TangentVerdict verdict;
};

/// Flatness on a dyadic ladder plus a Dini profile, then classify.
inline PointClassification classify_point(const BetaEvaluator& ev, const Point& x,
                                          const ClassifyOptions& o = {}) {
  PointClassification out;
  const double trunc = o.dini.lambda * ev.sample().resolution();
  out.flatness = flatness_profile(ev, x, scale_ladder(o.flat_r0, o.flat_base, trunc), o.dini.lambda);
  out.dini = dini_profile(ev, x, o.p, o.dini);
  out.verdict = classify_tangent(out.flatness, out.dini, o.thresholds);
  return out;
}

/// H^d_inf(E ∩ B(a, r) outside X(a, V, arcsin s)) / r^d.
inline double approx_tangent_ratio(const BetaEvaluator& ev, const Point& a, const AffinePlane& V,
                                   double s, double r) {
  const PointSample& E = ev.sample();
  detail::require_same_dim(a.size(), E.ambient());
  if (V.dim() != ev.dim()) throw InputError("plane dimension differs from the sample dimension");
  if (!(s > 0.0 && s < 1.0)) throw InputError("s must lie in (0, 1)");
  if (!(r > 0.0)) throw InputError("radius must be positive");
  if (V.distance(a) > 1e-9 * std::max(1.0, r)) throw InputError("plane does not pass through the apex");
  const Cone cone(a, V.frame(), std::asin(s), ConeVariant::toward_V);
  IndexList outside;
  for (Index i : E.ball(a, r)) {
    if (!cone.contains(E.point(i))) outside.push_back(i);
  }
  if (outside.empty()) return 0.0;
  return ev.engine().local(outside, r).content() / std::pow(r, ev.dim());
}

/// Finite net of d-dimensional subspaces of R^n (as orthonormal frames).
inline std::vector<Matrix> subspace_net(int n, int d, int count, std::uint64_t seed = 7) {
  if (count < 1) throw InputError("empty plane net");
  if (d < 1 || d >= n) throw InputError("subspace dimension must satisfy 1 <= d < n");
  std::vector<Matrix> out;
  if (d == 1 || d == n - 1) {
    for (const Vector& u : detail::scan_directions(n, count, count, seed)) {
      out.push_back(d == 1 ? Matrix(u) : detail::complement(Matrix(u)));
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (int c = 0; c < count; ++c) {
    Matrix M(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) M(i, j) = g(rng);
    }
    out.push_back(detail::orthonormalize(M));
  }
  return out;
}

struct ConeNets {
  int planes = 0;  // 0 means 32 for n = 2 and 128 otherwise
  int angles = 8;
  int radii = 8;
  double r_max = 0.25;
  std::uint64_t seed = 7;

  double angle(int k) const { return std::numbers::pi / 2.0 * (angles - k) / (angles + 1.0); }
  double radius(int l) const { return r_max * std::ldexp(1.0, -l); }
};

struct BucketKey {
  int plane = 0;
  int angle = 0;
  int radius = 0;
  auto operator<=>(const BucketKey&) const = default;
};

struct ConePartition {
  std::vector<std::optional<BucketKey>> assignment;  // per input point
  std::map<BucketKey, std::vector<std::size_t>> buckets;
  std::vector<std::size_t> flagged;
  std::vector<Matrix> net;
};

/// Buckets K_{n,k,l}: each point goes to the first (net plane, angle, radius)
/// whose perpendicular cone X(x, L_n^perp, theta_k, r_l) holds no other
/// sample point. Net planes are tried nearest to the point's own plane first,
/// then angles and radii from largest to smallest.
inline ConePartition partition_cone_points(const PointSample& E, const std::vector<Point>& points,
                                           const std::vector<AffinePlane>& planes,
                                           const ConeNets& nets = {}) {
  if (points.size() != planes.size()) throw InputError("each point needs a plane");
  if (nets.angles < 1 || nets.radii < 1 || nets.planes < 0) throw InputError("empty cone nets");
  if (!(nets.r_max > 0.0)) throw InputError("cone radius must be positive");
  const int n = E.ambient();
  ConePartition out;
  out.assignment.resize(points.size());
  if (points.empty()) return out;
  const int d = planes.front().dim();
  out.net = subspace_net(n, d, nets.planes > 0 ? nets.planes : (n == 2 ? 32 : 128), nets.seed);
  parallel_for(points.size(), [&](std::size_t i) {
    const Point& x = points[i];
    detail::require_same_dim(x.size(), n);
    if (planes[i].dim() != d) throw InputError("planes of mixed dimension");
    std::vector<std::pair<double, int>> order;
    for (std::size_t c = 0; c < out.net.size(); ++c) {
      order.emplace_back(principal_angle(planes[i], AffinePlane(x, out.net[c])), static_cast<int>(c));
    }
    std::stable_sort(order.begin(), order.end());
    const IndexList near = E.ball(x, nets.r_max);
    for (const auto& [ang, c] : order) {
      for (int k = 0; k < nets.angles; ++k) {
        // Nearest sample point inside the unbounded cone fixes the admissible radii.
        const Cone cone(x, out.net[static_cast<std::size_t>(c)], nets.angle(k), ConeVariant::toward_V_perp);
        double rho = std::numeric_limits<double>::infinity();
        for (Index j : near) {
          const Point y = E.point(j);
          const double len = (y - x).norm();
          if (len > 0.0 && len < rho && cone.contains(y)) rho = len;
        }
        for (int l = 0; l < nets.radii; ++l) {
          if (nets.radius(l) <= rho) {
            out.assignment[i] = BucketKey{c, k, l};
            return;
          }
        }
      }
    }
  });
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (out.assignment[i]) out.buckets[*out.assignment[i]].push_back(i);
    else out.flagged.push_back(i);
  }
  return out;
}

/// F_j(x) = min_a (v_j(a) + Lip |x - a|), coordinatewise.
class LipschitzExtension {
 public:
  /// K: d x m sites, values: (n - d) x m.
  LipschitzExtension(Matrix K, Matrix values, double lip) : K_(std::move(K)), V_(std::move(values)), lip_(lip) {
    if (K_.cols() == 0) throw InputError("empty extension domain");
    if (K_.cols() != V_.cols()) throw InputError("sites and values differ in count");
    if (!(lip >= 0.0) || !std::isfinite(lip)) throw InputError("Lipschitz constant must be finite and nonnegative");
    if (!K_.allFinite() || !V_.allFinite()) throw InputError("non-finite extension data");
    for (Eigen::Index a = 0; a < K_.cols(); ++a) {
      for (Eigen::Index b = a + 1; b < K_.cols(); ++b) {
        const double dk = (K_.col(a) - K_.col(b)).norm();
        const double dv = (V_.col(a) - V_.col(b)).norm();
        if (dv > lip * dk * (1.0 + 1e-12) + 1e-300) {
          throw InputError("data not Lipschitz: sites " + std::to_string(a) + " and " + std::to_string(b));
        }
      }
    }
  }

  int domain_dim() const { return static_cast<int>(K_.rows()); }
  int codim() const { return static_cast<int>(V_.rows()); }
  double lip() const { return lip_; }

  Vector operator()(const Vector& x) const {
    detail::require_same_dim(x.size(), K_.rows());
    Vector out = Vector::Constant(V_.rows(), std::numeric_limits<double>::infinity());
    for (Eigen::Index a = 0; a < K_.cols(); ++a) {
      const double cone = lip_ * (x - K_.col(a)).norm();
      for (Eigen::Index j = 0; j < V_.rows(); ++j) out[j] = std::min(out[j], V_(j, a) + cone);
    }
    return out;
  }

 private:
  Matrix K_;
  Matrix V_;
  double lip_;
};

inline Vector lipschitz_extend(const Matrix& K, const Matrix& values, double lip, const Vector& query) {
  return LipschitzExtension(K, values, lip)(query);
}

namespace detail {

// Exact diameter: convex hull plus pairwise scan in the plane, pairwise scan
// otherwise.
inline double diameter(const PointSample& E, const IndexList& idx) {
  if (idx.size() < 2) return 0.0;
  std::vector<Point> pts;
  if (E.ambient() == 2) {
    std::vector<std::pair<double, double>> P;
    for (Index i : idx) P.emplace_back(E.col(i)[0], E.col(i)[1]);
    std::sort(P.begin(), P.end());
    P.erase(std::unique(P.begin(), P.end()), P.end());
    auto cross = [](const auto& o, const auto& a, const auto& b) {
      return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
    };
    std::vector<std::pair<double, double>> H(2 * P.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < P.size(); ++i) {
      while (k >= 2 && cross(H[k - 2], H[k - 1], P[i]) <= 0) --k;
      H[k++] = P[i];
    }
    for (std::size_t i = P.size() - 1, t = k + 1; i-- > 0;) {
      while (k >= t && cross(H[k - 2], H[k - 1], P[i]) <= 0) --k;
      H[k++] = P[i];
    }
    H.resize(k > 1 ? k - 1 : k);
    for (const auto& h : H) {
      Point q(2);
      q << h.first, h.second;
      pts.push_back(q);
    }
  } else {
    for (Index i : idx) pts.push_back(E.point(i));
  }
  double best = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) best = std::max(best, (pts[a] - pts[b]).squaredNorm());
  }
  return std::sqrt(best);
}

}  // namespace detail

struct TspLevel {
  int k = 0;
  std::size_t cubes = 0;
  double contribution = 0.0;
};

struct TspSum {
  double sum = 0.0;
  double diam = 0.0;
  std::vector<TspLevel> levels;
};

/// diam(E) + sum over cubes of beta_infty(3 B_Q)^2 diam(Q), where B_Q is the
/// ball of radius ell / (1 - delta) about the cube center.
inline TspSum jones_tsp_sum(const BetaEvaluator& ev, const CubeTree& tree) {
  if (ev.dim() != 1) throw InputError("the traveling salesman sum needs d = 1");
  const PointSample& E = ev.sample();
  IndexList all(E.size());
  for (Index i = 0; i < E.size(); ++i) all[i] = i;
  TspSum out;
  out.diam = detail::diameter(E, all);
  out.sum = out.diam;
  for (const auto& lvl : tree.levels) {
    std::vector<double> terms(lvl.size(), 0.0);
    parallel_for(lvl.size(), [&](std::size_t c) {
      const ChristCube& Q = lvl[c];
      if (Q.members.empty()) return;
      const double b = ev.beta_infty(Ball(Q.center, 3.0 * Q.ell / (1.0 - tree.delta))).value;
      if (b > 0.0) terms[c] = b * b * detail::diameter(E, Q.members);
    });
    TspLevel tl;
    tl.k = lvl.empty() ? 0 : lvl.front().scale_k;
    tl.cubes = lvl.size();
    for (double t : terms) tl.contribution += t;
    out.sum += tl.contribution;
    out.levels.push_back(tl);
  }
  return out;
}

}  // namespace betascan
