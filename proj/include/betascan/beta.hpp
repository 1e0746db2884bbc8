#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "betascan/content.hpp"
#include "betascan/geometry.hpp"
#include "betascan/sample.hpp"
#include "betascan/util.hpp"

namespace betascan {

enum class BetaForm { sup, content_p };

inline const char* to_string(BetaForm f) { return f == BetaForm::sup ? "sup" : "content_p"; }

struct BetaOptions {
  double sup_angle_tol = 1e-8;  // tilt resolution for the sup form
  double angle_tol = 1e-3;      // tilt resolution for the content form
  double rel_tol = 1e-3;
  double slack = 5e-2;          // lemma checks
  int coarse_2d = 36;           // orientation scan in the plane
  int coarse_nd = 64;           // orientation scan in R^3 and up
  int refine_starts = 3;
  int max_iter = 20000;
  std::uint64_t seed = 7;
  ContentOptions content;
};

struct BetaValue {
  double value = 0.0;
  AffinePlane plane;
  BetaForm form = BetaForm::sup;
  double p = std::numeric_limits<double>::quiet_NaN();
  Ball ball;
  bool converged = true;
  Index points = 0;
  Index evaluations = 0;
};

namespace detail {

struct Meb {
  Vector center;
  double radius = 0.0;
};

inline Meb circle2(const Vector& a, const Vector& b) { return {(a + b) / 2.0, (a - b).norm() / 2.0}; }

inline Meb circle3(const Vector& a, const Vector& b, const Vector& c) {
  const double bx = b[0] - a[0], by = b[1] - a[1];
  const double cx = c[0] - a[0], cy = c[1] - a[1];
  const double den = 2.0 * (bx * cy - by * cx);
  if (std::abs(den) < 1e-300) {
    Meb m = circle2(a, b);
    for (const Meb& o : {circle2(a, c), circle2(b, c)}) {
      if (o.radius > m.radius) m = o;
    }
    return m;
  }
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  Vector ctr(2);
  ctr << a[0] + (cy * b2 - by * c2) / den, a[1] + (bx * c2 - cx * b2) / den;
  return {ctr, std::max({(ctr - a).norm(), (ctr - b).norm(), (ctr - c).norm()})};
}

// Minimal enclosing ball of the columns of Z (k x N). Exact for k <= 2; for
// larger k an iterative approximation whose reported radius is the true
// maximal distance from the returned center.
inline Meb min_enclosing_ball(const Matrix& Z, std::span<const std::size_t> order) {
  const Eigen::Index k = Z.rows();
  const Eigen::Index N = Z.cols();
  if (k == 1) {
    const double lo = Z.row(0).minCoeff();
    const double hi = Z.row(0).maxCoeff();
    Vector c(1);
    c[0] = 0.5 * (lo + hi);
    return {c, 0.5 * (hi - lo)};
  }
  if (k == 2) {
    auto col = [&](std::size_t i) -> Vector { return Z.col(static_cast<Eigen::Index>(order[i])); };
    const double scale = std::max(1.0, Z.cwiseAbs().maxCoeff());
    const double eps = 1e-12 * scale;
    Meb m{col(0), 0.0};
    for (std::size_t i = 1; i < order.size(); ++i) {
      const Vector pi = col(i);
      if ((pi - m.center).norm() <= m.radius + eps) continue;
      m = {pi, 0.0};
      for (std::size_t j = 0; j < i; ++j) {
        const Vector pj = col(j);
        if ((pj - m.center).norm() <= m.radius + eps) continue;
        m = circle2(pi, pj);
        for (std::size_t l = 0; l < j; ++l) {
          const Vector pl = col(l);
          if ((pl - m.center).norm() <= m.radius + eps) continue;
          m = circle3(pi, pj, pl);
        }
      }
    }
    double r = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) r = std::max(r, (Z.col(i) - m.center).norm());
    m.radius = r;
    return m;
  }
  Vector c = Z.col(0);
  for (int it = 1; it <= 2000; ++it) {
    Eigen::Index far = 0;
    (Z.colwise() - c).colwise().squaredNorm().maxCoeff(&far);
    c += (Z.col(far) - c) / static_cast<double>(it + 1);
  }
  const double r = std::sqrt((Z.colwise() - c).colwise().squaredNorm().maxCoeff());
  return {c, r};
}

struct Frame {
  Matrix F;  // n x d
  Matrix N;  // n x (n - d)
};

inline Frame frame_from_directions(const Matrix& F) {
  Frame fr;
  fr.F = orthonormalize(F);
  fr.N = complement(fr.F);
  return fr;
}

inline Frame frame_from_normals(const Matrix& N) {
  Frame fr;
  fr.N = orthonormalize(N);
  fr.F = complement(fr.N);
  return fr;
}

inline void rotate(Frame& fr, Eigen::Index i, Eigen::Index j, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const Vector fi = fr.F.col(i);
  const Vector nj = fr.N.col(j);
  fr.F.col(i) = c * fi + s * nj;
  fr.N.col(j) = -s * fi + c * nj;
}

// Direction-space distance to a reference frame, used for tie-breaking.
inline double tilt_from(const Matrix& F, const Matrix& ref) {
  Eigen::JacobiSVD<Matrix> svd(ref.transpose() * F);
  return std::acos(std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0));
}

// Quasi-uniform unit vectors on the upper half of S^{n-1}.
inline std::vector<Vector> scan_directions(int n, int count2d, int countnd, std::uint64_t seed) {
  std::vector<Vector> out;
  if (n == 2) {
    for (int k = 0; k < count2d; ++k) {
      const double a = std::numbers::pi * k / count2d;
      Vector u(2);
      u << std::cos(a), std::sin(a);
      out.push_back(u);
    }
    return out;
  }
  if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < countnd; ++k) {
      const double z = 1.0 - (k + 0.5) / countnd;
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      Vector u(3);
      u << rad * std::cos(phi), rad * std::sin(phi), z;
      out.push_back(u);
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (int k = 0; k < countnd; ++k) {
    Vector u(n);
    for (int a = 0; a < n; ++a) u[a] = g(rng);
    out.push_back(u.normalized());
  }
  return out;
}

}  // namespace detail

/// Plane search for both beta forms over one sample.
class BetaEvaluator {
 public:
  BetaEvaluator(const PointSample& E, int d, BetaOptions opts = {})
      : engine_(E, d, opts.content), opts_(opts) {
    if (!(opts.angle_tol > 0.0) || !(opts.sup_angle_tol > 0.0)) {
      throw InputError("angle tolerances must be positive");
    }
  }

  const PointSample& sample() const { return engine_.sample(); }
  const ContentEngine& engine() const { return engine_; }
  const BetaOptions& options() const { return opts_; }
  int dim() const { return engine_.dim(); }

  /// Sup form: min over planes of sup_{E ∩ B} dist(., L) / r.
  BetaValue beta_infty(const Ball& B, const std::vector<AffinePlane>& seeds = {}) const {
    const BallData bd = gather(B);
    Counter evals;
    const detail::Frame pca = pca_frame(bd);
    auto sup_eval = [&](const detail::Frame& fr, Vector* base) {
      ++evals.n;
      return sup_closed_form(bd, fr, base);
    };
    std::vector<detail::Frame> starts = initial_frames(pca, seeds);
    // Rank by the objective, then refine the most promising.
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < starts.size(); ++i) ranked.emplace_back(sup_eval(starts[i], nullptr), i);
    const std::size_t fixed = 1 + seeds.size();
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < fixed && i < starts.size(); ++i) chosen.push_back(i);
    std::vector<std::pair<double, std::size_t>> rest(ranked.begin() + static_cast<std::ptrdiff_t>(std::min(fixed, ranked.size())), ranked.end());
    std::stable_sort(rest.begin(), rest.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (int k = 0; k < opts_.refine_starts && k < static_cast<int>(rest.size()); ++k) {
      chosen.push_back(rest[static_cast<std::size_t>(k)].second);
    }

    Best best;
    bool converged = true;
    for (std::size_t idx : chosen) {
      detail::Frame fr = starts[idx];
      double val = sup_eval(fr, nullptr);
      double step = std::numbers::pi / 8.0;
      int iter = 0;
      const auto d = fr.F.cols(), k = fr.N.cols();
      while (step >= opts_.sup_angle_tol && iter < opts_.max_iter) {
        ++iter;
        double best_val = val;
        detail::Frame best_fr = fr;
        for (Eigen::Index i = 0; i < d; ++i) {
          for (Eigen::Index j = 0; j < k; ++j) {
            for (double sgn : {1.0, -1.0}) {
              detail::Frame trial = fr;
              detail::rotate(trial, i, j, sgn * step);
              const double v = sup_eval(trial, nullptr);
              if (v < best_val) {
                best_val = v;
                best_fr = trial;
              }
            }
          }
        }
        if (best_val < val) {
          val = best_val;
          fr = best_fr;
        } else {
          step *= 0.5;
        }
      }
      if (iter >= opts_.max_iter) converged = false;
      Vector base;
      val = sup_eval(fr, &base);
      best.offer(val, fr, base, pca);
    }
    BetaValue out = finish(best, B, BetaForm::sup, bd);
    out.converged = converged;
    out.evaluations = evals.n;
    return out;
  }

  /// Content form: min over planes of ((1/r^d) ∫_0^1 H({dist > t r}) t^{p-1} dt)^{1/p}.
  BetaValue beta_p(const Ball& B, double p, const std::vector<AffinePlane>& seeds = {}) const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("p must be at least 1");
    const BallData bd = gather(B);
    const LocalContent local = engine_.local(bd.idx, bd.r);
    Counter evals;
    const detail::Frame pca = pca_frame(bd);
    const double rd = std::pow(bd.r, engine_.dim());
    std::vector<double> f(bd.idx.size());
    auto obj = [&](const detail::Frame& fr, const Vector& b) {
      ++evals.n;
      const Eigen::RowVectorXd off = fr.N.transpose() * b;
      const Matrix Z = fr.N.transpose() * bd.Y;
      for (Eigen::Index i = 0; i < Z.cols(); ++i) {
        f[static_cast<std::size_t>(i)] = (Z.col(i) - off.transpose()).norm() / bd.r;
      }
      return local.choquet(f, p, 1.0) / rd;
    };

    std::vector<detail::Frame> starts = initial_frames(pca, seeds);
    std::vector<Vector> bases;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      Vector b;
      if (i == 0) {
        b = bd.mean;
      } else if (i <= seeds.size()) {
        b = seeds[i - 1].rebased(bd.c).base();
      } else {
        sup_closed_form(bd, starts[i], &b);
      }
      bases.push_back(b);
    }
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < starts.size(); ++i) ranked.emplace_back(obj(starts[i], bases[i]), i);
    const std::size_t fixed = 1 + seeds.size();
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < fixed && i < starts.size(); ++i) chosen.push_back(i);
    std::vector<std::pair<double, std::size_t>> rest(ranked.begin() + static_cast<std::ptrdiff_t>(std::min(fixed, ranked.size())), ranked.end());
    std::stable_sort(rest.begin(), rest.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (int k = 0; k < opts_.refine_starts && k < static_cast<int>(rest.size()); ++k) {
      chosen.push_back(rest[static_cast<std::size_t>(k)].second);
    }

    Best best;
    bool converged = true;
    for (std::size_t idx : chosen) {
      detail::Frame fr = starts[idx];
      Vector b = bases[idx];
      double val = obj(fr, b);
      double tilt = std::numbers::pi / 8.0;
      double shift = bd.r / 8.0;
      int iter = 0;
      const auto d = fr.F.cols(), k = fr.N.cols();
      while ((tilt >= opts_.angle_tol || shift >= opts_.angle_tol * bd.r) && iter < opts_.max_iter &&
             val > 0.0) {
        ++iter;
        double best_val = val;
        detail::Frame best_fr = fr;
        Vector best_b = b;
        const Vector pivot = b + fr.F * (fr.F.transpose() * (bd.c - b));
        for (Eigen::Index i = 0; i < d; ++i) {
          for (Eigen::Index j = 0; j < k; ++j) {
            for (double sgn : {1.0, -1.0}) {
              detail::Frame trial = fr;
              detail::rotate(trial, i, j, sgn * tilt);
              const double v = obj(trial, pivot);
              if (v < best_val) {
                best_val = v;
                best_fr = trial;
                best_b = pivot;
              }
            }
          }
        }
        for (Eigen::Index j = 0; j < k; ++j) {
          for (double sgn : {1.0, -1.0}) {
            const Vector tb = b + sgn * shift * fr.N.col(j);
            const double v = obj(fr, tb);
            if (v < best_val) {
              best_val = v;
              best_fr = fr;
              best_b = tb;
            }
          }
        }
        if (best_val < val) {
          val = best_val;
          fr = best_fr;
          b = best_b;
        } else {
          tilt *= 0.5;
          shift *= 0.5;
        }
      }
      if (iter >= opts_.max_iter) converged = false;
      best.offer(val, fr, b, pca);
    }
    BetaValue out = finish(best, B, BetaForm::content_p, bd);
    out.value = std::pow(std::max(best.val, 0.0), 1.0 / p);
    out.p = p;
    out.converged = converged;
    out.evaluations = evals.n;
    return out;
  }

  /// sup_{E ∩ B} dist(., L) / r for a fixed plane.
  double beta_infty_at(const Ball& B, const AffinePlane& L) const {
    const BallData bd = gather(B);
    double sup = 0.0;
    for (Eigen::Index i = 0; i < bd.Y.cols(); ++i) {
      sup = std::max(sup, L.normal_offset(bd.Y.col(i)).norm());
    }
    return sup / bd.r;
  }

  /// Content-form beta of E ∩ B against a fixed plane.
  double beta_p_at(const Ball& B, double p, const AffinePlane& L) const {
    if (!(p >= 1.0)) throw InputError("p must be at least 1");
    const BallData bd = gather(B);
    const LocalContent local = engine_.local(bd.idx, bd.r);
    std::vector<double> f(bd.idx.size());
    for (Eigen::Index i = 0; i < bd.Y.cols(); ++i) {
      f[static_cast<std::size_t>(i)] = L.normal_offset(bd.Y.col(i)).norm() / bd.r;
    }
    const double v = local.choquet(f, p, 1.0) / std::pow(bd.r, engine_.dim());
    return std::pow(std::max(v, 0.0), 1.0 / p);
  }

 private:
  struct Counter {
    Index n = 0;
  };

  struct BallData {
    IndexList idx;
    Matrix Y;
    Vector c;
    Vector mean;
    double r = 0.0;
    std::vector<std::size_t> order;  // fixed permutation for the enclosing-ball routine
  };

  struct Best {
    double val = std::numeric_limits<double>::infinity();
    double tilt = std::numeric_limits<double>::infinity();
    std::optional<detail::Frame> fr;
    Vector base;

    void offer(double v, const detail::Frame& f, const Vector& b, const detail::Frame& pca) {
      const double t = detail::tilt_from(f.F, pca.F);
      const double tie = 1e-12 * std::max(std::abs(val), 1e-300);
      if (!fr || v < val - tie || (std::abs(v - val) <= tie && t < tilt)) {
        val = v;
        tilt = t;
        fr = f;
        base = b;
      }
    }
  };

  BallData gather(const Ball& B) const {
    detail::require_same_dim(B.center.size(), sample().ambient());
    BallData bd;
    bd.idx = sample().ball(B);
    if (bd.idx.empty()) throw EmptyBallError("no sample point in the ball");
    bd.c = B.center;
    bd.r = B.radius;
    bd.Y.resize(sample().ambient(), static_cast<Eigen::Index>(bd.idx.size()));
    for (std::size_t k = 0; k < bd.idx.size(); ++k) {
      bd.Y.col(static_cast<Eigen::Index>(k)) = sample().col(bd.idx[k]);
    }
    bd.mean = bd.Y.rowwise().mean();
    bd.order = seeded_permutation(bd.idx.size(), opts_.seed);
    return bd;
  }

  detail::Frame pca_frame(const BallData& bd) const {
    const Matrix C = bd.Y.colwise() - bd.mean;
    const Matrix cov = C * C.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    // Eigenvalues ascend; the top d eigenvectors span the principal plane.
    return detail::frame_from_directions(es.eigenvectors().rightCols(engine_.dim()));
  }

  double sup_closed_form(const BallData& bd, const detail::Frame& fr, Vector* base) const {
    const Matrix Z = fr.N.transpose() * bd.Y;
    const detail::Meb m = detail::min_enclosing_ball(Z, bd.order);
    if (base) *base = fr.F * (fr.F.transpose() * bd.c) + fr.N * m.center;
    return m.radius / bd.r;
  }

  std::vector<detail::Frame> initial_frames(const detail::Frame& pca,
                                            const std::vector<AffinePlane>& seeds) const {
    std::vector<detail::Frame> starts{pca};
    for (const auto& s : seeds) {
      if (s.dim() != engine_.dim() || s.ambient() != sample().ambient()) {
        throw InputError("seed plane has the wrong dimensions");
      }
      starts.push_back({s.frame(), s.normals()});
    }
    const int n = sample().ambient();
    const int d = engine_.dim();
    if (d == 1 || d == n - 1) {
      for (const Vector& u : detail::scan_directions(n, opts_.coarse_2d, opts_.coarse_nd, opts_.seed)) {
        starts.push_back(d == 1 ? detail::frame_from_directions(u) : detail::frame_from_normals(u));
      }
    }
    return starts;
  }

  BetaValue finish(const Best& best, const Ball& B, BetaForm form, const BallData& bd) const {
    BetaValue out{0.0, AffinePlane(best.base, best.fr->F), form,
                  std::numeric_limits<double>::quiet_NaN(), B, true, bd.idx.size(), 0};
    out.value = best.val;
    // Flat configurations come out as exact zeros rather than rounding noise.
    if (out.value <= 1e-13) out.value = 0.0;
    return out;
  }

  ContentEngine engine_;
  BetaOptions opts_;
};

inline BetaValue beta_infty(const PointSample& E, const Ball& B, int d, const BetaOptions& o = {}) {
  return BetaEvaluator(E, d, o).beta_infty(B);
}

inline BetaValue beta_p(const PointSample& E, const Ball& B, int d, double p,
                        const BetaOptions& o = {}) {
  return BetaEvaluator(E, d, o).beta_p(B, p);
}

struct LemmaCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

inline LemmaCheck make_check(double lhs, double rhs, double slack) {
  return {lhs, rhs, lhs <= rhs * (1.0 + slack) + 1e-12};
}

/// beta^{d,1}(B) <= 2^d beta_inf(B).
inline LemmaCheck check_lemma_2_11(const BetaEvaluator& ev, const Ball& B) {
  const BetaValue binf = ev.beta_infty(B);
  const BetaValue b1 = ev.beta_p(B, 1.0, {binf.plane});
  return make_check(b1.value, std::pow(2.0, ev.dim()) * binf.value, ev.options().slack);
}

/// beta_p(inner)^p against (t/s)^{d+p} beta_p(outer)^p, with the inner ball
/// evaluated at the outer ball's plane.
inline LemmaCheck check_lemma_2_14(const BetaEvaluator& ev, const Ball& inner, const Ball& outer,
                                   double p) {
  if ((inner.center - outer.center).norm() + inner.radius > outer.radius * (1.0 + 1e-12)) {
    throw InputError("inner ball is not contained in the outer ball");
  }
  const double tol = std::max(2.0 * ev.sample().resolution(), 1e-9 * outer.radius);
  if (ev.sample().dist_to(inner.center) > tol || ev.sample().dist_to(outer.center) > tol) {
    throw InputError("balls must be centered on the sample");
  }
  const BetaValue out = ev.beta_p(outer, p);
  const double lhs = std::pow(ev.beta_p_at(inner, p, out.plane), p);
  const double rhs =
      std::pow(outer.radius / inner.radius, ev.dim() + p) * std::pow(out.value, p);
  return make_check(lhs, rhs, ev.options().slack);
}

struct Lemma212Options {
  double c0 = 0.0;  // 0 means use the empirical constant
  int levels = 4;
  std::size_t max_centers = 16;
  double lambda = 20.0;
};

struct Lemma212Check : LemmaCheck {
  double c0 = 0.0;
};

/// beta_inf(B/2) <= 2 c0^{-1/(d+1)} beta^{d,1}(B)^{1/(d+1)}. Lower regularity
/// is verified on sub-balls centered in B/2 at radii r 2^{-j}; when it fails
/// for the requested c0 the check is unverifiable and a PreconditionError is
/// thrown.
inline Lemma212Check check_lemma_2_12(const BetaEvaluator& ev, const Ball& B,
                                      const Lemma212Options& o = {}) {
  const PointSample& E = ev.sample();
  const int d = ev.dim();
  IndexList centers = E.ball(B.center, B.radius / 2.0);
  if (centers.empty()) throw EmptyBallError("no sample point in the half ball");
  if (centers.size() > o.max_centers) {
    IndexList pick;
    const double stride = static_cast<double>(centers.size()) / static_cast<double>(o.max_centers);
    for (std::size_t k = 0; k < o.max_centers; ++k) {
      pick.push_back(centers[static_cast<std::size_t>(k * stride)]);
    }
    centers = pick;
  }
  std::vector<double> scales;
  for (int j = 1; j <= o.levels; ++j) scales.push_back(B.radius * std::ldexp(1.0, -j));
  RegularityOptions ro;
  ro.lambda = o.lambda;
  ro.content = ev.engine().options();
  const RegularityReport rep = check_lower_regularity(E, d, o.c0, scales, ro, centers);
  const double c0 = o.c0 > 0.0 ? o.c0 : rep.worst_constant;
  if (!(c0 > 0.0) || rep.worst_constant < c0) {
    throw PreconditionError("lower content regularity fails on sub-balls");
  }
  const double lhs = ev.beta_infty(B.scaled(0.5)).value;
  const double b1 = ev.beta_p(B, 1.0).value;
  const double rhs = 2.0 * std::pow(c0, -1.0 / (d + 1)) * std::pow(b1, 1.0 / (d + 1));
  Lemma212Check out;
  static_cast<LemmaCheck&>(out) = make_check(lhs, rhs, ev.options().slack);
  out.c0 = c0;
  return out;
}

/// beta^{d,1}(B) <= C beta^{d,p}(B). With content estimates bounded by
/// (2r)^d and nonincreasing in the level, C = 2^d + 1 holds for every p.
inline LemmaCheck check_lemma_2_13(const BetaEvaluator& ev, const Ball& B, double p) {
  const BetaValue bp = ev.beta_p(B, p);
  const BetaValue b1 = ev.beta_p(B, 1.0, {bp.plane});
  const double C = std::pow(2.0, ev.dim()) + 1.0;
  return make_check(b1.value, C * bp.value, ev.options().slack);
}

struct TwoSetComparison {
  double beta_E1 = 0.0;
  double beta_E2_double = 0.0;
  double error_term = 0.0;
  Point y;
};

/// The three quantities of the two-set comparison: beta_{E1}(x, t),
/// beta_{E2}(y, 2t) for the point y of E2 nearest x (which must satisfy
/// |x - y| <= t), and ((1/t^d) ∫_{E1 ∩ B(x, 2t)} (dist(., E2)/t)^p dH)^{1/p}.
inline TwoSetComparison compare_two_sets(const BetaEvaluator& e1, const BetaEvaluator& e2,
                                         const Point& x, double t, double p) {
  if (!(t > 0.0)) throw InputError("scale must be positive");
  if (e1.dim() != e2.dim()) throw InputError("samples of different intrinsic dimension");
  const PointSample& E1 = e1.sample();
  const PointSample& E2 = e2.sample();
  if (E2.empty()) throw InputError("second sample is empty");
  double dy = 0.0;
  const Index yi = E2.nearest(x, &dy);
  if (dy > t) throw InputError("no point of the second sample within t of x");
  TwoSetComparison out;
  out.y = E2.point(yi);
  out.beta_E1 = e1.beta_p(Ball(x, t), p).value;
  out.beta_E2_double = e2.beta_p(Ball(out.y, 2.0 * t), p).value;
  const IndexList idx = E1.ball(x, 2.0 * t);
  std::vector<double> f(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) f[k] = E2.dist_to(E1.point(idx[k])) / t;
  const LocalContent local = e1.engine().local(idx, 2.0 * t);
  const double integral = local.choquet(f, p) / std::pow(t, e1.dim());
  out.error_term = std::pow(std::max(integral, 0.0), 1.0 / p);
  return out;
}

}  // namespace betascan
