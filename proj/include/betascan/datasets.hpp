#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "betascan/error.hpp"
#include "betascan/geometry.hpp"
#include "betascan/sample.hpp"
#include "betascan/util.hpp"

namespace betascan {

enum class TruthLabel { tangent, non_tangent, boundary };

inline const char* to_string(TruthLabel l) {
  switch (l) {
    case TruthLabel::tangent: return "tangent";
    case TruthLabel::non_tangent: return "non_tangent";
    default: return "boundary";
  }
}

inline TruthLabel truth_label_from(const std::string& s) {
  if (s == "tangent") return TruthLabel::tangent;
  if (s == "non_tangent") return TruthLabel::non_tangent;
  if (s == "boundary") return TruthLabel::boundary;
  throw InputError("unknown truth label '" + s + "'");
}

struct GroundTruth {
  std::vector<TruthLabel> labels;
  std::vector<std::optional<AffinePlane>> planes;  // set iff the label is tangent
  std::string generator;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
};

struct GenSpec {
  std::string kind;             // graph, corner, circle, cantor4, koch, spiral
  std::string fn = "parabola";  // graph only: linear, parabola, pow32, sin
  std::map<std::string, double> params;
  double h = 1e-3;
  std::uint64_t seed = 1;
};

struct Synthetic {
  PointSample sample;
  GroundTruth truth;
};

namespace detail {

inline double param(const GenSpec& s, const std::string& key, double fallback) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}

inline void allow_params(const GenSpec& s, std::initializer_list<const char*> keys) {
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : s.params) {
    if (!ok.count(k)) throw InputError("unknown parameter '" + k + "' for kind " + s.kind);
    if (!std::isfinite(v)) throw InputError("parameter '" + k + "' is not finite");
  }
}

struct Graph1 {
  std::function<double(double)> f;
  std::function<double(double)> df;
};

inline Graph1 graph_fn(const std::string& fn, double c, double omega) {
  if (fn == "linear") return {[c](double x) { return c * x; }, [c](double) { return c; }};
  if (fn == "parabola") return {[c](double x) { return c * x * x; }, [c](double x) { return 2.0 * c * x; }};
  if (fn == "pow32") {
    return {[c](double x) { return c * std::pow(std::abs(x), 1.5); },
            [c](double x) { return 1.5 * c * std::sqrt(std::abs(x)) * (x < 0 ? -1.0 : 1.0); }};
  }
  if (fn == "sin") {
    return {[c, omega](double x) { return c * std::sin(omega * x); },
            [c, omega](double x) { return c * omega * std::cos(omega * x); }};
  }
  if (fn == "abs") return {[c](double x) { return c * std::abs(x); }, [c](double x) { return x < 0 ? -c : c; }};
  throw InputError("unknown graph function '" + fn + "'");
}

inline double default_coef(const std::string& fn) {
  if (fn == "parabola") return 0.5;
  if (fn == "sin") return 0.02;
  return 1.0;
}

// Parameters x along [a, b], starting at 0 when 0 is inside, so that arc
// length between consecutive parameters stays below `step`. `jitter` in
// [0, 1) shifts the interior nodes by a fraction of a step.
inline std::vector<double> arc_parameters(double a, double b, double step, double jitter,
                                          const std::function<double(double)>& speed) {
  const double start = (a < 0.0 && b > 0.0) ? 0.0 : a;
  std::vector<double> xs{start};
  auto walk = [&](double dir, double end) {
    double x = start;
    bool first = true;
    while (true) {
      // Halve the substep until the local speed bound holds at both ends.
      double dx = step / std::max(speed(x), 1.0);
      if (first) dx *= (1.0 - jitter);
      while (dx * std::max(speed(x), speed(x + dir * dx)) > step && dx > 1e-300) dx *= 0.5;
      first = false;
      x += dir * dx;
      if ((dir > 0 && x >= end) || (dir < 0 && x <= end)) break;
      xs.push_back(x);
    }
    if (xs.back() != end) xs.push_back(end);
  };
  if (b > start) walk(1.0, b);
  if (start > a) walk(-1.0, a);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

inline Synthetic finish(std::vector<Point> pts, GroundTruth truth, const GenSpec& s, int n, int d) {
  Metadata meta{{"generator", s.kind}};
  if (s.kind == "graph") meta["fn"] = s.fn;
  truth.generator = s.kind == "graph" ? "graph:" + s.fn : s.kind;
  truth.params = s.params;
  truth.seed = s.seed;
  return {PointSample::from_points(pts, n, d, s.h, meta), std::move(truth)};
}

inline Synthetic gen_graph(const GenSpec& s, bool corner) {
  allow_params(s, {"a", "b", "c", "omega", "n", "d", "jitter"});
  const std::string fn = corner ? "abs" : s.fn;
  const double a = param(s, "a", -1.0);
  const double b = param(s, "b", 1.0);
  const double c = param(s, "c", corner ? 1.0 : default_coef(fn));
  const double omega = param(s, "omega", std::numbers::pi);
  const int n = static_cast<int>(param(s, "n", 2));
  const int d = static_cast<int>(param(s, "d", 1));
  const double jitter = param(s, "jitter", 0.0);
  if (!(a < b)) throw InputError("graph interval must satisfy a < b");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw InputError("jitter must lie in [0, 1)");
  if (!((n == 2 && d == 1) || (n == 3 && (d == 1 || d == 2)))) throw InputError("graph needs (n, d) in {(2,1), (3,1), (3,2)}");
  const Graph1 g = graph_fn(fn, c, omega);
  // In R^3 a curve is lifted as (x, f, f / 2); a surface is the cylinder over f.
  const double lift = (n == 3 && d == 1) ? 0.5 : 0.0;
  auto speed = [&](double x) {
    const double q = g.df(x);
    return std::sqrt(1.0 + q * q * (1.0 + lift * lift));
  };
  std::vector<Point> pts;
  GroundTruth truth;
  const std::vector<double> xs = arc_parameters(a, b, s.h, jitter, speed);
  std::vector<double> ys{0.0};
  if (d == 2) ys = arc_parameters(a, b, s.h, 0.0, [](double) { return 1.0; });
  for (double y : ys) {
    for (double x : xs) {
      Point p(n);
      Matrix T(n, d);
      const double q = g.df(x);
      if (n == 2) {
        p << x, g.f(x);
        T << 1.0, q;
      } else if (d == 1) {
        p << x, g.f(x), lift * g.f(x);
        T << 1.0, q, lift * q;
      } else {
        p << x, y, g.f(x);
        T << 1.0, 0.0, 0.0, 1.0, q, 0.0;
      }
      const bool edge = x == a || x == b || (d == 2 && (y == a || y == b));
      const bool kink = corner && x == 0.0;
      if (kink) {
        truth.labels.push_back(TruthLabel::non_tangent);
        truth.planes.emplace_back();
      } else if (edge) {
        truth.labels.push_back(TruthLabel::boundary);
        truth.planes.emplace_back();
      } else {
        truth.labels.push_back(TruthLabel::tangent);
        truth.planes.emplace_back(AffinePlane(p, T));
      }
      pts.push_back(p);
    }
  }
  return finish(std::move(pts), std::move(truth), s, n, d);
}

inline Synthetic gen_circle(const GenSpec& s) {
  allow_params(s, {"R", "jitter"});
  const double R = param(s, "R", 1.0);
  const double jitter = param(s, "jitter", 0.0);
  if (!(R > 0.0)) throw InputError("circle radius must be positive");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw InputError("jitter must lie in [0, 1)");
  const auto N = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * R / s.h));
  std::vector<Point> pts;
  GroundTruth truth;
  for (std::size_t i = 0; i < std::max<std::size_t>(N, 3); ++i) {
    const double t = 2.0 * std::numbers::pi * (static_cast<double>(i) + jitter) / static_cast<double>(std::max<std::size_t>(N, 3));
    Point p(2);
    p << R * std::cos(t), R * std::sin(t);
    Matrix T(2, 1);
    T << -std::sin(t), std::cos(t);
    pts.push_back(p);
    truth.labels.push_back(TruthLabel::tangent);
    truth.planes.emplace_back(AffinePlane(p, T));
  }
  return finish(std::move(pts), std::move(truth), s, 2, 1);
}

inline Synthetic gen_cantor4(const GenSpec& s) {
  allow_params(s, {"g"});
  const int g = static_cast<int>(param(s, "g", 6));
  if (g < 0 || g > 11) throw InputError("cantor generation must lie in [0, 11]");
  const double side = std::pow(4.0, -g);
  if (s.h < side * std::sqrt(0.5) * (1.0 - 1e-12)) throw InputError("h below the covering radius of this generation");
  std::vector<Point> pts{Point::Zero(2)};
  for (int k = 1; k <= g; ++k) {
    const double off = 3.0 * std::pow(4.0, -k);
    std::vector<Point> next;
    for (const auto& p : pts) {
      for (int c = 0; c < 4; ++c) {
        Point q = p;
        q[0] += (c & 1) ? off : 0.0;
        q[1] += (c & 2) ? off : 0.0;
        next.push_back(q);
      }
    }
    pts = std::move(next);
  }
  for (auto& p : pts) p.array() += side / 2.0;
  std::sort(pts.begin(), pts.end(), [](const Point& u, const Point& v) {
    return std::tie(u[0], u[1]) < std::tie(v[0], v[1]);
  });
  GroundTruth truth;
  truth.labels.assign(pts.size(), TruthLabel::non_tangent);
  truth.planes.resize(pts.size());
  return finish(std::move(pts), std::move(truth), s, 2, 1);
}

inline std::vector<Point> koch_vertices(int g) {
  std::vector<Point> v{Point::Zero(2), Point::Zero(2)};
  v[1][0] = 1.0;
  const double c = std::cos(std::numbers::pi / 3.0);
  const double sn = std::sin(std::numbers::pi / 3.0);
  for (int k = 0; k < g; ++k) {
    std::vector<Point> next{v.front()};
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const Point a = v[i];
      const Vector e = (v[i + 1] - a) / 3.0;
      Vector r(2);
      r << c * e[0] - sn * e[1], sn * e[0] + c * e[1];
      next.push_back(a + e);
      next.push_back(a + e + r);
      next.push_back(a + 2.0 * e);
      next.push_back(v[i + 1]);
    }
    v = std::move(next);
  }
  return v;
}

inline Synthetic gen_koch(const GenSpec& s) {
  allow_params(s, {"g"});
  const int g = static_cast<int>(param(s, "g", 4));
  if (g < 0 || g > 9) throw InputError("koch generation must lie in [0, 9]");
  const auto V = koch_vertices(g);
  const double len = std::pow(3.0, -g);
  const int per = std::max(1, static_cast<int>(std::ceil(len / s.h - 1e-9)));
  std::vector<Point> pts;
  for (std::size_t i = 0; i + 1 < V.size(); ++i) {
    for (int j = 0; j < per; ++j) pts.push_back(V[i] + (V[i + 1] - V[i]) * (static_cast<double>(j) / per));
  }
  pts.push_back(V.back());
  GroundTruth truth;
  truth.labels.assign(pts.size(), TruthLabel::non_tangent);
  truth.planes.resize(pts.size());
  return finish(std::move(pts), std::move(truth), s, 2, 1);
}

// Logarithmic spiral R e^{b theta}, theta <= 0, plus its center.
inline Synthetic gen_spiral(const GenSpec& s) {
  allow_params(s, {"R", "b"});
  const double R = param(s, "R", 1.0);
  const double b = param(s, "b", 0.2);
  if (!(R > 0.0 && b > 0.0)) throw InputError("spiral needs R > 0 and b > 0");
  const double k = std::sqrt(1.0 + b * b);
  std::vector<Point> pts;
  GroundTruth truth;
  // Arc length from the center is r k / b; step it uniformly by h.
  const double total = R * k / b;
  const auto N = static_cast<std::size_t>(std::ceil(total / s.h));
  for (std::size_t i = 0; i < N; ++i) {
    const double arc = total - s.h * static_cast<double>(i);
    const double r = arc * b / k;
    const double th = std::log(r / R) / b;
    Point p(2);
    p << r * std::cos(th), r * std::sin(th);
    Matrix T(2, 1);
    T << b * std::cos(th) - std::sin(th), b * std::sin(th) + std::cos(th);
    pts.push_back(p);
    if (i == 0) {
      truth.labels.push_back(TruthLabel::boundary);
      truth.planes.emplace_back();
    } else {
      truth.labels.push_back(TruthLabel::tangent);
      truth.planes.emplace_back(AffinePlane(p, T));
    }
  }
  pts.push_back(Point::Zero(2));
  truth.labels.push_back(TruthLabel::non_tangent);
  truth.planes.emplace_back();
  return finish(std::move(pts), std::move(truth), s, 2, 1);
}

}  // namespace detail

/// Deterministic synthetic sample with calculus ground truth.
inline Synthetic gen_synthetic(const GenSpec& s) {
  if (!(s.h > 0.0) || !std::isfinite(s.h)) throw InputError("h must be positive");
  if (s.kind == "graph") return detail::gen_graph(s, false);
  if (s.kind == "corner") return detail::gen_graph(s, true);
  if (s.kind == "circle") return detail::gen_circle(s);
  if (s.kind == "cantor4") return detail::gen_cantor4(s);
  if (s.kind == "koch") return detail::gen_koch(s);
  if (s.kind == "spiral") return detail::gen_spiral(s);
  throw InputError("unknown generator kind '" + s.kind + "'");
}

/// Largest distance from a dense reference copy of the same set to the
/// sample; the covering promise is that this stays at or below h.
inline double covering_gap(const GenSpec& s, int oversample = 8) {
  const Synthetic base = gen_synthetic(s);
  GenSpec ref = s;
  if (s.kind == "cantor4") {
    ref.params["g"] = detail::param(s, "g", 6) + 2;
  } else {
    ref.h = s.h / oversample;
    ref.params.erase("jitter");
  }
  const Synthetic dense = gen_synthetic(ref);
  std::vector<double> gap(dense.sample.size());
  parallel_for(gap.size(), [&](std::size_t i) { gap[i] = base.sample.dist_to(dense.sample.point(i)); });
  double worst = 0.0;
  for (double g : gap) worst = std::max(worst, g);
  // The reference is itself a sample; its own covering radius is added back.
  if (s.kind == "cantor4") worst += std::pow(4.0, -(detail::param(s, "g", 6) + 2)) * std::sqrt(0.5);
  else worst += ref.h / 2.0;
  return worst;
}

}  // namespace betascan
