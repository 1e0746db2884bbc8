#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "betascan/geometry.hpp"
#include "betascan/sample.hpp"

namespace oracle {

using namespace betascan;

/// Brute-force beta_infty for lines in the plane: 3600 normal angles in
/// [0, pi) and, per angle, 401 evenly spaced offsets spanning the range of
/// projections, so the midpoint offset is always on the grid.
inline double line_sup_grid(const PointSample& E, const Ball& B, int angles = 3600, int offsets = 401) {
  const IndexList idx = E.ball(B);
  std::vector<double> xs, ys;
  for (Index i : idx) {
    xs.push_back(E.col(i)[0] - B.center[0]);
    ys.push_back(E.col(i)[1] - B.center[1]);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> proj(xs.size());
  for (int a = 0; a < angles; ++a) {
    const double th = std::numbers::pi * a / angles;
    const double c = std::cos(th), s = std::sin(th);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      proj[k] = c * xs[k] + s * ys[k];
      lo = std::min(lo, proj[k]);
      hi = std::max(hi, proj[k]);
    }
    for (int o = 0; o < offsets; ++o) {
      const double off = lo + (hi - lo) * o / (offsets - 1);
      double worst = 0.0;
      for (double v : proj) worst = std::max(worst, std::abs(v - off));
      best = std::min(best, worst);
    }
  }
  return best / B.radius;
}

/// Same brute force with the angle resolved much finer: every one of the 3600
/// coarse angles is scored by its exact half-width, then the `keep` best are
/// rescanned with `fine` angles across their neighbouring cells. For thin
/// sets the coarse grid alone overestimates by up to r * pi / 7200.
inline double line_sup_refined(const PointSample& E, const Ball& B, int angles = 3600, int keep = 8,
                               int fine = 2000) {
  const IndexList idx = E.ball(B);
  std::vector<double> xs, ys;
  for (Index i : idx) {
    xs.push_back(E.col(i)[0] - B.center[0]);
    ys.push_back(E.col(i)[1] - B.center[1]);
  }
  auto half_width = [&](double th) {
    const double c = std::cos(th), s = std::sin(th);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double v = c * xs[k] + s * ys[k];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return (hi - lo) / 2.0;
  };
  const double step = std::numbers::pi / angles;
  std::vector<std::pair<double, int>> coarse;
  for (int a = 0; a < angles; ++a) coarse.emplace_back(half_width(step * a), a);
  std::partial_sort(coarse.begin(), coarse.begin() + std::min(keep, angles), coarse.end());
  double best = coarse.front().first;
  for (int q = 0; q < std::min(keep, angles); ++q) {
    const double th0 = step * coarse[q].second;
    for (int f = 0; f <= fine; ++f) best = std::min(best, half_width(th0 - step + 2.0 * step * f / fine));
  }
  return best / B.radius;
}

}  // namespace oracle
