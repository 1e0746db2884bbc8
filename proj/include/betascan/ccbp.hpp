#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "betascan/beta.hpp"
#include "betascan/distance.hpp"
#include "betascan/error.hpp"
#include "betascan/geometry.hpp"
#include "betascan/multiscale.hpp"
#include "betascan/sample.hpp"
#include "betascan/util.hpp"

namespace betascan {

struct CcbpNode {
  Point u;  // net point of the sample
  Point x;  // point of the sample near u closest to L
  AffinePlane P;
  double beta = 0.0;  // beta^{d,1}(u, beta_radius * r_k)
};

struct Ccbp {
  AffinePlane P0;
  std::vector<std::vector<CcbpNode>> levels;
  double r_unit = 1.0;
  double epsilon = 0.1;
  std::vector<std::string> warnings;

  double r(int k) const { return r_unit * std::pow(10.0, -k); }
  int ambient() const { return P0.ambient(); }
};

struct CcbpOptions {
  double r_unit = 1.0;
  double beta_radius = 120.0;   // in units of r_k
  double select_radius = 1.0 / 3.0;
  double net_sep = 4.0 / 3.0;
  std::uint64_t seed = 1;
};

/// Per level k: a maximal net_sep * r_k separated net u_{j,k} of the sample,
/// L_{j,k} the beta^{d,1} plane of B(u_{j,k}, beta_radius * r_k), x_{j,k}
/// the point of E ∩ B(u_{j,k}, select_radius * r_k) closest to L_{j,k}, and
/// P_{j,k} the translate of L_{j,k} through x_{j,k}. Level 0 has the single
/// net point nearest the origin.
inline Ccbp build_ccbp(const BetaEvaluator& ev, double epsilon, int k_max, const CcbpOptions& o = {}) {
  const PointSample& E = ev.sample();
  if (E.empty()) throw InputError("empty sample");
  if (k_max < 0) throw InputError("k_max must be nonnegative");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (!(o.r_unit > 0.0 && o.beta_radius > 0.0 && o.select_radius > 0.0 && o.net_sep > 0.0)) {
    throw InputError("CCBP radii must be positive");
  }
  const Point origin = Point::Zero(E.ambient());
  for (Index i = 0; i < E.size(); ++i) {
    if (E.col(i).norm() > o.r_unit * (1.0 + 1e-12)) throw InputError("sample not normalized into B(0, r_unit)");
  }
  Index zero = 0;
  double dz = 0.0;
  zero = E.nearest(origin, &dz);
  if (dz > std::max(E.resolution(), 1e-12 * o.r_unit)) throw InputError("origin is not a sample point");

  std::vector<IndexList> nets(static_cast<std::size_t>(k_max) + 1);
  nets[0] = {zero};
  const auto order = seeded_permutation(E.size(), o.seed);
  for (int k = 1; k <= k_max; ++k) {
    const double sep = o.net_sep * o.r_unit * std::pow(10.0, -k);
    detail::NetGrid grid(E, sep);
    for (Index i : order) {
      if (!grid.has_close(i)) {
        grid.add(i);
        nets[static_cast<std::size_t>(k)].push_back(i);
      }
    }
  }

  std::vector<std::vector<std::optional<CcbpNode>>> tmp(nets.size());
  std::vector<std::pair<int, std::size_t>> jobs;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    tmp[k].resize(nets[k].size());
    for (std::size_t j = 0; j < nets[k].size(); ++j) jobs.emplace_back(static_cast<int>(k), j);
  }
  parallel_for(jobs.size(), [&](std::size_t q) {
    const auto [k, j] = jobs[q];
    const double rk = o.r_unit * std::pow(10.0, -k);
    const Point u = E.point(nets[static_cast<std::size_t>(k)][j]);
    const BetaValue b = ev.beta_p(Ball(u, o.beta_radius * rk), 1.0);
    const IndexList cand = E.ball(u, o.select_radius * rk);
    if (cand.empty()) {
      throw PreconditionError("empty selection ball at (j, k) = (" + std::to_string(j) + ", " + std::to_string(k) + ")");
    }
    Index best = cand.front();
    double bd = std::numeric_limits<double>::infinity();
    for (Index i : cand) {
      const double dist = b.plane.distance(E.point(i));
      if (dist < bd) {
        bd = dist;
        best = i;
      }
    }
    const Point x = E.point(best);
    tmp[static_cast<std::size_t>(k)][j] = CcbpNode{u, x, b.plane.through(x), b.value};
  });

  Ccbp c{tmp[0][0]->P, {}, o.r_unit, epsilon, {}};
  for (std::size_t k = 0; k < tmp.size(); ++k) {
    c.levels.emplace_back();
    for (auto& n : tmp[k]) {
      if (k >= 1 && n->beta >= epsilon) {
        c.warnings.push_back("beta above epsilon at level " + std::to_string(k));
      }
      c.levels.back().push_back(std::move(*n));
    }
  }
  std::sort(c.warnings.begin(), c.warnings.end());
  c.warnings.erase(std::unique(c.warnings.begin(), c.warnings.end()), c.warnings.end());
  return c;
}

struct CcbpWitness {
  int k = -1;
  int j = -1;
  int m = -1;
  int i = -1;
};

struct ConditionResult {
  std::string name;
  double worst = 0.0;
  bool pass = true;
  std::size_t checked = 0;
  std::optional<CcbpWitness> witness;
};

struct CcbpReport {
  std::array<ConditionResult, 6> conditions;
  double epsilon = 0.0;
  double sep_constant = 0.0;

  bool all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; });
  }
  const ConditionResult& operator[](int i) const { return conditions.at(static_cast<std::size_t>(i - 1)); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["epsilon"] = epsilon;
    j["sep_constant"] = sep_constant;
    for (const auto& c : conditions) {
      nlohmann::json e{{"worst", c.worst}, {"pass", c.pass}, {"checked", c.checked}};
      if (c.witness) e["witness"] = {{"k", c.witness->k}, {"j", c.witness->j}, {"m", c.witness->m}, {"i", c.witness->i}};
      else e["witness"] = nullptr;
      j[c.name] = e;
    }
    return j;
  }
};

namespace detail {

inline PointSample level_points(const Ccbp& c, std::size_t k) {
  std::vector<Point> xs;
  for (const auto& n : c.levels[k]) xs.push_back(n.x);
  return PointSample::from_points(xs, c.ambient(), std::max(1, c.P0.dim()), 0.0);
}

inline void offer(ConditionResult& r, double v, CcbpWitness w) {
  ++r.checked;
  if (!r.witness || v > r.worst) {
    r.worst = v;
    r.witness = w;
  }
}

inline void merge(ConditionResult& into, const ConditionResult& part) {
  into.checked += part.checked;
  if (part.witness && (!into.witness || part.worst > into.worst)) {
    into.worst = part.worst;
    into.witness = part.witness;
  }
}

}  // namespace detail

/// Worst value and witness per condition. CCBP1 reports the relative
/// shortfall max(0, sep_constant - |x_i - x_j| / r_k); the default constant
/// 2/3 is what a 4/3-separated net with 1/3 selection balls guarantees.
/// CCBP2 reports max(0, dist(x_{j,k}, centers_{k-1}) / r_{k-1} - 2).
inline CcbpReport validate_ccbp(const Ccbp& c, int grid = 32, double sep_constant = 2.0 / 3.0) {
  if (c.levels.empty() || c.levels.front().empty()) throw InputError("CCBP has no levels");
  CcbpReport rep;
  rep.epsilon = c.epsilon;
  rep.sep_constant = sep_constant;
  const char* names[6] = {"CCBP1", "CCBP2", "CCBP3", "CCBP4", "CCBP5", "CCBP6"};
  for (int i = 0; i < 6; ++i) rep.conditions[static_cast<std::size_t>(i)].name = names[i];
  const std::size_t K = c.levels.size();
  std::vector<PointSample> pts;
  for (std::size_t k = 0; k < K; ++k) pts.push_back(detail::level_points(c, k));

  for (std::size_t k = 0; k < K; ++k) {
    const auto& L = c.levels[k];
    const double rk = c.r(static_cast<int>(k));
    auto& c1 = rep.conditions[0];
    auto& c2 = rep.conditions[1];
    auto& c4 = rep.conditions[3];
    auto& c5 = rep.conditions[4];
    std::vector<ConditionResult> part4(L.size());
    std::vector<ConditionResult> part5(L.size());
    parallel_for(L.size(), [&](std::size_t j) {
      for (Index i : pts[k].ball(L[j].x, 100.0 * rk * (1.0 + 1e-12))) {
        if (i == j) continue;
        const double v = plane_local_distance(L[j].P, L[i].P, L[j].x, 100.0 * rk, grid).value;
        detail::offer(part4[j], v, {static_cast<int>(k), static_cast<int>(j), static_cast<int>(k), static_cast<int>(i)});
      }
      if (k + 1 < K) {
        for (Index i : pts[k + 1].ball(L[j].x, 2.0 * rk * (1.0 + 1e-12))) {
          const double v = plane_local_distance(L[j].P, c.levels[k + 1][i].P, L[j].x, 20.0 * rk, grid).value;
          detail::offer(part5[j], v,
                        {static_cast<int>(k), static_cast<int>(j), static_cast<int>(k + 1), static_cast<int>(i)});
        }
      }
    });
    for (std::size_t j = 0; j < L.size(); ++j) {
      detail::merge(c4, part4[j]);
      detail::merge(c5, part5[j]);
      for (Index i : pts[k].ball(L[j].x, sep_constant * rk)) {
        if (i == j) continue;
        const double v = std::max(0.0, sep_constant - (L[j].x - L[i].x).norm() / rk);
        detail::offer(c1, v, {static_cast<int>(k), static_cast<int>(j), static_cast<int>(k), static_cast<int>(i)});
      }
      if (k >= 1) {
        double dprev = 0.0;
        const Index i = pts[k - 1].nearest(L[j].x, &dprev);
        const double v = std::max(0.0, dprev / c.r(static_cast<int>(k) - 1) - 2.0);
        detail::offer(c2, v, {static_cast<int>(k), static_cast<int>(j), static_cast<int>(k) - 1, static_cast<int>(i)});
      }
    }
  }
  auto& c3 = rep.conditions[2];
  auto& c6 = rep.conditions[5];
  for (std::size_t j = 0; j < c.levels[0].size(); ++j) {
    const auto& n = c.levels[0][j];
    detail::offer(c3, c.P0.distance(n.x) / c.r_unit, {0, static_cast<int>(j), -1, -1});
    detail::offer(c6, plane_local_distance(n.P, c.P0, n.x, 100.0 * c.r_unit, grid).value, {0, static_cast<int>(j), -1, -1});
  }
  for (auto& r : rep.conditions) r.pass = r.worst <= c.epsilon;
  return rep;
}

struct Summability {
  std::vector<std::vector<double>> eps;  // eps[probe][k - 1], k = 1..K-1
  std::vector<double> sums;
  double sup_sum = 0.0;
  std::vector<std::pair<std::size_t, int>> flagged;  // (probe, k) outside 11 V_k
};

/// eps_k(y) = sup d_{x_{i,m}, 100 r_m}(P_{j,k}, P_{i,m}) over j in J_k,
/// m in {k-1, k}, i in J_m with y in 11 B_{j,k} ∩ B_{i,m}; per-probe sums of
/// squares over k >= 1.
inline Summability ccbp_summability(const Ccbp& c, const std::vector<Point>& probes, int grid = 32) {
  const std::size_t K = c.levels.size();
  std::vector<PointSample> pts;
  for (std::size_t k = 0; k < K; ++k) pts.push_back(detail::level_points(c, k));
  Summability out;
  out.eps.assign(probes.size(), std::vector<double>(K > 0 ? K - 1 : 0, 0.0));
  std::vector<std::vector<int>> flag(probes.size());
  parallel_for(probes.size(), [&](std::size_t q) {
    const Point& y = probes[q];
    detail::require_same_dim(y.size(), c.ambient());
    for (std::size_t k = 1; k < K; ++k) {
      const double rk = c.r(static_cast<int>(k));
      const IndexList js = pts[k].ball(y, 11.0 * rk);
      if (js.empty()) {
        flag[q].push_back(static_cast<int>(k));
        continue;
      }
      double sup = 0.0;
      for (std::size_t m : {k - 1, k}) {
        const double rm = c.r(static_cast<int>(m));
        for (Index i : pts[m].ball(y, rm)) {
          for (Index j : js) {
            const double v = plane_local_distance(c.levels[k][j].P, c.levels[m][i].P, c.levels[m][i].x, 100.0 * rm, grid).value;
            sup = std::max(sup, v);
          }
        }
      }
      out.eps[q][k - 1] = sup;
    }
  });
  for (std::size_t q = 0; q < probes.size(); ++q) {
    double s = 0.0;
    for (double e : out.eps[q]) s += e * e;
    out.sums.push_back(s);
    out.sup_sum = std::max(out.sup_sum, s);
    for (int k : flag[q]) out.flagged.emplace_back(q, k);
  }
  return out;
}

}  // namespace betascan
