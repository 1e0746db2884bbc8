#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "betascan/beta.hpp"
#include "betascan/datasets.hpp"
#include "betascan/error.hpp"
#include "betascan/util.hpp"

namespace betascan {

/// Constant of the two-set comparison. The pointwise triangle inequality
/// through the nearest point of E2, the content quasi-triangle bound
/// ∫(f+g)^p <= 2^p (∫f^p + ∫g^p) and the rescaling of beta_{E2}(y, 2t) give
/// beta_{E1}(x, t) <= 2 err + 2^{1+(d+p)/p} beta_{E2}(y, 2t) whenever the
/// nearest-point map E1 -> E2 does not inflate content. Returns the factor
/// on beta_{E2}.
inline double two_set_constant(int d, double p) { return 2.0 * std::pow(2.0, (d + p) / p); }

inline LemmaCheck check_two_set(const BetaEvaluator& e1, const BetaEvaluator& e2, const Point& x,
                                double t, double p) {
  const TwoSetComparison c = compare_two_sets(e1, e2, x, t, p);
  const double rhs = 2.0 * c.error_term + two_set_constant(e1.dim(), p) * c.beta_E2_double;
  return make_check(c.beta_E1, rhs, e1.options().slack);
}

struct SuiteOptions {
  int instances = 100;  // per lemma
  std::uint64_t seed = 2024;
  double slack = 5e-2;
};

struct SuiteCase {
  std::string lemma;
  std::string family;
  int n = 0;
  int d = 0;
  double p = 1.0;
  double radius = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  std::string error;  // set when the instance could not be evaluated
};

struct LemmaTally {
  int run = 0;
  int passed = 0;
  double worst_ratio = 0.0;  // max lhs / rhs
  double rate() const { return run ? static_cast<double>(passed) / run : 0.0; }
};

struct SuiteReport {
  std::vector<SuiteCase> cases;
  std::map<std::string, LemmaTally> tally;
  double seconds = 0.0;  // not serialized, so reports stay byte-identical

  bool all_pass(int min_instances) const {
    if (tally.empty()) return false;
    for (const auto& [k, t] : tally) {
      if (t.run < min_instances || t.passed != t.run) return false;
    }
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& [k, t] : tally) {
      j["lemmas"][k] = {{"run", t.run}, {"passed", t.passed}, {"rate", t.rate()}, {"worst_ratio", t.worst_ratio}};
    }
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& c : cases) {
      if (c.pass) continue;
      fails.push_back({{"lemma", c.lemma}, {"family", c.family}, {"n", c.n}, {"d", c.d}, {"p", c.p},
                       {"radius", c.radius}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"error", c.error}});
    }
    j["failures"] = fails;
    return j;
  }
};

namespace detail {

struct SuiteSet {
  std::string family;
  PointSample sample;
  PointSample partner;  // second set for the two-set comparison
};

inline PointSample rotate_random(const PointSample& E, std::mt19937_64& rng) {
  const int n = E.ambient();
  Matrix G(n, n);
  std::normal_distribution<double> N;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = N(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  return E.transformed(Q, Vector::Zero(n), 1.0);
}

inline SuiteSet make_suite_set(int which, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto graph = [&](const std::string& fn, int n, int d, double c, double h, double jitter) {
    GenSpec s;
    s.kind = fn == "abs" ? "corner" : "graph";
    if (fn != "abs") s.fn = fn;
    s.h = h;
    s.seed = seed;
    s.params = {{"a", -0.6}, {"b", 0.6}, {"c", c}, {"n", n}, {"d", d}, {"jitter", jitter}};
    if (fn == "sin") s.params["omega"] = uniform(rng, std::numbers::pi, 4.0 * std::numbers::pi);
    return s;
  };
  GenSpec s, t;
  std::string fam;
  switch (which % 9) {
    case 0: fam = "parabola2"; s = graph("parabola", 2, 1, uniform(rng, 0.2, 1.0), 4e-3, 0.3); break;
    case 1: fam = "sin2"; s = graph("sin", 2, 1, uniform(rng, 0.05, 0.2), 4e-3, 0.3); break;
    case 2: fam = "corner2"; s = graph("abs", 2, 1, uniform(rng, 0.3, 1.5), 4e-3, 0.0); break;
    case 3: fam = "pow32_2"; s = graph("pow32", 2, 1, uniform(rng, 0.3, 1.0), 4e-3, 0.3); break;
    case 4:
      fam = "cantor4";
      s.kind = "cantor4";
      s.params = {{"g", 4}};
      s.h = std::sqrt(0.5) * std::pow(4.0, -4);
      break;
    case 5:
      fam = "koch";
      s.kind = "koch";
      s.params = {{"g", 3}};
      s.h = 8e-3;
      break;
    case 6: fam = "parabola3"; s = graph("parabola", 3, 1, uniform(rng, 0.2, 1.0), 4e-3, 0.3); break;
    case 7: fam = "corner3"; s = graph("abs", 3, 1, uniform(rng, 0.3, 1.5), 4e-3, 0.0); break;
    default: fam = "surface"; s = graph(rng() % 2 ? "parabola" : "abs", 3, 2, uniform(rng, 0.3, 1.0), 0.04, 0.0); break;
  }
  t = s;
  t.seed = seed + 1;
  if (s.params.count("c")) t.params["c"] = s.params["c"] * uniform(rng, 0.8, 1.2);
  if (s.params.count("jitter") && t.params["jitter"] == 0.0) t.params["jitter"] = 0.2;
  if (s.kind == "cantor4" || s.kind == "koch") t.params["g"] = s.params["g"] + 1;
  if (s.kind == "cantor4") t.h = std::sqrt(0.5) * std::pow(4.0, -5);
  if (s.kind == "koch") t.h = 4e-3;
  PointSample E = gen_synthetic(s).sample;
  PointSample F = gen_synthetic(t).sample;
  std::mt19937_64 rot(seed ^ 0x9e3779b97f4a7c15ULL);
  PointSample Er = rotate_random(E, rot);
  std::mt19937_64 rot2(seed ^ 0x9e3779b97f4a7c15ULL);
  PointSample Fr = rotate_random(F, rot2);
  return {fam, Er, Fr};
}

}  // namespace detail

/// Runs the seeded lemma instances. Each instance draws a set family, a
/// center on the sample, a radius and, where it applies, an exponent.
inline SuiteReport run_lemma_suite(const SuiteOptions& o = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kSets = 18;
  std::vector<detail::SuiteSet> sets;
  std::vector<BetaEvaluator> evs, partners;
  BetaOptions bo;
  bo.slack = o.slack;
  for (int k = 0; k < kSets; ++k) {
    sets.push_back(detail::make_suite_set(k, o.seed + 101 * static_cast<std::uint64_t>(k)));
    evs.emplace_back(sets.back().sample, sets.back().sample.intrinsic(), bo);
    partners.emplace_back(sets.back().partner, sets.back().partner.intrinsic(), bo);
  }
  const std::vector<std::string> lemmas{"2.11", "2.12", "2.13", "2.14", "4.3"};
  SuiteReport rep;
  std::vector<SuiteCase> cases(lemmas.size() * static_cast<std::size_t>(o.instances));
  parallel_for(cases.size(), [&](std::size_t idx) {
    const std::string& lemma = lemmas[idx / static_cast<std::size_t>(o.instances)];
    const std::size_t i = idx % static_cast<std::size_t>(o.instances);
    std::mt19937_64 rng(o.seed * 7919 + idx);
    const std::size_t k = (i + idx / static_cast<std::size_t>(o.instances)) % kSets;
    const BetaEvaluator& ev = evs[k];
    const PointSample& E = ev.sample();
    SuiteCase c;
    c.lemma = lemma;
    c.family = sets[k].family;
    c.n = E.ambient();
    c.d = E.intrinsic();
    const double ps[] = {1.0, 1.5, 2.0};
    c.p = ps[rng() % 3];
    const Point x = E.point(static_cast<Index>(rng() % static_cast<std::uint64_t>(E.size())));
    c.radius = uniform(rng, 0.1, 0.4);
    try {
      LemmaCheck chk;
      if (lemma == "2.11") {
        c.p = 1.0;
        chk = check_lemma_2_11(ev, Ball(x, c.radius));
      } else if (lemma == "2.12") {
        c.p = 1.0;
        c.radius = uniform(rng, 0.25, 0.5);
        Lemma212Options lo;
        lo.lambda = 2.0;
        chk = check_lemma_2_12(ev, Ball(x, c.radius), lo);
      } else if (lemma == "2.13") {
        chk = check_lemma_2_13(ev, Ball(x, c.radius), c.p);
      } else if (lemma == "2.14") {
        const IndexList near = E.ball(x, c.radius / 2.0);
        const Point xi = E.point(near[rng() % near.size()]);
        const double room = c.radius - (xi - x).norm();
        const double s = room * uniform(rng, 0.2, 1.0);
        chk = check_lemma_2_14(ev, Ball(xi, s), Ball(x, c.radius), c.p);
      } else {
        chk = check_two_set(ev, partners[k], x, c.radius, c.p);
      }
      c.lhs = chk.lhs;
      c.rhs = chk.rhs;
      c.pass = chk.pass;
    } catch (const std::exception& e) {
      c.error = e.what();
      c.pass = false;
    }
    cases[idx] = c;
  });
  rep.cases = std::move(cases);
  for (const auto& c : rep.cases) {
    auto& t = rep.tally[c.lemma];
    ++t.run;
    t.passed += c.pass ? 1 : 0;
    if (c.rhs > 0.0) t.worst_ratio = std::max(t.worst_ratio, c.lhs / c.rhs);
    else if (c.lhs > 1e-12) t.worst_ratio = std::numeric_limits<double>::infinity();
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace betascan
