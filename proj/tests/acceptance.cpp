// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "betascan/ccbp.hpp"
#include "betascan/datasets.hpp"
#include "betascan/lemma_suite.hpp"
#include "betascan/multiscale.hpp"
#include "betascan/tangent.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace betascan;

namespace {

// Pinned tolerances.
constexpr double kSuiteSlack = 5e-2;
constexpr int kSuiteInstances = 100;
constexpr double kSuiteSeconds = 300.0;
constexpr double kOracleRel = 1e-3;
constexpr double kDeskH = 1e-4;
constexpr int kClassifyPoints = 100;
constexpr double kLabelRate = 0.95;
constexpr double kLastDecade = 1e-3;
constexpr double kForwardSeconds = 600.0;
constexpr double kCornerBeta = 0.35355339059327373;  // 1 / (2 sqrt 2)
constexpr double kCornerRel = 0.05;
constexpr int kCornerScales = 6;
constexpr double kSlopeFloor = 0.5;
constexpr double kComparabilitySlack = 0.1;
constexpr double kTspCircleC = 10.0;
constexpr double kCcbpEps = 0.1;
constexpr double kCcbpLastDecade = 1e-2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Synthetic make(const std::string& kind, const std::string& fn, double h, std::map<std::string, double> params = {}) {
  GenSpec s;
  s.kind = kind;
  s.fn = fn;
  s.h = h;
  s.params = std::move(params);
  return gen_synthetic(s);
}

struct Golden {
  std::string name;
  Synthetic syn;
};

// The golden planar samples shared by the oracle, structural and comparability checks.
std::vector<Golden> golden_set() {
  std::vector<Golden> g;
  g.push_back({"parabola", make("graph", "parabola", 1e-3)});
  g.push_back({"sin", make("graph", "sin", 1e-3)});
  g.push_back({"pow32", make("graph", "pow32", 1e-3)});
  g.push_back({"corner", make("corner", "", 1e-3)});
  g.push_back({"circle", make("circle", "", 1e-3)});
  g.push_back({"koch4", make("koch", "", 1e-3, {{"g", 4}})});
  g.push_back({"spiral", make("spiral", "", 1e-3)});
  g.push_back({"cantor4", make("cantor4", "", std::sqrt(0.5) * std::pow(4.0, -5), {{"g", 5}})});
  return g;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  SuiteOptions o;
  o.instances = kSuiteInstances;
  o.slack = kSuiteSlack;
  const SuiteReport rep = run_lemma_suite(o);
  const double secs = seconds_since(t0);
  std::set<std::pair<int, int>> dims;
  for (const auto& c : rep.cases) dims.insert({c.n, c.d});
  const bool cover = dims.count({2, 1}) && dims.count({3, 1}) && dims.count({3, 2});
  std::string detail;
  for (const auto& [k, t] : rep.tally) detail += fmt("%s %d/%d; ", k.c_str(), t.passed, t.run);
  detail += fmt("dims %s; %.0f s", cover ? "2/1,3/1,3/2" : "incomplete", secs);
  return {rep.all_pass(kSuiteInstances) && cover && rep.tally.size() == 5 && secs <= kSuiteSeconds, detail};
}

Outcome criterion2(const std::vector<Golden>& golden) {
  // One-sided against the coarse grid (never worse), two-sided against the
  // angle-refined brute force.
  double worst = 0.0, above_grid = 0.0;
  int evals = 0;
  for (const auto& g : golden) {
    const PointSample& E = g.syn.sample;
    const BetaEvaluator ev(E, 1);
    const auto perm = seeded_permutation(E.size(), 31);
    for (int c = 0; c < 3; ++c) {
      const Point x = E.point(perm[c]);
      for (double r : {0.05, 0.2}) {
        const Ball B(x, r);
        if (E.count_ball(x, r) < 3) continue;
        const double grid = oracle::line_sup_grid(E, B);
        const double want = oracle::line_sup_refined(E, B);
        const double got = ev.beta_infty(B).value;
        if (grid > 1e-12) above_grid = std::max(above_grid, (got - grid) / grid);
        const double rel = want > 1e-12 ? std::abs(got - want) / want : std::abs(got - want);
        worst = std::max(worst, rel);
        ++evals;
      }
    }
  }
  return {worst <= kOracleRel && above_grid <= kOracleRel && evals >= 40,
          fmt("%d evaluations, worst gap to refined oracle %.2e, worst excess over 3600x401 grid %.2e", evals, worst,
              above_grid)};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (const auto& [kind, fn] : std::vector<std::pair<std::string, std::string>>{
           {"circle", ""}, {"graph", "parabola"}, {"graph", "pow32"}}) {
    const Synthetic syn = make(kind, fn, kDeskH);
    const BetaEvaluator ev(syn.sample, 1);
    IndexList pts;
    for (std::size_t i : seeded_permutation(syn.sample.size(), 3)) {
      if (syn.truth.labels[i] != TruthLabel::tangent) continue;
      pts.push_back(static_cast<Index>(i));
      if (pts.size() == static_cast<std::size_t>(kClassifyPoints)) break;
    }
    std::vector<int> tangent(pts.size(), 0), converged(pts.size(), 0);
    std::vector<double> last(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t k) {
      const PointClassification pc = classify_point(ev, syn.sample.point(pts[k]));
      tangent[k] = pc.verdict.label == TangentLabel::tangent;
      const BetaProfile& P = pc.dini;
      const double cut = 10.0 * P.scales.back();
      double inc = 0.0;
      for (std::size_t s = 0; s < P.scales.size(); ++s)
        if (P.scales[s] < cut) inc += P.betas[s].value * P.betas[s].value;
      last[k] = inc;
      converged[k] = inc < kLastDecade;
    });
    const double n = static_cast<double>(pts.size());
    double tr = 0.0, cr = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      tr += tangent[k] / n;
      cr += converged[k] / n;
      worst = std::max(worst, last[k]);
    }
    pass = pass && tr >= kLabelRate && cr >= kLabelRate;
    detail += fmt("%s tangent %.2f, last-decade < %.0e on %.2f (max %.1e); ", (fn.empty() ? kind : fn).c_str(), tr,
                  kLastDecade, cr, worst);
  }
  const double secs = seconds_since(t0);
  detail += fmt("%.0f s", secs);
  return {pass && secs <= kForwardSeconds, detail};
}

Outcome criterion4() {
  const Synthetic corner = make("corner", "", kDeskH);
  const BetaEvaluator ev(corner.sample, 1);
  const Point o = Point::Zero(2);
  int scales = 0;
  double worst = 0.0;
  for (double r : scale_ladder(0.5, 2.0, 20.0 * kDeskH)) {
    const double b = ev.beta_infty(Ball(o, r)).value;
    worst = std::max(worst, std::abs(b - kCornerBeta) / kCornerBeta);
    ++scales;
  }
  const PointClassification pc = classify_point(ev, o);
  const double slope = pc.verdict.slope;

  const Synthetic cantor = make("cantor4", "", std::sqrt(0.5) * std::pow(4.0, -6), {{"g", 6}});
  const BetaEvaluator ec(cantor.sample, 1);
  const auto perm = seeded_permutation(cantor.sample.size(), 4);
  const std::size_t m = 200;
  std::vector<int> nt(m, 0);
  parallel_for(m, [&](std::size_t k) {
    nt[k] = classify_point(ec, cantor.sample.point(static_cast<Index>(perm[k]))).verdict.label ==
            TangentLabel::non_tangent;
  });
  double rate = 0.0;
  for (int v : nt) rate += v / static_cast<double>(m);
  const bool pass = worst <= kCornerRel && scales >= kCornerScales && slope >= kSlopeFloor &&
                    pc.verdict.label == TangentLabel::non_tangent && rate >= kLabelRate;
  return {pass, fmt("corner beta within %.2f%% over %d scales, slope %.2f, label %s; cantor g6 non_tangent %.3f",
                    100.0 * worst, scales, slope, to_string(pc.verdict.label), rate)};
}

Outcome criterion5(const std::vector<Golden>& golden) {
  int profiles = 0, passed = 0;
  double worst = 0.0;
  for (const auto& g : golden) {
    const PointSample& E = g.syn.sample;
    const BetaEvaluator ev(E, 1);
    const auto perm = seeded_permutation(E.size(), 5);
    for (int c = 0; c < 2; ++c) {
      const Point x = E.point(perm[c]);
      for (double p : {1.0, 2.0}) {
        for (double base : {2.0, 10.0}) {
          DiniOptions o;
          o.base = base;
          o.r0 = base == 2.0 ? 0.25 : 1.0;
          o.lambda = base == 2.0 ? 20.0 : 2.0;
          const BetaProfile prof = dini_profile(ev, x, p, o);
          const Comparability cmp = sum_integral_comparability(ev, prof, kComparabilitySlack);
          ++profiles;
          passed += cmp.pass;
          if (cmp.integral_estimate > 0.0) worst = std::max(worst, cmp.sum / (cmp.bound * cmp.integral_estimate));
        }
      }
    }
  }
  return {passed == profiles && profiles > 0,
          fmt("%d/%d profiles, worst sum / (bound * integral) %.2e", passed, profiles, worst)};
}

Outcome criterion6() {
  const Synthetic seg = make("graph", "linear", 1e-3, {{"c", 0.0}});
  ChristOptions lo;
  lo.lambda = 4.0;
  const TspSum s = jones_tsp_sum(BetaEvaluator(seg.sample, 1), build_christ_cubes(seg.sample, 0.5, 0, 10, lo));
  const bool seg_ok = s.sum == s.diam;

  const Synthetic circ = make("circle", "", 1e-3);
  const TspSum c = jones_tsp_sum(BetaEvaluator(circ.sample, 1), build_christ_cubes(circ.sample, 0.5, 0, 12));
  const double C = c.sum / (2.0 * std::numbers::pi);
  const bool circ_ok = std::isfinite(c.sum) && C <= kTspCircleC;

  const double h = std::pow(3.0, -6) / 2.0;
  ChristOptions ko;
  ko.lambda = 2.0;
  std::vector<double> sums;
  for (int g = 1; g <= 6; ++g) {
    const Synthetic k = make("koch", "", h, {{"g", g}});
    sums.push_back(jones_tsp_sum(BetaEvaluator(k.sample, 1), build_christ_cubes(k.sample, 0.5, 0, 14, ko)).sum);
  }
  bool inc = true;
  for (std::size_t g = 1; g < sums.size(); ++g) inc = inc && sums[g] > sums[g - 1];
  std::string ks;
  for (double v : sums) ks += fmt("%.4f ", v);
  return {seg_ok && circ_ok && inc, fmt("segment sum %.17g diam %.17g; circle C %.3f; koch %s", s.sum, s.diam, C,
                                        ks.c_str())};
}

Outcome criterion7() {
  auto fixture = [](const std::string& kind, const std::string& fn, std::map<std::string, double> params) {
    params["a"] = -0.7;
    params["b"] = 0.7;
    return make(kind, fn, 2.5e-4, params).sample;
  };
  std::string detail;
  bool pass = true;
  for (const auto& [name, E] : std::vector<std::pair<std::string, PointSample>>{
           {"flat", fixture("graph", "linear", {{"c", 0.0}})}, {"sine", fixture("graph", "sin", {{"c", 0.02}})}}) {
    const Ccbp c = build_ccbp(BetaEvaluator(E, 1), kCcbpEps, 3);
    const CcbpReport rep = validate_ccbp(c);
    double worst = 0.0;
    for (int i = 1; i <= 6; ++i) worst = std::max(worst, rep[i].worst);
    pass = pass && worst <= kCcbpEps && rep.all_pass();
    detail += fmt("%s worst %.3f; ", name.c_str(), worst);
  }

  const PointSample G = fixture("graph", "pow32", {{"c", 0.05}});
  const Ccbp cg = build_ccbp(BetaEvaluator(G, 1), kCcbpEps, 3);
  std::vector<Point> probes{Point::Zero(2)};
  const auto perm = seeded_permutation(G.size(), 5);
  for (int i = 0; i < 20; ++i) probes.push_back(G.point(perm[i]));
  const Summability sm = ccbp_summability(cg, probes);
  double last = 0.0;
  for (const auto& e : sm.eps) last = std::max(last, e.back() * e.back());
  pass = pass && last < kCcbpLastDecade && sm.flagged.empty();
  detail += fmt("pow32 last-decade increment %.2e, sup sum %.2e; ", last, sm.sup_sum);

  const PointSample K = fixture("corner", "", {});
  const CcbpReport rk = validate_ccbp(build_ccbp(BetaEvaluator(K, 1), kCcbpEps, 3));
  const bool witness = !rk[4].pass && rk[4].witness.has_value();
  pass = pass && witness;
  if (witness) {
    detail += fmt("corner CCBP4 witness k=%d j=%d m=%d i=%d", rk[4].witness->k, rk[4].witness->j, rk[4].witness->m,
                  rk[4].witness->i);
  } else {
    detail += "corner CCBP4 witness missing";
  }
  return {pass, detail};
}

Outcome criterion8(const std::vector<Golden>& golden) {
  bool christ = true;
  int trees = 0;
  for (const auto& g : golden) {
    for (double delta : {0.5, 0.2}) {
      ChristOptions o;
      o.lambda = 2.0;
      const CubeTree t = build_christ_cubes(g.syn.sample, delta, 0, delta == 0.5 ? 10 : 4, o);
      const ChristReport r = verify_christ_tree(g.syn.sample, t);
      christ = christ && r.ok();
      ++trees;
      if (!r.ok()) std::cerr << "  christ failure on " << g.name << " delta " << delta << "\n";
    }
  }

  // Corner with a gap: flat K = [-1, 0] x {0}, second branch y = x for x >= 0.1.
  std::vector<Point> pts;
  for (int j = 0; j <= 1000; ++j) pts.push_back((Point(2) << -1.0 + j / 1000.0, 0.0).finished());
  for (int j = 0; j <= 900; ++j) {
    const double x = 0.1 + 0.9 * j / 900.0;
    pts.push_back((Point(2) << x, x).finished());
  }
  const PointSample E = PointSample::from_points(pts, 2, 1, 1e-3);
  IndexList K;
  for (Index i = 0; i <= 1000; ++i) K.push_back(i);
  Matrix V(2, 1);
  V << 1, 0;
  const BubbleResult b = bubble_region(E, K, V, std::numbers::pi / 3, 4.0, Ball(Point::Zero(2), 1.0));
  Matrix F(1, 1001);
  for (int j = 0; j <= 1000; ++j) F(0, j) = -1.0 + j / 1000.0;
  Vector corner(1);
  corner << -1.0;
  WhitneyOptions wo;
  const WhitneyResult w = whitney_decompose(PointSample(F, 0, 1e-3), corner, 4.0, wo);
  bool whitney = !w.cubes.empty();
  for (const auto& q : w.cubes) whitney = whitney && q.side <= wo.A * q.dist_to_F && q.dist_to_F <= wo.A * q.side;

  const PointSample KS = E.subset(K);
  double cmax = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::size_t covered = 0;
  for (const auto& S : w.cubes) {
    const IndexList T = cylinder_fibers(S, b.points, E, V, Point::Zero(2));
    if (T.empty()) continue;
    covered += T.size();
    cmax = std::max(cmax, detail::diameter(E, T) / S.diam());
    double dist = std::numeric_limits<double>::infinity();
    for (Index i : T) dist = std::min(dist, KS.dist_to(E.point(i)));
    lo = std::min(lo, dist / S.diam());
    hi = std::max(hi, dist / S.diam());
  }
  // Fibers sit on y = x over a Whitney interval S of the projected K, so the
  // constants are bounded by sqrt 2, sqrt 2 / A and sqrt 2 (A + 1).
  const double r2 = std::sqrt(2.0);
  const bool fibers = covered == b.points.size() && !b.points.empty() && cmax <= r2 * (1 + 1e-12) &&
                      lo >= r2 / wo.A * (1 - 1e-12) && hi <= r2 * (wo.A + 1) * (1 + 1e-12);
  return {christ && whitney && fibers,
          fmt("christ %d trees %s; whitney %zu cubes %s; fibers C=%.3f c=%.3f C'=%.3f over %zu points", trees,
              christ ? "ok" : "FAILED", w.cubes.size(), whitney ? "ok" : "FAILED", cmax, lo, hi, covered)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BETASCAN_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome criterion9() {
  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen", "gen --gen koch --param g=3 --h 1e-3"},
      {"beta", "beta --gen corner --h 1e-3 --max-points 10 --r0 0.5 --base 2"},
      {"dini", "dini --gen graph --fn sin --h 1e-3 --max-points 10 --r0 0.25 --base 2"},
      {"classify", "classify --gen circle --h 1e-3 --max-points 10"},
      {"tsp", "tsp --gen circle --h 1e-3 --k-max 8"},
      {"ccbp", "ccbp --gen graph --fn linear --param c=0 --param a=-0.7 --param b=0.7 --h 2e-3 --levels 1 "
               "--max-points 5"},
      {"check", "check --instances 3"}};
  const fs::path root = fs::temp_directory_path() / "betascan_acceptance_det";
  fs::remove_all(root);
  int same = 0;
  std::string bad;
  for (const auto& [name, args] : commands) {
    const fs::path a = root / (name + "_a"), b = root / (name + "_b");
    const int ca = run_cli(args + " --out " + a.string());
    const int cb = run_cli(args + " --out " + b.string());
    bool ok = ca == 0 && cb == 0 && fs::exists(a / "manifest.json");
    if (ok) {
      for (const auto& f : fs::directory_iterator(a)) {
        const fs::path other = b / f.path().filename();
        ok = ok && fs::exists(other) && slurp(f.path()) == slurp(other);
      }
    }
    same += ok;
    if (!ok) bad += name + " ";
  }
  fs::remove_all(root);
  return {same == static_cast<int>(commands.size()),
          fmt("%d/%zu commands byte-identical%s%s", same, commands.size(), bad.empty() ? "" : "; differing: ",
              bad.c_str())};
}

}  // namespace

int main() {
  const std::vector<Golden> golden = golden_set();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"lemma suite", criterion1},
      {"oracle equivalence", [&] { return criterion2(golden); }},
      {"tangent points at desk scale", criterion3},
      {"non-tangent points at desk scale", criterion4},
      {"sum/integral discretization", [&] { return criterion5(golden); }},
      {"traveling salesman sums", criterion6},
      {"coherent balls and planes", criterion7},
      {"structural decompositions", [&] { return criterion8(golden); }},
      {"determinism", criterion9}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << " [" << fmt("%.1f s", seconds_since(t0)) << "]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
