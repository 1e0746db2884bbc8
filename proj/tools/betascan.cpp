#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "betascan/beta.hpp"
#include "betascan/ccbp.hpp"
#include "betascan/datasets.hpp"
#include "betascan/io.hpp"
#include "betascan/lemma_suite.hpp"
#include "betascan/multiscale.hpp"
#include "betascan/tangent.hpp"

namespace fs = std::filesystem;
using namespace betascan;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Config {
  std::string command;
  std::string input;
  std::string gen;
  std::string fn = "parabola";
  std::vector<std::string> params;  // key=value
  double h = 1e-3;
  int d = 0;  // 0: take it from the sample
  double p = 1.0;
  double base = 10.0;
  double r0 = 1.0;
  double lambda = 20.0;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::vector<std::size_t> centers;
  std::vector<std::string> at;  // coordinates "x,y[,z]"
  std::size_t max_points = 200;
  std::string form = "both";
  bool allow_p_override = false;
  double delta = 0.5;
  int k_min = 0;
  int k_max = 12;
  double epsilon = 0.1;
  int ccbp_levels = 3;
  int instances = 100;
  double slack = 5e-2;
};

struct Loaded {
  PointSample sample;
  std::optional<GroundTruth> truth;
};

GenSpec gen_spec(const Config& c) {
  GenSpec s;
  s.kind = c.gen;
  s.fn = c.fn;
  s.h = c.h;
  s.seed = c.seed;
  for (const auto& kv : c.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("parameter '" + kv + "' is not key=value");
    s.params[kv.substr(0, eq)] = detail::parse_double(kv.substr(eq + 1), 0);
  }
  return s;
}

Loaded load(const Config& c) {
  if (c.input.empty() == c.gen.empty()) throw InputError("give exactly one of --input and --gen");
  if (!c.input.empty()) {
    if (!fs::exists(c.input)) throw InputError("no such file '" + c.input + "'");
    PointSample E = load_sample(c.input);
    if (c.d > 0 && c.d != E.intrinsic()) E = PointSample(E.coords(), c.d, E.resolution(), E.metadata());
    return {E, std::nullopt};
  }
  Synthetic s = gen_synthetic(gen_spec(c));
  return {s.sample, s.truth};
}

Point parse_point(const std::string& s, int n) {
  const auto parts = detail::split_commas(s);
  if (static_cast<int>(parts.size()) != n) throw InputError("--at needs " + std::to_string(n) + " coordinates");
  Point p(n);
  for (int a = 0; a < n; ++a) p[a] = detail::parse_double(parts[static_cast<std::size_t>(a)], 0);
  return p;
}

// Explicit indices, then snapped --at points, else a seeded subset.
IndexList pick_centers(const Config& c, const PointSample& E, const std::optional<GroundTruth>& truth) {
  IndexList out;
  for (auto i : c.centers) {
    if (i >= E.size()) throw InputError("center index " + std::to_string(i) + " out of range");
    out.push_back(i);
  }
  for (const auto& s : c.at) out.push_back(E.nearest(parse_point(s, E.ambient())));
  if (!out.empty()) return out;
  for (std::size_t i : seeded_permutation(E.size(), c.seed)) {
    if (truth && truth->labels[i] == TruthLabel::boundary) continue;
    out.push_back(i);
    if (out.size() >= c.max_points) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::ofstream open_out(const Config& c, const std::string& name) {
  fs::create_directories(c.out);
  std::ofstream os(fs::path(c.out) / name, std::ios::binary);
  if (!os) throw InputError("cannot write '" + (fs::path(c.out) / name).string() + "'");
  return os;
}

void write_json(const Config& c, const std::string& name, const json& j) { open_out(c, name) << j.dump(2) << '\n'; }

std::string coords(const Point& p) {
  std::string s;
  for (Eigen::Index a = 0; a < p.size(); ++a) s += (a ? "," : "") + format_double(p[a]);
  return s;
}

std::string plane_cols(const AffinePlane& P) {
  std::string s = coords(P.base());
  for (Eigen::Index k = 0; k < P.frame().size(); ++k) s += "," + format_double(P.frame().data()[k]);
  return s;
}

std::string axis_header(const std::string& prefix, int n) {
  std::string s;
  for (int a = 0; a < n; ++a) s += (a ? "," : "") + prefix + std::to_string(a);
  return s;
}

std::string plane_header(int n, int d) {
  std::string s = axis_header("base_", n);
  for (int k = 0; k < n * d; ++k) s += ",frame_" + std::to_string(k);
  return s;
}

json base_manifest(const Config& c, const PointSample& E) {
  json m;
  m["tool"] = "betascan";
  m["version"] = kVersion;
  m["command"] = c.command;
  m["config"] = {{"input", c.input},   {"gen", c.gen},       {"fn", c.fn},         {"params", c.params},
                 {"h", c.h},           {"d", E.intrinsic()}, {"n", E.ambient()},   {"p", c.p},
                 {"base", c.base},     {"r0", c.r0},         {"lambda", c.lambda}, {"seed", c.seed},
                 {"resolution", E.resolution()}, {"points", E.size()}};
  m["threads_env"] = std::getenv("BETASCAN_THREADS") ? std::getenv("BETASCAN_THREADS") : "";
  const BetaOptions bo;
  m["beta_options"] = {{"sup_angle_tol", bo.sup_angle_tol}, {"angle_tol", bo.angle_tol}, {"rel_tol", bo.rel_tol},
                       {"slack", bo.slack},    {"coarse_2d", bo.coarse_2d}, {"coarse_nd", bo.coarse_nd},
                       {"refine_starts", bo.refine_starts}, {"max_iter", bo.max_iter}, {"seed", bo.seed}};
  m["measure"] = "Hausdorff measure H^d replaced by dyadic Hausdorff content H^d_inf, capped at (2r)^d per ball";
  return m;
}

int cmd_gen(const Config& c) {
  if (c.gen.empty()) throw InputError("gen needs --gen <kind>");
  const GenSpec s = gen_spec(c);
  const Synthetic syn = gen_synthetic(s);
  fs::create_directories(c.out);
  save_sample(syn.sample, (fs::path(c.out) / "sample.csv").string());
  save_truth(syn.truth, syn.sample.ambient(), syn.sample.intrinsic(), (fs::path(c.out) / "truth.csv").string());
  json m = base_manifest(c, syn.sample);
  m["outputs"] = {"sample.csv", "truth.csv"};
  write_json(c, "manifest.json", m);
  return 0;
}

int cmd_beta(const Config& c) {
  const Loaded L = load(c);
  const PointSample& E = L.sample;
  const BetaEvaluator ev(E, E.intrinsic());
  const IndexList centers = pick_centers(c, E, L.truth);
  const std::vector<double> scales = scale_ladder(c.r0, c.base, c.lambda * E.resolution());
  if (scales.empty()) throw InputError("no scale survives the cut lambda * h");
  if (c.form != "sup" && c.form != "content" && c.form != "both") throw InputError("--form is sup, content or both");
  struct Row {
    Index center;
    double scale;
    std::optional<BetaValue> sup, content;
  };
  std::vector<Row> rows;
  for (Index i : centers)
    for (double r : scales) rows.push_back({i, r, std::nullopt, std::nullopt});
  parallel_for(rows.size(), [&](std::size_t k) {
    Row& row = rows[k];
    const Ball B(E.point(row.center), row.scale);
    if (c.form != "content") row.sup = ev.beta_infty(B);
    if (c.form != "sup") row.content = ev.beta_p(B, c.p);
  });
  auto os = open_out(c, "beta.csv");
  os << "center_index," << axis_header("x", E.ambient()) << ",scale,form,p,value,converged,"
     << plane_header(E.ambient(), E.intrinsic()) << '\n';
  auto emit = [&](const Row& row, const BetaValue& v, const char* form) {
    os << row.center << ',' << coords(E.point(row.center)) << ',' << format_double(row.scale) << ',' << form << ','
       << (v.form == BetaForm::sup ? std::string("inf") : format_double(v.p)) << ',' << format_double(v.value) << ','
       << (v.converged ? 1 : 0) << ',' << plane_cols(v.plane) << '\n';
  };
  for (const Row& row : rows) {
    if (row.sup) emit(row, *row.sup, "sup");
    if (row.content) emit(row, *row.content, "content");
  }
  json m = base_manifest(c, E);
  m["config"]["form"] = c.form;
  m["config"]["scales"] = scales;
  m["outputs"] = {"beta.csv"};
  write_json(c, "manifest.json", m);
  return 0;
}

int cmd_dini(const Config& c) {
  const Loaded L = load(c);
  const PointSample& E = L.sample;
  const BetaEvaluator ev(E, E.intrinsic());
  const IndexList centers = pick_centers(c, E, L.truth);
  DiniOptions o;
  o.base = c.base;
  o.r0 = c.r0;
  o.lambda = c.lambda;
  o.allow_p_override = c.allow_p_override;
  std::vector<std::optional<BetaProfile>> profs(centers.size());
  std::vector<double> slopes(centers.size());
  parallel_for(centers.size(), [&](std::size_t k) {
    profs[k] = dini_profile(ev, E.point(centers[k]), c.p, o);
    slopes[k] = partial_sum_slope(profs[k]->partial_sums);
  });
  auto os = open_out(c, "dini.csv");
  os << "center_index,scale,beta,partial_sum\n";
  json report = json::array();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const BetaProfile& P = *profs[k];
    for (std::size_t s = 0; s < P.scales.size(); ++s) {
      os << centers[k] << ',' << format_double(P.scales[s]) << ',' << format_double(P.betas[s].value) << ','
         << format_double(P.partial_sums[s]) << '\n';
    }
    report.push_back({{"center_index", centers[k]}, {"truncation_scale", P.truncation_scale},
                      {"sum", P.partial_sums.back()}, {"slope", slopes[k]}, {"warnings", P.warnings}});
  }
  write_json(c, "dini.json", report);
  json m = base_manifest(c, E);
  m["config"]["allow_p_override"] = c.allow_p_override;
  m["config"]["p_upper"] = std::isinf(p_upper(E.intrinsic())) ? json("inf") : json(p_upper(E.intrinsic()));
  m["outputs"] = {"dini.csv", "dini.json"};
  write_json(c, "manifest.json", m);
  return 0;
}

int cmd_classify(const Config& c, bool base_given, bool r0_given) {
  const Loaded L = load(c);
  const PointSample& E = L.sample;
  const BetaEvaluator ev(E, E.intrinsic());
  const IndexList centers = pick_centers(c, E, L.truth);
  ClassifyOptions o;
  o.p = c.p;
  o.dini.lambda = c.lambda;
  o.dini.allow_p_override = c.allow_p_override;
  // The dyadic ladder is the classification default; explicit flags win.
  if (base_given) o.dini.base = c.base;
  if (r0_given) o.dini.r0 = c.r0;
  std::vector<std::optional<PointClassification>> res(centers.size());
  parallel_for(centers.size(), [&](std::size_t k) { res[k] = classify_point(ev, E.point(centers[k]), o); });
  auto os = open_out(c, "classify.csv");
  os << "index,label,truth,dini_tail,flatness_final,slope\n";
  std::map<std::string, int> counts;
  int judged = 0, agree = 0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const TangentVerdict& v = res[k]->verdict;
    std::string truth = "";
    if (L.truth) {
      const TruthLabel t = L.truth->labels[centers[k]];
      truth = to_string(t);
      if (t != TruthLabel::boundary) {
        ++judged;
        if ((t == TruthLabel::tangent && v.label == TangentLabel::tangent) ||
            (t == TruthLabel::non_tangent && v.label == TangentLabel::non_tangent)) {
          ++agree;
        }
      }
    }
    ++counts[to_string(v.label)];
    os << centers[k] << ',' << to_string(v.label) << ',' << truth << ',' << format_double(v.dini_tail) << ','
       << format_double(v.flatness_final) << ',' << format_double(v.slope) << '\n';
  }
  json summary{{"points", centers.size()}, {"counts", counts}};
  if (L.truth) summary["agreement"] = judged ? static_cast<double>(agree) / judged : 0.0;
  write_json(c, "classify.json", summary);
  json m = base_manifest(c, E);
  m["config"]["base"] = o.dini.base;
  m["config"]["r0"] = o.dini.r0;
  m["classify"] = {{"flat_r0", o.flat_r0},
                   {"flat_base", o.flat_base},
                   {"theta_tol", o.thresholds.theta_tol},
                   {"tau_tol", o.thresholds.tau_tol},
                   {"theta_floor", o.thresholds.theta_floor},
                   {"slope_floor", o.thresholds.slope_floor},
                   {"max_points", c.max_points}};
  m["outputs"] = {"classify.csv", "classify.json"};
  write_json(c, "manifest.json", m);
  return 0;
}

int cmd_tsp(const Config& c) {
  const Loaded L = load(c);
  const PointSample& E = L.sample;
  if (E.intrinsic() != 1) throw InputError("tsp needs d = 1");
  const BetaEvaluator ev(E, 1);
  ChristOptions co;
  co.lambda = c.lambda;
  co.seed = c.seed;
  const CubeTree tree = build_christ_cubes(E, c.delta, c.k_min, c.k_max, co);
  const TspSum s = jones_tsp_sum(ev, tree);
  auto os = open_out(c, "tsp_levels.csv");
  os << "k,cubes,contribution\n";
  for (const auto& l : s.levels) os << l.k << ',' << l.cubes << ',' << format_double(l.contribution) << '\n';
  write_json(c, "tsp.json", {{"sum", s.sum}, {"diam", s.diam}, {"ratio", s.diam > 0 ? s.sum / s.diam : 0.0}});
  json m = base_manifest(c, E);
  m["christ"] = {{"delta", c.delta}, {"k_min", c.k_min}, {"k_max", c.k_max}, {"finest_scale", tree.finest_scale},
                 {"unit", co.unit}, {"C1", tree.C1}, {"a0", tree.a0}, {"ball_factor", 3.0}};
  m["outputs"] = {"tsp_levels.csv", "tsp.json"};
  write_json(c, "manifest.json", m);
  return 0;
}

int cmd_ccbp(const Config& c) {
  const Loaded L = load(c);
  const PointSample& E = L.sample;
  const BetaEvaluator ev(E, E.intrinsic());
  CcbpOptions o;
  o.seed = c.seed;
  const Ccbp cc = build_ccbp(ev, c.epsilon, c.ccbp_levels, o);
  const CcbpReport rep = validate_ccbp(cc);
  std::vector<Point> probes;
  for (Index i : pick_centers(c, E, L.truth)) probes.push_back(E.point(i));
  const Summability sm = ccbp_summability(cc, probes);
  auto os = open_out(c, "ccbp_levels.csv");
  os << "k,j," << axis_header("x", E.ambient()) << ",beta\n";
  for (std::size_t k = 0; k < cc.levels.size(); ++k) {
    for (std::size_t j = 0; j < cc.levels[k].size(); ++j) {
      os << k << ',' << j << ',' << coords(cc.levels[k][j].x) << ',' << format_double(cc.levels[k][j].beta) << '\n';
    }
  }
  json out = rep.to_json();
  out["warnings"] = cc.warnings;
  out["summability"] = {{"sup_sum", sm.sup_sum}, {"sums", sm.sums}, {"flagged", sm.flagged.size()}};
  write_json(c, "ccbp.json", out);
  json m = base_manifest(c, E);
  m["ccbp"] = {{"epsilon", c.epsilon},          {"k_max", c.ccbp_levels},       {"r_unit", o.r_unit},
               {"beta_radius", o.beta_radius},  {"select_radius", o.select_radius},
               {"net_sep", o.net_sep},          {"sep_constant", rep.sep_constant}, {"grid", 32}};
  m["outputs"] = {"ccbp_levels.csv", "ccbp.json"};
  write_json(c, "manifest.json", m);
  return rep.all_pass() ? 0 : 1;
}

int cmd_check(const Config& c) {
  SuiteOptions o;
  o.instances = c.instances;
  o.seed = c.seed;
  o.slack = c.slack;
  const SuiteReport rep = run_lemma_suite(o);
  write_json(c, "check.json", rep.to_json());
  json m;
  m["tool"] = "betascan";
  m["version"] = kVersion;
  m["command"] = "check";
  m["config"] = {{"instances", o.instances}, {"seed", o.seed}, {"slack", o.slack}};
  m["outputs"] = {"check.json"};
  write_json(c, "manifest.json", m);
  for (const auto& [k, t] : rep.tally) std::cout << k << " " << t.passed << "/" << t.run << "\n";
  return rep.all_pass(o.instances) ? 0 : 1;
}

int fail(const std::string& kind, const std::string& msg, int code) {
  std::cerr << json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale beta numbers on point samples"};
  app.require_subcommand(1);
  // -h would collide with the resolution flag --h.
  app.set_help_flag("--help", "print help");
  Config c;
  auto add_common = [&](CLI::App* s) {
    s->set_help_flag("--help", "print help");
    s->add_option("--input", c.input, "sample file");
    s->add_option("--gen", c.gen, "generator kind: graph, corner, circle, cantor4, koch, spiral");
    s->add_option("--fn", c.fn, "graph function: linear, parabola, pow32, sin");
    s->add_option("--param", c.params, "generator parameter key=value");
    s->add_option("--h", c.h, "generator resolution");
    s->add_option("--d", c.d, "intrinsic dimension");
    s->add_option("--p", c.p, "content exponent");
    s->add_option("--base", c.base, "scale ladder base");
    s->add_option("--r0", c.r0, "top scale");
    s->add_option("--lambda", c.lambda, "truncation factor on the resolution");
    s->add_option("--seed", c.seed, "seed");
    s->add_option("--out", c.out, "output directory");
    s->add_option("--center", c.centers, "center indices");
    s->add_option("--at", c.at, "center coordinates x,y[,z], snapped to the sample");
    s->add_option("--max-points", c.max_points, "seeded center count when none is given");
  };
  auto* gen = app.add_subcommand("gen", "generate a sample and its ground truth");
  auto* beta = app.add_subcommand("beta", "beta table over centers and scales");
  auto* dini = app.add_subcommand("dini", "Dini profiles");
  auto* classify = app.add_subcommand("classify", "tangent classification");
  auto* tsp = app.add_subcommand("tsp", "traveling salesman sum over Christ cubes");
  auto* ccbp = app.add_subcommand("ccbp", "build and validate a coherent collection of balls and planes");
  auto* check = app.add_subcommand("check", "lemma property suite");
  for (auto* s : {gen, beta, dini, classify, tsp, ccbp}) add_common(s);
  check->set_help_flag("--help", "print help");
  beta->add_option("--form", c.form, "sup, content or both");
  for (auto* s : {dini, classify}) s->add_flag("--allow-p-override", c.allow_p_override, "accept p outside the range");
  tsp->add_option("--delta", c.delta, "cube ratio");
  tsp->add_option("--k-min", c.k_min, "coarsest cube level");
  tsp->add_option("--k-max", c.k_max, "finest cube level");
  ccbp->add_option("--epsilon", c.epsilon, "flatness parameter");
  ccbp->add_option("--levels", c.ccbp_levels, "finest level");
  check->add_option("--instances", c.instances, "instances per lemma");
  check->add_option("--seed", c.seed, "seed");
  check->add_option("--slack", c.slack, "relative slack");
  check->add_option("--out", c.out, "output directory");
  c.seed = 1;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage_error", e.what(), 2);
  }
  c.command = app.get_subcommands().front()->get_name();
  try {
    if (*gen) return cmd_gen(c);
    if (*beta) return cmd_beta(c);
    if (*dini) return cmd_dini(c);
    if (*classify) return cmd_classify(c, classify->count("--base") > 0, classify->count("--r0") > 0);
    if (*tsp) return cmd_tsp(c);
    if (*ccbp) return cmd_ccbp(c);
    if (*check) {
      if (!check->count("--seed")) c.seed = SuiteOptions{}.seed;
      return cmd_check(c);
    }
  } catch (const InputError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 3);
  } catch (const fs::filesystem_error& e) {
    return fail("input_error", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("numerical_error", e.what(), 3);
  }
  return 0;
}
