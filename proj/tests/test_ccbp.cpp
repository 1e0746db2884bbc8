#include <cmath>

#include <gtest/gtest.h>

#include "betascan/ccbp.hpp"
#include "betascan/datasets.hpp"

using namespace betascan;

namespace {

PointSample graph(const std::string& kind, const std::string& fn, double h, std::map<std::string, double> params) {
  GenSpec s;
  s.kind = kind;
  s.fn = fn;
  s.h = h;
  s.params = std::move(params);
  return gen_synthetic(s).sample;
}

}  // namespace

TEST(Ccbp, FlatSamplePassesEveryCondition) {
  const PointSample E = graph("graph", "linear", 1e-3, {{"c", 0.0}, {"a", -0.7}, {"b", 0.7}});
  const BetaEvaluator ev(E, 1);
  const Ccbp c = build_ccbp(ev, 0.1, 2);
  ASSERT_EQ(c.levels.size(), 3u);
  EXPECT_EQ(c.levels[0].size(), 1u);
  for (const auto& l : c.levels)
    for (const auto& n : l) EXPECT_LT(n.beta, 1e-9);
  const CcbpReport rep = validate_ccbp(c);
  for (int i = 1; i <= 6; ++i) EXPECT_LE(rep[i].worst, 0.1) << rep[i].name;
  EXPECT_TRUE(rep.all_pass());
  const auto j = rep.to_json();
  EXPECT_TRUE(j.contains("CCBP4"));
  EXPECT_TRUE(j["CCBP4"]["pass"].get<bool>());

  std::vector<Point> probes{Point::Zero(2), E.point(300), E.point(1100)};
  const Summability s = ccbp_summability(c, probes);
  EXPECT_LT(s.sup_sum, 1e-12);
  EXPECT_TRUE(s.flagged.empty());
}

TEST(Ccbp, CornerRecordsWitness) {
  const PointSample E = graph("corner", "", 1e-3, {{"a", -0.7}, {"b", 0.7}});
  const BetaEvaluator ev(E, 1);
  const Ccbp c = build_ccbp(ev, 0.1, 2);
  const CcbpReport rep = validate_ccbp(c);
  EXPECT_FALSE(rep[4].pass);
  ASSERT_TRUE(rep[4].witness.has_value());
  EXPECT_GE(rep[4].witness->k, 1);
  EXPECT_FALSE(rep.to_json()["CCBP4"]["witness"].is_null());
}

TEST(Ccbp, OriginMustBeSampled) {
  const PointSample E = graph("graph", "linear", 1e-2, {{"c", 0.0}, {"a", 0.2}, {"b", 1.0}});
  const BetaEvaluator ev(E, 1);
  EXPECT_THROW(build_ccbp(ev, 0.1, 1), InputError);
  const PointSample F = graph("graph", "linear", 1e-2, {{"c", 0.0}});
  const BetaEvaluator ef(F, 1);
  EXPECT_THROW(build_ccbp(ef, 0.0, 1), InputError);
  EXPECT_THROW(build_ccbp(ef, 0.1, -1), InputError);
}
