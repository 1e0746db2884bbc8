#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "betascan/datasets.hpp"
#include "betascan/multiscale.hpp"
#include "betascan/tangent.hpp"

using namespace betascan;

namespace {

Synthetic gen(const std::string& kind, const std::string& fn, double h,
              std::map<std::string, double> params = {}) {
  GenSpec s;
  s.kind = kind;
  s.fn = fn;
  s.h = h;
  s.params = std::move(params);
  return gen_synthetic(s);
}

Matrix rotation2(double a) {
  Matrix R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R;
}

}  // namespace

TEST(ScaleLadder, Decimal) {
  const auto s = scale_ladder(1.0, 10.0, 2e-3);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[2], 0.01);
  EXPECT_THROW(scale_ladder(1.0, 1.0, 0.1), InputError);
}

TEST(DiniProfile, RigidMotionAndDilationInvariant) {
  const PointSample E = gen("graph", "parabola", 1e-3).sample;
  const BetaEvaluator ev(E, 1);
  const Point x = E.point(E.nearest(Point::Zero(2)));
  DiniOptions o;
  o.base = 2.0;
  o.r0 = 0.5;
  const BetaProfile a = dini_profile(ev, x, 1.0, o);
  Vector t(2);
  t << 0.5, 2.0;
  // The content grids do not move with the set, so the match is approximate.
  const double lam = 2.0;
  const Matrix R = rotation2(0.4);
  const PointSample F = E.transformed(R, t, lam);
  const BetaEvaluator ef(F, 1);
  DiniOptions q = o;
  q.r0 = lam * o.r0;
  const BetaProfile b = dini_profile(ef, Point(lam * (R * x) + t), 1.0, q);
  ASSERT_EQ(a.scales.size(), b.scales.size());
  for (std::size_t k = 0; k < a.partial_sums.size(); ++k) {
    EXPECT_NEAR(b.partial_sums[k], a.partial_sums[k], 0.05 * a.partial_sums[k] + 1e-6) << k;
  }
}

TEST(DiniProfile, ContractErrors) {
  const PointSample E = gen("graph", "parabola", 1e-2).sample;
  const BetaEvaluator ev(E, 1);
  Point off(2);
  off << 0.0, 0.5;
  EXPECT_THROW(dini_profile(ev, off, 1.0), InputError);
  EXPECT_THROW(dini_profile(ev, E.point(10), 1.0), InputError);  // decimal ladder: too few scales
  EXPECT_EQ(p_upper(3), 6.0);
  EXPECT_TRUE(std::isinf(p_upper(2)));
}

TEST(PartialSumSlope, BoundedAndLinear) {
  std::vector<double> linear, bounded;
  double s = 0.0;
  for (int k = 0; k < 10; ++k) {
    linear.push_back(0.125 * (k + 1));
    s += std::pow(0.5, k);
    bounded.push_back(s);
  }
  EXPECT_NEAR(partial_sum_slope(linear), 1.0, 1e-12);
  EXPECT_LT(partial_sum_slope(bounded), 0.3);
  EXPECT_EQ(partial_sum_slope(std::vector<double>(5, 1e-30)), 0.0);
}

TEST(Classify, CircleTangentCornerNot) {
  const Synthetic circ = gen("circle", "", 1e-3);
  const BetaEvaluator ec(circ.sample, 1);
  const PointClassification pc = classify_point(ec, circ.sample.point(0));
  EXPECT_EQ(pc.verdict.label, TangentLabel::tangent);
  ASSERT_TRUE(pc.verdict.plane.has_value());
  EXPECT_LT(principal_angle(*pc.verdict.plane, *circ.truth.planes[0]), 0.05);

  const Synthetic corner = gen("corner", "", 1e-3);
  const BetaEvaluator ek(corner.sample, 1);
  const PointClassification kc = classify_point(ek, Point::Zero(2));
  EXPECT_EQ(kc.verdict.label, TangentLabel::non_tangent);
  EXPECT_GT(kc.verdict.flatness_final, 0.3);
}

TEST(Classify, ShrinkingTolerancesNeverFlipToNonTangent) {
  const Synthetic circ = gen("graph", "sin", 1e-3, {{"c", 0.1}});
  const BetaEvaluator ev(circ.sample, 1);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Point x = circ.sample.point(static_cast<Index>(200 + rng() % 1500));
    const PointClassification pc = classify_point(ev, x);
    TangentThresholds th;
    for (double f : {1.0, 0.5, 0.1, 0.01, 0.0}) {
      th.theta_tol = 0.05 * f;
      th.tau_tol = 0.01 * f;
      const TangentVerdict v = classify_tangent(pc.flatness, pc.dini, th);
      if (pc.verdict.label == TangentLabel::tangent) EXPECT_NE(v.label, TangentLabel::non_tangent);
      if (pc.verdict.label != TangentLabel::tangent) EXPECT_EQ(v.label, pc.verdict.label);
    }
  }
}

TEST(Classify, MismatchedProfilesRejected) {
  const PointSample E = gen("graph", "parabola", 1e-3).sample;
  const BetaEvaluator ev(E, 1);
  const PointClassification a = classify_point(ev, E.point(100));
  const PointClassification b = classify_point(ev, E.point(900));
  EXPECT_THROW(classify_tangent(a.flatness, b.dini), InputError);
}

TEST(ApproxTangent, NonincreasingInS) {
  const PointSample E = gen("corner", "", 1e-3).sample;
  const BetaEvaluator ev(E, 1);
  const AffinePlane V = AffinePlane::axis_aligned(Point::Zero(2), 1);
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {0.1, 0.3, 0.5, 0.69, 0.72, 0.9}) {
    const double v = approx_tangent_ratio(ev, Point::Zero(2), V, s, 0.3);
    EXPECT_LE(v, prev + 1e-15) << s;
    prev = v;
  }
  // The branches sit at 45 degrees: outside every cone narrower than that.
  EXPECT_GT(approx_tangent_ratio(ev, Point::Zero(2), V, 0.69, 0.3), 1.5);
  EXPECT_EQ(approx_tangent_ratio(ev, Point::Zero(2), V, 0.72, 0.3), 0.0);
}

TEST(ConePartition, FlatPointsFindEmptyCones) {
  const PointSample E = gen("graph", "linear", 1e-2, {{"c", 0.0}}).sample;
  std::vector<Point> pts;
  std::vector<AffinePlane> planes;
  for (Index i = 20; i < 180; i += 10) {
    pts.push_back(E.point(i));
    planes.push_back(AffinePlane::axis_aligned(E.point(i), 1));
  }
  const ConePartition cp = partition_cone_points(E, pts, planes);
  EXPECT_TRUE(cp.flagged.empty());
  EXPECT_EQ(cp.net.size(), 32u);
  for (const auto& a : cp.assignment) {
    ASSERT_TRUE(a.has_value());
    EXPECT_EQ(a->angle, 0);
    EXPECT_EQ(a->radius, 0);
  }
}

TEST(ConePartition, SubspaceNetIsOrthonormal) {
  for (auto [n, d] : {std::pair{2, 1}, {3, 1}, {3, 2}, {4, 2}}) {
    for (const Matrix& F : subspace_net(n, d, 16)) {
      EXPECT_NEAR((F.transpose() * F - Matrix::Identity(d, d)).norm(), 0.0, 1e-12);
    }
  }
}

TEST(Lipschitz, RestrictionExactAndBoundedSlope) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-1, 1);
  const int m = 30;
  Matrix K(2, m), V(2, m);
  for (int a = 0; a < m; ++a) {
    K.col(a) << U(rng), U(rng);
    V.col(a) << 0.5 * std::sin(K(0, a)), 0.4 * K.col(a).norm();
  }
  const LipschitzExtension F(K, V, 1.0);
  for (int a = 0; a < m; ++a) {
    const Vector v = F(K.col(a));
    EXPECT_EQ(v[0], V(0, a));
    EXPECT_EQ(v[1], V(1, a));
  }
  const double bound = std::sqrt(2.0) * 1.0;
  for (int t = 0; t < 500; ++t) {
    Vector x(2), y(2);
    x << 2 * U(rng), 2 * U(rng);
    y << 2 * U(rng), 2 * U(rng);
    EXPECT_LE((F(x) - F(y)).norm(), bound * (x - y).norm() * (1 + 1e-12));
  }
}

TEST(Lipschitz, ViolationNamesSites) {
  Matrix K(1, 2), V(1, 2);
  K << 0, 1;
  V << 0, 3;
  try {
    LipschitzExtension(K, V, 1.0);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("0 and 1"), std::string::npos);
  }
}

TEST(Tsp, SegmentSumIsDiameter) {
  const PointSample E = gen("graph", "linear", 1e-3, {{"c", 0.0}}).sample;
  const BetaEvaluator ev(E, 1);
  ChristOptions o;
  o.lambda = 4.0;
  const CubeTree t = build_christ_cubes(E, 0.5, 0, 10, o);
  const TspSum s = jones_tsp_sum(ev, t);
  EXPECT_EQ(s.sum, s.diam);
  EXPECT_DOUBLE_EQ(s.diam, 2.0);
}

TEST(Tsp, NeedsCurves) {
  const PointSample E = gen("graph", "parabola", 0.05, {{"n", 3}, {"d", 2}}).sample;
  const BetaEvaluator ev(E, 2);
  EXPECT_THROW(jones_tsp_sum(ev, build_christ_cubes(E, 0.5, 0, 2)), InputError);
}
