#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "betascan/datasets.hpp"
#include "betascan/multiscale.hpp"

using namespace betascan;

namespace {

PointSample segment(int count) {
  Matrix M(2, count);
  for (int j = 0; j < count; ++j) M.col(j) << double(j) / (count - 1), 0.0;
  return PointSample(M, 1, 1.0 / (count - 1));
}

}  // namespace

TEST(ChristCubes, SinglePoint) {
  Matrix M(2, 1);
  M << 0.2, 0.3;
  const PointSample E(M, 1, 0.0);
  const CubeTree t = build_christ_cubes(E, 0.5, 0, 6);
  ASSERT_EQ(t.levels.size(), 7u);
  for (const auto& l : t.levels) ASSERT_EQ(l.size(), 1u);
  const ChristReport r = verify_christ_tree(E, t);
  EXPECT_TRUE(r.partition && r.nesting && r.separation && r.radius && r.center_ball);
}

TEST(ChristCubes, SegmentDyadic) {
  const PointSample E = segment(1024);
  ChristOptions o;
  o.lambda = 4.0;
  const CubeTree t = build_christ_cubes(E, 0.5, 0, 8, o);
  EXPECT_DOUBLE_EQ(t.a0, 0.0);
  EXPECT_DOUBLE_EQ(t.C1, 4.0);
  for (const auto& l : t.levels) {
    const double want = std::ldexp(1.0, l.front().scale_k);
    EXPECT_GE(double(l.size()), want / 4.0);
    EXPECT_LE(double(l.size()), want * 4.0);
  }
  const ChristReport r = verify_christ_tree(E, t);
  EXPECT_TRUE(r.partition);
  EXPECT_TRUE(r.nesting);
  EXPECT_TRUE(r.separation);
  EXPECT_TRUE(r.radius);
  EXPECT_LE(r.worst_radius_ratio, 2.0);
}

TEST(ChristCubes, CenterBallAtFifth) {
  const PointSample E = segment(1024);
  ChristOptions o;
  o.lambda = 2.0;
  const CubeTree t = build_christ_cubes(E, 0.2, 0, 4, o);
  EXPECT_DOUBLE_EQ(t.a0, 0.25);
  const ChristReport r = verify_christ_tree(E, t);
  EXPECT_TRUE(r.partition && r.nesting && r.separation && r.radius);
  EXPECT_TRUE(r.center_ball);
  EXPECT_GE(r.empirical_a0, 0.25);
}

TEST(ChristCubes, CantorCountsFollowSelfSimilarity) {
  GenSpec s;
  s.kind = "cantor4";
  s.params = {{"g", 6}};
  s.h = std::sqrt(0.5) * std::pow(4.0, -6);
  const PointSample E = gen_synthetic(s).sample;
  ChristOptions o;
  o.lambda = 1.0;
  const CubeTree t = build_christ_cubes(E, 0.25, 1, 6, o);
  for (const auto& l : t.levels) {
    const double want = std::pow(4.0, l.front().scale_k);
    EXPECT_GE(double(l.size()), want / 4.0) << l.front().scale_k;
    EXPECT_LE(double(l.size()), want * 4.0) << l.front().scale_k;
  }
  const ChristReport r = verify_christ_tree(E, t);
  EXPECT_TRUE(r.partition && r.nesting && r.separation && r.radius);
}

TEST(ChristCubes, DeterministicAndSerializable) {
  const PointSample E = segment(300);
  const auto a = build_christ_cubes(E, 0.5, 0, 5).to_json().dump();
  const auto b = build_christ_cubes(E, 0.5, 0, 5).to_json().dump();
  EXPECT_EQ(a, b);
}

TEST(ChristCubes, ResolutionCutLeavesNothing) {
  const PointSample E = segment(11);
  EXPECT_THROW(build_christ_cubes(E, 0.5, 3, 5), PreconditionError);
  EXPECT_THROW(build_christ_cubes(E, 0.7, 0, 5), InputError);
}

TEST(Whitney, PointObstacleLayers) {
  Matrix F(2, 1);
  F << 0.0, 0.0;
  const PointSample S(F, 0, 0.0);
  Vector corner(2);
  corner << -1.0, -1.0;
  WhitneyOptions o;
  o.min_side = 1.0 / 256;
  const WhitneyResult w = whitney_decompose(S, corner, 2.0, o);
  ASSERT_FALSE(w.cubes.empty());
  double area = 0.0;
  for (const auto& q : w.cubes) {
    EXPECT_LE(q.side, o.A * q.dist_to_F);
    EXPECT_LE(q.dist_to_F, o.A * q.side);
    EXPECT_DOUBLE_EQ(std::log2(q.side), std::round(std::log2(q.side)));
    area += q.side * q.side;
  }
  EXPECT_LE(area, 4.0 + 1e-12);
  EXPECT_GT(area, 4.0 - 0.01);
}

TEST(Whitney, SegmentObstacleCoversAwayFromCollar) {
  Matrix F(2, 201);
  for (int j = 0; j <= 200; ++j) F.col(j) << -0.5 + j / 200.0, 0.0;
  const PointSample S(F, 1, 1.0 / 200);
  Vector corner(2);
  corner << -1.0, -1.0;
  const WhitneyResult w = whitney_decompose(S, corner, 2.0);
  for (const auto& q : w.cubes) {
    EXPECT_LE(q.side, 4.0 * q.dist_to_F);
    EXPECT_LE(q.dist_to_F, 4.0 * q.side);
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Point y(2);
    y << U(rng), U(rng);
    if (S.dist_to(y) < 0.05) continue;
    int hits = 0;
    for (const auto& q : w.cubes) hits += q.contains(y) ? 1 : 0;
    EXPECT_EQ(hits, 1) << y.transpose();
  }
}

TEST(Whitney, EmptyObstacleRejected) {
  const PointSample S(Matrix(2, 0), 0, 0.0);
  EXPECT_THROW(whitney_decompose(S, Vector::Zero(2), 1.0), InputError);
}

TEST(Bubble, FlatSetHasEmptyBubble) {
  const PointSample E = segment(101);
  IndexList K(E.size());
  for (Index i = 0; i < E.size(); ++i) K[i] = i;
  Matrix V(2, 1);
  V << 1, 0;
  const Ball Q0(E.point(50), 0.5);
  const BubbleResult b = bubble_region(E, K, V, std::numbers::pi / 4, 2.0, Q0);
  EXPECT_TRUE(b.points.empty());
  const BubbleResult none = bubble_region(E, {}, V, std::numbers::pi / 4, 2.0, Q0);
  EXPECT_TRUE(none.empty_K_warning);
  EXPECT_EQ(none.points.size(), E.ball(Q0.center, 1.0).size());
}

TEST(Bubble, CornerFarBranchSurvives) {
  GenSpec s;
  s.kind = "corner";
  s.h = 1e-2;
  const PointSample E = gen_synthetic(s).sample;
  IndexList K;
  for (Index i = 0; i < E.size(); ++i)
    if (E.col(i)[0] <= 0.0) K.push_back(i);
  Matrix V(2, 1);
  V << -1, 1;  // the left branch y = -x
  // The right branch runs along V^perp from the vertex, so the vertex cone
  // holds every right-branch point within the cone radius and nothing else
  // reaches it; points of K sit in their own cones.
  const double radius = 0.25;
  const BubbleResult b = bubble_region(E, K, V, std::numbers::pi / 3, radius, Ball(Point::Zero(2), 1.0));
  IndexList want;
  for (Index i = 0; i < E.size(); ++i)
    if (E.col(i)[0] > 0.0 && E.col(i).norm() >= radius) want.push_back(i);
  EXPECT_EQ(b.points, want);
}

TEST(Fibers, DisjointAndCovering) {
  // Flat branch K on the negative x-axis, a second branch y = x starting
  // after a gap; the Whitney cubes of the projected K tile [-1, 3) away
  // from the obstacle.
  std::vector<Point> pts;
  for (int j = 0; j <= 100; ++j) pts.push_back((Point(2) << -1.0 + j / 100.0, 0.0).finished());
  for (int j = 0; j <= 90; ++j) {
    const double x = 0.1 + 0.9 * j / 90.0;
    pts.push_back((Point(2) << x, x).finished());
  }
  const PointSample E = PointSample::from_points(pts, 2, 1, 0.01);
  IndexList K;
  for (Index i = 0; i <= 100; ++i) K.push_back(i);
  Matrix V(2, 1);
  V << 1, 0;
  const BubbleResult b = bubble_region(E, K, V, std::numbers::pi / 3, 4.0, Ball(Point::Zero(2), 1.0));
  EXPECT_EQ(b.points.size(), 91u);
  Matrix F(1, 101);
  for (int j = 0; j <= 100; ++j) F(0, j) = -1.0 + j / 100.0;
  Vector corner(1);
  corner << -1.0;
  WhitneyOptions wo;
  wo.A = 4.0;
  const WhitneyResult w = whitney_decompose(PointSample(F, 0, 0.01), corner, 4.0, wo);
  std::vector<int> owner(E.size(), 0);
  std::size_t covered = 0;
  for (const auto& S : w.cubes) {
    for (Index i : cylinder_fibers(S, b.points, E, V, Point::Zero(2))) {
      ++owner[i];
      ++covered;
    }
  }
  for (Index i : b.points) EXPECT_EQ(owner[i], 1);
  EXPECT_EQ(covered, b.points.size());
  EXPECT_TRUE(cylinder_fibers(w.cubes.front(), {}, E, V, Point::Zero(2)).empty());
}
