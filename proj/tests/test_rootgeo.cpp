#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dehnfill/rootgeo.hpp"

using namespace dehnfill;
using namespace dehnfill::rootgeo;

namespace {

// Brute-force oracle: scan unit directions of the plane for the one where all
// simple roots agree, restricted to the open chamber.
Vector scan_barycenter(const RootSystem& rs, int steps = 2000000) {
  double best = 1e300;
  Vector arg(2);
  for (int i = 0; i < steps; ++i) {
    const double th = 2.0 * std::numbers::pi * i / steps;
    Vector h(2);
    h << std::cos(th), std::sin(th);
    const double a = rs.positive_roots()[rs.simple_roots()[0]].dot(h);
    const double b = rs.positive_roots()[rs.simple_roots()[1]].dot(h);
    if (a <= 0.0 || b <= 0.0) continue;
    if (std::abs(a - b) < best) {
      best = std::abs(a - b);
      arg = h;
    }
  }
  return arg;
}

std::vector<RootSystem> all_systems() {
  return {a1(), a1_power(2), a1_power(3), a2(), b2(), g2(), real_hyperbolic_product({2, 2}),
          real_hyperbolic_product({3, 2, 4})};
}

}  // namespace

TEST(ChamberBarycenter, A1IsUnitVectorWithRootValueSqrt2) {
  const auto c = chamber_barycenter(a1());
  EXPECT_NEAR(c.H0.norm(), 1.0, 1e-15);
  EXPECT_NEAR(c.rho_star, std::numbers::sqrt2, 1e-12);
}

TEST(ChamberBarycenter, A1xA1IsDiagonal) {
  const auto c = chamber_barycenter(from_label("A1xA1"));
  EXPECT_NEAR(c.H0(0), 1.0 / std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(c.H0(1), 1.0 / std::numbers::sqrt2, 1e-12);
}

TEST(ChamberBarycenter, A2MatchesScan) {
  const auto rs = a2();
  const auto c = chamber_barycenter(rs);
  const Vector h = scan_barycenter(rs);
  EXPECT_NEAR((c.H0 - h).norm(), 0.0, 1e-5);
  for (int s : rs.simple_roots()) EXPECT_NEAR(rs.positive_roots()[s].dot(c.H0), 1.0 / std::numbers::sqrt2, 1e-12);
  double highest = 0.0;
  for (const auto& a : rs.positive_roots()) highest = std::max(highest, a.dot(c.H0));
  EXPECT_NEAR(highest, std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(c.rho_star, 1.0 / std::numbers::sqrt2, 1e-12);
}

TEST(ChamberBarycenter, B2AndG2MatchScan) {
  for (const auto& rs : {b2(), g2()}) {
    const auto c = chamber_barycenter(rs);
    EXPECT_NEAR((c.H0 - scan_barycenter(rs)).norm(), 0.0, 1e-5) << rs.label();
  }
}

TEST(RootSystem, LongRootsHaveSquaredLengthTwo) {
  for (const auto& rs : {a1(), a1_power(2), a2(), b2(), g2()}) {
    double longest = 0.0;
    for (const auto& a : rs.positive_roots()) longest = std::max(longest, a.squaredNorm());
    EXPECT_NEAR(longest, 2.0, 1e-12) << rs.label();
  }
}

TEST(RootSystem, RejectsBadInput) {
  EXPECT_THROW(RootSystem("x", {vec({0.0, 0.0}), vec({1.0, 0.0})}, {1, 1}, {0, 1}, 1.0), DomainError);
  EXPECT_THROW(RootSystem("x", {vec({1.0, 0.0}), vec({2.0, 0.0})}, {1, 1}, {0, 1}, 4.0), DomainError);
  EXPECT_THROW(RootSystem("x", {vec({1.0, 0.0})}, {1}, {0}, 2.0), DomainError);
  EXPECT_THROW(from_label("D4"), DomainError);
  EXPECT_THROW(from_label("A1x"), DomainError);
  EXPECT_EQ(from_label("A1^3").rank(), 3);
  EXPECT_EQ(from_label("A1xA1xA1").rank(), 3);
}

TEST(CurvatureEigenvalues, A1HasNoFlatEntry) {
  const auto rs = a1();
  const auto e = curvature_eigenvalues(rs, chamber_barycenter(rs).H0);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_NEAR(e[0].lambda, 2.0, 1e-12);
  EXPECT_EQ(e[0].multiplicity, 1);
}

TEST(CurvatureEigenvalues, HyperbolicPlaneProductGivesHalves) {
  const auto rs = real_hyperbolic_product({2, 2});
  const auto e = curvature_eigenvalues(rs, chamber_barycenter(rs).H0);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_NEAR(e[0].lambda, 0.5, 1e-12);
  EXPECT_NEAR(e[1].lambda, 0.5, 1e-12);
  EXPECT_EQ(e[2].lambda, 0.0);
  EXPECT_EQ(e[2].multiplicity, 1);
}

TEST(CurvatureEigenvalues, AbstractA1xA1UsesLengthTwoRoots) {
  const auto rs = from_label("A1xA1");
  const auto e = curvature_eigenvalues(rs, chamber_barycenter(rs).H0);
  EXPECT_NEAR(e[0].lambda, 1.0, 1e-12);
  EXPECT_NEAR(e[1].lambda, 1.0, 1e-12);
  // rescaling to unit roots recovers the curvature -1 factors
  const auto unit = rs.rescaled(1.0 / std::numbers::sqrt2);
  EXPECT_NEAR(curvature_eigenvalues(unit, chamber_barycenter(unit).H0)[0].lambda, 0.5, 1e-12);
}

TEST(CurvatureEigenvalues, A2) {
  const auto rs = a2();
  const auto e = curvature_eigenvalues(rs, chamber_barycenter(rs).H0);
  ASSERT_EQ(e.size(), 4u);
  std::vector<double> l;
  for (const auto& x : e) l.push_back(x.lambda);
  std::sort(l.begin(), l.end());
  EXPECT_NEAR(l[0], 0.0, 1e-12);
  EXPECT_NEAR(l[1], 0.5, 1e-12);
  EXPECT_NEAR(l[2], 0.5, 1e-12);
  EXPECT_NEAR(l[3], 2.0, 1e-12);
}

TEST(CurvatureEigenvalues, OutsideChamberIsRejected) {
  const auto rs = a2();
  EXPECT_THROW(curvature_eigenvalues(rs, vec({0.0, -1.0})), DomainError);
  EXPECT_THROW(curvature_eigenvalues(rs, vec({0.0, 2.0})), DomainError);
  EXPECT_NO_THROW(curvature_eigenvalues(rs, vec({0.0, 1.0})));
}

TEST(JacobiCoefficients, IdentityAtZero) {
  const auto rs = a2();
  const Vector h = chamber_barycenter(rs).H0;
  const std::vector<double> y0{0.3, -1.2, 2.0, 0.7};
  EXPECT_EQ(jacobi_coefficients(rs, h, y0, 0.0), y0);
}

TEST(JacobiCoefficients, HyperbolicProductAtSqrt2) {
  const auto rs = real_hyperbolic_product({2, 2});
  const auto y = jacobi_coefficients(rs, chamber_barycenter(rs).H0, {1.0, 0.0, 0.0}, std::numbers::sqrt2);
  EXPECT_NEAR(y[0], std::exp(-1.0), 1e-14);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 0.0);
}

TEST(JacobiCoefficients, FlatCoordinateIsConstant) {
  const auto rs = a2();
  const Vector h = chamber_barycenter(rs).H0;
  for (double t : {0.5, 3.0, 40.0}) EXPECT_EQ(jacobi_coefficients(rs, h, {0, 0, 0, 1.7}, t)[3], 1.7);
}

TEST(JacobiCoefficients, LengthMismatch) {
  const auto rs = a2();
  EXPECT_THROW(jacobi_coefficients(rs, chamber_barycenter(rs).H0, {1.0, 2.0}, 1.0), DomainError);
}

TEST(JacobiCoefficients, MultiplicitiesExpandTheIndex) {
  const auto rs = real_hyperbolic_product({3, 2});
  const auto y = jacobi_coefficients(rs, chamber_barycenter(rs).H0, {1, 1, 1, 1}, 2.0);
  ASSERT_EQ(y.size(), 4u);
  EXPECT_NEAR(y[0], std::exp(-2.0 / std::numbers::sqrt2), 1e-14);
  EXPECT_NEAR(y[1], y[0], 1e-15);
  EXPECT_EQ(y[3], 1.0);
}

TEST(JacobiProperties, StableAndSemigroup) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0), tt(0.0, 6.0);
  for (const auto& rs : all_systems()) {
    const Vector h = chamber_barycenter(rs).H0;
    const auto n = decay_rates(curvature_eigenvalues(rs, h)).size();
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> y0(n);
      for (auto& v : y0) v = u(rng);
      const double s = tt(rng), t = tt(rng);
      const auto ys = jacobi_coefficients(rs, h, y0, s);
      const auto yst = jacobi_coefficients(rs, h, y0, s + t);
      const auto chained = jacobi_coefficients(rs, h, ys, t);
      for (std::size_t l = 0; l < n; ++l) {
        EXPECT_LE(std::abs(ys[l]), std::abs(y0[l]));
        EXPECT_NEAR(yst[l], chained[l], 1e-12);
      }
    }
  }
}

TEST(JacobiProperties, RhoStarIsSmallestPositiveRate) {
  for (const auto& rs : all_systems()) {
    const auto c = chamber_barycenter(rs);
    double m = 1e300;
    for (const auto& e : curvature_eigenvalues(rs, c.H0))
      if (e.lambda > 0.0) m = std::min(m, std::sqrt(e.lambda));
    EXPECT_NEAR(c.rho_star, m, 1e-12) << rs.label();
    bool attained = false;
    for (const auto& a : rs.positive_roots()) {
      EXPECT_GE(a.dot(c.H0), c.rho_star - 1e-12);
      attained = attained || std::abs(a.dot(c.H0) - c.rho_star) < 1e-12;
    }
    EXPECT_TRUE(attained);
  }
}
