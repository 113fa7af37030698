#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dehnfill/chains.hpp"

using namespace dehnfill;

namespace {

const double kPi = std::numbers::pi;

ProductSpace space(const char* s) { return ProductSpace::parse(s); }

SimplicialChain random_chain(int k, int nverts, int terms, std::mt19937_64& rng) {
  SimplicialChain c(k);
  for (int i = 0; i < nverts; ++i) c.add_vertex(SpacePoint{static_cast<double>(i), 0.0});
  std::uniform_int_distribution<int> v(0, nverts - 1), co(-3, 3);
  std::vector<int> ids(k + 1);
  for (int t = 0; t < terms; ++t) {
    for (auto& x : ids) x = v(rng);
    c.add_term(ids, co(rng));
  }
  c.normalize();
  return c;
}

// Polygon through n equally spaced points of the hyperbolic circle of radius R
// about (0, 1), pushed over from the disc model.
SimplicialChain hyperbolic_circle(double R, int n) {
  SimplicialChain c(1);
  for (int i = 0; i < n; ++i) {
    const std::complex<double> w = std::polar(std::tanh(R / 2), 2 * kPi * i / n);
    const std::complex<double> z = std::complex<double>(0, 1) * (1.0 + w) / (1.0 - w);
    c.add_vertex(SpacePoint{z.real(), z.imag()});
  }
  for (int i = 0; i < n; ++i) c.add_term({i, (i + 1) % n}, 1);
  c.normalize();
  return c;
}

// Area of S_R(x0) in H^2 x E^1 by quadrature over the (rho, s) quarter circle.
double lemma2_sphere_area(double R) {
  const int n = 200000;
  double a = 0.0;
  for (int i = 0; i < n; ++i) {
    const double th = -kPi / 2 + kPi * (i + 0.5) / n;
    a += 2 * kPi * std::sinh(R * std::cos(th)) * R * (kPi / n);
  }
  return a;
}

}  // namespace

TEST(Boundary, Triangle) {
  SimplicialChain t(2);
  for (int i = 0; i < 3; ++i) t.add_vertex(SpacePoint{static_cast<double>(i), static_cast<double>(i * i)});
  t.add_term({0, 1, 2}, 1);
  const auto b = boundary(t);
  ASSERT_EQ(b.size(), 3u);
  std::map<std::pair<int, int>, long long> got;
  for (std::size_t i = 0; i < b.size(); ++i) got[{b.simplex(i)[0], b.simplex(i)[1]}] = b.coeff(i);
  EXPECT_EQ((got[{1, 2}]), 1);
  EXPECT_EQ((got[{0, 2}]), -1);
  EXPECT_EQ((got[{0, 1}]), 1);
}

TEST(Boundary, SquaresToZero) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const auto c = random_chain(3, 9, 30, rng);
    if (c.empty()) continue;
    EXPECT_TRUE(boundary(boundary(c)).empty());
  }
}

TEST(Boundary, ChainPlusNegation) {
  std::mt19937_64 rng(2);
  const auto c = random_chain(2, 7, 12, rng);
  EXPECT_TRUE((c + (-c)).empty());
  EXPECT_TRUE(boundary(c + (-c)).empty());
}

TEST(Boundary, ZeroChainIsRejected) {
  SimplicialChain p(0);
  p.add_vertex(SpacePoint{0.0});
  p.add_term({0}, 1);
  EXPECT_THROW(boundary(p), DomainError);
}

TEST(Normalize, PermutationSignAndDegenerate) {
  SimplicialChain c(2);
  for (int i = 0; i < 3; ++i) c.add_vertex(SpacePoint{static_cast<double>(i), 0.0});
  c.add_term({1, 0, 2}, 1);
  c.add_term({0, 1, 2}, 1);
  c.add_term({0, 0, 2}, 5);
  c.normalize();
  EXPECT_TRUE(c.empty());
}

TEST(KVolume, EquilateralTriangle) {
  const auto e2 = space("E2");
  SimplicialChain t(2);
  t.add_vertex(SpacePoint{0, 0});
  t.add_vertex(SpacePoint{1, 0});
  t.add_vertex(SpacePoint{0.5, std::sqrt(3.0) / 2});
  t.add_term({0, 1, 2}, 1);
  EXPECT_NEAR(k_volume(e2, t), std::sqrt(3.0) / 4, 1e-12);
  EXPECT_NEAR(k_volume(e2, t.scaled(-3)), 3 * std::sqrt(3.0) / 4, 1e-12);
}

TEST(KVolume, DegenerateSimplexIsZero) {
  const auto h2 = space("H2");
  const std::vector<SpacePoint> pts{{0, 1}, {0, 1}, {1, 2}};
  const std::vector<PointView> v(pts.begin(), pts.end());
  EXPECT_NEAR(simplex_volume(h2, v), 0.0, 1e-12);
  const std::vector<SpacePoint> line{{0, 1}, {0, 2}, {0, 4}};
  const std::vector<PointView> l(line.begin(), line.end());
  EXPECT_NEAR(simplex_volume(h2, l), 0.0, 1e-7);
}

TEST(KVolume, HyperbolicCirclePerimeter) {
  const auto h2 = space("H2");
  for (double R : {1.0, 3.0, 5.0}) {
    const double l = k_volume(h2, hyperbolic_circle(R, 4096));
    EXPECT_NEAR(l / (2 * kPi * std::sinh(R)), 1.0, 1e-3) << R;
  }
}

TEST(KVolume, AdditiveOverTerms) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  const auto sp = space("H2xE1");
  SimplicialChain c(2);
  for (int i = 0; i < 12; ++i) c.add_vertex(SpacePoint{u(rng), std::exp(u(rng)), u(rng)});
  double sum = 0.0;
  for (int t = 0; t < 4; ++t) {
    SimplicialChain one(2);
    one.set_vertices(c.vertices());
    one.add_term({3 * t, 3 * t + 1, 3 * t + 2}, t + 1);
    c.add_term({3 * t, 3 * t + 1, 3 * t + 2}, t + 1);
    sum += k_volume(sp, one);
  }
  c.normalize();
  EXPECT_NEAR(k_volume(sp, c), sum, 1e-12 * sum);
}

TEST(Refine, TriangleSplitsInFour) {
  const auto e2 = space("E2");
  SimplicialChain t(2);
  t.add_vertex(SpacePoint{0, 0});
  t.add_vertex(SpacePoint{2, 0});
  t.add_vertex(SpacePoint{0.3, 1.7});
  t.add_term({0, 1, 2}, 1);
  const auto r = refine(e2, t, 1);
  EXPECT_EQ(r.size(), 4u);
  EXPECT_NEAR(k_volume(e2, r), k_volume(e2, t), 1e-13);
  EXPECT_NEAR(k_volume(e2, refine(e2, t, 4)), k_volume(e2, t), 1e-12);
}

TEST(Refine, TetrahedraSplitInEightWithExactVolume) {
  const auto e3 = space("E3");
  SimplicialChain t(3);
  t.add_vertex(SpacePoint{0, 0, 0});
  t.add_vertex(SpacePoint{1, 0, 0});
  t.add_vertex(SpacePoint{0.2, 1.1, 0});
  t.add_vertex(SpacePoint{0.1, 0.3, 0.9});
  t.add_term({0, 1, 2, 3}, 2);
  const auto r = refine(e3, t, 2);
  EXPECT_EQ(r.size(), 64u);
  EXPECT_NEAR(k_volume(e3, r), k_volume(e3, t), 1e-13);
}

TEST(Refine, CommutesWithBoundary) {
  const auto sp = space("H2xE1");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  SimplicialChain c(3);
  for (int i = 0; i < 6; ++i) c.add_vertex(SpacePoint{u(rng), std::exp(u(rng)), u(rng)});
  c.add_term({0, 1, 2, 3}, 1);
  c.add_term({1, 2, 3, 4}, -2);
  c.add_term({0, 2, 4, 5}, 1);
  c.normalize();
  EXPECT_TRUE(equivalent(boundary(refine(sp, c, 2)), refine(sp, boundary(c), 2)));
}

TEST(Refine, VolumesConvergeMonotonically) {
  const auto h2 = space("H2");
  const auto disc = lemma2_disc(h2, 2.0, 1.0);
  std::vector<double> v{k_volume(h2, disc)};
  SimplicialChain r = disc;
  for (int l = 1; l <= 6; ++l) {
    r = refine(h2, r, 1);
    v.push_back(k_volume(h2, r));
  }
  for (int l = 3; l + 2 < static_cast<int>(v.size()); ++l)
    EXPECT_LT(std::abs(v[l + 2] - v[l + 1]), std::abs(v[l + 1] - v[l])) << l;
  EXPECT_LT(std::abs(v.back() - v[v.size() - 2]) / v.back(), 0.01);
}

TEST(RoundSphere, Circle) {
  const auto sp = space("H2xH2");
  const auto flat = maximal_flat(sp);
  for (double r : {1.0, 4.0, 12.0}) {
    const auto c = round_sphere_in_flat(sp, flat, 1, r, 0.05);
    EXPECT_TRUE(is_cycle(c));
    EXPECT_NEAR(k_volume(sp, c), 2 * kPi * r, 2e-3 * r);
  }
}

TEST(RoundSphere, ZeroSphere) {
  const auto sp = space("H2xH2");
  const auto c = round_sphere_in_flat(sp, maximal_flat(sp), 0, 1.5, 0.1);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.coeff(0) + c.coeff(1), 0);
  EXPECT_EQ(std::abs(c.coeff(0)), 1);
  EXPECT_NEAR(distance(sp, c.vertex(0), c.vertex(1)), 3.0, 1e-12);
  EXPECT_TRUE(is_cycle(c));
}

TEST(RoundSphere, TwoSphere) {
  const auto sp = space("H2xH2xE1");
  const auto c = round_sphere_in_flat(sp, maximal_flat(sp), 2, 3.0, 0.1);
  EXPECT_TRUE(is_cycle(c));
  EXPECT_NEAR(k_volume(sp, c), 4 * kPi * 9, 0.01 * 4 * kPi * 9);
}

TEST(RoundSphere, ThreeSphere) {
  const auto e4 = space("E4");
  const auto c = round_sphere_in_flat(e4, maximal_flat(e4), 3, 1.0, 0.3);
  EXPECT_TRUE(is_cycle(c));
  EXPECT_NEAR(k_volume(e4, c), 2 * kPi * kPi, 0.05 * 2 * kPi * kPi);
}

TEST(RoundSphere, DimensionMismatch) {
  const auto sp = space("H2xH2");
  EXPECT_THROW(round_sphere_in_flat(sp, maximal_flat(sp), 2, 1.0, 0.1), DomainError);
}

TEST(Lemma2Sphere, CircleLength) {
  const auto h2 = space("H2");
  for (double R : {1.0, 3.0, 5.0}) {
    const auto c = lemma2_sphere(h2, R, 1, 0.05);
    EXPECT_TRUE(is_cycle(c));
    EXPECT_NEAR(k_volume(h2, c) / (2 * kPi * std::sinh(R)), 1.0, 5e-3) << R;
  }
}

TEST(Lemma2Sphere, SmallRadiusLimit) {
  const auto h2 = space("H2");
  double prev = 1e300;
  for (double R : {1.0, 0.1, 0.01, 0.001}) {
    const double v = k_volume(h2, lemma2_sphere(h2, R, 1, 0.01));
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(Lemma2Sphere, TwoSphereGrowsLikeExp) {
  const auto sp = space("H2xE1");
  std::vector<double> v;
  for (double R : {2.0, 3.0, 4.0}) {
    const auto c = lemma2_sphere(sp, R, 2, 0.25);
    EXPECT_TRUE(is_cycle(c));
    v.push_back(k_volume(sp, c));
    EXPECT_NEAR(v.back() / lemma2_sphere_area(R), 1.0, 0.02) << R;
  }
  // the area grows like sqrt(R) e^R
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double ratio = v[i + 1] / v[i] / std::sqrt((i + 3.0) / (i + 2.0));
    EXPECT_GT(ratio, std::exp(1.0) / 1.3);
    EXPECT_LT(ratio, std::exp(1.0) * 1.3);
  }
}

TEST(Lemma2Sphere, NeedsFlatDirections) {
  EXPECT_THROW(lemma2_sphere(space("H2"), 2.0, 2, 0.5), DomainError);
  EXPECT_THROW(lemma2_sphere(space("E2"), 2.0, 1, 0.5), DomainError);
}

TEST(Lemma2Disc, BoundsTheSphere) {
  const auto h2 = space("H2");
  const auto d = lemma2_disc(h2, 3.0, 0.2);
  EXPECT_TRUE(equivalent(boundary(d), lemma2_sphere(h2, 3.0, 1, 0.2)));
  EXPECT_NEAR(k_volume(h2, d) / (2 * kPi * (std::cosh(3.0) - 1)), 1.0, 0.02);
}

TEST(FlatDisc, BoundsTheCircle) {
  const auto sp = space("H2xH2");
  const auto flat = maximal_flat(sp);
  const auto d = flat_disc(sp, flat, 5.0, 0.1);
  EXPECT_TRUE(equivalent(boundary(d), round_sphere_in_flat(sp, flat, 1, 5.0, 0.1)));
  EXPECT_NEAR(k_volume(sp, d), kPi * 25, 0.002 * kPi * 25);
}

TEST(ConeFromApex, BoundaryIsTheCycle) {
  const auto sp = space("H2xE1");
  const auto c = lemma2_sphere(sp, 2.0, 2, 0.5);
  const auto cone = cone_from_apex(c, sp.basepoint());
  EXPECT_TRUE(equivalent(boundary(cone), c));
}

TEST(TubeBand, ClosedForms) {
  const auto h2 = space("H2");
  for (double l : {10.0, 40.0}) {
    const auto band = tube_band(h2, l, 1.0, 0.05);
    EXPECT_NEAR(k_volume(h2, band) / (2 * l * std::sinh(1.0)), 1.0, 0.01);
    EXPECT_NEAR(k_volume(h2, boundary(band)) / (2 * l * std::cosh(1.0) + 4.0), 1.0, 0.01);
  }
}

TEST(ClipChain, WholeLineAndDisjoint) {
  const auto e2 = space("E2");
  const auto flat = maximal_flat(e2);
  const auto c = round_sphere_in_flat(e2, flat, 1, 5.0, 0.1);
  const auto f = flat_coordinate_functional(e2, flat, 0);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(equivalent(clip_chain(e2, c, f, -inf, inf), c));
  EXPECT_TRUE(clip_chain(e2, c, f, 6.0, 7.0).empty());
}

TEST(ClipChain, CircleSlab) {
  const auto e2 = space("E2");
  const auto flat = maximal_flat(e2);
  const auto c = round_sphere_in_flat(e2, flat, 1, 5.0, 0.02);
  const auto s = clip_chain(e2, c, flat_coordinate_functional(e2, flat, 0), -1.0, 1.0);
  EXPECT_NEAR(k_volume(e2, s), 20 * std::asin(0.2), 0.05);
}

TEST(IsCycle, Examples) {
  std::mt19937_64 rng(9);
  const auto c = random_chain(2, 8, 10, rng);
  EXPECT_TRUE(is_cycle(boundary(c)));
  SimplicialChain t(2);
  for (int i = 0; i < 3; ++i) t.add_vertex(SpacePoint{static_cast<double>(i), 1.0});
  t.add_term({0, 1, 2}, 1);
  EXPECT_FALSE(is_cycle(t));
}

TEST(Serialization, RoundTrip) {
  const auto sp = space("H2xE1");
  const auto c = lemma2_sphere(sp, 1.5, 2, 0.5);
  std::stringstream ss;
  write_chain(ss, sp, c);
  const auto back = read_chain(ss);
  EXPECT_EQ(back.space.spec(), sp.spec());
  EXPECT_TRUE(equivalent(back.chain, c));
  std::istringstream bad("# dehnfill chain\nspace H2\nk 1\nterms 1\n1 [0 1]\n");
  EXPECT_ANY_THROW(read_chain(bad));
}
