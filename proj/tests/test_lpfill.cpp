#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dehnfill/expfit.hpp"
#include "dehnfill/lpfill.hpp"

using namespace dehnfill;

namespace {

GridComplex cube_grid(int n) {
  const auto e3 = ProductSpace::parse("E3");
  Region r;
  for (int a = 0; a < 3; ++a) r.axes.push_back({a, 0.0, static_cast<double>(n), n, false});
  return discretize_region(e3, r, 1.0);
}

GridComplex h2_grid(int nx, int ny) {
  const auto h2 = ProductSpace::parse("H2");
  Region r;
  r.axes = {{0, -1.0, 1.0, nx, false}, {1, 0.5, 3.0, ny, false}};
  return discretize_region(h2, r, 0.0);
}

std::vector<long long> random_chain(long n, std::mt19937_64& rng, int spread = 2) {
  std::uniform_int_distribution<int> u(-spread, spread);
  std::vector<long long> y(n);
  for (auto& v : y) v = u(rng);
  return y;
}

double weighted_norm(const CellComplex& cx, int dim, const std::vector<double>& x) {
  double v = 0.0;
  for (long c = 0; c < cx.count(dim); ++c) v += cx.weight(dim, c) * std::abs(x[c]);
  return v;
}

}  // namespace

TEST(Discretize, UnitSquare) {
  const auto g = square_grid(1);
  EXPECT_EQ(g.count(0), 4);
  EXPECT_EQ(g.count(1), 4);
  EXPECT_EQ(g.count(2), 1);
  for (int d = 0; d <= 2; ++d)
    for (long c = 0; c < g.count(d); ++c) EXPECT_EQ(g.weight(d, c), 1.0);
  EXPECT_NO_THROW(g.validate());
}

TEST(Discretize, HyperbolicBoxArea) {
  const auto h2 = ProductSpace::parse("H2");
  Region r;
  r.axes = {{0, 0.0, 1.0, 0, false}, {1, 1.0, std::exp(1.0), 0, false}};
  const auto g = discretize_region(h2, r, 0.01);
  double area = 0.0;
  for (double w : g.weights(2)) area += w;
  EXPECT_NEAR(area, 1 - std::exp(-1.0), 0.01 * (1 - std::exp(-1.0)));
}

TEST(Discretize, LogScaleHeightAxis) {
  const auto h2 = ProductSpace::parse("H2");
  Region r;
  r.axes = {{0, 0.0, 1.0, 200, false}, {1, 0.0, 1.0, 200, true}};
  const auto g = discretize_region(h2, r, 0.0);
  double area = 0.0;
  for (double w : g.weights(2)) area += w;
  EXPECT_NEAR(area, 1 - std::exp(-1.0), 0.01);
}

TEST(Discretize, NeuteredCellsAreOmitted) {
  const auto n = ProductSpace::parse("H2 neutered level=-1");
  Region r;
  r.axes = {{0, 0.0, 1.0, 4, false}, {1, 0.5, 4.0, 7, false}};
  const auto g = discretize_region(n, r, 0.0);
  // oracle: a 2-cell survives when its barycentre height is at most e
  int want = 0;
  for (int j = 0; j < 7; ++j)
    if (0.5 + (j + 0.5) * 0.5 <= std::exp(1.0)) want += 4;
  EXPECT_EQ(g.count(2), want);
  for (long c = 0; c < g.count(2); ++c) EXPECT_LE(g.barycenter(2, c)[1], std::exp(1.0) + 1e-12);
  r.neutered = false;
  EXPECT_EQ(discretize_region(n, r, 0.0).count(2), 28);
  EXPECT_NO_THROW(g.validate());
}

TEST(Discretize, Errors) {
  const auto h2 = ProductSpace::parse("H2");
  Region r;
  EXPECT_THROW(discretize_region(h2, r, 1.0), DomainError);
  r.axes = {{0, 1.0, 1.0, 0, false}};
  EXPECT_THROW(discretize_region(h2, r, 1.0), DomainError);
  r.axes = {{1, -1.0, 1.0, 0, false}};
  EXPECT_THROW(discretize_region(h2, r, 1.0), DomainError);
  r.axes = {{0, 0.0, 1.0, 0, false}, {0, 0.0, 1.0, 0, false}};
  EXPECT_THROW(discretize_region(h2, r, 1.0), DomainError);
}

TEST(Complex, BoundarySquaredIsZero) {
  EXPECT_NO_THROW(cube_grid(3).validate());
  CellComplex bad(2);
  for (int i = 0; i < 3; ++i) bad.add_cell(0, 1.0);
  bad.add_cell(1, 1.0, {{1, 1}, {0, -1}});
  bad.add_cell(1, 1.0, {{2, 1}, {1, -1}});
  bad.add_cell(1, 1.0, {{2, 1}, {0, -1}});
  bad.add_cell(2, 1.0, {{0, 1}, {1, 1}, {2, -1}});
  EXPECT_NO_THROW(bad.validate());
  bad.add_cell(2, 1.0, {{0, 1}});
  EXPECT_THROW(bad.validate(), DomainError);
  EXPECT_THROW(bad.add_cell(1, 1.0, {{7, 1}}), DomainError);
}

TEST(MinFill, SingleSquare) {
  const auto g = square_grid(1);
  const auto z = boundary_of_cells(g, 2, {0});
  for (auto mode : {LpMode::Double, LpMode::Rational, LpMode::Auto}) {
    const auto r = min_fill(g, 1, z, mode);
    EXPECT_NEAR(r.value, 1.0, 1e-12);
    EXPECT_EQ(std::abs(r.chain[0]), 1.0);
    EXPECT_TRUE(r.integral);
    EXPECT_LE(r.residual, 1e-9);
  }
}

TEST(MinFill, SquareLoops) {
  const auto g = square_grid(10);
  for (int L = 2; L <= 8; ++L) {
    const auto z = rectangle_loop(g, 0, 1, {0, 0}, 1, 1, 1 + L, 1 + L);
    const auto d = min_fill(g, 1, z, LpMode::Double);
    EXPECT_NEAR(d.value, L * L, 1e-9) << L;
    EXPECT_TRUE(d.integral);
    if (L <= 4) {
      const auto q = min_fill(g, 1, z, LpMode::Rational);
      EXPECT_EQ(q.exact_value, std::to_string(L * L));
    }
  }
}

TEST(MinFill, AnnulusHoleIsInfeasible) {
  const auto g = annulus_grid(6, 2, 4);
  const auto z = rectangle_loop(g, 0, 1, {0, 0}, 1, 1, 5, 5);
  for (auto mode : {LpMode::Double, LpMode::Rational}) {
    try {
      min_fill(g, 1, z, mode);
      ADD_FAILURE() << "expected infeasibility";
    } catch (const InfeasibleError& e) {
      EXPECT_GE(e.certificate_cell(), 0);
      EXPECT_LT(e.certificate_cell(), g.count(1));
      EXPECT_NE(std::string(e.what()).find("certificate"), std::string::npos);
    }
  }
  // loops that avoid the hole are still fillable
  EXPECT_NEAR(min_fill(g, 1, rectangle_loop(g, 0, 1, {0, 0}, 0, 0, 2, 2)).value, 4.0, 1e-9);
}

TEST(MinFill, Errors) {
  const auto g = square_grid(2);
  std::vector<long long> z(g.count(1), 0);
  z[0] = 1;
  EXPECT_THROW(min_fill(g, 1, z), DomainError);
  EXPECT_THROW(min_fill(g, 2, std::vector<long long>(g.count(2), 0)), DomainError);
  EXPECT_THROW(min_fill(g, 1, std::vector<long long>(3, 0)), DomainError);
  const auto zero = min_fill(g, 1, std::vector<long long>(g.count(1), 0));
  EXPECT_EQ(zero.value, 0.0);
}

TEST(MinFill, UniqueFillingInThePlane) {
  // no 2-cycles in a planar grid: the filling of d(y) is y itself
  std::mt19937_64 rng(3);
  for (const auto& g : {square_grid(5), h2_grid(6, 5)}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto y = random_chain(g.count(2), rng);
      const auto z = g.apply_boundary(2, y);
      if (std::all_of(z.begin(), z.end(), [](long long v) { return v == 0; })) continue;
      const auto r = min_fill(g, 1, z);
      EXPECT_NEAR(r.value, g.chain_volume(2, y), 1e-9 * std::max(1.0, r.value));
      for (long c = 0; c < g.count(2); ++c) EXPECT_NEAR(r.chain[c], static_cast<double>(y[c]), 1e-7);
    }
  }
}

TEST(MinFill, OptimalAgainstFeasiblePerturbations) {
  const auto g = cube_grid(3);
  std::mt19937_64 rng(5);
  const auto y = random_chain(g.count(2), rng, 1);
  auto z = g.apply_boundary(2, y);
  const auto r = min_fill(g, 1, z);
  ASSERT_LE(r.residual, 1e-9);
  EXPECT_LE(r.value, g.chain_volume(2, y) + 1e-9);
  for (int rep = 0; rep < 100; ++rep) {
    const auto w = random_chain(g.count(3), rng, 1);
    const auto dw = g.apply_boundary(3, w);
    std::vector<double> x = r.chain;
    for (long c = 0; c < g.count(2); ++c) x[c] += static_cast<double>(dw[c]);
    EXPECT_LE(r.value, weighted_norm(g, 2, x) + 1e-9);
  }
}

TEST(MinFill, CandidateBound) {
  const auto g = cube_grid(2);
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto y = random_chain(g.count(2), rng, 1);
    const auto z = g.apply_boundary(2, y);
    EXPECT_LE(min_fill(g, 1, z).value, g.chain_volume(2, y) + 1e-9);
  }
}

TEST(MinFill, DoubleAndRationalAgree) {
  const auto g = cube_grid(2);
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 5; ++rep) {
    const auto z = g.apply_boundary(2, random_chain(g.count(2), rng, 1));
    const auto d = min_fill(g, 1, z, LpMode::Double);
    const auto q = min_fill(g, 1, z, LpMode::Rational);
    const auto a = min_fill(g, 1, z, LpMode::Auto);
    EXPECT_TRUE(q.exact);
    EXPECT_TRUE(a.exact);
    EXPECT_NEAR(d.value, q.value, 1e-9);
    EXPECT_EQ(a.exact_value, q.exact_value);
  }
}

TEST(MinFill, TwoCyclesInACube) {
  const auto g = cube_grid(3);
  std::vector<long> cells;
  for (long c = 0; c < g.count(3); ++c) cells.push_back(c);
  const auto z = boundary_of_cells(g, 3, cells);
  const auto r = min_fill(g, 2, z);
  EXPECT_NEAR(r.value, 27.0, 1e-9);
  EXPECT_NEAR(g.chain_volume(2, z), 54.0, 1e-12);
}

TEST(MinFill, WeightLinearity) {
  auto g = h2_grid(6, 6);
  const auto z = rectangle_loop(g, 0, 1, {0, 0}, 1, 1, 5, 4);
  const double v = min_fill(g, 1, z).value;
  g.scale_weights(2.0);
  EXPECT_NEAR(min_fill(g, 1, z).value, 2 * v, 1e-9 * v);
}

TEST(MinFill, TriangleInASimplicialComplex) {
  const auto h2 = ProductSpace::parse("H2");
  const std::vector<SpacePoint> v{{0.0, 1.0}, {1.0, 1.0}, {0.0, 2.0}, {1.0, 2.0}};
  const auto sc = simplicial_complex(h2, v, {{0, 1, 2}, {1, 2, 3}});
  EXPECT_NO_THROW(sc.cx.validate());
  SimplicialChain loop(1);
  loop.set_vertices(v);
  loop.add_term({0, 1}, 1);
  loop.add_term({1, 3}, 1);
  loop.add_term({3, 2}, 1);
  loop.add_term({2, 0}, 1);
  loop.normalize();
  const auto r = min_fill(sc.cx, 1, chain_vector(sc, loop));
  const std::vector<PointView> t0{v[0], v[1], v[2]}, t1{v[1], v[2], v[3]};
  EXPECT_NEAR(r.value, simplex_volume(h2, t0) + simplex_volume(h2, t1), 1e-12);
  SimplicialChain stray(1);
  stray.set_vertices(v);
  stray.add_term({0, 3}, 1);
  EXPECT_THROW(chain_vector(sc, stray), DomainError);
}

TEST(Profile, SquaresScaleQuadratically) {
  const auto g = square_grid(9);
  std::vector<std::vector<long long>> cycles;
  for (int L : {2, 4, 8}) cycles.push_back(rectangle_loop(g, 0, 1, {0, 0}, 0, 0, L, L));
  const auto prof = filling_profile(g, 1, cycles);
  std::vector<std::pair<double, double>> pts;
  int i = 0;
  for (int L : {2, 4, 8}) {
    EXPECT_NEAR(prof[i].cycle_volume, 4.0 * L, 1e-12);
    EXPECT_NEAR(prof[i].fill_value, L * L, 1e-9);
    pts.emplace_back(prof[i].cycle_volume, prof[i].fill_value);
    ++i;
  }
  EXPECT_NEAR(fit_exponent(pts).slope, 2.0, 1e-9);
}

TEST(Serialization, ComplexAndCycleRoundTrip) {
  const auto g = h2_grid(3, 3);
  std::stringstream ss;
  write_complex(ss, g);
  const auto back = read_complex(ss);
  ASSERT_EQ(back.top_dim(), g.top_dim());
  for (int d = 0; d <= 2; ++d) {
    ASSERT_EQ(back.count(d), g.count(d));
    for (long c = 0; c < g.count(d); ++c) {
      EXPECT_EQ(back.weight(d, c), g.weight(d, c));
      if (d > 0) {
        EXPECT_EQ(back.boundary_of(d, c), g.boundary_of(d, c));
      }
    }
  }
  const auto z = rectangle_loop(g, 0, 1, {0, 0}, 0, 0, 2, 2);
  std::stringstream cs;
  write_cycle(cs, 1, z);
  const auto cf = read_cycle(cs);
  EXPECT_EQ(cf.dim, 1);
  EXPECT_EQ(cycle_vector(back, cf), z);
  std::istringstream bad("1 0\n");
  EXPECT_THROW(read_cycle(bad), DomainError);
}
