#pragma once

// Minimal fillings on finite weighted cell complexes by linear programming.

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <gmpxx.h>
#include <Eigen/Sparse>

#include "dehnfill/chains.hpp"
#include "dehnfill/errors.hpp"
#include "dehnfill/modelspace.hpp"
#include "dehnfill/simplex.hpp"

namespace dehnfill {

/// Finite chain complex with integer boundary matrices and positive cell weights.
class CellComplex {
 public:
  using Column = std::vector<std::pair<long, int>>;  // (face index, coefficient)

  CellComplex() = default;
  explicit CellComplex(int top_dim) : bd_(top_dim + 1), w_(top_dim + 1) {
    if (top_dim < 0) throw DomainError("complex dimension must be nonnegative");
  }

  int top_dim() const { return static_cast<int>(w_.size()) - 1; }
  long count(int dim) const { return dim < 0 || dim > top_dim() ? 0 : static_cast<long>(w_[dim].size()); }
  std::size_t total_cells() const {
    std::size_t s = 0;
    for (const auto& w : w_) s += w.size();
    return s;
  }
  double weight(int dim, long cell) const { return w_.at(dim).at(cell); }
  const std::vector<double>& weights(int dim) const { return w_.at(dim); }
  const Column& boundary_of(int dim, long cell) const { return bd_.at(dim).at(cell); }

  long add_cell(int dim, double weight, Column boundary = {}) {
    if (dim < 0 || dim > top_dim()) throw DomainError("cell dimension out of range");
    if (dim == 0 && !boundary.empty()) throw DomainError("vertices have no boundary");
    for (const auto& [f, c] : boundary)
      if (f < 0 || f >= count(dim - 1)) throw DomainError("boundary references a missing face");
    bd_[dim].push_back(std::move(boundary));
    w_[dim].push_back(weight);
    return count(dim) - 1;
  }

  void scale_weights(double s) {
    for (auto& w : w_)
      for (double& x : w) x *= s;
  }

  /// Checks positivity of weights and d o d = 0 in exact integer arithmetic.
  void validate() const {
    for (int d = 0; d <= top_dim(); ++d)
      for (double w : w_[d])
        if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("cell weights must be positive and finite");
    for (int d = 2; d <= top_dim(); ++d)
      for (long c = 0; c < count(d); ++c) {
        std::map<long, long long> acc;
        for (const auto& [f, a] : bd_[d][c])
          for (const auto& [g, b] : bd_[d - 1][f]) acc[g] += static_cast<long long>(a) * b;
        for (const auto& [g, v] : acc)
          if (v != 0) throw DomainError("boundary of boundary is nonzero at cell " + std::to_string(c));
      }
  }

  /// Rows: (dim-1)-cells, columns: dim-cells.
  Eigen::SparseMatrix<double> boundary_matrix(int dim) const {
    std::vector<Eigen::Triplet<double>> t;
    for (long c = 0; c < count(dim); ++c)
      for (const auto& [f, a] : bd_[dim][c]) t.emplace_back(static_cast<int>(f), static_cast<int>(c), a);
    Eigen::SparseMatrix<double> m(count(dim - 1), count(dim));
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
  }

  std::vector<long long> apply_boundary(int dim, const std::vector<long long>& x) const {
    if (static_cast<long>(x.size()) != count(dim)) throw DomainError("chain vector has wrong length");
    std::vector<long long> out(count(dim - 1), 0);
    for (long c = 0; c < count(dim); ++c)
      if (x[c] != 0)
        for (const auto& [f, a] : bd_[dim][c]) out[f] += a * x[c];
    return out;
  }

  std::vector<double> apply_boundary(int dim, const std::vector<double>& x) const {
    if (static_cast<long>(x.size()) != count(dim)) throw DomainError("chain vector has wrong length");
    std::vector<double> out(count(dim - 1), 0.0);
    for (long c = 0; c < count(dim); ++c)
      if (x[c] != 0.0)
        for (const auto& [f, a] : bd_[dim][c]) out[f] += a * x[c];
    return out;
  }

  template <typename T>
  double chain_volume(int dim, const std::vector<T>& x) const {
    double v = 0.0;
    for (long c = 0; c < count(dim); ++c) v += std::abs(static_cast<double>(x[c])) * w_[dim][c];
    return v;
  }

 private:
  std::vector<std::vector<Column>> bd_;
  std::vector<std::vector<double>> w_;
};

// ---------------------------------------------------------------------------
// Cubical grids in chart coordinates.

struct GridAxis {
  int coord = 0;          // index into the point's chart coordinates
  double lo = 0.0, hi = 1.0;
  int cells = 0;          // 0: derived from the mesh
  bool log_scale = false; // lattice runs over log(coordinate); height axes only
};

struct Region {
  std::vector<GridAxis> axes;
  std::optional<SpacePoint> anchor;     // coordinates not on an axis (default: basepoint)
  bool neutered = true;                 // omit cells whose barycenter lies in a horoball of the space
  HoroballFamily extra;                 // further horoballs to remove
  std::function<bool(PointView)> keep;  // optional predicate on barycenters
};

class GridComplex;
inline GridComplex discretize_region(const ProductSpace& sp, const Region& region, double mesh);

class GridComplex : public CellComplex {
 public:
  GridComplex() = default;
  GridComplex(ProductSpace sp, std::vector<GridAxis> axes, SpacePoint anchor)
      : CellComplex(static_cast<int>(axes.size())), sp_(std::move(sp)), axes_(std::move(axes)), anchor_(std::move(anchor)) {}

  const ProductSpace& space() const { return sp_; }
  const std::vector<GridAxis>& axes() const { return axes_; }
  int axis_count() const { return static_cast<int>(axes_.size()); }
  int cells_along(int a) const { return axes_[a].cells; }
  double step(int a) const { return (axes_[a].hi - axes_[a].lo) / axes_[a].cells; }

  /// Chart point at fractional lattice coordinates.
  SpacePoint point_at(std::span<const double> lattice) const {
    SpacePoint p = anchor_;
    for (int a = 0; a < axis_count(); ++a) {
      const double v = axes_[a].lo + lattice[a] * step(a);
      p[axes_[a].coord] = axes_[a].log_scale ? std::exp(v) : v;
    }
    return p;
  }

  std::optional<long> find(int dim, std::span<const int> base, unsigned mask) const {
    if (dim < 0 || dim > top_dim()) return std::nullopt;
    for (int a = 0; a < axis_count(); ++a) {
      const int lim = (mask >> a) & 1u ? axes_[a].cells - 1 : axes_[a].cells;
      if (base[a] < 0 || base[a] > lim) return std::nullopt;
    }
    auto it = index_[dim].find(key(base, mask));
    if (it == index_[dim].end()) return std::nullopt;
    return it->second;
  }

  struct CellInfo {
    std::vector<int> base;
    unsigned mask;
  };
  const CellInfo& info(int dim, long cell) const { return info_.at(dim).at(cell); }

  SpacePoint barycenter(int dim, long cell) const {
    const auto& ci = info(dim, cell);
    std::vector<double> l(axis_count());
    for (int a = 0; a < axis_count(); ++a) l[a] = ci.base[a] + (((ci.mask >> a) & 1u) ? 0.5 : 0.0);
    return point_at(l);
  }

 private:
  friend GridComplex discretize_region(const ProductSpace&, const Region&, double);

  long long key(std::span<const int> base, unsigned mask) const {
    long long lin = 0;
    for (int a = axis_count() - 1; a >= 0; --a) lin = lin * (axes_[a].cells + 1) + base[a];
    return (lin << axis_count()) | mask;
  }

  ProductSpace sp_;
  std::vector<GridAxis> axes_;
  SpacePoint anchor_;
  std::vector<std::unordered_map<long long, long>> index_;
  std::vector<std::vector<CellInfo>> info_;
};

/// Metric length of a unit lattice step along axis `a` at chart point p.
inline double axis_length(const ProductSpace& sp, const GridAxis& ax, double h, PointView p) {
  for (const auto& f : sp.factors()) {
    if (ax.coord < f.offset || ax.coord >= f.offset + f.dim) continue;
    if (!f.hyperbolic()) {
      if (ax.log_scale) throw DomainError("log-scale axis on a Euclidean coordinate");
      return h;
    }
    const double y = p[f.height_index()];
    if (ax.coord == f.height_index()) return ax.log_scale ? h : h / y;
    if (ax.log_scale) throw DomainError("log-scale axis on a horizontal coordinate");
    return h / y;
  }
  throw DomainError("grid axis coordinate out of range");
}

/// Cubical complex on a box in chart coordinates. A cell is kept iff its
/// barycenter passes the region's constraints and all its faces are kept;
/// weights are products of metric edge lengths at the barycenter.
inline GridComplex discretize_region(const ProductSpace& sp, const Region& region, double mesh) {
  const int D = static_cast<int>(region.axes.size());
  if (D == 0) throw DomainError("empty region: no axes");
  if (D > 16) throw DomainError("too many grid axes");
  std::vector<GridAxis> axes = region.axes;
  for (auto& ax : axes) {
    if (ax.coord < 0 || ax.coord >= sp.dim()) throw DomainError("grid axis coordinate out of range");
    if (!(ax.hi > ax.lo)) throw DomainError("empty region: axis interval is empty");
    if (ax.cells <= 0) {
      if (!(mesh > 0.0)) throw DomainError("mesh must be positive");
      ax.cells = std::max(1, static_cast<int>(std::lround((ax.hi - ax.lo) / mesh)));
    }
    for (const auto& f : sp.factors())
      if (f.hyperbolic() && ax.coord == f.height_index() && !ax.log_scale && !(ax.lo > 0.0))
        throw DomainError("height axis must stay above 0");
  }
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < a; ++b)
      if (axes[a].coord == axes[b].coord) throw DomainError("repeated grid axis");
  SpacePoint anchor = region.anchor.value_or(sp.basepoint());
  sp.require(anchor);
  GridComplex gc(sp, axes, anchor);
  gc.index_.assign(D + 1, {});
  gc.info_.assign(D + 1, {});

  auto admissible = [&](const SpacePoint& p) {
    if (!sp.contains(p)) return false;
    if (region.neutered)
      for (const auto& h : sp.horoballs().entries)
        if (busemann(sp, h.direction, p) < h.level - 1e-9) return false;
    for (const auto& h : region.extra.entries)
      if (busemann(sp, h.direction, p) < h.level - 1e-9) return false;
    return !region.keep || region.keep(p);
  };

  std::vector<int> base(D), face(D);
  std::vector<double> lat(D);
  for (int dim = 0; dim <= D; ++dim) {
    for (unsigned mask = 0; mask < (1u << D); ++mask) {
      if (std::popcount(mask) != dim) continue;
      // iterate over base positions
      std::vector<int> lim(D);
      for (int a = 0; a < D; ++a) lim[a] = ((mask >> a) & 1u) ? axes[a].cells - 1 : axes[a].cells;
      std::fill(base.begin(), base.end(), 0);
      for (;;) {
        for (int a = 0; a < D; ++a) lat[a] = base[a] + (((mask >> a) & 1u) ? 0.5 : 0.0);
        bool keep = admissible(gc.point_at(lat));
        CellComplex::Column col;
        if (keep && dim > 0) {
          int i = 0;
          for (int a = 0; a < D && keep; ++a) {
            if (!((mask >> a) & 1u)) continue;
            const unsigned fm = mask & ~(1u << a);
            const int sgn = i % 2 ? -1 : 1;
            face = base;
            auto lo = gc.find(dim - 1, face, fm);
            face[a] += 1;
            auto hi = gc.find(dim - 1, face, fm);
            if (!lo || !hi) keep = false;
            else {
              col.emplace_back(*hi, sgn);
              col.emplace_back(*lo, -sgn);
            }
            ++i;
          }
        }
        if (keep) {
          double w = 1.0;
          const SpacePoint bc = gc.point_at(lat);
          for (int a = 0; a < D; ++a)
            if ((mask >> a) & 1u) w *= axis_length(sp, axes[a], gc.step(a), bc);
          const long id = gc.add_cell(dim, w, std::move(col));
          gc.index_[dim].emplace(gc.key(base, mask), id);
          gc.info_[dim].push_back({base, mask});
        }
        int a = 0;
        while (a < D && ++base[a] > lim[a]) base[a++] = 0;
        if (a == D) break;
      }
    }
  }
  if (gc.count(D) == 0 && gc.count(0) == 0) throw DomainError("empty region: no cells survive");
  return gc;
}

/// Boundary of the sum of the given dim-cells (each with coefficient +1).
inline std::vector<long long> boundary_of_cells(const CellComplex& cx, int dim, const std::vector<long>& cells) {
  std::vector<long long> x(cx.count(dim), 0);
  for (long c : cells) x.at(c) += 1;
  return cx.apply_boundary(dim, x);
}

/// 2-cells spanned by axes (a, b) at the lattice position `fixed` (entries on
/// a and b ignored), selected by pred(i, j) on their lower-left lattice corner.
inline std::vector<long> plane_cells(const GridComplex& gc, int a, int b, std::vector<int> fixed,
                                     const std::function<bool(int, int)>& pred) {
  std::vector<long> out;
  const unsigned mask = (1u << a) | (1u << b);
  for (int i = 0; i < gc.cells_along(a); ++i)
    for (int j = 0; j < gc.cells_along(b); ++j) {
      if (!pred(i, j)) continue;
      fixed[a] = i;
      fixed[b] = j;
      if (auto c = gc.find(2, fixed, mask)) out.push_back(*c);
    }
  return out;
}

/// 1-cycle along a closed lattice path whose consecutive points differ by one
/// unit step on one axis.
inline std::vector<long long> lattice_loop(const GridComplex& gc, const std::vector<std::vector<int>>& path) {
  std::vector<long long> z(gc.count(1), 0);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& p = path[i];
    const auto& q = path[(i + 1) % path.size()];
    int axis = -1, step = 0;
    for (int a = 0; a < gc.axis_count(); ++a)
      if (p[a] != q[a]) {
        if (axis >= 0 || std::abs(p[a] - q[a]) != 1) throw DomainError("lattice path must use unit steps");
        axis = a;
        step = q[a] - p[a];
      }
    if (axis < 0) throw DomainError("lattice path repeats a point");
    const auto& lo = step > 0 ? p : q;
    const auto e = gc.find(1, lo, 1u << axis);
    if (!e) throw DomainError("lattice path leaves the complex");
    z[*e] += step;
  }
  return z;
}

/// Boundary loop of the axis-aligned lattice rectangle [i0, i1] x [j0, j1] in axes (a, b).
inline std::vector<long long> rectangle_loop(const GridComplex& gc, int a, int b, std::vector<int> at, int i0, int j0,
                                             int i1, int j1) {
  std::vector<std::vector<int>> path;
  auto pt = [&](int i, int j) {
    at[a] = i;
    at[b] = j;
    path.push_back(at);
  };
  for (int i = i0; i < i1; ++i) pt(i, j0);
  for (int j = j0; j < j1; ++j) pt(i1, j);
  for (int i = i1; i > i0; --i) pt(i, j1);
  for (int j = j1; j > j0; --j) pt(i0, j);
  return lattice_loop(gc, path);
}

/// Unit square grid [0, n]^2 in E^2.
inline GridComplex square_grid(int n) {
  const ProductSpace e2(std::vector<std::pair<FactorKind, int>>{{FactorKind::Euclidean, 2}});
  Region r;
  r.axes = {{0, 0.0, static_cast<double>(n), n, false}, {1, 0.0, static_cast<double>(n), n, false}};
  return discretize_region(e2, r, 1.0);
}

/// Unit square grid [0, n]^2 with the open square (h0, h1)^2 removed.
inline GridComplex annulus_grid(int n, int h0, int h1) {
  const ProductSpace e2(std::vector<std::pair<FactorKind, int>>{{FactorKind::Euclidean, 2}});
  Region r;
  r.axes = {{0, 0.0, static_cast<double>(n), n, false}, {1, 0.0, static_cast<double>(n), n, false}};
  r.keep = [h0, h1](PointView p) { return !(p[0] > h0 && p[0] < h1 && p[1] > h0 && p[1] < h1); };
  return discretize_region(e2, r, 1.0);
}

// ---------------------------------------------------------------------------
// Simplicial complexes generated by chains.

struct SimplicialComplex {
  CellComplex cx;
  std::vector<std::map<std::vector<int>, long>> index;  // per dimension, sorted vertex ids -> cell
  std::vector<std::vector<std::vector<int>>> cells;     // per dimension, cell -> sorted vertex ids
};

/// Closure of the given top simplices (ids into `vertices`), weighted by
/// simplex volume (floored at `min_weight`).
inline SimplicialComplex simplicial_complex(const ProductSpace& sp, const std::vector<SpacePoint>& vertices,
                                            std::vector<std::vector<int>> top, double min_weight = 1e-12) {
  if (top.empty()) throw DomainError("empty simplicial complex");
  const int K = static_cast<int>(top.front().size()) - 1;
  SimplicialComplex sc{CellComplex(K), std::vector<std::map<std::vector<int>, long>>(K + 1),
                       std::vector<std::vector<std::vector<int>>>(K + 1)};
  std::vector<std::set<std::vector<int>>> by_dim(K + 1);
  for (auto& s : top) {
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) continue;
    by_dim[K].insert(s);
  }
  for (int d = K; d > 0; --d)
    for (const auto& s : by_dim[d])
      for (int i = 0; i <= d; ++i) {
        std::vector<int> f;
        for (int j = 0; j <= d; ++j)
          if (j != i) f.push_back(s[j]);
        by_dim[d - 1].insert(f);
      }
  for (int d = 0; d <= K; ++d)
    for (const auto& s : by_dim[d]) {
      CellComplex::Column col;
      for (int i = 0; d > 0 && i <= d; ++i) {
        std::vector<int> f;
        for (int j = 0; j <= d; ++j)
          if (j != i) f.push_back(s[j]);
        col.emplace_back(sc.index[d - 1].at(f), i % 2 ? -1 : 1);
      }
      std::vector<PointView> pts;
      for (int id : s) pts.push_back(vertices.at(id));
      const double w = d == 0 ? 1.0 : std::max(min_weight, simplex_volume(sp, pts));
      const long c = sc.cx.add_cell(d, w, std::move(col));
      sc.index[d].emplace(s, c);
      sc.cells[d].push_back(s);
    }
  return sc;
}

/// Coefficient vector of a chain whose vertex ids refer to the complex's vertex table.
inline std::vector<long long> chain_vector(const SimplicialComplex& sc, const SimplicialChain& c) {
  std::vector<long long> x(sc.cx.count(c.k()), 0);
  for (std::size_t t = 0; t < c.size(); ++t) {
    const auto s = c.simplex(t);
    auto it = sc.index.at(c.k()).find(std::vector<int>(s.begin(), s.end()));
    if (it == sc.index.at(c.k()).end()) throw DomainError("chain simplex is not a cell of the complex");
    x[it->second] += c.coeff(t);
  }
  return x;
}

// ---------------------------------------------------------------------------
// The filling LP.

enum class LpMode { Double, Rational, Auto };

struct FillResult {
  std::vector<double> chain;  // coefficients on (k+1)-cells
  double value = 0.0;         // weighted 1-norm
  double residual = 0.0;      // max |d x - z|
  bool exact = false;         // solved in rational arithmetic
  std::string exact_value;    // exact optimum when `exact`
  bool integral = false;      // all coefficients are integers
  long iterations = 0;
};

namespace detail {

inline long argmax_abs(const std::vector<double>& v) {
  long best = -1;
  double m = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > m) {
      m = std::abs(v[i]);
      best = static_cast<long>(i);
    }
  return best;
}

inline void finish(const CellComplex& cx, int k, const std::vector<long long>& z, FillResult& r) {
  bool integral = true;
  for (double x : r.chain)
    if (std::abs(x - std::round(x)) > 1e-7) integral = false;
  r.integral = integral;
  if (integral) {
    std::vector<long long> xi(r.chain.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
      xi[i] = std::llround(r.chain[i]);
      r.chain[i] = static_cast<double>(xi[i]);
    }
    const auto bx = cx.apply_boundary(k + 1, xi);
    long long worst = 0;
    for (std::size_t i = 0; i < bx.size(); ++i) worst = std::max(worst, std::llabs(bx[i] - z[i]));
    r.residual = static_cast<double>(worst);
  } else {
    const auto bx = cx.apply_boundary(k + 1, r.chain);
    r.residual = 0.0;
    for (std::size_t i = 0; i < bx.size(); ++i) r.residual = std::max(r.residual, std::abs(bx[i] - static_cast<double>(z[i])));
  }
  if (!r.exact) r.value = cx.chain_volume(k + 1, r.chain);
}

inline FillResult solve_double(const CellComplex& cx, int k, const std::vector<long long>& z) {
  const long m = cx.count(k), n = cx.count(k + 1);
  // dual: maximize z.p subject to -w <= d^T p <= w, written as d^T p - s = 0
  std::vector<Eigen::Triplet<double>> t;
  for (long f = 0; f < n; ++f) {
    for (const auto& [j, a] : cx.boundary_of(k + 1, f)) t.emplace_back(static_cast<int>(f), static_cast<int>(j), a);
    t.emplace_back(static_cast<int>(f), static_cast<int>(m + f), -1.0);
  }
  Eigen::SparseMatrix<double> M(n, m + n);
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();
  std::vector<double> c(m + n, 0.0), lo(m + n), hi(m + n);
  for (long j = 0; j < m; ++j) {
    c[j] = static_cast<double>(z[j]);
    lo[j] = -std::numeric_limits<double>::infinity();
    hi[j] = std::numeric_limits<double>::infinity();
  }
  for (long f = 0; f < n; ++f) {
    lo[m + f] = -cx.weight(k + 1, f);
    hi[m + f] = cx.weight(k + 1, f);
  }
  std::vector<int> basis(n);
  for (long f = 0; f < n; ++f) basis[f] = static_cast<int>(m + f);
  const auto res = lp::revised_bounded_simplex(M, c, lo, hi, basis);
  if (res.status == lp::Status::Unbounded) {
    std::vector<double> dp(res.ray.begin(), res.ray.begin() + m);
    const long cell = argmax_abs(dp);
    throw InfeasibleError("cycle is not a boundary in the complex (certificate " + std::to_string(k) + "-cell " +
                              std::to_string(cell) + ")",
                          cell);
  }
  FillResult r;
  r.chain = res.duals;
  r.iterations = res.iterations;
  return r;
}

inline FillResult solve_rational(const CellComplex& cx, int k, const std::vector<long long>& z) {
  const long m = cx.count(k), n = cx.count(k + 1);
  std::vector<std::vector<mpq_class>> A(m, std::vector<mpq_class>(2 * n, mpq_class(0)));
  for (long f = 0; f < n; ++f)
    for (const auto& [j, a] : cx.boundary_of(k + 1, f)) {
      A[j][f] += a;
      A[j][n + f] -= a;
    }
  std::vector<mpq_class> b(m), c(2 * n);
  for (long j = 0; j < m; ++j) b[j] = mpq_class(static_cast<long>(z[j]));
  for (long f = 0; f < n; ++f) c[f] = c[n + f] = mpq_class(cx.weight(k + 1, f));
  const auto res = lp::dense_simplex<mpq_class>(A, b, c, mpq_class(0));
  if (res.status == lp::Status::Infeasible) {
    std::vector<double> y(res.farkas.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = res.farkas[i].get_d();
    const long cell = argmax_abs(y);
    throw InfeasibleError("cycle is not a boundary in the complex (certificate " + std::to_string(k) + "-cell " +
                              std::to_string(cell) + ")",
                          cell);
  }
  if (res.status != lp::Status::Optimal) throw std::logic_error("filling LP reported unbounded");
  FillResult r;
  r.exact = true;
  r.exact_value = res.value.get_str();
  r.value = res.value.get_d();
  r.chain.resize(n);
  for (long f = 0; f < n; ++f) r.chain[f] = mpq_class(res.x[f] - res.x[n + f]).get_d();
  r.iterations = res.pivots;
  return r;
}

}  // namespace detail

/// Weighted-1-norm minimal (k+1)-chain x with boundary z. Rational mode solves
/// the split LP exactly with a dense Bland tableau; Auto re-solves exactly
/// when the complex has fewer than 2000 cells.
inline FillResult min_fill(const CellComplex& cx, int k, const std::vector<long long>& z, LpMode mode = LpMode::Double) {
  if (k < 0 || k + 1 > cx.top_dim()) throw DomainError("filling dimension out of range for the complex");
  if (static_cast<long>(z.size()) != cx.count(k)) throw DomainError("cycle vector has wrong length");
  if (k >= 1) {
    const auto bz = cx.apply_boundary(k, z);
    if (std::any_of(bz.begin(), bz.end(), [](long long v) { return v != 0; }))
      throw DomainError("prescribed chain is not a cycle");
  }
  if (std::all_of(z.begin(), z.end(), [](long long v) { return v == 0; })) {
    FillResult r;
    r.chain.assign(cx.count(k + 1), 0.0);
    r.integral = true;
    r.exact = mode != LpMode::Double;
    r.exact_value = "0";
    return r;
  }
  FillResult r;
  if (mode == LpMode::Rational) {
    r = detail::solve_rational(cx, k, z);
  } else {
    r = detail::solve_double(cx, k, z);
    if (mode == LpMode::Auto && cx.count(k) + cx.count(k + 1) < 2000) {
      detail::finish(cx, k, z, r);
      FillResult ex = detail::solve_rational(cx, k, z);
      if (std::abs(ex.value - r.value) > 1e-7 * std::max(1.0, ex.value))
        throw std::runtime_error("floating-point and rational optima disagree");
      r = std::move(ex);
    }
  }
  detail::finish(cx, k, z, r);
  return r;
}

struct ProfilePoint {
  double cycle_volume;
  double fill_value;
};

inline std::vector<ProfilePoint> filling_profile(const CellComplex& cx, int k,
                                                 const std::vector<std::vector<long long>>& cycles,
                                                 LpMode mode = LpMode::Double) {
  std::vector<ProfilePoint> out;
  for (const auto& z : cycles) out.push_back({cx.chain_volume(k, z), min_fill(cx, k, z, mode).value});
  return out;
}

// ---------------------------------------------------------------------------
// Text formats.
//
// Complex:
//   # dehnfill complex
//   dims <top_dim>
//   cells <d> <count>                 one line per dimension
//   weight <d> <cell> <w>             one line per cell
//   boundary <d> <face> <cell> <v>    entry of d_d: row = (d-1)-cell, column = d-cell
// Cycle:
//   <dim> <cell> <value>              one line per nonzero entry

inline void write_complex(std::ostream& out, const CellComplex& cx) {
  out << "# dehnfill complex\n" << std::setprecision(17);
  out << "dims " << cx.top_dim() << "\n";
  for (int d = 0; d <= cx.top_dim(); ++d) out << "cells " << d << " " << cx.count(d) << "\n";
  for (int d = 0; d <= cx.top_dim(); ++d)
    for (long c = 0; c < cx.count(d); ++c) out << "weight " << d << " " << c << " " << cx.weight(d, c) << "\n";
  for (int d = 1; d <= cx.top_dim(); ++d)
    for (long c = 0; c < cx.count(d); ++c)
      for (const auto& [f, v] : cx.boundary_of(d, c)) out << "boundary " << d << " " << f << " " << c << " " << v << "\n";
}

inline CellComplex read_complex(std::istream& in) {
  std::string line;
  int lineno = 0;
  int top = -1;
  std::vector<long> counts;
  std::vector<std::vector<double>> w;
  std::vector<std::vector<CellComplex::Column>> bd;
  auto fail = [&](const std::string& why) {
    throw DomainError("complex file line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims") {
      if (!(ls >> top) || top < 0) fail("bad dimension");
      counts.assign(top + 1, -1);
      w.assign(top + 1, {});
      bd.assign(top + 1, {});
    } else if (key == "cells") {
      int d;
      long n;
      if (top < 0 || !(ls >> d >> n) || d < 0 || d > top || n < 0) fail("bad cell count");
      counts[d] = n;
      w[d].assign(n, -1.0);
      bd[d].assign(n, {});
    } else if (key == "weight") {
      int d;
      long c;
      double v;
      if (!(ls >> d >> c >> v) || d < 0 || d > top || c < 0 || c >= counts[d]) fail("bad weight entry");
      w[d][c] = v;
    } else if (key == "boundary") {
      int d, v;
      long f, c;
      if (!(ls >> d >> f >> c >> v) || d < 1 || d > top || c < 0 || c >= counts[d] || f < 0 || f >= counts[d - 1])
        fail("bad boundary entry");
      bd[d][c].emplace_back(f, v);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (top < 0) throw DomainError("complex file has no 'dims' line");
  CellComplex cx(top);
  for (int d = 0; d <= top; ++d) {
    if (counts[d] < 0) throw DomainError("complex file lacks the cell count for dimension " + std::to_string(d));
    for (long c = 0; c < counts[d]; ++c) cx.add_cell(d, w[d][c], bd[d][c]);
  }
  cx.validate();
  return cx;
}

struct CycleFile {
  int dim = -1;
  std::vector<std::pair<long, long long>> entries;
};

inline CycleFile read_cycle(std::istream& in) {
  CycleFile f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int d;
    long c;
    long long v;
    if (!(ls >> d >> c >> v)) throw DomainError("cycle file line " + std::to_string(lineno) + ": expected 'dim cell value'");
    if (f.dim >= 0 && d != f.dim) throw DomainError("cycle file line " + std::to_string(lineno) + ": mixed dimensions");
    f.dim = d;
    f.entries.emplace_back(c, v);
  }
  if (f.dim < 0) throw DomainError("empty cycle file");
  return f;
}

inline std::vector<long long> cycle_vector(const CellComplex& cx, const CycleFile& f) {
  std::vector<long long> z(cx.count(f.dim), 0);
  for (const auto& [c, v] : f.entries) {
    if (c < 0 || c >= cx.count(f.dim)) throw DomainError("cycle references a missing cell");
    z[c] += v;
  }
  return z;
}

inline void write_cycle(std::ostream& out, int dim, const std::vector<long long>& z) {
  for (std::size_t c = 0; c < z.size(); ++c)
    if (z[c] != 0) out << dim << " " << c << " " << z[c] << "\n";
}

}  // namespace dehnfill
