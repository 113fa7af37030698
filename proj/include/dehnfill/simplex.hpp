#pragma once

// Simplex solvers used by the filling oracle.
//
//  * dense_simplex: two-phase tableau method with Bland's rule, templated on
//    the scalar (double or an exact rational type).
//  * revised_bounded_simplex: sparse revised simplex for
//      maximize c^T v  subject to  M v = 0,  l <= v <= u  (bounds may be infinite)
//    with an LU-factored basis and product-form updates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace dehnfill::lp {

template <typename S>
int sign_of(const S& v, const S& eps) {
  if (v > eps) return 1;
  if (v < -eps) return -1;
  return 0;
}

enum class Status { Optimal, Infeasible, Unbounded };

template <typename S>
struct DenseResult {
  Status status = Status::Optimal;
  std::vector<S> x;
  S value{};
  /// Infeasible: y with y^T A = 0 on the nonnegative orthant side and y^T b > 0.
  std::vector<S> farkas;
  long pivots = 0;
};

/// minimize c^T x  subject to  A x = b,  x >= 0.  A is dense, row-major.
template <typename S>
DenseResult<S> dense_simplex(const std::vector<std::vector<S>>& A, const std::vector<S>& b, const std::vector<S>& c,
                             const S& eps) {
  const std::size_t m = A.size();
  const std::size_t n = c.size();
  const std::size_t cols = n + m;  // structural + artificial
  const std::size_t rhs = cols;
  std::vector<std::vector<S>> T(m, std::vector<S>(cols + 1, S(0)));
  std::vector<int> flip(m, 1);
  std::vector<long> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (A[i].size() != n) throw std::invalid_argument("dense_simplex: ragged constraint matrix");
    flip[i] = b[i] < S(0) ? -1 : 1;
    for (std::size_t j = 0; j < n; ++j) T[i][j] = flip[i] < 0 ? S(-A[i][j]) : A[i][j];
    T[i][n + i] = S(1);
    T[i][rhs] = flip[i] < 0 ? S(-b[i]) : b[i];
    basis[i] = static_cast<long>(n + i);
  }
  std::vector<bool> active(m, true);
  std::vector<S> d(cols + 1, S(0));
  DenseResult<S> res;

  auto pivot = [&](std::size_t r, std::size_t q) {
    const S piv = T[r][q];
    for (std::size_t j = 0; j <= cols; ++j)
      if (sign_of(T[r][j], S(0)) != 0) T[r][j] /= piv;
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j <= cols; ++j)
      if (sign_of(T[r][j], S(0)) != 0) nz.push_back(j);
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r || !active[i] || sign_of(T[i][q], S(0)) == 0) continue;
      const S f = T[i][q];
      for (std::size_t j : nz) T[i][j] -= f * T[r][j];
    }
    if (sign_of(d[q], S(0)) != 0) {
      const S f = d[q];
      for (std::size_t j : nz) d[j] -= f * T[r][j];
    }
    basis[r] = static_cast<long>(q);
    ++res.pivots;
  };

  auto run = [&](std::size_t allowed_cols) {
    for (;;) {
      std::size_t q = allowed_cols;
      for (std::size_t j = 0; j < allowed_cols; ++j)
        if (sign_of(d[j], eps) < 0) {
          q = j;
          break;
        }
      if (q == allowed_cols) return Status::Optimal;
      std::optional<std::size_t> r;
      S best{};
      for (std::size_t i = 0; i < m; ++i) {
        if (!active[i] || sign_of(T[i][q], eps) <= 0) continue;
        const S ratio = T[i][rhs] / T[i][q];
        if (!r || ratio < best || (!(best < ratio) && basis[i] < basis[*r])) {
          r = i;
          best = ratio;
        }
      }
      if (!r) return Status::Unbounded;
      pivot(*r, q);
    }
  };

  // Phase 1: minimize the sum of artificials.
  for (std::size_t j = 0; j <= cols; ++j) {
    if (j >= n && j < rhs) continue;
    S s(0);
    for (std::size_t i = 0; i < m; ++i) s -= T[i][j];
    d[j] = s;
  }
  run(n);
  const S infeas = -d[rhs];
  if (sign_of(infeas, eps) > 0) {
    res.status = Status::Infeasible;
    res.farkas.assign(m, S(0));
    for (std::size_t i = 0; i < m; ++i) {
      const S yi = S(1) - d[n + i];
      res.farkas[i] = flip[i] < 0 ? S(-yi) : yi;
    }
    return res;
  }
  // Drive artificials out of the basis; rows where that is impossible are redundant.
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < static_cast<long>(n)) continue;
    std::optional<std::size_t> q;
    for (std::size_t j = 0; j < n; ++j)
      if (sign_of(T[i][j], eps) != 0) {
        q = j;
        break;
      }
    if (q)
      pivot(i, *q);
    else
      active[i] = false;
  }
  // Phase 2.
  for (std::size_t j = 0; j <= cols; ++j) d[j] = j < n ? c[j] : S(0);
  for (std::size_t i = 0; i < m; ++i) {
    if (!active[i]) continue;
    const S cb = c[basis[i]];
    if (sign_of(cb, S(0)) == 0) continue;
    for (std::size_t j = 0; j <= cols; ++j) d[j] -= cb * T[i][j];
  }
  const Status st = run(n);
  if (st == Status::Unbounded) {
    res.status = st;
    return res;
  }
  res.x.assign(n, S(0));
  for (std::size_t i = 0; i < m; ++i)
    if (active[i]) res.x[basis[i]] = T[i][rhs];
  res.value = S(0);
  for (std::size_t j = 0; j < n; ++j) res.value += c[j] * res.x[j];
  return res;
}

struct RevisedResult {
  Status status = Status::Optimal;
  std::vector<double> v;      // primal values
  std::vector<double> duals;  // one per row of M
  double value = 0.0;
  std::vector<double> ray;    // Unbounded: improving direction
  long iterations = 0;
};

struct RevisedOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 64;
  int stall_limit = 50;  // degenerate iterations before falling back to Bland's rule
  long max_iterations = 5000000;
};

/// maximize c^T v subject to M v = 0 and lo <= v <= hi. `start_basis` lists
/// one column per row forming a nonsingular basis; all other columns start at
/// value 0, which must lie within their bounds, and the start must be feasible.
inline RevisedResult revised_bounded_simplex(const Eigen::SparseMatrix<double>& M, const std::vector<double>& c,
                                             const std::vector<double>& lo, const std::vector<double>& hi,
                                             std::vector<int> start_basis, const RevisedOptions& opt = {}) {
  using SpMat = Eigen::SparseMatrix<double>;
  const int rows = static_cast<int>(M.rows());
  const int n = static_cast<int>(M.cols());
  if (static_cast<int>(start_basis.size()) != rows) throw std::invalid_argument("basis size must equal row count");
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<int> basis = std::move(start_basis);
  std::vector<int> pos(n, -1);  // row position of basic column, -1 if nonbasic
  for (int r = 0; r < rows; ++r) pos[basis[r]] = r;
  std::vector<double> v(n, 0.0);
  for (int j = 0; j < n; ++j)
    if (pos[j] < 0 && (v[j] < lo[j] - opt.feas_tol || v[j] > hi[j] + opt.feas_tol))
      throw std::invalid_argument("nonbasic start value outside bounds");

  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  struct Eta {
    int r;
    Eigen::VectorXd col;
  };
  std::vector<Eta> etas;

  auto refactor = [&]() {
    std::vector<Eigen::Triplet<double>> trip;
    for (int r = 0; r < rows; ++r)
      for (SpMat::InnerIterator it(M, basis[r]); it; ++it) trip.emplace_back(static_cast<int>(it.row()), r, it.value());
    SpMat B(rows, rows);
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    lu.compute(B);
    if (lu.info() != Eigen::Success) throw std::runtime_error("basis factorization failed");
    etas.clear();
  };
  auto ftran = [&](Eigen::VectorXd a) {
    Eigen::VectorXd y = lu.solve(a);
    for (const auto& e : etas) {
      const double yr = y(e.r) / e.col(e.r);
      y -= yr * e.col;
      y(e.r) = yr;
    }
    return y;
  };
  auto btran = [&](Eigen::VectorXd cb) {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      const double s = it->col.dot(cb) - it->col(it->r) * cb(it->r);
      cb(it->r) = (cb(it->r) - s) / it->col(it->r);
    }
    return Eigen::VectorXd(lu.transpose().solve(cb));
  };
  auto column = [&](int j) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(rows);
    for (SpMat::InnerIterator it(M, j); it; ++it) a(it.row()) = it.value();
    return a;
  };
  // Basic values from M v = 0: B v_B = -N v_N.
  auto recompute_basics = [&]() {
    Eigen::VectorXd rhsv = Eigen::VectorXd::Zero(rows);
    for (int j = 0; j < n; ++j) {
      if (pos[j] >= 0 || v[j] == 0.0) continue;
      for (SpMat::InnerIterator it(M, j); it; ++it) rhsv(it.row()) -= it.value() * v[j];
    }
    const Eigen::VectorXd vb = ftran(rhsv);
    for (int r = 0; r < rows; ++r) v[basis[r]] = vb(r);
  };

  refactor();
  recompute_basics();
  RevisedResult res;
  double last_obj = -inf;
  int stall = 0;
  bool bland = false;
  const SpMat Mt = M.transpose();
  for (long iter = 0;; ++iter) {
    if (iter >= opt.max_iterations) throw std::runtime_error("simplex iteration limit reached");
    if (static_cast<int>(etas.size()) >= opt.refactor_every) {
      refactor();
      recompute_basics();
    }
    Eigen::VectorXd cb(rows);
    for (int r = 0; r < rows; ++r) cb(r) = c[basis[r]];
    const Eigen::VectorXd pi = btran(cb);
    const Eigen::VectorXd mpi = Mt * pi;
    // pricing: reduced cost d_j = c_j - pi^T M_j
    int q = -1;
    double dir = 0.0, best = 0.0;
    for (int j = 0; j < n; ++j) {
      if (pos[j] >= 0) continue;
      const double dj = c[j] - mpi(j);
      const bool up = dj > opt.opt_tol && v[j] < hi[j] - opt.feas_tol;
      const bool down = dj < -opt.opt_tol && v[j] > lo[j] + opt.feas_tol;
      if (!up && !down) continue;
      if (bland) {
        q = j;
        dir = up ? 1.0 : -1.0;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        q = j;
        dir = up ? 1.0 : -1.0;
      }
    }
    if (q < 0) {
      res.status = Status::Optimal;
      res.duals.assign(pi.data(), pi.data() + rows);
      break;
    }
    const Eigen::VectorXd alpha = ftran(column(q));
    // entering moves by dir * theta; basic r moves by -dir * theta * alpha_r
    double theta = hi[q] - lo[q];
    int leave = -1;
    double leave_piv = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double a = -dir * alpha(r);
      if (std::abs(alpha(r)) <= opt.pivot_tol) continue;
      const int j = basis[r];
      double room;
      if (a > 0.0) {
        if (hi[j] == inf) continue;
        room = std::max(0.0, hi[j] - v[j]) / a;
      } else {
        if (lo[j] == -inf) continue;
        room = std::max(0.0, v[j] - lo[j]) / -a;
      }
      bool better;
      if (leave < 0)
        better = room <= theta;
      else if (room < theta - 1e-12)
        better = true;
      else if (room <= theta + 1e-12)
        better = bland ? basis[r] < basis[leave] : std::abs(alpha(r)) > leave_piv;
      else
        better = false;
      if (better) {
        theta = room;
        leave = r;
        leave_piv = std::abs(alpha(r));
      }
    }
    if (theta == inf) {
      res.status = Status::Unbounded;
      res.ray.assign(n, 0.0);
      res.ray[q] = dir;
      for (int r = 0; r < rows; ++r) res.ray[basis[r]] = -dir * alpha(r);
      break;
    }
    v[q] += dir * theta;
    for (int r = 0; r < rows; ++r) v[basis[r]] -= dir * theta * alpha(r);
    if (leave >= 0) {
      const int j = basis[leave];
      // snap the leaving variable onto the bound it reached
      const double a = -dir * alpha(leave);
      v[j] = a > 0.0 ? hi[j] : lo[j];
      pos[j] = -1;
      basis[leave] = q;
      pos[q] = leave;
      etas.push_back({leave, alpha});
    }
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += c[j] * v[j];
    if (obj > last_obj + 1e-12) {
      last_obj = obj;
      stall = 0;
      bland = false;
    } else if (++stall > opt.stall_limit) {
      bland = true;
    }
    res.iterations = iter + 1;
  }
  res.v = v;
  res.value = 0.0;
  for (int j = 0; j < n; ++j) res.value += c[j] * v[j];
  return res;
}

}  // namespace dehnfill::lp
