#pragma once

// Filling a cycle by the cone toward a point at infinity: every vertex flows
// along its asymptotic ray down to a horosphere, and the image of the cycle on
// that horosphere is capped off inside it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dehnfill/chains.hpp"
#include "dehnfill/errors.hpp"
#include "dehnfill/lpfill.hpp"
#include "dehnfill/modelspace.hpp"

namespace dehnfill {

enum class CapStrategy { FlatConeInHorosphere, LpFill };

struct ConeParams {
  BoundaryDirection w;
  double t_max = 8.0;                 // depth of the horosphere below the cycle's lowest Busemann value
  std::optional<double> cap_level;    // explicit horosphere level (overrides t_max for the level)
  int time_steps = 32;                // layers of prisms along the rays
  CapStrategy cap_strategy = CapStrategy::FlatConeInHorosphere;
  double cap_mesh = 0.5;              // refine the cap inside the horosphere down to this edge length (0: off)
  long cap_budget = 400000;           // maximum number of cap simplices produced by refinement
  int density_samples = 32;           // cycle simplices sampled for the density report
};

struct DensitySample {
  double t;
  double phi;
};

struct ConeReport {
  double cycle_volume = 0.0;
  double cone_volume = 0.0;
  double cap_volume = 0.0;
  double total_volume = 0.0;
  double measured_C1 = 0.0;
  double measured_decay = 0.0;
  double rho_star = 0.0;
  double level = 0.0;
  bool perturbed = false;
  std::vector<DensitySample> density_samples;
};

namespace detail {

inline void validate_cone_params(const ProductSpace& sp, const ConeParams& p) {
  validate_direction(sp, p.w);
  if (p.t_max < 0.0) throw DomainError("t_max must be nonnegative");
  if (p.time_steps < 4) throw DomainError("time_steps must be at least 4");
}

/// Smallest positive speed among hyperbolic factors flowing to their chart infinity.
inline double decay_floor(const ProductSpace& sp, const BoundaryDirection& w) {
  double rho = 0.0;
  for (std::size_t i = 0; i < sp.factors().size(); ++i)
    if (sp.factors()[i].hyperbolic() && w.speeds[i] > 0.0) rho = rho == 0.0 ? w.speeds[i] : std::min(rho, w.speeds[i]);
  return rho;
}

struct ConeParts {
  SimplicialChain cone;  // boundary = cycle - top
  SimplicialChain top;   // image of the cycle on the horosphere
  double level = 0.0;
  bool perturbed = false;
};

inline double cone_level(const ProductSpace& sp, const SimplicialChain& cycle, const ConeParams& p) {
  if (p.cap_level) return *p.cap_level;
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < cycle.size(); ++t)
    for (int id : cycle.simplex(t)) lo = std::min(lo, busemann(sp, p.w, cycle.vertex(id)));
  return lo - p.t_max;
}

// Staircase prism over sigma between layers j and j+1, vertex (a, j) -> j * n + a:
// sum_i (-1)^i [(v_0,j) ... (v_i,j), (v_i,j+1) ... (v_k,j+1)].
inline void add_prism(SimplicialChain& out, std::span<const int> s, int j, int n, long long coeff) {
  const int k = static_cast<int>(s.size()) - 1;
  std::vector<int> ids(k + 2);
  for (int i = 0; i <= k; ++i) {
    int m = 0;
    for (int a = 0; a <= i; ++a) ids[m++] = j * n + s[a];
    for (int a = i; a <= k; ++a) ids[m++] = (j + 1) * n + s[a];
    out.add_term(ids, (i % 2 ? -1 : 1) * coeff);
  }
}

inline ConeParts build_cone(const ProductSpace& sp, const SimplicialChain& cycle_in, const ConeParams& p) {
  validate_cone_params(sp, p);
  ConeParts parts;
  parts.cone = SimplicialChain(cycle_in.k() + 1);
  parts.top = SimplicialChain(cycle_in.k());
  if (cycle_in.empty()) return parts;
  SimplicialChain cycle = cycle_in;
  cycle.weld();
  if (p.t_max == 0.0 && !p.cap_level) {
    parts.top = cycle;
    parts.level = cone_level(sp, cycle, p);
    return parts;
  }
  const int n = static_cast<int>(cycle.vertices().size());
  const double level = cone_level(sp, cycle, p);
  parts.level = level;
  std::vector<double> T(n);
  for (int a = 0; a < n; ++a) {
    T[a] = busemann(sp, p.w, cycle.vertex(a)) - level;
    if (T[a] < -1e-12) throw DomainError("cycle meets the interior of the horoball below the cap level");
    T[a] = std::max(T[a], 0.0);
  }
  // Transversality: a simplex of positive volume whose sweep has zero volume
  // gets its vertices nudged before flowing.
  std::vector<SpacePoint> start = cycle.vertices();
  {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<bool> nudge(n, false);
    for (std::size_t t = 0; t < cycle.size(); ++t) {
      const auto s = cycle.simplex(t);
      const double vs = term_volume(sp, cycle, t);
      if (vs <= 1e-12 || cycle.k() == 0) continue;
      double tmax = 0.0;
      for (int id : s) tmax = std::max(tmax, T[id]);
      if (tmax <= 0.0) continue;
      SimplicialChain probe(cycle.k() + 1);
      for (int id : s) probe.add_vertex(cycle.vertex(id));
      for (int id : s) probe.add_vertex(asymptotic_ray(sp, cycle.vertex(id), p.w, 0.5 * T[id]));
      std::vector<int> local(s.size());
      std::iota(local.begin(), local.end(), 0);
      add_prism(probe, local, 0, static_cast<int>(s.size()), 1);
      probe.normalize();
      if (k_volume(sp, probe) <= 1e-12 * vs)
        for (int id : s) nudge[id] = true;
    }
    for (int a = 0; a < n; ++a) {
      if (!nudge[a]) continue;
      parts.perturbed = true;
      SpacePoint q = start[a];
      for (double& x : q.coords) x += 1e-6 * g(rng) * std::max(1.0, std::abs(x));
      for (const auto& f : sp.factors())
        if (f.hyperbolic()) q[f.height_index()] = std::max(q[f.height_index()], 0.5 * start[a][f.height_index()]);
      start[a] = std::move(q);
      T[a] = std::max(0.0, busemann(sp, p.w, start[a]) - level);
    }
  }
  const int layers = p.time_steps + (parts.perturbed ? 1 : 0);
  std::vector<SpacePoint> verts;
  verts.reserve(static_cast<std::size_t>(n) * (layers + 1));
  for (int a = 0; a < n; ++a) verts.push_back(cycle.vertex(a));
  if (parts.perturbed)
    for (int a = 0; a < n; ++a) verts.push_back(start[a]);
  for (int j = 1; j <= p.time_steps; ++j)
    for (int a = 0; a < n; ++a)
      verts.push_back(asymptotic_ray(sp, start[a], p.w, T[a] * static_cast<double>(j) / p.time_steps));
  parts.cone.set_vertices(std::move(verts));
  for (std::size_t t = 0; t < cycle.size(); ++t)
    for (int j = 0; j < layers; ++j) add_prism(parts.cone, cycle.simplex(t), j, n, -cycle.coeff(t));
  parts.cone.normalize();
  // top layer as its own chain
  std::vector<SpacePoint> topv(parts.cone.vertices().begin() + static_cast<long>(layers) * n,
                               parts.cone.vertices().begin() + static_cast<long>(layers + 1) * n);
  parts.top.set_vertices(std::move(topv));
  for (std::size_t t = 0; t < cycle.size(); ++t) parts.top.add_term(cycle.simplex(t), cycle.coeff(t));
  parts.top.normalize();
  return parts;
}

/// Point at fraction s from p to q inside a horosphere of w: interpolates the
/// chart coordinates in which the Busemann function is affine.
inline SpacePoint horosphere_interpolate(const ProductSpace& sp, const BoundaryDirection& w, PointView p, PointView q,
                                         double s) {
  SpacePoint out(p);
  for (std::size_t i = 0; i < sp.factors().size(); ++i) {
    const auto& f = sp.factors()[i];
    const auto& d = w.data[i];
    if (!f.hyperbolic()) {
      for (int c = f.offset; c < f.offset + f.dim; ++c) out[c] = (1 - s) * p[c] + s * q[c];
      continue;
    }
    std::vector<double> a(block(f, p).begin(), block(f, p).end()), b(block(f, q).begin(), block(f, q).end());
    const FiniteBoundaryPoint* fin = std::get_if<FiniteBoundaryPoint>(&d);
    if (fin) {
      std::vector<double> ia(f.dim), ib(f.dim);
      invert(a, fin->xi, ia);
      invert(b, fin->xi, ib);
      a = ia;
      b = ib;
    }
    std::vector<double> m(f.dim);
    for (int c = 0; c + 1 < f.dim; ++c) m[c] = (1 - s) * a[c] + s * b[c];
    m[f.dim - 1] = std::pow(a[f.dim - 1], 1 - s) * std::pow(b[f.dim - 1], s);
    if (fin) {
      std::vector<double> back(f.dim);
      invert(m, fin->xi, back);
      m = back;
    }
    std::copy(m.begin(), m.end(), out.coords.begin() + f.offset);
  }
  return out;
}

inline SpacePoint horosphere_midpoint(const ProductSpace& sp, const BoundaryDirection& w, PointView p, PointView q) {
  return horosphere_interpolate(sp, w, p, q, 0.5);
}

/// Cone over the top from one of its vertices, swept inside the horosphere in
/// radial layers no longer than cap_mesh; the outer face is the top itself.
inline SimplicialChain flat_cap(const ProductSpace& sp, const SimplicialChain& top, const ConeParams& p) {
  SimplicialChain cap(top.k() + 1);
  if (top.empty()) return cap;
  const SpacePoint apex = top.vertex(top.simplex(0)[0]);
  const int n = static_cast<int>(top.vertices().size());
  const int k = top.k();
  auto layer_point = [&](int a, int j, int L) {
    return j == L ? top.vertex(a) : horosphere_interpolate(sp, p.w, apex, top.vertex(a), static_cast<double>(j) / L);
  };
  int L = 1;
  if (p.cap_mesh > 0.0) {
    const std::size_t per_layer = top.size() * static_cast<std::size_t>(k + 1);
    for (;;) {
      const int next = 2 * L;
      if (top.size() + (next - 1) * per_layer > static_cast<std::size_t>(p.cap_budget)) break;
      double worst = 0.0;
      for (int a = 0; a < n && worst <= p.cap_mesh; ++a)
        for (int j = 0; j < L && worst <= p.cap_mesh; ++j)
          worst = std::max(worst, distance(sp, layer_point(a, j, L), layer_point(a, j + 1, L)));
      if (worst <= p.cap_mesh) break;
      L = next;
    }
  }
  // vertex 0 is the apex, (a, j) for j = 1..L is 1 + (j - 1) n + a
  std::vector<SpacePoint> verts{apex};
  verts.reserve(1 + static_cast<std::size_t>(n) * L);
  for (int j = 1; j <= L; ++j)
    for (int a = 0; a < n; ++a) verts.push_back(layer_point(a, j, L));
  cap.set_vertices(std::move(verts));
  std::vector<int> ids(k + 2), shifted(k + 1);
  for (std::size_t t = 0; t < top.size(); ++t) {
    const auto s = top.simplex(t);
    ids[0] = 0;
    for (int i = 0; i <= k; ++i) ids[i + 1] = 1 + s[i];
    cap.add_term(ids, top.coeff(t));
    for (int i = 0; i <= k; ++i) shifted[i] = 1 + s[i];
    for (int j = 0; j + 1 < L; ++j) add_prism(cap, shifted, j, n, top.coeff(t));
  }
  cap.weld();
  cap.normalize();
  return cap;
}

/// LP over the join of the top cycle's support with a few apex candidates.
inline SimplicialChain lp_cap(const ProductSpace& sp, const SimplicialChain& top, int candidates = 8) {
  if (top.empty()) return SimplicialChain(top.k() + 1);
  std::vector<int> used;
  for (std::size_t t = 0; t < top.size(); ++t)
    for (int id : top.simplex(t)) used.push_back(id);
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::vector<int> apex;
  const int m = std::min<int>(candidates, static_cast<int>(used.size()));
  for (int i = 0; i < m; ++i) apex.push_back(used[static_cast<std::size_t>(i) * used.size() / m]);
  std::vector<std::vector<int>> tops;
  for (int a : apex)
    for (std::size_t t = 0; t < top.size(); ++t) {
      const auto s = top.simplex(t);
      if (std::find(s.begin(), s.end(), a) != s.end()) continue;
      std::vector<int> j(s.begin(), s.end());
      j.push_back(a);
      tops.push_back(std::move(j));
    }
  if (tops.empty()) return SimplicialChain(top.k() + 1);
  const SimplicialComplex sc = simplicial_complex(sp, top.vertices(), tops);
  const auto z = chain_vector(sc, top);
  const FillResult fr = min_fill(sc.cx, top.k(), z, LpMode::Double);
  if (!fr.integral) throw DomainError("cap LP returned a non-integral optimum");
  SimplicialChain cap(top.k() + 1);
  cap.set_vertices(top.vertices());
  for (long c = 0; c < sc.cx.count(top.k() + 1); ++c)
    if (fr.chain[c] != 0.0) cap.add_term(sc.cells[top.k() + 1][c], std::llround(fr.chain[c]));
  cap.normalize();
  return cap;
}

}  // namespace detail

/// (k+1)-chain of staircase prisms sigma x [t_j, t_{j+1}] swept by the
/// asymptotic rays; its boundary is the cycle minus its image on the horosphere.
inline SimplicialChain cone_chain(const ProductSpace& sp, const SimplicialChain& cycle, const ConeParams& params) {
  return detail::build_cone(sp, cycle, params).cone;
}

/// Image of the cycle on the cap horosphere (the far end of cone_chain).
inline SimplicialChain cone_top(const ProductSpace& sp, const SimplicialChain& cycle, const ConeParams& params) {
  return detail::build_cone(sp, cycle, params).top;
}

// ---------------------------------------------------------------------------
// Density of the cone.

namespace detail {

struct JacobiFrame {
  Eigen::MatrixXd basis;  // columns: orthonormal basis of the ray-orthogonal space
  Eigen::VectorXd rates;  // decay rate of each basis column
  Eigen::VectorXd ray;    // unit ray direction
};

/// Parallel orthonormal frame orthogonal to the ray, in which stable Jacobi
/// fields decay coordinatewise: horizontal directions of a hyperbolic factor
/// traversed at speed c decay at rate c; the rest are constant.
inline JacobiFrame jacobi_frame(const ProductSpace& sp, const BoundaryDirection& w) {
  validate_direction(sp, w);
  const int n = sp.dim();
  JacobiFrame jf;
  jf.ray = Eigen::VectorXd::Zero(n);
  std::vector<int> decaying, flat;
  std::vector<double> drates;
  for (std::size_t i = 0; i < sp.factors().size(); ++i) {
    const auto& f = sp.factors()[i];
    const double c = w.speeds[i];
    if (f.hyperbolic()) {
      if (c > 0.0 && !std::holds_alternative<VerticalInfinity>(w.data[i]))
        throw DomainError("density is computed in the chart toward the vertical point at infinity only");
      jf.ray(f.height_index()) = c;
      for (int a = f.offset; a < f.height_index(); ++a) {
        if (c > 0.0) {
          decaying.push_back(a);
          drates.push_back(c);
        } else {
          flat.push_back(a);
        }
      }
      flat.push_back(f.height_index());
    } else {
      if (const auto* u = std::get_if<EuclideanDirection>(&w.data[i]))
        for (int a = 0; a < f.dim; ++a) jf.ray(f.offset + a) = c * u->u[a];
      for (int a = f.offset; a < f.offset + f.dim; ++a) flat.push_back(a);
    }
  }
  jf.basis = Eigen::MatrixXd::Zero(n, n - 1);
  jf.rates = Eigen::VectorXd::Zero(n - 1);
  int col = 0;
  for (std::size_t i = 0; i < decaying.size(); ++i) {
    jf.basis(decaying[i], col) = 1.0;
    jf.rates(col++) = drates[i];
  }
  // orthonormal complement of the ray inside the constant block
  const int m = static_cast<int>(flat.size());
  Eigen::VectorXd r(m);
  for (int i = 0; i < m; ++i) r(i) = jf.ray(flat[i]);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ();
  for (int c = 1; c < m; ++c) {
    for (int i = 0; i < m; ++i) jf.basis(flat[i], col) = q(i, c);
    jf.rates(col++) = 0.0;
  }
  return jf;
}

inline Eigen::MatrixXd frame_matrix(const ProductSpace& sp, const std::vector<std::vector<double>>& frame) {
  const int k = static_cast<int>(frame.size());
  if (k == 0) throw DomainError("empty frame");
  Eigen::MatrixXd W(k, sp.dim());
  for (int i = 0; i < k; ++i) {
    if (static_cast<int>(frame[i].size()) != sp.dim()) throw DomainError("frame vector has wrong dimension");
    for (int j = 0; j < sp.dim(); ++j) W(i, j) = frame[i][j];
  }
  return W;
}

inline double frame_gram_det(const Eigen::MatrixXd& W) {
  const double g = (W * W.transpose()).determinant();
  double scale = 1.0;
  for (Eigen::Index i = 0; i < W.rows(); ++i) scale *= std::max(W.row(i).squaredNorm(), 1e-300);
  if (!(g > 1e-20 * scale)) throw DomainError("degenerate frame");
  return g;
}

}  // namespace detail

/// Density phi(x, t) of the cone over a k-dimensional tangent frame at x:
/// |Y_1(t) ^ ... ^ Y_k(t) ^ ray| / |w_1 ^ ... ^ w_k|, where Y_i is the stable
/// Jacobi field through the ray-orthogonal part of w_i. Evaluated by the
/// Binet-Cauchy expansion over k-subsets of the decaying eigenframe. Frame
/// vectors are given in orthonormal-frame components at x.
inline double density_phi(const ProductSpace& sp, PointView x, const std::vector<std::vector<double>>& frame,
                          const BoundaryDirection& w, double t) {
  sp.require(x);
  if (t < 0.0) throw DomainError("time must be nonnegative");
  const auto jf = detail::jacobi_frame(sp, w);
  const Eigen::MatrixXd W = detail::frame_matrix(sp, frame);
  const double g = detail::frame_gram_det(W);
  const Eigen::MatrixXd A = W * jf.basis;  // k x (n-1)
  const int k = static_cast<int>(A.rows()), n1 = static_cast<int>(A.cols());
  if (k > n1) return 0.0;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  double sum = 0.0;
  Eigen::MatrixXd sub(k, k);
  for (;;) {
    double rate = 0.0;
    for (int a = 0; a < k; ++a) {
      sub.col(a) = A.col(idx[a]);
      rate += jf.rates(idx[a]);
    }
    const double dt = sub.determinant();
    sum += dt * dt * std::exp(-2.0 * rate * t);
    int i = k - 1;
    while (i >= 0 && idx[i] == n1 - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return std::sqrt(std::max(sum, 0.0) / g);
}

/// Same density from the Gram determinant of the propagated Jacobi fields.
inline double density_phi_gram(const ProductSpace& sp, PointView x, const std::vector<std::vector<double>>& frame,
                               const BoundaryDirection& w, double t) {
  sp.require(x);
  if (t < 0.0) throw DomainError("time must be nonnegative");
  const auto jf = detail::jacobi_frame(sp, w);
  const Eigen::MatrixXd W = detail::frame_matrix(sp, frame);
  const double g = detail::frame_gram_det(W);
  Eigen::MatrixXd Y = W * jf.basis;
  for (Eigen::Index c = 0; c < Y.cols(); ++c) Y.col(c) *= std::exp(-jf.rates(c) * t);
  return std::sqrt(std::max((Y * Y.transpose()).determinant(), 0.0) / g);
}

/// Tangent frame of a simplex at its first vertex, in orthonormal components.
inline std::vector<std::vector<double>> simplex_frame(const ProductSpace& sp, std::span<const PointView> pts) {
  std::vector<std::vector<double>> frame;
  for (std::size_t i = 1; i < pts.size(); ++i) frame.push_back(chart_tangent(sp, pts[0], pts[i]));
  return frame;
}

namespace detail {

inline void density_report(const ProductSpace& sp, const SimplicialChain& cycle, const ConeParams& p, ConeReport& rep) {
  rep.rho_star = decay_floor(sp, p.w);
  if (cycle.empty() || cycle.k() == 0) return;
  bool chart_infinity = true;
  for (std::size_t i = 0; i < sp.factors().size(); ++i)
    if (sp.factors()[i].hyperbolic() && p.w.speeds[i] > 0.0 && !std::holds_alternative<VerticalInfinity>(p.w.data[i]))
      chart_infinity = false;
  if (!chart_infinity) return;
  const int samples = std::min<int>(p.density_samples, static_cast<int>(cycle.size()));
  const int nt = 11;
  const double tmax = std::max(p.t_max, 1.0);
  std::vector<double> ts, logs;
  for (int j = 0; j < nt; ++j) {
    const double t = tmax * j / (nt - 1);
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
      const std::size_t term = static_cast<std::size_t>(s) * cycle.size() / samples;
      std::vector<PointView> pts;
      for (int id : cycle.simplex(term)) pts.push_back(cycle.vertex(id));
      double phi = 0.0;
      try {
        phi = density_phi(sp, pts[0], simplex_frame(sp, pts), p.w, t);
      } catch (const DomainError&) {
        continue;  // degenerate simplex
      }
      rep.density_samples.push_back({t, phi});
      best = std::max(best, phi);
      rep.measured_C1 = std::max(rep.measured_C1, phi * std::exp(rep.rho_star * t));
    }
    if (best > 0.0) {
      ts.push_back(t);
      logs.push_back(std::log(best));
    }
  }
  if (ts.size() >= 2) {
    const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / ts.size();
    const double ml = std::accumulate(logs.begin(), logs.end(), 0.0) / logs.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sxy += (ts[i] - mt) * (logs[i] - ml);
      sxx += (ts[i] - mt) * (ts[i] - mt);
    }
    rep.measured_decay = -sxy / sxx;
  }
}

}  // namespace detail

struct ConeFill {
  SimplicialChain filling;
  ConeReport report;
};

/// Cone over the cycle down to the cap horosphere plus a cap inside it; the
/// boundary of the filling is the cycle.
inline ConeFill cone_fill(const ProductSpace& sp, const SimplicialChain& cycle, const ConeParams& params) {
  ConeFill out;
  out.filling = SimplicialChain(cycle.k() + 1);
  detail::validate_cone_params(sp, params);
  if (!cycle.empty() && !is_cycle(cycle)) throw DomainError("cone_fill needs a cycle");
  out.report.cycle_volume = k_volume(sp, cycle);
  detail::density_report(sp, cycle, params, out.report);
  if (cycle.empty()) return out;
  auto parts = detail::build_cone(sp, cycle, params);
  out.report.level = parts.level;
  out.report.perturbed = parts.perturbed;
  SimplicialChain cap = params.cap_strategy == CapStrategy::LpFill ? detail::lp_cap(sp, parts.top)
                                                                    : detail::flat_cap(sp, parts.top, params);
  out.report.cone_volume = k_volume(sp, parts.cone);
  out.report.cap_volume = k_volume(sp, cap);
  out.report.total_volume = out.report.cone_volume + out.report.cap_volume;
  out.filling = parts.cone + cap;
  return out;
}

/// Largest observed d(tau(x,s), tau(y,t)) / sqrt(d(x,y)^2 + (s-t)^2) over
/// random pairs of points on the cycle's simplices and times in [0, t_range].
inline double verify_three_lipschitz(const ProductSpace& sp, const SimplicialChain& cycle, const BoundaryDirection& w,
                                     long sample_count, std::uint64_t seed = 1, double t_range = 10.0) {
  validate_direction(sp, w);
  if (cycle.empty()) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cycle.size() - 1);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto sample_point = [&]() {
    const auto s = cycle.simplex(pick(rng));
    SpacePoint p = cycle.vertex(s[0]);
    // random point on the geodesic simplex by iterated geodesic interpolation
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double u = std::pow(uni(rng), 1.0 / static_cast<double>(i));
      p = geodesic_point(sp, cycle.vertex(s[i]), p, u);
    }
    return p;
  };
  double worst = 0.0;
  for (long n = 0; n < sample_count; ++n) {
    const SpacePoint x = sample_point();
    // mix far pairs with nearby pairs on the same simplex
    const SpacePoint y = (n % 2 == 0) ? sample_point() : geodesic_point(sp, x, sample_point(), 0.01 * uni(rng));
    const double s = t_range * uni(rng), t = (n % 3 == 0) ? s + 0.1 * uni(rng) : t_range * uni(rng);
    const double base = std::hypot(distance(sp, x, y), s - t);
    if (base < 1e-12) continue;
    const double top = distance(sp, asymptotic_ray(sp, x, w, s), asymptotic_ray(sp, y, w, t));
    worst = std::max(worst, top / base);
  }
  return worst;
}

}  // namespace dehnfill
