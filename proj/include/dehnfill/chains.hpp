#pragma once

// Integer-weighted chains of geodesic simplices in a ProductSpace.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dehnfill/errors.hpp"
#include "dehnfill/modelspace.hpp"

namespace dehnfill {

/// A k-chain: a vertex table plus terms coeff * [v_0, ..., v_k]. Terms are kept
/// in canonical form (ascending vertex ids, sign absorbed into the coefficient,
/// like terms combined, degenerate simplices with repeated ids dropped).
class SimplicialChain {
 public:
  SimplicialChain() = default;
  explicit SimplicialChain(int k) : k_(k) {
    if (k < 0) throw DomainError("chain dimension must be nonnegative");
  }

  int k() const { return k_; }
  int width() const { return k_ + 1; }
  std::size_t size() const { return coeffs_.size(); }
  bool empty() const { return coeffs_.empty(); }

  const std::vector<SpacePoint>& vertices() const { return vertices_; }
  const SpacePoint& vertex(int id) const { return vertices_.at(static_cast<std::size_t>(id)); }
  std::span<const int> simplex(std::size_t i) const { return {ids_.data() + i * width(), static_cast<std::size_t>(width())}; }
  long long coeff(std::size_t i) const { return coeffs_[i]; }

  int add_vertex(SpacePoint p) {
    vertices_.push_back(std::move(p));
    return static_cast<int>(vertices_.size()) - 1;
  }
  void set_vertices(std::vector<SpacePoint> v) { vertices_ = std::move(v); }

  /// Appends a raw term; call normalize() once all terms are in.
  void add_term(std::span<const int> ids, long long c) {
    if (static_cast<int>(ids.size()) != width()) throw DomainError("simplex has wrong vertex count");
    if (c == 0) return;
    ids_.insert(ids_.end(), ids.begin(), ids.end());
    coeffs_.push_back(c);
  }
  void add_term(std::initializer_list<int> ids, long long c) { add_term(std::span<const int>(ids.begin(), ids.size()), c); }

  void normalize() {
    const int w = width();
    std::vector<int> keep_ids;
    std::vector<long long> keep_c;
    std::vector<int> buf(w);
    for (std::size_t t = 0; t < coeffs_.size(); ++t) {
      std::copy_n(ids_.begin() + t * w, w, buf.begin());
      long long c = coeffs_[t];
      // insertion sort tracking parity
      bool degenerate = false;
      for (int i = 1; i < w; ++i)
        for (int j = i; j > 0 && buf[j - 1] >= buf[j]; --j) {
          if (buf[j - 1] == buf[j]) {
            degenerate = true;
            break;
          }
          std::swap(buf[j - 1], buf[j]);
          c = -c;
        }
      if (degenerate || c == 0) continue;
      keep_ids.insert(keep_ids.end(), buf.begin(), buf.end());
      keep_c.push_back(c);
    }
    std::vector<std::size_t> order(keep_c.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(keep_ids.begin() + a * w, keep_ids.begin() + (a + 1) * w,
                                          keep_ids.begin() + b * w, keep_ids.begin() + (b + 1) * w);
    });
    ids_.clear();
    coeffs_.clear();
    for (std::size_t r = 0; r < order.size();) {
      const std::size_t a = order[r];
      long long c = 0;
      std::size_t s = r;
      while (s < order.size() && std::equal(keep_ids.begin() + a * w, keep_ids.begin() + (a + 1) * w,
                                            keep_ids.begin() + order[s] * w)) {
        c += keep_c[order[s]];
        ++s;
      }
      if (c != 0) {
        ids_.insert(ids_.end(), keep_ids.begin() + a * w, keep_ids.begin() + (a + 1) * w);
        coeffs_.push_back(c);
      }
      r = s;
    }
  }

  /// Merges vertices with bit-identical coordinates and drops unused ones.
  void weld() {
    std::map<std::vector<double>, int> key;
    std::vector<int> remap(vertices_.size(), -1);
    std::vector<bool> used(vertices_.size(), false);
    for (int id : ids_) used[id] = true;
    std::vector<SpacePoint> nv;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (!used[i]) continue;
      auto [it, fresh] = key.emplace(vertices_[i].coords, static_cast<int>(nv.size()));
      if (fresh) nv.push_back(vertices_[i]);
      remap[i] = it->second;
    }
    for (int& id : ids_) id = remap[id];
    vertices_ = std::move(nv);
    normalize();
  }

  SimplicialChain scaled(long long s) const {
    SimplicialChain out(*this);
    if (s == 0) {
      out.ids_.clear();
      out.coeffs_.clear();
      return out;
    }
    for (auto& c : out.coeffs_) c *= s;
    return out;
  }

  /// this + s * other, vertices matched by coordinates.
  SimplicialChain plus(const SimplicialChain& other, long long s = 1) const {
    if (other.k_ != k_ && !other.empty() && !empty()) throw DomainError("cannot add chains of different dimension");
    SimplicialChain out(empty() ? other.k_ : k_);
    out.vertices_ = vertices_;
    out.ids_ = ids_;
    out.coeffs_ = coeffs_;
    const int base = static_cast<int>(vertices_.size());
    out.vertices_.insert(out.vertices_.end(), other.vertices_.begin(), other.vertices_.end());
    for (int id : other.ids_) out.ids_.push_back(id + base);
    for (long long c : other.coeffs_) out.coeffs_.push_back(c * s);
    out.weld();
    return out;
  }

  SimplicialChain operator-() const { return scaled(-1); }
  friend SimplicialChain operator+(const SimplicialChain& a, const SimplicialChain& b) { return a.plus(b, 1); }
  friend SimplicialChain operator-(const SimplicialChain& a, const SimplicialChain& b) { return a.plus(b, -1); }

 private:
  int k_ = 0;
  std::vector<SpacePoint> vertices_;
  std::vector<int> ids_;
  std::vector<long long> coeffs_;
};

/// Same chain as geometric objects (after welding by coordinates).
inline bool equivalent(const SimplicialChain& a, const SimplicialChain& b) {
  if (a.empty() && b.empty()) return true;
  return (a - b).empty();
}

inline SimplicialChain boundary(const SimplicialChain& c) {
  if (c.k() == 0) throw DomainError("boundary of a 0-chain is undefined");
  SimplicialChain out(c.k() - 1);
  out.set_vertices(c.vertices());
  std::vector<int> face(c.k());
  for (std::size_t t = 0; t < c.size(); ++t) {
    const auto s = c.simplex(t);
    for (int i = 0; i <= c.k(); ++i) {
      int m = 0;
      for (int j = 0; j <= c.k(); ++j)
        if (j != i) face[m++] = s[j];
      out.add_term(face, (i % 2 ? -1 : 1) * c.coeff(t));
    }
  }
  out.normalize();
  return out;
}

/// For k = 0 a cycle is a chain with zero total coefficient.
inline bool is_cycle(const SimplicialChain& c) {
  if (c.k() == 0) {
    long long s = 0;
    for (std::size_t t = 0; t < c.size(); ++t) s += c.coeff(t);
    return s == 0;
  }
  return boundary(c).empty();
}

/// Volume of the Euclidean simplex with the same pairwise distances, from the
/// Cayley-Menger determinant in Gram form.
inline double simplex_volume_from_distances(const Eigen::MatrixXd& d) {
  const Eigen::Index k = d.rows() - 1;
  if (k == 0) return 1.0;
  if (k == 1) return d(0, 1);
  Eigen::MatrixXd g(k, k);
  for (Eigen::Index i = 1; i <= k; ++i)
    for (Eigen::Index j = 1; j <= k; ++j)
      g(i - 1, j - 1) = 0.5 * (d(0, i) * d(0, i) + d(0, j) * d(0, j) - d(i, j) * d(i, j));
  const double det = g.determinant();
  double fact = 1.0;
  for (Eigen::Index i = 2; i <= k; ++i) fact *= static_cast<double>(i);
  return det > 0.0 ? std::sqrt(det) / fact : 0.0;
}

inline double simplex_volume(const ProductSpace& sp, std::span<const PointView> pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = distance_unchecked(sp, pts[i], pts[j]);
  return simplex_volume_from_distances(d);
}

inline double term_volume(const ProductSpace& sp, const SimplicialChain& c, std::size_t t) {
  const auto s = c.simplex(t);
  std::vector<PointView> pts;
  for (int id : s) pts.push_back(c.vertex(id));
  return simplex_volume(sp, pts);
}

/// sum |coeff| * vol(simplex).
inline double k_volume(const ProductSpace& sp, const SimplicialChain& c) {
  for (const auto& v : c.vertices()) sp.require(v);
  double v = 0.0;
  for (std::size_t t = 0; t < c.size(); ++t) v += static_cast<double>(std::llabs(c.coeff(t))) * term_volume(sp, c, t);
  return v;
}

/// Longest edge over all simplices.
inline double mesh_size(const ProductSpace& sp, const SimplicialChain& c) {
  double m = 0.0;
  for (std::size_t t = 0; t < c.size(); ++t) {
    const auto s = c.simplex(t);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j)
        m = std::max(m, distance_unchecked(sp, c.vertex(s[i]), c.vertex(s[j])));
  }
  return m;
}

namespace detail {

// One child of the edgewise subdivision: vertex i of the child is the midpoint
// of parent vertices (a[i], b[i]) (a == b for an original vertex).
struct ChildTemplate {
  std::vector<std::pair<int, int>> verts;
  int sign = 1;
};

inline std::vector<ChildTemplate> edgewise_templates(int k) {
  std::vector<ChildTemplate> out;
  if (k == 0) {
    out.push_back({{{0, 0}}, 1});
    return out;
  }
  std::vector<int> perm(k);
  auto inside = [k](const std::vector<int>& x) {
    if (x[0] > 2 || x[k - 1] < 0) return false;
    for (int i = 0; i + 1 < k; ++i)
      if (x[i] < x[i + 1]) return false;
    return true;
  };
  auto to_pair = [k](const std::vector<int>& x) {
    std::vector<int> nz;
    std::vector<int> lam(k + 1);
    lam[0] = 2 - x[0];
    for (int i = 1; i < k; ++i) lam[i] = x[i - 1] - x[i];
    lam[k] = x[k - 1];
    for (int i = 0; i <= k; ++i)
      for (int r = 0; r < lam[i]; ++r) nz.push_back(i);
    return std::make_pair(nz[0], nz[1]);
  };
  for (int mask = 0; mask < (1 << k); ++mask) {
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::vector<std::vector<int>> path;
      std::vector<int> x(k);
      for (int i = 0; i < k; ++i) x[i] = (mask >> i) & 1;
      path.push_back(x);
      for (int i = 0; i < k; ++i) {
        x[perm[i]] += 1;
        path.push_back(x);
      }
      if (!std::all_of(path.begin(), path.end(), inside)) continue;
      Eigen::MatrixXd m(k, k);
      for (int i = 1; i <= k; ++i)
        for (int j = 0; j < k; ++j) m(i - 1, j) = path[i][j] - path[0][j];
      ChildTemplate ct;
      ct.sign = m.determinant() > 0 ? 1 : -1;
      for (const auto& p : path) ct.verts.push_back(to_pair(p));
      out.push_back(std::move(ct));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  if (out.size() != (1u << k)) throw std::logic_error("edgewise subdivision template has wrong size");
  return out;
}

}  // namespace detail

/// One level of edgewise subdivision; new vertices are produced by
/// midpoint(p, q) on the ordered pair (lower id, higher id).
template <typename Midpoint>
SimplicialChain refine_once(const SimplicialChain& c, Midpoint&& midpoint) {
  SimplicialChain out(c.k());
  out.set_vertices(c.vertices());
  if (c.k() == 0) {
    for (std::size_t t = 0; t < c.size(); ++t) out.add_term(c.simplex(t), c.coeff(t));
    out.normalize();
    return out;
  }
  static thread_local std::map<int, std::vector<detail::ChildTemplate>> cache;
  auto it = cache.find(c.k());
  if (it == cache.end()) it = cache.emplace(c.k(), detail::edgewise_templates(c.k())).first;
  const auto& templates = it->second;
  std::map<std::pair<int, int>, int> mids;
  std::vector<int> child(c.width());
  for (std::size_t t = 0; t < c.size(); ++t) {
    const auto s = c.simplex(t);
    for (const auto& ct : templates) {
      for (int i = 0; i < c.width(); ++i) {
        const auto [a, b] = ct.verts[i];
        if (a == b) {
          child[i] = s[a];
          continue;
        }
        const std::pair<int, int> key{std::min(s[a], s[b]), std::max(s[a], s[b])};
        auto m = mids.find(key);
        if (m == mids.end()) {
          const int id = out.add_vertex(midpoint(c.vertex(key.first), c.vertex(key.second)));
          m = mids.emplace(key, id).first;
        }
        child[i] = m->second;
      }
      out.add_term(child, ct.sign * c.coeff(t));
    }
  }
  out.normalize();
  return out;
}

/// Edgewise subdivision by geodesic midpoints, applied `levels` times.
inline SimplicialChain refine(const ProductSpace& sp, const SimplicialChain& c, int levels) {
  if (levels < 0) throw DomainError("refinement levels must be nonnegative");
  SimplicialChain out = c;
  for (int l = 0; l < levels; ++l)
    out = refine_once(out, [&](PointView p, PointView q) { return geodesic_point(sp, p, q, 0.5); });
  return out;
}

/// Join with an apex: sum coeff * [apex, sigma]. For a cycle z, the boundary
/// of the result is z.
inline SimplicialChain cone_from_apex(const SimplicialChain& c, const SpacePoint& apex) {
  SimplicialChain out(c.k() + 1);
  out.set_vertices(c.vertices());
  const int a = out.add_vertex(apex);
  std::vector<int> s(c.width() + 1);
  for (std::size_t t = 0; t < c.size(); ++t) {
    s[0] = a;
    const auto f = c.simplex(t);
    std::copy(f.begin(), f.end(), s.begin() + 1);
    out.add_term(s, c.coeff(t));
  }
  out.normalize();
  out.weld();
  return out;
}

// ---------------------------------------------------------------------------
// Sphere and disc generators.

namespace detail {

/// Triangulated 2-sphere from latitude rings. Ring j (1..m-1) has counts[j-1]
/// points; point(j, i, n) returns the i-th of n points on ring j, point(0,0,1)
/// and point(m,0,1) the poles. Consistently oriented.
template <typename PointFn>
SimplicialChain ring_sphere(int m, const std::vector<int>& counts, PointFn&& point) {
  SimplicialChain c(2);
  const int north = c.add_vertex(point(0, 0, 1));
  std::vector<std::vector<int>> rings;
  for (int j = 1; j < m; ++j) {
    std::vector<int> r;
    for (int i = 0; i < counts[j - 1]; ++i) r.push_back(c.add_vertex(point(j, i, counts[j - 1])));
    rings.push_back(std::move(r));
  }
  const int south = c.add_vertex(point(m, 0, 1));
  const auto& first = rings.front();
  const int n0 = static_cast<int>(first.size());
  for (int i = 0; i < n0; ++i) c.add_term({north, first[(i + 1) % n0], first[i]}, 1);
  for (std::size_t j = 0; j + 1 < rings.size(); ++j) {
    const auto& a = rings[j];
    const auto& b = rings[j + 1];
    const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
    int ia = 0, ib = 0;
    while (ia < na || ib < nb) {
      const double anext = static_cast<double>(ia + 1) / na, bnext = static_cast<double>(ib + 1) / nb;
      if (ib == nb || (ia < na && anext <= bnext)) {
        c.add_term({a[ia % na], a[(ia + 1) % na], b[ib % nb]}, 1);
        ++ia;
      } else {
        c.add_term({a[ia % na], b[(ib + 1) % nb], b[ib % nb]}, 1);
        ++ib;
      }
    }
  }
  const auto& last = rings.back();
  const int nl = static_cast<int>(last.size());
  for (int i = 0; i < nl; ++i) c.add_term({south, last[i], last[(i + 1) % nl]}, 1);
  c.normalize();
  return c;
}

/// Triangulated disc from concentric rings around a centre; point(0,0,1) is
/// the centre, point(j, i, n) the i-th of n points on ring j (1..m).
/// Positively oriented in (radius, angle); the boundary is ring m traversed in
/// increasing angle.
template <typename PointFn>
SimplicialChain ring_disc(int m, const std::vector<int>& counts, PointFn&& point) {
  SimplicialChain c(2);
  const int centre = c.add_vertex(point(0, 0, 1));
  std::vector<std::vector<int>> rings;
  for (int j = 1; j <= m; ++j) {
    std::vector<int> r;
    for (int i = 0; i < counts[j - 1]; ++i) r.push_back(c.add_vertex(point(j, i, counts[j - 1])));
    rings.push_back(std::move(r));
  }
  const auto& first = rings.front();
  const int n0 = static_cast<int>(first.size());
  for (int i = 0; i < n0; ++i) c.add_term({centre, first[i], first[(i + 1) % n0]}, 1);
  for (std::size_t j = 0; j + 1 < rings.size(); ++j) {
    const auto& a = rings[j];
    const auto& b = rings[j + 1];
    const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
    int ia = 0, ib = 0;
    while (ia < na || ib < nb) {
      const double anext = static_cast<double>(ia + 1) / na, bnext = static_cast<double>(ib + 1) / nb;
      if (ib == nb || (ia < na && anext <= bnext)) {
        c.add_term({a[ia % na], b[ib % nb], a[(ia + 1) % na]}, 1);
        ++ia;
      } else {
        c.add_term({a[ia % na], b[ib % nb], b[(ib + 1) % nb]}, 1);
        ++ib;
      }
    }
  }
  c.normalize();
  return c;
}

/// Closed polygon through n points, point(i, n).
template <typename PointFn>
SimplicialChain polygon(int n, PointFn&& point) {
  SimplicialChain c(1);
  for (int i = 0; i < n; ++i) c.add_vertex(point(i, n));
  for (int i = 0; i < n; ++i) c.add_term({i, (i + 1) % n}, 1);
  c.normalize();
  return c;
}

/// Boundary of the cross-polytope in R^{k+1}, as a k-cycle of unit vectors.
inline SimplicialChain cross_polytope(int k) {
  const int n = k + 1;
  SimplicialChain c(k);
  for (int i = 0; i < n; ++i)
    for (int s : {1, -1}) {
      std::vector<double> v(n, 0.0);
      v[i] = s;
      c.add_vertex(SpacePoint(std::move(v)));
    }
  // facet for sign pattern: vertices s_i e_i; orientation sign = prod s_i.
  std::vector<int> f(n);
  for (int mask = 0; mask < (1 << n); ++mask) {
    int sign = 1;
    for (int i = 0; i < n; ++i) {
      const bool neg = (mask >> i) & 1;
      f[i] = 2 * i + (neg ? 1 : 0);
      if (neg) sign = -sign;
    }
    c.add_term(f, sign);
  }
  c.normalize();
  return c;
}

/// Unit k-sphere in R^{k+1} (as a chain in E^{k+1}), refined until every edge
/// angle is at most max_angle.
inline SimplicialChain unit_sphere_chain(int k, double max_angle) {
  const ProductSpace e(std::vector<std::pair<FactorKind, int>>{{FactorKind::Euclidean, k + 1}});
  SimplicialChain c = cross_polytope(k);
  auto normalized_mid = [](PointView p, PointView q) {
    std::vector<double> m(p.size());
    double n2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = p[i] + q[i];
      n2 += m[i] * m[i];
    }
    for (double& x : m) x /= std::sqrt(n2);
    return SpacePoint(std::move(m));
  };
  while (mesh_size(e, c) > max_angle) c = refine_once(c, normalized_mid);
  return c;
}

template <typename MapFn>
SimplicialChain map_vertices(const SimplicialChain& c, MapFn&& f) {
  SimplicialChain out(c);
  std::vector<SpacePoint> v;
  v.reserve(c.vertices().size());
  for (const auto& p : c.vertices()) v.push_back(f(p));
  out.set_vertices(std::move(v));
  return out;
}

inline int ring_count(double circumference, double mesh, int minimum = 3) {
  return std::max(minimum, static_cast<int>(std::ceil(circumference / mesh)));
}

}  // namespace detail

/// Round k-sphere of the given radius centred at the flat's origin, lying in
/// the span of its first k+1 flat coordinates.
inline SimplicialChain round_sphere_in_flat(const ProductSpace& sp, const FlatSpec& flat, int k, double radius,
                                            double mesh) {
  validate_flat(sp, flat);
  const int fd = flat.dimension();
  if (k < 0 || k + 1 > fd)
    throw DomainError("a round " + std::to_string(k) + "-sphere needs a flat of dimension >= " + std::to_string(k + 1));
  if (!(radius > 0.0)) throw DomainError("radius must be positive");
  if (!(mesh > 0.0)) throw DomainError("mesh must be positive");
  auto to_space = [&](const std::vector<double>& u) {
    std::vector<double> full(fd, 0.0);
    std::copy(u.begin(), u.end(), full.begin());
    return flat_point(sp, flat, full);
  };
  if (k == 0) {
    SimplicialChain c(0);
    const int a = c.add_vertex(to_space({radius}));
    const int b = c.add_vertex(to_space({-radius}));
    c.add_term({a}, 1);
    c.add_term({b}, -1);
    c.normalize();
    return c;
  }
  if (k == 1) {
    const int n = detail::ring_count(2.0 * std::numbers::pi * radius, mesh, 8);
    return detail::polygon(n, [&](int i, int nn) {
      const double a = 2.0 * std::numbers::pi * i / nn;
      return to_space({radius * std::cos(a), radius * std::sin(a)});
    });
  }
  if (k == 2) {
    const int m = std::max(4, static_cast<int>(std::ceil(std::numbers::pi * radius / mesh)));
    std::vector<int> counts;
    for (int j = 1; j < m; ++j)
      counts.push_back(detail::ring_count(2.0 * std::numbers::pi * radius * std::sin(std::numbers::pi * j / m), mesh));
    return detail::ring_sphere(m, counts, [&](int j, int i, int n) {
      const double th = std::numbers::pi * j / m, ps = 2.0 * std::numbers::pi * i / n;
      return to_space({radius * std::sin(th) * std::cos(ps), radius * std::sin(th) * std::sin(ps), radius * std::cos(th)});
    });
  }
  const SimplicialChain unit = detail::unit_sphere_chain(k, mesh / radius);
  return detail::map_vertices(unit, [&](const SpacePoint& p) {
    std::vector<double> u(p.coords);
    for (double& x : u) x *= radius;
    return to_space(u);
  });
}

namespace detail {

/// W = (vertical 2-plane of the first hyperbolic factor) x Q, with Q spanned by
/// the first q flat directions of the remaining factors. Returns a map from
/// (H^2 polar radius rho, angle psi, Q coordinates) to the space.
struct Lemma2Frame {
  const ProductSpace* sp;
  std::size_t hfactor;
  FlatSpec rest;  // flat through the basepoint in the other factors
  int q;

  SpacePoint operator()(double rho, double psi, std::span<const double> s) const {
    std::vector<double> flat_u(rest.dimension(), 0.0);
    std::copy(s.begin(), s.end(), flat_u.begin());
    SpacePoint base = rest.dimension() > 0 ? flat_point(*sp, rest, flat_u) : sp->basepoint();
    const auto& f = sp->factor(hfactor);
    std::vector<double> v(sp->dim(), 0.0);
    v[f.offset] = rho * std::cos(psi);
    v[f.height_index()] = rho * std::sin(psi);
    const SpacePoint moved = exp_map(*sp, sp->basepoint(), v);
    for (int i = f.offset; i < f.offset + f.dim; ++i) base[i] = moved[i];
    return base;
  }
};

inline Lemma2Frame lemma2_frame(const ProductSpace& sp, int q) {
  const auto h = sp.first_hyperbolic();
  if (!h) throw DomainError("the sphere family needs a hyperbolic factor");
  FlatSpec rest = maximal_flat(sp);
  // the first hyperbolic factor is handled separately: pin it to the basepoint
  FlatFactor pin;
  pin.kind = FlatFactor::Kind::Point;
  const auto& f = sp.factor(*h);
  pin.anchor.assign(sp.basepoint().coords.begin() + f.offset, sp.basepoint().coords.begin() + f.offset + f.dim);
  rest.factors[*h] = pin;
  if (rest.dimension() < q)
    throw DomainError("need " + std::to_string(q) + " flat directions outside the hyperbolic factor, have " +
                      std::to_string(rest.dimension()));
  return {&sp, *h, rest, q};
}

}  // namespace detail

/// Cycle approximating S_R(basepoint) intersected with W = H^2 x Q, where Q is a
/// (k-1)-dimensional flat through the basepoint in the remaining factors.
inline SimplicialChain lemma2_sphere(const ProductSpace& sp, double R, int k, double mesh) {
  if (k < 1) throw DomainError("sphere dimension must be >= 1");
  if (!(R > 0.0)) throw DomainError("radius must be positive");
  if (!(mesh > 0.0)) throw DomainError("mesh must be positive");
  const auto frame = detail::lemma2_frame(sp, k - 1);
  const double tau = 2.0 * std::numbers::pi;
  if (k == 1) {
    const int n = detail::ring_count(tau * std::sinh(R), mesh, 8);
    return detail::polygon(n, [&](int i, int nn) { return frame(R, tau * i / nn, {}); });
  }
  if (k == 2) {
    const int m = std::max(4, static_cast<int>(std::ceil(std::numbers::pi * R / mesh)));
    std::vector<int> counts;
    for (int j = 1; j < m; ++j) counts.push_back(detail::ring_count(tau * std::sinh(R * std::sin(std::numbers::pi * j / m)), mesh));
    return detail::ring_sphere(m, counts, [&](int j, int i, int n) {
      const double th = std::numbers::pi * j / m;
      const double s[1] = {R * std::cos(th)};
      return frame(R * std::sin(th), tau * i / n, s);
    });
  }
  // general k: refine the unit sphere until the mapped edges are short enough
  const ProductSpace e(std::vector<std::pair<FactorKind, int>>{{FactorKind::Euclidean, k + 1}});
  auto to_space = [&](const SpacePoint& u) {
    const double r2 = std::hypot(u[0], u[1]);
    std::vector<double> s(u.coords.begin() + 2, u.coords.end());
    for (double& x : s) x *= R;
    return frame(R * r2, std::atan2(u[1], u[0]), s);
  };
  SimplicialChain unit = detail::unit_sphere_chain(k, std::min(1.0, mesh / R));
  for (;;) {
    SimplicialChain mapped = detail::map_vertices(unit, to_space);
    if (mesh_size(sp, mapped) <= mesh || unit.size() > 2000000) return mapped;
    unit = refine_once(unit, [](PointView p, PointView q) {
      std::vector<double> m(p.size());
      double n2 = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = p[i] + q[i];
        n2 += m[i] * m[i];
      }
      for (double& x : m) x /= std::sqrt(n2);
      return SpacePoint(std::move(m));
    });
  }
}

/// Geodesic disc of radius R about the basepoint in the vertical 2-plane of
/// the first hyperbolic factor; its boundary is lemma2_sphere(sp, R, 1, mesh).
inline SimplicialChain lemma2_disc(const ProductSpace& sp, double R, double mesh) {
  if (!(R > 0.0) || !(mesh > 0.0)) throw DomainError("radius and mesh must be positive");
  const auto frame = detail::lemma2_frame(sp, 0);
  const double tau = 2.0 * std::numbers::pi;
  const int m = std::max(2, static_cast<int>(std::ceil(R / mesh)));
  std::vector<int> counts;
  for (int j = 1; j < m; ++j) counts.push_back(detail::ring_count(tau * std::sinh(R * j / m), mesh, 6));
  counts.push_back(detail::ring_count(tau * std::sinh(R), mesh, 8));
  return detail::ring_disc(m, counts, [&](int j, int i, int n) {
    if (j == 0) return frame(0.0, 0.0, {});
    return frame(R * j / m, tau * i / n, {});
  });
}

/// Flat disc bounded by round_sphere_in_flat(sp, flat, 1, radius, mesh): the
/// cone from the flat's origin.
inline SimplicialChain flat_disc(const ProductSpace& sp, const FlatSpec& flat, double radius, double mesh) {
  const SimplicialChain circle = round_sphere_in_flat(sp, flat, 1, radius, mesh);
  std::vector<double> zero(flat.dimension(), 0.0);
  return cone_from_apex(circle, flat_point(sp, flat, zero));
}

/// Fermi band {(s, r) : 0 <= s <= length, |r| <= delta} around the vertical
/// geodesic x = 0 of an H^2 factor (s arclength from the basepoint height,
/// r signed distance); point (e^s tanh r, e^s sech r).
inline SimplicialChain tube_band(const ProductSpace& sp, double length, double delta, double mesh) {
  const auto h = sp.first_hyperbolic();
  if (!h || sp.factor(*h).dim != 2) throw DomainError("tube needs an H^2 factor");
  if (!(length > 0.0) || !(delta > 0.0) || !(mesh > 0.0)) throw DomainError("tube parameters must be positive");
  const auto& f = sp.factor(*h);
  const double y0 = sp.basepoint()[f.height_index()];
  const double x0 = sp.basepoint()[f.offset];
  // rows along s need spacing ~ mesh / cosh(delta) at the outer edge
  const int ns = std::max(1, static_cast<int>(std::ceil(length * std::cosh(delta) / mesh)));
  const int nr = std::max(2, static_cast<int>(std::ceil(2.0 * delta / mesh)));
  SimplicialChain c(2);
  for (int i = 0; i <= ns; ++i)
    for (int j = 0; j <= nr; ++j) {
      const double s = length * i / ns, r = -delta + 2.0 * delta * j / nr;
      SpacePoint p = sp.basepoint();
      p[f.offset] = x0 + y0 * std::exp(s) * std::tanh(r);
      p[f.height_index()] = y0 * std::exp(s) / std::cosh(r);
      c.add_vertex(std::move(p));
    }
  auto id = [nr](int i, int j) { return i * (nr + 1) + j; };
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nr; ++j) {
      c.add_term({id(i, j), id(i + 1, j), id(i + 1, j + 1)}, 1);
      c.add_term({id(i, j), id(i + 1, j + 1), id(i, j + 1)}, 1);
    }
  c.normalize();
  return c;
}

// ---------------------------------------------------------------------------
// Slicing.

using Functional = std::function<double(PointView)>;

inline Functional busemann_functional(const ProductSpace& sp, const BoundaryDirection& w) {
  return [&sp, w](PointView p) { return busemann(sp, w, p); };
}

inline Functional flat_coordinate_functional(const ProductSpace& sp, const FlatSpec& flat, int index) {
  if (index < 0 || index >= flat.dimension()) throw DomainError("flat coordinate index out of range");
  return [&sp, flat, index](PointView p) { return flat_coordinates(sp, flat, p)[index]; };
}

/// Terms whose (average vertex) functional value lies in [lo, hi]. Simplices
/// straddling the interval are subdivided until the functional varies by less
/// than (hi - lo) / 8 across each, up to max_depth levels.
inline SimplicialChain clip_chain(const ProductSpace& sp, const SimplicialChain& c, const Functional& f, double lo,
                                  double hi, int max_depth = 8) {
  if (!(lo <= hi)) throw DomainError("empty clipping interval");
  const double tol = std::isfinite(hi - lo) ? (hi - lo) / 8.0 : std::numeric_limits<double>::infinity();
  SimplicialChain out(c.k());
  std::map<std::vector<double>, int> vid;
  auto vertex_id = [&](const SpacePoint& p) {
    auto [it, fresh] = vid.emplace(p.coords, 0);
    if (fresh) it->second = out.add_vertex(p);
    return it->second;
  };
  struct Item {
    std::vector<SpacePoint> pts;
    long long coeff;
    int depth;
  };
  const auto templates = c.k() > 0 ? detail::edgewise_templates(c.k()) : std::vector<detail::ChildTemplate>{};
  std::vector<Item> stack;
  for (std::size_t t = 0; t < c.size(); ++t) {
    Item it{{}, c.coeff(t), 0};
    for (int id : c.simplex(t)) it.pts.push_back(c.vertex(id));
    stack.push_back(std::move(it));
  }
  std::vector<int> ids(c.width());
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    double mn = std::numeric_limits<double>::infinity(), mx = -mn, avg = 0.0;
    for (const auto& p : it.pts) {
      const double v = f(p);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      avg += v;
    }
    avg /= static_cast<double>(it.pts.size());
    if (mx < lo || mn > hi) continue;
    const bool straddles = mn < lo || mx > hi;
    if (straddles && mx - mn > tol && it.depth < max_depth && c.k() > 0) {
      for (const auto& ct : templates) {
        Item child{{}, ct.sign * it.coeff, it.depth + 1};
        for (auto [a, b] : ct.verts)
          child.pts.push_back(a == b ? it.pts[a] : geodesic_point(sp, it.pts[a], it.pts[b], 0.5));
        stack.push_back(std::move(child));
      }
      continue;
    }
    if (avg < lo || avg > hi) continue;
    for (std::size_t i = 0; i < it.pts.size(); ++i) ids[i] = vertex_id(it.pts[i]);
    out.add_term(ids, it.coeff);
  }
  out.normalize();
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization.
//
//   # dehnfill chain
//   space <spec>
//   k <k>
//   terms <n>
//   <coeff> [c_1 c_2 ...] [c_1 c_2 ...] ...     (one line per simplex)

inline void write_chain(std::ostream& out, const ProductSpace& sp, const SimplicialChain& c) {
  out << "# dehnfill chain\n";
  out << "space " << sp.spec() << "\n";
  out << "k " << c.k() << "\n";
  out << "terms " << c.size() << "\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t t = 0; t < c.size(); ++t) {
    line.str("");
    line << c.coeff(t);
    for (int id : c.simplex(t)) {
      line << " [";
      const auto& p = c.vertex(id);
      for (std::size_t i = 0; i < p.size(); ++i) line << (i ? " " : "") << p[i];
      line << "]";
    }
    out << line.str() << "\n";
  }
}

struct ChainFile {
  ProductSpace space;
  SimplicialChain chain;
};

inline ChainFile read_chain(std::istream& in) {
  std::string line, spec;
  int k = -1;
  long long n = -1;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw DomainError("chain file line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "space") {
      std::getline(ls >> std::ws, spec);
    } else if (key == "k") {
      if (!(ls >> k)) fail("bad dimension");
    } else if (key == "terms") {
      if (!(ls >> n)) fail("bad term count");
      break;
    } else {
      fail("unexpected header key '" + key + "'");
    }
  }
  if (spec.empty() || k < 0 || n < 0) fail("incomplete header");
  ChainFile f{ProductSpace::parse(spec), SimplicialChain(k)};
  std::map<std::vector<double>, int> vid;
  std::vector<int> ids;
  for (long long t = 0; t < n; ++t) {
    if (!std::getline(in, line)) fail("missing terms");
    ++lineno;
    std::istringstream ls(line);
    long long c;
    if (!(ls >> c)) fail("bad coefficient");
    ids.clear();
    for (int v = 0; v <= k; ++v) {
      char ch;
      if (!(ls >> ch) || ch != '[') fail("expected '['");
      std::vector<double> x;
      std::string tok;
      while (ls >> tok) {
        const bool close = tok.back() == ']';
        if (close) tok.pop_back();
        if (!tok.empty()) {
          try {
            x.push_back(std::stod(tok));
          } catch (const std::exception&) {
            fail("bad coordinate '" + tok + "'");
          }
        }
        if (close) break;
      }
      if (x.size() != static_cast<std::size_t>(f.space.dim())) fail("vertex has wrong dimension");
      auto [it, fresh] = vid.emplace(x, 0);
      if (fresh) it->second = f.chain.add_vertex(SpacePoint(x));
      ids.push_back(it->second);
    }
    f.chain.add_term(ids, c);
  }
  f.chain.normalize();
  return f;
}

}  // namespace dehnfill
