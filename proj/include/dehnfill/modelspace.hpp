#pragma once

// Model CAT(0) spaces: metric products of real hyperbolic spaces (upper
// half-space charts, curvature -1) and Euclidean spaces, with optional
// horoball families removed.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dehnfill/errors.hpp"
#include "dehnfill/rootgeo.hpp"

namespace dehnfill {

using PointView = std::span<const double>;

/// Concatenated chart coordinates, one block per factor. A hyperbolic factor
/// H^d contributes d coordinates (d-1 horizontal, then the height).
struct SpacePoint {
  std::vector<double> coords;

  SpacePoint() = default;
  explicit SpacePoint(std::vector<double> c) : coords(std::move(c)) {}
  SpacePoint(std::initializer_list<double> c) : coords(c) {}
  explicit SpacePoint(PointView v) : coords(v.begin(), v.end()) {}

  operator PointView() const { return coords; }
  std::size_t size() const { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }
  double& operator[](std::size_t i) { return coords[i]; }
  bool operator==(const SpacePoint&) const = default;
};

enum class FactorKind { Hyperbolic, Euclidean };

struct Factor {
  FactorKind kind;
  int dim;
  int offset;  // first coordinate of this factor's block

  bool hyperbolic() const { return kind == FactorKind::Hyperbolic; }
  int height_index() const { return offset + dim - 1; }
};

// Per-factor boundary data of a direction at infinity.
struct VerticalInfinity {};                           // hyperbolic: the chart's point at infinity
struct FiniteBoundaryPoint { std::vector<double> xi; };  // hyperbolic: a point of the boundary plane
struct EuclideanDirection { std::vector<double> u; };    // Euclidean: unit direction
struct Inactive {};                                   // Euclidean factor not moved by the ray

using FactorDatum = std::variant<VerticalInfinity, FiniteBoundaryPoint, EuclideanDirection, Inactive>;

/// A point of the Tits boundary of the product: one boundary datum per factor
/// and per-factor speeds c_i with sum c_i^2 = 1.
struct BoundaryDirection {
  std::vector<FactorDatum> data;
  std::vector<double> speeds;
};

struct Horoball {
  BoundaryDirection direction;
  double level = 0.0;  // horoball = { busemann(direction, x) <= level }
};

struct HoroballFamily {
  std::vector<Horoball> entries;
  bool empty() const { return entries.empty(); }
};

class ProductSpace {
 public:
  ProductSpace() = default;

  /// Build from factor list "H<d>" / "E<d>". Basepoint: origin with unit heights.
  explicit ProductSpace(std::vector<std::pair<FactorKind, int>> factor_list, HoroballFamily horoballs = {}) {
    int off = 0;
    for (auto [kind, d] : factor_list) {
      if (kind == FactorKind::Hyperbolic && d < 2) throw DomainError("hyperbolic factor needs dimension >= 2");
      if (kind == FactorKind::Euclidean && d < 1) throw DomainError("Euclidean factor needs dimension >= 1");
      factors_.push_back({kind, d, off});
      off += d;
    }
    if (factors_.empty()) throw DomainError("space needs at least one factor");
    std::vector<double> b(off, 0.0);
    for (const auto& f : factors_)
      if (f.hyperbolic()) b[f.height_index()] = 1.0;
    basepoint_ = SpacePoint(std::move(b));
    horoballs_ = std::move(horoballs);
    spec_ = canonical_spec();
  }

  /// Grammar: factors joined by 'x' ("H2", "H2xH2", "H2xE1"), optionally
  /// followed by "neutered" and "level=<real>" (default level 0). Neutering
  /// removes the horoball {b <= level} centred at the chart's infinity of the
  /// first hyperbolic factor.
  static ProductSpace parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string product;
    if (!(in >> product)) throw DomainError("unresolvable space spec: empty");
    std::vector<std::pair<FactorKind, int>> list;
    std::size_t pos = 0;
    while (pos <= product.size()) {
      const std::size_t next = product.find('x', pos);
      const std::string tok = product.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      list.push_back(parse_factor(tok));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    bool neutered = false;
    std::optional<double> level;
    std::string tok;
    while (in >> tok) {
      if (tok == "neutered") {
        neutered = true;
      } else if (tok.starts_with("level=")) {
        try {
          std::size_t used = 0;
          level = std::stod(tok.substr(6), &used);
          if (used != tok.size() - 6) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw DomainError("unresolvable space spec: bad token '" + tok + "'");
        }
      } else {
        throw DomainError("unresolvable space spec: unknown token '" + tok + "'");
      }
    }
    if (level && !neutered) throw DomainError("unresolvable space spec: 'level=' requires 'neutered'");
    ProductSpace sp(list);
    if (neutered) {
      const auto h = sp.first_hyperbolic();
      if (!h) throw DomainError("unresolvable space spec: 'neutered' requires a hyperbolic factor");
      sp.horoballs_.entries.push_back({sp.vertical_direction(*h), level.value_or(0.0)});
      sp.spec_ = sp.canonical_spec();
    }
    return sp;
  }

  const std::vector<Factor>& factors() const { return factors_; }
  const Factor& factor(std::size_t i) const { return factors_.at(i); }
  const SpacePoint& basepoint() const { return basepoint_; }
  const HoroballFamily& horoballs() const { return horoballs_; }
  bool neutered() const { return !horoballs_.empty(); }
  const std::string& spec() const { return spec_; }

  int dim() const { return std::accumulate(factors_.begin(), factors_.end(), 0, [](int a, const Factor& f) { return a + f.dim; }); }
  int rank() const {
    int r = 0;
    for (const auto& f : factors_) r += f.hyperbolic() ? 1 : f.dim;
    return r;
  }
  int hyperbolic_count() const {
    return static_cast<int>(std::count_if(factors_.begin(), factors_.end(), [](const Factor& f) { return f.hyperbolic(); }));
  }
  std::vector<int> hyperbolic_dims() const {
    std::vector<int> d;
    for (const auto& f : factors_)
      if (f.hyperbolic()) d.push_back(f.dim);
    return d;
  }
  std::optional<std::size_t> first_hyperbolic() const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (factors_[i].hyperbolic()) return i;
    return std::nullopt;
  }

  /// Euclidean rank after neutering: a hyperbolic factor H^d whose horoballs
  /// are removed carries flats of dimension d-1 (its boundary horospheres).
  int effective_rank() const {
    int r = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const auto& f = factors_[i];
      if (!f.hyperbolic()) {
        r += f.dim;
      } else {
        r += neutered_factor(i) ? std::max(1, f.dim - 1) : 1;
      }
    }
    return r;
  }

  bool contains(PointView p) const {
    if (p.size() != static_cast<std::size_t>(dim())) return false;
    for (const auto& f : factors_)
      if (f.hyperbolic() && !(p[f.height_index()] > 0.0)) return false;
    for (double v : p)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void require(PointView p) const {
    if (p.size() != static_cast<std::size_t>(dim()))
      throw DomainError("point has " + std::to_string(p.size()) + " coordinates, space needs " + std::to_string(dim()));
    if (!contains(p)) throw DomainError("point outside the space (nonpositive height or non-finite coordinate)");
  }

  /// Ray direction toward the chart's infinity of one hyperbolic factor.
  BoundaryDirection vertical_direction(std::size_t factor_index) const {
    BoundaryDirection w;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (factors_[i].hyperbolic())
        w.data.emplace_back(VerticalInfinity{});
      else
        w.data.emplace_back(Inactive{});
      w.speeds.push_back(i == factor_index ? 1.0 : 0.0);
    }
    if (!factors_.at(factor_index).hyperbolic()) throw DomainError("vertical direction needs a hyperbolic factor");
    return w;
  }

 private:
  static std::pair<FactorKind, int> parse_factor(const std::string& tok) {
    if (tok.size() < 2 || (tok[0] != 'H' && tok[0] != 'E'))
      throw DomainError("unresolvable space spec: unknown factor '" + tok + "'");
    int d = 0;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      if (tok[i] < '0' || tok[i] > '9') throw DomainError("unresolvable space spec: unknown factor '" + tok + "'");
      d = d * 10 + (tok[i] - '0');
    }
    const auto kind = tok[0] == 'H' ? FactorKind::Hyperbolic : FactorKind::Euclidean;
    if ((kind == FactorKind::Hyperbolic && d < 2) || d < 1)
      throw DomainError("unresolvable space spec: bad dimension in '" + tok + "'");
    return {kind, d};
  }

  bool neutered_factor(std::size_t i) const {
    for (const auto& h : horoballs_.entries)
      if (i < h.direction.speeds.size() && h.direction.speeds[i] > 0.0) return true;
    return false;
  }

  std::string canonical_spec() const {
    std::string s;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (i) s += 'x';
      s += (factors_[i].hyperbolic() ? 'H' : 'E') + std::to_string(factors_[i].dim);
    }
    if (horoballs_.entries.size() == 1) {
      std::ostringstream o;
      o << " neutered level=" << horoballs_.entries.front().level;
      s += o.str();
    } else if (!horoballs_.empty()) {
      s += " neutered";
    }
    return s;
  }

  std::vector<Factor> factors_;
  SpacePoint basepoint_;
  HoroballFamily horoballs_;
  std::string spec_;
};

namespace detail {

inline double sq(double x) { return x * x; }

/// Distance in H^d between chart points given as coordinate blocks.
inline double hyperbolic_distance(PointView p, PointView q) {
  const std::size_t n = p.size() - 1;
  double e2 = 0.0;
  for (std::size_t i = 0; i <= n; ++i) e2 += sq(p[i] - q[i]);
  return 2.0 * std::asinh(std::sqrt(e2) / (2.0 * std::sqrt(p[n] * q[n])));
}

/// Point at fraction s along the H^d geodesic from p to q, computed in the
/// hyperboloid model after moving p to (0,...,0,1).
inline void hyperbolic_geodesic(PointView p, PointView q, double s, std::span<double> out) {
  const std::size_t n = p.size() - 1;
  const double yp = p[n];
  std::vector<double> xq(n);
  double a2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xq[i] = (q[i] - p[i]) / yp;
    a2 += sq(xq[i]);
  }
  const double yq = q[n] / yp;
  a2 += sq(yq);
  const double d = hyperbolic_distance(p, q);
  if (d < 1e-300) {
    std::copy(p.begin(), p.end(), out.begin());
    return;
  }
  double ca, cb;
  if (d < 1e-8) {
    ca = 1.0 - s;
    cb = s;
  } else {
    ca = std::sinh((1.0 - s) * d) / std::sinh(d);
    cb = std::sinh(s * d) / std::sinh(d);
  }
  // Q = ((a2+1)/(2yq), xq/yq, (a2-1)/(2yq)); P = (1, 0, 0).
  const double g0 = ca + cb * (a2 + 1.0) / (2.0 * yq);
  const double gn = cb * (a2 - 1.0) / (2.0 * yq);
  double gi2 = 0.0;
  std::vector<double> gi(n);
  for (std::size_t i = 0; i < n; ++i) {
    gi[i] = cb * xq[i] / yq;
    gi2 += sq(gi[i]);
  }
  const double y = gn >= 0.0 ? (g0 + gn) / (1.0 + gi2) : 1.0 / (g0 - gn);
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] + yp * gi[i] * y;
  out[n] = yp * y;
}

/// Exponential map of H^d at p applied to v, where v is given in the
/// orthonormal frame (y d/dx_1, ..., y d/dy).
inline void hyperbolic_exp(PointView p, std::span<const double> v, std::span<double> out) {
  const std::size_t n = p.size() - 1;
  double r2 = 0.0;
  for (double c : v) r2 += sq(c);
  const double r = std::sqrt(r2);
  if (r == 0.0) {
    std::copy(p.begin(), p.end(), out.begin());
    return;
  }
  double h2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) h2 += sq(v[i]);
  const double hx = std::sqrt(h2) / r, hy = v[n] / r;
  const double psi = std::atan2(-hx, hy);
  const double c = std::cos(psi / 2.0), s = std::sin(psi / 2.0);
  const std::complex<double> z(0.0, std::exp(r));
  const std::complex<double> w = (c * z + s) / (-s * z + c);
  const double hnorm = std::sqrt(h2);
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] + (hnorm > 0.0 ? p[n] * w.real() * v[i] / hnorm : 0.0);
  out[n] = p[n] * w.imag();
}

/// Inversion in the unit sphere centred at the boundary point xi; an isometry
/// of H^d exchanging xi and the chart's infinity.
inline void invert(PointView p, const std::vector<double>& xi, std::span<double> out) {
  const std::size_t n = p.size() - 1;
  double r2 = sq(p[n]);
  for (std::size_t i = 0; i < n; ++i) r2 += sq(p[i] - xi[i]);
  for (std::size_t i = 0; i < n; ++i) out[i] = xi[i] + (p[i] - xi[i]) / r2;
  out[n] = p[n] / r2;
}

inline PointView block(const Factor& f, PointView p) { return p.subspan(f.offset, f.dim); }
inline std::span<double> block(const Factor& f, std::span<double> p) { return p.subspan(f.offset, f.dim); }

}  // namespace detail

inline double factor_distance(const Factor& f, PointView p, PointView q) {
  const auto a = detail::block(f, p), b = detail::block(f, q);
  if (f.hyperbolic()) return detail::hyperbolic_distance(a, b);
  double s = 0.0;
  for (int i = 0; i < f.dim; ++i) s += detail::sq(a[i] - b[i]);
  return std::sqrt(s);
}

/// Product metric: sqrt of the sum of squared factor distances.
inline double distance(const ProductSpace& sp, PointView p, PointView q) {
  sp.require(p);
  sp.require(q);
  double s = 0.0;
  for (const auto& f : sp.factors()) s += detail::sq(factor_distance(f, p, q));
  return std::sqrt(s);
}

/// Distance without domain checks, for inner loops over validated vertices.
inline double distance_unchecked(const ProductSpace& sp, PointView p, PointView q) {
  double s = 0.0;
  for (const auto& f : sp.factors()) s += detail::sq(factor_distance(f, p, q));
  return std::sqrt(s);
}

/// Constant-speed geodesic from p (s = 0) to q (s = 1).
inline SpacePoint geodesic_point(const ProductSpace& sp, PointView p, PointView q, double s) {
  sp.require(p);
  sp.require(q);
  if (s == 0.0) return SpacePoint(p);
  if (s == 1.0) return SpacePoint(q);
  SpacePoint out(std::vector<double>(p.size()));
  std::span<double> o(out.coords);
  for (const auto& f : sp.factors()) {
    if (f.hyperbolic()) {
      detail::hyperbolic_geodesic(detail::block(f, p), detail::block(f, q), s, detail::block(f, o));
    } else {
      for (int i = f.offset; i < f.offset + f.dim; ++i) o[i] = (1.0 - s) * p[i] + s * q[i];
    }
  }
  return out;
}

/// Exponential map; v holds orthonormal-frame components (hyperbolic blocks in
/// the frame y d/dx_i, y d/dy). Each factor follows its own geodesic.
inline SpacePoint exp_map(const ProductSpace& sp, PointView p, std::span<const double> v) {
  sp.require(p);
  if (v.size() != p.size()) throw DomainError("tangent vector has wrong dimension");
  SpacePoint out(std::vector<double>(p.size()));
  std::span<double> o(out.coords);
  for (const auto& f : sp.factors()) {
    if (f.hyperbolic()) {
      detail::hyperbolic_exp(detail::block(f, p), v.subspan(f.offset, f.dim), detail::block(f, o));
    } else {
      for (int i = f.offset; i < f.offset + f.dim; ++i) o[i] = p[i] + v[i];
    }
  }
  return out;
}

/// First-order tangent vector at p pointing to q, in orthonormal-frame components.
inline std::vector<double> chart_tangent(const ProductSpace& sp, PointView p, PointView q) {
  std::vector<double> v(p.size());
  for (const auto& f : sp.factors()) {
    const double scale = f.hyperbolic() ? 1.0 / p[f.height_index()] : 1.0;
    for (int i = f.offset; i < f.offset + f.dim; ++i) v[i] = (q[i] - p[i]) * scale;
  }
  return v;
}

inline void validate_direction(const ProductSpace& sp, const BoundaryDirection& w) {
  const auto& fs = sp.factors();
  if (w.data.size() != fs.size() || w.speeds.size() != fs.size())
    throw DomainError("boundary direction needs one datum and one speed per factor");
  double s2 = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double c = w.speeds[i];
    if (!(c >= 0.0)) throw DomainError("speeds must be nonnegative");
    s2 += c * c;
    const auto& d = w.data[i];
    if (fs[i].hyperbolic()) {
      if (std::holds_alternative<FiniteBoundaryPoint>(d)) {
        if (std::get<FiniteBoundaryPoint>(d).xi.size() != static_cast<std::size_t>(fs[i].dim - 1))
          throw DomainError("finite boundary point has wrong dimension");
      } else if (!std::holds_alternative<VerticalInfinity>(d)) {
        throw DomainError("hyperbolic factor needs a hyperbolic boundary datum");
      }
    } else {
      if (std::holds_alternative<EuclideanDirection>(d)) {
        const auto& u = std::get<EuclideanDirection>(d).u;
        if (u.size() != static_cast<std::size_t>(fs[i].dim)) throw DomainError("Euclidean direction has wrong dimension");
        double n2 = 0.0;
        for (double x : u) n2 += x * x;
        if (std::abs(n2 - 1.0) > 1e-9) throw DomainError("Euclidean direction must be a unit vector");
      } else if (std::holds_alternative<Inactive>(d)) {
        if (c > 0.0) throw DomainError("inactive Euclidean factor cannot carry speed");
      } else {
        throw DomainError("Euclidean factor needs a Euclidean boundary datum");
      }
    }
  }
  if (std::abs(s2 - 1.0) > 1e-9) throw DomainError("speeds must satisfy sum c_i^2 = 1");
}

/// Direction toward the barycenter of the Weyl chamber of the hyperbolic
/// factors: every hyperbolic factor flows toward its chart infinity with the
/// speed given by the chamber barycenter of their root system.
inline BoundaryDirection chamber_direction(const ProductSpace& sp) {
  const auto dims = sp.hyperbolic_dims();
  if (dims.empty()) throw DomainError("chamber direction needs a hyperbolic factor");
  const auto h0 = rootgeo::chamber_barycenter(rootgeo::real_hyperbolic_product(dims)).H0;
  BoundaryDirection w;
  int j = 0;
  for (const auto& f : sp.factors()) {
    if (f.hyperbolic()) {
      w.data.emplace_back(VerticalInfinity{});
      w.speeds.push_back(h0(j++));
    } else {
      w.data.emplace_back(Inactive{});
      w.speeds.push_back(0.0);
    }
  }
  return w;
}

/// Weighted Busemann function sum c_i b_i, each normalized to vanish at the basepoint.
inline double busemann(const ProductSpace& sp, const BoundaryDirection& w, PointView p) {
  sp.require(p);
  validate_direction(sp, w);
  const auto& base = sp.basepoint();
  double b = 0.0;
  for (std::size_t i = 0; i < sp.factors().size(); ++i) {
    const auto& f = sp.factors()[i];
    const double c = w.speeds[i];
    if (c == 0.0) continue;
    const auto& d = w.data[i];
    if (std::holds_alternative<VerticalInfinity>(d)) {
      b += -c * std::log(p[f.height_index()] / base[f.height_index()]);
    } else if (std::holds_alternative<FiniteBoundaryPoint>(d)) {
      const auto& xi = std::get<FiniteBoundaryPoint>(d).xi;
      std::vector<double> ip(f.dim), ib(f.dim);
      detail::invert(detail::block(f, p), xi, ip);
      detail::invert(detail::block(f, PointView(base)), xi, ib);
      b += -c * std::log(ip.back() / ib.back());
    } else {
      const auto& u = std::get<EuclideanDirection>(d).u;
      for (int k = 0; k < f.dim; ++k) b += -c * (p[f.offset + k] - base[f.offset + k]) * u[k];
    }
  }
  return b;
}

/// Unit-speed ray from p asymptotic to w: busemann decreases by exactly t.
inline SpacePoint asymptotic_ray(const ProductSpace& sp, PointView p, const BoundaryDirection& w, double t) {
  sp.require(p);
  validate_direction(sp, w);
  if (t < 0.0) throw DomainError("ray parameter must be nonnegative");
  SpacePoint out(p);
  for (std::size_t i = 0; i < sp.factors().size(); ++i) {
    const auto& f = sp.factors()[i];
    const double c = w.speeds[i];
    if (c == 0.0) continue;
    const auto& d = w.data[i];
    if (std::holds_alternative<VerticalInfinity>(d)) {
      out[f.height_index()] = p[f.height_index()] * std::exp(c * t);
    } else if (std::holds_alternative<FiniteBoundaryPoint>(d)) {
      const auto& xi = std::get<FiniteBoundaryPoint>(d).xi;
      std::vector<double> ip(f.dim), back(f.dim);
      detail::invert(detail::block(f, p), xi, ip);
      ip.back() *= std::exp(c * t);
      detail::invert(ip, xi, back);
      std::copy(back.begin(), back.end(), out.coords.begin() + f.offset);
    } else {
      const auto& u = std::get<EuclideanDirection>(d).u;
      for (int k = 0; k < f.dim; ++k) out[f.offset + k] = p[f.offset + k] + c * t * u[k];
    }
  }
  return out;
}

/// Flows p along its asymptotic ray until the Busemann function equals `level`.
inline SpacePoint project_to_horosphere(const ProductSpace& sp, const BoundaryDirection& w, double level, PointView p) {
  const double b = busemann(sp, w, p);
  const double t = b - level;
  if (t < -1e-12 * std::max(1.0, std::abs(level))) throw DomainError("point lies strictly inside the horoball");
  return asymptotic_ray(sp, p, w, std::max(t, 0.0));
}

inline bool in_neutered(const ProductSpace& sp, const HoroballFamily& hb, PointView p) {
  for (const auto& h : hb.entries)
    if (busemann(sp, h.direction, p) < h.level) return false;
  return true;
}

inline bool in_neutered(const ProductSpace& sp, PointView p) { return in_neutered(sp, sp.horoballs(), p); }

/// Sampling check that no sampled point lies in the interior of two horoballs.
inline bool horoballs_disjoint(const ProductSpace& sp, const HoroballFamily& hb, int samples, std::uint64_t seed,
                               double box = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-box, box);
  for (int s = 0; s < samples; ++s) {
    SpacePoint p(std::vector<double>(sp.dim()));
    for (const auto& f : sp.factors())
      for (int i = f.offset; i < f.offset + f.dim; ++i) p[i] = uni(rng);
    for (const auto& f : sp.factors())
      if (f.hyperbolic()) p[f.height_index()] = std::exp(uni(rng));
    int inside = 0;
    for (const auto& h : hb.entries)
      if (busemann(sp, h.direction, p) < h.level) ++inside;
    if (inside > 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Flats and convex factor-wise subsets.

struct FlatFactor {
  enum class Kind { Geodesic, Point, Affine };
  Kind kind = Kind::Point;
  /// Geodesic: horizontal foot a of the vertical geodesic {x = a}.
  /// Point: the factor's coordinates. Affine: origin.
  std::vector<double> anchor;
  /// Affine only: orthonormal spanning vectors.
  std::vector<std::vector<double>> basis;

  int dimension() const {
    switch (kind) {
      case Kind::Geodesic: return 1;
      case Kind::Point: return 0;
      case Kind::Affine: return static_cast<int>(basis.size());
    }
    return 0;
  }
};

/// Product of one convex piece per factor: complete vertical geodesics in
/// hyperbolic factors, affine subspaces in Euclidean factors, or points.
struct FlatSpec {
  std::vector<FlatFactor> factors;
  int dimension() const {
    int d = 0;
    for (const auto& f : factors) d += f.dimension();
    return d;
  }
};

inline void validate_flat(const ProductSpace& sp, const FlatSpec& flat) {
  if (flat.factors.size() != sp.factors().size()) throw DomainError("flat spec needs one entry per factor");
  for (std::size_t i = 0; i < flat.factors.size(); ++i) {
    const auto& f = sp.factors()[i];
    const auto& ff = flat.factors[i];
    switch (ff.kind) {
      case FlatFactor::Kind::Geodesic:
        if (!f.hyperbolic()) throw DomainError("geodesic flat entry on a Euclidean factor");
        if (ff.anchor.size() != static_cast<std::size_t>(f.dim - 1)) throw DomainError("geodesic foot has wrong dimension");
        break;
      case FlatFactor::Kind::Point:
        if (ff.anchor.size() != static_cast<std::size_t>(f.dim)) throw DomainError("point flat entry has wrong dimension");
        if (f.hyperbolic() && !(ff.anchor.back() > 0.0)) throw DomainError("point flat entry outside the factor");
        break;
      case FlatFactor::Kind::Affine: {
        if (f.hyperbolic()) throw DomainError("affine flat entry on a hyperbolic factor");
        if (ff.anchor.size() != static_cast<std::size_t>(f.dim)) throw DomainError("affine origin has wrong dimension");
        for (std::size_t a = 0; a < ff.basis.size(); ++a) {
          if (ff.basis[a].size() != static_cast<std::size_t>(f.dim)) throw DomainError("affine basis vector has wrong dimension");
          for (std::size_t b = 0; b <= a; ++b) {
            double dot = 0.0;
            for (int k = 0; k < f.dim; ++k) dot += ff.basis[a][k] * ff.basis[b][k];
            if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-9) throw DomainError("affine basis must be orthonormal");
          }
        }
        break;
      }
    }
  }
}

/// The maximal flat through the basepoint: vertical geodesics in every
/// hyperbolic factor, whole Euclidean factors.
inline FlatSpec maximal_flat(const ProductSpace& sp) {
  FlatSpec flat;
  const auto& b = sp.basepoint();
  for (const auto& f : sp.factors()) {
    FlatFactor ff;
    if (f.hyperbolic()) {
      ff.kind = FlatFactor::Kind::Geodesic;
      ff.anchor.assign(b.coords.begin() + f.offset, b.coords.begin() + f.offset + f.dim - 1);
    } else {
      ff.kind = FlatFactor::Kind::Affine;
      ff.anchor.assign(b.coords.begin() + f.offset, b.coords.begin() + f.offset + f.dim);
      for (int k = 0; k < f.dim; ++k) {
        std::vector<double> e(f.dim, 0.0);
        e[k] = 1.0;
        ff.basis.push_back(std::move(e));
      }
    }
    flat.factors.push_back(std::move(ff));
  }
  return flat;
}

namespace detail {
// Arclength origin on a vertical geodesic: the foot of the basepoint.
inline double geodesic_origin_height(const Factor& f, const FlatFactor& ff, const SpacePoint& base) {
  double r2 = sq(base[f.height_index()]);
  for (int k = 0; k < f.dim - 1; ++k) r2 += sq(base[f.offset + k] - ff.anchor[k]);
  return std::sqrt(r2);
}
}  // namespace detail

/// Nearest-point projection onto the flat, factor by factor in closed form.
inline SpacePoint project_to_flat(const ProductSpace& sp, const FlatSpec& flat, PointView p) {
  sp.require(p);
  validate_flat(sp, flat);
  SpacePoint out(p);
  for (std::size_t i = 0; i < flat.factors.size(); ++i) {
    const auto& f = sp.factors()[i];
    const auto& ff = flat.factors[i];
    switch (ff.kind) {
      case FlatFactor::Kind::Geodesic: {
        // Orthogonal geodesics to {x = a} are half-circles centred at (a, 0).
        double r2 = detail::sq(p[f.height_index()]);
        for (int k = 0; k < f.dim - 1; ++k) {
          r2 += detail::sq(p[f.offset + k] - ff.anchor[k]);
          out[f.offset + k] = ff.anchor[k];
        }
        out[f.height_index()] = std::sqrt(r2);
        break;
      }
      case FlatFactor::Kind::Point:
        std::copy(ff.anchor.begin(), ff.anchor.end(), out.coords.begin() + f.offset);
        break;
      case FlatFactor::Kind::Affine: {
        std::vector<double> r(ff.anchor);
        for (const auto& e : ff.basis) {
          double dot = 0.0;
          for (int k = 0; k < f.dim; ++k) dot += (p[f.offset + k] - ff.anchor[k]) * e[k];
          for (int k = 0; k < f.dim; ++k) r[k] += dot * e[k];
        }
        std::copy(r.begin(), r.end(), out.coords.begin() + f.offset);
        break;
      }
    }
  }
  return out;
}

/// Isometric chart of the flat: Euclidean coordinates -> point of the space.
/// Geodesic factors use signed arclength from the foot of the basepoint.
inline SpacePoint flat_point(const ProductSpace& sp, const FlatSpec& flat, std::span<const double> u) {
  validate_flat(sp, flat);
  if (u.size() != static_cast<std::size_t>(flat.dimension())) throw DomainError("flat coordinates have wrong dimension");
  SpacePoint out(sp.basepoint());
  std::size_t j = 0;
  for (std::size_t i = 0; i < flat.factors.size(); ++i) {
    const auto& f = sp.factors()[i];
    const auto& ff = flat.factors[i];
    switch (ff.kind) {
      case FlatFactor::Kind::Geodesic: {
        const double y0 = detail::geodesic_origin_height(f, ff, sp.basepoint());
        for (int k = 0; k < f.dim - 1; ++k) out[f.offset + k] = ff.anchor[k];
        out[f.height_index()] = y0 * std::exp(u[j++]);
        break;
      }
      case FlatFactor::Kind::Point:
        std::copy(ff.anchor.begin(), ff.anchor.end(), out.coords.begin() + f.offset);
        break;
      case FlatFactor::Kind::Affine:
        for (int k = 0; k < f.dim; ++k) out[f.offset + k] = ff.anchor[k];
        for (const auto& e : ff.basis) {
          for (int k = 0; k < f.dim; ++k) out[f.offset + k] += u[j] * e[k];
          ++j;
        }
        break;
    }
  }
  return out;
}

/// Flat coordinates of the projection of p onto the flat.
inline std::vector<double> flat_coordinates(const ProductSpace& sp, const FlatSpec& flat, PointView p) {
  const SpacePoint q = project_to_flat(sp, flat, p);
  std::vector<double> u;
  for (std::size_t i = 0; i < flat.factors.size(); ++i) {
    const auto& f = sp.factors()[i];
    const auto& ff = flat.factors[i];
    if (ff.kind == FlatFactor::Kind::Geodesic) {
      u.push_back(std::log(q[f.height_index()] / detail::geodesic_origin_height(f, ff, sp.basepoint())));
    } else if (ff.kind == FlatFactor::Kind::Affine) {
      for (const auto& e : ff.basis) {
        double dot = 0.0;
        for (int k = 0; k < f.dim; ++k) dot += (q[f.offset + k] - ff.anchor[k]) * e[k];
        u.push_back(dot);
      }
    }
  }
  return u;
}

}  // namespace dehnfill
