#pragma once

// Abstract reduced root systems and the stable Jacobi field propagator along
// a ray whose direction H lies in a closed Weyl chamber.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dehnfill/errors.hpp"

namespace dehnfill::rootgeo {

using Vector = Eigen::VectorXd;

/// A reduced root system given by its positive roots, stored as covectors on
/// the rank-dimensional chamber space with the standard inner product.
class RootSystem {
 public:
  RootSystem(std::string label, std::vector<Vector> positive_roots, std::vector<int> multiplicities,
             std::vector<int> simple_roots, double long_root_sq = 2.0)
      : label_(std::move(label)),
        roots_(std::move(positive_roots)),
        mult_(std::move(multiplicities)),
        simple_(std::move(simple_roots)),
        long_root_sq_(long_root_sq) {
    validate();
  }

  const std::string& label() const { return label_; }
  int rank() const { return roots_.empty() ? 0 : static_cast<int>(roots_.front().size()); }
  const std::vector<Vector>& positive_roots() const { return roots_; }
  const std::vector<int>& multiplicities() const { return mult_; }
  /// Indices into positive_roots() of the simple roots.
  const std::vector<int>& simple_roots() const { return simple_; }
  double long_root_sq() const { return long_root_sq_; }

  /// Same system with every root multiplied by `factor`.
  RootSystem rescaled(double factor) const {
    std::vector<Vector> r;
    for (const auto& a : roots_) r.push_back(a * factor);
    return RootSystem(label_, std::move(r), mult_, simple_, long_root_sq_ * factor * factor);
  }

  RootSystem with_multiplicities(std::vector<int> m) const {
    return RootSystem(label_, roots_, std::move(m), simple_, long_root_sq_);
  }

 private:
  void validate() const {
    if (roots_.empty()) throw DomainError("root system without roots");
    if (mult_.size() != roots_.size()) throw DomainError("one multiplicity per positive root required");
    const auto n = roots_.front().size();
    double longest = 0.0;
    for (std::size_t i = 0; i < roots_.size(); ++i) {
      if (roots_[i].size() != n) throw DomainError("roots of mixed dimension");
      if (roots_[i].norm() < 1e-12) throw DomainError("zero root");
      if (mult_[i] < 1) throw DomainError("multiplicities must be positive");
      longest = std::max(longest, roots_[i].squaredNorm());
      for (std::size_t j = 0; j < i; ++j) {
        const double c = roots_[i].dot(roots_[j]) / (roots_[i].norm() * roots_[j].norm());
        if (c > 1.0 - 1e-12) throw DomainError("positive root is a positive multiple of another");
      }
    }
    if (std::abs(longest - long_root_sq_) > 1e-9) throw DomainError("long roots violate the length normalization");
    Eigen::MatrixXd m(n, roots_.size());
    for (std::size_t i = 0; i < roots_.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = roots_[i];
    if (Eigen::FullPivLU<Eigen::MatrixXd>(m).rank() != static_cast<Eigen::Index>(n))
      throw DomainError("roots do not span the chamber space");
    if (simple_.size() != static_cast<std::size_t>(n)) throw DomainError("need rank-many simple roots");
  }

  std::string label_;
  std::vector<Vector> roots_;
  std::vector<int> mult_;
  std::vector<int> simple_;
  double long_root_sq_;
};

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline RootSystem a1_power(int r) {
  if (r < 1) throw DomainError("A1^r needs r >= 1");
  std::vector<Vector> roots;
  std::vector<int> simple;
  for (int i = 0; i < r; ++i) {
    roots.push_back(Vector::Unit(r, i) * std::numbers::sqrt2);
    simple.push_back(i);
  }
  std::string label = r == 1 ? "A1" : (r == 2 ? "A1xA1" : "A1^" + std::to_string(r));
  return RootSystem(label, std::move(roots), std::vector<int>(r, 1), std::move(simple));
}

inline RootSystem a1() { return a1_power(1); }

inline RootSystem a2() {
  const double s = std::sqrt(1.5), h = 1.0 / std::numbers::sqrt2;
  return RootSystem("A2", {vec({std::numbers::sqrt2, 0.0}), vec({-h, s}), vec({h, s})}, {1, 1, 1}, {0, 1});
}

inline RootSystem b2() {
  return RootSystem("B2", {vec({1.0, -1.0}), vec({0.0, 1.0}), vec({1.0, 0.0}), vec({1.0, 1.0})}, {1, 1, 1, 1},
                    {0, 1});
}

inline RootSystem g2() {
  // short simple root a, long simple root b at 150 degrees; <a,b> = -1.
  const Vector a = vec({std::sqrt(2.0 / 3.0), 0.0});
  const Vector b = vec({-std::sqrt(1.5), 1.0 / std::numbers::sqrt2});
  return RootSystem("G2", {a, b, a + b, 2 * a + b, 3 * a + b, 3 * a + 2 * b}, {1, 1, 1, 1, 1, 1}, {0, 1});
}

/// Restricted roots of a product of real hyperbolic spaces H^{d_i} with
/// curvature -1: one root per factor, of unit length, with multiplicity d_i - 1.
inline RootSystem real_hyperbolic_product(const std::vector<int>& dims) {
  const int r = static_cast<int>(dims.size());
  if (r < 1) throw DomainError("need at least one hyperbolic factor");
  std::vector<Vector> roots;
  std::vector<int> simple, mult;
  for (int i = 0; i < r; ++i) {
    if (dims[i] < 2) throw DomainError("hyperbolic factor dimension must be >= 2");
    roots.push_back(Vector::Unit(r, i));
    simple.push_back(i);
    mult.push_back(dims[i] - 1);
  }
  return RootSystem("H^" + std::to_string(r), std::move(roots), std::move(mult), std::move(simple), 1.0);
}

/// Accepts "A1", "A1xA1", "A1xA1xA1", "A1^r", "A2", "B2", "G2".
inline RootSystem from_label(std::string_view label) {
  if (label == "A2") return a2();
  if (label == "B2") return b2();
  if (label == "G2") return g2();
  if (label.starts_with("A1^")) {
    const std::string tail(label.substr(3));
    std::size_t used = 0;
    int r = 0;
    try {
      r = std::stoi(tail, &used);
    } catch (const std::exception&) {
      throw DomainError("unknown root system '" + std::string(label) + "'");
    }
    if (used != tail.size() || r < 1) throw DomainError("unknown root system '" + std::string(label) + "'");
    return a1_power(r);
  }
  int r = 0;
  std::string_view rest = label;
  while (!rest.empty()) {
    if (!rest.starts_with("A1")) throw DomainError("unknown root system '" + std::string(label) + "'");
    ++r;
    rest.remove_prefix(2);
    if (rest.empty()) break;
    if (rest.front() != 'x') throw DomainError("unknown root system '" + std::string(label) + "'");
    rest.remove_prefix(1);
    if (rest.empty()) throw DomainError("unknown root system '" + std::string(label) + "'");
  }
  if (r == 0) throw DomainError("unknown root system '" + std::string(label) + "'");
  return a1_power(r);
}

struct ChamberDirection {
  Vector H0;
  double rho_star = 0.0;
};

/// Unit vector on which every simple root takes the same positive value.
inline ChamberDirection chamber_barycenter(const RootSystem& rs) {
  const int r = rs.rank();
  Eigen::MatrixXd s(r, r);
  for (int i = 0; i < r; ++i) s.row(i) = rs.positive_roots()[rs.simple_roots()[i]].transpose();
  Vector h = s.fullPivLu().solve(Vector::Ones(r));
  h.normalize();
  double rho = std::numeric_limits<double>::infinity();
  for (const auto& a : rs.positive_roots()) rho = std::min(rho, a.dot(h));
  if (!(rho > 0.0)) throw DomainError("simple roots do not bound a chamber");
  return {h, rho};
}

struct Eigenvalue {
  double lambda = 0.0;
  int multiplicity = 0;
};

/// Spectrum of the curvature operator along a ray in direction H, restricted
/// to the directions orthogonal to the ray: (alpha(H))^2 for every positive
/// root with its multiplicity, followed by the flat directions of the chamber
/// space orthogonal to H (multiplicity rank - 1, omitted when zero).
inline std::vector<Eigenvalue> curvature_eigenvalues(const RootSystem& rs, const Vector& H) {
  if (H.size() != rs.rank()) throw DomainError("direction has wrong dimension");
  if (std::abs(H.norm() - 1.0) > 1e-9) throw DomainError("direction must be a unit vector");
  std::vector<Eigenvalue> out;
  for (std::size_t i = 0; i < rs.positive_roots().size(); ++i) {
    const double v = rs.positive_roots()[i].dot(H);
    if (v < -1e-12) throw DomainError("direction lies outside the closed positive chamber");
    const double a = std::max(v, 0.0);
    out.push_back({a * a, rs.multiplicities()[i]});
  }
  if (rs.rank() > 1) out.push_back({0.0, rs.rank() - 1});
  return out;
}

/// Decay rate sqrt(lambda) per coordinate, with eigenvalue entries expanded
/// by multiplicity.
inline std::vector<double> decay_rates(const std::vector<Eigenvalue>& eig) {
  std::vector<double> rates;
  for (const auto& e : eig)
    for (int m = 0; m < e.multiplicity; ++m) rates.push_back(std::sqrt(e.lambda));
  return rates;
}

/// Coefficients of the stable Jacobi field with initial coefficients y0 in the
/// parallel eigenframe, after time t: y0[l] * exp(-sqrt(lambda_l) t).
/// y0 is indexed by the expanded eigenvalue list (see decay_rates).
inline std::vector<double> jacobi_coefficients(const RootSystem& rs, const Vector& H, const std::vector<double>& y0,
                                               double t) {
  if (t < 0.0) throw DomainError("time must be nonnegative");
  const auto rates = decay_rates(curvature_eigenvalues(rs, H));
  if (rates.size() != y0.size())
    throw DomainError("coefficient list has length " + std::to_string(y0.size()) + ", expected " +
                      std::to_string(rates.size()));
  std::vector<double> out(y0.size());
  for (std::size_t l = 0; l < y0.size(); ++l) out[l] = y0[l] * std::exp(-rates[l] * t);
  return out;
}

}  // namespace dehnfill::rootgeo
