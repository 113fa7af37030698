#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dehnfill/chains.hpp"
#include "dehnfill/conefill.hpp"
#include "dehnfill/errors.hpp"
#include "dehnfill/lpfill.hpp"
#include "dehnfill/modelspace.hpp"

namespace dehnfill {

enum class Family { FlatRoundSpheres, Lemma2Spheres, TubeBoundaries, HorosphereSpheresNeutered };
enum class Filler { Cone, Lp, FlatBall };

inline Family parse_family(const std::string& s) {
  if (s == "flat_round_spheres") return Family::FlatRoundSpheres;
  if (s == "lemma2_spheres") return Family::Lemma2Spheres;
  if (s == "tube_boundaries") return Family::TubeBoundaries;
  if (s == "horosphere_spheres_neutered") return Family::HorosphereSpheresNeutered;
  throw DomainError("unknown experiment family '" + s + "'");
}

inline std::string to_string(Family f) {
  switch (f) {
    case Family::FlatRoundSpheres: return "flat_round_spheres";
    case Family::Lemma2Spheres: return "lemma2_spheres";
    case Family::TubeBoundaries: return "tube_boundaries";
    case Family::HorosphereSpheresNeutered: return "horosphere_spheres_neutered";
  }
  return "";
}

inline Filler parse_filler(const std::string& s) {
  if (s == "cone") return Filler::Cone;
  if (s == "lp") return Filler::Lp;
  if (s == "flat_ball") return Filler::FlatBall;
  throw DomainError("unknown filler '" + s + "'");
}

inline std::string to_string(Filler f) {
  switch (f) {
    case Filler::Cone: return "cone";
    case Filler::Lp: return "lp";
    case Filler::FlatBall: return "flat_ball";
  }
  return "";
}

struct ExperimentSpec {
  std::string space = "H2";
  Family family = Family::FlatRoundSpheres;
  int k = 1;
  std::vector<double> schedule;  // radii; tube lengths for tube_boundaries
  Filler filler = Filler::FlatBall;
  double mesh = 0.25;
  // cone filler
  double t_max = 8.0;
  int time_steps = 32;
  std::optional<double> cap_level;
  CapStrategy cap_strategy = CapStrategy::FlatConeInHorosphere;
  double cap_mesh = 0.5;
  // tubes
  double delta = 1.0;
  // lp filler
  std::optional<double> level;  // horosphere level; default: the space's first horoball
  double lp_cell = 1.0;         // horizontal cell size on the horosphere
  double lp_layer = 0.5;        // log-height layer thickness
  int lp_below = 2;             // layers below the horosphere
  LpMode lp_mode = LpMode::Auto;
  std::uint64_t seed = 1;

  void validate() const {
    if (schedule.size() < 3) throw DomainError("schedule too short: need at least 3 sizes");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (!(schedule[i] > 0.0)) throw DomainError("schedule entries must be positive");
      if (i > 0 && !(schedule[i] > schedule[i - 1])) throw DomainError("schedule must be strictly increasing");
    }
    if (k < 1) throw DomainError("k must be at least 1");
    if (!(mesh > 0.0)) throw DomainError("mesh must be positive");
  }
};

struct Sample {
  double size = 0.0;
  double cycle_volume = 0.0;
  double fill_volume = 0.0;
};

// ---------------------------------------------------------------------------
// LP families on cubical grids.

namespace detail {

/// Grid with the pixel ball's top cells on `plane` axes at the given lattice
/// position of the remaining axes; returns the boundary cycle of the pixel ball.
struct PixelBall {
  GridComplex grid;
  std::vector<long long> cycle;
  std::vector<long> cells;
};

inline PixelBall pixel_ball(GridComplex gc, const std::vector<int>& plane, const std::vector<int>& at,
                            const std::vector<double>& center, double radius,
                            const std::function<std::vector<double>(const SpacePoint&)>& plane_coords) {
  const int d = static_cast<int>(plane.size());
  unsigned mask = 0;
  for (int a : plane) mask |= 1u << a;
  PixelBall pb{std::move(gc), {}, {}};
  for (long c = 0; c < pb.grid.count(d); ++c) {
    const auto& ci = pb.grid.info(d, c);
    if (ci.mask != mask) continue;
    bool on = true;
    for (int a = 0; a < pb.grid.axis_count() && on; ++a)
      if (!((mask >> a) & 1u) && ci.base[a] != at[a]) on = false;
    if (!on) continue;
    const auto u = plane_coords(pb.grid.barycenter(d, c));
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += (u[i] - center[i]) * (u[i] - center[i]);
    if (r2 <= radius * radius) pb.cells.push_back(c);
  }
  if (pb.cells.empty()) throw DomainError("pixel ball is empty at this mesh");
  pb.cycle = boundary_of_cells(pb.grid, d, pb.cells);
  return pb;
}

/// Pixel k-sphere of the given radius in the maximal flat, inside a slab
/// two cells thick in the first horizontal coordinate of a hyperbolic factor.
inline PixelBall flat_pixel_sphere(const ProductSpace& sp, int k, double radius, double mesh) {
  const FlatSpec flat = maximal_flat(sp);
  if (flat.dimension() < k + 1) throw DomainError("flat has too few dimensions for this sphere");
  const int n = static_cast<int>(std::ceil((radius + 2.0 * mesh) / mesh));
  Region region;
  std::vector<int> plane;
  for (std::size_t i = 0; i < sp.factors().size() && static_cast<int>(region.axes.size()) < k + 1; ++i) {
    const auto& f = sp.factors()[i];
    if (f.hyperbolic()) {
      region.axes.push_back({f.height_index(), -n * mesh, n * mesh, 2 * n, true});
    } else {
      for (int c = 0; c < f.dim && static_cast<int>(region.axes.size()) < k + 1; ++c)
        region.axes.push_back({f.offset + c, -n * mesh, n * mesh, 2 * n, false});
    }
  }
  for (int a = 0; a < k + 1; ++a) plane.push_back(a);
  std::vector<int> at(k + 1, 0);
  if (const auto h = sp.first_hyperbolic()) {
    const auto& f = sp.factor(*h);
    region.axes.push_back({f.offset, sp.basepoint()[f.offset] - mesh, sp.basepoint()[f.offset] + mesh, 2, false});
    at.push_back(1);
  }
  region.neutered = false;
  GridComplex gc = discretize_region(sp, region, mesh);
  auto coords = [axes = gc.axes(), k](const SpacePoint& p) {
    std::vector<double> u(k + 1);
    for (int a = 0; a < k + 1; ++a) {
      const auto& ax = axes[a];
      u[a] = ax.log_scale ? std::log(p[ax.coord]) : p[ax.coord];
    }
    return u;
  };
  return pixel_ball(std::move(gc), plane, at, std::vector<double>(k + 1, 0.0), radius, coords);
}

/// Pixel k-sphere on the horosphere of a hyperbolic space in a grid of
/// horizontal cells of metric size `cell` (measured on the horosphere) and
/// log-height layers. The grid stops at the horosphere when the space is
/// neutered and extends above it otherwise.
inline PixelBall horosphere_pixel_sphere(const ProductSpace& sp, int k, double radius, double max_radius,
                                         std::optional<double> level, double cell, double layer, int below) {
  if (sp.factors().size() != 1 || !sp.factor(0).hyperbolic()) throw DomainError("horosphere family needs a single H^n");
  const auto& f = sp.factor(0);
  if (f.dim - 1 < k + 1) throw DomainError("horosphere has too few dimensions for this sphere");
  double L = -1.0;
  if (level) {
    L = *level;
  } else if (sp.neutered()) {
    const auto& h = sp.horoballs().entries.front();
    if (!std::holds_alternative<VerticalInfinity>(h.direction.data[0])) throw DomainError("horoball must be centred at infinity");
    L = h.level;
  }
  // horoball {b <= L} toward vertical infinity: the horosphere is y = y_base * e^{-L}
  const double uh = std::log(sp.basepoint()[f.height_index()]) - L;
  const double step = cell * std::exp(uh);
  const int n = static_cast<int>(std::ceil(max_radius / cell)) + 2;
  int up = 0;
  if (!sp.neutered()) up = static_cast<int>(std::ceil((std::log(std::max(max_radius / cell, 1.0)) + 1.0) / layer));
  Region region;
  std::vector<int> plane;
  for (int a = 0; a < k + 1; ++a) {
    const double c0 = sp.basepoint()[f.offset + a];
    region.axes.push_back({f.offset + a, c0 - n * step, c0 + n * step, 2 * n, false});
    plane.push_back(a);
  }
  region.axes.push_back({f.height_index(), uh - below * layer, uh + up * layer, below + up, true});
  std::vector<int> at(k + 2, 0);
  at[k + 1] = below;
  GridComplex gc = discretize_region(sp, region, 0.0);
  std::vector<double> center(k + 1, 0.0);
  auto coords = [&f, k, step](const SpacePoint& p) {
    std::vector<double> u(k + 1);
    for (int a = 0; a < k + 1; ++a) u[a] = p[f.offset + a] / step;
    return u;
  };
  for (int a = 0; a < k + 1; ++a) center[a] = sp.basepoint()[f.offset + a] / step;
  return pixel_ball(std::move(gc), plane, at, center, radius / cell, coords);
}

/// Vertex-welded union of chains as a simplicial complex; the LP minimum of
/// the cycle over it is at most the volume of every candidate.
inline FillResult lp_refill(const ProductSpace& sp, const SimplicialChain& cycle,
                            const std::vector<SimplicialChain>& candidates, LpMode mode) {
  std::map<std::vector<double>, int> vid;
  std::vector<SpacePoint> verts;
  auto id_of = [&](const SpacePoint& p) {
    auto [it, fresh] = vid.emplace(p.coords, static_cast<int>(verts.size()));
    if (fresh) verts.push_back(p);
    return it->second;
  };
  std::vector<std::vector<int>> tops;
  for (const auto& c : candidates) {
    if (c.k() != cycle.k() + 1) throw DomainError("candidate filling has wrong dimension");
    for (std::size_t t = 0; t < c.size(); ++t) {
      std::vector<int> s;
      for (int id : c.simplex(t)) s.push_back(id_of(c.vertex(id)));
      tops.push_back(std::move(s));
    }
  }
  SimplicialChain z(cycle.k());
  for (std::size_t t = 0; t < cycle.size(); ++t) {
    std::vector<int> s;
    for (int id : cycle.simplex(t)) s.push_back(id_of(cycle.vertex(id)));
    z.add_term(s, cycle.coeff(t));
  }
  z.normalize();
  const SimplicialComplex sc = simplicial_complex(sp, verts, tops);
  return min_fill(sc.cx, cycle.k(), chain_vector(sc, z), mode);
}

inline ConeParams cone_params(const ProductSpace& sp, const ExperimentSpec& spec) {
  ConeParams p;
  p.w = chamber_direction(sp);
  p.t_max = spec.t_max;
  p.cap_level = spec.cap_level;
  p.time_steps = spec.time_steps;
  p.cap_strategy = spec.cap_strategy;
  p.cap_mesh = spec.cap_mesh;
  return p;
}

inline Sample chain_sample(const ProductSpace& sp, const ExperimentSpec& spec, double size, const SimplicialChain& cycle,
                           const SimplicialChain* ball) {
  Sample s{size, k_volume(sp, cycle), 0.0};
  switch (spec.filler) {
    case Filler::Cone:
      s.fill_volume = cone_fill(sp, cycle, cone_params(sp, spec)).report.total_volume;
      break;
    case Filler::FlatBall:
      if (!ball) throw DomainError("flat_ball filler is not available for this family");
      s.fill_volume = k_volume(sp, *ball);
      break;
    case Filler::Lp: {
      std::vector<SimplicialChain> cands{cone_fill(sp, cycle, cone_params(sp, spec)).filling};
      cands.push_back(ball ? *ball : cone_from_apex(cycle, sp.basepoint()));
      s.fill_volume = lp_refill(sp, cycle, cands, spec.lp_mode).value;
      break;
    }
  }
  return s;
}

}  // namespace detail

/// The simplicial cycle of a chain family at one schedule size.
inline SimplicialChain family_cycle(const ProductSpace& sp, const ExperimentSpec& spec, double size) {
  switch (spec.family) {
    case Family::FlatRoundSpheres: return round_sphere_in_flat(sp, maximal_flat(sp), spec.k, size, spec.mesh);
    case Family::Lemma2Spheres: return lemma2_sphere(sp, size, spec.k, spec.mesh);
    case Family::TubeBoundaries: return boundary(tube_band(sp, size, spec.delta, spec.mesh));
    case Family::HorosphereSpheresNeutered: break;
  }
  throw DomainError("horosphere family lives on a cubical grid, not a simplicial chain");
}

/// One (size, cycle volume, filling volume) sample per schedule entry.
inline std::vector<Sample> run_family(const ExperimentSpec& spec) {
  spec.validate();
  const ProductSpace sp = ProductSpace::parse(spec.space);
  std::vector<Sample> out;
  for (double size : spec.schedule) {
    switch (spec.family) {
      case Family::FlatRoundSpheres: {
        if (spec.filler == Filler::Lp) {
          if (sp.neutered()) throw DomainError("flat family is defined in un-neutered spaces");
          const auto pb = detail::flat_pixel_sphere(sp, spec.k, size, spec.mesh);
          const auto fr = min_fill(pb.grid, spec.k, pb.cycle, spec.lp_mode);
          out.push_back({size, pb.grid.chain_volume(spec.k, pb.cycle), fr.value});
          break;
        }
        const FlatSpec flat = maximal_flat(sp);
        const SimplicialChain cycle = round_sphere_in_flat(sp, flat, spec.k, size, spec.mesh);
        std::vector<double> zero(flat.dimension(), 0.0);
        const SimplicialChain ball = cone_from_apex(cycle, flat_point(sp, flat, zero));
        out.push_back(detail::chain_sample(sp, spec, size, cycle, &ball));
        break;
      }
      case Family::Lemma2Spheres: {
        const SimplicialChain cycle = lemma2_sphere(sp, size, spec.k, spec.mesh);
        std::optional<SimplicialChain> disc;
        if (spec.k == 1 && spec.filler != Filler::Cone) {
          disc = lemma2_disc(sp, size, spec.mesh);
        }
        out.push_back(detail::chain_sample(sp, spec, size, cycle, disc ? &*disc : nullptr));
        break;
      }
      case Family::TubeBoundaries: {
        if (spec.k != 1) throw DomainError("tubes are 2-dimensional: k must be 1");
        const SimplicialChain band = tube_band(sp, size, spec.delta, spec.mesh);
        const SimplicialChain cycle = boundary(band);
        if (spec.filler == Filler::FlatBall) {
          out.push_back({size, k_volume(sp, cycle), k_volume(sp, band)});
        } else {
          out.push_back(detail::chain_sample(sp, spec, size, cycle, &band));
        }
        break;
      }
      case Family::HorosphereSpheresNeutered: {
        if (spec.filler != Filler::Lp) throw DomainError("horosphere family is filled by the lp filler");
        const auto pb = detail::horosphere_pixel_sphere(sp, spec.k, size, spec.schedule.back(), spec.level,
                                                        spec.lp_cell, spec.lp_layer, spec.lp_below);
        const auto fr = min_fill(pb.grid, spec.k, pb.cycle, spec.lp_mode);
        out.push_back({size, pb.grid.chain_volume(spec.k, pb.cycle), fr.value});
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exponent fits.

struct ExponentEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double max_abs_residual = 0.0;
  int n_points = 0;
};

/// Least squares of log fv against log l.
inline ExponentEstimate fit_exponent(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw DomainError("need at least 3 samples");
  std::vector<double> x, y;
  for (const auto& [l, fv] : samples) {
    if (!(l > 0.0) || !(fv > 0.0)) throw DomainError("samples must be positive");
    x.push_back(std::log(l));
    y.push_back(std::log(fv));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("samples need distinct sizes");
  ExponentEstimate e;
  e.slope = sxy / sxx;
  e.intercept = my - e.slope * mx;
  e.n_points = static_cast<int>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    e.max_abs_residual = std::max(e.max_abs_residual, std::abs(y[i] - e.intercept - e.slope * x[i]));
  return e;
}

inline ExponentEstimate fit_exponent(const std::vector<Sample>& samples) {
  std::vector<std::pair<double, double>> p;
  for (const auto& s : samples) p.emplace_back(s.cycle_volume, s.fill_volume);
  return fit_exponent(p);
}

enum class Verdict { MatchesEuclidean, MatchesLinear, Mismatch };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::MatchesEuclidean: return "matches_euclidean";
    case Verdict::MatchesLinear: return "matches_linear";
    case Verdict::Mismatch: return "mismatch";
  }
  return "";
}

struct TheoryComparison {
  Verdict verdict = Verdict::Mismatch;
  double expected = 0.0;
};

/// Expected exponent (k+1)/k below the rank and 1 from the rank on.
inline TheoryComparison compare_theory(const ExponentEstimate& est, int k, int rank, int dim, double tolerance = 0.2) {
  if (k < 1 || k > dim - 1) throw DomainError("k must lie in [1, dim - 1]");
  if (rank < 1) throw DomainError("rank must be positive");
  const bool below = k <= rank - 1;
  TheoryComparison c;
  c.expected = below ? static_cast<double>(k + 1) / k : 1.0;
  if (std::abs(est.slope - c.expected) <= tolerance) c.verdict = below ? Verdict::MatchesEuclidean : Verdict::MatchesLinear;
  return c;
}

/// Volume of the part of the filling whose projection to the geodesic
/// coordinate lies in [lo, hi]; a lower-bound contribution to its volume.
inline double coarea_lower_check(const ProductSpace& sp, const SimplicialChain& filling, const FlatSpec& geodesic,
                                 double lo = -1.0, double hi = 1.0, int coordinate = 0) {
  if (filling.empty()) return 0.0;
  const SimplicialChain slab = clip_chain(sp, filling, flat_coordinate_functional(sp, geodesic, coordinate), lo, hi);
  const double v = k_volume(sp, slab), total = k_volume(sp, filling);
  if (v > total * (1.0 + 1e-9) + 1e-12) throw std::logic_error("slab volume exceeds total volume");
  return v;
}

// ---------------------------------------------------------------------------
// Output.

inline void write_samples_csv(std::ostream& out, const std::vector<Sample>& samples) {
  out << "size,cycle_volume,fill_volume\n" << std::setprecision(17);
  for (const auto& s : samples) out << s.size << "," << s.cycle_volume << "," << s.fill_volume << "\n";
}

inline void write_cone_csv(std::ostream& out, const std::vector<std::pair<double, ConeReport>>& rows) {
  out << "R_or_size,cycle_volume,cone_volume,cap_volume,total_volume,measured_decay\n" << std::setprecision(17);
  for (const auto& [size, r] : rows)
    out << size << "," << r.cycle_volume << "," << r.cone_volume << "," << r.cap_volume << "," << r.total_volume << ","
        << r.measured_decay << "\n";
}

/// Log-log scatter with the fitted line.
inline void write_fit_svg(std::ostream& out, const std::vector<Sample>& samples, const ExponentEstimate& est,
                          const std::string& title) {
  const double W = 480, H = 360, M = 48;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : samples) {
    const double x = std::log(s.cycle_volume), y = std::log(s.fill_volume);
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto py = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };
  std::string esc;
  for (char c : title) {
    if (c == '<') esc += "&lt;";
    else if (c == '>') esc += "&gt;";
    else if (c == '&') esc += "&amp;";
    else esc += c;
  }
  out << std::setprecision(6);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << " " << H << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "  <line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
      << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  out << "  <text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">log cycle volume</text>\n";
  out << "  <text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2
      << ")\">log filling volume</text>\n";
  out << "  <text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << esc << " (slope "
      << est.slope << ")</text>\n";
  out << "  <line x1=\"" << px(x0) << "\" y1=\"" << py(est.intercept + est.slope * x0) << "\" x2=\"" << px(x1)
      << "\" y2=\"" << py(est.intercept + est.slope * x1) << "\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n";
  for (const auto& s : samples)
    out << "  <circle cx=\"" << px(std::log(s.cycle_volume)) << "\" cy=\"" << py(std::log(s.fill_volume))
        << "\" r=\"4\" fill=\"firebrick\"/>\n";
  out << "</svg>\n";
}

}  // namespace dehnfill
