#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dehnfill/config.hpp"
#include "dehnfill/conefill.hpp"
#include "dehnfill/expfit.hpp"
#include "dehnfill/lpfill.hpp"
#include "dehnfill/rootgeo.hpp"

using namespace dehnfill;

namespace {

struct Common {
  std::string config;
  std::optional<std::string> out;
  std::optional<long> seed;
  std::optional<double> mesh;
};

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (c.out) cfg.out = *c.out;
  if (c.seed) cfg.spec.seed = static_cast<std::uint64_t>(*c.seed);
  if (c.mesh) cfg.spec.mesh = *c.mesh;
  return cfg;
}

int cmd_exponent(const Common& c) {
  const RunConfig cfg = load(c);
  return run(cfg, std::cout, std::cerr).exit_code;
}

int cmd_cone(const Common& c) {
  RunConfig cfg = load(c);
  if (cfg.spec.schedule.empty()) throw ConfigError("cone needs at least one schedule size");
  const ProductSpace sp = ProductSpace::parse(cfg.space);
  std::vector<std::pair<double, ConeReport>> rows;
  for (double size : cfg.spec.schedule) {
    const SimplicialChain cycle = family_cycle(sp, cfg.spec, size);
    const ConeFill f = cone_fill(sp, cycle, detail::cone_params(sp, cfg.spec));
    rows.emplace_back(size, f.report);
    std::cout << std::setprecision(6) << "size " << size << ": cycle " << f.report.cycle_volume << ", cone "
              << f.report.cone_volume << ", cap " << f.report.cap_volume << ", total " << f.report.total_volume
              << ", C1 " << f.report.measured_C1 << ", decay " << f.report.measured_decay << "\n";
  }
  std::filesystem::create_directories(cfg.out);
  const auto path = std::filesystem::path(cfg.out) / (cfg.name + "_cone.csv");
  std::ofstream csv(path);
  if (!csv) throw ConfigError("cannot write " + path.string());
  write_cone_csv(csv, rows);
  return 0;
}

int cmd_lpfill(const std::string& complex_path, const std::string& cycle_path, const std::string& mode) {
  std::ifstream cin_(complex_path), zin(cycle_path);
  if (!cin_) throw ConfigError("cannot read complex '" + complex_path + "'");
  if (!zin) throw ConfigError("cannot read cycle '" + cycle_path + "'");
  const CellComplex cx = read_complex(cin_);
  const CycleFile cf = read_cycle(zin);
  LpMode m = LpMode::Auto;
  if (mode == "double") m = LpMode::Double;
  else if (mode == "rational") m = LpMode::Rational;
  else if (mode != "auto") throw ConfigError("unknown lp mode '" + mode + "'");
  const FillResult r = min_fill(cx, cf.dim, cycle_vector(cx, cf), m);
  std::cout << std::setprecision(12) << "value " << r.value << "\nresidual " << r.residual << "\n";
  if (r.exact) std::cout << "exact " << r.exact_value << "\n";
  std::cout << "integral " << (r.integral ? "yes" : "no") << "\n";
  std::vector<long long> chain;
  if (r.integral) {
    for (double v : r.chain) chain.push_back(std::llround(v));
    write_cycle(std::cout, cf.dim + 1, chain);
  }
  return 0;
}

int cmd_jacobi(const std::string& label, double t) {
  const rootgeo::RootSystem rs = rootgeo::from_label(label);
  const auto ch = rootgeo::chamber_barycenter(rs);
  std::cout << std::setprecision(10) << "root system " << rs.label() << ", rank " << rs.rank() << "\n";
  std::cout << "rho_star " << ch.rho_star << "\n";
  std::cout << "lambda multiplicity rate factor(t=" << t << ")\n";
  for (const auto& e : rootgeo::curvature_eigenvalues(rs, ch.H0)) {
    const double rate = std::sqrt(e.lambda);
    std::cout << e.lambda << " " << e.multiplicity << " " << rate << " " << std::exp(-rate * t) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dehnfill: filling volumes of cycles in model CAT(0) spaces"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "random seed");
    sub->add_option("--mesh", common.mesh, "mesh size");
  };
  auto* exponent = app.add_subcommand("exponent", "run a family, fit the exponent, print the verdict");
  add_common(exponent);
  auto* cone = app.add_subcommand("cone", "cone-fill each member of a family and print the reports");
  add_common(cone);
  std::string complex_path, cycle_path, mode = "auto";
  auto* lp = app.add_subcommand("lpfill", "minimal filling of a cycle in a cell complex");
  lp->add_option("--complex", complex_path, "complex file")->required()->check(CLI::ExistingFile);
  lp->add_option("--cycle", cycle_path, "cycle file")->required()->check(CLI::ExistingFile);
  lp->add_option("--mode", mode, "double, rational or auto");
  std::string roots = "A1xA1";
  double t = 1.0;
  auto* jac = app.add_subcommand("jacobi", "curvature eigenvalues and decay rates at the chamber barycenter");
  jac->add_option("--roots", roots, "root system label (A1, A1xA1, A1^3, A2, B2, G2)");
  jac->add_option("--t", t, "time for the decay factor");
  CLI11_PARSE(app, argc, argv);
  try {
    if (*exponent) return cmd_exponent(common);
    if (*cone) return cmd_cone(common);
    if (*lp) return cmd_lpfill(complex_path, cycle_path, mode);
    if (*jac) return cmd_jacobi(roots, t);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
