#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dehnfill/errors.hpp"
#include "dehnfill/expfit.hpp"
#include "dehnfill/modelspace.hpp"

namespace dehnfill {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string space;
  std::string experiment;
  std::string name;  // output file stem, defaults to the experiment
  ExperimentSpec spec;
  double tolerance = 0.2;
  std::string out = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v, int line) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw ConfigError("line " + std::to_string(line) + ": '" + key + "' needs a number, got '" + v + "'");
  return x;
}

inline long to_int(const std::string& key, const std::string& v, int line) {
  const double x = to_double(key, v, line);
  if (x != static_cast<double>(static_cast<long>(x)))
    throw ConfigError("line " + std::to_string(line) + ": '" + key + "' needs an integer, got '" + v + "'");
  return static_cast<long>(x);
}

}  // namespace detail

/// key = value lines; '#' starts a comment.
inline RunConfig parse_config(const std::string& text) {
  static const std::vector<std::string> known = {
      "space",   "experiment", "k",        "schedule",  "filler",   "mesh",     "t_max",
      "time_steps", "cap_level", "cap_strategy", "cap_mesh", "delta", "level", "lp_cell",
      "lp_layer", "lp_below",  "lp_mode",  "tolerance", "out",      "seed",     "name"};
  std::map<std::string, std::pair<std::string, int>> kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = detail::trim(s.substr(0, eq)), value = detail::trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    if (auto it = kv.find(key); it != kv.end())
      throw ConfigError("duplicate key '" + key + "' on lines " + std::to_string(it->second.second) + " and " +
                        std::to_string(line));
    kv[key] = {value, line};
  }
  RunConfig cfg;
  auto get = [&](const std::string& key) -> std::optional<std::pair<std::string, int>> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  auto wrap = [](int l, const std::exception& e) { return ConfigError("line " + std::to_string(l) + ": " + e.what()); };
  if (auto v = get("space")) {
    try {
      cfg.space = ProductSpace::parse(v->first).spec();
    } catch (const DomainError& e) {
      throw wrap(v->second, e);
    }
  } else {
    throw ConfigError("missing key 'space'");
  }
  cfg.spec.space = cfg.space;
  if (auto v = get("experiment")) {
    try {
      cfg.spec.family = parse_family(v->first);
    } catch (const DomainError& e) {
      throw wrap(v->second, e);
    }
    cfg.experiment = v->first;
  } else {
    throw ConfigError("missing key 'experiment'");
  }
  cfg.name = cfg.experiment;
  if (auto v = get("name")) cfg.name = v->first;
  if (auto v = get("k")) cfg.spec.k = static_cast<int>(detail::to_int("k", v->first, v->second));
  if (auto v = get("schedule")) {
    std::string s = v->first;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) cfg.spec.schedule.push_back(detail::to_double("schedule", tok, v->second));
  }
  if (auto v = get("filler")) {
    try {
      cfg.spec.filler = parse_filler(v->first);
    } catch (const DomainError& e) {
      throw wrap(v->second, e);
    }
  }
  if (auto v = get("mesh")) cfg.spec.mesh = detail::to_double("mesh", v->first, v->second);
  if (auto v = get("t_max")) cfg.spec.t_max = detail::to_double("t_max", v->first, v->second);
  if (auto v = get("time_steps")) cfg.spec.time_steps = static_cast<int>(detail::to_int("time_steps", v->first, v->second));
  if (auto v = get("cap_level")) cfg.spec.cap_level = detail::to_double("cap_level", v->first, v->second);
  if (auto v = get("cap_strategy")) {
    if (v->first == "flat_cone_in_horosphere") cfg.spec.cap_strategy = CapStrategy::FlatConeInHorosphere;
    else if (v->first == "lp_fill") cfg.spec.cap_strategy = CapStrategy::LpFill;
    else throw ConfigError("line " + std::to_string(v->second) + ": unknown cap strategy '" + v->first + "'");
  }
  if (auto v = get("cap_mesh")) cfg.spec.cap_mesh = detail::to_double("cap_mesh", v->first, v->second);
  if (auto v = get("delta")) cfg.spec.delta = detail::to_double("delta", v->first, v->second);
  if (auto v = get("level")) cfg.spec.level = detail::to_double("level", v->first, v->second);
  if (auto v = get("lp_cell")) cfg.spec.lp_cell = detail::to_double("lp_cell", v->first, v->second);
  if (auto v = get("lp_layer")) cfg.spec.lp_layer = detail::to_double("lp_layer", v->first, v->second);
  if (auto v = get("lp_below")) cfg.spec.lp_below = static_cast<int>(detail::to_int("lp_below", v->first, v->second));
  if (auto v = get("lp_mode")) {
    if (v->first == "double") cfg.spec.lp_mode = LpMode::Double;
    else if (v->first == "rational") cfg.spec.lp_mode = LpMode::Rational;
    else if (v->first == "auto") cfg.spec.lp_mode = LpMode::Auto;
    else throw ConfigError("line " + std::to_string(v->second) + ": unknown lp mode '" + v->first + "'");
  }
  if (auto v = get("tolerance")) cfg.tolerance = detail::to_double("tolerance", v->first, v->second);
  if (auto v = get("out")) cfg.out = v->first;
  if (auto v = get("seed")) cfg.spec.seed = static_cast<std::uint64_t>(detail::to_int("seed", v->first, v->second));
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

struct RunOutcome {
  int exit_code = 1;
  std::vector<Sample> samples;
  ExponentEstimate estimate;
  TheoryComparison comparison;
};

/// Runs the experiment, writes <out>/<name>.csv and .svg and prints the
/// verdict line. Exit code 0 on a match, 2 on a mismatch, 1 on error.
inline RunOutcome run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  RunOutcome r;
  try {
    r.samples = run_family(cfg.spec);
    r.estimate = fit_exponent(r.samples);
    const ProductSpace sp = ProductSpace::parse(cfg.space);
    r.comparison = compare_theory(r.estimate, cfg.spec.k, sp.effective_rank(), sp.dim(), cfg.tolerance);
    std::filesystem::create_directories(cfg.out);
    const auto stem = std::filesystem::path(cfg.out) / cfg.name;
    {
      std::ofstream csv(stem.string() + ".csv");
      if (!csv) throw ConfigError("cannot write " + stem.string() + ".csv");
      write_samples_csv(csv, r.samples);
    }
    {
      std::ofstream svg(stem.string() + ".svg");
      if (!svg) throw ConfigError("cannot write " + stem.string() + ".svg");
      write_fit_svg(svg, r.samples, r.estimate, cfg.name + " in " + cfg.space);
    }
    std::ostringstream line;
    line << std::setprecision(4) << "expected " << r.comparison.expected << ", measured " << r.estimate.slope
         << ", verdict " << to_string(r.comparison.verdict);
    log << line.str() << "\n";
    r.exit_code = r.comparison.verdict == Verdict::Mismatch ? 2 : 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    r.exit_code = 1;
  }
  return r;
}

}  // namespace dehnfill
