// Run configuration: INI text with sections [grid], [exponents], [solver] and
// [run]. Expression values may be quoted. `preset = section4` in [exponents]
// expands to the built-in test problem on the unit ball of R^3.
#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mpnehari/error.hpp"
#include "mpnehari/expr.hpp"
#include "mpnehari/grid.hpp"
#include "mpnehari/solver.hpp"
#include "mpnehari/spaces.hpp"

namespace mpnehari {

inline const std::map<std::string, std::string>& section4_expressions() {
  static const std::map<std::string, std::string> m = {
      {"p", "2+absx/3"},
      {"q", "2.5+absx/3"},
      {"r", "3+absx/3"},
      {"s", "4.8+sin(3.141592653589793*absx*absx)"},
      {"beta", "0.5+0.4*absx"},
      {"m1", "chi_ball(0,0,0,0.5)"},
      {"m2", "exp(-absx*absx)"},
      {"mu1", "1/(1+absx)"},
      {"mu2", "1/(2+absx)"},
      {"alpha", "absx*absx+1"},
      {"gamma", "absx*absx+1"},
  };
  return m;
}
inline constexpr const char* kSection4Domain = "chi_ball(0,0,0,1)";

struct RunConfig {
  std::size_t dim = 3;
  std::size_t n = 33;
  double lo = -1.0;
  double hi = 1.0;
  std::string domain;
  std::optional<std::string> preset;
  std::map<std::string, std::string> exponents;  // expression text by name
  SolverConfig solver;
  std::vector<double> lambdas;
  std::optional<std::string> output;
  std::uint64_t seed = 1;

  GridPtr build_grid() const { return mpnehari::build_grid(dim, n, lo, hi, parse(domain, dim)); }

  ExponentExprs expressions() const {
    auto get = [&](const char* key) { return parse(exponents.at(key), dim); };
    ExponentExprs e{get("p"),   get("q"),   get("r"),  get("s"),  get("beta"),
                    get("mu1"), get("mu2"), get("m1"), get("m2"), std::nullopt,
                    std::nullopt};
    if (exponents.count("alpha")) e.alpha = get("alpha");
    if (exponents.count("gamma")) e.gamma = get("gamma");
    return e;
  }

  ExponentSet exponent_set(const GridPtr& grid) const {
    return make_exponent_set(grid, expressions());
  }
};

namespace detail {

inline std::string unquote(std::string v) {
  const auto first = v.find_first_not_of(" \t");
  const auto last = v.find_last_not_of(" \t");
  if (first == std::string::npos) return "";
  v = v.substr(first, last - first + 1);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    v = v.substr(1, v.size() - 2);
  return v;
}

inline double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
}

inline std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  }
}

inline std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, unquote(item)));
  return out;
}

}  // namespace detail

/// Parses and validates INI text.
inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("malformed configuration: ") + e.message() + " at line " +
                              std::to_string(e.line()));
  }

  RunConfig cfg;
  static const std::vector<std::string> exponent_keys = {"p",  "q",  "r",   "s",    "beta", "mu1",
                                                          "mu2", "m1", "m2", "alpha", "gamma"};
  bool grid_dim_set = false, grid_domain_set = false;

  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError(section, "key outside of any section");
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      const std::string value = detail::unquote(node.data());
      if (section == "grid") {
        if (name == "dim") {
          cfg.dim = detail::to_unsigned(key, value);
          grid_dim_set = true;
        } else if (name == "n") {
          cfg.n = detail::to_unsigned(key, value);
        } else if (name == "lo") {
          cfg.lo = detail::to_double(key, value);
        } else if (name == "hi") {
          cfg.hi = detail::to_double(key, value);
        } else if (name == "domain") {
          cfg.domain = value;
          grid_domain_set = true;
        } else {
          throw ConfigError(key, "unknown key");
        }
      } else if (section == "exponents") {
        if (name == "preset") {
          cfg.preset = value;
        } else if (std::find(exponent_keys.begin(), exponent_keys.end(), name) !=
                   exponent_keys.end()) {
          cfg.exponents[name] = value;
        } else {
          throw ConfigError(key, "unknown key");
        }
      } else if (section == "solver") {
        SolverConfig& s = cfg.solver;
        auto reg = [&]() -> RegularizationPolicy& {
          if (!s.regularization) s.regularization = RegularizationPolicy{};
          return *s.regularization;
        };
        if (name == "max_outer_iters") s.max_outer_iters = detail::to_unsigned(key, value);
        else if (name == "initial_step") s.initial_step = detail::to_double(key, value);
        else if (name == "armijo_sigma") s.armijo_sigma = detail::to_double(key, value);
        else if (name == "backtrack_factor") s.backtrack_factor = detail::to_double(key, value);
        else if (name == "max_backtracks") s.max_backtracks = detail::to_unsigned(key, value);
        else if (name == "grad_tol") s.grad_tol = detail::to_double(key, value);
        else if (name == "energy_tol") s.energy_tol = detail::to_double(key, value);
        else if (name == "battery_size") s.battery_size = detail::to_unsigned(key, value);
        else if (name == "cg_tol") s.cg_tol = detail::to_double(key, value);
        else if (name == "cg_max_iters") s.cg_max_iters = detail::to_unsigned(key, value);
        else if (name == "tol_root") s.nehari.tol_root = detail::to_double(key, value);
        else if (name == "tol_class") s.nehari.tol_class = detail::to_double(key, value);
        else if (name == "scan_points") s.nehari.scan_points = detail::to_unsigned(key, value);
        else if (name == "t_lo") s.nehari.t_lo = detail::to_double(key, value);
        else if (name == "t_hi") s.nehari.t_hi = detail::to_double(key, value);
        else if (name == "eps_x") reg().eps_x = detail::to_double(key, value);
        else if (name == "eps_u_relative") reg().eps_u_relative = detail::to_double(key, value);
        else throw ConfigError(key, "unknown key");
      } else if (section == "run") {
        if (name == "lambda") cfg.lambdas = detail::to_list(key, value);
        else if (name == "output") cfg.output = value;
        else if (name == "seed") cfg.seed = detail::to_unsigned(key, value);
        else throw ConfigError(key, "unknown key");
      } else {
        throw ConfigError(section, "unknown section");
      }
    }
  }

  if (cfg.preset) {
    if (*cfg.preset != "section4") throw ConfigError("exponents.preset", "unknown preset '" + *cfg.preset + "'");
    if (!cfg.exponents.empty())
      throw ConfigError("exponents", "preset and explicit expressions are mutually exclusive");
    if (grid_dim_set && cfg.dim != 3) throw ConfigError("grid.dim", "the section4 preset is three-dimensional");
    cfg.dim = 3;
    cfg.exponents = section4_expressions();
    if (!grid_domain_set) cfg.domain = kSection4Domain;
  } else {
    for (const char* required : {"p", "q", "r", "s", "beta", "mu1", "mu2", "m1", "m2"})
      if (!cfg.exponents.count(required))
        throw ConfigError(std::string("exponents.") + required, "missing expression");
  }
  if (cfg.domain.empty()) throw ConfigError("grid.domain", "missing domain expression");
  if (cfg.dim < 1 || cfg.dim > kMaxDim) throw ConfigError("grid.dim", "must be 1, 2 or 3");
  if (cfg.n < 3) throw ConfigError("grid.n", "needs at least 3 nodes per axis");
  if (!(cfg.hi > cfg.lo)) throw ConfigError("grid.hi", "must exceed grid.lo");
  cfg.solver.seed = cfg.seed;
  try {
    cfg.solver.check();
  } catch (const Error& e) {
    throw ConfigError("solver", e.what());
  }

  // Every expression must parse; syntax errors propagate as they are.
  parse(cfg.domain, cfg.dim);
  for (const auto& [name, text] : cfg.exponents) parse(text, cfg.dim);
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open configuration file '" + path.string() + "'");
  return parse_config(in);
}

/// The resolved configuration as INI text; loading it reproduces the run.
inline void write_config(std::ostream& os, const RunConfig& cfg) {
  char buf[128];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "[grid]\n"
     << "dim = " << cfg.dim << "\n"
     << "n = " << cfg.n << "\n"
     << "lo = " << num(cfg.lo) << "\n"
     << "hi = " << num(cfg.hi) << "\n"
     << "domain = \"" << cfg.domain << "\"\n\n[exponents]\n";
  for (const auto& [name, text] : cfg.exponents) os << name << " = \"" << text << "\"\n";
  const SolverConfig& s = cfg.solver;
  os << "\n[solver]\n"
     << "max_outer_iters = " << s.max_outer_iters << "\n"
     << "initial_step = " << num(s.initial_step) << "\n"
     << "armijo_sigma = " << num(s.armijo_sigma) << "\n"
     << "backtrack_factor = " << num(s.backtrack_factor) << "\n"
     << "max_backtracks = " << s.max_backtracks << "\n"
     << "grad_tol = " << num(s.grad_tol) << "\n"
     << "energy_tol = " << num(s.energy_tol) << "\n"
     << "battery_size = " << s.battery_size << "\n"
     << "cg_tol = " << num(s.cg_tol) << "\n"
     << "cg_max_iters = " << s.cg_max_iters << "\n"
     << "tol_root = " << num(s.nehari.tol_root) << "\n"
     << "tol_class = " << num(s.nehari.tol_class) << "\n"
     << "scan_points = " << s.nehari.scan_points << "\n"
     << "t_lo = " << num(s.nehari.t_lo) << "\n"
     << "t_hi = " << num(s.nehari.t_hi) << "\n";
  if (s.regularization)
    os << "eps_x = " << num(s.regularization->eps_x) << "\n"
       << "eps_u_relative = " << num(s.regularization->eps_u_relative) << "\n";
  os << "\n[run]\nlambda = \"";
  for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) os << (i ? ", " : "") << num(cfg.lambdas[i]);
  os << "\"\nseed = " << cfg.seed << "\n";
  if (cfg.output) os << "output = \"" << *cfg.output << "\"\n";
}

}  // namespace mpnehari
