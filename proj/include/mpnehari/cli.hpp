// Command-line front end: validate, fibering, solve, sweep and hardy.
//
// Exit codes: 0 success, 1 a check reported failure or an unexpected error,
// 2 configuration or usage error, 3 hypotheses not satisfied, 4 solver failure.
#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mpnehari/config.hpp"
#include "mpnehari/energy.hpp"
#include "mpnehari/fields.hpp"
#include "mpnehari/nehari.hpp"
#include "mpnehari/solver.hpp"
#include "mpnehari/spaces.hpp"

namespace mpnehari {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "MPNEHARI_OUTPUT_DIR";

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,
  kExitHypothesis = 3,
  kExitSolver = 4,
};

namespace detail {

struct CliContext {
  RunConfig cfg;
  std::filesystem::path out_dir;
  std::string command;
  std::ostream* out = nullptr;
};

inline std::filesystem::path resolve_output(const std::optional<std::string>& flag,
                                            const RunConfig& cfg) {
  if (flag) return *flag;
  if (cfg.output) return *cfg.output;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "mpnehari_out";
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

template <class Writer>
inline std::string render(Writer&& w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

inline void write_manifest(const CliContext& ctx, const std::string& extra) {
  std::ostringstream os;
  char buf[64];
  os << "# run manifest\n"
     << "version=" << kVersion << '\n'
     << "command=" << ctx.command << '\n'
     << "seed=" << ctx.cfg.seed << '\n';
  std::snprintf(buf, sizeof buf, "tol_lux=%.17g\n", kTolLux);
  os << buf << extra << "\n# resolved configuration\n";
  write_config(os, ctx.cfg);
  write_file(ctx.out_dir / "manifest.txt", os.str());
}

inline ScalarField direction_field(const std::string& spec, const GridPtr& grid,
                                   std::uint64_t seed) {
  if (spec == "bump") return bump_field(grid);
  if (spec.rfind("random:", 0) == 0) {
    const std::string idx = spec.substr(7);
    std::uint64_t k = 0;
    try {
      k = std::stoull(idx);
    } catch (const std::exception&) {
      throw ConfigError("direction", "expected random:<index>, got '" + spec + "'");
    }
    return random_positive_field(grid, seed, k);
  }
  return sample(grid, parse(spec, grid->dim), true);
}

inline void write_roots(std::ostream& os, const FiberingResult& res, double lambda) {
  char buf[160];
  auto put = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", key.c_str(), v);
    os << buf;
  };
  put("lambda", lambda);
  put("direction_norm", res.direction_norm);
  os << "root_count=" << res.roots.size() << '\n';
  for (std::size_t i = 0; i < res.roots.size(); ++i) {
    const auto& r = res.roots[i];
    const std::string p = "root." + std::to_string(i) + ".";
    put(p + "t", r.t);
    put(p + "phi", r.phi);
    put(p + "phi1", r.phi1);
    put(p + "phi2", r.phi2);
    put(p + "residual", r.residual);
    put(p + "scale", r.scale);
    os << p << "branch=" << branch_name(r.branch) << '\n';
  }
}

inline int require_hypotheses(const ExponentSet& es, std::ostream& err) {
  const HypothesisReport rep = validate(es);
  if (rep.core_passed()) return kExitOk;
  err << "hypotheses not satisfied:";
  for (const HypothesisCheck* c : {&rep.h1, &rep.h2, &rep.a_beta})
    if (!c->passed) err << ' ' << c->name << " (" << c->detail << ')';
  err << '\n';
  return kExitHypothesis;
}

inline int cmd_validate(CliContext& ctx, std::ostream& err) {
  const GridPtr grid = ctx.cfg.build_grid();
  const ExponentSet es = ctx.cfg.exponent_set(grid);
  const HypothesisReport rep = validate(es);
  const std::string text = render([&](std::ostream& os) {
    write_key_values(os, rep);
    write_key_values(os, lambda_bounds(es));
  });
  *ctx.out << text;
  write_file(ctx.out_dir / "validate.txt", text);
  write_manifest(ctx, "");
  if (!rep.core_passed()) {
    err << "hypotheses not satisfied\n";
    return kExitHypothesis;
  }
  return kExitOk;
}

inline int cmd_fibering(CliContext& ctx, const std::string& direction,
                        std::optional<double> lambda_flag, std::ostream& err) {
  const GridPtr grid = ctx.cfg.build_grid();
  const ExponentSet es = ctx.cfg.exponent_set(grid);
  if (int rc = require_hypotheses(es, err)) return rc;
  const double lambda = lambda_flag ? *lambda_flag
                        : !ctx.cfg.lambdas.empty()
                            ? ctx.cfg.lambdas.front()
                            : throw ConfigError("run.lambda", "no lambda given");
  char buf[96];
  std::snprintf(buf, sizeof buf, "lambda=%.17g\n", lambda);
  write_manifest(ctx, std::string(buf) + "direction=" + direction + '\n');

  const ScalarField u = direction_field(direction, grid, ctx.cfg.seed);
  const RegularizationPolicy pol = ctx.cfg.solver.policy(*grid);
  try {
    const FiberingResult res = project_to_nehari(u, es, lambda, pol, ctx.cfg.solver.nehari);
    write_file(ctx.out_dir / "fibering.csv",
               render([&](std::ostream& os) { write_scan_csv(os, res.scan); }));
    const std::string text = render([&](std::ostream& os) { write_roots(os, res, lambda); });
    *ctx.out << text;
    write_file(ctx.out_dir / "roots.txt", text);
  } catch (const NoRoot& e) {
    write_file(ctx.out_dir / "fibering.csv",
               render([&](std::ostream& os) { write_scan_csv(os, e.scan()); }));
    throw;
  }
  return kExitOk;
}

inline int cmd_solve(CliContext& ctx, std::optional<double> lambda_flag, std::ostream& err) {
  const GridPtr grid = ctx.cfg.build_grid();
  const ExponentSet es = ctx.cfg.exponent_set(grid);
  if (int rc = require_hypotheses(es, err)) return rc;
  const double lambda = lambda_flag ? *lambda_flag
                        : !ctx.cfg.lambdas.empty()
                            ? ctx.cfg.lambdas.front()
                            : throw ConfigError("run.lambda", "no lambda given");
  char buf[96];
  std::snprintf(buf, sizeof buf, "lambda=%.17g\n", lambda);
  write_manifest(ctx, buf);
  if (lambda >= lambda_bounds(es).lambda_star)
    err << "warning: lambda is not below the analytic threshold\n";

  const SolveReport rep = solve_two(es, lambda, ctx.cfg.solver);
  const std::string text = render([&](std::ostream& os) { write_key_values(os, rep); });
  *ctx.out << text;
  write_file(ctx.out_dir / "report.txt", text);
  write_file(ctx.out_dir / "u_plus.csv", render([&](std::ostream& os) { write_csv(os, rep.plus.u); }));
  write_file(ctx.out_dir / "u_minus.csv", render([&](std::ostream& os) { write_csv(os, rep.minus.u); }));
  write_file(ctx.out_dir / "trace_plus.csv",
             render([&](std::ostream& os) { write_trace_csv(os, rep.plus, lambda); }));
  write_file(ctx.out_dir / "trace_minus.csv",
             render([&](std::ostream& os) { write_trace_csv(os, rep.minus, lambda); }));
  return kExitOk;
}

inline int cmd_sweep(CliContext& ctx, const std::vector<double>& lambda_flag, std::ostream& err) {
  const GridPtr grid = ctx.cfg.build_grid();
  const ExponentSet es = ctx.cfg.exponent_set(grid);
  if (int rc = require_hypotheses(es, err)) return rc;
  const std::vector<double>& lambdas = lambda_flag.empty() ? ctx.cfg.lambdas : lambda_flag;
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    if (!(lambdas[i] > 0.0) || (i > 0 && !(lambdas[i] > lambdas[i - 1])))
      throw ConfigError("run.lambda", "sweep values must be positive and increasing");
  write_manifest(ctx, "");

  const SweepResult res = lambda_sweep(es, lambdas, ctx.cfg.solver);
  write_file(ctx.out_dir / "sweep.csv", render([&](std::ostream& os) { write_sweep_csv(os, res); }));
  const std::string text = render([&](std::ostream& os) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "lambda_star_analytic=%.17g\n", res.lambda_star_analytic);
    os << buf;
    if (res.lambda_star_empirical) {
      std::snprintf(buf, sizeof buf, "lambda_star_empirical=%.17g\n", *res.lambda_star_empirical);
      os << buf;
    } else {
      os << "lambda_star_empirical=none\n";
    }
    os << "anomaly=" << (res.anomaly ? "true" : "false") << '\n';
    for (const auto& r : res.rows)
      if (!r.note.empty()) {
        std::snprintf(buf, sizeof buf, "note.%.6g=", r.lambda);
        os << buf << r.note << '\n';
      }
  });
  *ctx.out << text;
  write_file(ctx.out_dir / "sweep.txt", text);
  return kExitOk;
}

inline int cmd_hardy(CliContext& ctx, std::size_t battery, std::ostream& err) {
  const GridPtr grid = ctx.cfg.build_grid();
  const ExponentSet es = ctx.cfg.exponent_set(grid);
  if (int rc = require_hypotheses(es, err)) return rc;
  write_manifest(ctx, "battery=" + std::to_string(battery) + '\n');

  const RegularizationPolicy pol = ctx.cfg.solver.policy(*grid);
  // The embedding constant is estimated on a battery independent of the one checked.
  const EmbeddingEstimate emb =
      estimate_embedding(positive_battery(grid, std::max<std::size_t>(battery, 100),
                                          ctx.cfg.seed ^ 0x9e3779b97f4a7c15ULL),
                         es);
  const auto fields = positive_battery(grid, battery, ctx.cfg.seed);

  std::ostringstream csv;
  csv << "field,upper_lhs,upper_rhs,upper_pass,lower_lhs,lower_rhs,lower_pass,sobolev_norm,phi0,"
         "norm_t,tau\n";
  std::size_t upper_ok = 0, lower_ok = 0;
  HardyUpperCheck last_upper;
  HardyLowerCheck last_lower;
  char buf[384];
  for (std::size_t k = 0; k < fields.size(); ++k) {
    last_upper = hardy_check_upper(fields[k], es, emb.c_hat_m, pol);
    last_lower = hardy_check_lower(fields[k], es, pol);
    upper_ok += last_upper.pass;
    lower_ok += last_lower.pass;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g\n", k,
                  last_upper.lhs, last_upper.rhs, last_upper.pass ? 1 : 0, last_lower.lhs,
                  last_lower.rhs, last_lower.pass ? 1 : 0, last_upper.sobolev_norm,
                  last_upper.phi0, last_lower.norm_t, last_lower.tau);
    csv << buf;
  }
  write_file(ctx.out_dir / "hardy.csv", csv.str());

  const std::string text = render([&](std::ostream& os) {
    auto put = [&](const char* key, double v) {
      std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, v);
      os << buf;
    };
    os << "battery=" << fields.size() << '\n' << "embedding_battery=" << emb.battery << '\n';
    put("c_hat_m", emb.c_hat_m);
    put("c_n_p_minus", hardy_constant(es.p_minus(), grid->dim));
    put("c_n_r_plus", hardy_constant(es.r_plus(), grid->dim));
    if (!fields.empty()) {
      put("c_n_pr", last_upper.c_n_pr);
      put("x_star", last_lower.x_star);
      put("x_star_coordinate_bound", last_lower.x_star_coordinate);
    }
    os << "upper_pass=" << upper_ok << '/' << fields.size() << '\n'
       << "lower_pass=" << lower_ok << '/' << fields.size() << '\n';
  });
  *ctx.out << text;
  write_file(ctx.out_dir / "hardy.txt", text);
  return upper_ok == fields.size() && lower_ok == fields.size() ? kExitOk : kExitCheckFailed;
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Positive solutions of singular multi-phase problems on the Nehari set"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::vector<double> lambdas;
  std::string direction = "bump";
  std::size_t battery = 100;

  auto common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "configuration file")->required();
    sub->add_option("--output,-o", output, "output directory");
    sub->add_option("--seed", seed, "random seed (overrides [run] seed)");
  };
  CLI::App* validate_cmd = app.add_subcommand("validate", "check the structural hypotheses");
  common(validate_cmd);
  CLI::App* fibering_cmd = app.add_subcommand("fibering", "scan one fibering map and its roots");
  common(fibering_cmd);
  fibering_cmd->add_option("--direction", direction,
                           "direction: 'bump', 'random:<k>' or an expression in x1..xN, absx");
  fibering_cmd->add_option("--lambda", lambda, "lambda");
  CLI::App* solve_cmd = app.add_subcommand("solve", "minimise on both Nehari branches");
  common(solve_cmd);
  solve_cmd->add_option("--lambda", lambda, "lambda");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "solve over a list of lambdas");
  common(sweep_cmd);
  sweep_cmd->add_option("--lambdas", lambdas, "lambda values (overrides [run] lambda)")
      ->delimiter(',');
  CLI::App* hardy_cmd = app.add_subcommand("hardy", "check the Hardy-type bounds on a battery");
  common(hardy_cmd);
  hardy_cmd->add_option("--battery", battery, "number of fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  detail::CliContext ctx;
  ctx.out = &out;
  try {
    ctx.cfg = load_config(config_path);
    if (seed) {
      ctx.cfg.seed = *seed;
      ctx.cfg.solver.seed = *seed;
    }
    ctx.out_dir = detail::resolve_output(output, ctx.cfg);
    std::filesystem::create_directories(ctx.out_dir);

    if (*validate_cmd) {
      ctx.command = "validate";
      return detail::cmd_validate(ctx, err);
    }
    if (*fibering_cmd) {
      ctx.command = "fibering";
      return detail::cmd_fibering(ctx, direction, lambda, err);
    }
    if (*solve_cmd) {
      ctx.command = "solve";
      return detail::cmd_solve(ctx, lambda, err);
    }
    if (*sweep_cmd) {
      ctx.command = "sweep";
      return detail::cmd_sweep(ctx, lambdas, err);
    }
    ctx.command = "hardy";
    return detail::cmd_hardy(ctx, battery, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SyntaxError& e) {
    err << "expression error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnknownIdentifier& e) {
    err << "expression error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const EvalError& e) {
    err << "expression error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const EmptyDomain& e) {
    err << "grid error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionMismatch& e) {
    err << "grid error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionUnsupported& e) {
    err << "grid error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BranchVanished& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const DistinctnessFailure& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const NoRoot& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ZeroDirection& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const NotOnManifold& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace mpnehari
