// Minimisation of J_λ over the Nehari branches M⁺ and M⁻ and λ sweeps.
//
// Descent runs in the discrete H¹₀ metric: the step direction is −P⁻¹G with P
// the Dirichlet Laplacian, solved by conjugate gradients. After each step the
// field is clipped to the positive cone and re-projected onto the requested
// branch along its ray; Armijo backtracking is applied to the projected energy.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpnehari/energy.hpp"
#include "mpnehari/error.hpp"
#include "mpnehari/fields.hpp"
#include "mpnehari/nehari.hpp"
#include "mpnehari/spaces.hpp"

namespace mpnehari {

struct SolverConfig {
  std::size_t max_outer_iters = 500;
  double initial_step = 0.1;  // first trial step, as a fraction of ‖u‖_H / ‖G‖_H⁻¹
  double armijo_sigma = 1e-4;
  double backtrack_factor = 0.5;
  std::size_t max_backtracks = 40;
  double grad_tol = 1e-4;     // on ‖G‖_H⁻¹ ‖u‖_H / (Σ|terms of ⟨J'(u),u⟩|)
  double energy_tol = 1e-10;  // on the last decrease, relative to max(1, |J|)
  std::size_t battery_size = 3;
  std::uint64_t seed = 1;
  std::optional<RegularizationPolicy> regularization;  // default: for the grid
  NehariOptions nehari;
  double cg_tol = 1e-10;
  std::size_t cg_max_iters = 2000;

  void check() const {
    if (max_outer_iters < 1) throw Error("solver needs at least one outer iteration");
    if (battery_size < 1) throw Error("solver needs a non-empty battery");
    if (!(grad_tol > 0.0) || !(energy_tol > 0.0) || !(cg_tol > 0.0))
      throw Error("solver tolerances must be positive");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
      throw Error("backtrack factor must lie in (0, 1)");
  }
  /// Grid default, with any configured floors taking precedence.
  RegularizationPolicy policy(const GridSpec& g) const {
    RegularizationPolicy pol = RegularizationPolicy::for_grid(g);
    if (regularization) {
      if (regularization->eps_x > 0.0) pol.eps_x = regularization->eps_x;
      pol.eps_u_relative = regularization->eps_u_relative;
    }
    return pol;
  }
};

struct TraceRow {
  std::size_t iter = 0;
  EnergyBreakdown energy;
  double nehari_residual = 0.0;
  double grad_norm = 0.0;  // relative, as compared with grad_tol
  double step = 0.0;
  double sobolev_norm = 0.0;
};

struct BranchResult {
  Branch branch = Branch::Mplus;
  ScalarField u;
  double energy = 0.0;
  EnergyBreakdown breakdown;
  double nehari_residual = 0.0;
  double nehari_scale = 0.0;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::size_t member = 0;  // battery member that produced the minimiser
  double delta_obs = std::numeric_limits<double>::infinity();
  std::vector<TraceRow> trace;
};

namespace detail {

// (P z)_i = Σ_k (2 z_i − z_{i+e_k} − z_{i−e_k}) / h², Dirichlet-zero.
inline void apply_laplacian(const GridSpec& g, const std::vector<double>& z, std::vector<double>& out) {
  const double ih2 = 1.0 / (g.h * g.h);
  for (std::size_t node : g.interior) {
    double s = 0.0;
    for (std::size_t k = 0; k < g.dim; ++k)
      s += 2.0 * z[node] - z[node + g.stride[k]] - z[node - g.stride[k]];
    out[node] = s * ih2;
  }
}

inline double dot_interior(const GridSpec& g, const std::vector<double>& a,
                           const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t node : g.interior) s += a[node] * b[node];
  return s;
}

/// Solves P z = rhs by conjugate gradients.
inline ScalarField solve_laplacian(const ScalarField& rhs, double tol, std::size_t max_iters) {
  const GridSpec& g = *rhs.grid;
  std::vector<double> x(g.node_count, 0.0), r = rhs.values, p, ap(g.node_count, 0.0);
  for (std::size_t node = 0; node < g.node_count; ++node)
    if (!g.is_interior(node)) r[node] = 0.0;
  p = r;
  double rr = dot_interior(g, r, r);
  const double stop = tol * tol * rr;
  for (std::size_t it = 0; it < max_iters && rr > stop && rr > 0.0; ++it) {
    apply_laplacian(g, p, ap);
    const double alpha = rr / dot_interior(g, p, ap);
    for (std::size_t node : g.interior) {
      x[node] += alpha * p[node];
      r[node] -= alpha * ap[node];
    }
    const double rr_new = dot_interior(g, r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t node : g.interior) p[node] = r[node] + beta * p[node];
  }
  return ScalarField(rhs.grid, std::move(x));
}

/// ‖u‖_H = (Σ (P u) u h^N)^{1/2}.
inline double h1_norm(const ScalarField& u) {
  const GridSpec& g = *u.grid;
  std::vector<double> pu(g.node_count, 0.0);
  apply_laplacian(g, u.values, pu);
  return std::sqrt(std::max(0.0, dot_interior(g, pu, u.values) * g.cell_volume));
}

struct BranchPoint {
  ScalarField u;
  FiberingRoot root;
};

inline std::optional<BranchPoint> branch_point(const ScalarField& direction, Branch branch,
                                               const ExponentSet& es, double lambda,
                                               const RegularizationPolicy& pol,
                                               const NehariOptions& opt) {
  if (is_zero_on_interior(direction)) return std::nullopt;
  try {
    const FiberingResult res = project_to_nehari(direction, es, lambda, pol, opt);
    const auto root = res.pick(branch);
    if (!root) return std::nullopt;
    return BranchPoint{res.point(*root), *root};
  } catch (const NoRoot&) {
    return std::nullopt;
  }
}

inline BranchResult descend(BranchPoint start, Branch branch, const ExponentSet& es, double lambda,
                            const SolverConfig& cfg, const RegularizationPolicy& pol) {
  const GridSpec& g = *es.grid;
  BranchResult out;
  out.branch = branch;
  ScalarField u = std::move(start.u);
  FiberingRoot root = start.root;
  double J = root.phi;
  double last_decrease = std::numeric_limits<double>::infinity();
  double step = -1.0;  // set on the first iteration

  for (std::size_t iter = 0;; ++iter) {
    const ScalarField G = energy_gradient(u, es, lambda, pol);
    const ScalarField z = solve_laplacian(G, cfg.cg_tol, cfg.cg_max_iters);
    const double gn = std::sqrt(std::max(0.0, inner(G, z)));
    const double hn = h1_norm(u);
    const double rel = root.scale > 0.0 ? gn * hn / root.scale : 0.0;

    TraceRow row;
    row.iter = iter;
    row.energy = energy(u, es, lambda, pol);
    row.nehari_residual = root.residual;
    row.grad_norm = rel;
    row.step = step < 0.0 ? 0.0 : step;
    row.sobolev_norm = sobolev_norm(u, es);
    out.delta_obs = std::min(out.delta_obs, row.sobolev_norm);
    out.trace.push_back(row);
    out.iterations = iter;
    out.grad_norm = rel;

    const bool small_gradient = rel <= cfg.grad_tol;
    if (small_gradient && last_decrease <= cfg.energy_tol * std::max(1.0, std::abs(J))) {
      out.converged = true;
      break;
    }
    if (iter >= cfg.max_outer_iters || gn == 0.0) {
      out.converged = small_gradient;
      break;
    }

    if (step < 0.0) step = cfg.initial_step * hn / gn;
    bool accepted = false;
    for (std::size_t k = 0; k <= cfg.max_backtracks; ++k, step *= cfg.backtrack_factor) {
      ScalarField v = axpy(-step, z, u);
      for (std::size_t node : g.interior) v[node] = std::max(0.0, v[node]);
      auto next = branch_point(v, branch, es, lambda, pol, cfg.nehari);
      if (!next) continue;
      if (next->root.phi <= J - cfg.armijo_sigma * step * gn * gn) {
        last_decrease = J - next->root.phi;
        J = next->root.phi;
        u = std::move(next->u);
        root = next->root;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.converged = small_gradient;
      break;
    }
    step *= 2.0;
  }

  out.u = std::move(u);
  out.breakdown = energy(out.u, es, lambda, pol);
  out.energy = out.breakdown.total;
  const NehariTerms terms = nehari_terms(out.u, es, lambda, pol, 1);
  out.nehari_residual = std::abs(terms.total());
  out.nehari_scale = terms.magnitude();
  return out;
}

}  // namespace detail

/// Best-of-battery minimiser of J_λ on the requested branch (Mplus or Mminus).
/// Throws BranchVanished when no battery direction has a root on that branch.
inline BranchResult minimize_branch(Branch branch, const ExponentSet& es, double lambda,
                                    const SolverConfig& cfg) {
  if (branch == Branch::Mzero) throw Error("minimisation runs on Mplus or Mminus only");
  cfg.check();
  const RegularizationPolicy pol = cfg.policy(*es.grid);
  const auto battery = positive_battery(es.grid, cfg.battery_size, cfg.seed);
  std::optional<BranchResult> best;
  for (std::size_t k = 0; k < battery.size(); ++k) {
    auto start = detail::branch_point(battery[k], branch, es, lambda, pol, cfg.nehari);
    if (!start) continue;
    BranchResult r = detail::descend(std::move(*start), branch, es, lambda, cfg, pol);
    r.member = k;
    if (!best || r.energy < best->energy) best = std::move(r);
  }
  if (!best)
    throw BranchVanished(std::string("no battery direction has a root on ") + branch_name(branch) +
                         " at this lambda");
  return std::move(*best);
}

struct SolveReport {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  BranchResult plus, minus;
  double delta_obs = 0.0;
  double distance = 0.0;  // ‖u⁺ − u⁻‖_{1,T,0}
  LambdaBounds bounds;
  HypothesisReport hypothesis;
  SolverConfig config;
};

inline SolveReport solve_two(const ExponentSet& es, double lambda, const SolverConfig& cfg) {
  SolveReport rep;
  rep.lambda = lambda;
  rep.seed = cfg.seed;
  rep.config = cfg;
  rep.bounds = lambda_bounds(es);
  rep.hypothesis = validate(es);
  rep.plus = minimize_branch(Branch::Mplus, es, lambda, cfg);
  rep.minus = minimize_branch(Branch::Mminus, es, lambda, cfg);
  rep.delta_obs = std::min(rep.plus.delta_obs, rep.minus.delta_obs);
  rep.distance = sobolev_norm(axpy(-1.0, rep.minus.u, rep.plus.u), es);
  if (!(rep.distance > 10.0 * cfg.grad_tol))
    throw DistinctnessFailure("the two branch minimisers coincide within tolerance");
  return rep;
}

struct SweepRow {
  double lambda = 0.0;
  bool found_plus = false, found_minus = false;
  double m_plus = std::numeric_limits<double>::quiet_NaN();
  double m_minus = std::numeric_limits<double>::quiet_NaN();
  double res_plus = std::numeric_limits<double>::quiet_NaN();
  double res_minus = std::numeric_limits<double>::quiet_NaN();
  double delta_obs = std::numeric_limits<double>::quiet_NaN();
  std::string note;  // failure message, if any
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> lambda_star_empirical;  // largest λ with both branches found
  double lambda_star_analytic = 0.0;
  bool anomaly = false;  // empirical threshold below the analytic one
};

inline SweepResult lambda_sweep(const ExponentSet& es, const std::vector<double>& lambdas,
                                const SolverConfig& cfg) {
  SweepResult out;
  out.lambda_star_analytic = lambda_bounds(es).lambda_star;
  for (double lambda : lambdas) {
    SweepRow row;
    row.lambda = lambda;
    double delta = std::numeric_limits<double>::infinity();
    for (Branch b : {Branch::Mplus, Branch::Mminus}) {
      try {
        const BranchResult r = minimize_branch(b, es, lambda, cfg);
        (b == Branch::Mplus ? row.found_plus : row.found_minus) = true;
        (b == Branch::Mplus ? row.m_plus : row.m_minus) = r.energy;
        (b == Branch::Mplus ? row.res_plus : row.res_minus) = r.nehari_residual;
        delta = std::min(delta, r.delta_obs);
      } catch (const BranchVanished& e) {
        row.note += (row.note.empty() ? "" : "; ") + std::string(e.what());
      }
    }
    if (std::isfinite(delta)) row.delta_obs = delta;
    if (row.found_plus && row.found_minus) out.lambda_star_empirical = lambda;
    out.rows.push_back(std::move(row));
  }
  if (out.lambda_star_empirical && *out.lambda_star_empirical < out.lambda_star_analytic &&
      !out.rows.empty() && out.rows.back().lambda >= out.lambda_star_analytic)
    out.anomaly = true;
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline void write_sweep_csv(std::ostream& os, const SweepResult& s) {
  os << "lambda,m_plus,m_minus,res_plus,res_minus,found_plus,found_minus,delta_obs\n";
  char buf[256];
  for (const auto& r : s.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g\n", r.lambda, r.m_plus,
                  r.m_minus, r.res_plus, r.res_minus, r.found_plus ? 1 : 0, r.found_minus ? 1 : 0,
                  r.delta_obs);
    os << buf;
  }
}

inline void write_trace_csv(std::ostream& os, const BranchResult& r, double lambda) {
  os << "iter,lambda,rho_grad,hardy,source,singular,total,nehari_residual\n";
  char buf[256];
  for (const auto& t : r.trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t.iter, lambda,
                  t.energy.rho_grad, t.energy.hardy, t.energy.source, t.energy.singular,
                  t.energy.total, t.nehari_residual);
    os << buf;
  }
}

inline void write_key_values(std::ostream& os, const SolverConfig& c) {
  char buf[128];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "solver.%s=%.17g\n", key, v);
    os << buf;
  };
  put("max_outer_iters", static_cast<double>(c.max_outer_iters));
  put("initial_step", c.initial_step);
  put("armijo_sigma", c.armijo_sigma);
  put("backtrack_factor", c.backtrack_factor);
  put("max_backtracks", static_cast<double>(c.max_backtracks));
  put("grad_tol", c.grad_tol);
  put("energy_tol", c.energy_tol);
  put("battery_size", static_cast<double>(c.battery_size));
  os << "solver.seed=" << c.seed << '\n';
  put("cg_tol", c.cg_tol);
  put("cg_max_iters", static_cast<double>(c.cg_max_iters));
  put("tol_root", c.nehari.tol_root);
  put("tol_class", c.nehari.tol_class);
  put("scan_points", static_cast<double>(c.nehari.scan_points));
  put("t_lo", c.nehari.t_lo);
  put("t_hi", c.nehari.t_hi);
  if (c.regularization) {
    put("eps_x", c.regularization->eps_x);
    put("eps_u_relative", c.regularization->eps_u_relative);
  }
}

inline void write_key_values(std::ostream& os, const BranchResult& r, const char* prefix) {
  char buf[160];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s.%s=%.17g\n", prefix, key, v);
    os << buf;
  };
  put("energy", r.energy);
  put("rho_grad", r.breakdown.rho_grad);
  put("hardy", r.breakdown.hardy);
  put("source", r.breakdown.source);
  put("singular", r.breakdown.singular);
  put("nehari_residual", r.nehari_residual);
  put("nehari_scale", r.nehari_scale);
  put("iterations", static_cast<double>(r.iterations));
  put("grad_norm", r.grad_norm);
  put("delta_obs", r.delta_obs);
  put("battery_member", static_cast<double>(r.member));
  os << prefix << ".converged=" << (r.converged ? "true" : "false") << '\n';
}

inline void write_key_values(std::ostream& os, const SolveReport& rep) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "lambda=%.17g\n", rep.lambda);
  os << buf << "seed=" << rep.seed << '\n';
  write_key_values(os, rep.plus, "plus");
  write_key_values(os, rep.minus, "minus");
  std::snprintf(buf, sizeof buf, "m_plus=%.17g\nm_minus=%.17g\n", rep.plus.energy, rep.minus.energy);
  os << buf;
  std::snprintf(buf, sizeof buf, "delta_obs=%.17g\ndistance=%.17g\n", rep.delta_obs, rep.distance);
  os << buf;
  os << "above_analytic_threshold=" << (rep.lambda >= rep.bounds.lambda_star ? "true" : "false")
     << '\n';
  write_key_values(os, rep.bounds);
  os << "core_hypotheses_pass=" << (rep.hypothesis.core_passed() ? "true" : "false") << '\n';
  write_key_values(os, rep.config);
}

}  // namespace mpnehari
