#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mpnehari/solver.hpp"
#include "support.hpp"

using namespace mpnehari;
using mpnehari::fixtures::constant_set;
using mpnehari::fixtures::rel_diff;
using mpnehari::fixtures::section4;
using mpnehari::fixtures::unit_ball_grid;

namespace {

SolverConfig small_config() {
  SolverConfig cfg;
  cfg.battery_size = 1;
  return cfg;
}

// Shared preset run: n = 13, λ = 1e-4, one battery member.
const SolveReport& preset_report() {
  static const SolveReport rep = [] {
    const GridPtr g = unit_ball_grid(13);
    return solve_two(section4(g), 1e-4, small_config());
  }();
  return rep;
}

std::string serialise(const SolveReport& rep) {
  std::ostringstream os;
  write_key_values(os, rep);
  write_csv(os, rep.plus.u);
  write_csv(os, rep.minus.u);
  write_trace_csv(os, rep.plus, rep.lambda);
  write_trace_csv(os, rep.minus, rep.lambda);
  return os.str();
}

}  // namespace

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.check());
  cfg.grad_tol = 0.0;
  EXPECT_THROW(cfg.check(), Error);
  cfg = SolverConfig{};
  cfg.max_outer_iters = 0;
  EXPECT_THROW(cfg.check(), Error);
  cfg = SolverConfig{};
  cfg.battery_size = 0;
  EXPECT_THROW(cfg.check(), Error);
  cfg = SolverConfig{};
  cfg.backtrack_factor = 1.0;
  EXPECT_THROW(cfg.check(), Error);
}

TEST(Laplacian, ConjugateGradientSolves) {
  const GridPtr g = unit_ball_grid(13);
  const ScalarField x = random_signed_field(g, 3, 0);
  std::vector<double> b(g->node_count, 0.0);
  detail::apply_laplacian(*g, x.values, b);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!g->is_interior(i)) b[i] = 0.0;
  const ScalarField y = detail::solve_laplacian(ScalarField(g, b), 1e-12, 5000);
  for (std::size_t node : g->interior) EXPECT_NEAR(y[node], x[node], 1e-8 * max_abs(x));
}

TEST(SolveTwo, PresetSignsAndInvariants) {
  const SolveReport& rep = preset_report();
  const GridPtr g = rep.plus.u.grid;
  const ExponentSet es = section4(g);
  const RegularizationPolicy pol = RegularizationPolicy::for_grid(*g);

  EXPECT_LT(rep.plus.energy, 0.0);
  EXPECT_GT(rep.minus.energy, 0.0);
  EXPECT_GT(rep.distance, 10 * rep.config.grad_tol);
  EXPECT_GT(rep.delta_obs, 0.0);
  for (const BranchResult* r : {&rep.plus, &rep.minus}) {
    bool positive_somewhere = false;
    for (std::size_t i = 0; i < r->u.size(); ++i) {
      EXPECT_GE(r->u[i], 0.0);
      if (!g->is_interior(i)) {
        EXPECT_EQ(r->u[i], 0.0);
      }
      positive_somewhere = positive_somewhere || r->u[i] > 0.0;
    }
    EXPECT_TRUE(positive_somewhere);
    EXPECT_EQ(energy(r->u, es, rep.lambda, pol).total, r->energy);
    EXPECT_LE(r->nehari_residual, rep.config.nehari.tol_root * r->nehari_scale);
    EXPECT_EQ(classify(r->u, es, rep.lambda, pol), r->branch);
    EXPECT_TRUE(r->converged);
  }
}

TEST(SolveTwo, EnergyIsMonotoneAlongIterates) {
  const SolveReport& rep = preset_report();
  for (const BranchResult* r : {&rep.plus, &rep.minus}) {
    ASSERT_FALSE(r->trace.empty());
    for (std::size_t i = 1; i < r->trace.size(); ++i)
      EXPECT_LE(r->trace[i].energy.total, r->trace[i - 1].energy.total);
    for (const TraceRow& row : r->trace) EXPECT_GE(row.sobolev_norm, r->delta_obs);
  }
}

TEST(SolveTwo, IteratesStayOnTheirBranch) {
  const SolveReport& rep = preset_report();
  for (const BranchResult* r : {&rep.plus, &rep.minus})
    for (const TraceRow& row : r->trace) {
      const double scale = row.energy.rho_grad + row.energy.hardy + row.energy.source +
                           row.energy.singular;
      EXPECT_LE(row.nehari_residual, 1e-6 * scale);
    }
}

TEST(SolveTwo, WeakResidualAtTheMinimisers) {
  // |⟨J'(u), φ⟩| ≤ 10·grad_tol·‖φ‖_{1,T,0}, in units where the terms of
  // ⟨J'(u), u⟩ are measured against ‖u‖_{1,T,0}.
  const SolveReport& rep = preset_report();
  const GridPtr g = rep.plus.u.grid;
  const ExponentSet es = section4(g);
  const RegularizationPolicy pol = RegularizationPolicy::for_grid(*g);
  for (const BranchResult* r : {&rep.minus, &rep.plus}) {
    const ScalarField G = energy_gradient(r->u, es, rep.lambda, pol);
    const double unit = r->nehari_scale / sobolev_norm(r->u, es);
    for (std::uint64_t k = 0; k < 20; ++k) {
      const ScalarField phi = random_signed_field(g, 404, k);
      const double bound = 10 * rep.config.grad_tol * sobolev_norm(phi, es);
      EXPECT_LE(std::abs(inner(G, phi)), bound * unit) << branch_name(r->branch) << " " << k;
      // On this grid the unscaled bound holds as well.
      EXPECT_LE(std::abs(inner(G, phi)), bound) << branch_name(r->branch) << " " << k;
    }
  }
}

TEST(SolveTwo, Deterministic) {
  const GridPtr g = unit_ball_grid(13);
  const SolveReport again = solve_two(section4(g), 1e-4, small_config());
  EXPECT_EQ(serialise(again), serialise(preset_report()));
}

TEST(SolveTwo, DeltaDoesNotCollapseWithLargerBattery) {
  const GridPtr g = unit_ball_grid(13);
  SolverConfig cfg = small_config();
  cfg.battery_size = 3;
  const BranchResult r = minimize_branch(Branch::Mplus, section4(g), 1e-4, cfg);
  EXPECT_GT(r.delta_obs, 0.5 * preset_report().plus.delta_obs);
  EXPECT_LE(r.energy, preset_report().plus.energy);
}

TEST(MinimizeBranch, NoSingularWeightMeansNoPlusBranch) {
  const GridPtr g = unit_ball_grid(11);
  const ExponentSet es = constant_set(g, 2.5, 2.8, 3.2, 4.5, 0.5, 1, 1, 1, 0);
  EXPECT_THROW(minimize_branch(Branch::Mplus, es, 0.0, small_config()), BranchVanished);
  const BranchResult r = minimize_branch(Branch::Mminus, es, 0.0, small_config());
  EXPECT_GT(r.energy, 0.0);
}

TEST(MinimizeBranch, LargeLambda) {
  const GridPtr g = unit_ball_grid(11);
  const ExponentSet es = section4(g);
  // λ = 10 lies far above every analytic bound; losing M⁺ is an accepted outcome.
  try {
    const BranchResult r = minimize_branch(Branch::Mplus, es, 10.0, small_config());
    EXPECT_LT(r.energy, 0.0);
  } catch (const BranchVanished&) {
  }
  // With a dominant singular term Φ' < 0 on the whole bracket.
  EXPECT_THROW(minimize_branch(Branch::Mplus, es, 1e8, small_config()), BranchVanished);
  EXPECT_THROW(minimize_branch(Branch::Mzero, es, 1e-4, small_config()), Error);
}

TEST(MinimizeBranch, QuadraticGroundStateBenchmark) {
  // p ≡ 2, s ≡ 4, m1 ≡ 1, λ = 0 on [0, 1]. The M⁻ level is min_u A(u)²/(4B(u))
  // with A = uᵀLu h, B = Σ u⁴ h. Oracle: the normalised fixed-point iteration
  // u ← L⁻¹(u³)/‖·‖, solved with a tridiagonal sweep.
  const std::size_t n = 41;
  const GridPtr g = build_grid(1, n, 0.0, 1.0, parse("1", 1));
  const ExponentSet es = constant_set(g, 2, 2.5, 3, 4, 0.5, 0, 0, 1, 0);
  const double h = g->h;
  const double eps_x = RegularizationPolicy::for_grid(*g).eps_x;
  const std::size_t m = n - 2;  // interior nodes 1..n-2
  std::vector<double> diag(m), off(m, -1.0 / (h * h));
  for (std::size_t k = 0; k < m; ++k) {
    const double x = static_cast<double>(k + 1) * h;
    const bool edge = k == 0 || k + 1 == m;
    diag[k] = (edge ? 1.5 : 2.0) / (h * h) + 1.0 / std::pow(std::max(x, eps_x), 2);
  }
  auto solve = [&](std::vector<double> rhs) {
    std::vector<double> c(m), d = diag;
    for (std::size_t k = 1; k < m; ++k) {
      const double w = off[k] / d[k - 1];
      d[k] -= w * off[k];
      rhs[k] -= w * rhs[k - 1];
    }
    std::vector<double> x(m);
    x[m - 1] = rhs[m - 1] / d[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) x[k] = (rhs[k] - off[k] * x[k + 1]) / d[k];
    return x;
  };
  auto level = [&](const std::vector<double>& v) {
    double A = 0.0, B = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      double Lv = diag[k] * v[k];
      if (k > 0) Lv += off[k] * v[k - 1];
      if (k + 1 < m) Lv += off[k] * v[k + 1];
      A += v[k] * Lv * h;
      B += std::pow(v[k], 4) * h;
    }
    return A * A / (4 * B);
  };
  std::vector<double> v(m);
  for (std::size_t k = 0; k < m; ++k) v[k] = std::sin(3.14159265358979 * (k + 1) * h);
  for (int it = 0; it < 500; ++it) {
    std::vector<double> cube(m);
    for (std::size_t k = 0; k < m; ++k) cube[k] = v[k] * v[k] * v[k];
    v = solve(cube);
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::abs(x));
    for (double& x : v) x /= mx;
  }
  const double oracle = level(v);

  SolverConfig cfg = small_config();
  cfg.battery_size = 3;
  cfg.max_outer_iters = 2000;
  const BranchResult r = minimize_branch(Branch::Mminus, es, 0.0, cfg);
  EXPECT_LT(rel_diff(r.energy, oracle), 1e-4) << r.energy << " vs " << oracle;
  EXPECT_GE(r.energy, oracle * (1 - 1e-9));
}

TEST(Sweep, EmptyList) {
  const GridPtr g = unit_ball_grid(9);
  const SweepResult s = lambda_sweep(section4(g), {}, small_config());
  EXPECT_TRUE(s.rows.empty());
  EXPECT_FALSE(s.lambda_star_empirical);
  EXPECT_FALSE(s.anomaly);
  std::ostringstream os;
  write_sweep_csv(os, s);
  EXPECT_EQ(os.str(), "lambda,m_plus,m_minus,res_plus,res_minus,found_plus,found_minus,delta_obs\n");
}

TEST(Sweep, PlusLevelDecreasesWithLambda) {
  const GridPtr g = unit_ball_grid(11);
  const ExponentSet es = section4(g);
  const SweepResult s = lambda_sweep(es, {1e-5, 1e-4, 1e-3}, small_config());
  ASSERT_EQ(s.rows.size(), 3u);
  for (const SweepRow& row : s.rows) {
    EXPECT_TRUE(row.found_plus);
    EXPECT_TRUE(row.found_minus);
    EXPECT_LT(row.m_plus, 0.0);
    EXPECT_GT(row.m_minus, 0.0);
  }
  EXPECT_GT(s.rows[0].m_plus, s.rows[1].m_plus);
  EXPECT_GT(s.rows[1].m_plus, s.rows[2].m_plus);
  ASSERT_TRUE(s.lambda_star_empirical);
  EXPECT_EQ(*s.lambda_star_empirical, 1e-3);
  EXPECT_EQ(s.lambda_star_analytic, lambda_bounds(es).lambda_star);
  EXPECT_FALSE(s.anomaly);
}
