// Variable-exponent modulars and Luxemburg norms, the multi-phase modular
// ρ_T with T(x,t) = t^p + μ1 t^q + μ2 t^r, and validation of the structural
// hypotheses on the exponent set.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mpnehari/error.hpp"
#include "mpnehari/expr.hpp"
#include "mpnehari/grid.hpp"
#include "mpnehari/power_sum.hpp"

namespace mpnehari {

/// Relative tolerance of every Luxemburg-norm bisection.
inline constexpr double kTolLux = 1e-10;

struct Bounds {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  std::size_t argmin = 0;
  std::size_t argmax = 0;
};

/// Min/max of f over the interior nodes.
inline Bounds interior_bounds(const ScalarField& f) {
  Bounds b;
  for (std::size_t node : f.grid->interior) {
    const double v = f[node];
    if (v < b.min) b.min = v, b.argmin = node;
    if (v > b.max) b.max = v, b.argmax = node;
  }
  return b;
}

struct ExponentExprs {
  Expr p, q, r, s, beta;
  Expr mu1, mu2, m1, m2;
  std::optional<Expr> alpha, gamma;
};

struct ExponentSet {
  GridPtr grid;
  ScalarField p, q, r, s, beta;
  ScalarField mu1, mu2, m1, m2;
  std::optional<ScalarField> alpha, gamma;

  // Derived, over interior nodes.
  Bounds p_b, q_b, r_b, s_b, beta_b;
  double mu1_sup = 0.0, mu2_sup = 0.0;
  ScalarField p_star;  // N p / (N - p); +inf where p >= N
  std::optional<ScalarField> alpha0, gamma0;

  double p_minus() const { return p_b.min; }
  double p_plus() const { return p_b.max; }
  double q_minus() const { return q_b.min; }
  double q_plus() const { return q_b.max; }
  double r_minus() const { return r_b.min; }
  double r_plus() const { return r_b.max; }
  double s_minus() const { return s_b.min; }
  double s_plus() const { return s_b.max; }
  double beta_minus() const { return beta_b.min; }
  double beta_plus() const { return beta_b.max; }
};

namespace detail {
inline ScalarField conjugate_exponent(const ScalarField& a) {
  ScalarField out(a.grid);
  for (std::size_t node : a.grid->interior) out[node] = a[node] / (a[node] - 1.0);
  return out;
}
}  // namespace detail

/// Assembles the exponent set from sampled fields and computes the derived data.
inline ExponentSet make_exponent_set(ScalarField p, ScalarField q, ScalarField r, ScalarField s,
                                     ScalarField beta, ScalarField mu1, ScalarField mu2,
                                     ScalarField m1, ScalarField m2,
                                     std::optional<ScalarField> alpha = std::nullopt,
                                     std::optional<ScalarField> gamma = std::nullopt) {
  const GridPtr g = p.grid;
  for (const ScalarField* f : {&q, &r, &s, &beta, &mu1, &mu2, &m1, &m2})
    if (f->grid != g) throw DimensionMismatch("exponent fields live on different grids");
  if ((alpha && alpha->grid != g) || (gamma && gamma->grid != g))
    throw DimensionMismatch("exponent fields live on different grids");

  ExponentSet es;
  es.grid = g;
  es.p = std::move(p);
  es.q = std::move(q);
  es.r = std::move(r);
  es.s = std::move(s);
  es.beta = std::move(beta);
  es.mu1 = std::move(mu1);
  es.mu2 = std::move(mu2);
  es.m1 = std::move(m1);
  es.m2 = std::move(m2);
  es.alpha = std::move(alpha);
  es.gamma = std::move(gamma);

  es.p_b = interior_bounds(es.p);
  es.q_b = interior_bounds(es.q);
  es.r_b = interior_bounds(es.r);
  es.s_b = interior_bounds(es.s);
  es.beta_b = interior_bounds(es.beta);
  for (std::size_t node : g->interior) {
    es.mu1_sup = std::max(es.mu1_sup, std::abs(es.mu1[node]));
    es.mu2_sup = std::max(es.mu2_sup, std::abs(es.mu2[node]));
  }

  const double n = static_cast<double>(g->dim);
  es.p_star = ScalarField(g);
  for (std::size_t node : g->interior) {
    const double pv = es.p[node];
    es.p_star[node] = pv < n ? n * pv / (n - pv) : std::numeric_limits<double>::infinity();
  }
  if (es.alpha) es.alpha0 = detail::conjugate_exponent(*es.alpha);
  if (es.gamma) es.gamma0 = detail::conjugate_exponent(*es.gamma);
  return es;
}

inline ExponentSet make_exponent_set(const GridPtr& grid, const ExponentExprs& e) {
  auto f = [&](const Expr& x) { return sample(grid, x); };
  std::optional<ScalarField> alpha, gamma;
  if (e.alpha) alpha = f(*e.alpha);
  if (e.gamma) gamma = f(*e.gamma);
  return make_exponent_set(f(e.p), f(e.q), f(e.r), f(e.s), f(e.beta), f(e.mu1), f(e.mu2),
                           f(e.m1), f(e.m2), std::move(alpha), std::move(gamma));
}

// ---------------------------------------------------------------------------
// Hypotheses

struct HypothesisCheck {
  std::string name;
  bool evaluated = false;
  bool passed = false;
  double margin = std::numeric_limits<double>::infinity();  // worst slack; < 0 means violated
  std::size_t worst_node = 0;
  std::string detail;
};

struct SideCondition {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = false;
};

struct HypothesisReport {
  std::size_t dim = 0;
  double h = 0.0;
  Bounds p, q, r, s, beta;
  double mu1_sup = 0.0, mu2_sup = 0.0;
  double p_star_min = 0.0;
  std::optional<Bounds> alpha0, gamma0;
  HypothesisCheck h1, h2, a_beta, a_alpha, a_gamma;
  // Side conditions of the negative-energy branch theorem.
  SideCondition coefficient_order;  // (s+ - p-)(1 - β-) < p- (s- - r+)
  SideCondition sum_order;          // s- + β+ <= s+ + β-

  /// H1, H2 and A_β: the hypotheses that constrain the quantities the solver
  /// computes with.
  bool core_passed() const { return h1.passed && h2.passed && a_beta.passed; }

  /// Every evaluated hypothesis, including the integrability ones (A_α, A_γ).
  bool all_passed() const {
    bool ok = core_passed();
    for (const HypothesisCheck* c : {&a_alpha, &a_gamma})
      if (c->evaluated) ok = ok && c->passed;
    return ok;
  }

  std::vector<const HypothesisCheck*> checks() const {
    return {&h1, &h2, &a_beta, &a_alpha, &a_gamma};
  }
};

namespace detail {
struct MarginTracker {
  HypothesisCheck& check;
  bool ok = true;
  void observe(double slack, std::size_t node, const char* what, bool strict = true) {
    ok = ok && (strict ? slack > 0.0 : slack >= 0.0);
    if (slack < check.margin) {
      check.margin = slack;
      check.worst_node = node;
      check.detail = what;
    }
  }
  void close() {
    check.evaluated = true;
    check.passed = ok;
  }
};
}  // namespace detail

inline HypothesisReport validate(const ExponentSet& es) {
  const GridSpec& g = *es.grid;
  for (const ScalarField* f : {&es.p, &es.q, &es.r, &es.s, &es.beta, &es.mu1, &es.mu2, &es.m1,
                               &es.m2})
    if (f->grid != es.grid || f->size() != g.node_count)
      throw DimensionMismatch("exponent fields live on different grids");

  HypothesisReport rep;
  rep.dim = g.dim;
  rep.h = g.h;
  rep.p = es.p_b;
  rep.q = es.q_b;
  rep.r = es.r_b;
  rep.s = es.s_b;
  rep.beta = es.beta_b;
  rep.mu1_sup = es.mu1_sup;
  rep.mu2_sup = es.mu2_sup;
  rep.p_star_min = interior_bounds(es.p_star).min;

  const double n = static_cast<double>(g.dim);
  const double s_plus = es.s_plus();

  // (H1): 1 < p < q < r < s < p*, p < N, s+ < p*(x). Every comparison is strict,
  // so the check passes iff the smallest slack is positive.
  rep.h1.name = "H1";
  detail::MarginTracker h1{rep.h1};
  for (std::size_t node : g.interior) {
    const double pv = es.p[node], qv = es.q[node], rv = es.r[node], sv = es.s[node];
    const double ps = es.p_star[node];
    h1.observe(pv - 1.0, node, "p > 1");
    h1.observe(n - pv, node, "p < N");
    h1.observe(qv - pv, node, "p < q");
    h1.observe(rv - qv, node, "q < r");
    h1.observe(sv - rv, node, "r < s");
    h1.observe(ps - sv, node, "s < p*");
    h1.observe(ps - s_plus, node, "s+ < p*");
  }
  h1.close();

  rep.h2.name = "H2";
  detail::MarginTracker h2{rep.h2};
  for (std::size_t node : g.interior) {
    h2.observe(es.mu1[node], node, "mu1 >= 0", false);
    h2.observe(es.mu2[node], node, "mu2 >= 0", false);
    h2.observe(es.m1[node], node, "m1 >= 0", false);
    h2.observe(es.m2[node], node, "m2 >= 0", false);
  }
  h2.close();

  rep.a_beta.name = "A_beta";
  detail::MarginTracker ab{rep.a_beta};
  for (std::size_t node : g.interior) {
    ab.observe(es.beta[node], node, "beta > 0");
    ab.observe(1.0 - es.beta[node], node, "beta < 1");
  }
  ab.close();

  const double one_minus_bp = 1.0 - es.beta_plus();
  const double one_minus_bm = 1.0 - es.beta_minus();

  rep.a_alpha.name = "A_alpha";
  if (es.alpha) {
    detail::MarginTracker aa{rep.a_alpha};
    for (std::size_t node : g.interior) {
      const double a = (*es.alpha)[node];
      const double a0 = (*es.alpha0)[node];
      aa.observe(a - 1.0, node, "alpha > 1");
      if (!(a > 1.0)) continue;
      aa.observe(a0 * one_minus_bp - 1.0, node, "1 <= alpha0 (1 - beta+)", false);
      aa.observe(es.p_star[node] - a0 * one_minus_bm, node, "alpha0 (1 - beta-) < p*");
    }
    aa.close();
    rep.alpha0 = interior_bounds(*es.alpha0);
  }

  rep.a_gamma.name = "A_gamma";
  if (es.gamma) {
    detail::MarginTracker ag{rep.a_gamma};
    for (std::size_t node : g.interior) {
      const double c = (*es.gamma)[node];
      const double c0 = (*es.gamma0)[node];
      ag.observe(c - 1.0, node, "gamma > 1");
      if (!(c > 1.0)) continue;
      ag.observe(es.s[node] * c0 - 1.0, node, "1 <= s gamma0", false);
      ag.observe(es.p_star[node] - es.s[node] * c0, node, "s gamma0 < p*");
    }
    ag.close();
    rep.gamma0 = interior_bounds(*es.gamma0);
  }

  rep.coefficient_order.name = "(s+ - p-)(1 - beta-) < p-(s- - r+)";
  rep.coefficient_order.lhs = (es.s_plus() - es.p_minus()) * (1.0 - es.beta_minus());
  rep.coefficient_order.rhs = es.p_minus() * (es.s_minus() - es.r_plus());
  rep.coefficient_order.passed = rep.coefficient_order.lhs < rep.coefficient_order.rhs;

  rep.sum_order.name = "s- + beta+ <= s+ + beta-";
  rep.sum_order.lhs = es.s_minus() + es.beta_plus();
  rep.sum_order.rhs = es.s_plus() + es.beta_minus();
  rep.sum_order.passed = rep.sum_order.lhs <= rep.sum_order.rhs;
  return rep;
}

inline void write_key_values(std::ostream& os, const HypothesisReport& rep) {
  auto kv = [&](const std::string& k, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << k << '=' << buf << '\n';
  };
  auto kb = [&](const std::string& k, bool v) { os << k << '=' << (v ? "true" : "false") << '\n'; };
  kv("dim", static_cast<double>(rep.dim));
  kv("h", rep.h);
  kv("p_minus", rep.p.min);
  kv("p_plus", rep.p.max);
  kv("q_minus", rep.q.min);
  kv("q_plus", rep.q.max);
  kv("r_minus", rep.r.min);
  kv("r_plus", rep.r.max);
  kv("s_minus", rep.s.min);
  kv("s_plus", rep.s.max);
  kv("beta_minus", rep.beta.min);
  kv("beta_plus", rep.beta.max);
  kv("mu1_sup", rep.mu1_sup);
  kv("mu2_sup", rep.mu2_sup);
  kv("p_star_min", rep.p_star_min);
  if (rep.alpha0) {
    kv("alpha0_minus", rep.alpha0->min);
    kv("alpha0_plus", rep.alpha0->max);
  }
  if (rep.gamma0) {
    kv("gamma0_minus", rep.gamma0->min);
    kv("gamma0_plus", rep.gamma0->max);
  }
  for (const HypothesisCheck* c : rep.checks()) {
    if (!c->evaluated) {
      os << c->name << "=not_checked\n";
      continue;
    }
    os << c->name << '=' << (c->passed ? "pass" : "fail") << '\n';
    kv(c->name + ".margin", c->margin);
    kv(c->name + ".worst_node", static_cast<double>(c->worst_node));
    if (!c->detail.empty()) os << c->name << ".worst_condition=" << c->detail << '\n';
  }
  for (const SideCondition* c : {&rep.coefficient_order, &rep.sum_order}) {
    const std::string key = c == &rep.coefficient_order ? "side.coefficient_order" : "side.sum_order";
    kv(key + ".lhs", c->lhs);
    kv(key + ".rhs", c->rhs);
    kb(key + ".holds", c->passed);
  }
  kb("core_hypotheses_pass", rep.core_passed());
  kb("all_hypotheses_pass", rep.all_passed());
}

// ---------------------------------------------------------------------------
// Modulars and norms

/// ρ(v) = Σ w |v|^{h(node)} over the sample set.
inline double modular(const SampleSet& v, const ScalarField& h) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v.value[i] != 0.0) s += v.weight[i] * std::pow(v.value[i], h[v.node[i]]);
  return s;
}

inline double modular(const ScalarField& u, const ScalarField& h) {
  return modular(node_samples(u), h);
}

/// ζ ↦ ρ(v/ζ) as a power sum in 1/ζ.
inline PowerSum modular_profile(const SampleSet& v, const ScalarField& h) {
  PowerSum ps;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.value[i] == 0.0) continue;
    const double e = h[v.node[i]];
    ps.add(v.weight[i] * std::pow(v.value[i], e), e);
  }
  ps.finalize();
  return ps;
}

inline double multiphase_modular(const SampleSet& v, const ExponentSet& es) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = v.value[i];
    if (t == 0.0) continue;
    const std::size_t nd = v.node[i];
    s += v.weight[i] * (std::pow(t, es.p[nd]) + es.mu1[nd] * std::pow(t, es.q[nd]) +
                        es.mu2[nd] * std::pow(t, es.r[nd]));
  }
  return s;
}

inline double multiphase_modular(const ScalarField& u, const ExponentSet& es) {
  return multiphase_modular(node_samples(u), es);
}

inline PowerSum multiphase_profile(const SampleSet& v, const ExponentSet& es) {
  PowerSum ps;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = v.value[i];
    if (t == 0.0) continue;
    const std::size_t nd = v.node[i];
    const double w = v.weight[i];
    ps.add(w * std::pow(t, es.p[nd]), es.p[nd]);
    ps.add(w * es.mu1[nd] * std::pow(t, es.q[nd]), es.q[nd]);
    ps.add(w * es.mu2[nd] * std::pow(t, es.r[nd]), es.r[nd]);
  }
  ps.finalize();
  return ps;
}

/// The ζ > 0 with profile(1/ζ) = 1, by bracketing and bisection in log ζ to
/// relative width `tol`. The profile must have non-negative coefficients and
/// positive exponents, so ζ ↦ profile(1/ζ) is strictly decreasing. Returns 0
/// for an empty profile (the zero field).
inline double luxemburg_from_profile(const PowerSum& rho, double tol = kTolLux) {
  if (rho.empty()) return 0.0;
  auto at = [&](double log_zeta) { return rho.value(std::exp2(-log_zeta)); };
  double lo = -60.0, hi = 60.0;  // log2 ζ
  while (at(lo) <= 1.0) lo -= 60.0;
  while (at(hi) > 1.0) hi += 60.0;
  // Bisection until 2^{hi - lo} - 1 < tol.
  const double width = std::log2(1.0 + tol);
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (at(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp2(0.5 * (lo + hi));
}

inline double luxemburg_norm(const SampleSet& v, const ScalarField& h, double tol = kTolLux) {
  return luxemburg_from_profile(modular_profile(v, h), tol);
}

inline double luxemburg_norm(const ScalarField& u, const ScalarField& h, double tol = kTolLux) {
  return luxemburg_norm(node_samples(u), h, tol);
}

inline double multiphase_norm(const SampleSet& v, const ExponentSet& es, double tol = kTolLux) {
  return luxemburg_from_profile(multiphase_profile(v, es), tol);
}

inline double multiphase_norm(const ScalarField& u, const ExponentSet& es, double tol = kTolLux) {
  return multiphase_norm(node_samples(u), es, tol);
}

/// ‖u‖_{1,T,0} = ‖ |∇u| ‖_T.
inline double sobolev_norm(const ScalarField& u, const ExponentSet& es, double tol = kTolLux) {
  return multiphase_norm(gradient_samples(u), es, tol);
}

/// ρ_T(∇u).
inline double gradient_modular(const ScalarField& u, const ExponentSet& es) {
  return multiphase_modular(gradient_samples(u), es);
}

// ---------------------------------------------------------------------------
// Empirical embedding constants

/// Constant-exponent Lebesgue norm (Σ w v^e)^{1/e}.
inline double lebesgue_norm(const SampleSet& v, double e) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v.value[i] != 0.0) s += v.weight[i] * std::pow(v.value[i], e);
  return std::pow(s, 1.0 / e);
}

/// Battery estimates of the embedding constants that the inequalities leave
/// abstract. Each ratio is (target norm)/(‖u‖_{1,T,0}) maximised over the
/// battery; the "hat" constants are the corresponding modular-form constants
/// ∫|∇u|^{e} ≤ ĉ ‖u‖^{e}.
struct EmbeddingEstimate {
  std::size_t battery = 0;
  double ratio_r_plus = 0.0;   // ‖∇u‖_{L^{r+}} / ‖u‖
  double ratio_p_minus = 0.0;  // ‖∇u‖_{L^{p-}} / ‖u‖
  double c_hat_1 = 0.0;        // ratio_r_plus^{r+}
  double c_hat_2 = 0.0;        // ratio_p_minus^{p-}
  double c_hat_m = 0.0;        // max(c_hat_1, c_hat_2)
  double c_source = 0.0;       // ∫ m1|u|^s / (‖u‖^{s-} + ‖u‖^{s+})
  double c_singular = 0.0;     // ∫ m2|u|^{1-β} / (‖u‖^{1-β-} + ‖u‖^{1-β+})
};

inline EmbeddingEstimate estimate_embedding(const std::vector<ScalarField>& battery,
                                            const ExponentSet& es) {
  EmbeddingEstimate est;
  const double rp = es.r_plus(), pm = es.p_minus();
  for (const ScalarField& u : battery) {
    const double norm = sobolev_norm(u, es);
    if (norm == 0.0) continue;
    ++est.battery;
    const SampleSet grad = gradient_samples(u);
    est.ratio_r_plus = std::max(est.ratio_r_plus, lebesgue_norm(grad, rp) / norm);
    est.ratio_p_minus = std::max(est.ratio_p_minus, lebesgue_norm(grad, pm) / norm);

    double src = 0.0, sing = 0.0;
    for (std::size_t node : u.grid->interior) {
      const double a = std::abs(u[node]);
      if (a == 0.0) continue;
      src += es.m1[node] * std::pow(a, es.s[node]);
      sing += es.m2[node] * std::pow(a, 1.0 - es.beta[node]);
    }
    src *= u.grid->cell_volume;
    sing *= u.grid->cell_volume;
    est.c_source = std::max(
        est.c_source, src / (std::pow(norm, es.s_minus()) + std::pow(norm, es.s_plus())));
    est.c_singular =
        std::max(est.c_singular, sing / (std::pow(norm, 1.0 - es.beta_minus()) +
                                         std::pow(norm, 1.0 - es.beta_plus())));
  }
  est.c_hat_1 = std::pow(est.ratio_r_plus, rp);
  est.c_hat_2 = std::pow(est.ratio_p_minus, pm);
  est.c_hat_m = std::max(est.c_hat_1, est.c_hat_2);
  return est;
}

}  // namespace mpnehari
