// The discrete energy
//
//   J_λ(u) = ϱ_T(u) + F(u) − ∫ m1 |u|^s / s − λ ∫ m2 |u|^{1−β} / (1−β),
//
// its exact discrete gradient, the scaling derivatives ⟨J'(u),u⟩ and
// ⟨J'(tu),tu⟩' that define and split the Nehari set, and the Hardy-type
// inequality checks.
//
// Discretisation: every interior node carries weight w = h^N. The gradient
// term averages the forward- and backward-difference energies at each node,
// which keeps the stencil compact (no odd/even decoupling) and reduces to the
// 2N+1 point Laplacian for p ≡ 2. The Hardy weight |x| is floored at eps_x;
// u^{−β} in the gradient is floored at eps_u. The energy itself needs no
// floor for the singular term because |u|^{1−β} is continuous at 0.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mpnehari/error.hpp"
#include "mpnehari/grid.hpp"
#include "mpnehari/power_sum.hpp"
#include "mpnehari/spaces.hpp"

namespace mpnehari {

struct RegularizationPolicy {
  double eps_x = 0.0;           // floor for |x| in the Hardy potential
  double eps_u_relative = 1e-8;  // floor for |u| inside u^{-β}, relative to max|u|

  static RegularizationPolicy for_grid(const GridSpec& g) {
    RegularizationPolicy pol;
    pol.eps_x = 0.5 * g.h;
    return pol;
  }

  double eps_u(const ScalarField& u) const {
    const double scale = max_abs(u);
    return eps_u_relative * (scale > 0.0 ? scale : 1.0);
  }

  double distance(const GridSpec& g, std::size_t node) const {
    return std::max(g.radius(node), eps_x);
  }
};

struct EnergyBreakdown {
  double rho_grad = 0.0;
  double hardy = 0.0;
  double source = 0.0;
  double singular = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

namespace detail {

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// g^p/p + μ1 g^q/q + μ2 g^r/r, weighted by exponent^k (k = 0 gives the energy
// density times p etc. removed; see callers).
struct NodeExponents {
  double p, q, r, s, beta, mu1, mu2, m1, m2;
};

inline NodeExponents exponents_at(const ExponentSet& es, std::size_t node) {
  return {es.p[node],   es.q[node],   es.r[node],  es.s[node], es.beta[node],
          es.mu1[node], es.mu2[node], es.m1[node], es.m2[node]};
}

// Σ_{e ∈ {p,q,r}} weight_e · e^{k−1} · g^e, with weights (1, μ1, μ2). k = 0
// gives the energy density, k = 1 the scaling derivative, k = 2 the second
// scaling derivative.
inline double phase_sum(double g, const NodeExponents& x, int k) {
  if (g == 0.0) return 0.0;
  auto term = [&](double e, double weight) {
    if (weight == 0.0) return 0.0;
    const double factor = k == 0 ? 1.0 / e : (k == 1 ? 1.0 : e);
    return weight * factor * std::pow(g, e);
  };
  return term(x.p, 1.0) + term(x.q, x.mu1) + term(x.r, x.mu2);
}

}  // namespace detail

inline EnergyBreakdown energy(const ScalarField& u, const ExponentSet& es, double lambda,
                              const RegularizationPolicy& pol) {
  const GridSpec& g = *u.grid;
  const double w = g.cell_volume;
  EnergyBreakdown e;
  e.lambda = lambda;
  std::array<double, kMaxDim> fw{}, bw{};
  for (std::size_t node : g.interior) {
    const auto x = detail::exponents_at(es, node);
    one_sided_differences(u, node, fw, bw);
    e.rho_grad += 0.5 * w *
                  (detail::phase_sum(norm_of(fw, g.dim), x, 0) +
                   detail::phase_sum(norm_of(bw, g.dim), x, 0));
    const double a = std::abs(u[node]);
    if (a == 0.0) continue;
    e.hardy += w * detail::phase_sum(a / pol.distance(g, node), x, 0);
    if (x.m1 != 0.0) e.source += w * x.m1 * std::pow(a, x.s) / x.s;
    if (x.m2 != 0.0) {
      const double one_minus_beta = 1.0 - x.beta;
      e.singular += lambda * w * x.m2 * std::pow(a, one_minus_beta) / one_minus_beta;
    }
  }
  e.total = e.rho_grad + e.hardy - e.source - e.singular;
  return e;
}

/// G(u) with Σ_i G_i φ_i h^N equal to the directional derivative of the
/// discrete J_λ along any Dirichlet-zero φ. Zero at boundary nodes.
inline ScalarField energy_gradient(const ScalarField& u, const ExponentSet& es, double lambda,
                                   const RegularizationPolicy& pol) {
  const GridSpec& g = *u.grid;
  const double w = g.cell_volume;
  const double half_w_over_h = 0.5 * w / g.h;
  const double eps_u = pol.eps_u(u);
  std::vector<double> acc(g.node_count, 0.0);
  std::array<double, kMaxDim> fw{}, bw{};

  auto flux_coefficient = [](double gm, const detail::NodeExponents& x) {
    if (gm == 0.0) return 0.0;
    double c = std::pow(gm, x.p - 2.0);
    if (x.mu1 != 0.0) c += x.mu1 * std::pow(gm, x.q - 2.0);
    if (x.mu2 != 0.0) c += x.mu2 * std::pow(gm, x.r - 2.0);
    return c;
  };

  for (std::size_t node : g.interior) {
    const auto x = detail::exponents_at(es, node);
    one_sided_differences(u, node, fw, bw);
    const double cf = flux_coefficient(norm_of(fw, g.dim), x);
    const double cb = flux_coefficient(norm_of(bw, g.dim), x);
    for (std::size_t k = 0; k < g.dim; ++k) {
      const double ff = half_w_over_h * cf * fw[k];
      const double fb = half_w_over_h * cb * bw[k];
      acc[node] += fb - ff;
      acc[node + g.stride[k]] += ff;
      acc[node - g.stride[k]] -= fb;
    }

    const double v = u[node];
    const double a = std::abs(v);
    double pointwise = 0.0;
    if (a != 0.0) {
      const double d = pol.distance(g, node);
      const double ad = a / d;
      double hardy = std::pow(ad, x.p - 1.0);
      if (x.mu1 != 0.0) hardy += x.mu1 * std::pow(ad, x.q - 1.0);
      if (x.mu2 != 0.0) hardy += x.mu2 * std::pow(ad, x.r - 1.0);
      pointwise += detail::sign_of(v) * hardy / d;
      if (x.m1 != 0.0) pointwise -= detail::sign_of(v) * x.m1 * std::pow(a, x.s - 1.0);
    }
    if (x.m2 != 0.0 && lambda != 0.0) {
      const double sgn = v < 0.0 ? -1.0 : 1.0;  // the positive cone at u = 0
      pointwise -= sgn * lambda * x.m2 * std::pow(std::max(a, eps_u), -x.beta);
    }
    acc[node] += w * pointwise;
  }

  ScalarField out(u.grid);
  for (std::size_t node : g.interior) out[node] = acc[node] / w;
  return out;
}

/// Σ_i a_i b_i h^N over interior nodes.
inline double inner(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t node : a.grid->interior) s += a[node] * b[node];
  return s * a.grid->cell_volume;
}

/// The four groups of a scaling derivative of J_λ at u.
struct NehariTerms {
  double rho = 0.0;       // gradient part
  double hardy = 0.0;
  double source = 0.0;
  double singular = 0.0;  // includes λ

  double total() const { return rho + hardy - source - singular; }
  double magnitude() const {
    return std::abs(rho) + std::abs(hardy) + std::abs(source) + std::abs(singular);
  }
};

/// order 1: ⟨J'(u),u⟩ term by term; order 2: the second fibering form, in which
/// each power term carries its exponent once more.
inline NehariTerms nehari_terms(const ScalarField& u, const ExponentSet& es, double lambda,
                                const RegularizationPolicy& pol, int order) {
  const GridSpec& g = *u.grid;
  const double w = g.cell_volume;
  NehariTerms t;
  std::array<double, kMaxDim> fw{}, bw{};
  for (std::size_t node : g.interior) {
    const auto x = detail::exponents_at(es, node);
    one_sided_differences(u, node, fw, bw);
    t.rho += 0.5 * w *
             (detail::phase_sum(norm_of(fw, g.dim), x, order) +
              detail::phase_sum(norm_of(bw, g.dim), x, order));
    const double a = std::abs(u[node]);
    if (a == 0.0) continue;
    t.hardy += w * detail::phase_sum(a / pol.distance(g, node), x, order);
    if (x.m1 != 0.0) t.source += w * x.m1 * (order == 2 ? x.s : 1.0) * std::pow(a, x.s);
    if (x.m2 != 0.0) {
      const double omb = 1.0 - x.beta;
      t.singular += lambda * w * x.m2 * (order == 2 ? omb : 1.0) * std::pow(a, omb);
    }
  }
  return t;
}

/// ⟨J'_λ(u), u⟩.
inline double nehari_derivative(const ScalarField& u, const ExponentSet& es, double lambda,
                                const RegularizationPolicy& pol) {
  return nehari_terms(u, es, lambda, pol, 1).total();
}

/// d/dt ⟨J'_λ(tu), tu⟩ at t = 1; equals Φ_u''(1) + Φ_u'(1), hence Φ_u''(1) on
/// the Nehari set.
inline double nehari_second(const ScalarField& u, const ExponentSet& es, double lambda,
                            const RegularizationPolicy& pol) {
  return nehari_terms(u, es, lambda, pol, 2).total();
}

// ---------------------------------------------------------------------------
// Fibering profile: Φ_u(t) = J_λ(t u) as four power sums in t.

struct FiberingProfile {
  PowerSum rho, hardy, source, singular;

  double phi(double t) const {
    return rho.value(t) + hardy.value(t) - source.value(t) - singular.value(t);
  }
  /// t Φ'(t) = ⟨J'(tu), tu⟩.
  double scaled_first(double t) const {
    return rho.moment(t, 1) + hardy.moment(t, 1) - source.moment(t, 1) - singular.moment(t, 1);
  }
  /// d/ds ⟨J'(s u), s u⟩ · s at s = t, i.e. the second fibering form at tu.
  double scaled_second(double t) const {
    return rho.moment(t, 2) + hardy.moment(t, 2) - source.moment(t, 2) - singular.moment(t, 2);
  }
  double phi1(double t) const { return scaled_first(t) / t; }
  double phi2(double t) const { return (scaled_second(t) - scaled_first(t)) / (t * t); }
  double phi1_at_zero() const {
    PowerSum all;
    for (auto [ps, sign] : {std::pair{&rho, 1.0}, {&hardy, 1.0}, {&source, -1.0}, {&singular, -1.0}})
      for (std::size_t j = 0; j < ps->terms(); ++j)
        all.add(sign * ps->coefficients()[j], ps->exponents()[j]);
    all.finalize();
    return all.derivative_at_zero();
  }
  /// Magnitudes of the ⟨J'(tu),tu⟩ groups.
  NehariTerms first_terms(double t) const {
    return {rho.moment(t, 1), hardy.moment(t, 1), source.moment(t, 1), singular.moment(t, 1)};
  }
  NehariTerms second_terms(double t) const {
    return {rho.moment(t, 2), hardy.moment(t, 2), source.moment(t, 2), singular.moment(t, 2)};
  }
  EnergyBreakdown breakdown(double t, double lambda) const {
    EnergyBreakdown e;
    e.lambda = lambda;
    e.rho_grad = rho.value(t);
    e.hardy = hardy.value(t);
    e.source = source.value(t);
    e.singular = singular.value(t);
    e.total = e.rho_grad + e.hardy - e.source - e.singular;
    return e;
  }
};

inline FiberingProfile fibering_profile(const ScalarField& u, const ExponentSet& es,
                                        double lambda, const RegularizationPolicy& pol) {
  const GridSpec& g = *u.grid;
  const double w = g.cell_volume;
  FiberingProfile prof;
  std::array<double, kMaxDim> fw{}, bw{};
  for (std::size_t node : g.interior) {
    const auto x = detail::exponents_at(es, node);
    one_sided_differences(u, node, fw, bw);
    for (double gm : {norm_of(fw, g.dim), norm_of(bw, g.dim)}) {
      if (gm == 0.0) continue;
      prof.rho.add(0.5 * w * std::pow(gm, x.p) / x.p, x.p);
      prof.rho.add(0.5 * w * x.mu1 * std::pow(gm, x.q) / x.q, x.q);
      prof.rho.add(0.5 * w * x.mu2 * std::pow(gm, x.r) / x.r, x.r);
    }
    const double a = std::abs(u[node]);
    if (a == 0.0) continue;
    const double ad = a / pol.distance(g, node);
    prof.hardy.add(w * std::pow(ad, x.p) / x.p, x.p);
    prof.hardy.add(w * x.mu1 * std::pow(ad, x.q) / x.q, x.q);
    prof.hardy.add(w * x.mu2 * std::pow(ad, x.r) / x.r, x.r);
    prof.source.add(w * x.m1 * std::pow(a, x.s) / x.s, x.s);
    const double omb = 1.0 - x.beta;
    prof.singular.add(lambda * w * x.m2 * std::pow(a, omb) / omb, omb);
  }
  prof.rho.finalize();
  prof.hardy.finalize();
  prof.source.finalize();
  prof.singular.finalize();
  return prof;
}

// ---------------------------------------------------------------------------
// Hardy-type inequalities

/// C_N(t) = (t / ((N−2)(t−1)))^t.
inline double hardy_constant(double t, std::size_t dim) {
  return std::pow(t / ((static_cast<double>(dim) - 2.0) * (t - 1.0)), t);
}

struct HardyUpperCheck {
  double lhs = 0.0;   // F(u)
  double rhs = 0.0;   // C_N(p,r) ‖u‖_{1,T,0}^{φ0}
  bool pass = false;
  double sobolev_norm = 0.0;
  double phi0 = 0.0;
  double c_n_p_minus = 0.0;
  double c_n_r_plus = 0.0;
  double c_n_pr = 0.0;
  double c_hat_m = 0.0;
};

/// F(u) ≤ C_N(p,r) ‖u‖_{1,T,0}^{φ0}, with φ0 = p− below unit norm and r+ above,
/// and C_N(p,r) = (p−)^{-1} ĉ_M (1 + ‖μ1‖∞ + ‖μ2‖∞) max{C_N(r+), C_N(p−)}.
/// `c_hat_m` is the battery estimate of the embedding constant.
inline HardyUpperCheck hardy_check_upper(const ScalarField& u, const ExponentSet& es,
                                         double c_hat_m, const RegularizationPolicy& pol) {
  const std::size_t dim = u.grid->dim;
  if (dim < 3) throw DimensionUnsupported("the upper Hardy bound needs N >= 3");
  HardyUpperCheck c;
  c.lhs = energy(u, es, 0.0, pol).hardy;
  c.sobolev_norm = sobolev_norm(u, es);
  c.phi0 = c.sobolev_norm < 1.0 ? es.p_minus() : es.r_plus();
  c.c_n_p_minus = hardy_constant(es.p_minus(), dim);
  c.c_n_r_plus = hardy_constant(es.r_plus(), dim);
  c.c_hat_m = c_hat_m;
  c.c_n_pr = c_hat_m * (1.0 + es.mu1_sup + es.mu2_sup) * std::max(c.c_n_r_plus, c.c_n_p_minus) /
             es.p_minus();
  c.rhs = c.sobolev_norm == 0.0 ? 0.0 : c.c_n_pr * std::pow(c.sobolev_norm, c.phi0);
  c.pass = c.lhs <= c.rhs * (1.0 + 1e-9);
  return c;
}

struct HardyLowerCheck {
  double lhs = 0.0;  // ∫ (|u|^p/|x|^p + μ1|u|^q/|x|^q + μ2|u|^r/|x|^r)
  double rhs = 0.0;  // x_*^{−τ} ‖u‖_T^τ
  bool pass = false;
  double norm_t = 0.0;
  double tau = 0.0;
  bool unit_or_above = false;  // which norm case selected τ
  double x_star = 0.0;         // ceil of the largest interior |x|
  double x_star_coordinate = 0.0;   // N · max_i |x_i| over interior nodes
};

inline HardyLowerCheck hardy_check_lower(const ScalarField& u, const ExponentSet& es,
                                         const RegularizationPolicy& pol) {
  const GridSpec& g = *u.grid;
  HardyLowerCheck c;
  double rmax = 0.0, cmax = 0.0;
  for (std::size_t node : g.interior) {
    rmax = std::max(rmax, g.radius(node));
    const auto x = g.coordinates(node);
    for (std::size_t k = 0; k < g.dim; ++k) cmax = std::max(cmax, std::abs(x[k]));
  }
  c.x_star = std::max(1.0, std::ceil(rmax));
  c.x_star_coordinate = static_cast<double>(g.dim) * cmax;

  for (std::size_t node : g.interior) {
    const double a = std::abs(u[node]);
    if (a == 0.0) continue;
    c.lhs += detail::phase_sum(a / pol.distance(g, node), detail::exponents_at(es, node), 1);
  }
  c.lhs *= g.cell_volume;

  c.norm_t = multiphase_norm(u, es);
  c.unit_or_above = c.norm_t >= 1.0;
  c.tau = c.unit_or_above ? es.p_minus() : es.r_plus();
  c.rhs = c.norm_t == 0.0 ? 0.0 : std::pow(c.norm_t / c.x_star, c.tau);
  c.pass = c.lhs >= c.rhs * (1.0 - 1e-9);
  return c;
}

}  // namespace mpnehari
