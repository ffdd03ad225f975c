// Shared fixtures for the test binaries.
#pragma once

#include <cmath>
#include <map>
#include <string>

#include "mpnehari/mpnehari.hpp"

namespace mpnehari::fixtures {

inline ExponentExprs exprs_from(const std::map<std::string, std::string>& m, std::size_t dim) {
  auto get = [&](const char* k) { return parse(m.at(k), dim); };
  ExponentExprs e{get("p"),  get("q"),  get("r"),  get("s"),  get("beta"), get("mu1"),
                  get("mu2"), get("m1"), get("m2"), std::nullopt, std::nullopt};
  if (m.count("alpha")) e.alpha = get("alpha");
  if (m.count("gamma")) e.gamma = get("gamma");
  return e;
}

inline GridPtr unit_ball_grid(std::size_t n) {
  return build_grid(3, n, -1.0, 1.0, parse(kSection4Domain));
}

inline ExponentSet section4(const GridPtr& grid) {
  return make_exponent_set(grid, exprs_from(section4_expressions(), 3));
}

/// Constant exponents with the given values; every other weight as given.
inline ExponentSet constant_set(const GridPtr& grid, double p, double q, double r, double s,
                                double beta, double mu1, double mu2, double m1, double m2) {
  auto c = [&](double v) {
    ScalarField f(grid);
    for (double& x : f.values) x = v;
    return f;
  };
  return make_exponent_set(c(p), c(q), c(r), c(s), c(beta), c(mu1), c(mu2), c(m1), c(m2));
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Reference evaluators written directly from the definitions, one node at a
// time, independent of the library's assembly.

/// Contribution of one interior node to J_λ.
inline double energy_at_node(const ScalarField& u, const ExponentSet& es, double lambda,
                             double eps_x, std::size_t node) {
  const GridSpec& g = *u.grid;
  double gf2 = 0.0, gb2 = 0.0;
  for (std::size_t k = 0; k < g.dim; ++k) {
    const double f = (u[node + g.stride[k]] - u[node]) / g.h;
    const double b = (u[node] - u[node - g.stride[k]]) / g.h;
    gf2 += f * f;
    gb2 += b * b;
  }
  const double p = es.p[node], q = es.q[node], r = es.r[node], s = es.s[node];
  const double mu1 = es.mu1[node], mu2 = es.mu2[node];
  auto W = [&](double t) {
    return std::pow(t, p) / p + mu1 * std::pow(t, q) / q + mu2 * std::pow(t, r) / r;
  };
  const double a = std::abs(u[node]);
  const double d = std::max(g.radius(node), eps_x);
  const double beta = es.beta[node];
  const double val = 0.5 * (W(std::sqrt(gf2)) + W(std::sqrt(gb2))) + W(a / d) -
                     es.m1[node] * std::pow(a, s) / s -
                     lambda * es.m2[node] * std::pow(a, 1.0 - beta) / (1.0 - beta);
  return val * g.cell_volume;
}

inline double reference_energy(const ScalarField& u, const ExponentSet& es, double lambda,
                               double eps_x) {
  double total = 0.0;
  for (std::size_t node : u.grid->interior) total += energy_at_node(u, es, lambda, eps_x, node);
  return total;
}

}  // namespace mpnehari::fixtures
