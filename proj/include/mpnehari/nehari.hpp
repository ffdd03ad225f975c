// Fibering maps Φ_u(t) = J_λ(t u), their positive critical points, projection
// onto the Nehari set and the M⁺ / M⁰ / M⁻ split.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpnehari/energy.hpp"
#include "mpnehari/error.hpp"
#include "mpnehari/grid.hpp"
#include "mpnehari/spaces.hpp"

namespace mpnehari {

enum class Branch { Mplus, Mzero, Mminus };

inline const char* branch_name(Branch b) {
  switch (b) {
    case Branch::Mplus:
      return "Mplus";
    case Branch::Mzero:
      return "Mzero";
    case Branch::Mminus:
      return "Mminus";
  }
  return "?";
}

struct ScanRow {
  double t = 0.0;
  double phi = 0.0;
  double phi1 = 0.0;
};

class NoRoot : public Error {
 public:
  explicit NoRoot(std::vector<ScanRow> scan)
      : Error("fibering derivative has no sign change on the scan bracket"),
        scan_(std::move(scan)) {}
  const std::vector<ScanRow>& scan() const noexcept { return scan_; }

 private:
  std::vector<ScanRow> scan_;
};

struct NehariOptions {
  std::size_t scan_points = 256;
  double t_lo = 1e-6;  // bracket, in units of 1/‖u‖_{1,T,0}
  double t_hi = 1e6;
  double tol_root = 1e-9;
  double tol_class = 1e-7;
};

struct FiberingRoot {
  double t = 0.0;
  double phi = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double residual = 0.0;  // |⟨J'(tu), tu⟩|
  double scale = 0.0;     // Σ |groups of ⟨J'(tu), tu⟩|
  double second = 0.0;    // the second fibering form at tu
  Branch branch = Branch::Mzero;
};

struct FiberingResult {
  std::vector<FiberingRoot> roots;  // every root found, ascending in t
  std::vector<ScanRow> scan;
  double direction_norm = 0.0;
  ScalarField direction;  // |u| as projected

  /// Smallest-t root on M⁺ or largest-t root on M⁻.
  std::optional<FiberingRoot> pick(Branch b) const {
    std::optional<FiberingRoot> out;
    for (const auto& r : roots) {
      if (r.branch != b) continue;
      if (b == Branch::Mplus && out) continue;
      out = r;
    }
    return out;
  }

  std::size_t count(Branch b) const {
    return static_cast<std::size_t>(
        std::count_if(roots.begin(), roots.end(), [b](const auto& r) { return r.branch == b; }));
  }

  ScalarField point(const FiberingRoot& r) const { return scaled(direction, r.t); }
};

inline Branch classify_second(double second, double rho_part, const NehariOptions& opt) {
  const double tol = opt.tol_class * std::abs(rho_part);
  if (second > tol) return Branch::Mplus;
  if (second < -tol) return Branch::Mminus;
  return Branch::Mzero;
}

namespace detail {

inline ScalarField absolute(const ScalarField& u) {
  ScalarField v(u.grid);
  for (std::size_t node : u.grid->interior) v[node] = std::abs(u[node]);
  return v;
}

inline FiberingRoot describe_root(const FiberingProfile& prof, double t, const NehariOptions& opt) {
  FiberingRoot r;
  r.t = t;
  r.phi = prof.phi(t);
  r.phi1 = prof.phi1(t);
  r.phi2 = prof.phi2(t);
  const NehariTerms first = prof.first_terms(t);
  r.residual = std::abs(first.total());
  r.scale = first.magnitude();
  r.second = prof.second_terms(t).total();
  r.branch = classify_second(r.second, first.rho + first.hardy, opt);
  return r;
}

// Root of t ↦ ⟨J'(tu),tu⟩ inside [a, b] with a sign change, in s = log t:
// secant steps kept inside the shrinking bracket, bisection when the secant
// step leaves it or fails to halve the bracket.
inline double refine_root(const FiberingProfile& prof, double a, double b, const NehariOptions& opt) {
  auto f = [&](double s) { return prof.scaled_first(std::exp(s)); };
  double sa = std::log(a), sb = std::log(b);
  double fa = f(sa), fb = f(sb);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  bool bisect_next = false;
  for (int it = 0; it < 200; ++it) {
    double s;
    if (!bisect_next && fb != fa) {
      s = sb - fb * (sb - sa) / (fb - fa);
      if (!(s > std::min(sa, sb) && s < std::max(sa, sb))) s = 0.5 * (sa + sb);
    } else {
      s = 0.5 * (sa + sb);
    }
    const double width = std::abs(sb - sa);
    const double fs = f(s);
    const double t = std::exp(s);
    if (fs == 0.0 || std::abs(fs) <= 1e-3 * opt.tol_root * prof.first_terms(t).magnitude())
      return t;
    if ((fs < 0.0) == (fa < 0.0)) {
      sa = s;
      fa = fs;
    } else {
      sb = s;
      fb = fs;
    }
    bisect_next = std::abs(sb - sa) > 0.5 * width;
    if (std::abs(sb - sa) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s)))
      break;
  }
  return std::abs(fa) < std::abs(fb) ? std::exp(sa) : std::exp(sb);
}

}  // namespace detail

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  std::vector<double> t(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) t[i] = lo * std::exp(step * static_cast<double>(i));
  t.back() = hi;
  return t;
}

/// (t, Φ_u(t), Φ_u'(t)) on `t_grid`, preceded by the t = 0 row (Φ = 0, Φ' its
/// right limit). Φ' is evaluated as ⟨J'_λ(tu), tu⟩ / t.
inline std::vector<ScanRow> fibering_scan(const ScalarField& u, const ExponentSet& es,
                                          double lambda, const std::vector<double>& t_grid,
                                          const RegularizationPolicy& pol) {
  if (is_zero_on_interior(u)) throw ZeroDirection();
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (!(t_grid[i] > 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
      throw Error("fibering scan grid must be positive and strictly increasing");
  const FiberingProfile prof = fibering_profile(u, es, lambda, pol);
  std::vector<ScanRow> rows;
  rows.reserve(t_grid.size() + 1);
  rows.push_back({0.0, 0.0, prof.phi1_at_zero()});
  for (double t : t_grid) rows.push_back({t, prof.phi(t), prof.phi1(t)});
  return rows;
}

inline void write_scan_csv(std::ostream& os, const std::vector<ScanRow>& rows) {
  os << "t,phi,phi1\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.t, r.phi, r.phi1);
    os << buf;
  }
}

/// All positive critical points of Φ_{|u|} on the scan bracket, refined and
/// classified. Throws NoRoot when Φ' keeps one sign on the bracket.
inline FiberingResult project_to_nehari(const ScalarField& u, const ExponentSet& es, double lambda,
                                        const RegularizationPolicy& pol,
                                        const NehariOptions& opt = {}) {
  FiberingResult res;
  res.direction = detail::absolute(u);
  if (is_zero_on_interior(res.direction)) throw ZeroDirection();
  res.direction_norm = sobolev_norm(res.direction, es);

  const FiberingProfile prof = fibering_profile(res.direction, es, lambda, pol);
  const auto t = geometric_grid(opt.t_lo / res.direction_norm, opt.t_hi / res.direction_norm,
                                opt.scan_points);
  std::vector<double> f(t.size());
  res.scan.push_back({0.0, 0.0, prof.phi1_at_zero()});
  for (std::size_t i = 0; i < t.size(); ++i) {
    f[i] = prof.scaled_first(t[i]);
    res.scan.push_back({t[i], prof.phi(t[i]), f[i] / t[i]});
  }

  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (f[i] == 0.0) {
      res.roots.push_back(detail::describe_root(prof, t[i], opt));
    } else if ((f[i] < 0.0) != (f[i + 1] < 0.0) && f[i + 1] != 0.0) {
      res.roots.push_back(
          detail::describe_root(prof, detail::refine_root(prof, t[i], t[i + 1], opt), opt));
    }
  }
  if (f.back() == 0.0) res.roots.push_back(detail::describe_root(prof, t.back(), opt));
  if (res.roots.empty()) throw NoRoot(std::move(res.scan));
  return res;
}

/// Branch of a point on the Nehari set, from the sign of the second fibering
/// form. Throws NotOnManifold when ⟨J'(u),u⟩ is not small against its terms.
inline Branch classify(const ScalarField& u, const ExponentSet& es, double lambda,
                       const RegularizationPolicy& pol, const NehariOptions& opt = {}) {
  if (is_zero_on_interior(u)) throw ZeroDirection();
  const NehariTerms first = nehari_terms(u, es, lambda, pol, 1);
  const double tol = opt.tol_root * first.magnitude();
  if (std::abs(first.total()) > tol) throw NotOnManifold(std::abs(first.total()), tol);
  return classify_second(nehari_second(u, es, lambda, pol), first.rho + first.hardy, opt);
}

// ---------------------------------------------------------------------------
// Smallness thresholds for λ

struct LambdaBounds {
  double fibering_positive = 0.0;         // (1 − β⁺) / r⁺
  std::optional<double> positive_energy;  // (s⁻ − r⁺)(1 − β⁺) / (r⁺ (s⁻ − (1 − β⁺)))
  double t1 = 0.0;                        // ((p⁻ − (1−β⁻)) / (s⁺ − (1−β⁻)))^{1/(s⁺ − p⁻)}
  std::optional<double> degenerate_empty;  // largest λ keeping the degenerate set empty
  double lambda_star = 0.0;               // minimum of the above
};

inline LambdaBounds lambda_bounds(const ExponentSet& es) {
  LambdaBounds b;
  const double pm = es.p_minus(), rp = es.r_plus(), sm = es.s_minus(), sp = es.s_plus();
  const double omb_plus = 1.0 - es.beta_plus();   // 1 − β⁺
  const double omb_minus = 1.0 - es.beta_minus(); // 1 − β⁻
  b.fibering_positive = omb_plus / rp;
  b.t1 = std::pow((pm - omb_minus) / (sp - omb_minus), 1.0 / (sp - pm));
  if (sm > rp) {
    b.positive_energy = (sm - rp) * omb_plus / (rp * (sm - omb_plus));
    b.degenerate_empty = std::pow(std::min(1.0, b.t1), pm - omb_minus) * (sm - rp) / (sm - omb_plus);
  }
  b.lambda_star = b.fibering_positive;
  if (b.positive_energy) b.lambda_star = std::min(b.lambda_star, *b.positive_energy);
  if (b.degenerate_empty) b.lambda_star = std::min(b.lambda_star, *b.degenerate_empty);
  return b;
}

inline void write_key_values(std::ostream& os, const LambdaBounds& b) {
  char buf[128];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, v);
    os << buf;
  };
  put("lambda.fibering_positive", b.fibering_positive);
  if (b.positive_energy)
    put("lambda.positive_energy", *b.positive_energy);
  else
    os << "lambda.positive_energy=undefined\n";
  put("lambda.t1", b.t1);
  if (b.degenerate_empty)
    put("lambda.degenerate_empty", *b.degenerate_empty);
  else
    os << "lambda.degenerate_empty=undefined\n";
  put("lambda.star_analytic", b.lambda_star);
}

}  // namespace mpnehari
