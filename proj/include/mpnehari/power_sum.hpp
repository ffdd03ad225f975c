// Generalised polynomials f(t) = Σ_j c_j t^{e_j} with real exponents.
//
// Every term of the discrete energy, and every discrete modular, is homogeneous
// under scaling of the field, so the whole ray t ↦ J(t u) (or ζ ↦ ρ(u/ζ))
// collapses to one of these once the field is fixed.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mpnehari {

class PowerSum {
 public:
  void add(double coefficient, double exponent) {
    if (coefficient == 0.0) return;
    coef_.push_back(coefficient);
    exp_.push_back(exponent);
    merged_ = false;
  }

  /// Sorts by exponent and merges equal exponents (stable, so summation order
  /// is deterministic).
  void finalize() {
    if (merged_) return;
    std::vector<std::size_t> order(coef_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return exp_[a] < exp_[b]; });
    std::vector<double> c, e;
    c.reserve(order.size());
    e.reserve(order.size());
    for (std::size_t i : order) {
      if (!e.empty() && e.back() == exp_[i]) {
        c.back() += coef_[i];
      } else {
        c.push_back(coef_[i]);
        e.push_back(exp_[i]);
      }
    }
    coef_ = std::move(c);
    exp_ = std::move(e);
    merged_ = true;
  }

  bool empty() const { return coef_.empty(); }
  std::size_t terms() const { return coef_.size(); }

  /// Σ c e^k t^e. k = 0 gives f(t), k = 1 gives t f'(t), k = 2 gives
  /// t (t f'(t))'.
  double moment(double t, int k = 0) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coef_.size(); ++j) s += coef_[j] * weight(j, k) * std::pow(t, exp_[j]);
    return s;
  }

  /// Σ |c e^k t^e|, the natural magnitude against which a moment is compared.
  double abs_moment(double t, int k = 0) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coef_.size(); ++j)
      s += std::abs(coef_[j] * weight(j, k)) * std::pow(t, exp_[j]);
    return s;
  }

  double value(double t) const { return moment(t, 0); }
  double derivative(double t) const { return moment(t, 1) / t; }
  double second_derivative(double t) const { return (moment(t, 2) - moment(t, 1)) / (t * t); }

  /// lim_{t→0+} f'(t).
  double derivative_at_zero() const {
    double finite = 0.0;
    for (std::size_t j = 0; j < coef_.size(); ++j) {
      if (exp_[j] < 1.0) return coef_[j] > 0.0 ? std::numeric_limits<double>::infinity()
                                               : -std::numeric_limits<double>::infinity();
      if (exp_[j] == 1.0) finite += coef_[j];
    }
    return finite;
  }

  const std::vector<double>& coefficients() const { return coef_; }
  const std::vector<double>& exponents() const { return exp_; }

 private:
  double weight(std::size_t j, int k) const {
    double w = 1.0;
    for (int i = 0; i < k; ++i) w *= exp_[j];
    return w;
  }

  std::vector<double> coef_;
  std::vector<double> exp_;
  bool merged_ = true;
};

}  // namespace mpnehari
