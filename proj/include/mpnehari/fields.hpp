// Seeded families of test fields: positive bumps, smooth positive perturbations
// of them, and signed Dirichlet-zero fields. Member k of a battery depends only
// on (seed, k), so batteries are reproducible in any evaluation order.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mpnehari/grid.hpp"

namespace mpnehari {

/// Generator for battery member `index` of a run seeded with `seed`.
inline std::mt19937_64 derived_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Centre of the bounding box and the smallest radius R for which
/// (1 − |x−c|²/R²)₊ is positive at every interior node.
struct BumpGeometry {
  std::array<double, kMaxDim> centre{};
  double radius = 0.0;
};

inline BumpGeometry bump_geometry(const GridSpec& g) {
  BumpGeometry b;
  for (std::size_t k = 0; k < g.dim; ++k) b.centre[k] = 0.5 * (g.lo + g.hi);
  double rmax = 0.0;
  for (std::size_t node : g.interior) {
    const auto x = g.coordinates(node);
    double d2 = 0.0;
    for (std::size_t k = 0; k < g.dim; ++k) d2 += (x[k] - b.centre[k]) * (x[k] - b.centre[k]);
    rmax = std::max(rmax, std::sqrt(d2));
  }
  b.radius = rmax + g.h;
  return b;
}

/// (1 − |x−c|²/R²)₊ on interior nodes, zero elsewhere.
inline ScalarField bump_field(const GridPtr& grid, const BumpGeometry& b) {
  ScalarField u(grid);
  for (std::size_t node : grid->interior) {
    const auto x = grid->coordinates(node);
    double d2 = 0.0;
    for (std::size_t k = 0; k < grid->dim; ++k) d2 += (x[k] - b.centre[k]) * (x[k] - b.centre[k]);
    u[node] = std::max(0.0, 1.0 - d2 / (b.radius * b.radius));
  }
  return u;
}

inline ScalarField bump_field(const GridPtr& grid) { return bump_field(grid, bump_geometry(*grid)); }

namespace detail {

// Σ_j a_j sin(ω_j·x + φ_j) with `modes` random modes of moderate frequency.
struct SineSeries {
  struct Mode {
    std::array<double, kMaxDim> omega{};
    double phase = 0.0;
    double amplitude = 0.0;
  };
  std::vector<Mode> modes;

  SineSeries(std::mt19937_64& rng, std::size_t dim, std::size_t count, double amplitude,
             double max_frequency) {
    std::uniform_real_distribution<double> freq(-max_frequency, max_frequency);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> amp(-amplitude, amplitude);
    for (std::size_t j = 0; j < count; ++j) {
      Mode m;
      for (std::size_t k = 0; k < dim; ++k) m.omega[k] = freq(rng);
      m.phase = phase(rng);
      m.amplitude = amp(rng);
      modes.push_back(m);
    }
  }

  double operator()(const std::array<double, kMaxDim>& x, std::size_t dim) const {
    double s = 0.0;
    for (const Mode& m : modes) {
      double arg = m.phase;
      for (std::size_t k = 0; k < dim; ++k) arg += m.omega[k] * x[k];
      s += m.amplitude * std::sin(arg);
    }
    return s;
  }
};

}  // namespace detail

/// bump · exp(smooth random series): positive at every interior node.
inline ScalarField random_positive_field(const GridPtr& grid, std::uint64_t seed,
                                         std::uint64_t index) {
  auto rng = derived_stream(seed, index);
  const detail::SineSeries series(rng, grid->dim, 4, 0.5, 4.0);
  ScalarField u = bump_field(grid);
  for (std::size_t node : grid->interior)
    u[node] *= std::exp(series(grid->coordinates(node), grid->dim));
  return u;
}

/// bump · smooth random series: signed, Dirichlet-zero.
inline ScalarField random_signed_field(const GridPtr& grid, std::uint64_t seed,
                                       std::uint64_t index) {
  auto rng = derived_stream(seed, index);
  const detail::SineSeries series(rng, grid->dim, 5, 1.0, 5.0);
  ScalarField u = bump_field(grid);
  for (std::size_t node : grid->interior) u[node] *= series(grid->coordinates(node), grid->dim);
  return u;
}

/// Member 0 is the plain bump; the rest are positive random perturbations.
inline std::vector<ScalarField> positive_battery(const GridPtr& grid, std::size_t count,
                                                 std::uint64_t seed) {
  std::vector<ScalarField> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(k == 0 ? bump_field(grid) : random_positive_field(grid, seed, k));
  return out;
}

}  // namespace mpnehari
