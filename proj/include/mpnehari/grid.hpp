// Uniform Cartesian grids on [lo, hi]^N with a Dirichlet-zero interior mask,
// node fields, discrete gradients and node quadrature.
//
// A node is interior when the domain predicate is non-zero there and at all of
// its 2N axis neighbours (which must lie inside the box). Every other node is
// boundary and carries the value 0 for fields in W_0. Reductions run over the
// interior node list in ascending node order, so results are bitwise
// reproducible.
#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mpnehari/error.hpp"
#include "mpnehari/expr.hpp"

namespace mpnehari {

inline constexpr std::size_t kMaxDim = 3;

struct GridSpec {
  std::size_t dim = 0;
  std::size_t n = 0;  // nodes per axis
  double lo = 0.0;
  double hi = 1.0;
  double h = 0.0;
  double cell_volume = 0.0;
  Expr domain;
  std::size_t node_count = 0;
  std::array<std::size_t, kMaxDim> stride{};  // axis 0 is the slowest index
  std::vector<char> interior_mask;
  std::vector<std::size_t> interior;  // ascending node indices

  std::array<std::size_t, kMaxDim> multi_index(std::size_t node) const {
    std::array<std::size_t, kMaxDim> idx{};
    for (std::size_t k = 0; k < dim; ++k) {
      idx[k] = node / stride[k];
      node %= stride[k];
    }
    return idx;
  }

  std::array<double, kMaxDim> coordinates(std::size_t node) const {
    const auto idx = multi_index(node);
    std::array<double, kMaxDim> x{};
    for (std::size_t k = 0; k < dim; ++k) x[k] = lo + static_cast<double>(idx[k]) * h;
    return x;
  }

  double radius(std::size_t node) const {
    const auto x = coordinates(node);
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += x[k] * x[k];
    return std::sqrt(s);
  }

  bool is_interior(std::size_t node) const { return interior_mask[node] != 0; }
};

using GridPtr = std::shared_ptr<const GridSpec>;

/// Builds the grid; throws EmptyDomain when no node qualifies as interior.
inline GridPtr build_grid(std::size_t dim, std::size_t n, double lo, double hi,
                          const Expr& domain) {
  if (dim < 1 || dim > kMaxDim) throw DimensionUnsupported("grid dimension must be 1, 2 or 3");
  if (n < 3) throw Error("grid needs at least 3 nodes per axis");
  if (!(hi > lo)) throw Error("degenerate bounding box");

  auto g = std::make_shared<GridSpec>();
  g->dim = dim;
  g->n = n;
  g->lo = lo;
  g->hi = hi;
  g->h = (hi - lo) / static_cast<double>(n - 1);
  g->cell_volume = std::pow(g->h, static_cast<double>(dim));
  g->domain = domain;
  g->node_count = 1;
  for (std::size_t k = 0; k < dim; ++k) g->node_count *= n;
  std::size_t s = 1;
  for (std::size_t k = dim; k-- > 0;) {
    g->stride[k] = s;
    s *= n;
  }

  std::vector<char> inside(g->node_count, 0);
  for (std::size_t node = 0; node < g->node_count; ++node) {
    const auto x = g->coordinates(node);
    inside[node] = domain.eval(std::span<const double>(x.data(), dim)) != 0.0;
  }

  g->interior_mask.assign(g->node_count, 0);
  for (std::size_t node = 0; node < g->node_count; ++node) {
    if (!inside[node]) continue;
    const auto idx = g->multi_index(node);
    bool ok = true;
    for (std::size_t k = 0; k < dim && ok; ++k) {
      if (idx[k] == 0 || idx[k] + 1 == n) {
        ok = false;
      } else {
        ok = inside[node - g->stride[k]] && inside[node + g->stride[k]];
      }
    }
    if (ok) {
      g->interior_mask[node] = 1;
      g->interior.push_back(node);
    }
  }
  if (g->interior.empty()) throw EmptyDomain();
  return g;
}

/// Real values at every grid node.
struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g) : grid(std::move(g)), values(grid->node_count, 0.0) {}
  ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

/// Samples `e` at every node. With `dirichlet` set, non-interior nodes are 0.
inline ScalarField sample(const GridPtr& grid, const Expr& e, bool dirichlet = false) {
  ScalarField f(grid);
  for (std::size_t node = 0; node < grid->node_count; ++node) {
    if (dirichlet && !grid->is_interior(node)) continue;
    const auto x = grid->coordinates(node);
    f[node] = e.eval(std::span<const double>(x.data(), grid->dim));
  }
  return f;
}

inline void apply_dirichlet(ScalarField& f) {
  for (std::size_t node = 0; node < f.size(); ++node)
    if (!f.grid->is_interior(node)) f[node] = 0.0;
}

inline bool is_zero_on_interior(const ScalarField& f) {
  for (std::size_t node : f.grid->interior)
    if (f[node] != 0.0) return false;
  return true;
}

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (std::size_t node : f.grid->interior) m = std::max(m, std::abs(f[node]));
  return m;
}

inline ScalarField scaled(const ScalarField& f, double c) {
  ScalarField out = f;
  for (double& v : out.values) v *= c;
  return out;
}

inline ScalarField axpy(double a, const ScalarField& x, const ScalarField& y) {
  ScalarField out = y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * x[i];
  return out;
}

/// N components per node, node-major.
struct VectorField {
  GridPtr grid;
  std::vector<double> values;

  std::span<const double> at(std::size_t node) const {
    return {values.data() + node * grid->dim, grid->dim};
  }
};

/// Central differences at interior nodes. Along an axis where a neighbour is
/// boundary, the one-sided difference towards that neighbour is used so the
/// Dirichlet value enters the stencil. Boundary nodes get the zero vector.
inline VectorField gradient(const ScalarField& u) {
  const GridSpec& g = *u.grid;
  VectorField out{u.grid, std::vector<double>(g.node_count * g.dim, 0.0)};
  for (std::size_t node : g.interior) {
    for (std::size_t k = 0; k < g.dim; ++k) {
      const std::size_t up = node + g.stride[k];
      const std::size_t dn = node - g.stride[k];
      double d;
      if (!g.is_interior(up))
        d = (u[up] - u[node]) / g.h;
      else if (!g.is_interior(dn))
        d = (u[node] - u[dn]) / g.h;
      else
        d = (u[up] - u[dn]) / (2.0 * g.h);
      out.values[node * g.dim + k] = d;
    }
  }
  return out;
}

/// Node quadrature: sum over interior nodes times h^N.
inline double integrate(const ScalarField& f) {
  double s = 0.0;
  for (std::size_t node : f.grid->interior) s += f[node];
  return s * f.grid->cell_volume;
}

/// Weighted point samples of a non-negative quantity: the discrete measure on
/// which modulars and Luxemburg norms are evaluated. `node` gives the grid node
/// whose exponent values apply to the sample.
struct SampleSet {
  std::vector<double> value;
  std::vector<std::size_t> node;
  std::vector<double> weight;

  std::size_t size() const { return value.size(); }
  void push(double v, std::size_t nd, double w) {
    value.push_back(v);
    node.push_back(nd);
    weight.push_back(w);
  }
};

/// |u| at interior nodes with weight h^N.
inline SampleSet node_samples(const ScalarField& u) {
  SampleSet s;
  const GridSpec& g = *u.grid;
  for (std::size_t node : g.interior) s.push(std::abs(u[node]), node, g.cell_volume);
  return s;
}

/// Forward and backward difference vectors of u at an interior node.
inline void one_sided_differences(const ScalarField& u, std::size_t node,
                                  std::array<double, kMaxDim>& forward,
                                  std::array<double, kMaxDim>& backward) {
  const GridSpec& g = *u.grid;
  for (std::size_t k = 0; k < g.dim; ++k) {
    forward[k] = (u[node + g.stride[k]] - u[node]) / g.h;
    backward[k] = (u[node] - u[node - g.stride[k]]) / g.h;
  }
}

inline double norm_of(const std::array<double, kMaxDim>& v, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) s += v[k] * v[k];
  return std::sqrt(s);
}

/// |∇u| as used by every gradient energy: each interior node contributes its
/// forward-difference and backward-difference magnitudes with weight h^N/2.
inline SampleSet gradient_samples(const ScalarField& u) {
  SampleSet s;
  const GridSpec& g = *u.grid;
  const double w = 0.5 * g.cell_volume;
  std::array<double, kMaxDim> fw{}, bw{};
  for (std::size_t node : g.interior) {
    one_sided_differences(u, node, fw, bw);
    s.push(norm_of(fw, g.dim), node, w);
    s.push(norm_of(bw, g.dim), node, w);
  }
  return s;
}

/// CSV with header "i1,...,iN,x1,...,xN,value", one row per node in row-major order.
inline void write_csv(std::ostream& os, const ScalarField& f) {
  const GridSpec& g = *f.grid;
  for (std::size_t k = 0; k < g.dim; ++k) os << 'i' << k + 1 << ',';
  for (std::size_t k = 0; k < g.dim; ++k) os << 'x' << k + 1 << ',';
  os << "value\n";
  char buf[64];
  for (std::size_t node = 0; node < g.node_count; ++node) {
    const auto idx = g.multi_index(node);
    const auto x = g.coordinates(node);
    for (std::size_t k = 0; k < g.dim; ++k) os << idx[k] << ',';
    for (std::size_t k = 0; k < g.dim; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,", x[k]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", f[node]);
    os << buf;
  }
}

}  // namespace mpnehari
