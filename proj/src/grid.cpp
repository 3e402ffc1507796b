#include "chj/grid.hpp"

#include <cmath>
#include <limits>

#include "chj/errors.hpp"

namespace chj {

int PeriodicGrid::index(int i, int j) const {
  auto wrap_i = [this](int k) {
    k %= n;
    return k < 0 ? k + n : k;
  };
  if (dim == 1) return wrap_i(i);
  return wrap_i(i) * n + wrap_i(j);
}

std::array<int, 2> PeriodicGrid::axes(int idx) const {
  if (dim == 1) return {idx, 0};
  return {idx / n, idx % n};
}

Point PeriodicGrid::node(int idx) const {
  auto ij = axes(idx);
  return {ij[0] * spacing, dim == 2 ? ij[1] * spacing : 0.0};
}

int PeriodicGrid::nearest_node(const Point& x) const {
  Point w = wrap(x, dim);
  int i = static_cast<int>(std::lround(w[0] / spacing)) % n;
  int j = dim == 2 ? static_cast<int>(std::lround(w[1] / spacing)) % n : 0;
  return index(i, j);
}

PeriodicGrid make_grid(int dim, int n) {
  if (dim != 1 && dim != 2) throw ConfigError("grid: dim must be 1 or 2");
  if (n < 4) throw ConfigError("grid: n must be >= 4");
  return PeriodicGrid{dim, n, 1.0 / n};
}

Point wrap(const Point& x, int dim) {
  Point out{0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    if (!std::isfinite(x[d])) throw ConfigError("wrap: non-finite coordinate");
    double f = x[d] - std::floor(x[d]);
    if (f >= 1.0) f -= 1.0;  // guards the x[d] == -eps rounding case
    out[d] = f;
  }
  return out;
}

Point wrap_displacement(const Point& to, const Point& from, int dim) {
  Point out{0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    double diff = to[d] - from[d];
    diff -= std::floor(diff);
    if (diff >= 0.5) diff -= 1.0;
    out[d] = diff;
  }
  return out;
}

double periodic_distance(const Point& a, const Point& b, int dim) {
  if (!std::isfinite(a[0]) || !std::isfinite(b[0]) ||
      (dim == 2 && (!std::isfinite(a[1]) || !std::isfinite(b[1]))))
    throw ConfigError("periodic_distance: non-finite point");
  Point d = wrap_displacement(a, b, dim);
  double s = 0;
  for (int k = 0; k < dim; ++k) s += d[k] * d[k];
  return std::sqrt(s);
}

double torus_diameter(int dim) { return std::sqrt(static_cast<double>(dim)) / 2.0; }

GridFunction make_constant(const PeriodicGrid& grid, double value) {
  return GridFunction{grid, std::vector<double>(grid.node_count(), value)};
}

GridFunction make_distance_to(const PeriodicGrid& grid, const Point& center) {
  GridFunction f{grid, std::vector<double>(grid.node_count())};
  for (int i = 0; i < grid.node_count(); ++i)
    f.values[i] = periodic_distance(grid.node(i), center, grid.dim);
  return f;
}

double interpolate(const GridFunction& f, const Point& x) {
  const PeriodicGrid& g = f.grid;
  Point w = wrap(x, g.dim);
  double fx = w[0] / g.spacing;
  int i0 = static_cast<int>(std::floor(fx));
  double sx = fx - i0;
  if (g.dim == 1) {
    double a = f.values[g.index(i0)];
    double b = f.values[g.index(i0 + 1)];
    return a + sx * (b - a);
  }
  double fy = w[1] / g.spacing;
  int j0 = static_cast<int>(std::floor(fy));
  double sy = fy - j0;
  double v00 = f.values[g.index(i0, j0)];
  double v10 = f.values[g.index(i0 + 1, j0)];
  double v01 = f.values[g.index(i0, j0 + 1)];
  double v11 = f.values[g.index(i0 + 1, j0 + 1)];
  double a = v00 + sx * (v10 - v00);
  double b = v01 + sx * (v11 - v01);
  return a + sy * (b - a);
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace chj
