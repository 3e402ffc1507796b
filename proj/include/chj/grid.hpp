#pragma once

#include <array>
#include <vector>

namespace chj {

// Point on the flat torus T^d, d <= 2. Component 1 is unused when d == 1.
using Point = std::array<double, 2>;

// Uniform periodic grid on T^d with unit period per axis.
struct PeriodicGrid {
  int dim = 1;        // 1 or 2
  int n = 0;          // points per axis
  double spacing = 0; // 1.0 / n, so spacing * n == 1 exactly in intent

  int node_count() const { return dim == 1 ? n : n * n; }

  // Flat index <-> per-axis indices (row-major, wrapped).
  int index(int i, int j = 0) const;
  std::array<int, 2> axes(int idx) const;

  Point node(int idx) const;
  int nearest_node(const Point& x) const;
};

PeriodicGrid make_grid(int dim, int n);

// Componentwise reduction of x modulo 1 into [0,1)^d. Throws ConfigError on
// non-finite input.
Point wrap(const Point& x, int dim);

// Minimal-image displacement to - from, each component in [-1/2, 1/2).
Point wrap_displacement(const Point& to, const Point& from, int dim);

// Distance induced by the flat metric: Euclidean norm of the minimal-image
// difference. Bounded by sqrt(d)/2.
double periodic_distance(const Point& a, const Point& b, int dim);

double torus_diameter(int dim);

struct GridFunction {
  PeriodicGrid grid;
  std::vector<double> values;

  double& operator[](int i) { return values[i]; }
  double operator[](int i) const { return values[i]; }
};

GridFunction make_constant(const PeriodicGrid& grid, double value);
GridFunction make_distance_to(const PeriodicGrid& grid, const Point& center);

// Multilinear interpolation with periodic wrap. Exact at nodes and bounded by
// [min f, max f].
double interpolate(const GridFunction& f, const Point& x);

double max_abs(const std::vector<double>& v);
double sup_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace chj
