#pragma once

#include <array>
#include <vector>

#include "wkam/grid.hpp"

namespace wkam {

// Offset window around each target point. Offsets d = x - y live in the box
// [-radius, radius]^dim; once the box covers the torus (2 radius + 1 >= n)
// the window becomes the full period [-n/2, n/2 - 1]^dim and offsets wrap.
struct Stencil {
  GridSpec grid;
  int radius = 0;
  bool full = false;
  int width = 1;

  static Stencil make(const GridSpec &grid, int radius);

  int count() const { return grid.dim == 1 ? width : width * width; }
  int lo() const { return full ? -(grid.n / 2) : -radius; }
  std::array<int, 2> offset(int k) const {
    return {k % width + lo(), grid.dim == 1 ? 0 : k / width + lo()};
  }
  // Position of offset (di, dj) in the window, or -1 when outside.
  int index_of(int di, int dj = 0) const;
};

// Edge weights w(y -> x) stored per target: values[x * count + k] with
// y = x - offset(k). +inf marks a missing edge.
struct KernelTable {
  Stencil stencil;
  std::vector<double> values;

  KernelTable() = default;
  explicit KernelTable(Stencil s);

  int count() const { return stencil.count(); }
  double &at(int x, int k) { return values[size_t(x) * count() + k]; }
  double at(int x, int k) const { return values[size_t(x) * count() + k]; }
  int source(int x, int k) const {
    auto d = stencil.offset(k);
    return stencil.grid.shift(x, -d[0], -d[1]);
  }
  // Weight of the edge y -> x, +inf when it is not in the window.
  double weight(int y, int x) const;
};

// Min-plus kernels. The serial versions are the reference; the OpenMP
// versions parallelize over targets and produce bit-identical results.
namespace kernels {

// c(y -> x) = min_z a(y -> z) + b(z -> x).
KernelTable compose_serial(const KernelTable &a, const KernelTable &b);
KernelTable compose_omp(const KernelTable &a, const KernelTable &b);

// out[x] = min_k u[x - d_k] + t(x, k); arg[x] is the minimizing source, the
// smallest index on ties, -1 when every candidate is +inf. arg may be null.
void apply_serial(const KernelTable &t, const double *u, double *out,
                  int *arg);
void apply_omp(const KernelTable &t, const double *u, double *out, int *arg);

// Dispatch to the OpenMP version unless parallelism is switched off.
KernelTable compose(const KernelTable &a, const KernelTable &b);
void apply(const KernelTable &t, const double *u, double *out, int *arg);
void set_parallel(bool enabled);
bool parallel_enabled();

} // namespace kernels

// r(y -> x) = t(x -> y).
KernelTable transpose(const KernelTable &t);

// Shortest paths on the weighted graph of a table from the initial labels.
// Jacobi relaxation rounds with early exit; improvements smaller than a
// relative 1e-13 are ignored so rounding noise does not masquerade as a
// negative cycle.
struct ShortestPaths {
  std::vector<double> dist;
  std::vector<int> pred; // -1 for unimproved labels
  int rounds = 0;
};
// Throws SubcriticalError carrying a negative cycle (closed list of grid
// indices, first == last) when one is reachable.
ShortestPaths shortest_paths(const KernelTable &t, std::vector<double> init);

// Sum of the edge weights along a closed index list.
double cycle_weight(const KernelTable &t, const std::vector<int> &cycle);

} // namespace wkam
