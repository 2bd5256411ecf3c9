#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wkam/env.hpp"
#include "wkam/grid.hpp"
#include "wkam/hamiltonian.hpp"
#include "wkam/kernels.hpp"

namespace wkam {

// sigma_a(x, q) = sup{<q, p> : H(x, p) <= a}. Closed form for the library
// models, a scan over the momentum grid otherwise. Throws SubcriticalError
// when the sublevel at x is empty.
double support_sigma(const Hamiltonian &model, double a, Vec2 x, Vec2 q,
                     const EnvRealization &env, double p_radius = 16.0,
                     int p_grid = 401);

// Graph on the grid with edges y -> x for |x - y| <= radius and weight
// sigma_a(mid(y, x), x - y).
struct CostGraph {
  double level = 0.0;
  double radius = 0.0;
  KernelTable table;
  // Set when some sublevel is empty; the edge pair is then a cycle of
  // weight -inf.
  std::optional<std::pair<int, int>> empty_edge;

  std::vector<int> empty_cycle() const;
};

CostGraph build_cost_graph(const Hamiltonian &model, double a,
                           const EnvRealization &env, const GridSpec &grid,
                           double radius);

// min(6h, max(3h, h ceil(kappa_a))).
double default_neighborhood_radius(const Hamiltonian &model, double a,
                                   const EnvRealization &env,
                                   const GridSpec &grid);

struct Semidistance {
  double level = 0.0;
  GridSpec grid;
  std::vector<int> sources;
  std::vector<std::vector<double>> rows; // rows[i][x] = S_a(sources[i], x)

  // S_a(y, .) for a source y; throws ArgumentError if y is not a source.
  GridFn from(int y) const;
  double operator()(int y, int x) const;
};

// Shortest paths from each source; radius <= 0 selects the default. Throws
// SubcriticalError with a negative cycle when a < c_f on the grid.
Semidistance semidistance(const Hamiltonian &model, double a,
                          const std::vector<int> &sources,
                          const EnvRealization &env, const GridSpec &grid,
                          double radius);
Semidistance semidistance(const CostGraph &graph,
                          const std::vector<int> &sources);

// Shortest paths from every grid point at once: zero labels everywhere.
// Throws SubcriticalError if the graph has a negative cycle.
void require_no_negative_cycle(const CostGraph &graph);

struct SubsolutionReport {
  bool pass = false;
  double excess = 0.0;    // max over grid points of H(x, D_h phi) - a
  int worst = -1;         // grid index attaining the excess
  double tolerance = 0.0;
  double margin() const { return tolerance - excess; }
};

// Local test H(x, D_h phi(x)) <= a + tol with central differences. The
// default tolerance is 4h (L_R + |D_x H|), where L_R is the p-Lipschitz
// constant of H on the ball of radius max |D_h phi|.
SubsolutionReport check_subsolution(const GridFn &phi,
                                    const Hamiltonian &model, double a,
                                    const EnvRealization &env,
                                    std::optional<double> tolerance = {});

struct CriticalValue {
  double value = 0.0; // bracket midpoint
  double lo = 0.0;    // level with a negative cycle
  double hi = 0.0;    // level without
  std::vector<int> certificate; // negative cycle found at lo
  int iterations = 0;
};

// inf{a : CostGraph(a) has no negative cycle} by bisection to width
// tol_bisect. radius <= 0 selects the default neighborhood radius at a_hi.
CriticalValue critical_value_free(const Hamiltonian &model,
                                  const EnvRealization &env,
                                  const GridSpec &grid, double radius,
                                  double tol_bisect);

struct StationaryEstimate {
  std::vector<double> box_lengths;
  // values[b][i]: realization i on box b.
  std::vector<std::vector<double>> values;
  std::vector<double> means;
  // Max minus min across realizations per box; empty with one sample.
  std::vector<double> spreads;
  double estimate = 0.0; // mean on the largest box
  std::optional<double> spread; // spread on the largest box
};

// Free critical value per realization on periodized boxes [0, L)^N with
// cells_per_unit grid points per unit length.
StationaryEstimate critical_value_stationary(const Hamiltonian &model,
                                             const EnvSpec &spec,
                                             int n_samples,
                                             const std::vector<double> &box_lengths,
                                             int cells_per_unit = 64,
                                             double tol_bisect = 1e-3);

// Text form of a cycle certificate: one "index x [y]" line per point.
std::string format_cycle(const GridSpec &grid, const std::vector<int> &cycle);

} // namespace wkam
