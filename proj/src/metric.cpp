#include "wkam/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "wkam/error.hpp"

namespace wkam {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double numeric_support(const Hamiltonian &model, double a, Vec2 x, Vec2 q,
                       const EnvRealization &env, double p_radius,
                       int p_grid) {
  const bool two_d = env.spec().dimension == 2;
  const double step = 2.0 * p_radius / (p_grid - 1);
  double best = -kInf;
  for (int j = 0; j < (two_d ? p_grid : 1); ++j)
    for (int i = 0; i < p_grid; ++i) {
      const Vec2 p{-p_radius + i * step, two_d ? -p_radius + j * step : 0.0};
      if (model.H(x, p, env) <= a)
        best = std::max(best, dot(q, p));
    }
  return best;
}

double sigma_or_empty(const Hamiltonian &model, double a, Vec2 x, Vec2 q,
                      const EnvRealization &env) {
  if (auto s = model.support(a, x, q, env))
    return *s;
  return numeric_support(model, a, x, q, env, 16.0, 401);
}

// Max of H(x, 0) over the half grid, which contains every edge midpoint.
double max_rest_energy(const Hamiltonian &model, const EnvRealization &env,
                       const GridSpec &grid, double *min_out) {
  const double hh = 0.5 * grid.h();
  const int m = 2 * grid.n;
  double hi = -kInf, lo = kInf;
  for (int j = 0; j < (grid.dim == 2 ? m : 1); ++j)
    for (int i = 0; i < m; ++i) {
      const double v = model.H({i * hh, grid.dim == 2 ? j * hh : 0.0}, {}, env);
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
  if (min_out)
    *min_out = lo;
  return hi;
}

bool has_negative_cycle(const CostGraph &graph, std::vector<int> *cycle) {
  try {
    require_no_negative_cycle(graph);
    return false;
  } catch (const SubcriticalError &e) {
    if (cycle)
      *cycle = e.cycle();
    return true;
  }
}
} // namespace

double support_sigma(const Hamiltonian &model, double a, Vec2 x, Vec2 q,
                     const EnvRealization &env, double p_radius, int p_grid) {
  double s;
  if (auto closed = model.support(a, x, q, env))
    s = *closed;
  else
    s = numeric_support(model, a, x, q, env, p_radius, p_grid);
  if (s == -kInf)
    throw SubcriticalError("subcritical at x = (" + std::to_string(x.x) +
                           ", " + std::to_string(x.y) + "): sublevel " +
                           std::to_string(a) + " is empty");
  return s;
}

std::vector<int> CostGraph::empty_cycle() const {
  if (!empty_edge)
    return {};
  return {empty_edge->first, empty_edge->second, empty_edge->first};
}

CostGraph build_cost_graph(const Hamiltonian &model, double a,
                           const EnvRealization &env, const GridSpec &grid,
                           double radius) {
  grid.validate();
  const double h = grid.h();
  const double cells = radius / h;
  const int r = static_cast<int>(std::ceil(cells - 1e-9));
  if (r < 1)
    throw ArgumentError("neighborhood radius must be at least one cell");
  CostGraph g;
  g.level = a;
  g.radius = radius;
  g.table = KernelTable(Stencil::make(grid, r));
  const Stencil &st = g.table.stencil;
  const int size = grid.size();
  const int jmax = grid.dim == 2 ? r : 0;
  std::vector<int> empty_at(size, -1);
#pragma omp parallel for schedule(static)
  for (int x = 0; x < size; ++x) {
    for (int dj = -jmax; dj <= jmax; ++dj)
      for (int di = -r; di <= r; ++di) {
        if ((di == 0 && dj == 0) || di * di + dj * dj > cells * cells + 1e-9)
          continue;
        const int k = st.index_of(di, dj);
        const int y = grid.shift(x, -di, -dj);
        const double w = sigma_or_empty(model, a, grid.midpoint(y, di, dj),
                                        {di * h, dj * h}, env);
        double &slot = g.table.at(x, k);
        slot = std::min(slot, w);
        if (w == -kInf && empty_at[x] < 0)
          empty_at[x] = y;
      }
  }
  for (int x = 0; x < size; ++x)
    if (empty_at[x] >= 0) {
      g.empty_edge = std::make_pair(empty_at[x], x);
      break;
    }
  return g;
}

double default_neighborhood_radius(const Hamiltonian &model, double a,
                                   const EnvRealization &env,
                                   const GridSpec &grid) {
  const double h = grid.h();
  const double k = kappa(model, a, env, grid, 16.0);
  return std::min(6.0 * h, std::max(3.0 * h, h * std::ceil(k)));
}

GridFn Semidistance::from(int y) const {
  auto it = std::find(sources.begin(), sources.end(), y);
  if (it == sources.end())
    throw ArgumentError("grid index " + std::to_string(y) +
                        " is not a semidistance source");
  return GridFn(grid, rows[size_t(it - sources.begin())]);
}

double Semidistance::operator()(int y, int x) const {
  auto it = std::find(sources.begin(), sources.end(), y);
  if (it == sources.end())
    throw ArgumentError("grid index " + std::to_string(y) +
                        " is not a semidistance source");
  return rows[size_t(it - sources.begin())][size_t(x)];
}

void require_no_negative_cycle(const CostGraph &graph) {
  if (graph.empty_edge)
    throw SubcriticalError("subcritical level " + std::to_string(graph.level) +
                               ": empty sublevel on an edge midpoint",
                           graph.empty_cycle());
  shortest_paths(graph.table,
                 std::vector<double>(size_t(graph.table.stencil.grid.size()),
                                     0.0));
}

Semidistance semidistance(const CostGraph &graph,
                          const std::vector<int> &sources) {
  if (graph.empty_edge)
    throw SubcriticalError("subcritical level " + std::to_string(graph.level) +
                               ": empty sublevel on an edge midpoint",
                           graph.empty_cycle());
  const GridSpec &grid = graph.table.stencil.grid;
  Semidistance s;
  s.level = graph.level;
  s.grid = grid;
  s.sources = sources;
  for (int y : sources) {
    if (y < 0 || y >= grid.size())
      throw ArgumentError("semidistance source out of range");
    std::vector<double> init(size_t(grid.size()), kInf);
    init[size_t(y)] = 0.0;
    auto sp = shortest_paths(graph.table, std::move(init));
    s.rows.push_back(std::move(sp.dist));
  }
  return s;
}

Semidistance semidistance(const Hamiltonian &model, double a,
                          const std::vector<int> &sources,
                          const EnvRealization &env, const GridSpec &grid,
                          double radius) {
  if (radius <= 0.0)
    radius = default_neighborhood_radius(model, a, env, grid);
  return semidistance(build_cost_graph(model, a, env, grid, radius), sources);
}

SubsolutionReport check_subsolution(const GridFn &phi,
                                    const Hamiltonian &model, double a,
                                    const EnvRealization &env,
                                    std::optional<double> tolerance) {
  const GridSpec &grid = phi.grid;
  SubsolutionReport rep;
  rep.excess = -kInf;
  double slope = 0.0;
  for (int x = 0; x < grid.size(); ++x) {
    const Vec2 d = phi.gradient(x);
    slope = std::max(slope, norm(d));
    const double e = model.H(grid.point(x), d, env) - a;
    if (e > rep.excess) {
      rep.excess = e;
      rep.worst = x;
    }
  }
  rep.tolerance = tolerance ? *tolerance
                            : 4.0 * grid.h() *
                                  (model.p_lipschitz(slope, env) +
                                   env.gradient_bound());
  rep.pass = rep.excess <= rep.tolerance;
  return rep;
}

CriticalValue critical_value_free(const Hamiltonian &model,
                                  const EnvRealization &env,
                                  const GridSpec &grid, double radius,
                                  double tol_bisect) {
  if (!(tol_bisect > 0.0))
    throw ArgumentError("bisection tolerance must be positive");
  double lo_energy = 0.0;
  double hi = max_rest_energy(model, env, grid, &lo_energy);
  if (radius <= 0.0)
    radius = default_neighborhood_radius(model, hi, env, grid);

  CriticalValue cv;
  if (has_negative_cycle(build_cost_graph(model, hi, env, grid, radius),
                         nullptr))
    throw ConfigError("critical value bracket failed: negative cycle at the "
                      "upper level " + std::to_string(hi));
  double lo = lo_energy;
  std::vector<int> cycle;
  double step = 1.0;
  int tries = 0;
  while (!has_negative_cycle(build_cost_graph(model, lo, env, grid, radius),
                             &cycle)) {
    hi = std::min(hi, lo);
    lo -= step;
    step *= 2.0;
    if (++tries > 40)
      throw ConfigError("critical value bracket failed: no negative cycle "
                        "found below " + std::to_string(lo));
  }
  cv.certificate = cycle;
  while (hi - lo > tol_bisect) {
    const double mid = 0.5 * (lo + hi);
    if (has_negative_cycle(build_cost_graph(model, mid, env, grid, radius),
                           &cycle)) {
      lo = mid;
      cv.certificate = cycle;
    } else {
      hi = mid;
    }
    ++cv.iterations;
  }
  cv.lo = lo;
  cv.hi = hi;
  cv.value = 0.5 * (lo + hi);
  return cv;
}

StationaryEstimate critical_value_stationary(
    const Hamiltonian &model, const EnvSpec &spec, int n_samples,
    const std::vector<double> &box_lengths, int cells_per_unit,
    double tol_bisect) {
  if (n_samples < 1)
    throw ArgumentError("critical_value_stationary needs n_samples >= 1");
  if (box_lengths.empty())
    throw ArgumentError("critical_value_stationary needs at least one box");
  spec.validate();
  StationaryEstimate est;
  est.box_lengths = box_lengths;
  for (double L : box_lengths) {
    GridSpec grid;
    grid.dim = spec.dimension;
    grid.length = L;
    grid.n = static_cast<int>(std::lround(L * cells_per_unit));
    grid.validate();
    std::vector<double> vals;
    for (int i = 0; i < n_samples; ++i) {
      const auto env = sample_realization(spec, std::uint64_t(i));
      vals.push_back(critical_value_free(model, env, grid, 0.0, tol_bisect).value);
    }
    double mean = 0.0;
    for (double v : vals)
      mean += v;
    mean /= vals.size();
    est.means.push_back(mean);
    if (n_samples > 1) {
      auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
      est.spreads.push_back(*mx - *mn);
    }
    est.values.push_back(std::move(vals));
  }
  est.estimate = est.means.back();
  if (!est.spreads.empty())
    est.spread = est.spreads.back();
  return est;
}

std::string format_cycle(const GridSpec &grid, const std::vector<int> &cycle) {
  std::ostringstream out;
  char buf[96];
  for (int idx : cycle) {
    const Vec2 p = grid.point(idx);
    if (grid.dim == 1)
      std::snprintf(buf, sizeof buf, "%d %.17g\n", idx, p.x);
    else
      std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", idx, p.x, p.y);
    out << buf;
  }
  return out.str();
}

} // namespace wkam
