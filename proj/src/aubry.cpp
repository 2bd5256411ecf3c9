#include "wkam/aubry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wkam/error.hpp"

namespace wkam {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

AubryMask AubryMask::at(double eps) const {
  AubryMask m = *this;
  m.threshold = eps;
  for (size_t i = 0; i < residual.size(); ++i)
    m.inside[i] = residual[i] <= eps;
  return m;
}

std::vector<int> AubryMask::points() const {
  std::vector<int> out;
  for (size_t i = 0; i < inside.size(); ++i)
    if (inside[i])
      out.push_back(static_cast<int>(i));
  return out;
}

int AubryMask::count() const {
  return static_cast<int>(std::count(inside.begin(), inside.end(), 1));
}

double AubryMask::spread_from(const std::vector<int> &targets) const {
  double worst = 0.0;
  for (int p : points()) {
    double best = kInf;
    for (int t : targets)
      best = std::min(best, grid.distance(p, t) / grid.h());
    worst = std::max(worst, best);
  }
  return worst;
}

std::vector<AubryMask> threshold_sweep(const AubryMask &mask) {
  return {mask.at(0.5 * mask.threshold), mask, mask.at(2.0 * mask.threshold)};
}

AubryMask classical_aubry(const ActionKernel &folded,
                          std::vector<double> ladder, double eps) {
  if (ladder.empty())
    throw ArgumentError("classical_aubry needs a nonempty ladder");
  std::sort(ladder.begin(), ladder.end());
  AubryMask m;
  m.grid = folded.grid();
  m.threshold = eps;
  const int size = m.grid.size();
  m.residual.assign(size_t(size), kInf);
  if (ladder.back() < 100.0 * ladder.front())
    m.warnings.push_back("ladder spans less than two decades of t");
  const size_t first = ladder.size() / 2;
  for (size_t i = first; i < ladder.size(); ++i) {
    const int steps = folded.steps_for(ladder[i]);
    if (steps < 1)
      continue;
    const KernelTable &t = folded.table(steps);
    const int zero = t.stencil.index_of(0, 0);
    for (int y = 0; y < size; ++y)
      m.residual[size_t(y)] = std::min(m.residual[size_t(y)], t.at(y, zero));
  }
  m.inside.resize(size_t(size));
  for (int y = 0; y < size; ++y)
    m.inside[size_t(y)] = m.residual[size_t(y)] <= eps;
  return m;
}

void SubsolutionLibrary::add(GridFn v, std::string tag) {
  if (!v.finite())
    throw ArgumentError("library member '" + tag + "' is not finite");
  const double base = v[0];
  for (double &x : v.values)
    x -= base;
  members.push_back({std::move(v), std::move(tag)});
}

SubsolutionLibrary default_library(const ActionKernel &folded,
                                   int seeds_per_axis,
                                   const std::vector<double> &image_times) {
  const GridSpec &grid = folded.grid();
  if (seeds_per_axis < 1 || seeds_per_axis > grid.n)
    throw ArgumentError("seeds per axis must lie in [1, n]");
  std::vector<int> seeds;
  for (int j = 0; j < (grid.dim == 2 ? seeds_per_axis : 1); ++j)
    for (int i = 0; i < seeds_per_axis; ++i)
      seeds.push_back(grid.index(i * grid.n / seeds_per_axis,
                                 j * grid.n / seeds_per_axis));
  const Semidistance fwd = kernel_semidistance(folded, seeds);
  const Semidistance bwd = kernel_semidistance_to(folded, seeds);
  SubsolutionLibrary lib;
  for (size_t i = 0; i < seeds.size(); ++i) {
    const std::string at = std::to_string(seeds[i]);
    lib.add(GridFn(grid, fwd.rows[i]), "forward cone from " + at);
    lib.add(-GridFn(grid, bwd.rows[i]), "backward cone to " + at);
  }
  for (double t : image_times)
    for (size_t i = 0; i < seeds.size(); ++i)
      lib.add(lax_minus(GridFn(grid, fwd.rows[i]), folded, t).value,
              "T-(" + std::to_string(t) + ") of forward cone from " +
                  std::to_string(seeds[i]));
  return lib;
}

GridFn build_w(const SubsolutionLibrary &library, const ActionKernel &folded,
               std::optional<double> tolerance) {
  if (library.members.empty())
    throw ArgumentError("build_w needs a nonempty library");
  const GridSpec &grid = library.members.front().v.grid;
  const size_t M = library.members.size();
  const double norm = 1.0 - std::ldexp(1.0, -static_cast<int>(M));
  GridFn w(grid, 0.0);
  for (size_t n = 0; n < M; ++n) {
    const auto &m = library.members[n];
    if (!(m.v.grid == grid))
      throw ArgumentError("library members live on different grids");
    const double dt = folded.dt();
    const auto rep = check_monotone_semigroup(
        m.v, folded, 0.0, {dt, 2 * dt, 4 * dt, 8 * dt}, tolerance);
    if (!rep.pass)
      throw RefusalError("library member " + std::to_string(n) + " (" + m.tag +
                         ") fails the subsolution check: decrease " +
                         std::to_string(rep.worst) + " > tolerance " +
                         std::to_string(rep.tolerance));
    const double weight = std::ldexp(1.0, -static_cast<int>(n + 1)) / norm;
    for (int x = 0; x < w.size(); ++x)
      w[x] += weight * m.v[x];
  }
  return w;
}

double default_aubry_threshold(const GridFn &w) {
  return 1e-9 * (1.0 + std::max(std::abs(w.sup()), std::abs(w.inf())));
}

std::vector<int> fixed_point_set(const GridFn &v, const ActionKernel &folded,
                                 double t, double eps) {
  const GridFn tv = lax_minus(v, folded, t).value;
  const double floor = -std::max(eps, default_aubry_threshold(v));
  std::vector<int> out;
  for (int x = 0; x < v.size(); ++x) {
    const double r = tv[x] - v[x];
    if (r < floor)
      throw RefusalError("not a subsolution: T_t v - v = " + std::to_string(r) +
                         " at grid index " + std::to_string(x));
    if (r <= eps)
      out.push_back(x);
  }
  return out;
}

AubryMask detect_aubry(const GridFn &w, const ActionKernel &folded,
                       std::vector<double> ladder, std::optional<double> eps) {
  if (ladder.empty())
    throw ArgumentError("detect_aubry needs a nonempty ladder");
  std::vector<int> steps;
  for (double t : ladder)
    steps.push_back(folded.steps_for(t));
  std::sort(steps.begin(), steps.end());
  const auto seq = lax_minus_sequence(w, folded, steps.back());
  AubryMask m;
  m.grid = w.grid;
  m.threshold = eps ? *eps : default_aubry_threshold(w);
  m.residual.assign(size_t(w.size()), -kInf);
  for (int s : steps)
    for (int x = 0; x < w.size(); ++x)
      m.residual[size_t(x)] =
          std::max(m.residual[size_t(x)], seq[size_t(s)][x] - w[x]);
  m.inside.resize(size_t(w.size()));
  for (int x = 0; x < w.size(); ++x)
    m.inside[size_t(x)] = m.residual[size_t(x)] <= m.threshold;
  if (steps.back() * folded.dt() < 100.0 * steps.front() * folded.dt())
    m.warnings.push_back("ladder spans less than two decades of t");
  return m;
}

GridFn lax_extension(const GridFn &g, const Semidistance &S) {
  if (S.sources.empty())
    throw ArgumentError("empty source set: the extension is undefined");
  if (!(g.grid == S.grid))
    throw ArgumentError("function and semidistance live on different grids");
  GridFn u(g.grid, kInf);
  for (size_t i = 0; i < S.sources.size(); ++i) {
    const double gy = g[S.sources[i]];
    for (int x = 0; x < u.size(); ++x)
      u[x] = std::min(u[x], gy + S.rows[i][size_t(x)]);
  }
  return u;
}

CalibratedCurve extract_calibrated_curve(int x0, const GridFn &w,
                                         const ActionKernel &folded, int steps,
                                         const AubryMask &mask,
                                         double tolerance) {
  const GridSpec &grid = w.grid;
  if (x0 < 0 || x0 >= grid.size())
    throw ArgumentError("curve start out of range");
  if (steps < 0)
    throw ArgumentError("negative step count");
  const KernelTable &step = folded.step();
  std::vector<double> next(size_t(grid.size()));
  std::vector<int> arg(size_t(grid.size()));
  kernels::apply(step, w.values.data(), next.data(), arg.data());

  std::vector<int> back{x0};
  for (int s = 0; s < steps; ++s)
    back.push_back(arg[size_t(back.back())]);
  CalibratedCurve c;
  c.points.assign(back.rbegin(), back.rend());
  const auto mask_pts = mask.points();
  double acc = 0.0;
  for (size_t k = 0; k < c.points.size(); ++k) {
    c.times.push_back((double(k) - steps) * folded.dt());
    if (k > 0)
      acc += step.weight(c.points[k - 1], c.points[k]);
    c.action.push_back(acc);
    c.w_increment.push_back(w[c.points[k]] - w[c.points.front()]);
    c.max_defect = std::max(c.max_defect, std::abs(acc - c.w_increment.back()));
    double off = kInf;
    for (int p : mask_pts)
      off = std::min(off, grid.distance(p, c.points[k]) / grid.h());
    if (off > 1.0 + 1e-9)
      ++c.exits;
  }
  c.pass = c.exits == 0 && c.max_defect <= tolerance * (1.0 + std::abs(acc));
  return c;
}

} // namespace wkam
