#include <cmath>
#include <limits>

#include "wkam/error.hpp"
#include "wkam/kernels.hpp"

namespace wkam {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

int fold(int d, int n) {
  d = ((d % n) + n) % n;
  return d >= n - n / 2 ? d - n : d; // [-n/2, n/2 - 1] for even n
}
} // namespace

Stencil Stencil::make(const GridSpec &grid, int radius) {
  if (radius < 0)
    throw ArgumentError("stencil radius must be nonnegative");
  Stencil s;
  s.grid = grid;
  s.radius = radius;
  s.full = 2 * radius + 1 >= grid.n;
  s.width = s.full ? grid.n : 2 * radius + 1;
  return s;
}

int Stencil::index_of(int di, int dj) const {
  if (full) {
    di = fold(di, grid.n) - lo();
    dj = grid.dim == 1 ? 0 : fold(dj, grid.n) - lo();
    return di + width * dj;
  }
  if (di < -radius || di > radius)
    return -1;
  if (grid.dim == 1)
    return dj == 0 ? di + radius : -1;
  if (dj < -radius || dj > radius)
    return -1;
  return (di + radius) + width * (dj + radius);
}

KernelTable::KernelTable(Stencil s)
    : stencil(s), values(size_t(s.grid.size()) * s.count(), kInf) {}

double KernelTable::weight(int y, int x) const {
  const auto &g = stencil.grid;
  auto cy = g.coords(y), cx = g.coords(x);
  const int k = stencil.index_of(fold(cx[0] - cy[0], g.n),
                                 g.dim == 1 ? 0 : fold(cx[1] - cy[1], g.n));
  return k < 0 ? kInf : at(x, k);
}

namespace kernels {

namespace detail {
Stencil composed_stencil(const KernelTable &a, const KernelTable &b) {
  if (!(a.stencil.grid == b.stencil.grid))
    throw ArgumentError("cannot compose kernels on different grids");
  const int n = a.stencil.grid.n;
  if (a.stencil.full || b.stencil.full)
    return Stencil::make(a.stencil.grid, n);
  return Stencil::make(a.stencil.grid, a.stencil.radius + b.stencil.radius);
}

void compose_target(const KernelTable &a, const KernelTable &b, KernelTable &c,
                    int x) {
  const auto &g = c.stencil.grid;
  for (int kb = 0; kb < b.count(); ++kb) {
    const double wb = b.at(x, kb);
    if (wb == kInf)
      continue;
    const auto db = b.stencil.offset(kb);
    const int z = g.shift(x, -db[0], -db[1]);
    for (int ka = 0; ka < a.count(); ++ka) {
      const double wa = a.at(z, ka);
      if (wa == kInf)
        continue;
      const auto da = a.stencil.offset(ka);
      const int kc = c.stencil.index_of(da[0] + db[0], da[1] + db[1]);
      double &slot = c.at(x, kc);
      const double v = wa + wb;
      if (v < slot)
        slot = v;
    }
  }
}

void apply_target(const KernelTable &t, const double *u, double *out, int *arg,
                  int x) {
  double best = kInf;
  int best_y = -1;
  for (int k = 0; k < t.count(); ++k) {
    const double w = t.at(x, k);
    if (w == kInf)
      continue;
    const int y = t.source(x, k);
    const double v = u[y] + w;
    if (v < best || (v == best && y < best_y)) {
      best = v;
      best_y = y;
    }
  }
  out[x] = best;
  if (arg)
    arg[x] = best == kInf ? -1 : best_y;
}
} // namespace detail

KernelTable compose_serial(const KernelTable &a, const KernelTable &b) {
  KernelTable c(detail::composed_stencil(a, b));
  const int size = c.stencil.grid.size();
  for (int x = 0; x < size; ++x)
    detail::compose_target(a, b, c, x);
  return c;
}

void apply_serial(const KernelTable &t, const double *u, double *out,
                  int *arg) {
  const int size = t.stencil.grid.size();
  for (int x = 0; x < size; ++x)
    detail::apply_target(t, u, out, arg, x);
}

} // namespace kernels

KernelTable transpose(const KernelTable &t) {
  KernelTable r(t.stencil);
  const auto &g = t.stencil.grid;
  for (int x = 0; x < g.size(); ++x)
    for (int k = 0; k < t.count(); ++k) {
      const auto d = t.stencil.offset(k);
      // r(y -> x) = t(x -> y) with y = x - d, so t is read at target y,
      // offset -d.
      const int y = g.shift(x, -d[0], -d[1]);
      const int kt = t.stencil.index_of(-d[0], -d[1]);
      r.at(x, k) = t.at(y, kt);
    }
  return r;
}

double cycle_weight(const KernelTable &t, const std::vector<int> &cycle) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < cycle.size(); ++i)
    total += t.weight(cycle[i], cycle[i + 1]);
  return total;
}

namespace {

// A cycle in the predecessor graph, in edge direction, closed; empty if none.
std::vector<int> predecessor_cycle(const std::vector<int> &pred) {
  const int size = static_cast<int>(pred.size());
  std::vector<char> state(size, 0);
  std::vector<int> walk;
  for (int start = 0; start < size; ++start) {
    if (state[start])
      continue;
    walk.clear();
    int v = start;
    while (v >= 0 && state[v] == 0) {
      state[v] = 1;
      walk.push_back(v);
      v = pred[v];
    }
    if (v >= 0 && state[v] == 1) {
      // walk runs against the edges: v <- pred[v] <- ...; reverse it.
      std::vector<int> cycle;
      int u = v;
      do {
        cycle.push_back(u);
        u = pred[u];
      } while (u != v);
      cycle.push_back(v);
      std::vector<int> forward(cycle.rbegin(), cycle.rend());
      for (int w : walk)
        state[w] = 2;
      return forward;
    }
    for (int w : walk)
      state[w] = 2;
  }
  return {};
}

} // namespace

ShortestPaths shortest_paths(const KernelTable &t, std::vector<double> init) {
  const int size = t.stencil.grid.size();
  if (static_cast<int>(init.size()) != size)
    throw ArgumentError("shortest_paths: label count does not match the grid");
  ShortestPaths sp;
  sp.dist = std::move(init);
  sp.pred.assign(size, -1);
  std::vector<double> next(size);
  std::vector<int> arg(size);
  const int limit = 2 * size + 16;
  for (sp.rounds = 1; sp.rounds <= limit; ++sp.rounds) {
    kernels::apply(t, sp.dist.data(), next.data(), arg.data());
    bool changed = false;
    for (int x = 0; x < size; ++x) {
      const double old = sp.dist[x];
      if (next[x] < old &&
          (old == kInf || next[x] < old - 1e-13 * (1.0 + std::abs(old)))) {
        sp.dist[x] = next[x];
        sp.pred[x] = arg[x];
        changed = true;
      }
    }
    if (!changed)
      return sp;
    if (sp.rounds % 8 == 0 || sp.rounds >= size) {
      auto cycle = predecessor_cycle(sp.pred);
      if (!cycle.empty()) {
        const double w = cycle_weight(t, cycle);
        if (w < 0.0)
          throw SubcriticalError("negative cycle of weight " +
                                     std::to_string(w) + " through " +
                                     std::to_string(cycle.size() - 1) +
                                     " grid points",
                                 cycle);
      }
    }
  }
  throw NumericError("shortest paths did not settle after " +
                     std::to_string(limit) + " rounds");
}

} // namespace wkam
