#include "wkam/subsol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wkam/error.hpp"

namespace wkam {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double van_der_corput(int n) {
  double q = 0.0, bk = 0.5;
  for (; n > 0; n >>= 1, bk *= 0.5)
    if (n & 1)
      q += bk;
  return q;
}

std::vector<double> mask_distance(const AubryMask &mask) {
  const GridSpec &g = mask.grid;
  const auto pts = mask.points();
  std::vector<double> d(size_t(g.size()), kInf);
  for (int x = 0; x < g.size(); ++x)
    for (int p : pts)
      d[size_t(x)] = std::min(d[size_t(x)], g.distance(p, x));
  return d;
}

GridFn weighted_sum(const std::vector<GridFn> &terms) {
  const int M = static_cast<int>(terms.size());
  const double norm = 1.0 - std::ldexp(1.0, -M);
  GridFn out(terms.front().grid, 0.0);
  for (int n = 0; n < M; ++n) {
    const double weight = std::ldexp(1.0, -(n + 1)) / norm;
    for (int x = 0; x < out.size(); ++x)
      out[x] += weight * terms[size_t(n)][x];
  }
  return out;
}
} // namespace

StrictnessCertificate check_strict(const GridFn &v, const Hamiltonian &model,
                                   const EnvRealization &env,
                                   const AubryMask &mask, double d0,
                                   std::optional<double> tolerance) {
  const GridSpec &g = v.grid;
  if (!(mask.grid == g))
    throw ArgumentError("function and mask live on different grids");
  const auto dist = mask_distance(mask);
  StrictnessCertificate c;
  c.d0 = d0;
  c.h = g.h();
  c.tolerance = tolerance ? *tolerance : g.h();
  double worst = -kInf;
  for (int x = 0; x < g.size(); ++x) {
    if (dist[size_t(x)] < d0)
      continue;
    bool touches = false;
    for (int a = 0; a < g.dim; ++a)
      for (int s : {-1, 1}) {
        const int y = a == 0 ? g.shift(x, s) : g.shift(x, 0, s);
        touches = touches || mask.contains(y);
      }
    if (touches || mask.contains(x))
      continue;
    ++c.region_size;
    const double hv = model.H(g.point(x), v.gradient(x), env);
    if (hv > worst) {
      worst = hv;
      c.worst = x;
    }
  }
  if (c.region_size == 0)
    throw ArgumentError("strictness region is empty: d0 = " +
                        std::to_string(d0) + " leaves no grid cell");
  c.delta = -worst;
  c.pass = c.delta > c.tolerance;
  return c;
}

WeakStrictnessReport check_weakly_strict(
    const GridFn &v, const Semidistance &S, const AubryMask &mask,
    const std::vector<std::pair<int, int>> &pairs, double tolerance) {
  const GridSpec &g = v.grid;
  WeakStrictnessReport r;
  r.tolerance = tolerance;
  r.gap = kInf;
  for (auto [y, x] : pairs) {
    if (mask.contains(x) || mask.contains(y) ||
        g.distance(x, y) < 2.0 * g.h() - 1e-12)
      continue;
    const double gap = S(y, x) - (v[x] - v[y]);
    ++r.pairs;
    if (gap < r.gap) {
      r.gap = gap;
      r.worst = {y, x};
    }
  }
  if (r.pairs == 0)
    throw ArgumentError("no valid off-mask pairs for the weak strictness test");
  r.pass = r.gap > tolerance;
  return r;
}

std::vector<double> strict_ladder(const ActionKernel &kernel, double tau,
                                  int M) {
  if (!(tau > 0.0) || M < 1)
    throw ArgumentError("strict ladder needs tau > 0 and M >= 1");
  std::vector<double> out;
  for (int n = 1; n <= M; ++n) {
    const double steps = std::max(1.0, std::round(van_der_corput(n) * tau /
                                                  kernel.dt()));
    out.push_back(steps * kernel.dt());
  }
  return out;
}

GridFn build_strict_strictly_convex(const GridFn &w,
                                    const ActionKernel &folded, double tau,
                                    int M) {
  if (!folded.model()->flags().strictly_convex)
    throw RefusalError(folded.model()->name() +
                       " is not strictly convex; use build_strict_convex");
  const auto ladder = strict_ladder(folded, tau, M);
  int max_steps = 0;
  for (double t : ladder)
    max_steps = std::max(max_steps, folded.steps_for(t));
  const auto seq = lax_minus_sequence(w, folded, max_steps);
  std::vector<GridFn> terms;
  for (double t : ladder)
    terms.push_back(seq[size_t(folded.steps_for(t))]);
  return weighted_sum(terms);
}

SupConvolution sup_convolution_time(const GridFn &w, const ActionKernel &folded,
                                    double delta, std::vector<double> times,
                                    std::optional<double> s_max) {
  if (!(delta > 0.0))
    throw ArgumentError("sup-convolution needs delta > 0");
  if (times.empty())
    throw ArgumentError("sup-convolution needs at least one time");
  const double R = folded.speed_bound();
  const double t_top = *std::max_element(times.begin(), times.end());
  const double need = t_top + 2.0 * delta * R;
  const double top = s_max ? *s_max : t_top + 4.0 * delta * R;
  if (top < need - 1e-12)
    throw ArgumentError("s-ladder ends at " + std::to_string(top) +
                        " before the maximizer window end " +
                        std::to_string(need));
  const int steps = static_cast<int>(std::ceil(top / folded.dt() - 1e-9));
  const auto seq = lax_minus_sequence(w, folded, steps);
  SupConvolution out;
  out.times = times;
  out.s_max = steps * folded.dt();
  for (double t : times) {
    GridFn v(w.grid, -kInf);
    std::vector<double> arg(size_t(w.size()), 0.0);
    for (int m = 0; m <= steps; ++m) {
      const double s = m * folded.dt();
      const double pen = (s - t) * (s - t) / (2.0 * delta);
      for (int x = 0; x < w.size(); ++x) {
        const double val = seq[size_t(m)][x] - pen;
        if (val > v[x]) {
          v[x] = val;
          arg[size_t(x)] = s;
        }
      }
    }
    out.values.push_back(std::move(v));
    out.argmax_s.push_back(std::move(arg));
  }
  return out;
}

GridFn build_strict_convex(const GridFn &w, const ActionKernel &folded,
                           double delta, double tau, int M) {
  const auto ladder = strict_ladder(folded, tau, M);
  return weighted_sum(sup_convolution_time(w, folded, delta, ladder).values);
}

GridFn density_mix(const GridFn &v_strict, const GridFn &u, int n) {
  if (n < 1)
    throw ArgumentError("density_mix needs n >= 1");
  if (!(v_strict.grid == u.grid))
    throw ArgumentError("density_mix arguments live on different grids");
  GridFn out(u.grid);
  const double a = 1.0 / n;
  for (int x = 0; x < out.size(); ++x)
    out[x] = a * v_strict[x] + (1.0 - a) * u[x];
  return out;
}

std::vector<int> increase_switch_steps(const GridFn &w,
                                       const ActionKernel &folded,
                                       int max_steps, double eps) {
  const auto seq = lax_minus_sequence(w, folded, max_steps);
  std::vector<int> out(size_t(w.size()), -1);
  for (int x = 0; x < w.size(); ++x) {
    int last = 0;
    for (int m = 1; m <= max_steps; ++m)
      if (seq[size_t(m)][x] - seq[size_t(m - 1)][x] > eps)
        last = m;
    out[size_t(x)] = last == max_steps ? -1 : last;
  }
  return out;
}

} // namespace wkam
