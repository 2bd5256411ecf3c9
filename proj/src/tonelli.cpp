#include "wkam/tonelli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "wkam/error.hpp"

namespace wkam {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Phase {
  Vec2 x, p;
};

Phase field(const Hamiltonian &model, const EnvRealization &env, Phase s) {
  auto d = model.derivatives(s.x, s.p, env);
  return {d->dp, -d->dx};
}

Phase rk4(const Hamiltonian &model, const EnvRealization &env, Phase s,
          double h) {
  auto add = [](Phase a, Phase b, double k) {
    return Phase{a.x + k * b.x, a.p + k * b.p};
  };
  const Phase k1 = field(model, env, s);
  const Phase k2 = field(model, env, add(s, k1, 0.5 * h));
  const Phase k3 = field(model, env, add(s, k2, 0.5 * h));
  const Phase k4 = field(model, env, add(s, k3, h));
  return {s.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          s.p + (h / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p)};
}

} // namespace

Trajectory flow_integrate(const Hamiltonian &model, const EnvRealization &env,
                          FlowState start, double t, double dt) {
  if (!model.flags().tonelli)
    throw RefusalError(model.name() +
                       " is not a Tonelli Hamiltonian; its flow is not used");
  if (!(dt > 0.0))
    throw ArgumentError("flow step must be positive");
  const int steps = static_cast<int>(std::ceil(std::abs(t) / dt - 1e-9));
  const double h = steps > 0 ? t / steps : 0.0;
  Trajectory tr;
  Phase s{start.x, start.p};
  const double e0 = model.H(s.x, s.p, env);
  tr.times.push_back(0.0);
  tr.states.push_back({s.x, s.p, e0});
  for (int k = 1; k <= steps; ++k) {
    s = rk4(model, env, s, h);
    const double e = model.H(s.x, s.p, env);
    tr.times.push_back(k * h);
    tr.states.push_back({s.x, s.p, e});
    tr.max_drift = std::max(tr.max_drift, std::abs(e - e0));
  }
  return tr;
}

CharacteristicReport verify_minimizer_is_characteristic(
    const GridFn &u, const ActionKernel &kernel, int x, double t,
    double flow_dt) {
  const GridSpec &g = u.grid;
  const int m = kernel.steps_for(t);
  std::vector<std::vector<int>> args;
  GridFn cur = u, next(g);
  for (int s = 0; s < m; ++s) {
    std::vector<int> arg(size_t(g.size()));
    kernels::apply(kernel.step(), cur.values.data(), next.values.data(),
                   arg.data());
    args.push_back(std::move(arg));
    std::swap(cur.values, next.values);
  }
  CharacteristicReport rep;
  std::vector<int> idx(size_t(m) + 1);
  idx[size_t(m)] = x;
  for (int k = m; k > 0; --k)
    idx[size_t(k - 1)] = args[size_t(k - 1)][size_t(idx[size_t(k)])];
  rep.chain.assign(size_t(m) + 1, {});
  rep.chain[size_t(m)] = g.point(x);
  for (int k = m; k > 0; --k)
    rep.chain[size_t(k - 1)] =
        rep.chain[size_t(k)] -
        g.displacement(g.point(idx[size_t(k - 1)]), g.point(idx[size_t(k)]));

  rep.terminal_momentum = cur.gradient(x);
  const int sub = std::max(1, static_cast<int>(std::ceil(kernel.dt() / flow_dt)));
  FlowState s{g.point(x), rep.terminal_momentum, 0.0};
  rep.flow.assign(size_t(m) + 1, {});
  rep.flow[size_t(m)] = s.x;
  for (int k = m; k > 0; --k) {
    const auto tr = flow_integrate(*kernel.model(), kernel.env(), s,
                                   -kernel.dt(), kernel.dt() / sub);
    s = tr.states.back();
    rep.flow[size_t(k - 1)] = s.x;
  }
  for (int k = 0; k <= m; ++k)
    rep.max_deviation = std::max(
        rep.max_deviation, norm(rep.flow[size_t(k)] - rep.chain[size_t(k)]));
  return rep;
}

SecondDifferences estimate_semiconcavity(const GridFn &v) {
  const GridSpec &g = v.grid;
  const double h = g.h();
  SecondDifferences r;
  r.K_upper = -kInf;
  r.K_lower = kInf;
  r.unbounded_threshold = 1.0 / h;
  std::vector<std::array<int, 2>> dirs{{1, 0}};
  if (g.dim == 2)
    dirs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (int x = 0; x < g.size(); ++x)
    for (auto d : dirs) {
      const double len2 = (d[0] * d[0] + d[1] * d[1]) * h * h;
      const double q =
          (v[g.shift(x, d[0], d[1])] + v[g.shift(x, -d[0], -d[1])] - 2 * v[x]) /
          len2;
      if (q > r.K_upper) {
        r.K_upper = q;
        r.argmax = x;
      }
      if (q < r.K_lower) {
        r.K_lower = q;
        r.argmin = x;
      }
    }
  return r;
}

double kernel_semiconcavity(const ActionKernel &kernel, double t) {
  const KernelTable &T = kernel.table(kernel.steps_for(t));
  const GridSpec &g = T.stencil.grid;
  const double h = g.h();
  double K = -kInf;
  std::vector<std::array<int, 2>> dirs{{1, 0}};
  if (g.dim == 2)
    dirs = {{1, 0}, {0, 1}};
  for (int x = 0; x < g.size(); ++x)
    for (int k = 0; k < T.count(); ++k) {
      const double c = T.at(x, k);
      if (c == kInf)
        continue;
      const auto d = T.stencil.offset(k);
      for (auto e : dirs) {
        // Same source y = x - d: move the target by +-e, offset by +-e.
        const int kp = T.stencil.index_of(d[0] + e[0], d[1] + e[1]);
        const int km = T.stencil.index_of(d[0] - e[0], d[1] - e[1]);
        if (kp < 0 || km < 0)
          continue;
        if (T.stencil.full &&
            (std::abs(d[0]) >= g.n / 2 - 1 || std::abs(d[1]) >= g.n / 2 - 1))
          continue;
        const double p = T.at(g.shift(x, e[0], e[1]), kp);
        const double q = T.at(g.shift(x, -e[0], -e[1]), km);
        if (p == kInf || q == kInf)
          continue;
        K = std::max(K, (p + q - 2 * c) / (h * h));
      }
    }
  return K;
}

double RegularWindow::contraction_factor() const {
  return (std::exp(ell * t0) - 1.0) * std::sqrt(1.0 + lambda * lambda);
}

RegularWindow regular_window(double kappa0, double lambda,
                             const Hamiltonian &model,
                             const EnvRealization &env) {
  if (!(kappa0 > 0.0) || lambda < 0.0)
    throw ArgumentError("regular_window needs kappa0 > 0 and lambda >= 0");
  RegularWindow w;
  w.kappa0 = kappa0;
  w.lambda = lambda;
  const double top = model.beta(kappa0, env);
  double lo = 0.0, hi = 1.0;
  while (model.alpha(hi, env) <= top) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e9)
      throw NumericError("momentum bound diverges: alpha is not superlinear");
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (model.alpha(mid, env) <= top ? lo : hi) = mid;
  }
  w.rho = lo;
  w.ell = model.flow_lipschitz(w.rho, env);
  w.speed = lipschitz_radius(kappa0, model, env);
  const double root = std::sqrt(1.0 + lambda * lambda);
  for (int k = 0; k < 60; ++k) {
    const double t0 = std::ldexp(1.0, -k);
    if ((std::exp(w.ell * t0) - 1.0) * root < 0.5 && w.ell * t0 < 0.25 &&
        t0 * w.speed < 0.25) {
      w.t0 = t0;
      break;
    }
  }
  if (w.t0 == 0.0)
    throw NumericError("no admissible window time found");
  w.A = 2.0 * std::exp(w.ell * w.t0) * root;
  return w;
}

double contraction_constant(const RegularWindow &window,
                            const Hamiltonian &model,
                            const EnvRealization &env, double t, int n_pairs,
                            std::uint64_t seed, double dt) {
  const int dim = env.spec().dimension;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lam = window.lambda;
  auto dpsi = [&](Vec2 y) {
    const double k = lam / (2.0 * std::numbers::pi);
    return Vec2{k * std::sin(2.0 * std::numbers::pi * y.x),
                dim == 2 ? k * std::sin(2.0 * std::numbers::pi * y.y) : 0.0};
  };
  auto shift = [&](Vec2 y) {
    const auto tr = flow_integrate(model, env, {y, dpsi(y), 0.0}, t, dt);
    return tr.states.back().x - y;
  };
  double worst = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const Vec2 y1{unit(rng), dim == 2 ? unit(rng) : 0.0};
    const Vec2 y2{unit(rng), dim == 2 ? unit(rng) : 0.0};
    const double gap = norm(y1 - y2);
    if (gap < 1e-9)
      continue;
    worst = std::max(worst, norm(shift(y1) - shift(y2)) / gap);
  }
  return worst;
}

bool BernardResult::pass() const {
  return std::all_of(certificates.begin(), certificates.end(),
                     [](const Certificate &c) { return c.pass; });
}

BernardResult bernard_regularize(const GridFn &w, const ActionKernel &folded,
                                 double s, double t, const AubryMask &mask,
                                 double d0) {
  const Hamiltonian &model = *folded.model();
  if (!model.flags().tonelli)
    throw RefusalError(model.name() +
                       " is not a Tonelli Hamiltonian; regularization refused");
  const EnvRealization &env = folded.env();
  BernardResult r;
  try {
    if (!check_strict(w, model, env, mask, d0).pass)
      r.warnings.push_back("input is not certified strict at d0 = " +
                           std::to_string(d0));
  } catch (const ArgumentError &e) {
    r.warnings.push_back(e.what());
  }
  const GridFn up = lax_plus(w, folded, s).value;
  r.value = lax_minus(up, folded, t).value;

  const auto sub = check_subsolution(r.value, model, 0.0, env);
  r.certificates.push_back(
      {"local subsolution test", sub.pass, sub.excess, sub.tolerance});

  const auto up_curv = estimate_semiconcavity(up);
  r.window = regular_window(std::max(w.lipschitz(), 1e-9),
                            std::max(0.0, -up_curv.K_lower), model, env);
  const double Kt = t > 0.0 ? kernel_semiconcavity(folded, t) : 0.0;
  r.curvature = estimate_semiconcavity(r.value);
  const double two_sided =
      std::max(std::abs(r.curvature.K_upper), std::abs(r.curvature.K_lower));
  const double curv_bound = std::max(r.window.A, Kt);
  r.certificates.push_back({"two-sided second difference bound",
                            !r.curvature.upper_unbounded() &&
                                !r.curvature.lower_unbounded() &&
                                two_sided <= curv_bound,
                            two_sided, curv_bound});

  const double dist = sup_norm(r.value - w);
  const double dist_bound = (t + s) * folded.speed_bound();
  r.certificates.push_back(
      {"sup-norm distance to input", dist <= dist_bound, dist, dist_bound});

  double on_mask = 0.0;
  for (int x : mask.points())
    on_mask = std::max(on_mask, std::abs(r.value[x] - w[x]));
  r.certificates.push_back({"agreement on the Aubry mask",
                            on_mask <= mask.threshold, on_mask,
                            mask.threshold});

  try {
    const auto strict = check_strict(r.value, model, env, mask, d0);
    r.certificates.push_back({"strictness off the mask", strict.pass,
                              strict.delta, strict.tolerance});
  } catch (const ArgumentError &e) {
    r.certificates.push_back({"strictness off the mask", false, 0.0, 0.0});
    r.warnings.push_back(e.what());
  }
  return r;
}

EnvelopeReport check_envelope_identity(const GridFn &w,
                                       const ActionKernel &kernel, double t,
                                       double K,
                                       const std::vector<int> &samples) {
  const GridSpec &g = w.grid;
  const LaxResult tw = lax_minus(w, kernel, t);
  EnvelopeReport rep;
  for (int x : samples) {
    const int y = tw.argmin[size_t(x)];
    const Vec2 p = w.gradient(y);
    const Vec2 py = g.point(y);
    GridFn psi(g);
    for (int z = 0; z < g.size(); ++z) {
      const Vec2 d = g.displacement(py, g.point(z));
      psi[z] = w[y] + dot(p, d) - K * dot(d, d);
    }
    const double tp = lax_minus(psi, kernel, t).value[x];
    rep.samples.push_back(x);
    rep.discrepancy.push_back(tw.value[x] - tp);
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(tw.value[x] - tp));
  }
  return rep;
}

} // namespace wkam
