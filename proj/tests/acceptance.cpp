// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wkam/aubry.hpp"
#include "wkam/env.hpp"
#include "wkam/error.hpp"
#include "wkam/hamiltonian.hpp"
#include "wkam/kernels.hpp"
#include "wkam/metric.hpp"
#include "wkam/pipeline.hpp"
#include "wkam/semigroup.hpp"
#include "wkam/subsol.hpp"
#include "wkam/tonelli.hpp"

using namespace wkam;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char *f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

EnvSpec periodic(double amplitude) {
  EnvSpec s;
  s.params["amplitude"] = amplitude;
  return s;
}

EnvSpec random_fourier(std::uint64_t seed) {
  EnvSpec s;
  s.kind = EnvKind::RandomFourier;
  s.seed = seed;
  s.params["freq1"] = 1.0;
  s.params["freq2"] = std::sqrt(2.0);
  s.params["freq3"] = std::sqrt(5.0);
  s.params["amplitude"] = 1.0;
  return s;
}

std::vector<double> dyadic(double dt, double t_max) {
  std::vector<double> out;
  for (double t = dt; t <= t_max * (1 + 1e-12); t *= 2)
    out.push_back(t);
  return out;
}

const GridSpec kLine{1, 256, 1.0};
constexpr double kDt = 1.0 / 64;

// Pendulum stage shared by criteria 6 to 9.
struct Pendulum {
  EnvRealization env = sample_realization(periodic(1.0), 0);
  ModelPtr model = make_mechanical();
  ActionKernel kernel{model, env, kLine, kDt, 2.0};
  double c = kernel_critical_value(kernel);
  ActionKernel folded = kernel.shifted(c);
  GridFn w = build_w(default_library(folded, 8, {}), folded);
  AubryMask mask = detect_aubry(w, folded, dyadic(kDt, 4.0));
};

Pendulum &pendulum() {
  static Pendulum p;
  return p;
}

Outcome free_action() {
  const auto env = sample_realization(periodic(0.0), 0);
  const ActionKernel k(make_mechanical(), env, kLine, kDt, 2.0);
  const double t = 1.0;
  const KernelTable &T = k.table(k.steps_for(t));
  double worst = 0.0;
  for (int y = 0; y < kLine.size(); ++y)
    for (int x = 0; x < kLine.size(); ++x) {
      const double d = kLine.distance(y, x);
      worst = std::max(worst, std::abs(T.weight(y, x) - d * d / (2 * t)));
    }
  return {worst <= 5e-2, fmt("max |h_1 - |x-y|^2/2| = %.3g <= 5e-2", worst)};
}

Outcome pendulum_critical() {
  const auto &p = pendulum();
  const auto cv = critical_value_free(*p.model, p.env, kLine, 0.0, 1e-2);
  const double err = std::abs(cv.value - 1.0);
  return {err <= 2e-2 && cv.hi - cv.lo <= 1e-2,
          fmt("c = %.6f in [%.6f, %.6f], |c - 1| = %.3g <= 2e-2, kernel c = "
              "%.6f",
              cv.value, cv.lo, cv.hi, err, p.c)};
}

Outcome aubry_detection() {
  const auto &p = pendulum();
  bool ok = true;
  std::string d = "pendulum cells";
  for (const auto &m : threshold_sweep(p.mask)) {
    const double spread = m.count() ? m.spread_from({0}) : 1e9;
    ok = ok && m.count() > 0 && spread <= 1.0;
    d += fmt(" %d(spread %.0f)", m.count(), spread);
  }

  // Eikonal H = |p| - f with f = 1.5 + cos(2 pi (x + 3/16)), argmin 5/16.
  // Time step h keeps every jump within one cell.
  EnvSpec eik = periodic(1.0);
  eik.params["offset"] = 1.5;
  eik.params["shift"] = 0.1875;
  const auto env = sample_realization(eik, 0);
  const double dt = kLine.h();
  const ActionKernel k(make_eikonal(), env, kLine, dt, 2.0);
  const ActionKernel f = k.shifted(kernel_critical_value(k));
  const GridFn we = build_w(default_library(f, 8, {}), f);
  const AubryMask me = detect_aubry(we, f, dyadic(dt, 4.0));
  const int star = kLine.index(80);
  for (const auto &m : threshold_sweep(me)) {
    const double spread = m.count() ? m.spread_from({star}) : 1e9;
    ok = ok && m.count() > 0 && spread <= 1.0;
    d += fmt("; eikonal %d(spread %.0f)", m.count(), spread);
  }

  const auto flat = sample_realization(periodic(0.0), 0);
  const ActionKernel kf(make_mechanical(), flat, kLine, kDt, 2.0);
  const ActionKernel ff = kf.shifted(kernel_critical_value(kf));
  const GridFn wf = build_w(default_library(ff, 8, {}), ff);
  const AubryMask mf = detect_aubry(wf, ff, dyadic(kDt, 4.0));
  ok = ok && mf.count() == kLine.size();
  d += fmt("; flat %d/%d", mf.count(), kLine.size());
  return {ok, d};
}

Outcome semigroup_laws() {
  const auto &p = pendulum();
  const auto ladder = dyadic(kDt, 4.0);
  std::vector<std::pair<std::string, GridFn>> subs;
  subs.push_back({"w", p.w});
  const auto fwd = kernel_semidistance(p.folded, {64});
  subs.push_back({"forward cone", fwd.from(64)});
  const auto bwd = kernel_semidistance_to(p.folded, {192});
  subs.push_back({"backward cone", -bwd.from(192)});
  subs.push_back({"evolved cone", lax_minus(fwd.from(64), p.folded, 1.0).value});
  subs.push_back({"strict", build_strict_strictly_convex(p.w, p.folded, 0.1, 6)});
  bool ok = true;
  std::string d = "monotonicity";
  for (auto &[name, u] : subs) {
    u = u + (-u[0]);
    const auto r = check_monotone_semigroup(u, p.kernel, p.c, ladder);
    ok = ok && r.pass;
    d += fmt(" %s %.2g/%.2g", name.c_str(), r.worst, r.tolerance);
  }
  // Viscosity solution at c = 1: u' = 2 sin(pi x) on [0, 1/2], mirrored.
  const GridFn u = GridFn::sample(kLine, [](Vec2 x) {
    const double s = x.x <= 0.5 ? x.x : 1.0 - x.x;
    return 2.0 / M_PI * (1.0 - std::cos(M_PI * s));
  });
  const auto r = check_corrector(u, p.kernel, 1.0, ladder);
  ok = ok && r.pass;
  d += fmt("; corrector residual %.3g <= %.3g (3h max(1, Lip u))", r.worst,
           r.tolerance);
  return {ok, d};
}

Outcome metric_consistency() {
  const auto &p = pendulum();
  const double c = 1.0;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> cell(0, kLine.size() - 1);
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> sources;
  for (int i = 0; i < 50; ++i) {
    pairs.push_back({cell(rng), cell(rng)});
    sources.push_back(pairs.back().first);
  }
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  const auto S = semidistance(*p.model, c, sources, p.env, kLine, 0.0);

  // inf over t of h_t + c t, t = m dt for m up to 8 / dt.
  const int steps = static_cast<int>(std::lround(8.0 / kDt));
  std::map<int, std::vector<double>> best;
  for (int y : sources) {
    std::vector<double> cur(size_t(kLine.size()), INFINITY), next(cur.size());
    std::vector<double> b(cur.size(), INFINITY);
    cur[size_t(y)] = 0.0;
    for (int m = 1; m <= steps; ++m) {
      kernels::apply(p.kernel.step(), cur.data(), next.data(), nullptr);
      std::swap(cur, next);
      for (size_t x = 0; x < b.size(); ++x)
        b[x] = std::min(b[x], cur[x] + c * m * kDt);
    }
    best[y] = std::move(b);
  }
  const double kappa = std::sqrt(2.0 * (c + 1.0));
  const double tol = kDt * (c + 1.0) + 2.0 * kLine.h() * kappa;
  double worst = 0.0;
  for (auto [y, x] : pairs)
    worst = std::max(worst, std::abs(S(y, x) - best[y][size_t(x)]));

  double triangle = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int a = sources[size_t(i) % sources.size()];
    const int b = sources[size_t(i * 7 + 3) % sources.size()];
    const int x = cell(rng);
    triangle = std::max(triangle, S(a, x) - S(a, b) - S(b, x));
  }
  return {worst <= tol && triangle <= 1e-12,
          fmt("max |S_c - inf(h_t + ct)| = %.3g <= %.3g (dt(c - min V) + "
              "2h kappa); triangle excess %.3g <= 1e-12",
              worst, tol, triangle)};
}

Outcome strictness_pipeline() {
  const auto &p = pendulum();
  const double tau = 0.1, delta = 0.05;
  const int M = 6;
  const double trunc = 1.0 + std::ldexp(1.0, -M);
  auto on_mask = [](const GridFn &a, const GridFn &b, const AubryMask &m) {
    double e = 0.0;
    for (int x : m.points())
      e = std::max(e, std::abs(a[x] - b[x]));
    return e;
  };

  const GridFn we = build_strict_strictly_convex(p.w, p.folded, tau, M);
  const double R = p.folded.speed_bound();
  const double dist = sup_distance(we, p.w), bound = tau * R * trunc;
  const double eq = on_mask(we, p.w, p.mask);
  const auto cert = check_strict(we, *p.folded.model(), p.env, p.mask, 0.1);
  bool ok = dist <= bound && eq <= p.mask.threshold && cert.pass &&
            cert.delta > 0;
  std::string d = fmt("pendulum |we - w| %.3g <= %.3g, mask %.2g <= %.2g, "
                      "delta %.3g",
                      dist, bound, eq, p.mask.threshold, cert.delta);

  const auto env = p.env;
  const ActionKernel k(make_nonstrict(), env, kLine, kDt, 2.0);
  const ActionKernel f = k.shifted(kernel_critical_value(k));
  const GridFn w = build_w(default_library(f, 8, {}), f);
  const AubryMask m = detect_aubry(w, f, dyadic(kDt, 4.0));
  const GridFn wc = build_strict_convex(w, f, delta, tau, M);
  const double Rn = f.speed_bound();
  const double dn = sup_distance(wc, w);
  const double bn = Rn * (tau + 2 * delta * Rn) * trunc;
  const double eqn = on_mask(wc, w, m);
  const auto cn = check_strict(wc, *f.model(), env, m, 0.1);
  ok = ok && dn <= bn && eqn <= m.threshold && cn.pass && cn.delta > 0;
  d += fmt("; nonstrict (sup-convolution) |wc - w| %.3g <= %.3g, mask %.2g "
           "<= %.2g, delta %.3g",
           dn, bn, eqn, m.threshold, cn.delta);
  return {ok, d};
}

BernardResult &bernard() {
  static BernardResult b = [] {
    const auto &p = pendulum();
    const GridFn we = build_strict_strictly_convex(p.w, p.folded, 0.1, 6);
    return bernard_regularize(we, p.folded, 0.25, 1.0 / 32, p.mask, 0.1);
  }();
  return b;
}

Outcome bernard_criterion() {
  const auto &p = pendulum();
  const auto &b = bernard();
  const double Kt = kernel_semiconcavity(p.folded, 1.0 / 32);
  const double two =
      std::max(std::abs(b.curvature.K_upper), std::abs(b.curvature.K_lower));
  const double assembled = std::max(b.window.A, Kt);
  const auto &dist = b.certificates[2];
  std::string d;
  for (const auto &c : b.certificates)
    d += fmt("%s %s; ", c.name.c_str(), c.pass ? "ok" : "FAILED");
  d += fmt("|D2| %.4g <= max(A %.4g, K_t %.4g); sup-norm %.3g <= (t+s)R %.3g",
           two, b.window.A, Kt, dist.value, dist.bound);
  return {b.pass() && std::isfinite(two) && two <= assembled &&
              dist.value <= dist.bound,
          d};
}

Outcome contraction_window() {
  const auto &p = pendulum();
  const auto &win = bernard().window;
  const double k =
      contraction_constant(win, *p.model, p.env, win.t0, 100, 5, 1e-4);
  const auto tr =
      flow_integrate(*p.model, p.env, {{0.3, 0.0}, {1.2, 0.0}, 0.0}, 10.0, 1e-3);
  return {k <= 0.5 && tr.max_drift <= 1e-6,
          fmt("Lip(R_t0 - I) = %.3g <= 0.5 at t0 = %.3g; energy drift %.3g "
              "<= 1e-6",
              k, win.t0, tr.max_drift)};
}

Outcome aubry_rigidity() {
  const auto &p = pendulum();
  // Subsolutions at the analytic critical level from the metric graph.
  const double c = 1.0;
  const int y1 = 64, y2 = 192;
  const auto S = semidistance(*p.model, c, {y1}, p.env, kLine, 0.0);
  const auto Sr =
      semidistance(*reversed(p.model), c, {y2}, p.env, kLine, 0.0);
  std::vector<std::pair<std::string, GridFn>> subs{
      {"w", p.w}, {"S(y1,.)", S.from(y1)}, {"-S(.,y2)", -Sr.from(y2)}};
  bool ok = true;
  std::string d = "certified:";
  for (const auto &[name, u] : subs) {
    const auto r = check_subsolution(u, *p.model, c, p.env);
    ok = ok && r.pass;
    d += fmt(" %s %s", name.c_str(), r.pass ? "ok" : "FAILED");
  }
  double spread = 0.0;
  for (int x : p.mask.points())
    for (const auto &a : subs)
      for (const auto &b : subs)
        spread = std::max(spread, norm(a.second.gradient(x) - b.second.gradient(x)));
  const double tol = 4.0 * kLine.h();
  ok = ok && spread <= tol;
  d += fmt("; gradient spread on mask %.3g <= 4h %.3g", spread, tol);

  // Lift the mask with the gradient of the metric cone, the most accurate
  // of the three, and follow the flow for |t| <= 1.
  double drift = 0.0;
  for (int x : p.mask.points())
    for (double t : {-1.0, 1.0}) {
      const Vec2 pt = kLine.point(x);
      const auto tr = flow_integrate(*p.model, p.env,
                                     {pt, subs[1].second.gradient(x), 0.0}, t,
                                     1e-3);
      for (const auto &st : tr.states) {
        double to_mask = 1e9;
        for (int z : p.mask.points())
          to_mask = std::min(to_mask, kLine.distance(st.x, kLine.point(z)));
        drift = std::max(drift, to_mask / kLine.h());
      }
    }
  ok = ok && drift <= 2.0;
  d += fmt("; lifted-mask flow stays within %.3g cells <= 2", drift);
  return {ok, d};
}

Outcome density() {
  const EnvSpec spec = random_fourier(3);
  const GridSpec grid{1, 128, 1.0};
  struct Pair {
    GridFn u, v;
  };
  std::map<std::uint64_t, Pair> cache;
  auto stage = [&](const EnvRealization &env) -> Pair & {
    auto it = cache.find(env.index());
    if (it != cache.end())
      return it->second;
    const ActionKernel k(make_mechanical(), env, grid, kDt, 2.0);
    const ActionKernel f = k.shifted(kernel_critical_value(k));
    GridFn u = build_w(default_library(f, 4, {}), f);
    GridFn v = build_strict_strictly_convex(u, f, 0.1, 6);
    return cache[env.index()] = {std::move(u), std::move(v)};
  };
  const int samples = 32;
  for (int i = 0; i < samples; ++i)
    stage(sample_realization(spec, std::uint64_t(i)));
  double dmax = 0.0;
  for (const auto &[i, pr] : cache)
    dmax = std::max(dmax, sup_distance(pr.u, pr.v));
  // metric_d <= sup|v - u| / n, so n* = ceil(D / 1e-2) suffices.
  const int nstar = std::max(1, static_cast<int>(std::ceil(dmax / 1e-2)));
  std::vector<int> ns;
  for (int n = 1; n < nstar; n *= 2)
    ns.push_back(n);
  ns.push_back(nstar);
  std::vector<double> ky;
  for (int n : ns)
    ky.push_back(ky_fan_distance(
        spec,
        [&](const EnvRealization &e) {
          const auto &pr = stage(e);
          return density_mix(pr.v, pr.u, n);
        },
        [&](const EnvRealization &e) { return stage(e).u; }, samples));
  bool dec = true;
  for (size_t i = 1; i < ky.size(); ++i)
    dec = dec && ky[i] <= ky[i - 1];
  std::string d = fmt("D = %.3g, n* = %d, Ky Fan:", dmax, nstar);
  for (size_t i = 0; i < ky.size(); ++i)
    d += fmt(" n=%d %.3g", ns[i], ky[i]);
  return {dec && ky.back() < 1e-2, d};
}

Outcome concentration() {
  const EnvSpec spec = random_fourier(5);
  const double tol = 1e-3;
  const auto est = critical_value_stationary(*make_mechanical(), spec, 8,
                                             {1.0, 4.0, 16.0}, 64, tol);
  bool ok = est.spreads.size() == 3;
  const double noise = 2.0 * tol;
  for (size_t i = 1; ok && i < est.spreads.size(); ++i)
    ok = est.spreads[i] <= est.spreads[i - 1] + noise;
  std::string d = "spread by box:";
  for (size_t i = 0; i < est.spreads.size(); ++i)
    d += fmt(" L=%g %.4g (mean %.4f)", est.box_lengths[i], est.spreads[i],
             est.means[i]);
  d += fmt("; noise allowance %.3g", noise);
  return {ok, d};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "wkam_acceptance";
  fs::remove_all(dir);
  Config cfg = parse_config("[environment]\nkind = Periodic\namplitude = 1\n"
                            "[grid]\nn = 128\n");
  RunOptions o;
  o.out_dir = (dir / "first").string();
  cmd_verify(cfg, o);
  const std::string manifest = (dir / "first" / "manifest_verify.json").string();
  std::string reports[2], manifests[2];
  for (int i = 0; i < 2; ++i) {
    RunOptions oi;
    oi.out_dir = (dir / ("run" + std::to_string(i))).string();
    const auto r = cmd_verify(load_config(manifest), oi);
    reports[i] = format_report(r);
    std::ifstream in(fs::path(oi.out_dir) / "manifest_verify.json");
    std::stringstream ss;
    ss << in.rdbuf();
    manifests[i] = ss.str();
  }
  const bool same = reports[0] == reports[1] && manifests[0] == manifests[1];
  return {same && !reports[0].empty(),
          fmt("two verify runs from one manifest: reports %s, manifests %s",
              reports[0] == reports[1] ? "identical" : "differ",
              manifests[0] == manifests[1] ? "identical" : "differ")};
}

} // namespace

int main() {
  struct Criterion {
    const char *name;
    double budget; // seconds
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"free-action oracle", 30, free_action},
      {"pendulum critical value", 120, pendulum_critical},
      {"Aubry detection", 120, aubry_detection},
      {"semigroup laws", 60, semigroup_laws},
      {"metric consistency", 60, metric_consistency},
      {"strictness pipeline", 180, strictness_pipeline},
      {"Bernard regularization", 180, bernard_criterion},
      {"contraction window", 60, contraction_window},
      {"Aubry rigidity", 60, aubry_rigidity},
      {"density", 120, density},
      {"stationary concentration", 600, concentration},
      {"determinism", 300, determinism},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const bool pass = o.pass && secs <= criteria[i].budget;
    failed += !pass;
    std::printf("%s %2zu %s: %s [%.1fs / %.0fs]\n", pass ? "PASS" : "FAIL",
                i + 1, criteria[i].name, o.detail.c_str(), secs,
                criteria[i].budget);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
