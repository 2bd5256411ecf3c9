#include "wkam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

#include "wkam/aubry.hpp"
#include "wkam/error.hpp"
#include "wkam/hamiltonian.hpp"
#include "wkam/kernels.hpp"
#include "wkam/metric.hpp"
#include "wkam/semigroup.hpp"
#include "wkam/subsol.hpp"
#include "wkam/tonelli.hpp"

namespace wkam {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Check bounded(std::string statement, double value, double bound,
              std::string detail = {}) {
  return {std::move(statement), std::isfinite(value) && value <= bound, value,
          bound, std::move(detail)};
}

struct Stage {
  Config cfg;
  EnvRealization env;
  ModelPtr model;
  GridSpec grid;
  std::optional<ActionKernel> kernel;
  std::optional<ActionKernel> folded;
  double c = 0.0;
  double tau = 0.0; // strict builder window, possibly shrunk to meet epsilon
  GridFn w;
  AubryMask mask;
};

Stage base_stage(const Config &cfg) {
  cfg.validate();
  Stage s;
  s.cfg = cfg;
  s.env = sample_realization(cfg.env, cfg.realization);
  s.model = make_model(cfg.model, cfg.model_params);
  s.grid = cfg.grid;
  s.grid.dim = cfg.env.dimension;
  s.tau = cfg.tol.tau;
  return s;
}

void build_kernel_stage(Stage &s) {
  s.kernel.emplace(s.model, s.env, s.grid, s.cfg.dt, s.cfg.theta);
}

std::string cache_path(const RunOptions &o) {
  return (fs::path(o.out_dir) / "critical.json").string();
}

// Kernel critical value from the cache written by cmd_critical, or computed
// when allowed.
double critical_from_cache(Stage &s, const RunOptions &o, CommandResult &r) {
  const std::string hash = config_hash(s.cfg);
  std::ifstream in(cache_path(o));
  if (in) {
    try {
      const auto j = nlohmann::json::parse(in);
      if (j.at("config_hash").get<std::string>() == hash)
        return j.at("c_kernel").get<double>();
      r.warnings.push_back("cached critical value belongs to config " +
                           j.at("config_hash").get<std::string>());
    } catch (const nlohmann::json::exception &) {
      r.warnings.push_back("unreadable critical value cache ignored");
    }
  }
  if (!o.compute_c)
    throw ConfigError("no cached critical value for config " + hash + " in " +
                      o.out_dir +
                      "; run 'wkam critical' with this config first or pass "
                      "--compute-c");
  return kernel_critical_value(*s.kernel);
}

void aubry_stage(Stage &s) {
  s.folded.emplace(s.kernel->shifted(s.c));
  const auto library = default_library(*s.folded, s.cfg.tol.seeds, {});
  s.w = build_w(library, *s.folded);
  s.mask = detect_aubry(s.w, *s.folded, s.cfg.ladder(), s.cfg.tol.eps_aubry);
}

void ensure_dir(const RunOptions &o) {
  if (o.write_files)
    fs::create_directories(o.out_dir);
}

void emit(CommandResult &r, const RunOptions &o, const std::string &name,
          const std::function<void(const std::string &)> &writer) {
  if (!o.write_files)
    return;
  const std::string path = (fs::path(o.out_dir) / name).string();
  writer(path);
  r.outputs.push_back(name);
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open " + path + " for writing");
  out << text;
}

std::string coords(const GridSpec &g, int i) {
  const Vec2 p = g.point(i);
  char buf[64];
  if (g.dim == 1)
    std::snprintf(buf, sizeof buf, "%.10g", p.x);
  else
    std::snprintf(buf, sizeof buf, "%.10g,%.10g", p.x, p.y);
  return buf;
}

void write_masks(const std::string &path, const AubryMask &mask,
                 const std::string &hash) {
  const auto sweep = threshold_sweep(mask);
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open " + path + " for writing");
  const GridSpec &g = mask.grid;
  out << "# grid dim=" << g.dim << " n=" << g.n << " length=" << full(g.length)
      << "\n# statement: Aubry set as the common fixed points of the negative "
         "semigroup on w; config "
      << hash << "; thresholds " << full(sweep[0].threshold) << ' '
      << full(sweep[1].threshold) << ' ' << full(sweep[2].threshold) << "\n";
  out << (g.dim == 1 ? "index,x," : "index,x,y,")
      << "residual,in_half,in_base,in_double\n";
  for (int i = 0; i < g.size(); ++i)
    out << i << ',' << coords(g, i) << ',' << full(mask.residual[size_t(i)])
        << ',' << int(sweep[0].contains(i)) << ',' << int(sweep[1].contains(i))
        << ',' << int(sweep[2].contains(i)) << '\n';
}

void finish(CommandResult &r, const Config &cfg, const RunOptions &o) {
  emit(r, o, r.command + "_report.txt",
       [&](const std::string &p) { write_text(p, format_report(r)); });
  if (o.write_files) {
    const std::string name = "manifest_" + r.command + ".json";
    r.outputs.push_back(name);
    write_text((fs::path(o.out_dir) / name).string(),
               run_manifest(cfg, r).dump(2) + "\n");
  }
}

// Checks on the Aubry stage shared by cmd_aubry and cmd_verify.
void aubry_checks(const Stage &s, CommandResult &r) {
  const ActionKernel &f = *s.folded;
  const auto ladder = s.cfg.ladder();
  const auto mono =
      check_monotone_semigroup(s.w, f, 0.0, ladder, s.cfg.tol.tol_sub);
  r.checks.push_back(bounded(
      "semigroup monotonicity of the critical subsolution w", mono.worst,
      mono.tolerance));
  r.checks.push_back({"Aubry set is nonempty", s.mask.count() > 0,
                      double(s.mask.count()), 1.0,
                      "PASS iff the mask has at least one cell"});
  double fixed = 0.0;
  const auto pts = s.mask.points();
  for (double t : ladder) {
    const GridFn up = lax_plus(s.w, f, t).value;
    for (int x : pts)
      fixed = std::max(fixed, std::abs(up[x] - s.w[x]));
  }
  r.checks.push_back(bounded("positive semigroup fixes w on the Aubry set",
                             fixed, s.mask.threshold));
}

double strict_bound(const Stage &s, bool strictly_convex, double tau) {
  const double R = s.folded->speed_bound();
  const double main = strictly_convex
                          ? tau * R
                          : R * (tau + 2.0 * s.cfg.tol.delta * R);
  return main * (1.0 + std::ldexp(1.0, -s.cfg.tol.terms));
}

// With an epsilon target the window shrinks by ladder steps until the budget
// fits; one step is the smallest achievable window.
GridFn strict_stage(Stage &s, CommandResult &r) {
  const bool sc = s.model->flags().strictly_convex;
  if (s.cfg.tol.epsilon) {
    const double eps = *s.cfg.tol.epsilon;
    const double dt = s.folded->dt();
    while (strict_bound(s, sc, s.tau) > eps && s.tau > dt)
      s.tau = std::max(dt, s.tau - dt);
    const double bound = strict_bound(s, sc, s.tau);
    if (bound > eps) {
      const double R = s.folded->speed_bound();
      const double conv = sc ? 0.0 : 2.0 * s.cfg.tol.delta * R * R;
      throw RefusalError(
          "epsilon " + num(eps) + " is below the achievable budget " +
          num(bound) + " = one-step window " + num(s.tau * R) + " (tau R)" +
          (sc ? "" : " + sup-convolution " + num(conv) + " (2 delta R^2)") +
          " + truncation " + num(bound - s.tau * R - conv) + " (2^-M share)");
    }
  }
  r.summary["strict_branch"] = sc ? "strictly convex" : "sup-convolution";
  r.summary["tau"] = s.tau;
  return sc ? build_strict_strictly_convex(s.w, *s.folded, s.tau,
                                           s.cfg.tol.terms)
            : build_strict_convex(s.w, *s.folded, s.cfg.tol.delta, s.tau,
                                  s.cfg.tol.terms);
}

void strict_checks(const Stage &s, const GridFn &we, CommandResult &r) {
  const auto cert = check_strict(we, *s.folded->model(), s.env, s.mask,
                                 s.cfg.tol.d0);
  r.checks.push_back({"strict subsolution away from the Aubry set", cert.pass,
                      cert.delta, cert.tolerance,
                      "PASS iff delta > tolerance on " +
                          std::to_string(cert.region_size) + " cells"});
  const bool sc = s.model->flags().strictly_convex;
  r.checks.push_back(bounded("strict subsolution stays close to w",
                             sup_distance(we, s.w),
                             strict_bound(s, sc, s.tau)));
  double on_mask = 0.0;
  for (int x : s.mask.points())
    on_mask = std::max(on_mask, std::abs(we[x] - s.w[x]));
  r.checks.push_back(bounded("strict subsolution equals w on the Aubry set",
                             on_mask, s.mask.threshold));
  const auto sub = check_subsolution(we, *s.folded->model(), 0.0, s.env,
                                     s.cfg.tol.tol_sub);
  r.checks.push_back(bounded("strict subsolution is a critical subsolution",
                             sub.excess, sub.tolerance));
}

void require_tonelli(const Hamiltonian &model) {
  if (!model.flags().tonelli)
    throw RefusalError(
        model.name() +
        " does not meet the Tonelli conditions (C^2, strictly convex and "
        "superlinear in p, Lipschitz Hamiltonian flow); regularization refused");
}

BernardResult regularize_stage(const Stage &s, const GridFn &we,
                               CommandResult &r) {
  auto b = bernard_regularize(we, *s.folded, s.cfg.tol.reg_s, s.cfg.tol.reg_t,
                              s.mask, s.cfg.tol.d0);
  const char *names[] = {
      "regularized function is a critical subsolution",
      "regularized function has bounded second differences",
      "regularized function stays within (t+s)R of w",
      "regularized function equals w on the Aubry set",
      "regularized function is strict away from the Aubry set"};
  for (size_t i = 0; i < b.certificates.size(); ++i) {
    const auto &c = b.certificates[i];
    r.checks.push_back({names[i], c.pass, c.value, c.bound, c.name});
  }
  for (const auto &w : b.warnings)
    r.warnings.push_back(w);
  r.summary["window"] = {{"kappa0", b.window.kappa0},
                         {"lambda", b.window.lambda},
                         {"rho", b.window.rho},
                         {"ell", b.window.ell},
                         {"t0", b.window.t0},
                         {"A", b.window.A}};
  return b;
}

} // namespace

bool CommandResult::pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check &c) { return c.pass; });
}

int exit_code_for(const std::exception &error) {
  if (dynamic_cast<const NumericError *>(&error) ||
      dynamic_cast<const SubcriticalError *>(&error))
    return 3;
  if (dynamic_cast<const ConfigError *>(&error) ||
      dynamic_cast<const ArgumentError *>(&error) ||
      dynamic_cast<const RefusalError *>(&error))
    return 2;
  return 3;
}

std::string format_report(const CommandResult &r) {
  std::string out = "# wkam " + r.command + "\n# config " + r.config_hash + "\n";
  for (const auto &c : r.checks) {
    out += (c.pass ? "PASS  " : "FAIL  ") + c.statement + "  value=" +
           num(c.value) + " bound=" + num(c.bound);
    if (!c.detail.empty())
      out += "  (" + c.detail + ")";
    out += "\n";
  }
  for (const auto &w : r.warnings)
    out += "warning: " + w + "\n";
  const auto passed = std::count_if(r.checks.begin(), r.checks.end(),
                                    [](const Check &c) { return c.pass; });
  out += "# " + std::to_string(passed) + "/" +
         std::to_string(r.checks.size()) + " passed\n";
  return out;
}

nlohmann::json report_json(const CommandResult &r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto &c : r.checks)
    checks.push_back({{"statement", c.statement},
                      {"pass", c.pass},
                      {"value", c.value},
                      {"bound", c.bound},
                      {"detail", c.detail}});
  return {{"command", r.command},
          {"config_hash", r.config_hash},
          {"pass", r.pass()},
          {"checks", checks},
          {"summary", r.summary},
          {"warnings", r.warnings}};
}

nlohmann::json run_manifest(const Config &config, const CommandResult &r) {
  auto j = report_json(r);
  const auto cj = to_json(config);
  j["seed"] = config.env.seed;
  j["realization"] = config.realization;
  j["grid"] = {{"dim", config.env.dimension},
               {"n", config.grid.n},
               {"length", config.grid.length}};
  j["ladder"] = config.ladder();
  j["tolerances"] = cj.at("tolerances");
  j["outputs"] = r.outputs;
  j["config"] = cj;
  return j;
}

CommandResult cmd_critical(const Config &config, const RunOptions &o) {
  Stage s = base_stage(config);
  CommandResult r;
  r.command = "critical";
  r.config_hash = config_hash(config);
  const auto cf = critical_value_free(*s.model, s.env, s.grid,
                                      config.tol.neighborhood_radius,
                                      config.tol.bisection);
  build_kernel_stage(s);
  std::vector<int> cycle;
  const double ck = kernel_critical_value(*s.kernel, &cycle);
  r.summary = {{"c", cf.value},     {"lo", cf.lo},
               {"hi", cf.hi},       {"iterations", cf.iterations},
               {"c_kernel", ck}};
  r.checks.push_back(bounded("critical value bracket width", cf.hi - cf.lo,
                             config.tol.bisection));
  r.checks.push_back({"negative cycle certifies the lower end",
                      !cf.certificate.empty(),
                      double(cf.certificate.size()), 2.0,
                      "PASS iff a cycle was found below the bracket"});
  const double grid_tol = config.tol.bisection + 4.0 * s.grid.h();
  r.checks.push_back(bounded(
      "metric and action-kernel critical values agree",
      std::abs(ck - cf.value), grid_tol,
      "bound is bracket width plus 4h"));
  ensure_dir(o);
  emit(r, o, "critical.json", [&](const std::string &p) {
    nlohmann::json j = r.summary;
    j["config_hash"] = r.config_hash;
    write_text(p, j.dump(2) + "\n");
  });
  emit(r, o, "critical_cycle.txt", [&](const std::string &p) {
    write_text(p, "# statement: a negative cycle below the critical value "
                  "rules out subsolutions\n# level " +
                      full(cf.lo) + "\n" +
                      format_cycle(s.grid, cf.certificate));
  });
  finish(r, config, o);
  return r;
}

CommandResult cmd_aubry(const Config &config, const RunOptions &o) {
  Stage s = base_stage(config);
  CommandResult r;
  r.command = "aubry";
  r.config_hash = config_hash(config);
  build_kernel_stage(s);
  s.c = critical_from_cache(s, o, r);
  aubry_stage(s);
  aubry_checks(s, r);
  for (const auto &w : s.mask.warnings)
    r.warnings.push_back(w);
  nlohmann::json counts = nlohmann::json::array();
  for (const auto &m : threshold_sweep(s.mask))
    counts.push_back({{"threshold", m.threshold}, {"cells", m.count()}});
  r.summary = {{"c_kernel", s.c}, {"masks", counts}};
  ensure_dir(o);
  emit(r, o, "w.csv", [&](const std::string &p) {
    write_csv(p, s.w,
              "statement: critical subsolution assembled from semidistance "
              "cones; config " +
                  r.config_hash);
  });
  emit(r, o, "aubry_mask.csv", [&](const std::string &p) {
    write_masks(p, s.mask, r.config_hash);
  });
  finish(r, config, o);
  return r;
}

CommandResult cmd_strict(const Config &config, const RunOptions &o) {
  Stage s = base_stage(config);
  CommandResult r;
  r.command = "strict";
  r.config_hash = config_hash(config);
  build_kernel_stage(s);
  s.c = critical_from_cache(s, o, r);
  aubry_stage(s);
  const GridFn we = strict_stage(s, r);
  strict_checks(s, we, r);
  r.summary["c_kernel"] = s.c;
  r.summary["speed_bound"] = s.folded->speed_bound();
  ensure_dir(o);
  emit(r, o, "w_strict.csv", [&](const std::string &p) {
    write_csv(p, we,
              "statement: strict critical subsolution away from the Aubry "
              "set; config " +
                  r.config_hash);
  });
  finish(r, config, o);
  return r;
}

CommandResult cmd_regularize(const Config &config, const RunOptions &o) {
  Stage s = base_stage(config);
  require_tonelli(*s.model);
  CommandResult r;
  r.command = "regularize";
  r.config_hash = config_hash(config);
  build_kernel_stage(s);
  s.c = critical_from_cache(s, o, r);
  aubry_stage(s);
  const GridFn we = strict_stage(s, r);
  const auto b = regularize_stage(s, we, r);
  r.summary["c_kernel"] = s.c;
  ensure_dir(o);
  emit(r, o, "w_regularized.csv", [&](const std::string &p) {
    write_csv(p, b.value,
              "statement: C^{1,1} strict critical subsolution by "
              "Lax-Oleinik regularization; config " +
                  r.config_hash);
  });
  finish(r, config, o);
  return r;
}

CommandResult cmd_verify(const Config &config, const RunOptions &o) {
  Stage s = base_stage(config);
  CommandResult r;
  r.command = "verify";
  r.config_hash = config_hash(config);
  const GridSpec &g = s.grid;
  const int dim = g.dim;

  // Environment: the translation action.
  {
    double worst = 0.0;
    const Vec2 z{0.3125, dim == 2 ? 0.171875 : 0.0};
    const auto moved = s.env.translate(z);
    for (int i = 0; i < g.size(); i += std::max(1, g.size() / 64)) {
      const Vec2 x = g.point(i);
      worst = std::max(worst, std::abs(moved.value(x) - s.env.value(x + z)));
    }
    r.checks.push_back(
        bounded("translation action on the environment", worst, 1e-12));
  }

  // Hamiltonian: Fenchel inequality and the numeric Legendre transform.
  {
    double fenchel = 0.0;
    for (int i = 0; i < 8; ++i)
      for (double q = -2.0; q <= 2.0; q += 0.25)
        for (double p = -3.0; p <= 3.0; p += 0.25) {
          const Vec2 x = g.point(i * g.size() / 8);
          const Vec2 qv{q, dim == 2 ? 0.5 * q : 0.0};
          const Vec2 pv{p, dim == 2 ? -0.25 * p : 0.0};
          const double gap = s.model->L(x, qv, s.env) +
                             s.model->H(x, pv, s.env) - dot(pv, qv);
          fenchel = std::max(fenchel, -gap);
        }
    r.checks.push_back(
        bounded("Fenchel inequality L + H >= <p, q>", fenchel, 1e-9));
    if (s.model->flags().tonelli) {
      double worst = 0.0;
      for (double q : {-0.7, 0.2, 0.9}) {
        const Vec2 x = g.point(g.size() / 3);
        const Vec2 qv{q, 0.0};
        worst = std::max(worst,
                         std::abs(legendre(*s.model, x, qv, s.env, 4.0, 401) -
                                  s.model->L(x, qv, s.env)));
      }
      r.checks.push_back(bounded(
          "numeric Legendre transform matches the closed form", worst, 1e-6));
    }
  }

  // Kernels: semigroup law and serial/parallel agreement.
  build_kernel_stage(s);
  {
    const ActionKernel &k = *s.kernel;
    const KernelTable lhs = kernels::compose(k.table(1), k.table(3));
    const KernelTable &rhs = k.table(4);
    double worst = 0.0;
    for (int y = 0; y < g.size(); ++y)
      for (int x = 0; x < g.size(); ++x) {
        const double a = lhs.weight(y, x), b = rhs.weight(y, x);
        if (std::isinf(a) != std::isinf(b))
          worst = INFINITY;
        else if (std::isfinite(a))
          worst = std::max(worst, std::abs(a - b) / (1.0 + std::abs(b)));
      }
    r.checks.push_back(bounded("min-plus semigroup law h_{s+t} = h_s * h_t",
                               worst, 1e-12));
    const auto ser = kernels::compose_serial(k.table(2), k.table(2));
    const auto par = kernels::compose_omp(k.table(2), k.table(2));
    double diff = ser.values == par.values ? 0.0 : 1.0;
    r.checks.push_back(bounded("serial and OpenMP kernels agree bitwise", diff,
                               0.0));
  }

  // Metric: critical value and the triangle inequality.
  std::vector<int> cycle;
  s.c = kernel_critical_value(*s.kernel, &cycle);
  {
    const auto cf = critical_value_free(*s.model, s.env, g,
                                        config.tol.neighborhood_radius,
                                        config.tol.bisection);
    r.summary["c"] = cf.value;
    r.summary["c_kernel"] = s.c;
    r.checks.push_back(bounded("metric and action-kernel critical values agree",
                               std::abs(s.c - cf.value),
                               config.tol.bisection + 4.0 * g.h()));
    std::vector<int> sources;
    for (int i = 0; i < 8; ++i)
      sources.push_back(i * g.size() / 8);
    const auto S = semidistance(*s.model, cf.hi, sources, s.env, g,
                                config.tol.neighborhood_radius);
    double worst = 0.0;
    for (int a : sources)
      for (int b : sources)
        for (int x = 0; x < g.size(); x += std::max(1, g.size() / 32))
          worst = std::max(worst, S(a, x) - S(a, b) - S(b, x));
    r.checks.push_back(
        bounded("triangle inequality of the semidistance", worst, 1e-9));
  }

  // Semigroup and Aubry set.
  aubry_stage(s);
  aubry_checks(s, r);
  {
    const double t = 0.25;
    GridFn u0 = GridFn::sample(g, [&](Vec2 x) {
      return 0.1 * std::sin(2.0 * M_PI * x.x) +
             (dim == 2 ? 0.1 * std::cos(2.0 * M_PI * x.y) : 0.0);
    });
    const auto ev = check_time_dependent_solution(u0, *s.kernel, t);
    r.checks.push_back(bounded(
        "Lax-Oleinik value solves the evolutive equation (finite differences)",
        ev.discrepancy, ev.tolerance));
    const auto pts = s.mask.points();
    if (!pts.empty()) {
      const auto curve = extract_calibrated_curve(
          pts.front(), s.w, *s.folded, s.kernel->steps_for(1.0), s.mask);
      r.checks.push_back({"calibrated curves stay in the Aubry set",
                          curve.pass, curve.max_defect, 1e-9,
                          std::to_string(curve.exits) + " exits"});
    }
  }

  // Strict subsolutions.
  const GridFn we = strict_stage(s, r);
  strict_checks(s, we, r);

  // Tonelli: flow, contraction window and regularization.
  if (s.model->flags().tonelli) {
    const auto tr = flow_integrate(*s.model, s.env,
                                   {{0.3, dim == 2 ? 0.1 : 0.0},
                                    {1.2, dim == 2 ? -0.4 : 0.0},
                                    0.0},
                                   10.0, config.tol.flow_dt);
    r.checks.push_back(bounded("energy is conserved along the Hamiltonian flow",
                               tr.max_drift, 1e-6));
    const auto b = regularize_stage(s, we, r);
    const double k = contraction_constant(b.window, *s.model, s.env,
                                          b.window.t0, config.tol.pairs,
                                          config.env.seed);
    r.checks.push_back(bounded("flow displacement is a contraction on the window",
                               k, 0.5));
  } else {
    r.warnings.push_back(s.model->name() +
                         " is not Tonelli; flow and regularization checks "
                         "skipped");
  }
  ensure_dir(o);
  finish(r, config, o);
  return r;
}

} // namespace wkam
