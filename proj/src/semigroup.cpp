#include "wkam/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "wkam/error.hpp"

namespace wkam {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

KernelTable one_step_table(const Hamiltonian &model, const EnvRealization &env,
                           const GridSpec &grid, double dt, double speed) {
  const double h = grid.h();
  const double reach = (dt * speed + 2.0 * h) / h; // in cells
  const int K = static_cast<int>(std::floor(reach));
  if (K < 1)
    throw NumericError("dt too small for grid: the stencil reaches no "
                       "neighbor");
  KernelTable t(Stencil::make(grid, K));
  const int size = grid.size();
  const int jmax = grid.dim == 2 ? K : 0;
#pragma omp parallel for schedule(static)
  for (int x = 0; x < size; ++x)
    for (int dj = -jmax; dj <= jmax; ++dj)
      for (int di = -K; di <= K; ++di) {
        if (grid.dim == 2 && di * di + dj * dj > reach * reach)
          continue;
        const int y = grid.shift(x, -di, -dj);
        const Vec2 q{di * h / dt, dj * h / dt};
        const double w = dt * model.L(grid.midpoint(y, di, dj), q, env);
        double &slot = t.at(x, t.stencil.index_of(di, dj));
        slot = std::min(slot, w);
      }
  bool reachable = false;
  const int zero = t.stencil.index_of(0, 0);
  for (int k = 0; k < t.count() && !reachable; ++k)
    if (k != zero)
      for (int x = 0; x < size; ++x)
        if (t.at(x, k) < kInf) {
          reachable = true;
          break;
        }
  if (!reachable)
    throw NumericError("dt too small for grid: no neighbor has finite action");
  return t;
}
} // namespace

struct ActionKernel::Memo {
  std::mutex mu;
  std::map<int, std::shared_ptr<const KernelTable>> tables;
  std::unique_ptr<ActionKernel> reversed;
};

ActionKernel::ActionKernel(ModelPtr model, const EnvRealization &env,
                           const GridSpec &grid, double dt, double theta)
    : model_(std::move(model)),
      env_(std::make_shared<const EnvRealization>(env)), grid_(grid), dt_(dt),
      theta_(theta), memo_(std::make_shared<Memo>()) {
  grid_.validate();
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ArgumentError("time step must be positive");
  if (!(theta >= 0.0))
    throw ArgumentError("Lipschitz level theta must be nonnegative");
  if (env.spec().dimension != grid.dim)
    throw ArgumentError("environment and grid dimensions differ");
  speed_ = std::min(lipschitz_radius(theta, *model_, env), model_->max_speed());
  step_ = std::make_shared<const KernelTable>(
      one_step_table(*model_, env, grid_, dt_, speed_));
}

ActionKernel build_kernel(ModelPtr model, const EnvRealization &env,
                          const GridSpec &grid, double dt, double theta) {
  return ActionKernel(std::move(model), env, grid, dt, theta);
}

const KernelTable &ActionKernel::table(int steps) const {
  if (steps < 1)
    throw ArgumentError("kernel table needs at least one step");
  if (steps == 1)
    return *step_;
  std::lock_guard<std::mutex> lock(memo_->mu);
  auto &tables = memo_->tables;
  if (auto it = tables.find(steps); it != tables.end())
    return *it->second;
  // Dyadic powers by squaring, then the binary expansion of steps.
  tables.emplace(1, step_);
  std::shared_ptr<const KernelTable> acc;
  for (int bit = 1, prev = 1; bit <= steps; prev = bit, bit <<= 1) {
    if (!tables.count(bit)) {
      const auto &half = *tables.at(prev);
      tables.emplace(bit, std::make_shared<const KernelTable>(
                              kernels::compose(half, half)));
    }
    if (steps & bit)
      acc = acc ? std::make_shared<const KernelTable>(
                      kernels::compose(*acc, *tables.at(bit)))
                : tables.at(bit);
  }
  tables[steps] = acc;
  return *acc;
}

int ActionKernel::steps_for(double t) const {
  const double m = std::round(t / dt_);
  if (m < 0 || std::abs(m * dt_ - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw ArgumentError("time " + std::to_string(t) +
                        " is not on the ladder of step " + std::to_string(dt_));
  return static_cast<int>(m);
}

const ActionKernel &ActionKernel::reversed() const {
  std::lock_guard<std::mutex> lock(memo_->mu);
  if (!memo_->reversed) {
    auto rev = std::unique_ptr<ActionKernel>(new ActionKernel());
    rev->model_ = wkam::reversed(model_);
    rev->env_ = env_;
    rev->grid_ = grid_;
    rev->dt_ = dt_;
    rev->theta_ = theta_;
    rev->speed_ = speed_;
    rev->step_ = std::make_shared<const KernelTable>(transpose(*step_));
    rev->memo_ = std::make_shared<Memo>();
    memo_->reversed = std::move(rev);
  }
  return *memo_->reversed;
}

ActionKernel ActionKernel::shifted(double c) const {
  return ActionKernel(wkam::shifted(model_, c), *env_, grid_, dt_, theta_);
}

LaxResult lax_minus(const GridFn &u, const ActionKernel &kernel, double t) {
  if (!(u.grid == kernel.grid()))
    throw ArgumentError("function and kernel live on different grids");
  const int m = kernel.steps_for(t);
  const int size = u.size();
  LaxResult r{u, std::vector<int>(static_cast<size_t>(size))};
  for (int x = 0; x < size; ++x)
    r.argmin[x] = x;
  std::vector<double> next(static_cast<size_t>(size));
  std::vector<int> arg(static_cast<size_t>(size)), chained(static_cast<size_t>(size));
  for (int s = 0; s < m; ++s) {
    kernels::apply(kernel.step(), r.value.values.data(), next.data(),
                   arg.data());
    for (int x = 0; x < size; ++x)
      chained[x] = arg[x] < 0 ? -1 : r.argmin[arg[x]];
    r.value.values.swap(next);
    r.argmin.swap(chained);
  }
  return r;
}

LaxResult lax_minus_table(const GridFn &u, const ActionKernel &kernel,
                          double t) {
  if (!(u.grid == kernel.grid()))
    throw ArgumentError("function and kernel live on different grids");
  const int m = kernel.steps_for(t);
  if (m == 0)
    return lax_minus(u, kernel, 0.0);
  LaxResult r{GridFn(u.grid), std::vector<int>(size_t(u.size()))};
  kernels::apply(kernel.table(m), u.values.data(), r.value.values.data(),
                 r.argmin.data());
  return r;
}

LaxResult lax_plus(const GridFn &u, const ActionKernel &kernel, double t) {
  LaxResult r = lax_minus(-u, kernel.reversed(), t);
  r.value = -r.value;
  return r;
}

std::vector<GridFn> lax_minus_sequence(const GridFn &u,
                                       const ActionKernel &kernel, int steps) {
  if (steps < 0)
    throw ArgumentError("negative step count");
  std::vector<GridFn> out{u};
  out.reserve(size_t(steps) + 1);
  for (int s = 0; s < steps; ++s) {
    GridFn next(u.grid);
    kernels::apply(kernel.step(), out.back().values.data(), next.values.data(),
                   nullptr);
    out.push_back(std::move(next));
  }
  return out;
}

double kernel_critical_value(const ActionKernel &kernel,
                             std::vector<int> *cycle) {
  const KernelTable &step = kernel.step();
  const int zero = step.stencil.index_of(0, 0);
  const int size = step.stencil.grid.size();
  // Start from the best rest loop.
  double lambda = kInf;
  std::vector<int> best;
  for (int x = 0; x < size; ++x)
    if (step.at(x, zero) < lambda) {
      lambda = step.at(x, zero);
      best = {x, x};
    }
  if (lambda == kInf)
    throw NumericError("kernel has no finite rest loop");
  for (int it = 0; it < 1000; ++it) {
    KernelTable shifted = step;
    for (double &v : shifted.values)
      if (v < kInf)
        v -= lambda;
    try {
      shortest_paths(shifted, std::vector<double>(size_t(size), 0.0));
      break;
    } catch (const SubcriticalError &e) {
      const auto &c = e.cycle();
      const double mean = cycle_weight(step, c) / double(c.size() - 1);
      if (!(mean < lambda))
        break;
      lambda = mean;
      best = c;
    }
  }
  if (cycle)
    *cycle = best;
  return -lambda / kernel.dt();
}

namespace {
Semidistance kernel_paths(const KernelTable &t, const std::vector<int> &roots) {
  const GridSpec &grid = t.stencil.grid;
  Semidistance s;
  s.level = 0.0;
  s.grid = grid;
  s.sources = roots;
  for (int y : roots) {
    if (y < 0 || y >= grid.size())
      throw ArgumentError("semidistance source out of range");
    std::vector<double> init(size_t(grid.size()), kInf);
    init[size_t(y)] = 0.0;
    s.rows.push_back(shortest_paths(t, std::move(init)).dist);
  }
  return s;
}
} // namespace

Semidistance kernel_semidistance(const ActionKernel &kernel,
                                 const std::vector<int> &sources) {
  return kernel_paths(kernel.step(), sources);
}

Semidistance kernel_semidistance_to(const ActionKernel &kernel,
                                    const std::vector<int> &targets) {
  return kernel_paths(transpose(kernel.step()), targets);
}

namespace {
std::vector<int> ladder_steps(const ActionKernel &kernel,
                              std::vector<double> &ladder) {
  std::vector<int> steps{0};
  for (double t : ladder)
    steps.push_back(kernel.steps_for(t));
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  ladder.clear();
  for (int m : steps)
    ladder.push_back(m * kernel.dt());
  return steps;
}
} // namespace

LadderReport check_monotone_semigroup(const GridFn &u,
                                      const ActionKernel &kernel, double a,
                                      std::vector<double> ladder,
                                      std::optional<double> tolerance) {
  const auto steps = ladder_steps(kernel, ladder);
  const auto seq = lax_minus_sequence(u, kernel, steps.back());
  LadderReport rep;
  rep.tolerance =
      tolerance ? *tolerance
                : 4.0 * u.grid.h() *
                      (kernel.model()->p_lipschitz(u.lipschitz(), kernel.env()) +
                       kernel.env().gradient_bound());
  rep.worst = -kInf;
  for (size_t i = 1; i < steps.size(); ++i) {
    const GridFn &prev = seq[size_t(steps[i - 1])];
    const GridFn &cur = seq[size_t(steps[i])];
    double worst = -kInf;
    for (int x = 0; x < u.size(); ++x) {
      const double drop = (prev[x] + a * ladder[i - 1]) - (cur[x] + a * ladder[i]);
      if (drop > worst)
        worst = drop;
      if (drop > rep.worst) {
        rep.worst = drop;
        rep.worst_x = x;
        rep.worst_t = ladder[i];
      }
    }
    rep.times.push_back(ladder[i]);
    rep.values.push_back(worst);
  }
  if (rep.times.empty())
    rep.worst = 0.0;
  rep.pass = rep.worst <= rep.tolerance;
  return rep;
}

LadderReport check_corrector(const GridFn &u, const ActionKernel &kernel,
                             double a, std::vector<double> ladder,
                             std::optional<double> tolerance) {
  const auto steps = ladder_steps(kernel, ladder);
  const auto seq = lax_minus_sequence(u, kernel, steps.back());
  LadderReport rep;
  rep.tolerance = tolerance ? *tolerance
                            : 3.0 * u.grid.h() * std::max(1.0, u.lipschitz());
  rep.worst = 0.0;
  for (size_t i = 1; i < steps.size(); ++i) {
    const GridFn &cur = seq[size_t(steps[i])];
    double worst = 0.0;
    for (int x = 0; x < u.size(); ++x) {
      const double r = std::abs(cur[x] + a * ladder[i] - u[x]);
      worst = std::max(worst, r);
      if (r > rep.worst) {
        rep.worst = r;
        rep.worst_x = x;
        rep.worst_t = ladder[i];
      }
    }
    rep.times.push_back(ladder[i]);
    rep.values.push_back(worst);
  }
  rep.pass = rep.worst <= rep.tolerance;
  return rep;
}

EvolutionReport check_time_dependent_solution(const GridFn &u0,
                                              const ActionKernel &kernel,
                                              double T_final,
                                              std::optional<double> fd_dt,
                                              std::optional<double> tolerance) {
  const GridSpec &grid = u0.grid;
  const double h = grid.h();
  const Hamiltonian &model = *kernel.model();
  const EnvRealization &env = kernel.env();
  EvolutionReport rep;
  rep.lax = lax_minus(u0, kernel, T_final).value;
  rep.tolerance = tolerance ? *tolerance : 2.0 * std::sqrt(h) * (1.0 + T_final);

  const double slope = std::max(u0.lipschitz(), kernel.theta());
  const double theta = model.p_lipschitz(1.25 * slope + 1e-12, env);
  rep.dissipation = theta;
  const double limit = h / (theta * grid.dim);
  if (fd_dt && *fd_dt > limit)
    throw ConfigError("finite-difference step " + std::to_string(*fd_dt) +
                      " violates the CFL limit " + std::to_string(limit));
  const double target = fd_dt ? *fd_dt : 0.5 * limit;
  rep.fd_steps = T_final > 0.0 ? static_cast<int>(std::ceil(T_final / target)) : 0;
  rep.fd_dt = rep.fd_steps > 0 ? T_final / rep.fd_steps : 0.0;

  GridFn u = u0, next(grid);
  for (int s = 0; s < rep.fd_steps; ++s) {
    for (int x = 0; x < u.size(); ++x) {
      const double dpx = (u[grid.shift(x, 1)] - u[x]) / h;
      const double dmx = (u[x] - u[grid.shift(x, -1)]) / h;
      Vec2 p{0.5 * (dpx + dmx), 0.0};
      double diss = dpx - dmx;
      if (grid.dim == 2) {
        const double dpy = (u[grid.shift(x, 0, 1)] - u[x]) / h;
        const double dmy = (u[x] - u[grid.shift(x, 0, -1)]) / h;
        p.y = 0.5 * (dpy + dmy);
        diss += dpy - dmy;
      }
      const double flux = model.H(grid.point(x), p, env) - 0.5 * theta * diss;
      next[x] = u[x] - rep.fd_dt * flux;
    }
    std::swap(u.values, next.values);
  }
  rep.fd = u;
  for (int x = 0; x < u.size(); ++x) {
    const double d = std::abs(rep.fd[x] - rep.lax[x]);
    if (d > rep.discrepancy || rep.worst_x < 0) {
      rep.discrepancy = d;
      rep.worst_x = x;
    }
  }
  rep.pass = rep.discrepancy <= rep.tolerance;
  return rep;
}

} // namespace wkam
