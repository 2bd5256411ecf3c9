#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "wkam/env.hpp"
#include "wkam/grid.hpp"
#include "wkam/hamiltonian.hpp"
#include "wkam/kernels.hpp"
#include "wkam/metric.hpp"

namespace wkam {

// Minimal action h_t(y, x) on the time ladder t = m dt. The one-step table
// is dt L(mid(y, x), (x - y) / dt) on |x - y| <= dt R(theta) + 2h; longer
// times are min-plus powers, memoized and safe to request concurrently.
class ActionKernel {
public:
  ActionKernel(ModelPtr model, const EnvRealization &env, const GridSpec &grid,
               double dt, double theta);

  const ModelPtr &model() const { return model_; }
  const EnvRealization &env() const { return *env_; }
  const GridSpec &grid() const { return grid_; }
  double dt() const { return dt_; }
  double theta() const { return theta_; }
  double speed_bound() const { return speed_; } // R(theta)

  const KernelTable &step() const { return *step_; }
  // h_{m dt}; m >= 1.
  const KernelTable &table(int steps) const;
  // Number of steps for a ladder time; throws ArgumentError off the ladder.
  int steps_for(double t) const;

  // Kernel of the reversed model, h_t(x, y), by exact transposition.
  const ActionKernel &reversed() const;
  // Kernel of the model H - c (action plus c t), rebuilt from the model.
  ActionKernel shifted(double c) const;

private:
  struct Memo;
  ActionKernel() = default;

  ModelPtr model_;
  std::shared_ptr<const EnvRealization> env_;
  GridSpec grid_;
  double dt_ = 0.0, theta_ = 0.0, speed_ = 0.0;
  std::shared_ptr<const KernelTable> step_;
  std::shared_ptr<Memo> memo_;
};

// Throws ArgumentError for dt <= 0 and NumericError ("dt too small for
// grid") when the stencil has no reachable neighbor.
ActionKernel build_kernel(ModelPtr model, const EnvRealization &env,
                          const GridSpec &grid, double dt, double theta);

struct LaxResult {
  GridFn value;
  std::vector<int> argmin; // optimal y per x; -1 where the value is +inf
};

// (T_t^- u)(x) = min_y u(y) + h_t(y, x), by repeated one-step updates.
LaxResult lax_minus(const GridFn &u, const ActionKernel &kernel, double t);
// (T_t^+ u) = -(reversed T_t^-)(-u); argmin holds the maximizing y.
LaxResult lax_plus(const GridFn &u, const ActionKernel &kernel, double t);
// [T_0^- u, T_dt^- u, ..., T_{steps dt}^- u].
std::vector<GridFn> lax_minus_sequence(const GridFn &u,
                                       const ActionKernel &kernel, int steps);
// Same through the memoized power table h_t; agrees with lax_minus up to
// rounding.
LaxResult lax_minus_table(const GridFn &u, const ActionKernel &kernel,
                          double t);

// Exact critical value of the discrete kernel: minus the minimum mean cycle
// weight per unit time of the one-step graph, by cycle cancelling. The
// optimal cycle is returned through cycle when requested.
double kernel_critical_value(const ActionKernel &kernel,
                             std::vector<int> *cycle = nullptr);

// Shortest paths on the one-step graph of a kernel whose critical value has
// been folded in: S(y, .) for each source. Throws SubcriticalError if the
// graph still has a negative cycle.
Semidistance kernel_semidistance(const ActionKernel &kernel,
                                 const std::vector<int> &sources);
// S(., y) per source: shortest paths into y.
Semidistance kernel_semidistance_to(const ActionKernel &kernel,
                                    const std::vector<int> &targets);

struct LadderReport {
  bool pass = false;
  double worst = 0.0;  // largest violation or residual
  int worst_x = -1;
  double worst_t = 0.0;
  double tolerance = 0.0;
  std::vector<double> times;
  std::vector<double> values; // per ladder time
};

// Largest decrease of T_t^- u + a t between consecutive ladder times (time 0
// is prepended). Default tolerance 4h (L_R + |D_x H|) with R = Lip(u).
LadderReport check_monotone_semigroup(const GridFn &u,
                                      const ActionKernel &kernel, double a,
                                      std::vector<double> ladder,
                                      std::optional<double> tolerance = {});

// ||T_t^- u + a t - u||_inf per ladder time. Default tolerance
// 3h max(1, Lip(u)).
LadderReport check_corrector(const GridFn &u, const ActionKernel &kernel,
                             double a, std::vector<double> ladder,
                             std::optional<double> tolerance = {});

struct EvolutionReport {
  bool pass = false;
  double discrepancy = 0.0; // sup |lax - finite differences| at T_final
  int worst_x = -1;
  double fd_dt = 0.0;
  int fd_steps = 0;
  double dissipation = 0.0;
  double tolerance = 0.0;
  GridFn lax, fd;
};

// Compares T_{T_final}^- u0 with a Lax-Friedrichs scheme for
// u_t + H(x, Du) = 0. fd_dt defaults to half the CFL limit; an explicit
// fd_dt above the limit is a ConfigError. Default tolerance 2 sqrt(h)(1 + T).
EvolutionReport check_time_dependent_solution(
    const GridFn &u0, const ActionKernel &kernel, double T_final,
    std::optional<double> fd_dt = {}, std::optional<double> tolerance = {});

} // namespace wkam
