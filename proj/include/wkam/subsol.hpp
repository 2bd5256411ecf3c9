#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "wkam/aubry.hpp"
#include "wkam/grid.hpp"
#include "wkam/metric.hpp"
#include "wkam/semigroup.hpp"

namespace wkam {

struct StrictnessCertificate {
  double d0 = 0.0;      // region: cells at distance >= d0 from the mask
  double delta = 0.0;   // -max over the region of H(x, D_h v)
  int worst = -1;
  double h = 0.0;
  double tolerance = 0.0;
  int region_size = 0;
  bool pass = false;    // delta > tolerance
};

// Central-difference strictness test for v against a model with the
// critical value folded in. Cells whose stencil touches the mask are
// excluded. Default tolerance h. Throws ArgumentError if the region is empty.
StrictnessCertificate check_strict(const GridFn &v, const Hamiltonian &model,
                                   const EnvRealization &env,
                                   const AubryMask &mask, double d0,
                                   std::optional<double> tolerance = {});

struct WeakStrictnessReport {
  double gap = 0.0; // min of S(y, x) - (v(x) - v(y)) over valid pairs
  std::pair<int, int> worst{-1, -1};
  int pairs = 0;
  double tolerance = 0.0;
  bool pass = false;
};

// Pairs are (y, x) with y a source of S; a pair counts when both points are
// off the mask and at least 2h apart. Throws ArgumentError when none count.
WeakStrictnessReport check_weakly_strict(
    const GridFn &v, const Semidistance &S, const AubryMask &mask,
    const std::vector<std::pair<int, int>> &pairs, double tolerance = 0.0);

// t_n = tau * (van der Corput fraction n), rounded to at least one step:
// tau/2, tau/4, 3 tau/4, tau/8, ...
std::vector<double> strict_ladder(const ActionKernel &kernel, double tau,
                                  int M);

// sum_{n <= M} 2^-n T_{t_n}^- w / (1 - 2^-M). Requires a strictly convex
// model; otherwise throws RefusalError pointing to build_strict_convex.
GridFn build_strict_strictly_convex(const GridFn &w,
                                    const ActionKernel &folded, double tau,
                                    int M);

struct SupConvolution {
  std::vector<double> times;
  std::vector<GridFn> values;           // v(t, .) per time
  std::vector<std::vector<double>> argmax_s; // maximizing s per time and x
  double s_max = 0.0;
};

// v(t, x) = max_{s on the ladder, 0 <= s <= s_max} T_s^- w(x) - (s - t)^2 /
// (2 delta). s_max defaults to max t + 4 delta R; an explicit s_max below
// max t + 2 delta R throws ArgumentError (the maximizer window is cut).
SupConvolution sup_convolution_time(const GridFn &w, const ActionKernel &folded,
                                    double delta, std::vector<double> times,
                                    std::optional<double> s_max = {});

// Same sum as build_strict_strictly_convex with v(t_n, .) from the
// sup-convolution; valid for merely convex models.
GridFn build_strict_convex(const GridFn &w, const ActionKernel &folded,
                           double delta, double tau, int M);

// v / n + (1 - 1/n) u for n >= 1.
GridFn density_mix(const GridFn &v_strict, const GridFn &u, int n);

// First ladder step after which T_t^- w(x) stops increasing by more than
// eps, per grid point; -1 if it still increases at max_steps. Points where
// it never increases report 0.
std::vector<int> increase_switch_steps(const GridFn &w,
                                       const ActionKernel &folded,
                                       int max_steps, double eps);

} // namespace wkam
