#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wkam/grid.hpp"
#include "wkam/metric.hpp"
#include "wkam/semigroup.hpp"

namespace wkam {

// Detected set together with the residual field it was thresholded from.
struct AubryMask {
  GridSpec grid;
  std::vector<char> inside;
  std::vector<double> residual;
  double threshold = 0.0;
  std::vector<std::string> warnings;

  // Same residual field thresholded at eps.
  AubryMask at(double eps) const;
  std::vector<int> points() const;
  int count() const;
  bool contains(int idx) const { return inside[size_t(idx)] != 0; }
  // Largest distance from a mask point to the given point set, in cells.
  double spread_from(const std::vector<int> &targets) const;
};

// Masks at eps/2, eps and 2 eps.
std::vector<AubryMask> threshold_sweep(const AubryMask &mask);

// {y : min over the upper half of the ladder of h_t(y, y) <= eps} for a
// kernel with the critical value folded in. Warns when the ladder spans
// less than two decades.
AubryMask classical_aubry(const ActionKernel &folded,
                          std::vector<double> ladder, double eps);

struct SubsolutionLibrary {
  struct Member {
    GridFn v;
    std::string tag;
  };
  std::vector<Member> members;

  // Adds v normalized so that v(0) = 0.
  void add(GridFn v, std::string tag);
  size_t size() const { return members.size(); }
};

// Finite stand-in for a dense family of critical subsolutions, built from
// the folded kernel: forward cones S(y_i, .) and backward cones -S(., y_i)
// over a seed lattice, interleaved, followed by T_t^- images of the forward
// cones at image_times.
SubsolutionLibrary default_library(const ActionKernel &folded,
                                   int seeds_per_axis,
                                   const std::vector<double> &image_times);

// sum_n 2^-n v_n / (1 - 2^-M). Every member must pass
// check_monotone_semigroup on the folded kernel at level 0 over the ladder
// {dt, 2dt, 4dt, 8dt}; otherwise throws RefusalError naming the member.
GridFn build_w(const SubsolutionLibrary &library, const ActionKernel &folded,
               std::optional<double> tolerance = {});

// {x : (T_t^- v - v)(x) <= eps}. Throws RefusalError when T_t^- v - v is
// below -max(eps, 1e-9 (1 + |v|)) somewhere, i.e. v is not a subsolution
// for the folded kernel.
std::vector<int> fixed_point_set(const GridFn &v, const ActionKernel &folded,
                                 double t, double eps);

// Default detection threshold 1e-9 (1 + ||w||_inf). The folded kernel makes
// T_t^- w - w vanish up to rounding on the discrete Aubry set.
double default_aubry_threshold(const GridFn &w);

// Residual r(x) = max over the ladder of (T_t^- w - w)(x); mask r <= eps.
AubryMask detect_aubry(const GridFn &w, const ActionKernel &folded,
                       std::vector<double> ladder,
                       std::optional<double> eps = {});

// u(x) = min over sources y of g(y) + S(y, x). Throws ArgumentError on an
// empty source set.
GridFn lax_extension(const GridFn &g, const Semidistance &S);

struct CalibratedCurve {
  std::vector<int> points;     // forward in time, ending at x0
  std::vector<double> times;   // -steps dt .. 0
  std::vector<double> action;  // accumulated action from points.front()
  std::vector<double> w_increment; // w(points[k]) - w(points.front())
  double max_defect = 0.0;     // max |action - w_increment|
  int exits = 0;               // points more than one cell off the mask
  bool pass = false;
};

// Backward chain of one-step argmins of T^- w from x0. Each segment's action
// is compared with the increment of w along it.
CalibratedCurve extract_calibrated_curve(int x0, const GridFn &w,
                                         const ActionKernel &folded, int steps,
                                         const AubryMask &mask,
                                         double tolerance = 1e-9);

} // namespace wkam
