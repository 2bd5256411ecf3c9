#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wkam/aubry.hpp"
#include "wkam/semigroup.hpp"
#include "wkam/subsol.hpp"

namespace wkam {

struct FlowState {
  Vec2 x;
  Vec2 p;
  double energy = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<FlowState> states;
  double max_drift = 0.0; // max |E(t) - E(0)|
};

// RK4 for x' = dH/dp, p' = -dH/dx; negative t integrates backward. Positions
// are not wrapped. Throws RefusalError for non-Tonelli models.
Trajectory flow_integrate(const Hamiltonian &model, const EnvRealization &env,
                          FlowState start, double t, double dt);

struct CharacteristicReport {
  std::vector<Vec2> chain; // unwrapped DP minimizer, times 0, dt, ..., t
  std::vector<Vec2> flow;  // characteristic positions at the same times
  Vec2 terminal_momentum;
  double max_deviation = 0.0;
};

// DP minimizing chain for (T_t^- u)(x) against the characteristic through
// (x, D_h T_t^- u(x)) integrated backward with step flow_dt.
CharacteristicReport verify_minimizer_is_characteristic(
    const GridFn &u, const ActionKernel &kernel, int x, double t,
    double flow_dt);

struct SecondDifferences {
  double K_upper = 0.0; // max centred second difference quotient
  double K_lower = 0.0; // min centred second difference quotient
  int argmax = -1, argmin = -1;
  double unbounded_threshold = 0.0; // 1/h: larger magnitudes mark kinks
  bool upper_unbounded() const { return K_upper >= unbounded_threshold; }
  bool lower_unbounded() const { return -K_lower >= unbounded_threshold; }
  bool semiconcave(double K, double tol = 0.0) const {
    return !upper_unbounded() && K_upper <= K + tol;
  }
  bool semiconvex(double K, double tol = 0.0) const {
    return !lower_unbounded() && K_lower >= -K - tol;
  }
};

// Over the axis directions and, in 2-d, both diagonals.
SecondDifferences estimate_semiconcavity(const GridFn &v);

// Upper second differences of x -> h_t(y, x) over targets whose whole
// stencil is finite, maximized over y.
double kernel_semiconcavity(const ActionKernel &kernel, double t);

struct RegularWindow {
  double kappa0 = 0.0;
  double lambda = 0.0;
  double rho = 0.0;  // momentum bound on characteristics
  double ell = 0.0;  // Lipschitz constant of the Hamiltonian field
  double t0 = 0.0;
  double A = 0.0;
  double speed = 0.0; // R(kappa0)
  // Values of the three defining inequalities at t0.
  double contraction_factor() const;
};

RegularWindow regular_window(double kappa0, double lambda,
                             const Hamiltonian &model,
                             const EnvRealization &env);

// Max over sampled pairs of |(R_t - I)(y1) - (R_t - I)(y2)| / |y1 - y2| with
// R_t(y) the flow projection from (y, D psi(y)), D psi = lambda/(2 pi)
// sin(2 pi x) per axis.
double contraction_constant(const RegularWindow &window,
                            const Hamiltonian &model,
                            const EnvRealization &env, double t, int n_pairs,
                            std::uint64_t seed, double dt = 1e-3);

struct Certificate {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
};

struct BernardResult {
  GridFn value;
  std::vector<Certificate> certificates; // five, in fixed order
  RegularWindow window;
  SecondDifferences curvature;
  std::vector<std::string> warnings;
  bool pass() const;
};

// T_t^- o T_s^+ w with five certificates: local subsolution test,
// two-sided second-difference bound against max(A, K_t), sup-norm bound
// (t + s) R, equality on the mask within its threshold, strictness at d0.
BernardResult bernard_regularize(const GridFn &w, const ActionKernel &folded,
                                 double s, double t, const AubryMask &mask,
                                 double d0 = 0.1);

struct EnvelopeReport {
  std::vector<int> samples;
  std::vector<double> discrepancy; // T_t w(x) - T_t psi(x) per sample
  double max_discrepancy = 0.0;
};

// For each sampled x: take the optimal y for (T_t^- w)(x), the paraboloid
// psi(z) = w(y) + <D_h w(y), z - y> - K |z - y|^2 (periodic displacement),
// and compare T_t^- psi(x) with T_t^- w(x).
EnvelopeReport check_envelope_identity(const GridFn &w,
                                       const ActionKernel &kernel, double t,
                                       double K,
                                       const std::vector<int> &samples);

} // namespace wkam
