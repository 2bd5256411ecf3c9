#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "wkam/env.hpp"
#include "wkam/grid.hpp"
#include "wkam/vec.hpp"

namespace wkam {

struct ModelFlags {
  bool convex = true;
  bool strictly_convex = false;
  bool tonelli = false;
};

// H(x, p, omega) together with the structural data the solvers need. Every
// evaluator is pure, so one model may be shared across threads.
class Hamiltonian {
public:
  struct Derivatives {
    Vec2 dx; // dH/dx
    Vec2 dp; // dH/dp
  };

  virtual ~Hamiltonian() = default;

  virtual std::string name() const = 0;
  virtual ModelFlags flags() const = 0;
  virtual double H(Vec2 x, Vec2 p, const EnvRealization &env) const = 0;

  // Closed-form Lagrangian, +inf outside its domain. nullopt when the model
  // has no closed form.
  virtual std::optional<double> lagrangian(Vec2, Vec2,
                                           const EnvRealization &) const {
    return std::nullopt;
  }
  // Closed-form support function of the sublevel {p : H(x, p) <= a}; -inf
  // when the sublevel is empty.
  virtual std::optional<double> support(double, Vec2, Vec2,
                                        const EnvRealization &) const {
    return std::nullopt;
  }
  virtual std::optional<Derivatives> derivatives(Vec2, Vec2,
                                                 const EnvRealization &) const {
    return std::nullopt;
  }

  // Growth envelopes alpha(|p|) <= H(x, p) <= beta(|p|), nondecreasing.
  virtual double alpha(double r, const EnvRealization &env) const = 0;
  virtual double beta(double r, const EnvRealization &env) const = 0;
  // beta*(s) = sup_{r >= 0} (r s - beta(r)); +inf when unbounded.
  virtual double beta_conjugate(double s, const EnvRealization &env) const;

  // sup_{|p| <= R} |dH/dp|.
  virtual double p_lipschitz(double R, const EnvRealization &env) const = 0;
  // Lipschitz constant of (dH/dp, -dH/dx) on R^N x B_rho. The default
  // samples difference quotients and doubles the result.
  virtual double flow_lipschitz(double rho, const EnvRealization &env) const;
  // Speeds above this bound have infinite Lagrangian cost.
  virtual double max_speed() const {
    return std::numeric_limits<double>::infinity();
  }

  // Closed form when available, numeric Legendre transform otherwise.
  double L(Vec2 x, Vec2 q, const EnvRealization &env) const;
};

using ModelPtr = std::shared_ptr<const Hamiltonian>;

// H = |p| - V(x); convex, not strictly convex.
ModelPtr make_eikonal();
// H = |p|^2 / 2 + V(x); Tonelli.
ModelPtr make_mechanical();
// H = |p + P|^2 / 2 + V(x); Tonelli.
ModelPtr make_tilted_mechanical(Vec2 tilt);
// H = max(|p| - 1, 0) + V(x); convex with flat directions.
ModelPtr make_nonstrict();

// H(x, -p): the model behind the positive semigroup.
ModelPtr reversed(ModelPtr model);
// H - c (so L + c): folds a critical value into the model.
ModelPtr shifted(ModelPtr model, double c);

// Factory used by the configuration layer. Recognized names: Eikonal,
// Mechanical, TiltedMechanical (params tilt_x, tilt_y), NonStrict.
ModelPtr make_model(const std::string &name,
                    const std::map<std::string, double> &params);

// Numeric Legendre transform: max over a Cartesian momentum grid on
// [-p_radius, p_radius]^N, refined by a quadratic fit and, for Tonelli
// models, one Newton step. Throws BoundaryError if the grid maximizer lies on
// the box boundary.
double legendre(const Hamiltonian &model, Vec2 x, Vec2 q,
                const EnvRealization &env, double p_radius, int p_grid);

// sup |p| over sampled (x, p) with H(x, p) <= a. Throws SubcriticalError
// when the sublevel is empty at every sampled x.
double kappa(const Hamiltonian &model, double a, const EnvRealization &env,
             const GridSpec &grid, double p_radius, int p_grid = 401);

// Largest rho with Z_a(x) + B_rho inside Z_b(x) at the sampled points.
double sublevel_margin(const Hamiltonian &model, double a, double b,
                       const EnvRealization &env, const GridSpec &grid,
                       double p_radius = 16.0, int p_grid = 401);

// Speed bound R(theta): every optimal y for (T_t u)(x) with u theta-Lipschitz
// satisfies |x - y| <= t R(theta). Defined as
//   R(theta) = sup{ s >= 0 : beta*(s) - theta s <= -alpha(0) },
// which follows from t beta*(|x-y|/t) <= h_t(y, x) <= u(x) - u(y) + h_t(x, x)
// and h_t(x, x) <= -t alpha(0).
double lipschitz_radius(double theta, const Hamiltonian &model,
                        const EnvRealization &env);

} // namespace wkam
