#include "wkam/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "wkam/error.hpp"

namespace wkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Eikonal final : public Hamiltonian {
public:
  std::string name() const override { return "Eikonal"; }
  ModelFlags flags() const override { return {true, false, false}; }
  double H(Vec2 x, Vec2 p, const EnvRealization &env) const override {
    return norm(p) - env.value(x);
  }
  std::optional<double> lagrangian(Vec2 x, Vec2 q,
                                   const EnvRealization &env) const override {
    return norm(q) <= 1.0 ? env.value(x) : kInf;
  }
  std::optional<double> support(double a, Vec2 x, Vec2 q,
                                const EnvRealization &env) const override {
    const double r = a + env.value(x);
    return r < 0.0 ? -kInf : r * norm(q);
  }
  double alpha(double r, const EnvRealization &env) const override {
    return r - env.bounds().max;
  }
  double beta(double r, const EnvRealization &env) const override {
    return r - env.bounds().min;
  }
  double beta_conjugate(double s, const EnvRealization &env) const override {
    return s <= 1.0 ? env.bounds().min : kInf;
  }
  double p_lipschitz(double, const EnvRealization &) const override {
    return 1.0;
  }
  double max_speed() const override { return 1.0; }
};

class Mechanical : public Hamiltonian {
public:
  explicit Mechanical(Vec2 tilt = {}) : tilt_(tilt) {}

  std::string name() const override {
    return tilt_ == Vec2{} ? "Mechanical" : "TiltedMechanical";
  }
  ModelFlags flags() const override { return {true, true, true}; }
  double H(Vec2 x, Vec2 p, const EnvRealization &env) const override {
    const Vec2 m = p + tilt_;
    return 0.5 * dot(m, m) + env.value(x);
  }
  std::optional<double> lagrangian(Vec2 x, Vec2 q,
                                   const EnvRealization &env) const override {
    return 0.5 * dot(q, q) - dot(tilt_, q) - env.value(x);
  }
  std::optional<double> support(double a, Vec2 x, Vec2 q,
                                const EnvRealization &env) const override {
    const double r2 = 2.0 * (a - env.value(x));
    if (r2 < 0.0)
      return -kInf;
    return -dot(tilt_, q) + std::sqrt(r2) * norm(q);
  }
  std::optional<Derivatives> derivatives(Vec2 x, Vec2 p,
                                         const EnvRealization &env) const override {
    return Derivatives{env.gradient(x), p + tilt_};
  }
  double alpha(double r, const EnvRealization &env) const override {
    const double s = std::max(r - norm(tilt_), 0.0);
    return 0.5 * s * s + env.bounds().min;
  }
  double beta(double r, const EnvRealization &env) const override {
    const double s = r + norm(tilt_);
    return 0.5 * s * s + env.bounds().max;
  }
  double beta_conjugate(double s, const EnvRealization &env) const override {
    const double t = norm(tilt_);
    if (s < t)
      return -0.5 * t * t - env.bounds().max;
    return 0.5 * s * s - t * s - env.bounds().max;
  }
  double p_lipschitz(double R, const EnvRealization &) const override {
    return R + norm(tilt_);
  }
  double flow_lipschitz(double, const EnvRealization &env) const override {
    // The vector field (p + P, -grad V) has derivative [[0, I], [-D2V, 0]].
    return std::max(1.0, env.hessian_bound());
  }

private:
  Vec2 tilt_;
};

class NonStrict final : public Hamiltonian {
public:
  std::string name() const override { return "NonStrict"; }
  ModelFlags flags() const override { return {true, false, false}; }
  double H(Vec2 x, Vec2 p, const EnvRealization &env) const override {
    return std::max(norm(p) - 1.0, 0.0) + env.value(x);
  }
  std::optional<double> lagrangian(Vec2 x, Vec2 q,
                                   const EnvRealization &env) const override {
    const double s = norm(q);
    return s <= 1.0 ? s - env.value(x) : kInf;
  }
  std::optional<double> support(double a, Vec2 x, Vec2 q,
                                const EnvRealization &env) const override {
    const double slack = a - env.value(x);
    return slack < 0.0 ? -kInf : (1.0 + slack) * norm(q);
  }
  double alpha(double r, const EnvRealization &env) const override {
    return std::max(r - 1.0, 0.0) + env.bounds().min;
  }
  double beta(double r, const EnvRealization &env) const override {
    return std::max(r - 1.0, 0.0) + env.bounds().max;
  }
  double beta_conjugate(double s, const EnvRealization &env) const override {
    return s <= 1.0 ? s - env.bounds().max : kInf;
  }
  double p_lipschitz(double, const EnvRealization &) const override {
    return 1.0;
  }
  double max_speed() const override { return 1.0; }
};

class Reversed final : public Hamiltonian {
public:
  explicit Reversed(ModelPtr inner) : inner_(std::move(inner)) {}

  std::string name() const override { return "Reversed(" + inner_->name() + ")"; }
  ModelFlags flags() const override { return inner_->flags(); }
  double H(Vec2 x, Vec2 p, const EnvRealization &env) const override {
    return inner_->H(x, -p, env);
  }
  std::optional<double> lagrangian(Vec2 x, Vec2 q,
                                   const EnvRealization &env) const override {
    return inner_->lagrangian(x, -q, env);
  }
  std::optional<double> support(double a, Vec2 x, Vec2 q,
                                const EnvRealization &env) const override {
    return inner_->support(a, x, -q, env);
  }
  std::optional<Derivatives> derivatives(Vec2 x, Vec2 p,
                                         const EnvRealization &env) const override {
    auto d = inner_->derivatives(x, -p, env);
    if (!d)
      return std::nullopt;
    return Derivatives{d->dx, -d->dp};
  }
  double alpha(double r, const EnvRealization &env) const override {
    return inner_->alpha(r, env);
  }
  double beta(double r, const EnvRealization &env) const override {
    return inner_->beta(r, env);
  }
  double beta_conjugate(double s, const EnvRealization &env) const override {
    return inner_->beta_conjugate(s, env);
  }
  double p_lipschitz(double R, const EnvRealization &env) const override {
    return inner_->p_lipschitz(R, env);
  }
  double flow_lipschitz(double rho, const EnvRealization &env) const override {
    return inner_->flow_lipschitz(rho, env);
  }
  double max_speed() const override { return inner_->max_speed(); }

private:
  ModelPtr inner_;
};

class Shifted final : public Hamiltonian {
public:
  Shifted(ModelPtr inner, double c) : inner_(std::move(inner)), c_(c) {}

  std::string name() const override { return inner_->name(); }
  ModelFlags flags() const override { return inner_->flags(); }
  double H(Vec2 x, Vec2 p, const EnvRealization &env) const override {
    return inner_->H(x, p, env) - c_;
  }
  std::optional<double> lagrangian(Vec2 x, Vec2 q,
                                   const EnvRealization &env) const override {
    auto l = inner_->lagrangian(x, q, env);
    if (!l)
      return std::nullopt;
    return *l + c_;
  }
  std::optional<double> support(double a, Vec2 x, Vec2 q,
                                const EnvRealization &env) const override {
    return inner_->support(a + c_, x, q, env);
  }
  std::optional<Derivatives> derivatives(Vec2 x, Vec2 p,
                                         const EnvRealization &env) const override {
    return inner_->derivatives(x, p, env);
  }
  double alpha(double r, const EnvRealization &env) const override {
    return inner_->alpha(r, env) - c_;
  }
  double beta(double r, const EnvRealization &env) const override {
    return inner_->beta(r, env) - c_;
  }
  double beta_conjugate(double s, const EnvRealization &env) const override {
    return inner_->beta_conjugate(s, env) + c_;
  }
  double p_lipschitz(double R, const EnvRealization &env) const override {
    return inner_->p_lipschitz(R, env);
  }
  double flow_lipschitz(double rho, const EnvRealization &env) const override {
    return inner_->flow_lipschitz(rho, env);
  }
  double max_speed() const override { return inner_->max_speed(); }

private:
  ModelPtr inner_;
  double c_;
};

// Boundary point of the convex set {H(x, .) <= a} along centre + r e.
double ray_boundary(const Hamiltonian &model, double a, Vec2 x, Vec2 centre,
                    Vec2 e, const EnvRealization &env, double p_radius,
                    int samples) {
  const double step = p_radius / (samples - 1);
  int last = 0;
  for (int j = 1; j < samples; ++j) {
    if (model.H(x, centre + (j * step) * e, env) <= a)
      last = j;
    else
      break;
  }
  if (last == samples - 1)
    throw NumericError("sublevel set reaches the momentum radius " +
                       std::to_string(p_radius) + "; increase p_radius");
  double lo = last * step, hi = (last + 1) * step;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (model.H(x, centre + mid * e, env) <= a ? lo : hi) = mid;
  }
  return lo;
}

std::vector<Vec2> directions(int dim, int count) {
  if (dim == 1)
    return {{1.0, 0.0}, {-1.0, 0.0}};
  std::vector<Vec2> out;
  for (int k = 0; k < count; ++k) {
    const double a = 2.0 * std::numbers::pi * k / count;
    out.push_back({std::cos(a), std::sin(a)});
  }
  return out;
}

// Up to 64 sample points per axis.
std::vector<int> sample_indices(const GridSpec &grid) {
  const int stride = std::max(1, grid.n / 64);
  std::vector<int> out;
  for (int j = 0; j < (grid.dim == 2 ? grid.n : 1); j += stride)
    for (int i = 0; i < grid.n; i += stride)
      out.push_back(grid.index(i, j));
  return out;
}

// Approximate minimizer of H(x, .) on the momentum grid.
Vec2 grid_argmin(const Hamiltonian &model, Vec2 x, const EnvRealization &env,
                 double p_radius, int p_grid, double *value) {
  const bool two_d = env.spec().dimension == 2;
  const int m = two_d ? std::min(p_grid, 101) : p_grid;
  const double step = 2.0 * p_radius / (m - 1);
  double best = kInf;
  Vec2 arg;
  for (int j = 0; j < (two_d ? m : 1); ++j)
    for (int i = 0; i < m; ++i) {
      Vec2 p{-p_radius + i * step, two_d ? -p_radius + j * step : 0.0};
      const double v = model.H(x, p, env);
      if (v < best) {
        best = v;
        arg = p;
      }
    }
  if (value)
    *value = best;
  return arg;
}

} // namespace

double Hamiltonian::beta_conjugate(double s, const EnvRealization &env) const {
  // r s - beta(r) is concave in r; ternary search on a growing bracket.
  double hi = 1.0;
  auto f = [&](double r) { return r * s - beta(r, env); };
  while (f(2.0 * hi) > f(hi)) {
    hi *= 2.0;
    if (hi > 1e12)
      return kInf;
  }
  double lo = 0.0;
  hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    (f(m1) < f(m2) ? lo : hi) = (f(m1) < f(m2) ? m1 : m2);
  }
  return f(0.5 * (lo + hi));
}

double Hamiltonian::flow_lipschitz(double rho, const EnvRealization &env) const {
  const bool two_d = env.spec().dimension == 2;
  const double eps = 1e-6;
  double lip = 0.0;
  auto field = [&](Vec2 x, Vec2 p) {
    auto d = derivatives(x, p, env);
    if (!d)
      throw RefusalError(name() + " has no derivatives; the flow is undefined");
    return std::array<Vec2, 2>{d->dp, -d->dx};
  };
  const int nx = 16, np = 9;
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < (two_d ? nx : 1); ++iy)
      for (int ip = 0; ip < np; ++ip)
        for (int jp = 0; jp < (two_d ? np : 1); ++jp) {
          Vec2 x{ix / double(nx), two_d ? iy / double(nx) : 0.0};
          Vec2 p{rho * (2.0 * ip / (np - 1) - 1.0),
                 two_d ? rho * (2.0 * jp / (np - 1) - 1.0) : 0.0};
          const auto f0 = field(x, p);
          for (int k = 0; k < (two_d ? 4 : 2); ++k) {
            Vec2 dx, dp;
            (k % 2 == 0 ? dx : dp) = k < 2 ? Vec2{eps, 0} : Vec2{0, eps};
            const auto f1 = field(x + dx, p + dp);
            const double num = std::hypot(norm(f1[0] - f0[0]), norm(f1[1] - f0[1]));
            lip = std::max(lip, num / eps);
          }
        }
  return 2.0 * lip;
}

double Hamiltonian::L(Vec2 x, Vec2 q, const EnvRealization &env) const {
  if (auto l = lagrangian(x, q, env))
    return *l;
  for (double radius = 4.0; radius <= 1024.0; radius *= 2.0) {
    try {
      return legendre(*this, x, q, env, radius, 201);
    } catch (const BoundaryError &) {
    }
  }
  return kInf;
}

ModelPtr make_eikonal() { return std::make_shared<Eikonal>(); }
ModelPtr make_mechanical() { return std::make_shared<Mechanical>(); }
ModelPtr make_tilted_mechanical(Vec2 tilt) {
  return std::make_shared<Mechanical>(tilt);
}
ModelPtr make_nonstrict() { return std::make_shared<NonStrict>(); }
ModelPtr reversed(ModelPtr model) {
  return std::make_shared<Reversed>(std::move(model));
}
ModelPtr shifted(ModelPtr model, double c) {
  return std::make_shared<Shifted>(std::move(model), c);
}

ModelPtr make_model(const std::string &name,
                    const std::map<std::string, double> &params) {
  auto get = [&](const char *key) {
    auto it = params.find(key);
    return it == params.end() ? 0.0 : it->second;
  };
  if (name == "Eikonal")
    return make_eikonal();
  if (name == "Mechanical")
    return make_mechanical();
  if (name == "TiltedMechanical")
    return make_tilted_mechanical({get("tilt_x"), get("tilt_y")});
  if (name == "NonStrict")
    return make_nonstrict();
  throw ConfigError("unknown Hamiltonian model '" + name + "'");
}

double legendre(const Hamiltonian &model, Vec2 x, Vec2 q,
                const EnvRealization &env, double p_radius, int p_grid) {
  if (p_grid < 5 || !(p_radius > 0))
    throw ArgumentError("legendre needs p_grid >= 5 and p_radius > 0");
  const bool two_d = env.spec().dimension == 2;
  const double step = 2.0 * p_radius / (p_grid - 1);
  auto coord = [&](int i) { return -p_radius + i * step; };
  auto objective = [&](Vec2 p) { return dot(p, q) - model.H(x, p, env); };

  double best = -kInf;
  int bi = 0, bj = 0;
  for (int j = 0; j < (two_d ? p_grid : 1); ++j)
    for (int i = 0; i < p_grid; ++i) {
      const Vec2 p{coord(i), two_d ? coord(j) : 0.0};
      const double v = objective(p);
      if (v > best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  const Vec2 p0{coord(bi), two_d ? coord(bj) : 0.0};
  if (bi == 0 || bi == p_grid - 1 || (two_d && (bj == 0 || bj == p_grid - 1)))
    throw BoundaryError("p_radius too small: Legendre maximizer on the "
                        "momentum box boundary",
                        p0);

  // Per-axis parabola through the neighbours.
  auto vertex = [&](Vec2 e) {
    const double fm = objective(p0 - step * e), f0 = best,
                 fp = objective(p0 + step * e);
    const double curv = fm - 2.0 * f0 + fp;
    if (!(curv < 0.0))
      return 0.0;
    return std::clamp(0.5 * (fm - fp) / curv, -1.0, 1.0) * step;
  };
  Vec2 p1 = p0 + Vec2{vertex({1.0, 0.0}), two_d ? vertex({0.0, 1.0}) : 0.0};
  best = std::max(best, objective(p1));

  if (model.flags().tonelli) {
    // One Newton step on q - dH/dp(x, p) = 0 with a difference Hessian.
    auto grad = [&](Vec2 p) { return model.derivatives(x, p, env); };
    if (auto g = grad(p1)) {
      const double e = 1e-5;
      const Vec2 r = q - g->dp;
      const auto gx = grad(p1 + Vec2{e, 0.0});
      const double hxx = (gx->dp.x - g->dp.x) / e;
      Vec2 delta{hxx != 0.0 ? r.x / hxx : 0.0, 0.0};
      if (two_d) {
        const auto gy = grad(p1 + Vec2{0.0, e});
        const double hxy = (gx->dp.y - g->dp.y) / e;
        const double hyy = (gy->dp.y - g->dp.y) / e;
        const double det = hxx * hyy - hxy * hxy;
        if (det != 0.0)
          delta = {(hyy * r.x - hxy * r.y) / det, (hxx * r.y - hxy * r.x) / det};
      }
      best = std::max(best, objective(p1 + delta));
    }
  }
  return best;
}

double kappa(const Hamiltonian &model, double a, const EnvRealization &env,
             const GridSpec &grid, double p_radius, int p_grid) {
  double sup = -1.0;
  double min_h = kInf;
  const auto dirs = directions(grid.dim, 64);
  for (int idx : sample_indices(grid)) {
    const Vec2 x = grid.point(idx);
    double hmin = 0.0;
    const Vec2 centre = grid_argmin(model, x, env, p_radius, p_grid, &hmin);
    min_h = std::min(min_h, hmin);
    if (hmin > a)
      continue;
    for (const Vec2 &e : dirs) {
      const double r = ray_boundary(model, a, x, centre, e, env,
                                    2.0 * p_radius, p_grid);
      sup = std::max(sup, norm(centre + r * e));
    }
  }
  if (sup < 0.0) {
    if (a >= min_h - 1e-12)
      return 0.0;
    throw SubcriticalError("subcritical level: {H <= " + std::to_string(a) +
                           "} is empty at every sampled point");
  }
  return sup;
}

double sublevel_margin(const Hamiltonian &model, double a, double b,
                       const EnvRealization &env, const GridSpec &grid,
                       double p_radius, int p_grid) {
  if (!(b > a))
    throw ArgumentError("sublevel_margin needs b > a");
  const auto dirs = directions(grid.dim, 32);
  struct Sample {
    Vec2 x;
    std::vector<Vec2> boundary;
  };
  std::vector<Sample> samples;
  for (int idx : sample_indices(grid)) {
    const Vec2 x = grid.point(idx);
    double hmin = 0.0;
    const Vec2 centre = grid_argmin(model, x, env, p_radius, p_grid, &hmin);
    if (hmin > a)
      continue;
    Sample s{x, {}};
    for (const Vec2 &e : dirs)
      s.boundary.push_back(
          centre + ray_boundary(model, a, x, centre, e, env, 2.0 * p_radius,
                                p_grid) *
                       e);
    samples.push_back(std::move(s));
  }
  if (samples.empty())
    throw SubcriticalError("sublevel_margin: {H <= a} is empty everywhere");

  auto fits = [&](double rho) {
    for (const auto &s : samples)
      for (const Vec2 &p : s.boundary)
        for (const Vec2 &e : dirs)
          if (model.H(s.x, p + rho * e, env) > b)
            return false;
    return true;
  };
  double lo = 0.0, hi = 1.0;
  while (fits(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6)
      return lo;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

double lipschitz_radius(double theta, const Hamiltonian &model,
                        const EnvRealization &env) {
  if (theta < 0)
    throw ArgumentError("lipschitz_radius needs theta >= 0");
  const double floor = -model.alpha(0.0, env);
  auto ok = [&](double s) {
    const double v = model.beta_conjugate(s, env);
    return std::isfinite(v) && v - theta * s <= floor;
  };
  double lo = 0.0, hi = 1.0;
  while (ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e9)
      throw NumericError("speed bound diverges; growth envelopes are not "
                         "superlinear");
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

} // namespace wkam
