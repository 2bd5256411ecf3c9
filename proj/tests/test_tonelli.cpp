#include "doctest.h"

#include <cmath>

#include "pendulum_fixture.hpp"
#include "wkam/error.hpp"
#include "wkam/tonelli.hpp"

using namespace wkam;

namespace {
EnvRealization cosine(double amplitude) {
  EnvSpec s;
  s.params["amplitude"] = amplitude;
  return sample_realization(s, 0);
}
} // namespace

TEST_CASE("flow: free motion and rest points") {
  const auto mech = make_mechanical();
  const auto free = flow_integrate(*mech, cosine(0.0), {{0.1, 0}, {0.7, 0}, 0}, 3.0, 1e-2);
  CHECK(free.states.back().x.x == doctest::Approx(0.1 + 2.1).epsilon(1e-12));
  CHECK(free.states.back().p.x == doctest::Approx(0.7).epsilon(1e-12));
  const auto rest = flow_integrate(*mech, cosine(1.0), {{0.5, 0}, {0, 0}, 0}, 5.0, 1e-2);
  CHECK(std::abs(rest.states.back().x.x - 0.5) <= 1e-12);
  CHECK(std::abs(rest.states.back().p.x) <= 1e-12);
  const auto back = flow_integrate(*mech, cosine(0.0), {{0.1, 0}, {0.7, 0}, 0}, -1.0, 1e-2);
  CHECK(back.states.back().x.x == doctest::Approx(0.1 - 0.7).epsilon(1e-12));
}

TEST_CASE("flow: RK4 energy drift") {
  const auto tr = flow_integrate(*make_mechanical(), cosine(1.0),
                                 {{0.2, 0}, {1.0, 0}, 0}, 10.0, 1e-3);
  CHECK(tr.max_drift <= 1e-9);
  CHECK_THROWS_AS(flow_integrate(*make_eikonal(), cosine(1.0), {}, 1.0, 1e-3),
                  RefusalError);
  CHECK_THROWS_AS(flow_integrate(*make_mechanical(), cosine(1.0), {}, 1.0, 0.0),
                  ArgumentError);
}

TEST_CASE("discrete second differences") {
  const GridSpec g{1, 128, 1.0};
  const auto smooth = GridFn::sample(g, [](Vec2 x) {
    return -std::cos(2 * M_PI * x.x) / (4 * M_PI * M_PI);
  });
  const auto sd = estimate_semiconcavity(smooth);
  CHECK(sd.K_upper == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(sd.K_lower == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK(sd.semiconcave(1.0, 1e-3));
  CHECK(sd.semiconvex(1.0, 1e-3));
  // The torus distance to 0 has a convex kink at 0 and a concave one at 1/2.
  const auto dist = GridFn::sample(g, [](Vec2 x) { return std::min(x.x, 1 - x.x); });
  const auto kd = estimate_semiconcavity(dist);
  CHECK(kd.upper_unbounded());
  CHECK(kd.lower_unbounded());
  CHECK(kd.argmax == 0);
  CHECK(kd.argmin == 64);
  CHECK(kd.unbounded_threshold == doctest::Approx(128.0));
  const GridSpec g2{2, 32, 1.0};
  const auto bowl = GridFn::sample(g2, [](Vec2 x) {
    return -(std::cos(2 * M_PI * x.x) + std::cos(2 * M_PI * x.y)) / (4 * M_PI * M_PI);
  });
  CHECK(estimate_semiconcavity(bowl).K_upper == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("regular window inequalities") {
  const auto env = cosine(1.0);
  const auto mech = make_mechanical();
  const auto w = regular_window(2.0, 1.0, *mech, env);
  CHECK(w.t0 > 0.0);
  CHECK(w.contraction_factor() < 0.5);
  CHECK(w.ell * w.t0 < 0.25);
  CHECK(w.t0 * w.speed < 0.25);
  CHECK(w.A == doctest::Approx(2 * std::exp(w.ell * w.t0) * std::sqrt(2.0)));
  CHECK(mech->alpha(w.rho, env) <= mech->beta(2.0, env) + 1e-12);
  const auto flat = regular_window(2.0, 0.0, *mech, env);
  CHECK(flat.t0 >= w.t0);
  CHECK_THROWS_AS(regular_window(0.0, 1.0, *mech, env), ArgumentError);
  CHECK_THROWS_AS(regular_window(1.0, -1.0, *mech, env), ArgumentError);
  const double k = contraction_constant(w, *mech, env, w.t0, 50, 3, 1e-4);
  CHECK(k <= 0.5);
  CHECK(k == contraction_constant(w, *mech, env, w.t0, 50, 3, 1e-4));
}

TEST_CASE("DP minimizers follow characteristics") {
  const auto &P = PendulumFixture::get();
  const auto u = GridFn::sample(P.grid, [](Vec2 x) {
    return 0.05 * std::sin(2 * M_PI * x.x);
  });
  for (int x : {10, 40, 100}) {
    const auto rep = verify_minimizer_is_characteristic(u, P.kernel, x, 8 * P.dt, 1e-3);
    REQUIRE(rep.chain.size() == 9);
    CHECK(rep.flow.size() == rep.chain.size());
    CHECK(rep.max_deviation <= 4 * P.grid.h());
  }
}

TEST_CASE("Bernard regularization of the flat corrector is exact") {
  const GridSpec g{1, 32, 1.0};
  const ActionKernel k(make_mechanical(), cosine(0.0), g, 1.0 / 16, 2.0);
  const GridFn zero(g, 0.0);
  const auto mask = detect_aubry(zero, k, {1.0 / 16, 1.0});
  const auto r = bernard_regularize(zero, k, 0.25, 0.125, mask);
  CHECK(r.value.values == zero.values);
  REQUIRE(r.certificates.size() == 5);
  for (size_t i = 0; i < 4; ++i)
    CHECK(r.certificates[i].pass);
  // Every cell is on the mask, so strictness has nothing to certify.
  CHECK_FALSE(r.certificates[4].pass);
  CHECK_FALSE(r.warnings.empty());
  const ActionKernel nk(make_nonstrict(), cosine(0.0), g, 1.0 / 16, 2.0);
  CHECK_THROWS_AS(bernard_regularize(zero, nk, 0.25, 0.125, mask), RefusalError);
}

TEST_CASE("Bernard regularization of the pendulum w") {
  const auto &P = PendulumFixture::get();
  const auto v = build_strict_strictly_convex(P.w, P.folded, 0.1, 6);
  const auto r = bernard_regularize(v, P.folded, 0.25, 1.0 / 32, P.mask);
  for (const auto &c : r.certificates) {
    INFO(c.name, " value ", c.value, " bound ", c.bound);
    CHECK(c.pass);
  }
  CHECK(r.pass());
}

TEST_CASE("envelope identity is exact for quadratic data and H") {
  // w = -K (x - 1/2)^2 on the cell: central differences are exact, so the
  // subtangent paraboloid coincides with w near y and lies below it elsewhere.
  const GridSpec g{1, 128, 1.0};
  const ActionKernel k(make_mechanical(), cosine(0.0), g, 1.0 / 64, 2.0);
  const double K = 1.0;
  const auto w = GridFn::sample(g, [&](Vec2 x) { return -K * (x.x - 0.5) * (x.x - 0.5); });
  const auto rep = check_envelope_identity(w, k, 4.0 / 64, K, {40, 64, 90});
  CHECK(rep.max_discrepancy <= 1e-12);
}

TEST_CASE("paraboloid evolutions never exceed the evolved datum") {
  const auto &P = PendulumFixture::get();
  const auto u = GridFn::sample(P.grid, [](Vec2 x) {
    return 0.05 * std::sin(2 * M_PI * x.x);
  });
  const auto rep = check_envelope_identity(u, P.kernel, 4 * P.dt, 2.0, {0, 20, 50, 77});
  REQUIRE(rep.discrepancy.size() == 4);
  for (double d : rep.discrepancy)
    CHECK(d >= -1e-12);
}

TEST_CASE("kernel semiconcavity is set by the one-step table") {
  const auto &P = PendulumFixture::get();
  const double k1 = kernel_semiconcavity(P.kernel, P.dt);
  const double k4 = kernel_semiconcavity(P.kernel, 4 * P.dt);
  CHECK(std::isfinite(k1));
  CHECK(k1 > 0.0);
  CHECK(k4 <= k1);
}
