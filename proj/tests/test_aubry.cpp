#include "doctest.h"

#include <cmath>

#include "pendulum_fixture.hpp"
#include "wkam/error.hpp"

using namespace wkam;

TEST_CASE("classical Aubry set of the pendulum is the top of the potential") {
  const auto &P = PendulumFixture::get();
  const auto m = classical_aubry(P.folded, P.ladder, 1e-9);
  CHECK(m.contains(0));
  CHECK_FALSE(m.contains(64));
  CHECK(m.spread_from({0}) <= 1.0);
  CHECK(m.warnings.empty());
  CHECK(classical_aubry(P.folded, P.ladder, -1.0).count() == 0);
  CHECK_FALSE(classical_aubry(P.folded, {P.dt, 2 * P.dt}, 1e-9).warnings.empty());
  CHECK_THROWS_AS(classical_aubry(P.folded, {}, 1e-9), ArgumentError);
}

TEST_CASE("flat Hamiltonian has a full Aubry set") {
  EnvSpec s;
  s.params["amplitude"] = 0.0;
  const GridSpec g{1, 32, 1.0};
  const ActionKernel k(make_mechanical(), sample_realization(s, 0), g, 1.0 / 16, 2.0);
  const auto folded = k.shifted(kernel_critical_value(k));
  CHECK(classical_aubry(folded, {1.0 / 16, 1.0, 4.0}, 1e-9).count() == g.size());
  const auto m = detect_aubry(GridFn(g, 0.0), folded, {1.0 / 16, 1.0, 4.0});
  CHECK(m.count() == g.size());
}

TEST_CASE("w and the detected mask") {
  const auto &P = PendulumFixture::get();
  CHECK(P.w.finite());
  CHECK(P.w[0] == 0.0);
  CHECK(check_monotone_semigroup(P.w, P.folded, 0.0, P.ladder).pass);
  CHECK(P.mask.contains(0));
  CHECK(P.mask.count() < P.grid.size() / 4);
  CHECK(P.mask.threshold == default_aubry_threshold(P.w));
  CHECK(default_aubry_threshold(P.w) ==
        doctest::Approx(1e-9 * (1 + sup_norm(P.w))));
  const auto sweep = threshold_sweep(P.mask);
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[0].count() <= sweep[1].count());
  CHECK(sweep[1].count() <= sweep[2].count());
  CHECK(sweep[1].count() == P.mask.count());
  // T_t^+ w = w on the mask as well.
  const auto up = lax_plus(P.w, P.folded, 4 * P.dt).value;
  for (int x : P.mask.points())
    CHECK(std::abs(up[x] - P.w[x]) <= P.mask.threshold);
}

TEST_CASE("build_w normalizes and averages") {
  const auto &P = PendulumFixture::get();
  const auto lib = default_library(P.folded, 2, {});
  REQUIRE(lib.size() >= 1);
  SubsolutionLibrary one;
  one.add(lib.members[0].v + 5.0, "shifted cone");
  const auto w1 = build_w(one, P.folded);
  CHECK(sup_distance(w1, lib.members[0].v) <= 1e-12);
  CHECK_THROWS_AS(build_w(SubsolutionLibrary{}, P.folded), ArgumentError);
  SubsolutionLibrary bad = one;
  bad.add(GridFn::sample(P.grid, [](Vec2 x) { return std::sin(2 * M_PI * x.x); }),
          "steep sine");
  CHECK_THROWS_AS(build_w(bad, P.folded), RefusalError);
  CHECK_THROWS_AS(default_library(P.folded, 0, {}), ArgumentError);
}

TEST_CASE("fixed point sets") {
  const auto &P = PendulumFixture::get();
  const auto fp = fixed_point_set(P.w, P.folded, 4 * P.dt, 1e-9);
  CHECK(std::find(fp.begin(), fp.end(), 0) != fp.end());
  const auto steep =
      GridFn::sample(P.grid, [](Vec2 x) { return std::sin(2 * M_PI * x.x); });
  CHECK_THROWS_AS(fixed_point_set(steep, P.folded, 4 * P.dt, 1e-9), RefusalError);
}

TEST_CASE("Lax extension") {
  const auto &P = PendulumFixture::get();
  const std::vector<int> src{0, 40, 90};
  const auto S = kernel_semidistance(P.folded, src);
  const auto u0 = lax_extension(GridFn(P.grid, 0.0), S);
  for (int x = 0; x < P.grid.size(); ++x) {
    double best = S(0, x);
    for (int y : src)
      best = std::min(best, S(y, x));
    CHECK(u0[x] == best);
  }
  // Data that is already S-Lipschitz on the sources is reproduced there.
  for (int y : src)
    CHECK(lax_extension(P.w, S)[y] == doctest::Approx(P.w[y]).epsilon(1e-12));
  CHECK(check_monotone_semigroup(u0, P.folded, 0.0, {P.dt, 2 * P.dt, 4 * P.dt}).pass);
  Semidistance empty;
  empty.grid = P.grid;
  CHECK_THROWS_AS(lax_extension(GridFn(P.grid, 0.0), empty), ArgumentError);
}

TEST_CASE("calibrated curve on the mask") {
  const auto &P = PendulumFixture::get();
  const auto cur = extract_calibrated_curve(0, P.w, P.folded, 32, P.mask);
  CHECK(cur.pass);
  CHECK(cur.exits == 0);
  CHECK(cur.points.size() == 33);
  CHECK(cur.points.back() == 0);
  CHECK(cur.max_defect <= 1e-9);
  CHECK_THROWS_AS(extract_calibrated_curve(-1, P.w, P.folded, 4, P.mask),
                  ArgumentError);
}
