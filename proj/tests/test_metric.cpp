#include "doctest.h"

#include <cmath>

#include "wkam/error.hpp"
#include "wkam/metric.hpp"

using namespace wkam;

namespace {
EnvRealization cosine(double amplitude) {
  EnvSpec s;
  s.params["amplitude"] = amplitude;
  return sample_realization(s, 0);
}
const GridSpec kGrid{1, 64, 1.0};
} // namespace

TEST_CASE("support function closed forms") {
  const auto env = cosine(1.0);
  const auto mech = make_mechanical();
  const auto eik = make_eikonal();
  for (double x : {0.0, 0.2, 0.5}) {
    const double v = env.value({x, 0});
    CHECK(support_sigma(*mech, 2.0, {x, 0}, {0.3, 0}, env) ==
          doctest::Approx(0.3 * std::sqrt(2 * (2.0 - v))));
    CHECK(support_sigma(*eik, 2.0, {x, 0}, {-0.3, 0}, env) ==
          doctest::Approx(0.3 * (2.0 + v)));
  }
  CHECK_THROWS_AS(support_sigma(*mech, 0.5, {0, 0}, {1, 0}, env),
                  SubcriticalError);
}

TEST_CASE("flat eikonal semidistance is the torus distance") {
  const auto flat = cosine(0.0);
  const auto S = semidistance(*make_eikonal(), 1.0, {0, 10}, flat, kGrid, 0.0);
  for (int x = 0; x < kGrid.size(); ++x) {
    CHECK(S(0, x) == doctest::Approx(kGrid.distance(0, x)).epsilon(1e-12));
    CHECK(S(10, x) == doctest::Approx(kGrid.distance(10, x)).epsilon(1e-12));
  }
  CHECK(S.from(10)[10] == 0.0);
  CHECK_THROWS_AS(S.from(3), ArgumentError);
}

TEST_CASE("semidistance triangle inequality") {
  const auto env = cosine(1.0);
  const std::vector<int> src{0, 9, 23, 40};
  const auto S = semidistance(*make_mechanical(), 1.2, src, env, kGrid, 0.0);
  for (int a : src)
    for (int b : src)
      for (int x = 0; x < kGrid.size(); ++x)
        CHECK(S(a, x) <= S(a, b) + S(b, x) + 1e-12);
}

TEST_CASE("levels below the critical value carry a negative cycle") {
  const auto env = cosine(1.0);
  try {
    semidistance(*make_mechanical(), 0.5, {0}, env, kGrid, 0.0);
    FAIL("expected a negative cycle");
  } catch (const SubcriticalError &e) {
    REQUIRE(!e.cycle().empty());
    CHECK(e.cycle().front() == e.cycle().back());
  }
  const auto g = build_cost_graph(*make_mechanical(), 0.5, env, kGrid, 0.1);
  REQUIRE(g.empty_edge.has_value());
  const auto cyc = g.empty_cycle();
  CHECK(cyc.front() == cyc.back());
  CHECK_THROWS_AS(require_no_negative_cycle(g), SubcriticalError);
}

TEST_CASE("local subsolution test") {
  const auto env = cosine(1.0);
  const auto mech = make_mechanical();
  const GridFn zero(kGrid, 0.0);
  CHECK(check_subsolution(zero, *mech, 1.0, env).pass);
  const auto low = check_subsolution(zero, *mech, 0.5, env);
  CHECK_FALSE(low.pass);
  CHECK(low.excess == doctest::Approx(0.5));
  CHECK(low.worst == 0);
  // sin(2 pi x) / 4 has slope at most pi / 2, so H <= pi^2 / 8 + 1.
  const auto s = GridFn::sample(
      kGrid, [](Vec2 x) { return 0.25 * std::sin(2 * M_PI * x.x); });
  CHECK(check_subsolution(s, *mech, 1.0 + M_PI * M_PI / 8, env).pass);
  CHECK_FALSE(check_subsolution(s, *mech, 1.0, env).pass);
}

TEST_CASE("free critical value examples") {
  const auto env = cosine(1.0);
  const auto flat = cosine(0.0);
  const auto pend = critical_value_free(*make_mechanical(), env, kGrid, 0.0, 1e-3);
  CHECK(pend.value == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(pend.lo <= pend.hi);
  CHECK(pend.hi - pend.lo <= 1e-3);
  CHECK_FALSE(pend.certificate.empty());
  const auto eik = critical_value_free(*make_eikonal(), env, kGrid, 0.0, 1e-3);
  CHECK(eik.value == doctest::Approx(-env.bounds().min).epsilon(2e-3));
  const auto zero = critical_value_free(*make_mechanical(), flat, kGrid, 0.0, 1e-3);
  CHECK(std::abs(zero.value) <= 1e-3);
}

TEST_CASE("stationary estimate on a periodic environment") {
  EnvSpec s;
  s.params["amplitude"] = 1.0;
  const auto est =
      critical_value_stationary(*make_mechanical(), s, 3, {1.0, 2.0}, 32, 1e-3);
  REQUIRE(est.spread.has_value());
  CHECK(*est.spread == 0.0);
  CHECK(est.estimate == doctest::Approx(1.0).epsilon(2e-3));
  const auto one =
      critical_value_stationary(*make_mechanical(), s, 1, {1.0}, 32, 1e-3);
  CHECK_FALSE(one.spread.has_value());
  CHECK(one.spreads.empty());
}

TEST_CASE("cycle text lists one point per line") {
  const auto text = format_cycle(kGrid, {1, 2, 1});
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
