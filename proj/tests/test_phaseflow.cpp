#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdirac/phaseflow.hpp"
#include "sdirac/shooting.hpp"

using namespace sdirac;
using doctest::Approx;

namespace {
const Params P{1.0, 0.5, 0};
const Tolerances TOL = Tolerances::defaults(P);

double distance_to(const LevelSet& ls, State q) {
  double best = INFINITY;
  for (const auto& pl : ls.polylines)
    for (const State& s : pl) best = std::min(best, std::hypot(s.u - q.u, s.v - q.v));
  return best;
}
}  // namespace

TEST_CASE("zero level passes through the origin and (0, ±1)") {
  const LevelSet ls = level_set(0.0, P);
  CHECK(ls.point_count() > 100);
  CHECK(ls.max_residual(P) < 1e-9);
  CHECK(distance_to(ls, {0, 0}) < 1e-6);
  CHECK(distance_to(ls, {0, 1}) < 1e-2);
  CHECK(distance_to(ls, {0, -1}) < 1e-2);
  CHECK(ls.polylines.size() == ls.closed.size());
}

TEST_CASE("level set at and below the minimum") {
  const double hmin = -0.25 * P.gap() * P.gap();
  const LevelSet at = level_set(hmin, P);
  REQUIRE(at.point_count() == 2);
  CHECK(at.polylines[0][0].v == Approx(std::sqrt(P.gap())));
  CHECK(at.polylines[1][0].v == Approx(-std::sqrt(P.gap())));
  CHECK(level_set(-1.0, P).point_count() == 0);
  CHECK_THROWS_AS(level_set(0.0, P, 1), DomainError);
}

TEST_CASE("level set residual for several levels") {
  for (double c : {-0.05, 0.1, 1.0, 5.0}) {
    CAPTURE(c);
    const LevelSet ls = level_set(c, P, 256);
    CHECK(ls.point_count() > 0);
    CHECK(ls.max_residual(P) < 1e-9);
  }
  // slightly above the minimum: two small loops around the wells
  const LevelSet wells = level_set(-0.0624, P, 512);
  CHECK(wells.polylines.size() == 2);
  CHECK(wells.closed[0]);
  CHECK(wells.closed[1]);
}

TEST_CASE("attraction of an A(0) datum") {
  const AttractionReport rep = attraction_report(0.5, P, TOL);
  CHECK(rep.k == 0);
  CHECK(rep.nearest_equilibrium.v == Approx(std::sqrt(P.gap())));
  CHECK(rep.terminal_distance < 0.02);
  CHECK(rep.u_sign_alternations >= 2);
  CHECK(rep.terminal_H < 0.0);
  CHECK(rep.terminal_H >= -0.25 * P.gap() * P.gap() - 1e-12);
  CHECK(rep.max_energy_increase <= 1e-9);

  Tolerances longer = TOL;
  longer.rmax = 2 * TOL.rmax;
  const AttractionReport far = attraction_report(0.5, P, longer);
  CHECK(far.terminal_distance < rep.terminal_distance);
}

TEST_CASE("attraction after one node ends near the lower well") {
  const Classification c = classify(2.5, P, TOL);
  REQUIRE(c.verdict == Verdict::A);
  REQUIRE(c.k == 1);
  const AttractionReport rep = attraction_report(2.5, P, TOL);
  CHECK(rep.k == 1);
  CHECK(rep.nearest_equilibrium.v == Approx(-std::sqrt(P.gap())));
}

TEST_CASE("attraction report refuses data outside A") {
  // a horizon too short to decide anything
  Tolerances short_run = TOL;
  short_run.rmax = 0.5;
  REQUIRE(classify(3.0, P, short_run).verdict != Verdict::A);
  CHECK_THROWS_AS(attraction_report(3.0, P, short_run), DomainError);
}

TEST_CASE("shifted system approaches the autonomous one") {
  const State start{0.0, 0.9};
  double prev = INFINITY;
  for (double rho : {10.0, 20.0, 40.0, 80.0}) {
    const double d = stability_compare(rho, start, 10.0, P, TOL);
    CAPTURE(rho);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(stability_compare(10.0, start, 0.0, P, TOL) == 0.0);
  CHECK_THROWS_AS(stability_compare(0.0, start, 1.0, P, TOL), DomainError);
  CHECK_THROWS_AS(stability_compare(1.0, start, -1.0, P, TOL), DomainError);
}

TEST_CASE("equilibrium start stays put in both systems") {
  const State well{0.0, std::sqrt(P.gap())};
  CHECK(stability_compare(5.0, well, 10.0, P, TOL) < 1e-12);
}
