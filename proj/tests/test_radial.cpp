#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdirac/radial.hpp"

using namespace sdirac;
using doctest::Approx;

namespace {
const Params P{1.0, 0.5, 0};
}

TEST_CASE("rhs_radial worked values") {
  CHECK(rhs_radial(1.0, {0, 0}, P) == State{0, 0});
  const State a = rhs_radial(1.0, {0, 1}, P);
  CHECK(a.u == Approx(0.5));
  CHECK(a.v == Approx(0.0));
  const State b = rhs_radial(2.0, {1, 0}, P);
  CHECK(b.u == Approx(-0.5));
  CHECK(b.v == Approx(-2.5));
  CHECK_THROWS_AS(rhs_radial(0.0, {1, 1}, P), DomainError);
  CHECK_THROWS_AS(rhs_radial(-1.0, {1, 1}, P), DomainError);
}

TEST_CASE("rhs_autonomous worked values") {
  CHECK(rhs_autonomous({0, 0}, P) == State{0, 0});
  const State e = rhs_autonomous({0, std::sqrt(0.5)}, P);
  CHECK(std::abs(e.u) < 1e-15);
  CHECK(e.v == 0.0);
  const State c = rhs_autonomous({0, 1}, P);
  CHECK(c.u == Approx(0.5));
  CHECK(c.v == 0.0);
  // with u = 0 the radial and autonomous fields agree at any r
  for (double r : {0.1, 1.0, 30.0}) CHECK(rhs_radial(r, {0, 0.3}, P) == rhs_autonomous({0, 0.3}, P));
}

TEST_CASE("hamiltonian worked values") {
  CHECK(hamiltonian({0, 0}, P) == 0.0);
  CHECK(hamiltonian({0, std::sqrt(0.5)}, P) == Approx(-0.0625).epsilon(1e-14));
  CHECK(hamiltonian({1, 0}, P) == Approx(1.0));
}

TEST_CASE("hamiltonian_rate worked values and sign") {
  CHECK(hamiltonian_rate(1.0, {0, 0.7}, P) == 0.0);
  CHECK(hamiltonian_rate(1.0, {1, 0}, P) == Approx(-2.5));
  CHECK(hamiltonian_rate(2.0, {1, 1}, P) == Approx(-1.75));
  CHECK_THROWS_AS(hamiltonian_rate(0.0, {1, 1}, P), DomainError);
}

TEST_CASE("r2h_rate worked values") {
  CHECK(r2h_rate(1.0, {0, 0}, P) == 0.0);
  CHECK(r2h_rate(1.0, {0, std::sqrt(2 * 0.5)}, P) == Approx(0.0));
  CHECK(r2h_rate(3.0, {0, 1}, P) == 0.0);
  CHECK_THROWS_AS(r2h_rate(-1.0, {1, 1}, P), DomainError);
}

TEST_CASE("equilibria") {
  const auto e = equilibria(P);
  CHECK(e[0].point == State{0, 0});
  CHECK(e[0].energy == 0.0);
  CHECK(e[1].point.v == Approx(0.70710678118654752));
  CHECK(e[2].point.v == Approx(-0.70710678118654752));
  CHECK(e[1].energy == Approx(-0.0625));
  const auto f = equilibria(Params{2.0, 1.0, 0});
  CHECK(f[1].point.v == 1.0);
  CHECK(f[2].point.v == -1.0);
  CHECK(f[1].energy == -0.25);
  for (const auto& q : e) CHECK(hamiltonian(q.point, P) == Approx(q.energy).epsilon(1e-15));
}

TEST_CASE("taylor_start series values") {
  const State s = taylor_start(1.0, P, 1e-3);
  CHECK(s.u == Approx(2.5e-4).epsilon(1e-12));
  // the series formula gives 1 - 3.125e-7 here
  CHECK(s.v == Approx(1.0 - 3.125e-7).epsilon(1e-15));
  const State z = taylor_start(std::sqrt(0.5), P, 1e-3);
  CHECK(std::abs(z.u) < 1e-15);
  CHECK(taylor_start(2.0, P, 1e-9).v == Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(taylor_start(0.0, P, 1e-3), DomainError);
  CHECK_THROWS_AS(taylor_start(-1.0, P, 1e-3), DomainError);
  CHECK_THROWS_AS(taylor_start(1.0, P, 0.0), DomainError);
  Params s1 = P;
  s1.angular_index = 1;
  CHECK_THROWS_AS(taylor_start(1.0, s1, 1e-3), DomainError);
}

TEST_CASE("taylor_start oracle: integrating from r0/10 reproduces the series at r0") {
  Tolerances tol = Tolerances::defaults(P);
  tol.rel = 1e-13;
  tol.abs = 1e-15;
  for (double lam : {0.5, 1.0, 2.0}) {
    for (double r0 : {1e-3, 1e-2}) {
      IntegrateOptions io;
      io.r_end = r0;
      const Trajectory t =
          integrate(System::radial(), r0 / 10, taylor_start(lam, P, r0 / 10), P, tol, io);
      const State want = taylor_start(lam, P, r0);
      const double scale = lam * std::pow(lam * lam + P.sum(), 2);
      CAPTURE(lam);
      CAPTURE(r0);
      // remainder is O(r0^3)
      CHECK(l1_norm(t.back().s - want) < scale * r0 * r0 * r0);
    }
  }
}

TEST_CASE("Tolerances defaults and validation") {
  const Tolerances t = Tolerances::defaults(P);
  CHECK(t.delta == Approx(2.5e-9));
  CHECK(t.rmax == Approx(80.0));
  CHECK_NOTHROW(t.validate());
  Tolerances bad = t;
  bad.rel = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = t;
  bad.r0 = 0.5;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS((Params{1.0, 1.0, 0}.validate()), DomainError);
  CHECK_THROWS_AS((Params{1.0, 0.0, 0}.validate()), DomainError);
  CHECK_THROWS_AS((Params{1.0, -0.2, 0}.validate()), DomainError);
}

TEST_CASE("autonomous run from an equilibrium stays put") {
  const Tolerances tol = Tolerances::defaults(P);
  IntegrateOptions io;
  io.r_end = 50.0;
  const State eq{0.0, std::sqrt(P.gap())};
  const Trajectory t = integrate(System::autonomous(), 0.0, eq, P, tol, io);
  // the wells are centres; what drifts is the accumulated local error
  for (const auto& s : t.samples) CHECK(l1_norm(s.s - eq) < 1e-7);
}

TEST_CASE("radial H trace is non-increasing within 10 tol.rel per sample") {
  const Tolerances tol = Tolerances::defaults(P);
  const Trajectory t = integrate_from_origin(1.0, P, tol);
  REQUIRE(t.samples.size() > 10);
  for (std::size_t i = 1; i < t.samples.size(); ++i) {
    CHECK(t.samples[i].r > t.samples[i - 1].r);
    CHECK(t.samples[i].H <= t.samples[i - 1].H + 10 * tol.rel * (1 + std::abs(t.samples[i - 1].H)));
  }
  CHECK(t.first(EventKind::RMaxReached) != nullptr);
}

TEST_CASE("shifted system with a huge shift tracks the autonomous one") {
  const Tolerances tol = Tolerances::defaults(P);
  IntegrateOptions io;
  io.detectors.v_sign_change = false;
  io.r_end = 10.0;
  for (int i = 0; i <= 100; ++i) io.grid.push_back(0.1 * i);
  const Trajectory a = integrate(System::shifted(1e6), 0.0, {0, 1}, P, tol, io);
  const Trajectory b = integrate(System::autonomous(), 0.0, {0, 1}, P, tol, io);
  REQUIRE(a.samples.size() == b.samples.size());
  double dev = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) dev = std::max(dev, l1_norm(a.samples[i].s - b.samples[i].s));
  // O(1/rho) with a constant from the separatrix start
  CHECK(dev < 1e-2);
  CHECK_THROWS_AS(System::shifted(0.0).flow(P), DomainError);
}

TEST_CASE("integrate preconditions") {
  const Tolerances tol = Tolerances::defaults(P);
  CHECK_THROWS_AS(integrate(System::radial(), 0.0, {0, 1}, P, tol), DomainError);
  Params s1 = P;
  s1.angular_index = 2;
  CHECK_THROWS_AS(integrate(System::radial(), 1e-3, {0, 1}, s1, tol), DomainError);
}

TEST_CASE("events: node payload, stop after nodes, eta crossing, grid sampling") {
  const Tolerances tol = Tolerances::defaults(P);
  IntegrateOptions io;
  io.detectors.stop_after_nodes = 1;
  const Trajectory t = integrate_from_origin(10.0, P, tol, io);
  REQUIRE(t.count(EventKind::VSignChange) == 1);
  const Event& e = *t.first(EventKind::VSignChange);
  CHECK(e.payload.step_lo <= e.r);
  CHECK(e.r <= e.payload.step_hi);
  CHECK(e.payload.index == 1);
  CHECK(std::abs(e.state.v) < 1e-6);
  CHECK(t.back().r == Approx(e.r));
  CHECK(t.first(EventKind::RMaxReached) == nullptr);

  IntegrateOptions g;
  g.grid = {0.5, 1.0, 1.5, 2.0};
  g.r_end = 2.0;
  const Trajectory s = integrate_from_origin(0.5, P, tol, g);
  REQUIRE(s.samples.size() == 4);
  CHECK(s.samples[2].r == 1.5);
  CHECK(std::abs(s.samples[1].H - hamiltonian(s.samples[1].s, P)) < 1e-15);

  // an autonomous run into the origin along the stable direction is not
  // available in closed form; use a radial start that already sits below eta
  IntegrateOptions z;
  z.detectors.norm_below_eta = true;
  z.detectors.stop_on_norm_below_eta = true;
  z.r_end = 5.0;
  const Trajectory n = integrate(System::radial(), 1.0, {0.0, 1e-9}, P, tol, z);
  CHECK(n.first(EventKind::NormBelowEta) != nullptr);
}

TEST_CASE("negative energy event lands strictly below -delta") {
  const Tolerances tol = Tolerances::defaults(P);
  IntegrateOptions io;
  io.detectors.negative_energy = true;
  io.detectors.stop_on_negative_energy = true;
  for (double lam : {1.0, 3.0, 10.0}) {
    const Trajectory t = integrate_from_origin(lam, P, tol, io);
    const Event* e = t.first(EventKind::EnteredNegativeEnergy);
    REQUIRE(e != nullptr);
    CHECK(e->payload.value < -tol.delta);
    CHECK(e->payload.value > -tol.delta - 1e-9);
  }
}

TEST_CASE("a datum that starts below -delta reports the event at the start") {
  const Tolerances tol = Tolerances::defaults(P);
  IntegrateOptions io;
  io.detectors.negative_energy = true;
  io.detectors.stop_on_negative_energy = true;
  const Trajectory t = integrate_from_origin(0.5, P, tol, io);
  const Event* e = t.first(EventKind::EnteredNegativeEnergy);
  REQUIRE(e != nullptr);
  CHECK(e->r == tol.r0);
  CHECK(e->payload.value < -0.04);
  CHECK(t.samples.size() == 1);
}
