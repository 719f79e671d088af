#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdirac/ode.hpp"

using namespace sdirac::ode;

TEST_CASE("exponential decay is reproduced to tolerance") {
  StepControl ctl;
  ctl.rel = 1e-12;
  ctl.abs = 1e-14;
  Vec<1> last{};
  double r_last = 0.0;
  auto why = integrate<1>([](double, const Vec<1>& y) { return Vec<1>{-y[0]}; }, 0.0, Vec<1>{1.0},
                          5.0, ctl, [&](const DenseStep<1>& s) {
                            last = s.y1;
                            r_last = s.r1;
                            return true;
                          });
  CHECK(why == StopReason::ReachedEnd);
  CHECK(r_last == 5.0);
  CHECK(last[0] == doctest::Approx(std::exp(-5.0)).epsilon(1e-10));
}

TEST_CASE("dense output interpolates inside a step") {
  StepControl ctl;
  ctl.rel = 1e-11;
  ctl.abs = 1e-13;
  double worst = 0.0, worst_d = 0.0;
  // harmonic oscillator: y = (cos r, -sin r)
  integrate<2>([](double, const Vec<2>& y) { return Vec<2>{y[1], -y[0]}; }, 0.0, Vec<2>{1.0, 0.0},
               10.0, ctl, [&](const DenseStep<2>& s) {
                 for (double t : {0.1, 0.37, 0.5, 0.81}) {
                   const double r = s.r0 + t * (s.r1 - s.r0);
                   worst = std::max(worst, std::abs(s.at(r)[0] - std::cos(r)));
                   worst_d = std::max(worst_d, std::abs(s.derivative_at(r)[0] + std::sin(r)));
                 }
                 return true;
               });
  CHECK(worst < 1e-8);
  CHECK(worst_d < 1e-7);
}

TEST_CASE("observer can stop the integration") {
  int calls = 0;
  auto why = integrate<1>([](double, const Vec<1>&) { return Vec<1>{1.0}; }, 0.0, Vec<1>{0.0}, 100.0,
                          StepControl{}, [&](const DenseStep<1>&) { return ++calls < 3; });
  CHECK(why == StopReason::Observer);
  CHECK(calls == 3);
}

TEST_CASE("empty interval returns at once") {
  int calls = 0;
  auto why = integrate<1>([](double, const Vec<1>& y) { return y; }, 1.0, Vec<1>{1.0}, 1.0,
                          StepControl{}, [&](const DenseStep<1>&) { return ++calls > 0; });
  CHECK(why == StopReason::ReachedEnd);
  CHECK(calls == 0);
}

TEST_CASE("finite-time blow-up raises StepFailure with the last good point") {
  // y' = y², y(0) = 1 blows up at r = 1
  bool thrown = false;
  try {
    integrate<1>([](double, const Vec<1>& y) { return Vec<1>{y[0] * y[0]}; }, 0.0, Vec<1>{1.0}, 2.0,
                 StepControl{}, [](const DenseStep<1>&) { return true; });
  } catch (const StepFailure<1>& f) {
    thrown = true;
    CHECK(f.radius() < 1.0);
    CHECK(f.radius() > 0.99);
    CHECK(f.last()[0] > 1e3);
  }
  CHECK(thrown);
}

TEST_CASE("locate_root returns a point past the sign change") {
  DenseStep<1> captured;
  integrate<1>([](double, const Vec<1>&) { return Vec<1>{1.0}; }, 0.0, Vec<1>{-0.3}, 1.0,
               StepControl{}, [&](const DenseStep<1>& s) {
                 if (s.y0[0] < 0.0 && s.y1[0] >= 0.0) {
                   captured = s;
                   return false;
                 }
                 return true;
               });
  const double r = locate_root(captured, captured.r0, captured.r1,
                               [](double, const Vec<1>& y) { return y[0]; }, 1e-14);
  CHECK(r == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(captured.at(r)[0] >= 0.0);
}
