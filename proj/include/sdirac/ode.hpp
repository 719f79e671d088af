#pragma once

// Dormand-Prince 5(4) with the Hairer continuous extension. Every radial
// system in the library funnels through this one stepper so that event
// location, dense sampling and step-size policy behave identically.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace sdirac::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

struct StepControl {
  double rel = 1e-10;
  double abs = 1e-10;
  double initial_step = 0.0;  // 0 picks a step from the starting slope
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 5'000'000;
};

enum class StopReason { ReachedEnd, Observer };

/// Raised when the step size underflows or the step budget runs out.
/// Carries the last accepted point.
template <std::size_t N>
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, double r, const Vec<N>& y)
      : std::runtime_error(what), r_(r), y_(y) {}
  double radius() const { return r_; }
  const Vec<N>& last() const { return y_; }

 private:
  double r_;
  Vec<N> y_;
};

/// One accepted step together with its interpolant.
template <std::size_t N>
class DenseStep {
 public:
  double r0 = 0.0;
  double r1 = 0.0;
  Vec<N> y0{};
  Vec<N> y1{};

  Vec<N> at(double r) const {
    const double h = r1 - r0;
    const double t = (r - r0) / h;
    const double s = 1.0 - t;
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = coef[0][i] + t * (coef[1][i] + s * (coef[2][i] + t * (coef[3][i] + s * coef[4][i])));
    return out;
  }

  Vec<N> derivative_at(double r) const {
    const double h = r1 - r0;
    const double t = (r - r0) / h;
    const double s = 1.0 - t;
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i) {
      const double p = coef[2][i] + t * (coef[3][i] + s * coef[4][i]);
      const double dp = coef[3][i] + (1.0 - 2.0 * t) * coef[4][i];
      const double q = coef[1][i] + s * p;
      const double dq = -p + s * dp;
      out[i] = (q + t * dq) / h;
    }
    return out;
  }

  // interpolation coefficients, filled by integrate()
  std::array<Vec<N>, 5> coef{};
};

namespace detail {

// Butcher tableau
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// continuous extension
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

template <std::size_t N>
double scaled_norm(const Vec<N>& err, const Vec<N>& y0, const Vec<N>& y1,
                   const StepControl& c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sc = c.abs + c.rel * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(N));
}

}  // namespace detail

/// Integrates y' = rhs(r, y) from r_start to r_end (r_end > r_start).
/// `observer(const DenseStep<N>&)` is called after every accepted step and
/// returns false to stop early. Throws StepFailure on step underflow.
template <std::size_t N, class Rhs, class Observer>
StopReason integrate(Rhs&& rhs, double r_start, Vec<N> y, double r_end, const StepControl& ctl,
                     Observer&& observer) {
  using namespace detail;
  if (!(r_end > r_start)) return StopReason::ReachedEnd;

  double r = r_start;
  Vec<N> k1 = rhs(r, y);
  Vec<N> k2, k3, k4, k5, k6, k7, tmp, y_new, err;

  double h = ctl.initial_step;
  if (!(h > 0.0)) {
    double ny = 0.0, nd = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = ctl.abs + ctl.rel * std::abs(y[i]);
      ny += (y[i] / sc) * (y[i] / sc);
      nd += (k1[i] / sc) * (k1[i] / sc);
    }
    ny = std::sqrt(ny / N);
    nd = std::sqrt(nd / N);
    h = (ny < 1e-5 || nd < 1e-5) ? 1e-6 : 0.01 * ny / nd;
    h = std::min(h, 1e-2 * (r_end - r_start) + 1e-300);
  }
  h = std::min(h, ctl.max_step);

  DenseStep<N> step;
  std::size_t accepted = 0;
  double fac_old = 1e-4;
  bool last_rejected = false;

  while (r < r_end) {
    if (++accepted > ctl.max_steps)
      throw StepFailure<N>("step budget exhausted", r, y);
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r));
    if (h < h_min) throw StepFailure<N>("step size underflow", r, y);
    bool last = false;
    if (r + h >= r_end) {
      h = r_end - r;
      last = true;
    }

    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    k2 = rhs(r + c2 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = rhs(r + c3 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = rhs(r + c4 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = rhs(r + c5 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double r_new = last ? r_end : r + h;
    k6 = rhs(r_new, tmp);
    for (std::size_t i = 0; i < N; ++i)
      y_new[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    k7 = rhs(r_new, y_new);
    for (std::size_t i = 0; i < N; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

    double e = scaled_norm(err, y, y_new, ctl);
    if (!std::isfinite(e)) e = 1e10;

    if (e <= 1.0) {
      // Lund stabilisation, as in Hairer's DOPRI5
      const double fac = std::pow(e, 0.17) * std::pow(fac_old, -0.04) / 0.9;
      double h_next = h / std::clamp(fac, 0.1, 5.0);
      if (last_rejected) h_next = std::min(h_next, h);
      fac_old = std::max(e, 1e-4);

      step.r0 = r;
      step.r1 = r_new;
      step.y0 = y;
      step.y1 = y_new;
      for (std::size_t i = 0; i < N; ++i) {
        const double dy = y_new[i] - y[i];
        const double bspl = h * k1[i] - dy;
        step.coef[0][i] = y[i];
        step.coef[1][i] = dy;
        step.coef[2][i] = bspl;
        step.coef[3][i] = dy - h * k7[i] - bspl;
        step.coef[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                           d7 * k7[i]);
      }
      r = r_new;
      y = y_new;
      k1 = k7;
      last_rejected = false;
      if (!observer(static_cast<const DenseStep<N>&>(step))) return StopReason::Observer;
      h = std::min(h_next, ctl.max_step);
    } else {
      h = h / std::min(10.0, std::pow(e, 0.2) / 0.9);
      last_rejected = true;
    }
  }
  return StopReason::ReachedEnd;
}

/// Locates a sign change of g along a dense step by bisection on the
/// interpolant. The returned radius is on the far side of the change (g has
/// the sign of g(hi) there), within |g| <= tol or where the bracket collapses.
template <std::size_t N, class G>
double locate_root(const DenseStep<N>& step, double lo, double hi, G&& g, double tol) {
  const bool lo_negative = g(lo, step.at(lo)) < 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid, step.at(mid));
    const bool same_as_lo = (gm < 0.0) == lo_negative;
    if (same_as_lo) {
      lo = mid;
    } else {
      hi = mid;
      if (std::abs(gm) <= tol) break;
    }
  }
  return hi;
}

}  // namespace sdirac::ode
