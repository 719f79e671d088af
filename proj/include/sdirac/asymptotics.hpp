#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sdirac/radial.hpp"

namespace sdirac {

// Rescaled problem U(r) = ε u(ε² r), V(r) = ε v(ε² r) with λ = 1/ε:
//   U' + U/r = (U²+V²)V - ε²(m-ω)V,   V' = -(U²+V²)U - ε²(m+ω)U.
// At ε = 0 this is the massless system solved by the bubble.

/// (U0, V0) = (2r/(4+r²), 4/(4+r²)).
State bubble(double r);
State bubble_derivative(double r);

/// Corrupted only exists so the verification suite can prove it notices.
enum class BubbleForm { Exact, Corrupted };

/// max over the grid of |U0' + U0/r - (U0²+V0²)V0| + |V0' + (U0²+V0²)U0|.
double bubble_residual(std::span<const double> grid, BubbleForm form = BubbleForm::Exact);

/// n points log-spaced on [a, b], endpoints included.
std::vector<double> log_grid(double a, double b, int n);
/// n points uniformly spaced on (0, b], i.e. b/n, 2b/n, ..., b.
std::vector<double> uniform_grid(double b, int n);

CubicFlow rescaled_flow(double epsilon, const Params& p);

/// Rescaled trajectory from (0,1), Taylor-started at tol.r0. ε = 0 gives the
/// limiting system. Sampled on `grid` when non-empty.
Trajectory integrate_rescaled(double epsilon, const Params& p, const Tolerances& tol, double r_end,
                              std::span<const double> grid = {}, Detectors detectors = {});

/// ε u_{1/ε}(ε² r) against U_ε(r) on the grid; returns the sup deviation
/// of |ΔU| + |ΔV|.
double rescaling_commutation(double epsilon, const Params& p, const Tolerances& tol,
                             std::span<const double> grid);

struct FirstOrderSample {
  double r;
  double h1;
  double k1;
};

/// First-order correction (h1, k1), linearised around the bubble, with
/// h1(0) = k1(0) = 0. Sampled on the grid (positive, increasing).
std::vector<FirstOrderSample> integrate_first_order(const Params& p, const Tolerances& tol,
                                                    std::span<const double> grid);

struct LogLawFit {
  double r_lo = 0.0;
  double r_hi = 0.0;
  /// h1 ≈ -c ln r, c from least squares through the origin.
  double c = 0.0;
  /// sup |h1 + c ln r| / ln r on the window.
  double relative_residual = 0.0;
  /// k1 ≈ slope·ln r + intercept; the slope is where the log growth lives.
  double k1_slope = 0.0;
  double k1_intercept = 0.0;
  /// sup (|h1|+|k1|)/ln r on the window.
  double growth_ratio = 0.0;
  std::vector<FirstOrderSample> samples;
};

LogLawFit fit_log_law(const Params& p, const Tolerances& tol, double r_lo = 1e3, double r_hi = 1e6,
                      int points = 61);

enum class RemainderRoute { Subtraction, RemainderODE };

/// Coefficients of the k2/h2 source terms. Derived comes from expanding the
/// rescaled system in powers of ε²; Uncorrected is an older coefficient set
/// with several wrong terms, kept so the oracle can be shown to reject it.
enum class SourceTerms { Derived, Uncorrected };

struct RemainderSample {
  double r;
  double h1, k1;
  double h2, k2;  // reported route
  double h2_other, k2_other;
};

struct PerturbationRecord {
  double epsilon = 0.0;
  RemainderRoute source = RemainderRoute::RemainderODE;
  SourceTerms terms = SourceTerms::Derived;
  std::vector<RemainderSample> samples;  // on (0, 1/ε]
  double max_discrepancy = 0.0;          // max |Δh2| + |Δk2|
  double relative_discrepancy = 0.0;     // over (0, agreement_window]
  double agreement_window = 5.0;
  double sup_norm = 0.0;                 // sup |h2|+|k2| of the reported route
  double threshold = 0.0;                // ε^{-3/2}
  bool threshold_breached = false;
  std::optional<double> breach_radius;
};

struct RemainderOptions {
  SourceTerms terms = SourceTerms::Derived;
  RemainderRoute report = RemainderRoute::RemainderODE;
  int points = 2000;
  double agreement_window = 5.0;
};

/// (h2, k2) on (0, 1/ε) by Subtraction, (U_ε - U0 - ε²h1)/ε⁴, and by
/// integrating the remainder ODE. A threshold breach is flagged, not thrown.
PerturbationRecord integrate_remainder(double epsilon, const Params& p, const Tolerances& tol,
                                       const RemainderOptions& opts = {});

struct RemainderBound {
  double C = 0.0;  // calibrated at the first ε
  std::vector<double> epsilons;
  std::vector<double> sup_norms;
  std::vector<double> reference;  // ε⁻¹ ln(1/ε)
  std::vector<double> ratios;     // sup / reference
  std::vector<bool> holds;
};

RemainderBound remainder_bound(std::span<const double> epsilons, const Params& p,
                               const Tolerances& tol);

/// First zero of V_ε on (0, horizon); horizon defaults to 1/ε.
std::optional<double> node_radius(double epsilon, const Params& p, const Tolerances& tol,
                                  std::optional<double> horizon = std::nullopt);

struct EpsilonStudy {
  double T = 10.0;
  std::vector<double> epsilons;
  std::vector<double> sup_errors;  // sup |U-U0|+|V-V0| on [0,T]
  std::vector<double> ratios;      // sup_errors[i] / sup_errors[i+1]
  std::vector<std::optional<double>> node_radii;
};

/// Throws DomainError unless the ε list is strictly decreasing inside (0,1).
EpsilonStudy convergence_study(std::span<const double> epsilons, double T, const Params& p,
                               const Tolerances& tol, int points = 2001);

}  // namespace sdirac
