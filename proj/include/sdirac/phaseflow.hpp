#pragma once

#include <vector>

#include "sdirac/radial.hpp"

namespace sdirac {

struct LevelSet {
  double level = 0.0;
  double half_width = 0.0;  // box [-w, w]² that was contoured
  int resolution = 0;
  /// Chained contour pieces in the (u, v) plane.
  std::vector<std::vector<State>> polylines;
  std::vector<bool> closed;

  std::size_t point_count() const;
  /// max |H(point) - level| over every emitted point
  double max_residual(const Params& p) const;
};

/// Marching-squares contour of H = level on the box of half-width
/// 2 sqrt(1 + level + m + ω), `resolution` cells per side. Edge crossings
/// are refined on the exact H. At the minimum -(m-ω)²/4 the set is the two
/// points (0, ±sqrt(m-ω)); below it the set is empty.
LevelSet level_set(double level, const Params& p, int resolution = 512);

struct AttractionReport {
  double lambda = 0.0;
  int k = 0;                 // nodes before entering {H < -delta}
  double entered_at = 0.0;
  double r_end = 0.0;
  State terminal{};
  double terminal_H = 0.0;
  double terminal_distance = 0.0;
  State nearest_equilibrium{};
  int u_sign_alternations = 0;
  /// largest increase of H between consecutive samples after entry
  double max_energy_increase = 0.0;
};

/// Continues an A(k) trajectory to tol.rmax. Throws DomainError when the
/// datum does not classify as A(k).
AttractionReport attraction_report(double lambda, const Params& p, const Tolerances& tol);

/// sup over [0, T] of |Δu| + |Δv| between the shifted system
/// u' + u/(r+ρ) = ... and the autonomous system, both started at `start`.
double stability_compare(double rho, State start, double T, const Params& p, const Tolerances& tol,
                         int points = 1001);

}  // namespace sdirac
