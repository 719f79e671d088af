#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sdirac/types.hpp"

namespace sdirac {

// ---------------------------------------------------------------------------
// Right-hand sides and energies
// ---------------------------------------------------------------------------

/// (u', v') for u' + (S+1)u/r = (u²+v²)v - (m-ω)v,  v' - S v/r = -(u²+v²)u - (m+ω)u.
/// Throws DomainError for r <= 0.
State rhs_radial(double r, State s, const Params& p);

/// The radial right-hand side with the 1/r terms dropped.
State rhs_autonomous(State s, const Params& p);

/// H(u,v) = (u²+v²)²/4 + (m/2)(u²-v²) + (ω/2)(u²+v²).
double hamiltonian(State s, const Params& p);

/// dH/dr along the radial flow, -(u²/r)(m+ω+u²+v²) <= 0.
double hamiltonian_rate(double r, State s, const Params& p);

/// (1/r) d/dr (r² H) along the radial flow.
double r2h_rate(double r, State s, const Params& p);

struct Equilibrium {
  State point;
  double energy;
};

/// The three rest points (0,0), (0,±sqrt(m-ω)) of the autonomous flow.
std::array<Equilibrium, 3> equilibria(const Params& p);

/// Second-order series start at r0 for u(0)=0, v(0)=lambda (S = 0 only).
State taylor_start(double lambda, const Params& p, double r0);

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Generic member of the cubic radial family
///   u' + w u/(r+shift) = v(u²+v² - a),   v' = -u(u²+v² + b).
/// Radial: a=m-ω, b=m+ω, w=1, shift=0. Autonomous: w=0. Rescaled: a and b
/// scaled by ε².
struct CubicFlow {
  double a = 0.5;
  double b = 1.5;
  double singular_weight = 1.0;
  double shift = 0.0;

  State rhs(double r, State s) const;
  double energy(State s) const;
  double energy_rate(double r, State s) const;
};

enum class SystemKind { Radial, Autonomous, Shifted };

struct System {
  SystemKind kind = SystemKind::Radial;
  double rho = 0.0;  // used by Shifted

  static System radial() { return {SystemKind::Radial, 0.0}; }
  static System autonomous() { return {SystemKind::Autonomous, 0.0}; }
  static System shifted(double rho) { return {SystemKind::Shifted, rho}; }

  CubicFlow flow(const Params& p) const;
};

enum class EventKind { VSignChange, EnteredNegativeEnergy, NormBelowEta, CertificateFired, RMaxReached };

std::string_view to_string(EventKind k);

/// Kind-specific evidence. For VSignChange, [step_lo, step_hi] is the
/// accepted step that bracketed the root and `index` is the node number.
struct EventPayload {
  double step_lo = 0.0;
  double step_hi = 0.0;
  double value = 0.0;  // H at the event (norm for NormBelowEta)
  int index = 0;
};

struct Event {
  EventKind kind;
  double r;
  State state;
  EventPayload payload;
};

struct Sample {
  double r;
  State s;
  State ds;  // derivative reported by the integrator's interpolant
  double H;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<Event> events;
  bool failed = false;
  std::string failure;

  int count(EventKind k) const;
  const Event* first(EventKind k) const;
  const Sample& back() const { return samples.back(); }
};

struct Detectors {
  bool v_sign_change = true;
  bool negative_energy = false;
  bool norm_below_eta = false;
  bool stop_on_negative_energy = false;
  bool stop_on_norm_below_eta = false;
  /// Stop once this many v sign changes have been recorded (0 = never).
  int stop_after_nodes = 0;
};

struct IntegrateOptions {
  Detectors detectors;
  /// When non-empty the trajectory is sampled on this grid (dense output)
  /// instead of at accepted steps. Radii outside the integration range are
  /// skipped.
  std::vector<double> grid;
  /// Overrides tol.rmax as end radius when set.
  std::optional<double> r_end;
  /// Overrides tol.abs for the step controller when set.
  std::optional<double> step_abs;
};

/// Adaptive Dormand-Prince integration of a member of the radial family
/// with event detection. Step-size underflow throws IntegrationFailure.
Trajectory integrate(const System& system, double r_start, State start, const Params& p,
                     const Tolerances& tol, const IntegrateOptions& opts = {});

/// Same machinery for an explicit CubicFlow (used by the rescaled system).
Trajectory integrate_flow(const CubicFlow& flow, double r_start, State start, const Tolerances& tol,
                          const IntegrateOptions& opts);

/// Radial trajectory of the datum lambda started from its Taylor state.
Trajectory integrate_from_origin(double lambda, const Params& p, const Tolerances& tol,
                                 const IntegrateOptions& opts = {});

}  // namespace sdirac
