#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdirac/radial.hpp"

namespace sdirac {

/// Evidence that the trajectory is trapped after at most one more node:
/// H(R) < C0/R, u v > 0 and v² < 2(m-ω) at some R > 1.
struct Certificate {
  double R = 0.0;
  double H_at_R = 0.0;
  double uv_product = 0.0;
  double v_squared = 0.0;
  double C0 = 0.0;
  int prior_nodes = 0;  // v sign changes on [0, R]
};

/// C0 = (m-ω)² / (4(3m-ω)).
double certificate_constant(const Params& p);

/// Returns the fired certificate, or nothing (always nothing for r <= 1).
std::optional<Certificate> certificate_check(double r, State s, const Params& p);

enum class Verdict { A, ICandidate, Undecided };

std::string to_string(Verdict v);

struct TrajectorySummary {
  double r_end = 0.0;
  State end{};
  double H_end = 0.0;
  double H_min = 0.0;
  double norm_end = 0.0;
  std::size_t steps = 0;
};

struct Classification {
  double lambda = 0.0;
  Verdict verdict = Verdict::Undecided;
  int k = 0;           // index of A(k)/ICandidate(k)
  int node_count = 0;  // sign changes of v recorded on the integrated range
  double evidence_r = 0.0;
  double evidence_H = 0.0;
  std::optional<Certificate> certificate;
  std::vector<Event> events;
  TrajectorySummary summary;
  std::string note;
};

struct ClassifyOptions {
  /// Stop at the first v sign change. Used by bisection, where a node is
  /// enough to decide the side.
  bool stop_at_first_node = false;
  bool keep_trajectory = false;
};

/// Classifies the datum lambda into A(k) / ICandidate(k) / Undecided by
/// integrating the radial system from the Taylor start.
Classification classify(double lambda, const Params& p, const Tolerances& tol,
                        const ClassifyOptions& opts = {});

/// Same verdict rules for a trajectory started at (r_start, start).
/// `trajectory_out` receives the integrated path when non-null.
Classification classify_from(double r_start, State start, const Params& p, const Tolerances& tol,
                             const ClassifyOptions& opts = {}, Trajectory* trajectory_out = nullptr);

struct Bracket {
  double lo = 0.0;  // verdict A(0)
  double hi = 0.0;  // at least one node
  std::vector<Classification> history;
};

/// Doubles lambda from sqrt(2(m-ω)) until a node appears. Throws
/// BracketFailure past 1e6·sqrt(2(m-ω)).
Bracket bracket_search(const Params& p, const Tolerances& tol);

struct GroundState {
  double lambda_star = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double bracket_width = 0.0;
  Trajectory profile;
  double decay_slope = 0.0;
  std::pair<double, double> decay_window{0.0, 0.0};
  int node_count = 0;
  bool converged = false;
  Verdict profile_verdict = Verdict::Undecided;
  int bisection_steps = 0;
  /// Each stage after the first re-shoots from the tail of the previous
  /// one; `stage_radii` lists where stages begin and `max_join_jump` is the
  /// largest relative correction applied at a join.
  std::vector<double> stage_radii;
  double max_join_jump = 0.0;
  std::vector<Classification> history;
  std::vector<std::string> notes;
};

struct BisectOptions {
  double lambda_tol = 1e-12;
  int max_iterations = 200;
  /// Tail continuation: re-shoot from the decaying tail until the profile
  /// reaches tol.rmax.
  bool extend_tail = true;
  int max_stages = 16;
  /// Radius on which profile samples are written.
  double profile_spacing = 0.05;
};

/// Bisection on the A(0) / node verdict followed by staged re-shooting of
/// the tail.
GroundState bisect(const Bracket& b, const Params& p, const Tolerances& tol,
                   const BisectOptions& opts = {});

/// Least-squares slope of log(|u|+|v|) against r on [r_a, r_b].
double decay_fit(const Trajectory& t, double r_a, double r_b);

/// Window rule used for the ground state: the last decade of r before the
/// eta crossing, restricted to eta < |u|+|v| < 1e-2.
std::optional<std::pair<double, double>> decay_window(const Trajectory& t, double eta);

}  // namespace sdirac
