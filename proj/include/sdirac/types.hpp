#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdirac {

/// Physical parameters of the stationary cubic Dirac problem.
/// `angular_index` is the ansatz index S; every tested path uses S = 0.
struct Params {
  double m = 1.0;
  double omega = 0.5;
  int angular_index = 0;

  double gap() const { return m - omega; }  // m - omega > 0
  double sum() const { return m + omega; }

  /// Throws DomainError unless 0 < omega < m.
  void validate() const;
};

/// A point (u, v) of the radial flow. In the rescaled setting the same
/// type carries (U, V).
struct State {
  double u = 0.0;
  double v = 0.0;

  friend State operator+(State a, State b) { return {a.u + b.u, a.v + b.v}; }
  friend State operator-(State a, State b) { return {a.u - b.u, a.v - b.v}; }
  friend State operator*(double s, State a) { return {s * a.u, s * a.v}; }
  friend State operator-(State a) { return {-a.u, -a.v}; }
  friend bool operator==(const State&, const State&) = default;
};

inline double l1_norm(State s) { return std::abs(s.u) + std::abs(s.v); }

/// Numerical policy shared by every integration.
struct Tolerances {
  double rel = 1e-10;
  double abs = 1e-10;
  double r0 = 1e-6;    // Taylor-start radius
  double eta = 1e-8;   // |u|+|v| below this counts as "at the origin"
  double delta = 0.0;  // H < -delta counts as negative energy
  double rmax = 0.0;   // integration horizon

  /// Defaults scaled to the parameters: delta = 1e-8 (m-omega)^2,
  /// rmax = 40/(m-omega).
  static Tolerances defaults(const Params& p);

  void validate() const;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, double r, State last)
      : std::runtime_error(what), r_(r), last_(last) {}
  double radius() const { return r_; }
  State last_state() const { return last_; }

 private:
  double r_;
  State last_;
};

class BracketFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdirac
