#include "sdirac/radial.hpp"

#include <algorithm>
#include <cmath>

#include "sdirac/ode.hpp"

namespace sdirac {

namespace {

void require_positive_radius(double r) {
  if (!(r > 0.0)) throw DomainError("radius must be positive (got " + std::to_string(r) + ")");
}

}  // namespace

State rhs_radial(double r, State s, const Params& p) {
  require_positive_radius(r);
  const double q = s.u * s.u + s.v * s.v;
  const double S = p.angular_index;
  State d{q * s.v - p.gap() * s.v, -q * s.u - p.sum() * s.u};
  d.u -= (S + 1.0) * s.u / r;
  if (p.angular_index != 0) d.v += S * s.v / r;
  return d;
}

State rhs_autonomous(State s, const Params& p) {
  const double q = s.u * s.u + s.v * s.v;
  return {q * s.v - p.gap() * s.v, -q * s.u - p.sum() * s.u};
}

double hamiltonian(State s, const Params& p) {
  const double uu = s.u * s.u, vv = s.v * s.v;
  const double q = uu + vv;
  return 0.25 * q * q + 0.5 * p.m * (uu - vv) + 0.5 * p.omega * q;
}

double hamiltonian_rate(double r, State s, const Params& p) {
  require_positive_radius(r);
  const double uu = s.u * s.u;
  return -(uu / r) * (p.sum() + uu + s.v * s.v);
}

double r2h_rate(double r, State s, const Params& p) {
  require_positive_radius(r);
  const double uu = s.u * s.u, vv = s.v * s.v;
  return -0.5 * uu * uu + 0.5 * vv * (vv - 2.0 * p.gap());
}

std::array<Equilibrium, 3> equilibria(const Params& p) {
  const double w = std::sqrt(p.gap());
  const double e = -0.25 * p.gap() * p.gap();
  return {Equilibrium{{0.0, 0.0}, 0.0}, Equilibrium{{0.0, w}, e}, Equilibrium{{0.0, -w}, e}};
}

State taylor_start(double lambda, const Params& p, double r0) {
  if (!(lambda > 0.0)) throw DomainError("initial datum lambda must be positive");
  if (!(r0 > 0.0)) throw DomainError("Taylor-start radius must be positive");
  if (p.angular_index != 0) throw DomainError("series start is only available for S = 0");
  const double c = lambda * (lambda * lambda - p.gap());
  return {0.5 * r0 * c, lambda - 0.25 * r0 * r0 * c * (lambda * lambda + p.sum())};
}

// ---------------------------------------------------------------------------

State CubicFlow::rhs(double r, State s) const {
  const double q = s.u * s.u + s.v * s.v;
  State d{s.v * (q - a), -s.u * (q + b)};
  if (singular_weight != 0.0) d.u -= singular_weight * s.u / (r + shift);
  return d;
}

double CubicFlow::energy(State s) const {
  const double uu = s.u * s.u, vv = s.v * s.v;
  const double q = uu + vv;
  return 0.25 * q * q + 0.5 * (b * uu - a * vv);
}

double CubicFlow::energy_rate(double r, State s) const {
  if (singular_weight == 0.0) return 0.0;
  const double uu = s.u * s.u;
  return -singular_weight * (uu / (r + shift)) * (b + uu + s.v * s.v);
}

CubicFlow System::flow(const Params& p) const {
  CubicFlow f{p.gap(), p.sum(), 1.0, 0.0};
  switch (kind) {
    case SystemKind::Radial:
      break;
    case SystemKind::Autonomous:
      f.singular_weight = 0.0;
      break;
    case SystemKind::Shifted:
      if (!(rho > 0.0)) throw DomainError("shift rho must be positive");
      f.shift = rho;
      break;
  }
  return f;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::VSignChange: return "VSignChange";
    case EventKind::EnteredNegativeEnergy: return "EnteredNegativeEnergy";
    case EventKind::NormBelowEta: return "NormBelowEta";
    case EventKind::CertificateFired: return "CertificateFired";
    case EventKind::RMaxReached: return "RMaxReached";
  }
  return "?";
}

int Trajectory::count(EventKind k) const {
  return static_cast<int>(std::count_if(events.begin(), events.end(),
                                        [k](const Event& e) { return e.kind == k; }));
}

const Event* Trajectory::first(EventKind k) const {
  for (const auto& e : events)
    if (e.kind == k) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------

Trajectory integrate_flow(const CubicFlow& flow, double r_start, State start, const Tolerances& tol,
                          const IntegrateOptions& opts) {
  using V2 = ode::Vec<2>;
  const double r_end = opts.r_end.value_or(tol.rmax);
  if (flow.singular_weight != 0.0 && !(r_start + flow.shift > 0.0))
    throw DomainError("singular system must start at a positive radius");

  const Detectors& det = opts.detectors;
  Trajectory traj;
  auto rhs = [&flow](double r, const V2& y) {
    const State d = flow.rhs(r, {y[0], y[1]});
    return V2{d.u, d.v};
  };
  auto record = [&](double r, State s, State ds) {
    traj.samples.push_back({r, s, ds, flow.energy(s)});
  };

  const bool on_grid = !opts.grid.empty();
  std::size_t grid_pos = 0;
  if (on_grid) {
    while (grid_pos < opts.grid.size() && opts.grid[grid_pos] < r_start) ++grid_pos;
    if (grid_pos < opts.grid.size() && opts.grid[grid_pos] == r_start) {
      record(r_start, start, flow.rhs(r_start, start));
      ++grid_pos;
    }
  } else {
    record(r_start, start, flow.rhs(r_start, start));
  }

  int nodes = 0;
  bool negative = false;
  bool small = false;
  auto event_tol = [&](double scale) { return std::max(tol.abs * 1e-3, 1e-300) * scale; };

  // conditions already true at the start are reported there, not at the
  // end of the first step
  bool stop_now = false;
  if (det.negative_energy && flow.energy(start) < -tol.delta) {
    negative = true;
    traj.events.push_back({EventKind::EnteredNegativeEnergy, r_start, start,
                           {r_start, r_start, flow.energy(start), 0}});
    stop_now = stop_now || det.stop_on_negative_energy;
  }
  if (det.norm_below_eta && l1_norm(start) < tol.eta) {
    small = true;
    traj.events.push_back({EventKind::NormBelowEta, r_start, start,
                           {r_start, r_start, l1_norm(start), 0}});
    stop_now = stop_now || det.stop_on_norm_below_eta;
  }
  if (stop_now) {
    if (traj.samples.empty()) record(r_start, start, flow.rhs(r_start, start));
    return traj;
  }

  auto observer = [&](const ode::DenseStep<2>& st) {
    const State y0{st.y0[0], st.y0[1]};
    const State y1{st.y1[0], st.y1[1]};
    double stop_at = st.r1;
    bool stop = false;

    // v sign changes, checked at interior points too so a fast rotation
    // cannot hide two crossings inside one step.
    if (det.v_sign_change) {
      constexpr int kSub = 4;
      double prev_r = st.r0;
      double prev_v = y0.v;
      for (int j = 1; j <= kSub && !stop; ++j) {
        const double rj = (j == kSub) ? st.r1 : st.r0 + (st.r1 - st.r0) * j / kSub;
        const double vj = (j == kSub) ? y1.v : st.at(rj)[1];
        const bool crossed = (prev_v > 0.0 && vj <= 0.0) || (prev_v < 0.0 && vj >= 0.0);
        if (crossed) {
          const double rr = (vj == 0.0) ? rj
                                        : ode::locate_root(
                                              st, prev_r, rj,
                                              [](double, const V2& y) { return y[1]; },
                                              event_tol(1.0));
          const auto yy = st.at(rr);
          ++nodes;
          traj.events.push_back({EventKind::VSignChange, rr, {yy[0], yy[1]},
                                 {st.r0, st.r1, flow.energy({yy[0], yy[1]}), nodes}});
          if (det.stop_after_nodes > 0 && nodes >= det.stop_after_nodes) {
            stop = true;
            stop_at = rr;
          }
        }
        prev_r = rj;
        prev_v = vj;
      }
    }

    if (det.negative_energy && !negative && flow.energy(y1) < -tol.delta) {
      auto g = [&flow, &tol](double, const V2& y) { return flow.energy({y[0], y[1]}) + tol.delta; };
      const double rr = ode::locate_root(st, st.r0, st.r1, g, event_tol(tol.delta));
      if (!stop || rr < stop_at) {
        const auto yy = st.at(rr);
        negative = true;
        traj.events.push_back({EventKind::EnteredNegativeEnergy, rr, {yy[0], yy[1]},
                               {st.r0, st.r1, flow.energy({yy[0], yy[1]}), nodes}});
        if (det.stop_on_negative_energy) {
          stop = true;
          stop_at = rr;
        }
      }
    }

    if (det.norm_below_eta && !small && l1_norm(y1) < tol.eta) {
      auto g = [&tol](double, const V2& y) { return std::abs(y[0]) + std::abs(y[1]) - tol.eta; };
      const double rr = ode::locate_root(st, st.r0, st.r1, g, event_tol(tol.eta));
      if (!stop || rr < stop_at) {
        const auto yy = st.at(rr);
        small = true;
        traj.events.push_back({EventKind::NormBelowEta, rr, {yy[0], yy[1]},
                               {st.r0, st.r1, std::abs(yy[0]) + std::abs(yy[1]), nodes}});
        if (det.stop_on_norm_below_eta) {
          stop = true;
          stop_at = rr;
        }
      }
    }

    if (stop) {
      std::erase_if(traj.events, [stop_at](const Event& e) { return e.r > stop_at; });
      nodes = traj.count(EventKind::VSignChange);
    }

    if (on_grid) {
      while (grid_pos < opts.grid.size() && opts.grid[grid_pos] <= stop_at) {
        const double rg = opts.grid[grid_pos++];
        const auto y = st.at(rg);
        const auto dy = st.derivative_at(rg);
        record(rg, {y[0], y[1]}, {dy[0], dy[1]});
      }
    } else if (stop && stop_at < st.r1) {
      const auto y = st.at(stop_at);
      const auto dy = st.derivative_at(stop_at);
      record(stop_at, {y[0], y[1]}, {dy[0], dy[1]});
    } else {
      const auto dy = st.derivative_at(st.r1);
      record(st.r1, y1, {dy[0], dy[1]});
    }
    return !stop;
  };

  ode::StepControl ctl;
  ctl.rel = tol.rel;
  ctl.abs = opts.step_abs.value_or(tol.abs);
  try {
    const auto why = ode::integrate<2>(rhs, r_start, V2{start.u, start.v}, r_end, ctl, observer);
    if (why == ode::StopReason::ReachedEnd) {
      const Sample& last = traj.samples.empty() ? Sample{r_start, start, {}, flow.energy(start)}
                                                : traj.samples.back();
      traj.events.push_back({EventKind::RMaxReached, r_end, last.s, {0.0, 0.0, last.H, nodes}});
    }
  } catch (const ode::StepFailure<2>& f) {
    throw IntegrationFailure(f.what(), f.radius(), {f.last()[0], f.last()[1]});
  }
  return traj;
}

Trajectory integrate(const System& system, double r_start, State start, const Params& p,
                     const Tolerances& tol, const IntegrateOptions& opts) {
  if (system.kind == SystemKind::Radial) {
    if (p.angular_index != 0) {
      // S != 0 keeps the generic right-hand side; no energy identity is
      // claimed for it.
      throw DomainError("trajectory integration is only provided for S = 0");
    }
    if (!(r_start > 0.0)) throw DomainError("radial integration must start at r > 0");
  }
  return integrate_flow(system.flow(p), r_start, start, tol, opts);
}

Trajectory integrate_from_origin(double lambda, const Params& p, const Tolerances& tol,
                                 const IntegrateOptions& opts) {
  return integrate(System::radial(), tol.r0, taylor_start(lambda, p, tol.r0), p, tol, opts);
}

}  // namespace sdirac
