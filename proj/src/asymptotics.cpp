#include "sdirac/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdirac/ode.hpp"

namespace sdirac {

State bubble(double r) {
  const double d = 4.0 + r * r;
  return {2.0 * r / d, 4.0 / d};
}

State bubble_derivative(double r) {
  const double d = 4.0 + r * r;
  const double d2 = d * d;
  return {(8.0 - 2.0 * r * r) / d2, -8.0 * r / d2};
}

double bubble_residual(std::span<const double> grid, BubbleForm form) {
  double worst = 0.0;
  for (double r : grid) {
    if (!(r > 0.0)) throw DomainError("bubble_residual needs a positive grid");
    State b = bubble(r);
    State db = bubble_derivative(r);
    if (form == BubbleForm::Corrupted) {
      // 3 instead of 4 in the numerator of V0
      b.v *= 0.75;
      db.v *= 0.75;
    }
    const double q = b.u * b.u + b.v * b.v;
    const double ru = std::abs(db.u + b.u / r - q * b.v);
    const double rv = std::abs(db.v + q * b.u);
    worst = std::max(worst, ru + rv);
  }
  return worst;
}

std::vector<double> log_grid(double a, double b, int n) {
  if (!(a > 0.0 && b > a && n >= 2)) throw DomainError("log_grid needs 0 < a < b and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i) g[i] = std::exp(la + (lb - la) * i / (n - 1));
  g.front() = a;
  g.back() = b;
  return g;
}

std::vector<double> uniform_grid(double b, int n) {
  if (!(b > 0.0 && n >= 1)) throw DomainError("uniform_grid needs b > 0 and n >= 1");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[i] = b * (i + 1) / n;
  g.back() = b;
  return g;
}

CubicFlow rescaled_flow(double epsilon, const Params& p) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
  const double e2 = epsilon * epsilon;
  return CubicFlow{e2 * p.gap(), e2 * p.sum(), 1.0, 0.0};
}

namespace {

// series start of the cubic family from (0, lambda)
State flow_taylor_start(const CubicFlow& f, double lambda, double r0) {
  const double c = lambda * (lambda * lambda - f.a);
  return {0.5 * r0 * c, lambda - 0.25 * r0 * r0 * c * (lambda * lambda + f.b)};
}

template <std::size_t N>
using V = ode::Vec<N>;

// Integrates from r_start and returns the state on every grid radius.
// Radii at or below r_start get the start value.
template <std::size_t N, class Rhs>
std::vector<V<N>> sample_on(Rhs&& rhs, double r_start, V<N> y, std::span<const double> grid,
                            const Tolerances& tol) {
  std::vector<V<N>> out;
  out.reserve(grid.size());
  std::size_t pos = 0;
  while (pos < grid.size() && grid[pos] <= r_start) {
    out.push_back(y);
    ++pos;
  }
  if (pos == grid.size()) return out;
  ode::StepControl ctl;
  ctl.rel = tol.rel;
  ctl.abs = tol.abs;
  auto observer = [&](const ode::DenseStep<N>& st) {
    while (pos < grid.size() && grid[pos] <= st.r1) out.push_back(st.at(grid[pos++]));
    return pos < grid.size();
  };
  try {
    ode::integrate<N>(rhs, r_start, y, grid.back(), ctl, observer);
  } catch (const ode::StepFailure<N>& f) {
    const auto& last = f.last();
    throw IntegrationFailure(f.what(), f.radius(), {last[0], N > 1 ? last[1] : 0.0});
  }
  while (out.size() < grid.size()) out.push_back(out.empty() ? y : out.back());
  return out;
}

void require_increasing(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw DomainError("grid radii must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("grid must be strictly increasing");
  }
}

// h1' = -h1/r - (m-ω)V0 + 2U0V0 h1 + (U0²+3V0²) k1
// k1' = -(m+ω)U0 - 2U0V0 k1 - (3U0²+V0²) h1
void first_order_rhs(double r, double h1, double k1, const Params& p, double& dh1, double& dk1) {
  const State b = bubble(r);
  const double U = b.u, W = b.v;
  dh1 = -h1 / r - p.gap() * W + 2.0 * U * W * h1 + (U * U + 3.0 * W * W) * k1;
  dk1 = -p.sum() * U - 2.0 * U * W * k1 - (3.0 * U * U + W * W) * h1;
}

// First-order series: h1 = -(m-ω) r/2, k1 = -ω r²/2.
V<2> first_order_start(const Params& p, double r0) {
  return {-0.5 * p.gap() * r0, -0.5 * p.omega * r0 * r0};
}

// Remainder right-hand side. a1,b1 = h1,k1; a2,b2 = h2,k2.
void remainder_rhs(double r, const V<4>& y, double eps, const Params& p, SourceTerms terms,
                   V<4>& dy) {
  const State b = bubble(r);
  const double U = b.u, W = b.v;
  const double a1 = y[0], b1 = y[1], a2 = y[2], b2 = y[3];
  first_order_rhs(r, a1, b1, p, dy[0], dy[1]);
  const double e2 = eps * eps, e4 = e2 * e2, e6 = e4 * e2, e8 = e4 * e4;
  const double gm = p.gap(), gp = p.sum();

  const double J0 = 2.0 * U * W * a2 + (U * U + 3.0 * W * W) * b2 + W * (a1 * a1 + 3.0 * b1 * b1) +
                    2.0 * U * a1 * b1 - gm * b1;
  const double J2 = W * (2.0 * a1 * a2 + 6.0 * b1 * b2) + 2.0 * U * (a1 * b2 + b1 * a2) +
                    (b1 * b1 * b1 + a1 * a1 * b1) - gm * b2;
  const double J4 = W * (a2 * a2 + 3.0 * b2 * b2) + 2.0 * U * a2 * b2 +
                    (3.0 * b1 * b1 * b2 + a1 * a1 * b2 + 2.0 * a1 * a2 * b1);
  const double J6 = 3.0 * b1 * b2 * b2 + b1 * a2 * a2 + 2.0 * a1 * a2 * b2;
  const double J8 = b2 * b2 * b2 + a2 * a2 * b2;
  dy[2] = J0 + e2 * J2 + e4 * J4 + e6 * J6 + e8 * J8 - a2 / r;

  double K0, K2, K4, K6;
  if (terms == SourceTerms::Derived) {
    K0 = -(3.0 * U * U + W * W) * a2 - 2.0 * U * W * b2 - U * (3.0 * a1 * a1 + b1 * b1) -
         2.0 * W * a1 * b1 - gp * a1;
    K2 = -U * (6.0 * a1 * a2 + 2.0 * b1 * b2) - (a1 * a1 * a1 + a1 * b1 * b1) -
         2.0 * W * (a1 * b2 + b1 * a2) - gp * a2;
    K4 = -(U * (3.0 * a2 * a2 + b2 * b2) + 2.0 * W * a2 * b2) -
         (2.0 * a1 * b1 * b2 + 3.0 * a1 * a1 * a2 + b1 * b1 * a2);
    K6 = -3.0 * a1 * a2 * a2 - a1 * b2 * b2 - 2.0 * b1 * b2 * a2;
  } else {
    K0 = -(2.0 * U * U + W * W + 2.0 * U * W) * a2 - U * (3.0 * a1 * a1 + b1 * b1) -
         2.0 * W * a1 * b1 - gp * a1;
    K2 = -U * (4.0 * a1 * a2 + 2.0 * b1 * b2) - (a1 * a1 * a1 + a1 * b1 * b1) -
         2.0 * W * (a1 * b2 + b1 * a2) - gp * a2;
    K4 = -(U * (2.0 * a2 * a2 + b2 * b2) + 2.0 * W * a2 * b2) -
         (2.0 * a1 * b1 * b2 + 2.0 * a1 * a1 * a2 + b1 * b1 * a2);
    K6 = -a1 * a2 * a2 - b1 * b2 * b2 - a1 * a2 * a2 - b1 * b2 * a2;
  }
  const double K8 = -a2 * a2 * a2 - a2 * b2 * b2;
  dy[3] = K0 + e2 * K2 + e4 * K4 + e6 * K6 + e8 * K8;
}

}  // namespace

Trajectory integrate_rescaled(double epsilon, const Params& p, const Tolerances& tol, double r_end,
                              std::span<const double> grid, Detectors detectors) {
  const CubicFlow f = rescaled_flow(epsilon, p);
  IntegrateOptions io;
  io.detectors = detectors;
  io.grid.assign(grid.begin(), grid.end());
  io.r_end = r_end;
  return integrate_flow(f, tol.r0, flow_taylor_start(f, 1.0, tol.r0), tol, io);
}

double rescaling_commutation(double epsilon, const Params& p, const Tolerances& tol,
                             std::span<const double> grid) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  require_increasing(grid);
  const double lambda = 1.0 / epsilon;
  const double e2 = epsilon * epsilon;
  const CubicFlow radial = System::radial().flow(p);
  const CubicFlow resc = rescaled_flow(epsilon, p);

  auto flow_rhs = [](const CubicFlow& f) {
    return [&f](double r, const V<2>& y) {
      const State d = f.rhs(r, {y[0], y[1]});
      return V<2>{d.u, d.v};
    };
  };

  std::vector<double> small_grid(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) small_grid[i] = e2 * grid[i];

  const State s_rad = taylor_start(lambda, p, tol.r0);
  const State s_res = flow_taylor_start(resc, 1.0, tol.r0);
  const auto a = sample_on<2>(flow_rhs(radial), tol.r0, V<2>{s_rad.u, s_rad.v}, small_grid, tol);
  const auto b = sample_on<2>(flow_rhs(resc), tol.r0, V<2>{s_res.u, s_res.v}, grid, tol);

  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // below the start radius use the series directly
    const State ra = small_grid[i] <= tol.r0 ? taylor_start(lambda, p, small_grid[i])
                                             : State{a[i][0], a[i][1]};
    const State rb = grid[i] <= tol.r0 ? flow_taylor_start(resc, 1.0, grid[i])
                                       : State{b[i][0], b[i][1]};
    worst = std::max(worst, l1_norm(epsilon * ra - rb));
  }
  return worst;
}

std::vector<FirstOrderSample> integrate_first_order(const Params& p, const Tolerances& tol,
                                                    std::span<const double> grid) {
  require_increasing(grid);
  auto rhs = [&p](double r, const V<2>& y) {
    V<2> d;
    first_order_rhs(r, y[0], y[1], p, d[0], d[1]);
    return d;
  };
  const double r0 = tol.r0;
  const auto ys = sample_on<2>(rhs, r0, first_order_start(p, r0), grid, tol);
  std::vector<FirstOrderSample> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] <= r0) {
      const auto s = first_order_start(p, grid[i]);
      out[i] = {grid[i], s[0], s[1]};
    } else {
      out[i] = {grid[i], ys[i][0], ys[i][1]};
    }
  }
  return out;
}

LogLawFit fit_log_law(const Params& p, const Tolerances& tol, double r_lo, double r_hi,
                      int points) {
  if (!(r_lo > 1.0 && r_hi > r_lo)) throw DomainError("log-law window must satisfy 1 < r_lo < r_hi");
  LogLawFit fit;
  fit.r_lo = r_lo;
  fit.r_hi = r_hi;
  const auto grid = log_grid(r_lo, r_hi, points);
  fit.samples = integrate_first_order(p, tol, grid);

  double sxy = 0.0, sxx = 0.0;
  for (const auto& s : fit.samples) {
    const double L = std::log(s.r);
    sxy += s.h1 * L;
    sxx += L * L;
  }
  fit.c = -sxy / sxx;
  for (const auto& s : fit.samples) {
    const double L = std::log(s.r);
    fit.relative_residual = std::max(fit.relative_residual, std::abs(s.h1 + fit.c * L) / L);
    fit.growth_ratio = std::max(fit.growth_ratio, (std::abs(s.h1) + std::abs(s.k1)) / L);
  }

  // ordinary least squares for k1 against ln r
  const double n = static_cast<double>(fit.samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& s : fit.samples) {
    mx += std::log(s.r);
    my += s.k1;
  }
  mx /= n;
  my /= n;
  double cxy = 0.0, cxx = 0.0;
  for (const auto& s : fit.samples) {
    const double dx = std::log(s.r) - mx;
    cxy += dx * (s.k1 - my);
    cxx += dx * dx;
  }
  fit.k1_slope = cxy / cxx;
  fit.k1_intercept = my - fit.k1_slope * mx;
  return fit;
}

PerturbationRecord integrate_remainder(double epsilon, const Params& p, const Tolerances& tol,
                                       const RemainderOptions& opts) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  if (opts.points < 2) throw DomainError("remainder grid needs at least 2 points");
  PerturbationRecord rec;
  rec.epsilon = epsilon;
  rec.source = opts.report;
  rec.terms = opts.terms;
  rec.agreement_window = opts.agreement_window;
  rec.threshold = std::pow(epsilon, -1.5);

  const double R = 1.0 / epsilon;
  const auto grid = uniform_grid(R, opts.points);
  const double r0 = tol.r0;
  const double e2 = epsilon * epsilon, e4 = e2 * e2;
  const V<2> fo = first_order_start(p, r0);

  // (b) remainder ODE, carrying (h1, k1) along
  auto rhs_b = [&](double r, const V<4>& y) {
    V<4> d;
    remainder_rhs(r, y, epsilon, p, opts.terms, d);
    return d;
  };
  const auto yb = sample_on<4>(rhs_b, r0, V<4>{fo[0], fo[1], 0.0, 0.0}, grid, tol);

  // (a) Subtraction: (U, V) and (h1, k1) in one system
  const CubicFlow f = rescaled_flow(epsilon, p);
  auto rhs_a = [&](double r, const V<4>& y) {
    const State d = f.rhs(r, {y[0], y[1]});
    V<4> out{d.u, d.v, 0.0, 0.0};
    first_order_rhs(r, y[2], y[3], p, out[2], out[3]);
    return out;
  };
  const State s0 = flow_taylor_start(f, 1.0, r0);
  const auto ya = sample_on<4>(rhs_a, r0, V<4>{s0.u, s0.v, fo[0], fo[1]}, grid, tol);

  double num = 0.0, den = 0.0;
  rec.samples.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid[i];
    const State b0 = bubble(r);
    const double h2a = (ya[i][0] - b0.u - e2 * ya[i][2]) / e4;
    const double k2a = (ya[i][1] - b0.v - e2 * ya[i][3]) / e4;
    const double h2b = yb[i][2], k2b = yb[i][3];
    RemainderSample s{r, yb[i][0], yb[i][1], h2b, k2b, h2a, k2a};
    if (opts.report == RemainderRoute::Subtraction) {
      s.h1 = ya[i][2];
      s.k1 = ya[i][3];
      std::swap(s.h2, s.h2_other);
      std::swap(s.k2, s.k2_other);
    }
    const double diff = std::abs(h2a - h2b) + std::abs(k2a - k2b);
    rec.max_discrepancy = std::max(rec.max_discrepancy, diff);
    if (r <= opts.agreement_window) {
      num = std::max(num, diff);
      den = std::max(den, std::abs(h2a) + std::abs(k2a));
    }
    const double n2 = std::abs(s.h2) + std::abs(s.k2);
    rec.sup_norm = std::max(rec.sup_norm, n2);
    if (!rec.threshold_breached && n2 >= rec.threshold) {
      rec.threshold_breached = true;
      rec.breach_radius = r;
    }
    rec.samples.push_back(s);
  }
  rec.relative_discrepancy = den > 0.0 ? num / den : num;
  return rec;
}

RemainderBound remainder_bound(std::span<const double> epsilons, const Params& p,
                               const Tolerances& tol) {
  if (epsilons.empty()) throw DomainError("remainder_bound needs at least one epsilon");
  RemainderBound b;
  for (double e : epsilons) {
    const auto rec = integrate_remainder(e, p, tol);
    const double ref = std::log(1.0 / e) / e;
    b.epsilons.push_back(e);
    b.sup_norms.push_back(rec.sup_norm);
    b.reference.push_back(ref);
    b.ratios.push_back(rec.sup_norm / ref);
  }
  b.C = b.ratios.front();
  // the calibration point itself holds with equality; allow rounding only
  for (double r : b.ratios) b.holds.push_back(r <= b.C * (1.0 + 1e-12));
  return b;
}

std::optional<double> node_radius(double epsilon, const Params& p, const Tolerances& tol,
                                  std::optional<double> horizon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  const double r_end = horizon.value_or(1.0 / epsilon);
  Detectors det;
  det.v_sign_change = true;
  det.stop_after_nodes = 1;
  const Trajectory t = integrate_rescaled(epsilon, p, tol, r_end, {}, det);
  if (const Event* e = t.first(EventKind::VSignChange)) return e->r;
  return std::nullopt;
}

EpsilonStudy convergence_study(std::span<const double> epsilons, double T, const Params& p,
                               const Tolerances& tol, int points) {
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0 && epsilons[i] < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw DomainError("epsilons must be strictly decreasing");
  }
  if (!(T > 0.0)) throw DomainError("horizon T must be positive");
  EpsilonStudy st;
  st.T = T;
  const auto grid = uniform_grid(T, points);
  for (double e : epsilons) {
    const Trajectory t = integrate_rescaled(e, p, tol, T, grid);
    double err = 0.0;
    for (const auto& s : t.samples) err = std::max(err, l1_norm(s.s - bubble(s.r)));
    st.epsilons.push_back(e);
    st.sup_errors.push_back(err);
    st.node_radii.push_back(node_radius(e, p, tol));
  }
  for (std::size_t i = 0; i + 1 < st.sup_errors.size(); ++i)
    st.ratios.push_back(st.sup_errors[i] / st.sup_errors[i + 1]);
  return st;
}

}  // namespace sdirac
