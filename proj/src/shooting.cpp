#include "sdirac/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdirac {

double certificate_constant(const Params& p) {
  return p.gap() * p.gap() / (4.0 * (3.0 * p.m - p.omega));
}

std::optional<Certificate> certificate_check(double r, State s, const Params& p) {
  if (!(r > 1.0)) return std::nullopt;
  const double C0 = certificate_constant(p);
  const double H = hamiltonian(s, p);
  const double uv = s.u * s.v;
  const double vv = s.v * s.v;
  if (H < C0 / r && uv > 0.0 && vv < 2.0 * p.gap()) return Certificate{r, H, uv, vv, C0, 0};
  return std::nullopt;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::A: return "A";
    case Verdict::ICandidate: return "ICandidate";
    case Verdict::Undecided: return "Undecided";
  }
  return "?";
}

namespace {

int nodes_before(const std::vector<Event>& events, double r) {
  int k = 0;
  for (const auto& e : events)
    if (e.kind == EventKind::VSignChange && e.r < r) ++k;
  return k;
}

TrajectorySummary summarize(const Trajectory& t) {
  TrajectorySummary s;
  if (t.samples.empty()) return s;
  const Sample& last = t.samples.back();
  s.r_end = last.r;
  s.end = last.s;
  s.H_end = last.H;
  s.norm_end = l1_norm(last.s);
  s.steps = t.samples.size();
  s.H_min = last.H;
  for (const auto& x : t.samples) s.H_min = std::min(s.H_min, x.H);
  return s;
}

}  // namespace

Classification classify_from(double r_start, State start, const Params& p, const Tolerances& tol,
                             const ClassifyOptions& opts, Trajectory* trajectory_out) {
  Classification c;
  c.lambda = start.v;

  IntegrateOptions io;
  io.detectors.v_sign_change = true;
  io.detectors.negative_energy = true;
  io.detectors.stop_on_negative_energy = true;
  io.detectors.norm_below_eta = true;
  io.detectors.stop_after_nodes = opts.stop_at_first_node ? 1 : 0;
  io.step_abs = std::max(tol.abs * std::min(1.0, l1_norm(start)), 1e-300);

  Trajectory t;
  try {
    t = integrate(System::radial(), r_start, start, p, tol, io);
  } catch (const IntegrationFailure& f) {
    c.verdict = Verdict::Undecided;
    c.note = std::string("integration failure: ") + f.what() + " at r=" + std::to_string(f.radius());
    return c;
  }

  c.events = t.events;
  c.summary = summarize(t);
  c.node_count = t.count(EventKind::VSignChange);

  for (const auto& x : t.samples) {
    if (auto cert = certificate_check(x.r, x.s, p)) {
      cert->prior_nodes = nodes_before(t.events, x.r) ;
      c.certificate = cert;
      c.events.push_back({EventKind::CertificateFired, x.r, x.s, {x.r, x.r, x.H, cert->prior_nodes}});
      break;
    }
  }
  std::stable_sort(c.events.begin(), c.events.end(),
                   [](const Event& a, const Event& b) { return a.r < b.r; });

  if (const Event* neg = t.first(EventKind::EnteredNegativeEnergy)) {
    c.verdict = Verdict::A;
    c.k = nodes_before(t.events, neg->r);
    c.node_count = c.k;
    c.evidence_r = neg->r;
    c.evidence_H = neg->payload.value;
  } else if (opts.stop_at_first_node && c.node_count >= 1) {
    c.verdict = Verdict::Undecided;
    c.k = c.node_count;
    const Event* n = t.first(EventKind::VSignChange);
    c.evidence_r = n->r;
    c.evidence_H = n->payload.value;
    c.note = "stopped at first node";
  } else {
    c.k = c.node_count;
    c.evidence_r = c.summary.r_end;
    c.evidence_H = c.summary.H_end;
    if (c.summary.norm_end < tol.eta && c.summary.H_end >= -tol.delta)
      c.verdict = Verdict::ICandidate;
    else
      c.verdict = Verdict::Undecided;
  }
  if (trajectory_out) *trajectory_out = std::move(t);
  return c;
}

Classification classify(double lambda, const Params& p, const Tolerances& tol,
                        const ClassifyOptions& opts) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  p.validate();
  Classification c = classify_from(tol.r0, taylor_start(lambda, p, tol.r0), p, tol, opts);
  c.lambda = lambda;
  return c;
}

Bracket bracket_search(const Params& p, const Tolerances& tol) {
  p.validate();
  const double start = std::sqrt(2.0 * p.gap());
  const double limit = 1e6 * start;
  Bracket b;
  bool have_lo = false;
  for (double lambda = start; lambda <= limit; lambda *= 2.0) {
    Classification c = classify(lambda, p, tol, {.stop_at_first_node = true});
    b.history.push_back(c);
    if (c.node_count >= 1) {
      if (!have_lo) throw BracketFailure("no A(0) datum found below the first noded datum");
      b.hi = lambda;
      return b;
    }
    if (c.verdict == Verdict::A && c.k == 0) {
      b.lo = lambda;
      have_lo = true;
    }
  }
  throw BracketFailure("no node found before lambda = 1e6 sqrt(2(m-omega))");
}

// ---------------------------------------------------------------------------
// Bisection and tail continuation
// ---------------------------------------------------------------------------

namespace {

enum class Side { Lo, Hi, Exact };

Side side_of(const Classification& c) {
  if (c.node_count >= 1) return Side::Hi;
  if (c.verdict == Verdict::A) return Side::Lo;
  if (c.verdict == Verdict::ICandidate) return Side::Exact;
  return c.summary.H_min > 0.0 ? Side::Lo : Side::Hi;
}

std::vector<double> uniform_grid(double from, double to, double spacing) {
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((to - from) / spacing));
  g.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g.push_back(from + spacing * static_cast<double>(i));
  return g;
}

// Index of the last grid sample on which two runs agree to `rel` relative
// to the first. Both runs share the grid.
std::size_t agreement_end(const Trajectory& a, const Trajectory& b, double rel) {
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  std::size_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = l1_norm(a.samples[i].s - b.samples[i].s);
    if (d > rel * l1_norm(a.samples[i].s)) break;
    last = i;
  }
  return last;
}

Trajectory sample_run(double r_start, State start, const Params& p, const Tolerances& tol,
                      const std::vector<double>& grid) {
  IntegrateOptions io;
  io.detectors.negative_energy = true;
  io.detectors.stop_on_negative_energy = true;
  io.detectors.stop_after_nodes = 1;
  io.grid = grid;
  io.step_abs = std::max(tol.abs * std::min(1.0, l1_norm(start)), 1e-300);
  return integrate(System::radial(), r_start, start, p, tol, io);
}

constexpr double kJoinAgreement = 1e-6;

}  // namespace

GroundState bisect(const Bracket& b, const Params& p, const Tolerances& tol,
                   const BisectOptions& opts) {
  if (!(b.lo <= b.hi)) throw DomainError("bracket must satisfy lo <= hi");
  GroundState gs;
  double lo = b.lo, hi = b.hi;
  bool exact = (lo == hi);
  Tolerances retry_tol = tol;
  retry_tol.rmax = 2.0 * tol.rmax;

  int it = 0;
  while (!exact && hi - lo > opts.lambda_tol && it < opts.max_iterations) {
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) break;
    ++it;
    Classification c = classify(mid, p, tol, {.stop_at_first_node = true});
    if (c.verdict == Verdict::Undecided && c.node_count == 0) {
      gs.notes.push_back("undecided midpoint " + std::to_string(mid) + " retried on 2 rmax");
      c = classify(mid, p, retry_tol, {.stop_at_first_node = true});
    }
    const Side s = side_of(c);
    gs.history.push_back(c);
    if (s == Side::Hi) {
      hi = mid;
    } else if (s == Side::Lo) {
      lo = mid;
    } else {
      lo = hi = mid;
      exact = true;
    }
  }
  gs.bisection_steps = it;
  gs.lo = lo;
  gs.hi = hi;
  gs.bracket_width = hi - lo;
  gs.lambda_star = lo + 0.5 * (hi - lo);
  gs.converged = exact || hi - lo <= opts.lambda_tol ||
                 !(lo + 0.5 * (hi - lo) > lo && lo + 0.5 * (hi - lo) < hi);

  // Profile: the A(0) and noded runs on either side of the bracket agree up
  // to the radius where the unstable direction takes over. Beyond it the
  // tail is re-shot from the last agreeing state along the one-parameter
  // family (mu u, v), which crosses the stable direction transversally.
  const double spacing = opts.profile_spacing;
  std::vector<Sample> profile;
  const State start_lo = taylor_start(lo, p, tol.r0);
  const State start_hi = taylor_start(hi, p, tol.r0);
  auto grid0 = uniform_grid(0.0, tol.rmax, spacing);
  grid0.front() = tol.r0;

  Trajectory run_a = sample_run(tol.r0, start_lo, p, tol, grid0);
  Trajectory run_n = sample_run(tol.r0, start_hi, p, tol, grid0);
  std::size_t keep = exact ? run_a.samples.size() - 1 : agreement_end(run_a, run_n, kJoinAgreement);
  gs.stage_radii.push_back(tol.r0);

  for (int stage = 0;; ++stage) {
    keep = std::min(keep, run_a.samples.size() - 1);
    const bool first_stage = profile.empty();
    for (std::size_t i = first_stage ? 0 : 1; i <= keep; ++i) {
      if (run_a.samples[i].r > tol.rmax) break;
      profile.push_back(run_a.samples[i]);
    }
    const Sample join = run_a.samples[keep];
    if (!opts.extend_tail || exact || join.r + 0.5 * spacing >= tol.rmax) break;
    if (stage + 1 >= opts.max_stages) {
      gs.notes.push_back("stage limit reached at r=" + std::to_string(join.r));
      break;
    }
    if (keep == 0 || l1_norm(join.s) == 0.0) {
      gs.notes.push_back("tail continuation made no progress at r=" + std::to_string(join.r));
      break;
    }

    // Verdicts from a tiny state need a horizon long enough to escape and an
    // origin threshold relative to where the stage starts.
    Tolerances st = tol;
    st.rmax = join.r + 2.0 * tol.rmax;
    st.eta = tol.eta * std::min(1.0, l1_norm(join.s));
    auto family = [&join](double mu) { return State{mu * join.s.u, join.s.v}; };
    auto side = [&](double mu) {
      return side_of(classify_from(join.r, family(mu), p, st, {.stop_at_first_node = true}));
    };

    double w = 1e-5;
    Side s_minus = side(1.0 - w), s_plus = side(1.0 + w);
    while (s_minus == s_plus && w < 0.5) {
      w *= 10.0;
      s_minus = side(1.0 - w);
      s_plus = side(1.0 + w);
    }
    if (s_minus == s_plus) {
      gs.notes.push_back("could not bracket tail family at r=" + std::to_string(join.r));
      break;
    }
    double mu_a = (s_minus == Side::Lo) ? 1.0 - w : 1.0 + w;
    double mu_n = (s_minus == Side::Lo) ? 1.0 + w : 1.0 - w;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (mu_a + mu_n);
      if (mid == mu_a || mid == mu_n) break;
      const Side sm = side(mid);
      if (sm == Side::Exact) {
        mu_a = mu_n = mid;
        break;
      }
      (sm == Side::Lo ? mu_a : mu_n) = mid;
    }
    gs.max_join_jump = std::max(gs.max_join_jump, std::abs(mu_a - 1.0));

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(tol.rmax / spacing) + 2);
    for (double r = join.r; r <= st.rmax; r = join.r + spacing * static_cast<double>(grid.size()))
      grid.push_back(r);
    run_a = sample_run(join.r, family(mu_a), p, st, grid);
    run_n = sample_run(join.r, family(mu_n), p, st, grid);
    keep = agreement_end(run_a, run_n, kJoinAgreement);
    gs.stage_radii.push_back(join.r);
    if (keep == 0) {
      gs.notes.push_back("tail continuation made no progress at r=" + std::to_string(join.r));
      break;
    }
  }

  gs.profile.samples = std::move(profile);
  const Sample& end = gs.profile.samples.back();
  int nodes = 0;
  for (std::size_t i = 1; i < gs.profile.samples.size(); ++i) {
    const double v0 = gs.profile.samples[i - 1].s.v, v1 = gs.profile.samples[i].s.v;
    if ((v0 > 0.0 && v1 <= 0.0) || (v0 < 0.0 && v1 >= 0.0)) {
      ++nodes;
      gs.profile.events.push_back({EventKind::VSignChange, gs.profile.samples[i].r,
                                   gs.profile.samples[i].s, {gs.profile.samples[i - 1].r,
                                   gs.profile.samples[i].r, gs.profile.samples[i].H, nodes}});
    }
  }
  gs.node_count = nodes;
  if (l1_norm(end.s) < tol.eta && end.H >= -tol.delta) {
    gs.profile_verdict = Verdict::ICandidate;
  }
  for (const auto& x : gs.profile.samples) {
    if (l1_norm(x.s) < tol.eta) {
      gs.profile.events.push_back({EventKind::NormBelowEta, x.r, x.s, {x.r, x.r, l1_norm(x.s), nodes}});
      break;
    }
  }
  if (end.r + 0.5 * spacing >= tol.rmax)
    gs.profile.events.push_back({EventKind::RMaxReached, end.r, end.s, {0.0, 0.0, end.H, nodes}});

  if (auto win = decay_window(gs.profile, tol.eta)) {
    gs.decay_window = *win;
    gs.decay_slope = decay_fit(gs.profile, win->first, win->second);
  } else {
    gs.notes.push_back("no decay window found");
    gs.decay_slope = std::numeric_limits<double>::quiet_NaN();
  }
  return gs;
}

double decay_fit(const Trajectory& t, double r_a, double r_b) {
  if (!(r_a < r_b)) throw DomainError("decay window must satisfy r_a < r_b");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (const auto& x : t.samples) {
    if (x.r < r_a || x.r > r_b) continue;
    const double norm = l1_norm(x.s);
    if (!(norm > 0.0)) throw DomainError("decay window contains a vanishing sample");
    const double y = std::log(norm);
    sx += x.r;
    sy += y;
    sxx += x.r * x.r;
    sxy += x.r * y;
    ++n;
  }
  if (n < 2) throw DomainError("decay window needs at least two samples");
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  if (den == 0.0) throw DomainError("degenerate decay window");
  return (dn * sxy - sx * sy) / den;
}

std::optional<std::pair<double, double>> decay_window(const Trajectory& t, double eta) {
  if (t.samples.empty()) return std::nullopt;
  double r_b = t.samples.back().r;
  for (const auto& x : t.samples) {
    if (l1_norm(x.s) <= eta) {
      r_b = x.r;
      break;
    }
  }
  double r_a = std::numeric_limits<double>::infinity();
  double r_hi = -1.0;
  for (const auto& x : t.samples) {
    if (x.r < 0.1 * r_b || x.r > r_b) continue;
    const double n = l1_norm(x.s);
    if (n > eta && n < 1e-2) {
      r_a = std::min(r_a, x.r);
      r_hi = std::max(r_hi, x.r);
    }
  }
  if (!(r_a < r_hi)) return std::nullopt;
  return std::make_pair(r_a, r_hi);
}

}  // namespace sdirac
