// Acceptance suite. One PASS/FAIL line per criterion:
//   acceptance               run all
//   acceptance --criterion 7 run one (ctest registers each separately)
// Exit status is 0 only if every selected criterion passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "sdirac/app.hpp"
#include "sdirac/asymptotics.hpp"
#include "sdirac/phaseflow.hpp"
#include "sdirac/shooting.hpp"

using namespace sdirac;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 = none
  std::function<Outcome()> body;
};

std::string f(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", x);
  return b;
}

const Params P{1.0, 0.5, 0};

// radical inverse in base b; a seed-free quasi-random sample
double halton(int i, int b) {
  double r = 0.0, w = 1.0;
  for (; i > 0; i /= b) {
    w /= b;
    r += w * (i % b);
  }
  return r;
}

struct Draw {
  Params p;
  double lambda;
};

// 100 points with lambda in (0, 5] and 0 < omega < m <= 2
std::vector<Draw> sample() {
  std::vector<Draw> out;
  for (int i = 1; i <= 100; ++i) {
    Params p;
    p.m = 0.2 + 1.8 * halton(i, 2);
    p.omega = p.m * (0.05 + 0.9 * halton(i, 3));
    out.push_back({p, 5.0 * (1.0 - halton(i, 5))});
  }
  return out;
}

double norm_at(const Trajectory& t, double r) {
  const Sample* best = nullptr;
  for (const auto& s : t.samples)
    if (!best || std::abs(s.r - r) < std::abs(best->r - r)) best = &s;
  return best ? l1_norm(best->s) : INFINITY;
}

GroundState ground_state() {
  const Tolerances tol = Tolerances::defaults(P);
  return bisect(bracket_search(P, tol), P, tol);
}

Outcome c01() {
  const GroundState gs = ground_state();
  const double n40 = norm_at(gs.profile, 40.0);
  Outcome o;
  o.pass = gs.converged && gs.node_count == 0 && n40 < 1e-6 && gs.bracket_width < 1e-10;
  o.detail = "lambda*=" + f(gs.lambda_star) + " nodes=" + std::to_string(gs.node_count) +
             " |u|+|v|(40)=" + f(n40) + " width=" + f(gs.bracket_width);
  return o;
}

Outcome c02() {
  const GroundState gs = ground_state();
  const double bound = -0.5 * P.gap() + 0.05;
  return {std::isfinite(gs.decay_slope) && gs.decay_slope <= bound,
          "slope=" + f(gs.decay_slope) + " on [" + f(gs.decay_window.first) + ", " +
              f(gs.decay_window.second) + "] bound=" + f(bound)};
}

Outcome c03() {
  const Tolerances tol = Tolerances::defaults(P);
  Outcome o{true, ""};
  for (double lam : {0.25, 0.5, 0.75, 1.0}) {
    const Classification c = classify(lam, P, tol);
    const bool ok = c.verdict == Verdict::A && c.k == 0;
    o.pass = o.pass && ok;
    o.detail += f(lam) + (ok ? ":A(0) " : ":" + to_string(c.verdict) + "(" + std::to_string(c.k) + ") ");
  }
  return o;
}

Outcome c04() {
  const Tolerances tol = Tolerances::defaults(P);
  Outcome o{true, ""};
  for (double lam : {10.0, 100.0}) {
    const Classification c = classify(lam, P, tol);
    o.pass = o.pass && c.node_count >= 1;
    o.detail += "lambda=" + f(lam) + " nodes=" + std::to_string(c.node_count) + " ";
  }
  return o;
}

Outcome c05() {
  double worst = -INFINITY;
  std::string where;
  for (const auto& d : sample()) {
    const Tolerances tol = Tolerances::defaults(d.p);
    const Trajectory t = integrate_from_origin(d.lambda, d.p, tol);
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
      const double inc = t.samples[i].H - t.samples[i - 1].H;
      if (inc > worst) {
        worst = inc;
        where = "lambda=" + f(d.lambda) + " m=" + f(d.p.m) + " omega=" + f(d.p.omega);
      }
    }
  }
  return {worst < 1e-8, "max step increase=" + f(worst) + " (" + where + ")"};
}

Outcome c06() {
  double worst = 0.0;
  bool origin_exact = true;
  for (const auto& d : sample()) {
    const double w = std::sqrt(d.p.gap());
    const double expect = -0.25 * d.p.gap() * d.p.gap();
    for (double s : {w, -w}) worst = std::max(worst, std::abs(hamiltonian({0.0, s}, d.p) - expect));
    origin_exact = origin_exact && hamiltonian({0.0, 0.0}, d.p) == 0.0;
  }
  return {worst < 1e-12 && origin_exact,
          "max error=" + f(worst) + (origin_exact ? " H(0,0)=0" : " H(0,0)!=0")};
}

Outcome c07() {
  const double res = bubble_residual(log_grid(1e-3, 1e6, 2001));
  return {res < 1e-12, "residual=" + f(res)};
}

Outcome c08() {
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  const EpsilonStudy st = convergence_study(eps, 10.0, P, Tolerances::defaults(P));
  Outcome o{st.ratios.size() == 3, "ratios="};
  for (double r : st.ratios) {
    o.pass = o.pass && r >= 3.0 && r <= 5.0;
    o.detail += f(r) + " ";
  }
  return o;
}

Outcome c09() {
  const LogLawFit fit = fit_log_law(P, Tolerances::defaults(P));
  return {fit.c > 0.0 && fit.relative_residual < 0.1,
          "c=" + f(fit.c) + " residual=" + f(fit.relative_residual) +
              " (k1 log slope=" + f(fit.k1_slope) + ")"};
}

Outcome c10() {
  const Tolerances tol = Tolerances::defaults(P);
  const PerturbationRecord rec = integrate_remainder(0.2, P, tol);
  const std::vector<double> eps{0.2, 0.1, 0.05};
  const RemainderBound b = remainder_bound(eps, P, tol);
  Outcome o;
  o.pass = rec.relative_discrepancy < 1e-4 && b.holds[1] && b.holds[2];
  o.detail = "oracle rel=" + f(rec.relative_discrepancy) + " C=" + f(b.C) + " ratios=" +
             f(b.ratios[0]) + "," + f(b.ratios[1]) + "," + f(b.ratios[2]) + " bound " +
             (b.holds[1] && b.holds[2] ? "holds" : "violated");
  return o;
}

Outcome c11() {
  // r = 0 is the shared start (0, 1) and is left out
  const auto grid = uniform_grid(5.0, 500);
  Outcome o{true, ""};
  for (double e : {0.5, 0.1}) {
    const double d = rescaling_commutation(e, P, Tolerances::defaults(P), grid);
    o.pass = o.pass && d < 1e-7;
    o.detail += "eps=" + f(e) + " dev=" + f(d) + " ";
  }
  return o;
}

Outcome c12() {
  const Tolerances tol = Tolerances::defaults(P);
  std::vector<double> dev;
  for (double rho : {1e3, 2e3, 4e3, 8e3}) dev.push_back(stability_compare(rho, {0.0, 1.0}, 10.0, P, tol));
  Outcome o{true, "ratios="};
  for (std::size_t i = 0; i + 1 < dev.size(); ++i) {
    const double r = dev[i] / dev[i + 1];
    o.pass = o.pass && r >= 1.5 && r <= 2.5;
    o.detail += f(r) + " ";
  }
  return o;
}

Outcome c13() {
  const app::RunConfig cfg;
  const app::Result a = app::run(app::Command::GroundState, cfg);
  const app::Result b = app::run(app::Command::GroundState, cfg);
  const bool same = a.exit_code == 0 && a.json == b.json;
  return {same, std::to_string(a.json.size()) + " bytes, " + (same ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "ground_state", 10, c01},         {2, "decay_bound", 0, c02},
      {3, "a0_interval", 2, c03},           {4, "a0_bounded", 2, c04},
      {5, "energy_monotone", 0, c05},       {6, "equilibrium_energies", 0, c06},
      {7, "bubble_exact", 0, c07},          {8, "eps2_convergence", 30, c08},
      {9, "first_order_log_law", 0, c09},   {10, "remainder_oracle", 60, c10},
      {11, "rescaling_commutation", 0, c11}, {12, "shifted_stability", 0, c12},
      {13, "determinism", 0, c13},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 2;
    }
  }

  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      o.pass = false;
      o.detail += " [over time limit " + f(c.time_limit) + " s]";
    }
    std::printf("%s [%02d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    if (!o.pass) ++failed;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed ? 1 : 0;
}
