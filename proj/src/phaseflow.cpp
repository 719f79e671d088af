#include "sdirac/phaseflow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sdirac/asymptotics.hpp"
#include "sdirac/shooting.hpp"

namespace sdirac {

std::size_t LevelSet::point_count() const {
  std::size_t n = 0;
  for (const auto& pl : polylines) n += pl.size();
  return n;
}

double LevelSet::max_residual(const Params& p) const {
  double worst = 0.0;
  for (const auto& pl : polylines)
    for (const State& s : pl) worst = std::max(worst, std::abs(hamiltonian(s, p) - level));
  return worst;
}

namespace {

// Root of g on [a, b] where g(a), g(b) straddle zero (>= 0 counts as
// positive, matching the corner classification).
template <class G>
double edge_root(G&& g, double a, double b) {
  const bool pa = g(a) >= 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= std::min(a, b) || mid >= std::max(a, b)) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm >= 0.0) == pa)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace

LevelSet level_set(double level, const Params& p, int resolution) {
  if (resolution < 2) throw DomainError("level_set resolution must be at least 2");
  LevelSet ls;
  ls.level = level;
  ls.resolution = resolution;

  const double h_min = -0.25 * p.gap() * p.gap();
  if (level < h_min - 1e-15) return ls;
  if (level <= h_min + 1e-15) {
    const double w = std::sqrt(p.gap());
    ls.polylines = {{State{0.0, w}}, {State{0.0, -w}}};
    ls.closed = {false, false};
    return ls;
  }

  const int n = resolution;
  const double W = 2.0 * std::sqrt(1.0 + level + p.sum());
  ls.half_width = W;
  const auto N = static_cast<std::size_t>(n + 1);
  auto coord = [&](int i) { return -W + 2.0 * W * i / n; };
  auto f = [&](double u, double v) { return hamiltonian({u, v}, p) - level; };

  std::vector<double> F(N * N);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) F[j * N + i] = f(coord(i), coord(j));
  auto pos = [&](int i, int j) { return F[j * N + i] >= 0.0; };

  // edge ids: 2*(vertex index) for the edge to the right, +1 for the edge up
  std::vector<int> point_of(2 * N * N, -1);
  std::vector<State> pts;
  auto edge_point = [&](int i, int j, bool up) {
    const std::size_t id = 2 * (j * N + i) + (up ? 1 : 0);
    if (point_of[id] < 0) {
      State s;
      if (up) {
        const double u = coord(i);
        s = {u, edge_root([&](double v) { return f(u, v); }, coord(j), coord(j + 1))};
      } else {
        const double v = coord(j);
        s = {edge_root([&](double u) { return f(u, v); }, coord(i), coord(i + 1)), v};
      }
      point_of[id] = static_cast<int>(pts.size());
      pts.push_back(s);
    }
    return point_of[id];
  };

  std::vector<std::array<int, 2>> links;  // per point, up to two neighbours
  auto link = [&](int a, int b) {
    if (links.size() < pts.size()) links.resize(pts.size(), {-1, -1});
    for (int x : {a, b}) {
      const int y = (x == a) ? b : a;
      auto& l = links[x];
      if (l[0] < 0) l[0] = y;
      else if (l[1] < 0) l[1] = y;
    }
  };

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::array<bool, 4> c{pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)};
      // e0 bottom, e1 right, e2 top, e3 left
      std::array<int, 4> e{-1, -1, -1, -1};
      if (c[0] != c[1]) e[0] = edge_point(i, j, false);
      if (c[1] != c[2]) e[1] = edge_point(i + 1, j, true);
      if (c[3] != c[2]) e[2] = edge_point(i, j + 1, false);
      if (c[0] != c[3]) e[3] = edge_point(i, j, true);
      const int crossings = static_cast<int>(std::count_if(e.begin(), e.end(), [](int x) { return x >= 0; }));
      if (crossings == 2) {
        int a = -1, b = -1;
        for (int x : e) {
          if (x < 0) continue;
          (a < 0 ? a : b) = x;
        }
        link(a, b);
      } else if (crossings == 4) {
        // saddle cell: the centre value decides which diagonal is joined
        const bool centre = f(0.5 * (coord(i) + coord(i + 1)), 0.5 * (coord(j) + coord(j + 1))) >= 0.0;
        const bool isolate_odd = (c[0] == centre);
        const int k0 = isolate_odd ? 1 : 0;
        for (int k : {k0, k0 + 2}) link(e[(k + 3) % 4], e[k]);
      }
    }
  }
  links.resize(pts.size(), {-1, -1});

  std::vector<bool> used(pts.size(), false);
  auto walk = [&](int start) {
    std::vector<State> line{pts[start]};
    used[start] = true;
    int prev = -1, cur = start;
    bool closed = false;
    for (;;) {
      int next = -1;
      for (int x : links[cur])
        if (x >= 0 && x != prev && !used[x]) {
          next = x;
          break;
        }
      if (next < 0) {
        for (int x : links[cur])
          if (x == start && prev != start && line.size() > 2) closed = true;
        break;
      }
      used[next] = true;
      line.push_back(pts[next]);
      prev = cur;
      cur = next;
    }
    ls.polylines.push_back(std::move(line));
    ls.closed.push_back(closed);
  };
  // open pieces first (they touch the box), then loops
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (!used[k] && (links[k][0] < 0 || links[k][1] < 0)) walk(static_cast<int>(k));
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (!used[k]) walk(static_cast<int>(k));
  return ls;
}

AttractionReport attraction_report(double lambda, const Params& p, const Tolerances& tol) {
  const Classification c = classify(lambda, p, tol);
  if (c.verdict != Verdict::A)
    throw DomainError("attraction_report needs a datum in A(k); lambda=" + std::to_string(lambda) +
                      " is " + to_string(c.verdict));

  AttractionReport rep;
  rep.lambda = lambda;
  rep.k = c.k;
  rep.entered_at = c.evidence_r;

  IntegrateOptions io;
  io.detectors.v_sign_change = false;
  const Trajectory t = integrate_from_origin(lambda, p, tol, io);
  const Sample& last = t.back();
  rep.r_end = last.r;
  rep.terminal = last.s;
  rep.terminal_H = last.H;

  const double w = std::sqrt(p.gap());
  const State up{0.0, w}, down{0.0, -w};
  const double du = l1_norm(last.s - up), dd = l1_norm(last.s - down);
  const State near = du <= dd ? up : down;
  rep.nearest_equilibrium = near;
  rep.terminal_distance = std::hypot(last.s.u - near.u, last.s.v - near.v);

  double prev_u = 0.0;
  double prev_H = 0.0;
  bool started = false;
  for (const auto& s : t.samples) {
    if (s.r < rep.entered_at) continue;
    if (started) {
      if ((prev_u > 0.0 && s.s.u < 0.0) || (prev_u < 0.0 && s.s.u > 0.0)) ++rep.u_sign_alternations;
      rep.max_energy_increase = std::max(rep.max_energy_increase, s.H - prev_H);
    }
    if (s.s.u != 0.0) prev_u = s.s.u;
    prev_H = s.H;
    started = true;
  }
  return rep;
}

double stability_compare(double rho, State start, double T, const Params& p, const Tolerances& tol,
                         int points) {
  if (!(rho > 0.0)) throw DomainError("shift rho must be positive");
  if (T < 0.0) throw DomainError("horizon T must be non-negative");
  if (T == 0.0) return 0.0;
  std::vector<double> grid{0.0};
  const auto rest = uniform_grid(T, std::max(points, 1));
  grid.insert(grid.end(), rest.begin(), rest.end());

  IntegrateOptions io;
  io.detectors.v_sign_change = false;
  io.grid = grid;
  io.r_end = T;
  const Trajectory a = integrate(System::shifted(rho), 0.0, start, p, tol, io);
  const Trajectory b = integrate(System::autonomous(), 0.0, start, p, tol, io);
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  double dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) dev = std::max(dev, l1_norm(a.samples[i].s - b.samples[i].s));
  return dev;
}

}  // namespace sdirac
