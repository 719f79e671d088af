#include "sdirac/app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sdirac/asymptotics.hpp"
#include "sdirac/phaseflow.hpp"
#include "sdirac/radial.hpp"
#include "sdirac/shooting.hpp"

namespace sdirac::app {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Commands and config
// ---------------------------------------------------------------------------

std::optional<Command> parse_command(std::string_view name) {
  if (name == "ground-state") return Command::GroundState;
  if (name == "classify") return Command::Classify;
  if (name == "asymptotics") return Command::Asymptotics;
  if (name == "portrait") return Command::Portrait;
  if (name == "verify") return Command::Verify;
  return std::nullopt;
}

std::string_view command_name(Command c) {
  switch (c) {
    case Command::GroundState: return "ground-state";
    case Command::Classify: return "classify";
    case Command::Asymptotics: return "asymptotics";
    case Command::Portrait: return "portrait";
    case Command::Verify: return "verify";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string normalize_key(std::string_view key) {
  std::string k = trim(key);
  for (char& c : k) {
    if (c == '_') c = '-';
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return k;
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double x = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (t.empty() || ec != std::errc() || ptr != last || !std::isfinite(x))
    throw ConfigError("invalid number for '" + std::string(key) + "': '" + t + "'");
  return x;
}

int parse_int(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  int x = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("invalid integer for '" + std::string(key) + "': '" + t + "'");
  return x;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = normalize_key(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("invalid boolean for '" + std::string(key) + "': '" + std::string(text) + "'");
}

void append_list(std::vector<double>& dst, std::string_view key, std::string_view text) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto piece = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - pos);
    dst.push_back(parse_double(key, piece));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
}

}  // namespace

void RunConfig::set(std::string_view raw_key, std::string_view value) {
  const std::string key = normalize_key(raw_key);
  if (key == "m") params.m = parse_double(key, value);
  else if (key == "omega") params.omega = parse_double(key, value);
  else if (key == "lambda") append_list(lambdas, key, value);
  else if (key == "epsilon") append_list(epsilons, key, value);
  else if (key == "tol-rel") tol_rel = parse_double(key, value);
  else if (key == "tol-abs") tol_abs = parse_double(key, value);
  else if (key == "rmax") rmax = parse_double(key, value);
  else if (key == "format") {
    const std::string f = normalize_key(value);
    if (f == "csv") format = Format::Csv;
    else if (f == "json") format = Format::Json;
    else throw ConfigError("format must be csv or json (got '" + std::string(value) + "')");
  } else if (key == "out") out = trim(value);
  else if (key == "t") T = parse_double(key, value);
  else if (key == "lambda-tol") lambda_tol = parse_double(key, value);
  else if (key == "resolution") resolution = parse_int(key, value);
  else if (key == "level") level = parse_double(key, value);
  else if (key == "verify-fault") verify_fault = parse_bool(key, value);
  else throw ConfigError("unknown configuration key '" + std::string(raw_key) + "'");
}

void RunConfig::clear(std::string_view raw_key) {
  const std::string key = normalize_key(raw_key);
  const RunConfig d;
  if (key == "lambda") lambdas.clear();
  else if (key == "epsilon") epsilons.clear();
  else if (key == "m") params.m = d.params.m;
  else if (key == "omega") params.omega = d.params.omega;
  else if (key == "tol-rel") tol_rel.reset();
  else if (key == "tol-abs") tol_abs.reset();
  else if (key == "rmax") rmax.reset();
  else if (key == "format") format = d.format;
  else if (key == "out") out.clear();
  else if (key == "t") T = d.T;
  else if (key == "lambda-tol") lambda_tol = d.lambda_tol;
  else if (key == "resolution") resolution = d.resolution;
  else if (key == "level") level = d.level;
  else if (key == "verify-fault") verify_fault = false;
  else throw ConfigError("unknown configuration key '" + std::string(raw_key) + "'");
}

void RunConfig::load_text(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    try {
      set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  load_text(ss.str());
}

void RunConfig::validate() const {
  try {
    params.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  for (double l : lambdas)
    if (!(l > 0.0)) throw ConfigError("every lambda must be positive (got " + format_number(l) + ")");
  for (double e : epsilons)
    if (!(e > 0.0 && e < 1.0))
      throw ConfigError("every epsilon must lie in (0, 1) (got " + format_number(e) + ")");
  auto positive = [](const std::optional<double>& x) { return !x || *x > 0.0; };
  if (!positive(tol_rel) || !positive(tol_abs) || !positive(rmax))
    throw ConfigError("tol-rel, tol-abs and rmax must be positive");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (!(lambda_tol > 0.0)) throw ConfigError("lambda-tol must be positive");
  if (resolution < 2 || resolution > 8192) throw ConfigError("resolution must lie in [2, 8192]");
}

Tolerances RunConfig::tolerances() const {
  Tolerances t = Tolerances::defaults(params);
  if (tol_rel) t.rel = *tol_rel;
  if (tol_abs) t.abs = *tol_abs;
  if (rmax) t.rmax = *rmax;
  return t;
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_field(t.columns[i]);
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

namespace {

// JSON has no inf/nan; they become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
json opt_num(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

std::string fmt(double x) { return format_number(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(bool b) { return b ? "true" : "false"; }
std::string fmt(const std::optional<double>& x) { return x ? format_number(*x) : ""; }

template <class... Ts>
std::vector<std::string> row(const Ts&... xs) {
  return {fmt(xs)...};
}

std::string verdict_label(const Classification& c) {
  switch (c.verdict) {
    case Verdict::A: return "A(" + std::to_string(c.k) + ")";
    case Verdict::ICandidate: return "ICandidate(" + std::to_string(c.k) + ")";
    case Verdict::Undecided: return "Undecided";
  }
  return "?";
}

json state_json(State s) { return json{{"u", num(s.u)}, {"v", num(s.v)}}; }

json tolerances_json(const Tolerances& t) {
  return json{{"rel", num(t.rel)}, {"abs", num(t.abs)}, {"r0", num(t.r0)},
              {"eta", num(t.eta)}, {"delta", num(t.delta)}, {"rmax", num(t.rmax)}};
}

json params_json(const RunConfig& cfg) {
  json j;
  j["m"] = num(cfg.params.m);
  j["omega"] = num(cfg.params.omega);
  j["lambda"] = json::array();
  for (double l : cfg.lambdas) j["lambda"].push_back(num(l));
  j["epsilon"] = json::array();
  for (double e : cfg.epsilons) j["epsilon"].push_back(num(e));
  try {
    j["tolerances"] = tolerances_json(cfg.tolerances());
  } catch (...) {
    j["tolerances"] = nullptr;
  }
  j["T"] = num(cfg.T);
  j["lambda_tol"] = num(cfg.lambda_tol);
  j["resolution"] = cfg.resolution;
  j["level"] = num(cfg.level);
  j["format"] = cfg.format == Format::Csv ? "csv" : "json";
  return j;
}

json table_json(const Table& t) {
  json j;
  j["name"] = t.name;
  j["columns"] = t.columns;
  j["rows"] = t.rows;
  return j;
}

json event_json(const Event& e) {
  return json{{"kind", std::string(to_string(e.kind))},
              {"r", num(e.r)},
              {"state", state_json(e.state)},
              {"value", num(e.payload.value)},
              {"index", e.payload.index},
              {"step", json::array({num(e.payload.step_lo), num(e.payload.step_hi)})}};
}

json classification_json(const Classification& c) {
  json j;
  j["lambda"] = num(c.lambda);
  j["verdict"] = to_string(c.verdict);
  j["label"] = verdict_label(c);
  j["k"] = c.k;
  j["node_count"] = c.node_count;
  j["evidence"] = {{"r", num(c.evidence_r)}, {"H", num(c.evidence_H)}};
  if (c.certificate) {
    const auto& ct = *c.certificate;
    j["evidence"]["certificate"] = {{"R", num(ct.R)},           {"H_at_R", num(ct.H_at_R)},
                                    {"uv_product", num(ct.uv_product)}, {"v_squared", num(ct.v_squared)},
                                    {"C0", num(ct.C0)},         {"prior_nodes", ct.prior_nodes}};
  } else {
    j["evidence"]["certificate"] = nullptr;
  }
  j["summary"] = {{"r_end", num(c.summary.r_end)}, {"end", state_json(c.summary.end)},
                  {"H_end", num(c.summary.H_end)}, {"H_min", num(c.summary.H_min)},
                  {"norm_end", num(c.summary.norm_end)}, {"samples", c.summary.steps}};
  j["events"] = json::array();
  for (const auto& e : c.events) j["events"].push_back(event_json(e));
  j["note"] = c.note;
  return j;
}

// value of |u|+|v| at the profile sample closest to r
std::optional<double> norm_near(const Trajectory& t, double r) {
  const Sample* best = nullptr;
  for (const auto& s : t.samples)
    if (!best || std::abs(s.r - r) < std::abs(best->r - r)) best = &s;
  if (!best || std::abs(best->r - r) > 0.5) return std::nullopt;
  return l1_norm(best->s);
}

struct Output {
  json payload;
  std::vector<Table> tables;
  std::vector<std::string> diagnostics;
  int exit_code = 0;
};

// ---------------------------------------------------------------------------
// ground-state
// ---------------------------------------------------------------------------

Output ground_state(const RunConfig& cfg) {
  Output o;
  const Params& p = cfg.params;
  const Tolerances tol = cfg.tolerances();
  const Bracket b = bracket_search(p, tol);
  BisectOptions bo;
  bo.lambda_tol = cfg.lambda_tol;
  const GroundState gs = bisect(b, p, tol, bo);

  json& j = o.payload;
  j["lambda_star"] = num(gs.lambda_star);
  j["bracket"] = {{"initial", {num(b.lo), num(b.hi)}}, {"final", {num(gs.lo), num(gs.hi)}}};
  j["bracket_width"] = num(gs.bracket_width);
  j["bisection_steps"] = gs.bisection_steps;
  j["converged"] = gs.converged;
  j["node_count"] = gs.node_count;
  j["profile_verdict"] = to_string(gs.profile_verdict);
  j["decay_slope"] = num(gs.decay_slope);
  j["decay_window"] = {num(gs.decay_window.first), num(gs.decay_window.second)};
  j["decay_bound"] = num(-0.5 * p.gap());
  j["tail_norm"] = json::array();
  for (double r : {0.25 * tol.rmax, 0.5 * tol.rmax, tol.rmax})
    j["tail_norm"].push_back({{"r", num(r)}, {"norm", opt_num(norm_near(gs.profile, r))}});
  j["stage_radii"] = json::array();
  for (double r : gs.stage_radii) j["stage_radii"].push_back(num(r));
  j["max_join_jump"] = num(gs.max_join_jump);
  j["bracket_history"] = json::array();
  for (const auto& c : b.history)
    j["bracket_history"].push_back({{"lambda", num(c.lambda)}, {"label", verdict_label(c)},
                                    {"node_count", c.node_count}});
  j["bisection_history"] = json::array();
  for (const auto& c : gs.history)
    j["bisection_history"].push_back({{"lambda", num(c.lambda)}, {"label", verdict_label(c)},
                                      {"node_count", c.node_count}});

  Table prof{"profile", {"r", "u", "v", "H"}, {}};
  for (const auto& s : gs.profile.samples) prof.rows.push_back(row(s.r, s.s.u, s.s.v, s.H));
  j["profile"] = table_json(prof);
  o.tables.push_back(std::move(prof));

  Table hist{"bisection", {"step", "lambda", "verdict", "node_count"}, {}};
  int step = 0;
  for (const auto& c : gs.history)
    hist.rows.push_back({std::to_string(++step), fmt(c.lambda), verdict_label(c), fmt(c.node_count)});
  o.tables.push_back(std::move(hist));

  for (const auto& n : gs.notes) o.diagnostics.push_back(n);
  if (!gs.converged) {
    o.diagnostics.push_back("bisection did not converge; best candidate reported");
    o.exit_code = 2;
  }
  // a converged bracket is not enough: the profile must be node-free and
  // decay, otherwise rmax was too short to separate the two sides
  if (gs.converged && gs.node_count != 0) {
    o.diagnostics.push_back("profile has sign changes of v");
    o.exit_code = 2;
  }
  if (gs.converged && !std::isfinite(gs.decay_slope)) {
    o.diagnostics.push_back("profile shows no decay window on [0, rmax]; rmax may be too short");
    o.exit_code = 2;
  }
  return o;
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

Output classify_cmd(const RunConfig& cfg) {
  Output o;
  if (cfg.lambdas.empty()) throw ConfigError("classify needs at least one lambda");
  const Tolerances tol = cfg.tolerances();
  Table t{"classify",
          {"lambda", "verdict", "k", "node_count", "evidence_r", "evidence_H", "certificate_R",
           "r_end", "norm_end", "H_min"},
          {}};
  Table ev{"events", {"lambda", "kind", "r", "u", "v", "value", "index"}, {}};
  o.payload["classifications"] = json::array();
  for (double lam : cfg.lambdas) {
    const Classification c = classify(lam, cfg.params, tol);
    o.payload["classifications"].push_back(classification_json(c));
    std::optional<double> cr;
    if (c.certificate) cr = c.certificate->R;
    t.rows.push_back({fmt(lam), verdict_label(c), fmt(c.k), fmt(c.node_count), fmt(c.evidence_r),
                      fmt(c.evidence_H), fmt(cr), fmt(c.summary.r_end), fmt(c.summary.norm_end),
                      fmt(c.summary.H_min)});
    for (const auto& e : c.events)
      ev.rows.push_back({fmt(lam), std::string(to_string(e.kind)), fmt(e.r), fmt(e.state.u),
                         fmt(e.state.v), fmt(e.payload.value), fmt(e.payload.index)});
    if (!c.note.empty()) o.diagnostics.push_back("lambda " + fmt(lam) + ": " + c.note);
  }
  o.tables.push_back(std::move(t));
  o.tables.push_back(std::move(ev));
  return o;
}

// ---------------------------------------------------------------------------
// asymptotics
// ---------------------------------------------------------------------------

Output asymptotics_cmd(const RunConfig& cfg) {
  Output o;
  const Params& p = cfg.params;
  const Tolerances tol = cfg.tolerances();
  std::vector<double> eps = cfg.epsilons;
  if (eps.empty()) eps = {0.2, 0.1, 0.05, 0.025};
  for (std::size_t i = 1; i < eps.size(); ++i)
    if (!(eps[i] < eps[i - 1])) throw ConfigError("epsilon list must be strictly decreasing");

  const EpsilonStudy st = convergence_study(eps, cfg.T, p, tol);
  json& j = o.payload;
  j["T"] = num(st.T);
  j["convergence"] = json::array();
  Table conv{"convergence", {"epsilon", "sup_error", "ratio_to_next", "node_radius"}, {}};
  for (std::size_t i = 0; i < st.epsilons.size(); ++i) {
    std::optional<double> ratio;
    if (i < st.ratios.size()) ratio = st.ratios[i];
    j["convergence"].push_back({{"epsilon", num(st.epsilons[i])},
                                {"sup_error", num(st.sup_errors[i])},
                                {"node_radius", opt_num(st.node_radii[i])}});
    conv.rows.push_back(row(st.epsilons[i], st.sup_errors[i], ratio, st.node_radii[i]));
  }
  j["ratios"] = json::array();
  for (double r : st.ratios) j["ratios"].push_back(num(r));

  const auto grid = log_grid(1e-3, 1e6, 181);
  j["bubble_residual"] = num(bubble_residual(grid));

  const LogLawFit fit = fit_log_law(p, tol);
  j["first_order"] = {{"window", {num(fit.r_lo), num(fit.r_hi)}},
                      {"c", num(fit.c)},
                      {"relative_residual", num(fit.relative_residual)},
                      {"k1_slope", num(fit.k1_slope)},
                      {"k1_intercept", num(fit.k1_intercept)},
                      {"growth_ratio", num(fit.growth_ratio)}};
  Table fo{"first_order", {"r", "h1", "k1"}, {}};
  for (const auto& s : fit.samples) fo.rows.push_back(row(s.r, s.h1, s.k1));

  Table rem{"remainder",
            {"epsilon", "sup_norm", "threshold", "threshold_breached", "max_discrepancy",
             "relative_discrepancy", "bound_reference", "bound_ratio", "bound_holds"},
            {}};
  Table pert{"perturbation",
             {"epsilon", "r", "h1", "k1", "h2", "k2", "h2_subtraction", "k2_subtraction"},
             {}};
  j["remainder"] = json::array();
  double C = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const PerturbationRecord rec = integrate_remainder(eps[i], p, tol);
    const double ref = std::log(1.0 / eps[i]) / eps[i];
    const double ratio = rec.sup_norm / ref;
    if (i == 0) C = ratio;
    const bool holds = ratio <= C * (1.0 + 1e-12);
    j["remainder"].push_back({{"epsilon", num(eps[i])},
                              {"sup_norm", num(rec.sup_norm)},
                              {"threshold", num(rec.threshold)},
                              {"threshold_breached", rec.threshold_breached},
                              {"breach_radius", opt_num(rec.breach_radius)},
                              {"max_discrepancy", num(rec.max_discrepancy)},
                              {"relative_discrepancy", num(rec.relative_discrepancy)},
                              {"agreement_window", num(rec.agreement_window)},
                              {"bound_reference", num(ref)},
                              {"bound_ratio", num(ratio)},
                              {"bound_holds", holds}});
    rem.rows.push_back(row(eps[i], rec.sup_norm, rec.threshold, rec.threshold_breached,
                           rec.max_discrepancy, rec.relative_discrepancy, ref, ratio, holds));
    // every 10th sample keeps the table readable
    for (std::size_t k = 9; k < rec.samples.size(); k += 10) {
      const auto& s = rec.samples[k];
      pert.rows.push_back(row(eps[i], s.r, s.h1, s.k1, s.h2, s.k2, s.h2_other, s.k2_other));
    }
    if (rec.threshold_breached)
      o.diagnostics.push_back("epsilon " + fmt(eps[i]) + ": remainder reached the threshold at r=" +
                              fmt(rec.breach_radius));
    if (!holds)
      o.diagnostics.push_back("epsilon " + fmt(eps[i]) + ": remainder exceeds C/eps ln(1/eps) with C=" +
                              fmt(C) + " calibrated at epsilon " + fmt(eps[0]));
  }
  j["bound_constant"] = num(C);
  j["remainder_table"] = table_json(rem);
  j["first_order_table"] = table_json(fo);

  o.tables.push_back(std::move(conv));
  o.tables.push_back(std::move(rem));
  o.tables.push_back(std::move(fo));
  o.tables.push_back(std::move(pert));
  return o;
}

// ---------------------------------------------------------------------------
// portrait
// ---------------------------------------------------------------------------

Output portrait_cmd(const RunConfig& cfg) {
  Output o;
  const Params& p = cfg.params;
  const Tolerances tol = cfg.tolerances();
  const LevelSet ls = level_set(cfg.level, p, cfg.resolution);

  json& j = o.payload;
  j["level"] = num(ls.level);
  j["half_width"] = num(ls.half_width);
  j["resolution"] = ls.resolution;
  j["max_residual"] = num(ls.max_residual(p));
  j["equilibria"] = json::array();
  for (const auto& e : equilibria(p))
    j["equilibria"].push_back({{"state", state_json(e.point)}, {"H", num(e.energy)}});
  j["polylines"] = json::array();
  Table lt{"level_set", {"piece", "closed", "u", "v"}, {}};
  for (std::size_t k = 0; k < ls.polylines.size(); ++k) {
    json pts = json::array();
    for (const State& s : ls.polylines[k]) {
      pts.push_back({num(s.u), num(s.v)});
      lt.rows.push_back({std::to_string(k), fmt(static_cast<bool>(ls.closed[k])), fmt(s.u), fmt(s.v)});
    }
    j["polylines"].push_back({{"closed", static_cast<bool>(ls.closed[k])}, {"points", pts}});
  }

  Table tr{"trajectories", {"lambda", "r", "u", "v", "H"}, {}};
  Table at{"attraction",
           {"lambda", "k", "entered_at", "r_end", "terminal_u", "terminal_v", "terminal_H",
            "nearest_v", "terminal_distance", "u_sign_alternations"},
           {}};
  j["trajectories"] = json::array();
  for (double lam : cfg.lambdas) {
    const Classification c = classify(lam, p, tol);
    IntegrateOptions io;
    io.detectors.v_sign_change = false;
    const Trajectory t = integrate_from_origin(lam, p, tol, io);
    json jt;
    jt["lambda"] = num(lam);
    jt["label"] = verdict_label(c);
    jt["samples"] = t.samples.size();
    for (const auto& s : t.samples) tr.rows.push_back(row(lam, s.r, s.s.u, s.s.v, s.H));
    if (c.verdict == Verdict::A) {
      const AttractionReport a = attraction_report(lam, p, tol);
      jt["attraction"] = {{"k", a.k},
                          {"entered_at", num(a.entered_at)},
                          {"r_end", num(a.r_end)},
                          {"terminal", state_json(a.terminal)},
                          {"terminal_H", num(a.terminal_H)},
                          {"nearest_equilibrium", state_json(a.nearest_equilibrium)},
                          {"terminal_distance", num(a.terminal_distance)},
                          {"u_sign_alternations", a.u_sign_alternations}};
      at.rows.push_back(row(lam, a.k, a.entered_at, a.r_end, a.terminal.u, a.terminal.v, a.terminal_H,
                            a.nearest_equilibrium.v, a.terminal_distance, a.u_sign_alternations));
    } else {
      jt["attraction"] = nullptr;
    }
    j["trajectories"].push_back(jt);
  }
  o.tables.push_back(std::move(lt));
  o.tables.push_back(std::move(tr));
  o.tables.push_back(std::move(at));
  return o;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  std::string module;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

Check make_check(std::string name, std::string module, double value, double bound,
                 std::string detail = {}) {
  return {std::move(name), std::move(module), value <= bound, value, bound, std::move(detail)};
}

std::vector<Check> run_checks(const RunConfig& cfg, std::vector<std::string>& diag);

Output verify_cmd(const RunConfig& cfg) {
  Output o;
  const auto checks = run_checks(cfg, o.diagnostics);
  Table t{"verify", {"check", "module", "passed", "value", "bound", "detail"}, {}};
  o.payload["checks"] = json::array();
  int failed = 0;
  for (const auto& c : checks) {
    if (!c.passed) ++failed;
    o.payload["checks"].push_back({{"check", c.name},
                                   {"module", c.module},
                                   {"passed", c.passed},
                                   {"value", num(c.value)},
                                   {"bound", num(c.bound)},
                                   {"detail", c.detail}});
    t.rows.push_back({c.name, c.module, fmt(c.passed), fmt(c.value), fmt(c.bound), c.detail});
  }
  o.payload["total"] = static_cast<int>(checks.size());
  o.payload["failed"] = failed;
  o.tables.push_back(std::move(t));
  if (failed > 0) o.exit_code = 3;
  return o;
}

// Runs one check body; an exception inside is a failed check, not a crash.
void guarded(std::vector<Check>& out, const std::string& name, const std::string& module,
             const std::function<Check()>& body) {
  try {
    out.push_back(body());
  } catch (const std::exception& e) {
    out.push_back({name, module, false, std::numeric_limits<double>::quiet_NaN(), 0.0,
                   std::string("exception: ") + e.what()});
  }
}

std::vector<Check> run_checks(const RunConfig& cfg, std::vector<std::string>& diag) {
  std::vector<Check> out;
  const Params p = cfg.params;
  const Tolerances tol = cfg.tolerances();
  const std::vector<double> lambdas{0.25, 0.5, 1.0, 1.5, 2.0, 5.0};

  // radial-core
  guarded(out, "energy_monotone", "radial-core", [&] {
    double worst = -1e300;
    for (double lam : lambdas) {
      const Trajectory t = integrate_from_origin(lam, p, tol);
      for (std::size_t i = 1; i < t.samples.size(); ++i) {
        const double allow = 10.0 * tol.rel * (1.0 + std::abs(t.samples[i - 1].H));
        worst = std::max(worst, (t.samples[i].H - t.samples[i - 1].H) / allow);
      }
    }
    return make_check("energy_monotone", "radial-core", worst, 1.0,
                      "max increase of H per sample over 10 tol.rel (1+|H|)");
  });
  guarded(out, "level_confinement", "radial-core", [&] {
    double worst = -1e300;
    for (double lam : lambdas) {
      const double H0 = hamiltonian({0.0, lam}, p);
      for (const auto& s : integrate_from_origin(lam, p, tol).samples)
        worst = std::max(worst, s.H - H0);
    }
    return make_check("level_confinement", "radial-core", worst, tol.abs, "max H - H(0,lambda)");
  });
  guarded(out, "sign_symmetry", "radial-core", [&] {
    double worst = 0.0;
    IntegrateOptions io;
    io.grid = uniform_grid(10.0, 200);
    io.r_end = 10.0;
    for (double lam : {0.5, 2.0}) {
      const State s = taylor_start(lam, p, tol.r0);
      const Trajectory a = integrate(System::radial(), tol.r0, s, p, tol, io);
      const Trajectory b = integrate(System::radial(), tol.r0, -s, p, tol, io);
      for (std::size_t i = 0; i < std::min(a.samples.size(), b.samples.size()); ++i)
        worst = std::max(worst, l1_norm(a.samples[i].s + b.samples[i].s));
    }
    return make_check("sign_symmetry", "radial-core", worst, 100.0 * tol.abs,
                      "max |y(lambda) + y(-lambda)| on [0,10]");
  });
  guarded(out, "hamiltonian_rate_fd", "radial-core", [&] {
    const double h = 1e-3;
    double worst = 0.0;
    for (double lam : {0.5, 1.5, 3.0}) {
      std::vector<double> grid;
      for (int k = 1; k <= 40; ++k) {
        const double r = 0.25 * k;
        grid.insert(grid.end(), {r - h, r, r + h});
      }
      IntegrateOptions io;
      io.grid = grid;
      io.r_end = grid.back();
      const Trajectory t = integrate_from_origin(lam, p, tol, io);
      for (std::size_t i = 0; i + 2 < t.samples.size(); i += 3) {
        const auto& c = t.samples[i + 1];
        const double fd = (t.samples[i + 2].H - t.samples[i].H) / (2.0 * h);
        const double exact = hamiltonian_rate(c.r, c.s, p);
        worst = std::max(worst, std::abs(fd - exact) / (1.0 + std::abs(exact)));
      }
    }
    return make_check("hamiltonian_rate_fd", "radial-core", worst, 1e-4 + 10.0 * tol.rel / 1e-3,
                      "central difference of H against dH/dr, step 1e-3");
  });
  guarded(out, "r2h_rate_fd", "radial-core", [&] {
    const double h = 1e-3;
    double worst = 0.0;
    for (double lam : {0.5, 1.5, 3.0}) {
      std::vector<double> grid;
      for (int k = 1; k <= 40; ++k) {
        const double r = 0.25 * k;
        grid.insert(grid.end(), {r - h, r, r + h});
      }
      IntegrateOptions io;
      io.grid = grid;
      io.r_end = grid.back();
      const Trajectory t = integrate_from_origin(lam, p, tol, io);
      for (std::size_t i = 0; i + 2 < t.samples.size(); i += 3) {
        const auto& a = t.samples[i];
        const auto& b = t.samples[i + 2];
        const auto& c = t.samples[i + 1];
        const double fd = (b.r * b.r * b.H - a.r * a.r * a.H) / (2.0 * h) / c.r;
        const double exact = r2h_rate(c.r, c.s, p);
        worst = std::max(worst, std::abs(fd - exact) / (1.0 + std::abs(exact)));
      }
    }
    return make_check("r2h_rate_fd", "radial-core", worst, 1e-4 + 10.0 * tol.rel / 1e-3,
                      "central difference of r^2 H over r against the identity");
  });
  guarded(out, "autonomous_conservation", "radial-core", [&] {
    double worst = 0.0;
    IntegrateOptions io;
    io.detectors.v_sign_change = false;
    io.r_end = 50.0;
    for (State s : {State{0.3, 0.8}, State{0.1, 0.9}, State{0.5, 0.0}}) {
      const Trajectory t = integrate(System::autonomous(), 0.0, s, p, tol, io);
      for (const auto& x : t.samples) worst = std::max(worst, std::abs(x.H - t.samples.front().H));
    }
    return make_check("autonomous_conservation", "radial-core", worst, 1e3 * tol.abs,
                      "max |H - H(start)| over [0,50]");
  });
  guarded(out, "taylor_consistency", "radial-core", [&] {
    double worst = 0.0;
    const double r0 = 1e-2;
    for (double lam : {0.5, 1.0, 2.0}) {
      IntegrateOptions io;
      io.r_end = r0;
      const Trajectory t = integrate(System::radial(), r0 / 2, taylor_start(lam, p, r0 / 2), p, tol, io);
      const State want = taylor_start(lam, p, r0);
      const double scale = lam * (lam * lam + p.sum()) * (lam * lam + p.sum());
      worst = std::max(worst, l1_norm(t.back().s - want) / (scale * r0 * r0 * r0));
    }
    return make_check("taylor_consistency", "radial-core", worst, 1.0 + 10.0 * tol.abs / 1e-6,
                      "|y(r0) - series(r0)| / (lambda (lambda^2+m+omega)^2 r0^3), r0=1e-2");
  });
  guarded(out, "equilibrium_energies", "radial-core", [&] {
    double worst = std::abs(hamiltonian({0.0, 0.0}, p));
    for (const auto& e : equilibria(p)) {
      worst = std::max(worst, std::abs(hamiltonian(e.point, p) - e.energy));
      worst = std::max(worst, std::abs(e.energy - (e.point.v == 0.0 ? 0.0 : -0.25 * p.gap() * p.gap())));
    }
    return make_check("equilibrium_energies", "radial-core", worst, 1e-12, "");
  });

  // shooting
  guarded(out, "classification_evidence", "shooting", [&] {
    double bad = 0.0;
    for (double lam : {0.25, 0.5, 1.0, 2.0, 3.0, 10.0}) {
      const Classification c = classify(lam, p, tol);
      if (c.verdict != Verdict::A) continue;
      int before = 0;
      for (const auto& e : c.events)
        if (e.kind == EventKind::VSignChange && e.r < c.evidence_r) ++before;
      if (!(c.evidence_H < -tol.delta) || before != c.k) bad += 1.0;
    }
    return make_check("classification_evidence", "shooting", bad, 0.0,
                      "A(k) verdicts with H > -delta or a node count mismatch");
  });
  guarded(out, "certificate_soundness", "shooting", [&] {
    double bad = 0.0;
    int fired = 0;
    for (double lam : {0.5, 1.0, 1.5, 1.8, 2.0, 3.0, 5.0, 10.0}) {
      const Classification c = classify(lam, p, tol);
      if (!c.certificate) continue;
      ++fired;
      const bool ok = c.verdict == Verdict::A || c.node_count <= c.certificate->prior_nodes + 1;
      if (!ok) bad += 1.0;
    }
    return make_check("certificate_soundness", "shooting", bad, 0.0,
                      std::to_string(fired) + " certificates fired");
  });

  std::optional<GroundState> gs;
  try {
    BisectOptions bo;
    bo.lambda_tol = cfg.lambda_tol;
    gs = bisect(bracket_search(p, tol), p, tol, bo);
  } catch (const std::exception& e) {
    diag.push_back(std::string("ground state unavailable: ") + e.what());
  }
  guarded(out, "bisection_sides", "shooting", [&] {
    if (!gs) throw std::runtime_error("no ground state");
    double bad = 0.0;
    for (const auto& c : gs->history) {
      const bool noded = c.node_count >= 1;
      if (noded && c.lambda < gs->hi) bad += 1.0;
      if (c.verdict == Verdict::A && c.k == 0 && c.lambda > gs->lo) bad += 1.0;
    }
    return make_check("bisection_sides", "shooting", bad, 0.0, "history entries on the wrong side");
  });
  guarded(out, "ground_state_nodes", "shooting", [&] {
    if (!gs) throw std::runtime_error("no ground state");
    return make_check("ground_state_nodes", "shooting", gs->node_count, 0.0, "");
  });
  guarded(out, "ground_state_residual", "shooting", [&] {
    if (!gs) throw std::runtime_error("no ground state");
    double worst = 0.0;
    for (const auto& s : gs->profile.samples) {
      const State d = rhs_radial(s.r, s.s, p);
      worst = std::max(worst, l1_norm(d - s.ds) / (1e3 * tol.rel * (1.0 + l1_norm(s.s))));
    }
    return make_check("ground_state_residual", "shooting", worst, 1.0,
                      "|y' - rhs| over 1e3 tol.rel (1+|y|)");
  });
  guarded(out, "decay_slope", "shooting", [&] {
    if (!gs) throw std::runtime_error("no ground state");
    return make_check("decay_slope", "shooting", gs->decay_slope, -0.5 * p.gap() + 0.05,
                      "fitted slope of log(|u|+|v|)");
  });
  guarded(out, "decay_bound", "shooting", [&] {
    if (!gs) throw std::runtime_error("no ground state");
    double worst = 0.0;
    const auto& S = gs->profile.samples;
    const auto [ra, rb] = gs->decay_window;
    for (const auto& x : S) {
      if (x.r < ra || x.r > rb) continue;
      const auto half = norm_near(gs->profile, 0.5 * x.r);
      if (!half) continue;
      const double allowed = *half * std::exp(-p.gap() * (0.5 * x.r) / 2.0) * 1.1;
      worst = std::max(worst, l1_norm(x.s) / allowed);
    }
    return make_check("decay_bound", "shooting", worst, 1.0,
                      "|y(r)| over |y(r/2)| e^{-(m-omega) r/4} 1.1 on the tail window");
  });

  // asymptotics
  guarded(out, "bubble_residual", "asymptotics", [&] {
    const auto grid = log_grid(1e-3, 1e6, 181);
    const double res = bubble_residual(grid, cfg.verify_fault ? BubbleForm::Corrupted : BubbleForm::Exact);
    return make_check("bubble_residual", "asymptotics", res, 1e-12,
                      cfg.verify_fault ? "fault hook active" : "");
  });
  guarded(out, "rescaling_commutation", "asymptotics", [&] {
    double worst = 0.0;
    const auto grid = uniform_grid(5.0, 250);
    for (double e : {0.5, 0.1}) worst = std::max(worst, rescaling_commutation(e, p, tol, grid));
    return make_check("rescaling_commutation", "asymptotics", worst, 1e3 * tol.rel, "");
  });
  guarded(out, "rescaled_energy", "asymptotics", [&] {
    double worst = -1e300;
    double start = 0.0;
    for (double e : {0.5, 0.2, 0.1}) {
      const Trajectory t = integrate_rescaled(e, p, tol, 1.0 / e);
      const CubicFlow f = rescaled_flow(e, p);
      start = std::max(start, f.energy({0.0, 1.0}));
      for (std::size_t i = 1; i < t.samples.size(); ++i) {
        const double allow = 10.0 * tol.rel * (1.0 + std::abs(t.samples[i - 1].H));
        worst = std::max(worst, (t.samples[i].H - t.samples[i - 1].H) / allow);
      }
    }
    if (start > 1.0) worst = std::max(worst, 2.0);
    return make_check("rescaled_energy", "asymptotics", worst, 1.0,
                      "rescaled energy increase per sample over 10 tol.rel (1+|H|)");
  });
  guarded(out, "first_order_log_law", "asymptotics", [&] {
    const LogLawFit fit = fit_log_law(p, tol);
    Check c = make_check("first_order_log_law", "asymptotics", fit.relative_residual, 0.1,
                         "c=" + format_number(fit.c) + ", k1 slope " + format_number(fit.k1_slope));
    c.passed = c.passed && fit.c > 0.0;
    return c;
  });
  std::vector<PerturbationRecord> recs;
  for (double e : {0.2, 0.1, 0.05}) {
    try {
      recs.push_back(integrate_remainder(e, p, tol));
    } catch (const std::exception& ex) {
      diag.push_back("remainder at epsilon " + format_number(e) + ": " + ex.what());
    }
  }
  guarded(out, "remainder_cross_check", "asymptotics", [&] {
    if (recs.empty()) throw std::runtime_error("no remainder record");
    return make_check("remainder_cross_check", "asymptotics", recs.front().relative_discrepancy,
                      std::max(1e-4, 1e6 * tol.rel), "Subtraction against the remainder ODE at epsilon 0.2");
  });
  guarded(out, "remainder_threshold", "asymptotics", [&] {
    if (recs.size() < 3) throw std::runtime_error("missing remainder records");
    double worst = 0.0;
    for (const auto& r : recs) worst = std::max(worst, r.sup_norm / r.threshold);
    return make_check("remainder_threshold", "asymptotics", worst, 1.0,
                      "sup (|h2|+|k2|) over eps^{-3/2}, epsilon 0.2, 0.1, 0.05");
  });

  // phaseflow
  guarded(out, "level_set_residual", "phaseflow", [&] {
    double worst = 0.0;
    for (double L : {0.0, -0.5 * 0.25 * p.gap() * p.gap(), 0.5})
      worst = std::max(worst, level_set(L, p, cfg.resolution).max_residual(p));
    return make_check("level_set_residual", "phaseflow", worst, 1e-9, "");
  });
  guarded(out, "attraction_energy", "phaseflow", [&] {
    double bad = 0.0;
    const double lo = -0.25 * p.gap() * p.gap() - tol.abs;
    for (double lam : {0.5, 1.0, 3.0}) {
      const AttractionReport a = attraction_report(lam, p, tol);
      const double allow = 10.0 * tol.rel * (1.0 + std::abs(a.terminal_H));
      if (a.max_energy_increase > allow) bad += 1.0;
      if (a.terminal_H < lo || a.terminal_H > -tol.delta) bad += 1.0;
      if (a.u_sign_alternations < 2) bad += 1.0;
    }
    return make_check("attraction_energy", "phaseflow", bad, 0.0,
                      "H monotone after entry, terminal H in range, spiralling");
  });
  guarded(out, "stability_monotone", "phaseflow", [&] {
    double worst = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double rho : {1e3, 2e3, 4e3, 8e3}) {
      const double d = stability_compare(rho, {0.0, 1.0}, 10.0, p, tol);
      if (std::isfinite(prev)) worst = std::max(worst, d / prev);
      prev = d;
    }
    return make_check("stability_monotone", "phaseflow", worst, 1.1,
                      "dev(2 rho) over dev(rho), rho from 1e3 to 8e3");
  });

  // cli
  guarded(out, "determinism", "cli", [&] {
    RunConfig c2 = cfg;
    c2.verify_fault = false;
    const Result a = run(Command::GroundState, c2);
    const Result b = run(Command::GroundState, c2);
    return make_check("determinism", "cli", a.json == b.json ? 0.0 : 1.0, 0.0,
                      "two ground-state runs, byte comparison");
  });
  return out;
}

}  // namespace

Result run(Command cmd, const RunConfig& cfg) {
  Result res;
  Output o;
  try {
    cfg.validate();
    switch (cmd) {
      case Command::GroundState: o = ground_state(cfg); break;
      case Command::Classify: o = classify_cmd(cfg); break;
      case Command::Asymptotics: o = asymptotics_cmd(cfg); break;
      case Command::Portrait: o = portrait_cmd(cfg); break;
      case Command::Verify: o = verify_cmd(cfg); break;
    }
  } catch (const ConfigError& e) {
    o = Output{};
    o.exit_code = 1;
    o.diagnostics.push_back(std::string("usage error: ") + e.what());
  } catch (const std::exception& e) {
    o = Output{};
    o.exit_code = 2;
    o.diagnostics.push_back(std::string("computation failure: ") + e.what());
  }

  json env;
  env["schema_version"] = "1";
  env["command"] = std::string(command_name(cmd));
  env["params"] = params_json(cfg);
  env["payload"] = o.payload.is_null() ? json(nullptr) : o.payload;
  env["diagnostics"] = o.diagnostics;
  res.json = env.dump(2) + "\n";
  res.exit_code = o.exit_code;
  res.tables = std::move(o.tables);
  res.diagnostics = std::move(o.diagnostics);
  return res;
}

void write_result(const Result& r, const RunConfig& cfg) {
  namespace fs = std::filesystem;
  auto write_file = [](const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
  };
  if (cfg.format == Format::Json) {
    if (cfg.out.empty()) std::cout << r.json << std::flush;
    else write_file(cfg.out, r.json);
    return;
  }
  if (r.tables.empty()) return;
  if (cfg.out.empty()) {
    std::cout << to_csv(r.tables.front()) << std::flush;
    return;
  }
  const fs::path out(cfg.out);
  write_file(out, to_csv(r.tables.front()));
  for (std::size_t i = 1; i < r.tables.size(); ++i) {
    fs::path extra = out.parent_path() / (out.stem().string() + "." + r.tables[i].name + ".csv");
    write_file(extra, to_csv(r.tables[i]));
  }
}

}  // namespace sdirac::app
