#include "sdirac/sdirac.h"

#include <exception>
#include <new>
#include <string>
#include <vector>

#include "sdirac/app.hpp"
#include "sdirac/asymptotics.hpp"
#include "sdirac/radial.hpp"
#include "sdirac/shooting.hpp"

struct sdirac_config {
  sdirac::app::RunConfig cfg;
};

struct sdirac_result {
  sdirac::app::Result result;
  sdirac::app::RunConfig cfg;
  std::vector<std::string> csv;
};

namespace {

thread_local std::string last_error;

sdirac_status fail(sdirac_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

sdirac_status ok() {
  last_error.clear();
  return SDIRAC_OK;
}

// Maps exceptions thrown by the core onto status codes.
template <class F>
sdirac_status guard(F&& f) {
  try {
    return f();
  } catch (const sdirac::app::ConfigError& e) {
    return fail(SDIRAC_E_USAGE, e.what());
  } catch (const sdirac::DomainError& e) {
    return fail(SDIRAC_E_USAGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SDIRAC_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SDIRAC_E_COMPUTE, e.what());
  } catch (...) {
    return fail(SDIRAC_E_INTERNAL, "unknown error");
  }
}

sdirac::Params params_of(double m, double omega) {
  sdirac::Params p;
  p.m = m;
  p.omega = omega;
  p.validate();
  return p;
}

}  // namespace

extern "C" {

const char* sdirac_version(void) { return "1.0.0"; }

const char* sdirac_last_error(void) { return last_error.c_str(); }

sdirac_status sdirac_config_create(sdirac_config** out) {
  if (!out) return fail(SDIRAC_E_ARGUMENT, "null output pointer");
  return guard([&] {
    *out = new sdirac_config{};
    return ok();
  });
}

void sdirac_config_destroy(sdirac_config* cfg) { delete cfg; }

sdirac_status sdirac_config_set(sdirac_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(SDIRAC_E_ARGUMENT, "null argument");
  return guard([&] {
    cfg->cfg.set(key, value);
    return ok();
  });
}

sdirac_status sdirac_config_clear(sdirac_config* cfg, const char* key) {
  if (!cfg || !key) return fail(SDIRAC_E_ARGUMENT, "null argument");
  return guard([&] {
    cfg->cfg.clear(key);
    return ok();
  });
}

sdirac_status sdirac_config_load_file(sdirac_config* cfg, const char* path) {
  if (!cfg || !path) return fail(SDIRAC_E_ARGUMENT, "null argument");
  return guard([&] {
    cfg->cfg.load_file(path);
    return ok();
  });
}

sdirac_status sdirac_config_load_text(sdirac_config* cfg, const char* text) {
  if (!cfg || !text) return fail(SDIRAC_E_ARGUMENT, "null argument");
  return guard([&] {
    cfg->cfg.load_text(text);
    return ok();
  });
}

sdirac_status sdirac_run(const sdirac_config* cfg, const char* command, sdirac_result** out) {
  if (!cfg || !command || !out) return fail(SDIRAC_E_ARGUMENT, "null argument");
  *out = nullptr;
  const auto cmd = sdirac::app::parse_command(command);
  if (!cmd) return fail(SDIRAC_E_USAGE, std::string("unknown command '") + command + "'");
  return guard([&] {
    auto* r = new sdirac_result{sdirac::app::run(*cmd, cfg->cfg), cfg->cfg, {}};
    for (const auto& t : r->result.tables) r->csv.push_back(sdirac::app::to_csv(t));
    *out = r;
    const int code = r->result.exit_code;
    if (code == 0) return ok();
    std::string msg = r->result.diagnostics.empty() ? "run failed" : r->result.diagnostics.front();
    return fail(static_cast<sdirac_status>(code), msg);
  });
}

void sdirac_result_destroy(sdirac_result* res) { delete res; }

int sdirac_result_exit_code(const sdirac_result* res) { return res ? res->result.exit_code : -1; }

const char* sdirac_result_json(const sdirac_result* res) {
  return res ? res->result.json.c_str() : nullptr;
}

size_t sdirac_result_table_count(const sdirac_result* res) { return res ? res->csv.size() : 0; }

const char* sdirac_result_table_name(const sdirac_result* res, size_t index) {
  if (!res || index >= res->result.tables.size()) return nullptr;
  return res->result.tables[index].name.c_str();
}

const char* sdirac_result_table_csv(const sdirac_result* res, size_t index) {
  if (!res || index >= res->csv.size()) return nullptr;
  return res->csv[index].c_str();
}

size_t sdirac_result_diagnostic_count(const sdirac_result* res) {
  return res ? res->result.diagnostics.size() : 0;
}

const char* sdirac_result_diagnostic(const sdirac_result* res, size_t index) {
  if (!res || index >= res->result.diagnostics.size()) return nullptr;
  return res->result.diagnostics[index].c_str();
}

sdirac_status sdirac_result_write(const sdirac_result* res) {
  if (!res) return fail(SDIRAC_E_ARGUMENT, "null result");
  try {
    sdirac::app::write_result(res->result, res->cfg);
    return ok();
  } catch (const std::exception& e) {
    return fail(SDIRAC_E_IO, e.what());
  }
}

sdirac_status sdirac_hamiltonian(double m, double omega, double u, double v, double* H) {
  if (!H) return fail(SDIRAC_E_ARGUMENT, "null output pointer");
  return guard([&] {
    *H = sdirac::hamiltonian({u, v}, params_of(m, omega));
    return ok();
  });
}

sdirac_status sdirac_rhs_radial(double m, double omega, double r, double u, double v, double* du,
                                double* dv) {
  if (!du || !dv) return fail(SDIRAC_E_ARGUMENT, "null output pointer");
  return guard([&] {
    const sdirac::State d = sdirac::rhs_radial(r, {u, v}, params_of(m, omega));
    *du = d.u;
    *dv = d.v;
    return ok();
  });
}

sdirac_status sdirac_taylor_start(double m, double omega, double lambda, double r0, double* u,
                                  double* v) {
  if (!u || !v) return fail(SDIRAC_E_ARGUMENT, "null output pointer");
  return guard([&] {
    const sdirac::State s = sdirac::taylor_start(lambda, params_of(m, omega), r0);
    *u = s.u;
    *v = s.v;
    return ok();
  });
}

sdirac_status sdirac_bubble(double r, double* U, double* V) {
  if (!U || !V) return fail(SDIRAC_E_ARGUMENT, "null output pointer");
  if (!(r >= 0.0)) return fail(SDIRAC_E_USAGE, "bubble needs r >= 0");
  const sdirac::State b = sdirac::bubble(r);
  *U = b.u;
  *V = b.v;
  return ok();
}

sdirac_status sdirac_classify(const sdirac_config* cfg, double lambda, sdirac_classification* out) {
  if (!cfg || !out) return fail(SDIRAC_E_ARGUMENT, "null argument");
  return guard([&] {
    cfg->cfg.validate();
    const auto c = sdirac::classify(lambda, cfg->cfg.params, cfg->cfg.tolerances());
    out->lambda = c.lambda;
    out->verdict = c.verdict == sdirac::Verdict::A            ? SDIRAC_VERDICT_A
                   : c.verdict == sdirac::Verdict::ICandidate ? SDIRAC_VERDICT_ICANDIDATE
                                                              : SDIRAC_VERDICT_UNDECIDED;
    out->k = c.k;
    out->node_count = c.node_count;
    out->evidence_r = c.evidence_r;
    out->evidence_H = c.evidence_H;
    out->has_certificate = c.certificate ? 1 : 0;
    out->certificate_R = c.certificate ? c.certificate->R : 0.0;
    return ok();
  });
}

}  // extern "C"
