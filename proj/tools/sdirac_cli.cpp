// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdirac/sdirac.h"

namespace {

struct Flags {
  std::string command;
  std::optional<std::string> m, omega, tol_rel, tol_abs, rmax, format, out, config;
  std::vector<std::string> lambdas, epsilons;
};

int usage(const std::string& msg) {
  std::fprintf(stderr, "sdirac: %s\n", msg.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shooting construction of the cubic Dirac ground state"};
  Flags f;
  app.add_option("command", f.command, "ground-state | classify | asymptotics | portrait | verify")
      ->required()
      ->check(CLI::IsMember({"ground-state", "classify", "asymptotics", "portrait", "verify"}));
  app.add_option("--m", f.m, "mass m > omega");
  app.add_option("--omega", f.omega, "frequency 0 < omega < m");
  // one value per occurrence, so a trailing command is not swallowed
  app.add_option("--lambda", f.lambdas, "initial datum (repeatable)")->allow_extra_args(false);
  app.add_option("--epsilon", f.epsilons, "rescaling parameter in (0,1) (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--tol-rel", f.tol_rel, "relative step tolerance");
  app.add_option("--tol-abs", f.tol_abs, "absolute step tolerance");
  app.add_option("--rmax", f.rmax, "integration horizon");
  app.add_option("--format", f.format, "csv or json");
  app.add_option("--out", f.out, "output path (stdout when absent)");
  app.add_option("--config", f.config, "key = value file; flags override it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage(e.what());
  }

  sdirac_config* cfg = nullptr;
  if (sdirac_config_create(&cfg) != SDIRAC_OK) return usage(sdirac_last_error());

  auto set = [cfg](const char* key, const std::optional<std::string>& v) {
    return !v || sdirac_config_set(cfg, key, v->c_str()) == SDIRAC_OK;
  };
  auto set_list = [cfg](const char* key, const std::vector<std::string>& vs) {
    if (vs.empty()) return true;
    if (sdirac_config_clear(cfg, key) != SDIRAC_OK) return false;
    for (const auto& v : vs)
      if (sdirac_config_set(cfg, key, v.c_str()) != SDIRAC_OK) return false;
    return true;
  };

  bool good = !f.config || sdirac_config_load_file(cfg, f.config->c_str()) == SDIRAC_OK;
  good = good && set("m", f.m) && set("omega", f.omega) && set("tol-rel", f.tol_rel) &&
         set("tol-abs", f.tol_abs) && set("rmax", f.rmax) && set("format", f.format) &&
         set("out", f.out) && set_list("lambda", f.lambdas) && set_list("epsilon", f.epsilons);
  if (!good) {
    const std::string msg = sdirac_last_error();
    sdirac_config_destroy(cfg);
    return usage(msg);
  }

  sdirac_result* res = nullptr;
  sdirac_run(cfg, f.command.c_str(), &res);
  sdirac_config_destroy(cfg);
  if (!res) return usage(sdirac_last_error());

  for (size_t i = 0; i < sdirac_result_diagnostic_count(res); ++i)
    std::fprintf(stderr, "sdirac: %s\n", sdirac_result_diagnostic(res, i));
  int code = sdirac_result_exit_code(res);
  if (sdirac_result_write(res) != SDIRAC_OK) {
    std::fprintf(stderr, "sdirac: %s\n", sdirac_last_error());
    if (code == 0) code = 2;
  }
  sdirac_result_destroy(res);
  return code;
}
