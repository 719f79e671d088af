#pragma once

// Command layer shared by the C API and the tests: configuration, the five
// commands, and serialization of their results.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sdirac/types.hpp"

namespace sdirac::app {

enum class Format { Csv, Json };
enum class Command { GroundState, Classify, Asymptotics, Portrait, Verify };

std::optional<Command> parse_command(std::string_view name);
std::string_view command_name(Command c);

/// Bad keys, bad values, or parameters outside 0 < omega < m.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Params params;
  std::vector<double> lambdas;
  std::vector<double> epsilons;
  std::optional<double> tol_rel;
  std::optional<double> tol_abs;
  std::optional<double> rmax;
  Format format = Format::Json;
  std::string out;

  double T = 10.0;
  double lambda_tol = 1e-12;
  int resolution = 512;
  double level = 0.0;
  bool verify_fault = false;  // test hook: corrupts the bubble in verify

  /// Recognised keys (with '-' or '_'): m, omega, lambda, epsilon, tol-rel,
  /// tol-abs, rmax, format, out, T, lambda-tol, resolution, level,
  /// verify-fault. lambda/epsilon accept comma lists and append.
  void set(std::string_view key, std::string_view value);
  /// Empties a list key (lambda, epsilon) or restores a scalar default.
  void clear(std::string_view key);
  /// `key = value` lines, '#' comments, blank lines ignored.
  void load_text(std::string_view text);
  void load_file(const std::string& path);

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  Tolerances tolerances() const;
};

/// One CSV table. Cells are already formatted.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Result {
  int exit_code = 0;  // 0 ok, 1 usage, 2 computation failure, 3 verification failure
  std::string json;   // the envelope, serialized
  std::vector<Table> tables;  // first one is the primary table
  std::vector<std::string> diagnostics;
};

/// Runs one command. Never throws for computation problems; they come back
/// as exit codes with diagnostics. Invalid configuration gives exit 1.
Result run(Command cmd, const RunConfig& cfg);

/// 17 significant digits, locale independent. Non-finite values print as
/// nan / inf / -inf.
std::string format_number(double x);
std::string to_csv(const Table& t);

/// Writes the result as the config asks: JSON envelope or primary CSV table
/// to cfg.out (stdout when empty); extra CSV tables go next to cfg.out as
/// <stem>.<table>.csv.
void write_result(const Result& r, const RunConfig& cfg);

}  // namespace sdirac::app
