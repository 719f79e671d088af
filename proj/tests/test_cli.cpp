#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// Drives the built executable the way a user would.

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SDIRAC_CLI_PATH + "\" " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("sdirac_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli("").code == 1);
  CHECK(cli("dance").code == 1);
  CHECK(cli("classify --bogus 1").code == 1);
  CHECK(cli("classify").code == 1);  // no lambda
  CHECK(cli("classify --lambda 1 --omega 2").code == 1);
  CHECK(cli("classify --lambda abc").code == 1);
  CHECK(cli("classify --lambda 1 --format xml").code == 1);
  CHECK(cli("classify --lambda 1 --config /nonexistent/file.cfg").code == 1);
  CHECK(cli("asymptotics --epsilon 0.1 --epsilon 0.2").code == 1);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("classify prints the JSON envelope by default") {
  const Run r = cli("classify --lambda 0.5 --lambda 2.5");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema_version"] == "1");
  CHECK(j["command"] == "classify");
  CHECK(j["params"]["lambda"].size() == 2);
  CHECK(j["payload"]["classifications"][1]["label"] == "A(1)");
}

TEST_CASE("flags may come before the command") {
  const Run a = cli("--lambda 1 --lambda 2 classify --format csv");
  const Run b = cli("classify --lambda 1,2 --format csv");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("csv to stdout and to files") {
  const Run r = cli("classify --lambda 1 --format csv");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("lambda,verdict,", 0) == 0);
  CHECK(r.out.find('\r') == std::string::npos);
  CHECK(r.out.back() == '\n');

  const fs::path d = scratch("csv");
  const Run w = cli("classify --lambda 1 --format csv --out \"" + (d / "c.csv").string() + "\"");
  CHECK(w.code == 0);
  CHECK(w.out.empty());
  CHECK(slurp(d / "c.csv") == r.out);
  CHECK(fs::exists(d / "c.events.csv"));
  fs::remove_all(d);
}

TEST_CASE("config file with flag override") {
  const fs::path d = scratch("cfg");
  {
    std::ofstream f(d / "run.cfg");
    f << "# parameters\nm = 2\nomega = 1\nlambda = 0.5\nlambda = 0.7\nformat = json\n";
  }
  const std::string cfg = " --config \"" + (d / "run.cfg").string() + "\"";
  const auto a = nlohmann::json::parse(cli("classify" + cfg).out);
  CHECK(a["params"]["m"] == 2.0);
  CHECK(a["params"]["lambda"].size() == 2);
  const auto b = nlohmann::json::parse(cli("classify --m 3 --lambda 0.9" + cfg).out);
  CHECK(b["params"]["m"] == 3.0);
  CHECK(b["params"]["omega"] == 1.0);
  REQUIRE(b["params"]["lambda"].size() == 1);
  CHECK(b["params"]["lambda"][0] == 0.9);
  {
    std::ofstream f(d / "bad.cfg");
    f << "lambda = 1\ncolour = blue\n";
  }
  CHECK(cli("classify --config \"" + (d / "bad.cfg").string() + "\"").code == 1);
  fs::remove_all(d);
}

TEST_CASE("verify exits 0, and 3 with the fault hook") {
  CHECK(cli("verify --format csv").code == 0);
  const fs::path d = scratch("fault");
  {
    std::ofstream f(d / "fault.cfg");
    f << "verify-fault = true\n";
  }
  const Run r = cli("verify --config \"" + (d / "fault.cfg").string() + "\"");
  CHECK(r.code == 3);
  CHECK(nlohmann::json::parse(r.out)["payload"]["failed"].get<int>() >= 1);
  fs::remove_all(d);
}

TEST_CASE("computation failure exits 2") {
  CHECK(cli("ground-state --rmax 0.1").code == 2);
}

TEST_CASE("repeat runs are byte identical") {
  for (const char* args : {"ground-state", "classify --lambda 1 --lambda 3 --format csv",
                           "asymptotics --epsilon 0.2 --epsilon 0.1"}) {
    CAPTURE(args);
    const Run a = cli(args), b = cli(args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK_FALSE(a.out.empty());
  }
}
