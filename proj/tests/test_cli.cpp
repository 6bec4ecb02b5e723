// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "radcom/config_io.hpp"
#include "radcom/matrix_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string output;
};

Result cli(const std::string& args) {
  const fs::path log = fs::path(RADCOM_TEST_DIR) / "cli_last.log";
  const std::string cmd = std::string(RADCOM_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path(RADCOM_TEST_DIR) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  int n = -1;  // header
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("missing config file") {
  const Result r = cli("run --config /nonexistent/radcom.json --out " +
                       fresh_dir("cli_missing").string());
  CHECK(r.code == 1);
  CHECK(r.output.find("/nonexistent/radcom.json") != std::string::npos);
}

TEST_CASE("invalid override is rejected") {
  const Result r = cli("run --set system.n_txx=3 --out " + fresh_dir("cli_bad").string());
  CHECK(r.code == 1);
  CHECK(r.output.find("system.n_txx") != std::string::npos);
}

TEST_CASE("run with the default config") {
  const fs::path out = fresh_dir("cli_run");
  const fs::path cfg = fs::path(RADCOM_SOURCE_DIR) / "configs" / "default.json";
  const Result r = cli("run --config " + cfg.string() + " --set reg_lambda=1e-1 --out " +
                       out.string());
  REQUIRE(r.code == 0);
  for (const char* name : {"precoder.csv", "beampattern.csv", "residuals.csv", "channel.csv",
                           "manifest.json"}) {
    CHECK(fs::exists(out / name));
    CHECK(r.output.find((fs::absolute(out) / name).string()) != std::string::npos);
  }
  const radcom::CMatrix p = radcom::read_complex_csv_file((out / "precoder.csv").string());
  CHECK(p.rows() == 4);
  CHECK(p.cols() == 3);
  CHECK(data_rows(out / "beampattern.csv") == 181);
  CHECK(slurp(out / "residuals.csv").rfind("iteration,primal_residual", 0) == 0);

  const nlohmann::json m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["overrides"]["system.reg_lambda"].get<double>() == 0.1);
  CHECK(m["config"]["system"]["reg_lambda"].get<double>() == 0.1);
  CHECK(m["status"] == "converged");

  // Re-running from the manifest reproduces the precoder.
  const fs::path again = fresh_dir("cli_rerun");
  REQUIRE(cli("run --config " + (out / "manifest.json").string() + " --out " + again.string())
              .code == 0);
  CHECK(slurp(again / "precoder.csv") == slurp(out / "precoder.csv"));

  // The stored precoder re-evaluates to the same numbers.
  const fs::path ev = fresh_dir("cli_eval");
  const Result e = cli("eval --config " + (out / "manifest.json").string() + " --precoder " +
                       (out / "precoder.csv").string() + " --channel " +
                       (out / "channel.csv").string() + " --out " + ev.string());
  REQUIRE(e.code == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(ev / "evaluation.json"));
  CHECK(j["max_row_deviation"].get<double>() <= 1e-4);
}

TEST_CASE("sweep outputs and determinism") {
  const fs::path a = fresh_dir("cli_sweep_a");
  Result r = cli("sweep --modes rsma,sdma --realizations 20 --lambdas 1e-1 --jobs 2 --out " +
                 a.string());
  REQUIRE(r.code == 0);
  CHECK(data_rows(a / "tradeoff_rsma_partial.csv") == 1);
  CHECK(data_rows(a / "tradeoff_sdma_partial.csv") == 1);

  const fs::path b = fresh_dir("cli_sweep_b");
  const fs::path c = fresh_dir("cli_sweep_c");
  REQUIRE(cli("sweep --modes rsma,sdma --realizations 2 --lambdas 1e-9 --seed 5 --out " +
              b.string()).code == 0);
  REQUIRE(cli("sweep --modes rsma,sdma --realizations 2 --lambdas 1e-9 --seed 5 --jobs 1 --out " +
              c.string()).code == 0);
  for (const char* name : {"tradeoff_rsma_partial.csv", "tradeoff_sdma_partial.csv"}) {
    CHECK(data_rows(b / name) == 1);
    CHECK(slurp(b / name) == slurp(c / name));
  }
}
