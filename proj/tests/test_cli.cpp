// Integration tests driving the installed CLI binary (path via LDPE_CLI_BIN).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ldpe/io.hpp"
#include "ldpe/types.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using ldpe::Index;

namespace {

std::string cli_bin() {
  const char* env = std::getenv("LDPE_CLI_BIN");
  REQUIRE(env != nullptr);
  return env;
}

std::string fixtures_dir() {
  const char* env = std::getenv("LDPE_FIXTURES");
  REQUIRE(env != nullptr);
  return env;
}

int run_cli(const std::string& args) {
  const std::string cmd = cli_bin() + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ldpe_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fit recovers the committed noiseless fixture") {
  const fs::path out = temp_dir("fit") / "fit.json";
  const std::string design = fixtures_dir() + "/design_40x20.csv";
  const std::string response = fixtures_dir() + "/response_40.csv";
  const int code = run_cli("fit --design " + design + " --response " + response + " --out " +
                           out.string());
  REQUIRE(code == 0);
  const auto doc = nlohmann::json::parse(slurp(out));
  CHECK(doc["n"] == 40);
  CHECK(doc["p"] == 20);
  const ldpe::Vector beta = ldpe::read_csv_vector(fixtures_dir() + "/beta_40x20.csv");
  for (const auto& row : doc["per_coefficient"]) {
    const Index j = row["j"].get<Index>() - 1;
    CHECK(std::abs(row["beta_hat"].get<double>() - beta[j]) < 1e-6);
  }
}

TEST_CASE("missing input exits 2 without partial output") {
  const fs::path out = temp_dir("missing") / "fit.json";
  const int code =
      run_cli("fit --design /nonexistent.csv --response /nonexistent.csv --out " + out.string());
  CHECK(code == 2);
  CHECK(!fs::exists(out));
}

TEST_CASE("csv and json outputs carry identical numbers") {
  const fs::path dir = temp_dir("formats");
  const std::string design = fixtures_dir() + "/design_40x20.csv";
  const std::string response = fixtures_dir() + "/response_40.csv";
  REQUIRE(run_cli("fit --design " + design + " --response " + response + " --out " +
                  (dir / "fit.json").string()) == 0);
  REQUIRE(run_cli("fit --design " + design + " --response " + response +
                  " --format csv --out " + (dir / "fit.csv").string()) == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "fit.json"));
  std::ifstream is(dir / "fit.csv");
  std::string line;
  std::getline(is, line);
  REQUIRE(line == "j,beta_init,beta_hat,tau,eta,ci_low,ci_high");
  std::size_t row_idx = 0;
  while (std::getline(is, line)) {
    std::stringstream row(line);
    std::string field;
    std::getline(row, field, ',');
    std::getline(row, field, ',');
    const double init_csv = std::stod(field);
    std::getline(row, field, ',');
    const double hat_csv = std::stod(field);
    const auto& jrow = doc["per_coefficient"][row_idx];
    // Shortest round-trip formatting on both sides: bitwise equality.
    CHECK(init_csv == jrow["beta_init"].get<double>());
    CHECK(hat_csv == jrow["beta_hat"].get<double>());
    ++row_idx;
  }
  CHECK(row_idx == 20);
}

TEST_CASE("ci and select run on the fixture") {
  const fs::path dir = temp_dir("ci");
  const std::string design = fixtures_dir() + "/design_40x20.csv";
  const std::string response = fixtures_dir() + "/response_40.csv";
  REQUIRE(run_cli("ci --design " + design + " --response " + response +
                  " --contrast 4:1,12:-1 --out " + (dir / "ci.json").string()) == 0);
  const auto ci = nlohmann::json::parse(slurp(dir / "ci.json"));
  // beta_4 − beta_12 = 2 − (−1.5) = 3.5 and sigma = 0, so the interval is a point.
  CHECK(std::abs(ci["point"].get<double>() - 3.5) < 1e-6);
  CHECK(ci["half_width"].get<double>() < 1e-8);

  REQUIRE(run_cli("select --design " + design + " --response " + response +
                  " --mode hard --out " + (dir / "sel.json").string()) == 0);
  const auto sel = nlohmann::json::parse(slurp(dir / "sel.json"));
  const std::vector<int> selected = sel["selected"].get<std::vector<int>>();
  CHECK(selected == std::vector<int>{4, 12, 18});
}

TEST_CASE("simulate determinism and validation") {
  const fs::path dir_a = temp_dir("sim_a");
  const fs::path dir_b = temp_dir("sim_b");
  const std::string base = "simulate --setting A --n 30 --p 12 --reps 2 --seed 7 "
                           "--estimators lasso,scaled_lasso_lse,oracle,ldpe,t_ldpe";
  REQUIRE(run_cli(base + " --threads 1 --out " + dir_a.string()) == 0);
  REQUIRE(run_cli(base + " --threads 3 --out " + dir_b.string()) == 0);
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const fs::path other = dir_b / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
  }
  CHECK(run_cli("simulate --setting Z --out /tmp/ldpe_bad_setting") == 2);
}

TEST_CASE("diagnose on an orthogonal fixture") {
  const fs::path dir = temp_dir("diag");
  // Write an exactly-orthogonal design.
  ldpe::Matrix m = oracles::orthogonal_design(16, 6);
  std::ofstream os(dir / "design.csv");
  for (Index i = 0; i < 16; ++i) {
    for (Index j = 0; j < 6; ++j) os << (j ? "," : "") << ldpe::format_double(m(i, j));
    os << "\n";
  }
  os.close();
  REQUIRE(run_cli("diagnose --design " + (dir / "design.csv").string() +
                  " --S 1,2 --xi 2 --m 2 --out " + (dir / "report.json").string()) == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(std::abs(doc["kappa_sq"]["upper"].get<double>() - 1.0) < 5e-3);
  CHECK(doc["kappa_sq"]["exact_mode"].get<bool>());
  CHECK(std::abs(doc["sparse_eigenvalues"]["phi_minus"].get<double>() - 1.0) < 1e-8);

  // Sampling mode stays consistent with the exact bracket.
  REQUIRE(run_cli("diagnose --design " + (dir / "design.csv").string() +
                  " --S 1,2 --xi 2 --m 2 --sampling --out " + (dir / "sampled.json").string()) ==
          0);
  const auto sampled = nlohmann::json::parse(slurp(dir / "sampled.json"));
  CHECK(sampled["kappa_sq"]["upper"].get<double>() >=
        doc["kappa_sq"]["lower"].get<double>() - 1e-9);
}
