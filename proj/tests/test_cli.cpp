#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path capture =
      fs::path("cli_capture_" + std::to_string(counter++) + ".txt");
  const std::string command = std::string(SVARX_CLI_PATH) + " " + args + " > " +
                              capture.string() + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
#ifdef _WIN32
  result.exit_code = status;
#else
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
  std::ifstream in(capture);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  fs::remove(capture);
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (const char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("cli_work") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One small fixture bundle shared by the pipeline tests.
const fs::path& fixture() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("fixture");
    const auto r = run_cli("--out " + d.string() +
                           " --seed 7 synth --T 120 --noise-std 0.4");
    REQUIRE(r.exit_code == 0);
    return d;
  }();
  return dir;
}

std::string input_flags() {
  const auto& d = fixture();
  return " --claims " + (d / "claims.csv").string() + " --query " +
         (d / "query.csv").string() + " --clicks " +
         (d / "clicks.csv").string() + " --totals " +
         (d / "totals.csv").string() + " --region-map " +
         (d / "region_map.csv").string() + " --period 12";
}

std::string data_flags() {
  return input_flags() + " --grid-size 4 --grid-ratio 0.1 --tol 1e-5";
}

}  // namespace

TEST_CASE("synth writes a complete deterministic bundle") {
  const auto& d = fixture();
  for (const char* name : {"claims.csv", "query.csv", "clicks.csv",
                           "totals.csv", "region_map.csv", "truth.json"}) {
    CHECK(fs::exists(d / name));
  }
  // identical seed reproduces the bundle byte for byte
  const auto again = fresh_dir("fixture_again");
  const auto r = run_cli("--out " + again.string() +
                         " --seed 7 synth --T 120 --noise-std 0.4");
  REQUIRE(r.exit_code == 0);
  // the config echo embeds the output directory, so compare data rows only
  const auto strip_comments = [](const std::string& text) {
    std::stringstream in(text), out;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') out << line << '\n';
    }
    return out.str();
  };
  CHECK(strip_comments(slurp(d / "claims.csv")) ==
        strip_comments(slurp(again / "claims.csv")));
  CHECK(strip_comments(slurp(d / "query.csv")) ==
        strip_comments(slurp(again / "query.csv")));

  SUBCASE("bad synth spec fails with a diagnostic") {
    const auto bad = run_cli("--out cli_work/bad synth --sparsity 0");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("sparsity") != std::string::npos);
    CHECK(!fs::exists("cli_work/bad/claims.csv"));  // partial outputs removed
  }
}

TEST_CASE("evaluate produces the report bundle") {
  const auto out = fresh_dir("evaluate");
  const auto r = run_cli("--out " + out.string() + " evaluate" + data_flags());
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);

  const auto report = slurp(out / "report.csv");
  CHECK(report.find("region,A,B,C,D") != std::string::npos);
  CHECK(count_lines(report) == 11);  // comment + header + 9 regions
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "lambdas.csv"));
  for (const char v : {'A', 'B', 'C', 'D'}) {
    CHECK(fs::exists(out / (std::string("forecasts_") + v + ".csv")));
  }
  const auto forecasts = slurp(out / "forecasts_C.csv");
  CHECK(forecasts.find("week,region,actual,predicted") != std::string::npos);

  SUBCASE("rerunning the identical config is byte-identical") {
    const auto first_report = slurp(out / "report.csv");
    const auto first_json = slurp(out / "report.json");
    const auto r2 =
        run_cli("--out " + out.string() + " evaluate" + data_flags());
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(out / "report.csv") == first_report);
    CHECK(slurp(out / "report.json") == first_json);
  }
}

TEST_CASE("evaluate supports variant subsets and the level scale") {
  const auto out = fresh_dir("evaluate_d");
  const auto r = run_cli("--out " + out.string() + " evaluate" + data_flags() +
                         " --variants D --scale level");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto report = slurp(out / "report.csv");
  CHECK(report.find("region,D") != std::string::npos);
  CHECK(!fs::exists(out / "forecasts_C.csv"));
}

TEST_CASE("evaluate diagnoses missing inputs and removes partial outputs") {
  const auto out = fresh_dir("evaluate_missing");
  const auto& d = fixture();
  const auto r = run_cli(
      "--out " + out.string() + " evaluate --claims " +
      (d / "claims.csv").string() + " --query " + (d / "query.csv").string() +
      " --clicks " + (d / "clicks.csv").string() +
      " --totals no/such/totals.csv --region-map " +
      (d / "region_map.csv").string() + " --period 12");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("no/such/totals.csv") != std::string::npos);
  CHECK(r.output.find("ingestion") != std::string::npos);
  CHECK(fs::is_empty(out));
}

TEST_CASE("cv, fit, forecast and sparsity chain together") {
  const auto out = fresh_dir("chain");

  const auto cv = run_cli("--out " + out.string() + " cv" + data_flags() +
                          " --variant C");
  REQUIRE_MESSAGE(cv.exit_code == 0, cv.output);
  CHECK(fs::exists(out / "cv.json"));
  CHECK(cv.output.find("selected lambda") != std::string::npos);

  const auto fit = run_cli("--out " + out.string() + " fit" + data_flags() +
                           " --variant C");
  REQUIRE_MESSAGE(fit.exit_code == 0, fit.output);
  REQUIRE(fs::exists(out / "model.json"));

  const auto forecast = run_cli(
      "--out " + out.string() + " forecast" + input_flags() + " --model " +
      (out / "model.json").string() + " --horizon 2");
  REQUIRE_MESSAGE(forecast.exit_code == 0, forecast.output);
  const auto table = slurp(out / "forecast.csv");
  CHECK(table.find("week,region,diff,level") != std::string::npos);
  CHECK(count_lines(table) == 2 + 2 * 9);  // comment + header + h*regions

  const auto sparsity = run_cli("--out " + out.string() + " sparsity --model " +
                                (out / "model.json").string() + " --svg");
  REQUIRE_MESSAGE(sparsity.exit_code == 0, sparsity.output);
  CHECK(fs::exists(out / "sparsity_theta_lag1.csv"));
  CHECK(fs::exists(out / "sparsity_theta_lag2.csv"));
  CHECK(fs::exists(out / "sparsity_beta_lag1.csv"));
  CHECK(fs::exists(out / "sparsity_theta_lag1.svg"));
  const auto heat = slurp(out / "sparsity_beta_lag1.csv");
  CHECK(heat.find("Mid-Atlantic-query") != std::string::npos);
}

TEST_CASE("fit at an explicit lambda for the pure VAR variant") {
  const auto out = fresh_dir("fit_d");
  const auto& d = fixture();
  const auto fit = run_cli(
      "--out " + out.string() + " fit --claims " + (d / "claims.csv").string() +
      " --region-map " + (d / "region_map.csv").string() +
      " --period 12 --variant D --lambda 0.05 --tol 1e-5");
  REQUIRE_MESSAGE(fit.exit_code == 0, fit.output);

  const auto sparsity = run_cli("--out " + out.string() + " sparsity --model " +
                                (out / "model.json").string());
  REQUIRE(sparsity.exit_code == 0);
  CHECK(fs::exists(out / "sparsity_theta_lag1.csv"));
  CHECK(!fs::exists(out / "sparsity_beta_lag1.csv"));  // no exogenous blocks
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("no-such-command").exit_code == 2);
  CHECK(run_cli("evaluate --scale bogus").exit_code == 2);
  const auto h0 = run_cli("forecast --model x.json --horizon 0");
  CHECK(h0.exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("corrupt model files are diagnosed") {
  const auto out = fresh_dir("corrupt");
  std::ofstream(out / "model.json") << "{\"kind\": \"nonsense\"}";
  const auto r = run_cli("--out " + out.string() + " sparsity --model " +
                         (out / "model.json").string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("model") != std::string::npos);
}

TEST_CASE("config file supplies defaults, flags win") {
  const auto out = fresh_dir("config");
  std::ofstream(out / "svarx.cfg") << "seed=11\nout=" << out.string() << "\n";

  const auto from_config =
      run_cli("--config " + (out / "svarx.cfg").string() + " synth --T 80");
  REQUIRE_MESSAGE(from_config.exit_code == 0, from_config.output);
  const auto claims_config = slurp(out / "claims.csv");
  CHECK(claims_config.find("\"seed\":11") != std::string::npos);

  const auto overridden = run_cli("--config " + (out / "svarx.cfg").string() +
                                  " --seed 12 synth --T 80");
  REQUIRE(overridden.exit_code == 0);
  CHECK(slurp(out / "claims.csv").find("\"seed\":12") != std::string::npos);
}
