#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spm/error.hpp"
#include "spm/scenario.hpp"

using namespace spm;

namespace {

const std::filesystem::path configs = SPM_CONFIG_DIR;

StudyReport sample_report() {
  StudyReport r;
  r.scenario = "demo";
  r.inputs = Json{{"n", 1}, {"potential", "hermite"}};
  r.metric("norm[0]", 1.25, "lanczos", "unit");
  r.metric("tiny", 1e-300, "direct");
  r.metric("gap", NAN, "failed", "solver, \"quoted\"");
  r.metric("big", INFINITY, "direct");
  r.fit("slope", 0.123456789012345678, 1e-9);
  r.criterion("weighted_slope", true);
  r.criterion("other", false);
  return r;
}

std::size_t data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  while (std::getline(in, line)) ++rows;
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPM_CLI_PATH) + " " + args + " > /dev/null 2> " +
                          (std::filesystem::temp_directory_path() / "spm_cli_err.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("report JSON round trip") {
  const StudyReport r = sample_report();
  const StudyReport back = StudyReport::from_json(Json::parse(report_json_text(r)));
  CHECK(back == r);
  CHECK(report_json_text(back) == report_json_text(r));
}

TEST_CASE("empty report is valid JSON with empty arrays") {
  StudyReport r;
  r.scenario = "empty";
  const Json j = Json::parse(report_json_text(r));
  CHECK(j.at("metrics").is_array());
  CHECK(j.at("metrics").empty());
  CHECK(j.at("criteria").is_array());
  CHECK(j.at("criteria").empty());
  CHECK(j.at("fits").empty());
  CHECK(StudyReport::from_json(j) == r);
  CHECK(r.all_pass());
}

TEST_CASE("CSV has one row per metric") {
  StudyReport r = sample_report();
  CHECK(data_rows(report_csv_text(r)) == r.metrics.size());
  r.metrics.clear();
  CHECK(data_rows(report_csv_text(r)) == 0);
}

TEST_CASE("emit_report writes files and rejects unwritable paths") {
  const auto dir = std::filesystem::temp_directory_path() / "spm_report_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const StudyReport r = sample_report();
  emit_report(r, dir / "r.json", ReportFormat::Json);
  emit_report(r, dir / "r.csv", ReportFormat::Csv);
  CHECK(read_text(dir / "r.json") == report_json_text(r));
  CHECK(read_text(dir / "r.csv") == report_csv_text(r));
  try {
    emit_report(r, dir / "missing" / "r.json", ReportFormat::Json);
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("slope fit") {
  auto [b, res] = fit_slope({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(b == doctest::Approx(2.0));
  CHECK(res <= 1e-12);
  CHECK_THROWS_AS(fit_slope({1, 1}, {0, 2}), Error);
}

TEST_CASE("config errors name the offending id") {
  const Json base = Json::parse(R"({"domain": {"n": 1, "L": 4, "M": 64}, "potential": "unit", "seed": 1})");
  auto expect_config_error = [](const Json& j, const std::string& needle) {
    try {
      parse_config(j);
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  Json j = base;
  j["potential"] = "yukawa";
  expect_config_error(j, "yukawa");
  j = base;
  j["symbol"] = "wavelet";
  expect_config_error(j, "wavelet");
  j = base;
  j["studies"] = {"rho", "spectrogram"};
  expect_config_error(j, "spectrogram");
  j = base;
  j["partition"] = "triangle";
  expect_config_error(j, "triangle");
  j = base;
  j.erase("seed");
  expect_config_error(j, "seed");
  CHECK(parse_config(j, 9).seed == 9);
  CHECK(parse_config(base, 9).seed == 9);
}

TEST_CASE("CLI exit codes") {
  const auto out = std::filesystem::temp_directory_path() / "spm_cli_test";
  std::filesystem::remove_all(out);
  const std::string minimal = (configs / "minimal.json").string();
  CHECK(run_cli("report --config " + minimal + " --out " + out.string()) == 0);
  CHECK(std::filesystem::exists(out / "minimal.json"));
  CHECK(std::filesystem::exists(out / "minimal_rho.csv"));
  const Json rep = Json::parse(read_text(out / "minimal.json"));
  CHECK(rep.at("inputs").at("seed") == 3);
  for (const auto& c : rep.at("criteria")) CHECK_MESSAGE(c.at("pass").get<bool>(), c.at("id").get<std::string>());

  CHECK(run_cli("rho --config " + (configs / "unknown_potential.json").string() + " --out " + out.string()) == 2);
  const std::string err = read_text(std::filesystem::temp_directory_path() / "spm_cli_err.txt");
  CHECK(err.find("yukawa") != std::string::npos);
  CHECK(run_cli("rho --config /nonexistent.json") == 2);
  CHECK(run_cli("frobnicate") == 2);
  std::filesystem::remove_all(out);
}

TEST_CASE("same config and seed give byte-identical reports") {
  const auto a = std::filesystem::temp_directory_path() / "spm_det_a";
  const auto b = std::filesystem::temp_directory_path() / "spm_det_b";
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  const std::string minimal = (configs / "minimal.json").string();
  REQUIRE(run_cli("report --config " + minimal + " --out " + a.string()) == 0);
  REQUIRE(run_cli("report --config " + minimal + " --out " + b.string()) == 0);
  for (const auto& entry : std::filesystem::directory_iterator(a))
    CHECK_MESSAGE(read_text(entry.path()) == read_text(b / entry.path().filename()), entry.path().filename());
  // a different seed changes the echoed config at least
  const auto c = std::filesystem::temp_directory_path() / "spm_det_c";
  REQUIRE(run_cli("report --config " + minimal + " --seed 4 --out " + c.string()) == 0);
  CHECK(read_text(a / "minimal.json") != read_text(c / "minimal.json"));
  for (const auto& p : {a, b, c}) std::filesystem::remove_all(p);
}
