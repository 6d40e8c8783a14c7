#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "snrwall/cli.hpp"

using namespace snrwall;
namespace fs = std::filesystem;

namespace {

// Scratch directory that cleans up after itself.
struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("snrwall_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

// The commands narrate to stdout; keep that out of the test log.
struct CaptureStdout {
  std::ostringstream captured;
  std::streambuf* saved;

  CaptureStdout() : saved(std::cout.rdbuf(captured.rdbuf())) {}
  ~CaptureStdout() { std::cout.rdbuf(saved); }
  std::string text() const { return captured.str(); }
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

nlohmann::json read_json(const fs::path& path) {
  return nlohmann::json::parse(read_file(path));
}

long count_lines(const std::string& text) {
  long lines = 0;
  for (const char c : text) {
    lines += c == '\n';
  }
  return lines;
}

std::string tiny_scenario(const std::string& out_dir) {
  return "# minimal white-noise sweep\n"
         "p = 2\n"
         "q = 0\n"
         "m = 4\n"
         "\n"
         "n_values = 64, 128\n"
         "snr_db = -5, -8\n"
         "noise_variance = 1\n"
         "instances = 4\n"
         "bins = 3\n"
         "seed = 7\n"
         "h0_noise = white\n"
         "out_dir = " +
         out_dir + "\n";
}

// Runs the installed binary and returns its exit code.
int run_cli(const std::string& args) {
  const std::string command =
      std::string(SNRWALL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("scenario text parses into a validated config") {
  const ScenarioFile file = parse_scenario_text(tiny_scenario("out/tiny"));
  CHECK(file.config.receivers == 2);
  CHECK(file.config.smoothing == 0);
  CHECK(file.config.oversampling == 4);
  REQUIRE(file.config.sample_counts.size() == 2);
  CHECK(file.config.sample_counts[0] == 64);
  CHECK(file.config.sample_counts[1] == 128);
  REQUIRE(file.config.snr_db_values.size() == 2);
  CHECK(file.config.snr_db_values[0] == -5.0);
  CHECK(file.config.snr_db_values[1] == -8.0);
  CHECK(file.config.noise_variance == 1.0);
  CHECK(file.config.instances == 4);
  CHECK(file.config.bins == 3);
  CHECK(file.config.master_seed == 7);
  CHECK(file.config.h0_noise.kind() == NoiseKind::white);
  CHECK(file.config.h1_noise.kind() == NoiseKind::white);
  CHECK(file.out_dir == "out/tiny");
}

TEST_CASE("scenario text selects the colored noise models") {
  const ScenarioFile ar = parse_scenario_text(
      "p = 1\nq = 4\nm = 4\nn_values = 256\nsnr_db = -6\n"
      "noise_variance = 2\ninstances = 3\nbins = 4\nseed = 1\n"
      "h0_noise = ar1\nar1_coefficient = 0.3\nout_dir = out/ar\n");
  CHECK(ar.config.h0_noise.kind() == NoiseKind::ar1);
  CHECK(ar.config.h0_noise.ar_coefficient() == 0.3);
  CHECK(ar.config.h0_noise.noise_variance() == 2.0);

  const ScenarioFile rc = parse_scenario_text(
      "p = 3\nq = 0\nm = 4\nn_values = 256\nsnr_db = -6\n"
      "noise_variance = 1\ninstances = 3\nbins = 4\nseed = 1\n"
      "h0_noise = receiver_correlated\nrho = 0.4\nh1_noise = white\n"
      "out_dir = out/rc\n");
  REQUIRE(rc.config.h0_noise.kind() == NoiseKind::receiver_correlated);
  const Eigen::MatrixXcd& target = rc.config.h0_noise.target().matrix();
  REQUIRE(target.rows() == 3);
  CHECK(target(0, 1) == cxd(0.4, 0.0));
  CHECK(target(2, 2) == cxd(1.0, 0.0));
}

TEST_CASE("scenario parse errors name the offending key") {
  const std::string base = tiny_scenario("out/x");
  using doctest::Contains;

  CHECK_THROWS_WITH_AS(parse_scenario_text(base + "mystery = 1\n"),
                       Contains("unknown scenario key 'mystery'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_scenario_text(base + "p = 3\n"),
                       Contains("duplicate scenario key 'p'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_scenario_text("p = 2\nq = 0\n"),
      Contains("missing scenario key"), std::invalid_argument);

  std::string bad_number = base;
  bad_number.replace(bad_number.find("seed = 7"), 8, "seed = he");
  CHECK_THROWS_WITH_AS(parse_scenario_text(bad_number),
                       Contains("scenario key 'seed'"),
                       std::invalid_argument);

  CHECK_THROWS_WITH_AS(parse_scenario_text(base + "rho = 0.1\n"),
                       Contains("do not apply to white noise"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_scenario_text("just some words\n"),
                       Contains("line 1"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_scenario_text("p =\n"),
                       Contains("empty key or value"), std::invalid_argument);

  std::string ar_missing = base;
  ar_missing.replace(ar_missing.find("h0_noise = white"), 16,
                     "h0_noise = ar1  ");
  CHECK_THROWS_WITH_AS(parse_scenario_text(ar_missing),
                       Contains("requires key 'ar1_coefficient'"),
                       std::invalid_argument);

  std::string rc_extra = base;
  rc_extra.replace(rc_extra.find("h0_noise = white"), 16,
                   "h0_noise = receiver_correlated");
  CHECK_THROWS_WITH_AS(
      parse_scenario_text(rc_extra + "rho = 0.1\nar1_coefficient = 0.3\n"),
      Contains("does not apply to receiver_correlated"),
      std::invalid_argument);

  std::string bad_kind = base;
  bad_kind.replace(bad_kind.find("h0_noise = white"), 16,
                   "h0_noise = pink ");
  CHECK_THROWS_WITH_AS(parse_scenario_text(bad_kind),
                       Contains("h0_noise must be"), std::invalid_argument);

  CHECK_THROWS_WITH_AS(parse_scenario_text(base + "h1_noise = ar1\n"),
                       Contains("h1_noise only supports 'white'"),
                       std::invalid_argument);

  CHECK_THROWS_WITH_AS(parse_scenario_file("/nonexistent/scenario.txt"),
                       Contains("cannot open scenario file"),
                       std::invalid_argument);
}

TEST_CASE("built-in scenarios") {
  const ScenarioFile fig2 = preset_scenario("reproduce-fig2", false);
  CHECK(fig2.config.receivers == 2);
  CHECK(fig2.config.smoothing == 0);
  CHECK(fig2.config.h0_noise.kind() == NoiseKind::receiver_correlated);
  CHECK(fig2.config.h0_noise.target().matrix()(0, 1) == cxd(0.05, 0.0));
  REQUIRE(fig2.config.sample_counts.size() == 3);
  CHECK(fig2.config.sample_counts[2] == 99999);
  CHECK(fig2.config.instances == 500);
  CHECK(fig2.config.snr_db_values.front() == -10.0);
  CHECK(fig2.config.snr_db_values.back() == -15.0);
  CHECK(fig2.out_dir == "out/reproduce-fig2");

  const ScenarioFile fig2_long = preset_scenario("reproduce-fig2", true);
  CHECK(fig2_long.config.sample_counts[2] == 999999);
  CHECK(fig2_long.config.instances == 2000);

  const ScenarioFile fig3 = preset_scenario("reproduce-fig3", false);
  CHECK(fig3.config.receivers == 1);
  CHECK(fig3.config.smoothing == 4);
  CHECK(fig3.config.h0_noise.kind() == NoiseKind::ar1);
  CHECK(fig3.config.h0_noise.ar_coefficient() == 0.1);
  CHECK(fig3.config.snr_db_values.front() == -6.0);
  CHECK(fig3.config.snr_db_values.back() == -10.0);

  CHECK_THROWS_WITH_AS(preset_scenario("reproduce-fig9", false),
                       doctest::Contains("unknown preset"),
                       std::invalid_argument);
}

TEST_CASE("bound command writes the two-receiver report") {
  TempDir dir;
  BoundArgs args;
  args.receivers = 2;
  args.smoothing = 0;
  args.rho_max = 0.05;
  args.out_dir = dir.str();
  CaptureStdout capture;
  CHECK(cmd_bound(args) == 0);
  CHECK(capture.text().find("wall_db") != std::string::npos);

  const nlohmann::json report = read_json(dir.path / "bound.json");
  CHECK(report.at("defined").get<bool>());
  CHECK(report.at("kappa_max").get<double>() == 1.0);
  CHECK(report.at("alpha_max").get<double>() ==
        doctest::Approx(1.1052631578947368).epsilon(1e-12));
  CHECK(report.at("wall_db").get<double>() ==
        doctest::Approx(-12.787536009528289).epsilon(1e-9));
  // kappa_max = 1 puts no ceiling on the valid range, encoded as null.
  CHECK(report.at("validity_snr_cap").is_null());
}

TEST_CASE("bound command handles smoothed and combined geometries") {
  TempDir dir;
  BoundArgs args;
  args.receivers = 1;
  args.smoothing = 3;
  args.oversampling = 4;
  args.rho_max = 0.1;
  args.out_dir = dir.str();
  CaptureStdout capture;
  CHECK(cmd_bound(args) == 0);
  nlohmann::json report = read_json(dir.path / "bound.json");
  CHECK(report.at("kappa_max").get<double>() == 2.0);
  CHECK(report.at("validity_snr_cap").get<double>() == 1.0);
  CHECK(report.at("wall_db").get<double>() ==
        doctest::Approx(-12.787536009528289).epsilon(1e-9));

  // Both dimensions at once: kappa = (p - 1) + p * kappa_time.
  args.receivers = 2;
  args.smoothing = 2;
  CHECK(cmd_bound(args) == 0);
  report = read_json(dir.path / "bound.json");
  CHECK(report.at("kappa_max").get<double>() == 4.0);
  CHECK(report.at("wall_db").get<double>() ==
        doctest::Approx(10.0 * std::log10(1.0 / 39.0)).epsilon(1e-9));
}

TEST_CASE("bound command reports undefined bounds without failing") {
  TempDir dir;
  BoundArgs args;
  args.receivers = 1;
  args.smoothing = 0;
  args.rho_max = 0.05;
  args.out_dir = dir.str();

  {
    CaptureStdout capture;
    CHECK(cmd_bound(args) == 0);
    CHECK(capture.text().find("bound undefined") != std::string::npos);
    CHECK(capture.text().find("not enough signal correlation") !=
          std::string::npos);
  }
  nlohmann::json report = read_json(dir.path / "bound.json");
  CHECK_FALSE(report.at("defined").get<bool>());
  CHECK(report.at("kappa_max").get<double>() == 0.0);
  CHECK(report.at("wall_db").is_null());
  CHECK(report.at("wall_linear").is_null());

  // Uncolored noise gives the detector nothing to be fooled by.
  args.receivers = 2;
  args.rho_max = 0.0;
  {
    CaptureStdout capture;
    CHECK(cmd_bound(args) == 0);
    CHECK(capture.text().find("no noise coloring") != std::string::npos);
  }

  // Fully correlated noise is outside the model.
  args.rho_max = 1.0;
  {
    CaptureStdout capture;
    CHECK(cmd_bound(args) == 0);
    CHECK(capture.text().find("complete noise correlation") !=
          std::string::npos);
  }
  report = read_json(dir.path / "bound.json");
  CHECK(report.at("alpha_max").is_null());

  args.rho_max = -0.1;
  CaptureStdout capture;
  CHECK_THROWS_AS(cmd_bound(args), std::invalid_argument);
}

TEST_CASE("bound command accepts an explicit correlation model") {
  TempDir dir;

  // Args route first, for reference.
  BoundArgs by_geometry;
  by_geometry.receivers = 2;
  by_geometry.rho_max = 0.05;
  by_geometry.out_dir = (dir.path / "geometry").string();
  {
    CaptureStdout capture;
    CHECK(cmd_bound(by_geometry) == 0);
  }

  // The same scenario spelled out as matrices, with the noise entries in
  // [re, im] form.
  const std::string model_path = (dir.path / "model.json").string();
  {
    std::ofstream out(model_path);
    out << R"({
      "signal_corr": [[1.0, 1.0], [1.0, 1.0]],
      "noise_corr_h1": [[1.0, 0.0], [0.0, 1.0]],
      "noise_corr_h0": [[1.0, [0.05, 0.0]], [[0.05, 0.0], 1.0]]
    })";
  }
  BoundArgs by_model;
  by_model.model_file = model_path;
  by_model.out_dir = (dir.path / "model").string();
  {
    CaptureStdout capture;
    CHECK(cmd_bound(by_model) == 0);
  }

  CHECK(read_file(dir.path / "geometry" / "bound.json") ==
        read_file(dir.path / "model" / "bound.json"));

  CHECK_THROWS_WITH_AS(
      [&] {
        BoundArgs missing;
        missing.model_file = (dir.path / "nope.json").string();
        cmd_bound(missing);
      }(),
      doctest::Contains("cannot open model file"), std::invalid_argument);
}

TEST_CASE("simulate command writes the full result set") {
  TempDir dir;
  const ScenarioFile scenario = parse_scenario_text(tiny_scenario(dir.str()));
  CaptureStdout capture;
  CHECK(cmd_simulate(scenario) == 0);

  // 2 block lengths x (1 noise-only + 2 snr cells) x 4 instances.
  const std::string samples = read_file(dir.path / "samples.csv");
  CHECK(count_lines(samples) == 1 + 2 * 3 * 4);

  const nlohmann::json summary = read_json(dir.path / "summary.json");
  CHECK(summary.at("receivers") == 2);
  CHECK(summary.at("seed") == 7);
  REQUIRE(summary.at("cells").size() == 6);
  const auto& first = summary.at("cells").at(0);
  CHECK(first.at("hypothesis") == "h0");
  CHECK(first.at("snr_db").is_null());
  CHECK(first.at("n") == 64);
  CHECK(first.at("count") == 4);
  CHECK(first.at("median").is_number());
  const auto& second = summary.at("cells").at(1);
  CHECK(second.at("hypothesis") == "h1");
  CHECK(second.at("snr_db") == -5.0);

  for (const char* name :
       {"hist_h0_n64.csv", "hist_h1_n64_snr-5.csv", "hist_h1_n64_snr-8.csv",
        "hist_h0_n128.csv", "hist_h1_n128_snr-5.csv",
        "hist_h1_n128_snr-8.csv"}) {
    CHECK(fs::exists(dir.path / name));
  }
  CHECK_FALSE(fs::exists(dir.path / "psd_h0.csv"));

  // One narrated line per cell plus the closing "wrote" line.
  CHECK(count_lines(capture.text()) == 7);
}

TEST_CASE("simulate command emits the shaping spectrum for ar1 noise") {
  TempDir dir;
  const ScenarioFile scenario = parse_scenario_text(
      "p = 1\nq = 2\nm = 4\nn_values = 128\nsnr_db = -6\n"
      "noise_variance = 1\ninstances = 3\nbins = 3\nseed = 2\n"
      "h0_noise = ar1\nar1_coefficient = 0.5\nout_dir = " +
      dir.str() + "\n");
  CaptureStdout capture;
  CHECK(cmd_simulate(scenario) == 0);

  const std::string psd = read_file(dir.path / "psd_h0.csv");
  CHECK(count_lines(psd) == 1 + 1024);
  CHECK(psd.rfind("frequency,value\n", 0) == 0);

  // The first row is the DC bin, where an ar1 spectrum peaks at
  // innovation / (1 - a)^2 = 0.75 / 0.25.
  std::istringstream rows(psd);
  std::string header, dc_row;
  std::getline(rows, header);
  std::getline(rows, dc_row);
  CHECK(dc_row == "0,3");
}

TEST_CASE("wall-search command reports the crossing bracket") {
  TempDir dir;
  const ScenarioFile scenario = parse_scenario_text(
      "p = 2\nq = 0\nm = 4\nn_values = 512, 2048\nsnr_db = 6, -30\n"
      "noise_variance = 1\ninstances = 21\nbins = 4\nseed = 11\n"
      "h0_noise = receiver_correlated\nrho = 0.6\nout_dir = " +
      dir.str() + "\n");
  CaptureStdout capture;
  CHECK(cmd_wall_search(scenario) == 0);
  CHECK(capture.text().find("wall bracket: [-30, 6] dB") !=
        std::string::npos);

  const nlohmann::json result = read_json(dir.path / "wall_search.json");
  CHECK(result.at("n") == 2048);
  CHECK(result.at("median_h0").get<double>() > 3.0);
  REQUIRE(result.at("h1_medians").size() == 2);
  CHECK(result.at("h1_medians").at(0).at("snr_db") == 6.0);
  REQUIRE_FALSE(result.at("crossing").is_null());
  CHECK(result.at("crossing").at("hi_db") == 6.0);
  CHECK(result.at("crossing").at("lo_db") == -30.0);
}

TEST_CASE("installed binary end to end") {
  TempDir dir;

  CHECK(run_cli("bound --p 2 --rho-max 0.05 --out " +
                (dir.path / "bound_out").string()) == 0);
  CHECK(fs::exists(dir.path / "bound_out" / "bound.json"));

  // A preset run, clamped down to smoke-test size.
  CHECK(run_cli("simulate --preset reproduce-fig2 --n-max 256 "
                "--instances 3 --seed 5 --out " +
                (dir.path / "sim_out").string()) == 0);
  const nlohmann::json summary =
      read_json(dir.path / "sim_out" / "summary.json");
  CHECK(summary.at("instances") == 3);
  CHECK(summary.at("seed") == 5);
  REQUIRE(summary.at("cells").size() == 7);  // one clamped n, 1 + 6 cells
  CHECK(summary.at("cells").at(0).at("n") == 256);

  // Scenario files work through the binary too.
  const fs::path scenario_path = dir.path / "scenario.txt";
  {
    std::ofstream out(scenario_path);
    out << tiny_scenario((dir.path / "file_out").string());
  }
  CHECK(run_cli("simulate --scenario " + scenario_path.string()) == 0);
  CHECK(fs::exists(dir.path / "file_out" / "samples.csv"));

  // Failure modes: no subcommand, unknown preset, missing scenario file,
  // both sources at once.
  CHECK(run_cli("") != 0);
  CHECK(run_cli("simulate --preset reproduce-fig9") == 1);
  CHECK(run_cli("simulate --scenario /nonexistent.txt") == 1);
  CHECK(run_cli("simulate --preset reproduce-fig2 --scenario " +
                scenario_path.string()) != 0);
}
