#include "snrwall/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace snrwall {

namespace {

namespace fs = std::filesystem;

std::string format_full(double value) {
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream stream(value);
  while (std::getline(stream, item, ',')) {
    parts.push_back(trim(item));
  }
  return parts;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument("");
    }
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("scenario key '" + key +
                                "' has a malformed number: '" + value + "'");
  }
}

long long parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument("");
    }
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("scenario key '" + key +
                                "' has a malformed integer: '" + value + "'");
  }
}

// Keys parsed so far are erased from the map; whatever remains at the end is
// unknown and gets reported by name.
class KeyValueDoc {
 public:
  explicit KeyValueDoc(const std::string& text) {
    std::istringstream stream(text);
    std::string line;
    int line_number = 0;
    while (std::getline(stream, line)) {
      ++line_number;
      if (const auto hash = line.find('#'); hash != std::string::npos) {
        line = line.substr(0, hash);
      }
      line = trim(line);
      if (line.empty()) {
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("scenario line " +
                                    std::to_string(line_number) +
                                    " is not of the form key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) {
        throw std::invalid_argument("scenario line " +
                                    std::to_string(line_number) +
                                    " has an empty key or value");
      }
      if (!entries_.emplace(key, value).second) {
        throw std::invalid_argument("duplicate scenario key '" + key + "'");
      }
    }
  }

  std::optional<std::string> take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
      return std::nullopt;
    }
    std::string value = it->second;
    entries_.erase(it);
    return value;
  }

  std::string require(const std::string& key) {
    auto value = take(key);
    if (!value) {
      throw std::invalid_argument("missing scenario key '" + key + "'");
    }
    return *value;
  }

  void reject_leftovers() const {
    if (!entries_.empty()) {
      throw std::invalid_argument("unknown scenario key '" +
                                  entries_.begin()->first + "'");
    }
  }

 private:
  std::map<std::string, std::string> entries_;
};

HermitianCovariance equicorrelated_target(int receivers, double rho,
                                          double noise_variance) {
  Eigen::MatrixXcd target = Eigen::MatrixXcd::Constant(
      receivers, receivers, cxd(noise_variance * rho, 0.0));
  target.diagonal().setConstant(cxd(noise_variance, 0.0));
  return HermitianCovariance::from_matrix(target,
                                          CovarianceKind::statistical);
}

Eigen::MatrixXcd parse_complex_matrix(const nlohmann::json& j,
                                      const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("model field '" + field +
                                "' must be a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != cols) {
      throw std::invalid_argument("model field '" + field +
                                  "' has ragged rows");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      const auto& entry = row[k];
      cxd value;
      if (entry.is_number()) {
        value = cxd(entry.get<double>(), 0.0);
      } else if (entry.is_array() && entry.size() == 2 &&
                 entry[0].is_number() && entry[1].is_number()) {
        value = cxd(entry[0].get<double>(), entry[1].get<double>());
      } else {
        throw std::invalid_argument(
            "model field '" + field +
            "' entries must be numbers or [re, im] pairs");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = value;
    }
  }
  return m;
}

CorrelationModel load_correlation_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open model file '" + path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("model file '" + path +
                                "' is not valid JSON: " + e.what());
  }
  for (const char* field : {"signal_corr", "noise_corr_h1", "noise_corr_h0"}) {
    if (!j.contains(field)) {
      throw std::invalid_argument("model file '" + path +
                                  "' is missing field '" + field + "'");
    }
  }
  CorrelationModel model;
  const Eigen::MatrixXcd signal = parse_complex_matrix(j["signal_corr"],
                                                       "signal_corr");
  if (signal.imag().cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("signal_corr must be real");
  }
  model.signal_corr = signal.real();
  model.noise_corr_h1 = parse_complex_matrix(j["noise_corr_h1"],
                                             "noise_corr_h1");
  model.noise_corr_h0 = parse_complex_matrix(j["noise_corr_h0"],
                                             "noise_corr_h0");
  model.validate();
  return model;
}

// Largest off-diagonal absolute row sum of the signal correlation; the
// general-model counterpart of the closed-form kappa expressions.
double kappa_from_matrix(const Eigen::MatrixXd& signal_corr) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < signal_corr.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < signal_corr.cols(); ++j) {
      if (j != i) {
        row += std::abs(signal_corr(i, j));
      }
    }
    best = std::max(best, row);
  }
  return best;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << content;
}

nlohmann::json json_or_null(double value) {
  return std::isfinite(value) ? nlohmann::json(value) : nlohmann::json(nullptr);
}

std::string histogram_file_name(Eigen::Index n, bool h1, double snr_db) {
  std::ostringstream name;
  name << "hist_" << (h1 ? "h1" : "h0") << "_n" << n;
  if (h1) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%g", snr_db);
    name << "_snr" << buffer;
  }
  name << ".csv";
  return name.str();
}

}  // namespace

ScenarioFile parse_scenario_text(const std::string& text) {
  KeyValueDoc doc(text);
  ScenarioFile file;
  ScenarioConfig& config = file.config;

  config.receivers =
      static_cast<int>(parse_integer("p", doc.require("p")));
  config.smoothing = static_cast<int>(parse_integer("q", doc.require("q")));
  config.oversampling =
      static_cast<int>(parse_integer("m", doc.require("m")));

  config.sample_counts.clear();
  for (const std::string& item : split_list(doc.require("n_values"))) {
    config.sample_counts.push_back(
        static_cast<Eigen::Index>(parse_integer("n_values", item)));
  }
  config.snr_db_values.clear();
  for (const std::string& item : split_list(doc.require("snr_db"))) {
    config.snr_db_values.push_back(parse_double("snr_db", item));
  }

  config.noise_variance =
      parse_double("noise_variance", doc.require("noise_variance"));
  config.instances =
      static_cast<int>(parse_integer("instances", doc.require("instances")));
  config.bins = static_cast<int>(parse_integer("bins", doc.require("bins")));
  config.master_seed = static_cast<std::uint64_t>(
      parse_integer("seed", doc.require("seed")));
  file.out_dir = doc.require("out_dir");

  const std::string h0_kind = doc.require("h0_noise");
  const auto rho = doc.take("rho");
  const auto ar1_coefficient = doc.take("ar1_coefficient");
  if (h0_kind == "white") {
    if (rho || ar1_coefficient) {
      throw std::invalid_argument(
          "keys 'rho' and 'ar1_coefficient' do not apply to white noise");
    }
    config.h0_noise = NoiseModel::white(config.noise_variance);
  } else if (h0_kind == "ar1") {
    if (!ar1_coefficient) {
      throw std::invalid_argument("ar1 noise requires key 'ar1_coefficient'");
    }
    if (rho) {
      throw std::invalid_argument("key 'rho' does not apply to ar1 noise");
    }
    config.h0_noise = NoiseModel::ar1(
        parse_double("ar1_coefficient", *ar1_coefficient),
        config.noise_variance);
  } else if (h0_kind == "receiver_correlated") {
    if (!rho) {
      throw std::invalid_argument(
          "receiver_correlated noise requires key 'rho'");
    }
    if (ar1_coefficient) {
      throw std::invalid_argument(
          "key 'ar1_coefficient' does not apply to receiver_correlated noise");
    }
    config.h0_noise = NoiseModel::receiver_correlated(equicorrelated_target(
        config.receivers, parse_double("rho", *rho), config.noise_variance));
  } else {
    throw std::invalid_argument(
        "h0_noise must be white, ar1, or receiver_correlated; got '" +
        h0_kind + "'");
  }

  if (const auto h1_kind = doc.take("h1_noise"); h1_kind && *h1_kind != "white") {
    throw std::invalid_argument(
        "h1_noise only supports 'white'; the nominal noise model is flat");
  }
  config.h1_noise = NoiseModel::white(config.noise_variance);

  doc.reject_leftovers();
  config.validate();
  return file;
}

ScenarioFile parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open scenario file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario_text(text.str());
}

ScenarioFile preset_scenario(const std::string& name, bool long_mode) {
  ScenarioFile file;
  ScenarioConfig& config = file.config;
  config.oversampling = 4;
  config.noise_variance = 1.0;
  config.bins = 12;
  config.master_seed = 1;
  config.instances = long_mode ? 2000 : 500;
  config.sample_counts =
      long_mode ? std::vector<Eigen::Index>{999, 9999, 999999}
                : std::vector<Eigen::Index>{999, 9999, 99999};
  if (name == "reproduce-fig2") {
    config.receivers = 2;
    config.smoothing = 0;
    config.snr_db_values = {-10, -11, -12, -13, -14, -15};
    config.h0_noise = NoiseModel::receiver_correlated(
        equicorrelated_target(2, 0.05, config.noise_variance));
  } else if (name == "reproduce-fig3") {
    config.receivers = 1;
    config.smoothing = 4;
    config.snr_db_values = {-6, -7, -8, -9, -10};
    config.h0_noise = NoiseModel::ar1(0.1, config.noise_variance);
  } else {
    throw std::invalid_argument(
        "unknown preset '" + name +
        "'; available: reproduce-fig2, reproduce-fig3");
  }
  config.h1_noise = NoiseModel::white(config.noise_variance);
  file.out_dir = "out/" + name;
  config.validate();
  return file;
}

int cmd_bound(const BoundArgs& args) {
  double kappa = 0.0;
  double rho = args.rho_max;
  if (!args.model_file.empty()) {
    const CorrelationModel model = load_correlation_model(args.model_file);
    kappa = kappa_from_matrix(model.signal_corr);
    rho = model.max_h0_noise_correlation();
  } else {
    if (args.receivers < 1 || args.smoothing < 0 || args.oversampling < 1) {
      throw std::invalid_argument("bad scenario geometry");
    }
    if (args.smoothing > 0 && args.receivers > 1) {
      kappa = kappa_max_combined(
          args.receivers, kappa_max_time(args.smoothing, args.oversampling));
    } else if (args.smoothing > 0) {
      kappa = kappa_max_time(args.smoothing, args.oversampling);
    } else {
      kappa = kappa_max_receiver(args.receivers);
    }
  }
  if (rho < 0.0) {
    throw std::invalid_argument("rho_max must be nonnegative");
  }

  BoundReport report;
  std::string reason;
  if (kappa >= 1.0 && rho > 0.0 && rho < 1.0) {
    report = snr_wall_lower_bound(h0_statistic_lower_bound(rho), kappa);
    if (!report.defined) {
      reason = "validity cap exceeded";
    }
  } else {
    report.kappa_max = kappa;
    report.alpha_max = rho < 1.0
                           ? (1.0 + rho) / (1.0 - rho)
                           : std::numeric_limits<double>::quiet_NaN();
    report.validity_snr_cap =
        kappa > 1.0 ? 1.0 / (kappa - 1.0)
                    : std::numeric_limits<double>::infinity();
    report.wall_linear = std::numeric_limits<double>::quiet_NaN();
    report.wall_db = std::numeric_limits<double>::quiet_NaN();
    report.defined = false;
    if (kappa < 1.0) {
      reason = "kappa_max = " + format_full(kappa) +
               " < 1 (not enough signal correlation)";
    } else if (rho == 0.0) {
      reason = "rho_max = 0 (no noise coloring to exploit)";
    } else {
      reason = "rho_max >= 1 (complete noise correlation excluded)";
    }
  }

  if (report.defined) {
    std::cout << "kappa_max        = " << format_full(report.kappa_max) << '\n'
              << "alpha_max        = " << format_full(report.alpha_max) << '\n'
              << "validity_snr_cap = "
              << (std::isinf(report.validity_snr_cap)
                      ? std::string("unbounded")
                      : format_full(report.validity_snr_cap))
              << '\n'
              << "wall_linear      = " << format_full(report.wall_linear)
              << '\n'
              << "wall_db          = " << format_full(report.wall_db) << '\n';
  } else {
    std::cout << "bound undefined: " << reason << '\n';
  }

  fs::create_directories(args.out_dir);
  write_text_file(fs::path(args.out_dir) / "bound.json",
                  bound_report_json(report) + "\n");
  return 0;
}

int cmd_simulate(const ScenarioFile& scenario) {
  const ScenarioConfig& config = scenario.config;
  config.validate();
  fs::create_directories(scenario.out_dir);
  const std::vector<StatisticSample> samples = run_scenario(config);

  {
    std::ofstream out(fs::path(scenario.out_dir) / "samples.csv");
    if (!out) {
      throw std::runtime_error("cannot write samples.csv");
    }
    write_samples_csv(out, samples);
  }

  nlohmann::json summary;
  summary["receivers"] = config.receivers;
  summary["smoothing"] = config.smoothing;
  summary["oversampling"] = config.oversampling;
  summary["noise_variance"] = config.noise_variance;
  summary["instances"] = config.instances;
  summary["bins"] = config.bins;
  summary["seed"] = config.master_seed;
  summary["cells"] = nlohmann::json::array();

  const double h0_marker = std::numeric_limits<double>::quiet_NaN();
  for (const Eigen::Index n : config.sample_counts) {
    for (std::size_t i = 0; i <= config.snr_db_values.size(); ++i) {
      const bool h1 = i > 0;
      const double snr = h1 ? config.snr_db_values[i - 1] : h0_marker;
      const auto statistics = cell_statistics(
          samples, h1 ? Hypothesis::signal_present : Hypothesis::noise_only,
          n, snr);
      const HistogramSummary cell = summarize(statistics, config.bins);

      nlohmann::json record;
      record["hypothesis"] = h1 ? "h1" : "h0";
      record["snr_db"] = h1 ? nlohmann::json(snr) : nlohmann::json(nullptr);
      record["n"] = n;
      record["count"] = cell.total_count;
      record["sentinel_count"] = cell.sentinel_count;
      record["median"] = json_or_null(cell.median);
      record["mean"] = json_or_null(cell.mean);
      summary["cells"].push_back(record);

      std::ofstream out(fs::path(scenario.out_dir) /
                        histogram_file_name(n, h1, snr));
      if (!out) {
        throw std::runtime_error("cannot write a histogram file");
      }
      write_histogram_csv(out, cell);

      std::cout << (h1 ? "h1" : "h0") << "  n=" << n;
      if (h1) {
        std::cout << "  snr_db=" << snr;
      }
      std::cout << "  median=" << format_full(cell.median)
                << "  mean=" << format_full(cell.mean);
      if (cell.sentinel_count > 0) {
        std::cout << "  sentinels=" << cell.sentinel_count;
      }
      std::cout << '\n';
    }
  }

  if (config.h0_noise.kind() == NoiseKind::ar1) {
    // The sampled spectrum the noise-only draws were shaped with, on a fixed
    // display grid.
    const Eigen::Index grid = 1024;
    const Eigen::VectorXd psd =
        psd_of_ar1(config.h0_noise.ar_coefficient(), grid,
                   config.h0_noise.innovation_variance());
    std::ofstream out(fs::path(scenario.out_dir) / "psd_h0.csv");
    if (!out) {
      throw std::runtime_error("cannot write psd_h0.csv");
    }
    out << "frequency,value\n";
    for (Eigen::Index k = 0; k < grid; ++k) {
      out << format_full(static_cast<double>(k) / static_cast<double>(grid))
          << ',' << format_full(psd(k)) << '\n';
    }
  }

  write_text_file(fs::path(scenario.out_dir) / "summary.json",
                  summary.dump(2) + "\n");
  std::cout << "wrote " << scenario.out_dir << '\n';
  return 0;
}

int cmd_wall_search(const ScenarioFile& scenario) {
  const ScenarioConfig& config = scenario.config;
  const WallSearchResult result =
      empirical_wall_search(config, config.snr_db_values);

  std::cout << "n = " << result.sample_count << '\n';
  std::cout << "median_h0 = " << format_full(result.median_h0) << '\n';
  for (const auto& [snr, median] : result.h1_medians) {
    std::cout << "snr_db = " << snr << "  median_h1 = " << format_full(median)
              << '\n';
  }
  nlohmann::json j;
  j["n"] = result.sample_count;
  j["median_h0"] = json_or_null(result.median_h0);
  j["h1_medians"] = nlohmann::json::array();
  for (const auto& [snr, median] : result.h1_medians) {
    j["h1_medians"].push_back(
        {{"snr_db", snr}, {"median", json_or_null(median)}});
  }
  if (result.crossing) {
    std::cout << "wall bracket: [" << result.crossing->lo_db << ", "
              << result.crossing->hi_db << "] dB\n";
    j["crossing"] = {{"hi_db", result.crossing->hi_db},
                     {"lo_db", result.crossing->lo_db}};
  } else {
    std::cout << "no crossing found on the grid\n";
    j["crossing"] = nullptr;
  }

  fs::create_directories(scenario.out_dir);
  write_text_file(fs::path(scenario.out_dir) / "wall_search.json",
                  j.dump(2) + "\n");
  return 0;
}

}  // namespace snrwall
