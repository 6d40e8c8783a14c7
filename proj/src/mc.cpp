#include "snrwall/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "snrwall/rng.hpp"

namespace snrwall {

namespace {

std::string format_full(double value) {
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// Work-stealing loop over [0, total). Tasks write to disjoint slots, so the
// only shared state is the index counter. The first exception (if any) is
// captured and rethrown on the calling thread.
void parallel_for(long total, int threads,
                  const std::function<void(long)>& body) {
  int worker_count =
      threads > 0 ? threads
                  : static_cast<int>(std::thread::hardware_concurrency());
  if (worker_count < 1) {
    worker_count = 1;
  }
  if (worker_count == 1 || total < 2) {
    for (long i = 0; i < total; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const long i = next.fetch_add(1);
      if (i >= total) {
        break;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) {
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(worker_count));
  for (int t = 0; t < worker_count; ++t) {
    pool.emplace_back(worker);
  }
  for (auto& thread : pool) {
    thread.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

struct CellSpec {
  Hypothesis hypothesis = Hypothesis::noise_only;
  Eigen::Index sample_count = 0;
  double snr_db = 0.0;
  int snr_index = -1;
};

SampleBlock make_h0_block(const ScenarioConfig& config, Eigen::Index n,
                          std::uint64_t seed) {
  const int p = config.receivers;
  switch (config.h0_noise.kind()) {
    case NoiseKind::white: {
      Eigen::MatrixXcd samples(p, n);
      for (int r = 0; r < p; ++r) {
        samples.row(r) =
            white_noise(n, config.noise_variance,
                        derive_seed(seed, {10, static_cast<std::uint64_t>(r)}))
                .transpose();
      }
      return SampleBlock(std::move(samples));
    }
    case NoiseKind::ar1: {
      // Spectral synthesis per receiver, independent streams.
      Eigen::MatrixXcd samples(p, n);
      for (int r = 0; r < p; ++r) {
        samples.row(r) =
            psd_shaped_noise(config.h0_noise, n,
                             derive_seed(seed, {10, static_cast<std::uint64_t>(r)}))
                .transpose();
      }
      return SampleBlock(std::move(samples));
    }
    case NoiseKind::receiver_correlated:
      return cholesky_colored_noise(config.h0_noise.target(), n,
                                    derive_seed(seed, {10, 0}));
  }
  throw std::logic_error("unhandled noise kind");
}

SampleBlock make_h1_block(const ScenarioConfig& config, Eigen::Index n,
                          double snr_db, std::uint64_t seed) {
  const int p = config.receivers;
  const int m = config.oversampling;
  SignalModelParams params;
  params.oversampling = m;
  params.symbol_variance = Snr::from_db(snr_db).linear() * config.noise_variance;
  params.receivers = p;
  params.smoothing = config.smoothing;
  const Eigen::Index num_symbols = (n + m - 1) / m;
  const Eigen::VectorXcd signal =
      generate_bpsk_signal(num_symbols, params, derive_seed(seed, {20}));
  Eigen::MatrixXcd samples(p, n);
  for (int r = 0; r < p; ++r) {
    samples.row(r) =
        (signal.head(n) +
         white_noise(n, config.noise_variance,
                     derive_seed(seed, {21, static_cast<std::uint64_t>(r)})))
            .transpose();
  }
  return SampleBlock(std::move(samples));
}

StatisticSample run_one(const ScenarioConfig& config, const CellSpec& cell,
                        int instance) {
  const std::uint64_t hypothesis_tag =
      cell.hypothesis == Hypothesis::signal_present ? 1 : 0;
  // The seed hashes the full task coordinates; scheduling order never
  // matters. snr_index is -1 for noise-only cells, hence the +1 shift.
  const std::uint64_t seed = derive_seed(
      config.master_seed,
      {hypothesis_tag, static_cast<std::uint64_t>(cell.sample_count),
       static_cast<std::uint64_t>(cell.snr_index + 1),
       static_cast<std::uint64_t>(instance)});
  const SampleBlock block =
      cell.hypothesis == Hypothesis::noise_only
          ? make_h0_block(config, cell.sample_count, seed)
          : make_h1_block(config, cell.sample_count, cell.snr_db, seed);
  const VectorSeries series = build_smoothed_vectors(block, config.smoothing);
  StatisticSample sample;
  sample.hypothesis = cell.hypothesis;
  sample.snr_db = cell.snr_db;
  sample.sample_count = cell.sample_count;
  sample.instance = instance;
  sample.seed = seed;
  sample.statistic = mme_statistic(sample_covariance(series));
  return sample;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (receivers < 1) {
    throw std::invalid_argument("receivers must be at least 1");
  }
  if (smoothing < 0) {
    throw std::invalid_argument("smoothing must be nonnegative");
  }
  if (oversampling < 1) {
    throw std::invalid_argument("oversampling must be at least 1");
  }
  if (receivers * (smoothing + 1) < 2) {
    throw std::invalid_argument(
        "fused dimension must be at least 2 for an eigenvalue ratio; "
        "increase receivers or smoothing");
  }
  if (sample_counts.empty()) {
    throw std::invalid_argument("at least one block length is required");
  }
  for (const Eigen::Index n : sample_counts) {
    if (n <= smoothing) {
      throw std::invalid_argument(
          "every block length must exceed the smoothing depth");
    }
  }
  if (instances < 1) {
    throw std::invalid_argument("instances must be at least 1");
  }
  if (bins < 2) {
    throw std::invalid_argument("bins must be at least 2");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("noise variance must be positive");
  }
  const double tol = 1e-12 * std::max(1.0, noise_variance);
  if (std::abs(h0_noise.noise_variance() - noise_variance) > tol ||
      std::abs(h1_noise.noise_variance() - noise_variance) > tol) {
    throw std::invalid_argument(
        "noise models must carry the scenario's noise variance");
  }
  if (h1_noise.kind() != NoiseKind::white) {
    throw std::invalid_argument(
        "signal-hypothesis noise must be white; only the noise-only side is "
        "allowed to be colored");
  }
  if (h0_noise.kind() == NoiseKind::receiver_correlated &&
      h0_noise.target().dimension() != receivers) {
    throw std::invalid_argument(
        "receiver-correlated target dimension must match the receiver count");
  }
}

std::vector<StatisticSample> run_scenario(const ScenarioConfig& config,
                                          int threads) {
  config.validate();
  std::vector<CellSpec> cells;
  for (const Eigen::Index n : config.sample_counts) {
    cells.push_back(CellSpec{Hypothesis::noise_only, n,
                             std::numeric_limits<double>::quiet_NaN(), -1});
    for (std::size_t i = 0; i < config.snr_db_values.size(); ++i) {
      cells.push_back(CellSpec{Hypothesis::signal_present, n,
                               config.snr_db_values[i], static_cast<int>(i)});
    }
  }
  const long total =
      static_cast<long>(cells.size()) * static_cast<long>(config.instances);
  std::vector<StatisticSample> samples(static_cast<std::size_t>(total));
  parallel_for(total, threads, [&](long task) {
    const CellSpec& cell =
        cells[static_cast<std::size_t>(task / config.instances)];
    const int instance = static_cast<int>(task % config.instances);
    samples[static_cast<std::size_t>(task)] = run_one(config, cell, instance);
  });
  return samples;
}

std::vector<double> cell_statistics(const std::vector<StatisticSample>& all,
                                    Hypothesis hypothesis,
                                    Eigen::Index sample_count, double snr_db) {
  std::vector<double> out;
  for (const StatisticSample& s : all) {
    if (s.hypothesis != hypothesis || s.sample_count != sample_count) {
      continue;
    }
    if (hypothesis == Hypothesis::signal_present && s.snr_db != snr_db) {
      continue;
    }
    out.push_back(s.statistic);
  }
  return out;
}

double sample_median(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("median of an empty set is undefined");
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) {
    return values[mid];
  }
  return 0.5 * (values[mid - 1] + values[mid]);
}

HistogramSummary summarize(const std::vector<double>& statistics, int bins) {
  if (statistics.empty()) {
    throw std::invalid_argument("cannot summarize an empty cell");
  }
  if (bins < 1) {
    throw std::invalid_argument("bins must be at least 1");
  }
  HistogramSummary summary;
  summary.total_count = statistics.size();
  std::vector<double> finite;
  finite.reserve(statistics.size());
  for (const double v : statistics) {
    if (std::isfinite(v)) {
      finite.push_back(v);
    } else {
      ++summary.sentinel_count;
    }
  }
  if (finite.empty()) {
    summary.median = std::numeric_limits<double>::quiet_NaN();
    summary.mean = std::numeric_limits<double>::quiet_NaN();
    return summary;
  }
  const auto [lo_it, hi_it] = std::minmax_element(finite.begin(), finite.end());
  const double lo = *lo_it;
  // A cell where every draw is identical still needs a usable axis.
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  summary.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) {
    summary.edges[static_cast<std::size_t>(k)] =
        lo + (hi - lo) * static_cast<double>(k) / bins;
  }
  summary.edges.back() = hi;
  summary.counts.assign(static_cast<std::size_t>(bins), 0);
  double sum = 0.0;
  for (const double v : finite) {
    sum += v;
    int index = static_cast<int>((v - lo) / (hi - lo) * bins);
    // Clamping folds the top edge into the last bin (right-inclusive).
    index = std::clamp(index, 0, bins - 1);
    ++summary.counts[static_cast<std::size_t>(index)];
  }
  summary.mean = sum / static_cast<double>(finite.size());
  summary.median = sample_median(std::move(finite));
  return summary;
}

WallSearchResult empirical_wall_search(const ScenarioConfig& config,
                                       const std::vector<double>& snr_grid_db,
                                       int threads) {
  if (snr_grid_db.size() < 2) {
    throw std::invalid_argument("wall search needs at least two grid points");
  }
  for (std::size_t i = 1; i < snr_grid_db.size(); ++i) {
    if (!(snr_grid_db[i] < snr_grid_db[i - 1])) {
      throw std::invalid_argument(
          "wall search grid must be strictly descending");
    }
  }
  ScenarioConfig sweep = config;
  sweep.sample_counts = {*std::max_element(config.sample_counts.begin(),
                                           config.sample_counts.end())};
  sweep.snr_db_values = snr_grid_db;
  sweep.validate();
  const Eigen::Index n = sweep.sample_counts.front();
  const std::vector<StatisticSample> samples = run_scenario(sweep, threads);

  WallSearchResult result;
  result.sample_count = n;
  result.median_h0 = sample_median(cell_statistics(
      samples, Hypothesis::noise_only, n,
      std::numeric_limits<double>::quiet_NaN()));
  for (const double snr : snr_grid_db) {
    result.h1_medians.emplace_back(
        snr, sample_median(cell_statistics(samples, Hypothesis::signal_present,
                                           n, snr)));
  }
  for (std::size_t i = 0; i + 1 < result.h1_medians.size(); ++i) {
    const double hi_median = result.h1_medians[i].second;
    const double lo_median = result.h1_medians[i + 1].second;
    if (hi_median >= result.median_h0 && lo_median < result.median_h0) {
      result.crossing = WallCrossing{result.h1_medians[i].first,
                                     result.h1_medians[i + 1].first};
      break;
    }
  }
  return result;
}

void write_samples_csv(std::ostream& out,
                       const std::vector<StatisticSample>& samples) {
  out << "hypothesis,snr_db,n,instance,statistic\n";
  for (const StatisticSample& s : samples) {
    out << (s.hypothesis == Hypothesis::signal_present ? "h1" : "h0") << ',';
    if (!std::isnan(s.snr_db)) {
      out << format_full(s.snr_db);
    }
    out << ',' << s.sample_count << ',' << s.instance << ','
        << format_full(s.statistic) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const HistogramSummary& summary) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t k = 0; k < summary.counts.size(); ++k) {
    out << format_full(summary.edges[k]) << ','
        << format_full(summary.edges[k + 1]) << ',' << summary.counts[k]
        << '\n';
  }
  out << "# total = " << summary.total_count << '\n';
  out << "# sentinels = " << summary.sentinel_count << '\n';
  out << "# median = " << format_full(summary.median) << '\n';
  out << "# mean = " << format_full(summary.mean) << '\n';
}

}  // namespace snrwall
