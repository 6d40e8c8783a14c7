#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "snrwall/detector.hpp"
#include "snrwall/model.hpp"
#include "snrwall/noise.hpp"

namespace snrwall {

// One Monte Carlo experiment: a grid of block lengths and SNR points, a
// noise-only model, and a repetition count. The signal-hypothesis noise is
// always white with the nominal variance; the noise-only side may be any
// supported model with the same variance (that mismatch is the point).
struct ScenarioConfig {
  int receivers = 1;
  int smoothing = 0;
  int oversampling = 4;
  std::vector<Eigen::Index> sample_counts;  // block lengths N
  std::vector<double> snr_db_values;        // signal-hypothesis grid
  NoiseModel h0_noise = NoiseModel::white(1.0);
  NoiseModel h1_noise = NoiseModel::white(1.0);
  double noise_variance = 1.0;
  int instances = 500;
  int bins = 12;
  std::uint64_t master_seed = 1;

  void validate() const;  // throws std::invalid_argument on violation
};

// One detector run. snr_db is NaN for noise-only draws. statistic may be the
// detection_impossible sentinel.
struct StatisticSample {
  Hypothesis hypothesis = Hypothesis::noise_only;
  double snr_db = 0.0;
  Eigen::Index sample_count = 0;
  int instance = 0;
  std::uint64_t seed = 0;
  double statistic = 0.0;
};

// Equal-width histogram over the finite samples of one cell, plus order
// statistics. Sentinel draws are counted separately and excluded from the
// bins, the mean, and the median. With no finite samples the numeric fields
// are NaN and the bin vectors are empty.
struct HistogramSummary {
  std::vector<double> edges;   // bins + 1 ascending edges
  std::vector<long> counts;    // one per bin; last bin right-inclusive
  double median = 0.0;
  double mean = 0.0;
  std::size_t total_count = 0;
  std::size_t sentinel_count = 0;
};

// Runs every (hypothesis, N, snr, instance) combination and returns the
// samples in deterministic order: block lengths in the given order, the
// noise-only cell first, then the SNR grid, instances innermost. Each task
// derives its own seed from its coordinates, so the output is identical
// regardless of thread count. threads == 0 means use the hardware count.
std::vector<StatisticSample> run_scenario(const ScenarioConfig& config,
                                          int threads = 0);

// Statistics of the samples belonging to one cell. Noise-only cells are
// selected with snr_db = NaN.
std::vector<double> cell_statistics(const std::vector<StatisticSample>& all,
                                    Hypothesis hypothesis,
                                    Eigen::Index sample_count,
                                    double snr_db);

// Midpoint-of-two-central-values median. Sentinel (infinite) entries sort
// high and are included, so a cell dominated by them medians to infinity.
double sample_median(std::vector<double> values);

HistogramSummary summarize(const std::vector<double>& statistics, int bins);

// A bracketing pair from the wall hunt: detection still works at hi_db and
// has stopped working at lo_db.
struct WallCrossing {
  double hi_db = 0.0;
  double lo_db = 0.0;
};

struct WallSearchResult {
  Eigen::Index sample_count = 0;
  double median_h0 = 0.0;
  std::vector<std::pair<double, double>> h1_medians;  // (snr_db, median)
  std::optional<WallCrossing> crossing;
};

// Sweeps a strictly descending SNR grid at the largest configured block
// length and reports the first adjacent pair where the signal-hypothesis
// median falls from >= the noise-only median to below it.
WallSearchResult empirical_wall_search(const ScenarioConfig& config,
                                       const std::vector<double>& snr_grid_db,
                                       int threads = 0);

// Raw samples, one row per draw. Sentinels print as "inf"; noise-only rows
// leave the snr column empty.
void write_samples_csv(std::ostream& out,
                       const std::vector<StatisticSample>& samples);

// Histogram rows (bin_lo, bin_hi, count) followed by the summary scalars as
// comment lines.
void write_histogram_csv(std::ostream& out, const HistogramSummary& summary);

}  // namespace snrwall
