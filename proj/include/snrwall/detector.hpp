#pragma once

#include <Eigen/Dense>
#include <limits>

#include "snrwall/model.hpp"

namespace snrwall {

enum class Hypothesis { noise_only, signal_present };

// Real eigenvalues of a Hermitian matrix in descending order.
struct EigenSpectrum {
  Eigen::VectorXd values;

  Eigen::Index dimension() const { return values.size(); }
  double max() const { return values(0); }
  double min() const { return values(values.size() - 1); }
};

struct Decision {
  double statistic = 0.0;
  double threshold = 0.0;
  Hypothesis verdict = Hypothesis::noise_only;
};

// Reported when the smallest eigenvalue is too close to zero for the ratio
// to mean anything; callers tally these rather than feeding them onward.
inline constexpr double detection_impossible =
    std::numeric_limits<double>::infinity();

// Sample covariance (1/count) * sum of v v^H over the fused vectors.
HermitianCovariance sample_covariance(const VectorSeries& series);

EigenSpectrum hermitian_eigenvalues(const HermitianCovariance& cov);

// Ratio of extreme eigenvalues, the detector's test statistic. Values from
// any positive semidefinite input are >= 1. When the smallest eigenvalue
// falls at or below eigenvalue_floor * largest, returns the
// detection_impossible sentinel instead of an unstable quotient.
double mme_statistic(const HermitianCovariance& cov,
                     double eigenvalue_floor = 1e-12);

// Threshold test: signal_present iff statistic >= threshold. The boundary
// counts as a detection. Thresholds must exceed 1, the statistic's floor.
Decision decide(double statistic, double threshold);

}  // namespace snrwall
