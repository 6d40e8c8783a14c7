#include "snrwall/detector.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace snrwall {

HermitianCovariance sample_covariance(const VectorSeries& series) {
  if (series.count() < 1) {
    throw std::invalid_argument("sample covariance needs at least one vector");
  }
  const Eigen::Index g = series.dimension();
  const double weight = 1.0 / static_cast<double>(series.count());
  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(g, g);
  // Accumulate the averaged outer products as a rank update on the lower
  // triangle, then mirror; from_matrix re-checks and stores exact symmetry.
  cov.selfadjointView<Eigen::Lower>().rankUpdate(series.vectors, weight);
  const Eigen::MatrixXcd full = cov.selfadjointView<Eigen::Lower>();
  return HermitianCovariance::from_matrix(full, CovarianceKind::sample);
}

EigenSpectrum hermitian_eigenvalues(const HermitianCovariance& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      cov.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalue iteration failed to converge");
  }
  return EigenSpectrum{solver.eigenvalues().reverse()};
}

double mme_statistic(const HermitianCovariance& cov, double eigenvalue_floor) {
  if (!(eigenvalue_floor >= 0.0)) {
    throw std::invalid_argument("eigenvalue floor must be nonnegative");
  }
  const EigenSpectrum spectrum = hermitian_eigenvalues(cov);
  const double top = spectrum.max();
  const double bottom = spectrum.min();
  if (bottom < -1e-10 * std::max(1.0, top)) {
    throw std::invalid_argument(
        "matrix is not positive semidefinite within tolerance");
  }
  if (!(bottom > eigenvalue_floor * top)) {
    return detection_impossible;
  }
  return top / bottom;
}

Decision decide(double statistic, double threshold) {
  if (!(threshold > 1.0)) {
    throw std::invalid_argument(
        "threshold must exceed 1, the statistic's floor");
  }
  Decision d;
  d.statistic = statistic;
  d.threshold = threshold;
  d.verdict = statistic >= threshold ? Hypothesis::signal_present
                                     : Hypothesis::noise_only;
  return d;
}

}  // namespace snrwall
