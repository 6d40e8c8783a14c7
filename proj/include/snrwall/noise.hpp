#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "snrwall/model.hpp"

namespace snrwall {

// Thrown when a requested matrix factorization does not exist, e.g. a
// Cholesky factor of a target covariance that is not positive definite.
class factorization_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NoiseKind { white, ar1, receiver_correlated };

// Descriptor for the noise seen under the noise-only hypothesis. Three
// shapes are supported: white (flat), a first-order autoregressive process
// (temporally colored, per-receiver independent), and receiver-correlated
// noise that is white in time but colored across antennas.
class NoiseModel {
 public:
  static NoiseModel white(double noise_variance);
  static NoiseModel ar1(double coefficient, double noise_variance);
  static NoiseModel receiver_correlated(HermitianCovariance target);

  NoiseKind kind() const { return kind_; }
  double noise_variance() const { return noise_variance_; }

  // AR(1) accessors; invalid on the other kinds.
  double ar_coefficient() const;
  double innovation_variance() const;  // sigma^2 * (1 - a^2)

  // Receiver-correlation accessor; invalid on the other kinds.
  const HermitianCovariance& target() const;

  // Model covariance of fused vectors built from this noise with the given
  // receiver count and smoothing. white: scaled identity. ar1: block
  // diagonal with one a^|i-j| Toeplitz block per receiver. correlated: the
  // receiver target spread over delay-aligned entries only.
  HermitianCovariance statistical_covariance(int receivers,
                                             int smoothing) const;

 private:
  NoiseModel(NoiseKind kind, double variance)
      : kind_(kind), noise_variance_(variance) {}

  NoiseKind kind_;
  double noise_variance_ = 1.0;
  double ar_coefficient_ = 0.0;
  std::optional<HermitianCovariance> target_;  // receiver_correlated only
};

// Correlation triple a detection scenario is judged against: signal
// correlation rho^s, nominal noise correlation under the signal hypothesis,
// and the (possibly different) noise correlation under the noise-only
// hypothesis. All three share one dimension, carry unit diagonals, and stay
// Hermitian. Noise off-diagonals must have modulus strictly below one; the
// signal correlation may reach one (fully correlated receivers).
struct CorrelationModel {
  Eigen::MatrixXd signal_corr;
  Eigen::MatrixXcd noise_corr_h1;
  Eigen::MatrixXcd noise_corr_h0;

  void validate() const;  // throws std::invalid_argument on violation

  // Largest off-diagonal modulus of the noise-only correlation matrix.
  double max_h0_noise_correlation() const;
};

// Multi-antenna scenario with flat fusion (no smoothing): fully correlated
// signal across receivers, white nominal noise, equicorrelated noise with
// coefficient rho_h0 under the noise-only hypothesis.
CorrelationModel receiver_correlation_model(int receivers, double rho_h0);

// Single-antenna scenario smoothed over `smoothing` delays: triangular
// signal lag profile from the oversampling factor, white nominal noise,
// AR(1) noise with the given coefficient under the noise-only hypothesis.
CorrelationModel time_correlation_model(int smoothing, int oversampling,
                                        double ar_coefficient);

// Circularly symmetric complex white noise, total variance sigma^2 per
// sample (sigma^2/2 per quadrature).
Eigen::VectorXcd white_noise(Eigen::Index length, double noise_variance,
                             std::uint64_t seed);

// AR(1) recursion x(n) = a x(n-1) + e(n) started from its stationary
// distribution, so every sample has variance sigma^2 exactly.
Eigen::VectorXcd ar1_noise(Eigen::Index length, double coefficient,
                           double noise_variance, std::uint64_t seed);

// Stationary covariance of `smoothing`+1 consecutive AR(1) samples:
// sigma^2 * a^|i-j|.
HermitianCovariance ar1_covariance(int smoothing, double coefficient,
                                   double noise_variance);

// Receiver-correlated noise: independent unit-variance white vectors pushed
// through the Cholesky factor of the target covariance, one fused vector per
// instant. Throws factorization_error when the target is not positive
// definite.
SampleBlock cholesky_colored_noise(const HermitianCovariance& target,
                                   Eigen::Index length, std::uint64_t seed);

// Spectral-domain synthesis: draw a white complex vector on the frequency
// grid, weight it by the square root of the target power spectrum, transform
// back to the time domain, and rescale so the realized average power is
// exactly noise_variance. The autocorrelation overload derives the spectrum
// from a symmetric lag profile r[0..L-1] embedded circularly (requires
// 2*(L-1) < length); the model overload uses the closed-form AR(1) spectrum.
Eigen::VectorXcd psd_shaped_noise(const Eigen::VectorXd& autocorrelation,
                                  Eigen::Index length, double noise_variance,
                                  std::uint64_t seed);
Eigen::VectorXcd psd_shaped_noise(const NoiseModel& ar1_model,
                                  Eigen::Index length, std::uint64_t seed);

// AR(1) power spectrum sampled on a uniform grid of `grid_size` frequencies:
// innovation_variance / |1 - a e^{-j 2 pi k / grid_size}|^2.
Eigen::VectorXd psd_of_ar1(double coefficient, Eigen::Index grid_size,
                           double innovation_variance);

}  // namespace snrwall
