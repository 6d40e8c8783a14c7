#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace snrwall {

using cxd = std::complex<double>;

// Signal-to-noise ratio carried in linear form, convertible to and from dB.
class Snr {
 public:
  static Snr from_linear(double value);
  static Snr from_db(double value_db);

  double linear() const { return linear_; }
  double db() const;

 private:
  explicit Snr(double linear) : linear_(linear) {}
  double linear_ = 0.0;
};

// Primary-user model: BPSK symbols of variance sigma_s^2, each held for
// `oversampling` samples, observed by `receivers` synchronized antennas and
// fused with `smoothing` extra delayed copies per antenna.
struct SignalModelParams {
  int oversampling = 1;         // samples per symbol (M >= 1)
  double symbol_variance = 1.0; // sigma_s^2 >= 0
  int receivers = 1;            // p >= 1
  int smoothing = 0;            // Q >= 0

  // Dimension of one fused observation vector: p * (Q + 1).
  int fused_dimension() const { return receivers * (smoothing + 1); }

  void validate() const;  // throws std::invalid_argument on a bad field
};

// One block of raw receiver data, one row per receiver, one column per
// sampling instant. All receivers cover the same instants by construction.
class SampleBlock {
 public:
  explicit SampleBlock(Eigen::MatrixXcd samples);

  Eigen::Index receivers() const { return samples_.rows(); }
  Eigen::Index length() const { return samples_.cols(); }

  const Eigen::MatrixXcd& samples() const { return samples_; }
  Eigen::MatrixXcd& samples() { return samples_; }

 private:
  Eigen::MatrixXcd samples_;
};

// A run of fused observation vectors, one per column. Entries are grouped
// receiver by receiver: rows r*(Q+1) .. r*(Q+1)+Q hold receiver r at delays
// 0 .. Q.
struct VectorSeries {
  Eigen::MatrixXcd vectors;

  Eigen::Index dimension() const { return vectors.rows(); }
  Eigen::Index count() const { return vectors.cols(); }
};

enum class CovarianceKind { statistical, sample };

// Square complex matrix checked and then stored in exactly Hermitian form:
// the factory rejects input whose asymmetry exceeds a small relative
// tolerance and mirrors the lower triangle so later consumers never see
// roundoff-level asymmetry.
class HermitianCovariance {
 public:
  static HermitianCovariance from_matrix(const Eigen::MatrixXcd& m,
                                         CovarianceKind kind);

  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  CovarianceKind kind() const { return kind_; }
  Eigen::Index dimension() const { return matrix_.rows(); }

 private:
  HermitianCovariance(Eigen::MatrixXcd m, CovarianceKind kind)
      : matrix_(std::move(m)), kind_(kind) {}

  Eigen::MatrixXcd matrix_;
  CovarianceKind kind_;
};

// Draws `num_symbols` random +/-sqrt(sigma_s^2) symbols and repeats each one
// `oversampling` times. Returns a sequence of length num_symbols * M whose
// first sample sits on a symbol boundary.
Eigen::VectorXcd generate_bpsk_signal(Eigen::Index num_symbols,
                                      const SignalModelParams& params,
                                      std::uint64_t seed);

// Autocorrelation of the oversampled symbol stream at integer lag k:
// sigma_s^2 * (1 - |k|/M) inside the symbol span, zero outside.
double signal_autocorrelation(long lag, const SignalModelParams& params);

// Stacks delayed copies of each receiver row into fused vectors. A block of
// length N yields N - Q vectors (the first Q instants lack enough history).
VectorSeries build_smoothed_vectors(const SampleBlock& block, int smoothing);

// Model covariance of the fused signal component. Because all receivers see
// the same waveform, every receiver pair shares the same lag profile, so the
// matrix is the all-ones receiver pattern combined with the delay-lag
// Toeplitz profile.
HermitianCovariance statistical_signal_covariance(
    const SignalModelParams& params);

// Unit-power version of the above: the signal correlation matrix rho^s with
// ones on the diagonal. Useful on its own for bound computations.
Eigen::MatrixXd signal_correlation_matrix(const SignalModelParams& params);

}  // namespace snrwall
