#include "snrwall/noise.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "snrwall/rng.hpp"

namespace snrwall {

namespace {

// FFTW planning is not thread-safe, so plans are created once per
// (length, direction) under a lock and reused via the new-array execute
// interface, which is safe to call concurrently.
fftw_plan plan_for(Eigen::Index n, int sign) {
  static std::mutex mutex;
  static std::map<std::pair<Eigen::Index, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(n, sign);
  if (auto it = cache.find(key); it != cache.end()) {
    return it->second;
  }
  std::vector<cxd> in(static_cast<std::size_t>(n));
  std::vector<cxd> out(static_cast<std::size_t>(n));
  fftw_plan plan = fftw_plan_dft_1d(
      static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
      reinterpret_cast<fftw_complex*>(out.data()), sign,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, plan);
  return plan;
}

// Unnormalized out-of-place DFT of length n.
void dft(const cxd* in, cxd* out, Eigen::Index n, int sign) {
  fftw_plan plan = plan_for(n, sign);
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<cxd*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

// Core of the spectral synthesis: white frequency-domain draws weighted by
// sqrt(psd), transformed to the time domain, then rescaled so the realized
// average power equals noise_variance exactly.
Eigen::VectorXcd shape_spectrum(const Eigen::VectorXd& psd,
                                double noise_variance, std::uint64_t seed) {
  const Eigen::Index n = psd.size();
  if (n < 1) {
    throw std::invalid_argument("target spectrum must be non-empty");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("noise variance must be positive");
  }
  const double top = psd.maxCoeff();
  if (!(top > 0.0)) {
    throw std::invalid_argument("target spectrum is identically zero");
  }
  if (psd.minCoeff() < -1e-9 * top) {
    throw std::invalid_argument(
        "target spectrum has negative entries beyond tolerance");
  }
  auto engine = make_engine(seed);
  std::normal_distribution<double> quadrature(0.0, std::sqrt(0.5));
  Eigen::VectorXcd freq(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double re = quadrature(engine);
    const double im = quadrature(engine);
    freq(k) = std::sqrt(std::max(psd(k), 0.0)) * cxd(re, im);
  }
  Eigen::VectorXcd series(n);
  dft(freq.data(), series.data(), n, FFTW_BACKWARD);
  const double energy = series.squaredNorm();
  if (!(energy > 0.0)) {
    throw std::runtime_error("spectral synthesis produced a zero realization");
  }
  series *= std::sqrt(noise_variance * static_cast<double>(n) / energy);
  return series;
}

}  // namespace

NoiseModel NoiseModel::white(double noise_variance) {
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("noise variance must be positive");
  }
  return NoiseModel(NoiseKind::white, noise_variance);
}

NoiseModel NoiseModel::ar1(double coefficient, double noise_variance) {
  if (!(std::abs(coefficient) < 1.0)) {
    throw std::invalid_argument("ar1 coefficient must satisfy |a| < 1");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("noise variance must be positive");
  }
  NoiseModel m(NoiseKind::ar1, noise_variance);
  m.ar_coefficient_ = coefficient;
  return m;
}

NoiseModel NoiseModel::receiver_correlated(HermitianCovariance target) {
  const auto& t = target.matrix();
  const double d0 = t(0, 0).real();
  if (!(d0 > 0.0)) {
    throw std::invalid_argument("target covariance needs a positive diagonal");
  }
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    if (std::abs(t(i, i).real() - d0) > 1e-12 * std::max(1.0, d0)) {
      throw std::invalid_argument(
          "target covariance needs equal diagonal entries");
    }
  }
  NoiseModel m(NoiseKind::receiver_correlated, d0);
  m.target_ = std::move(target);
  return m;
}

double NoiseModel::ar_coefficient() const {
  if (kind_ != NoiseKind::ar1) {
    throw std::logic_error("ar_coefficient only applies to ar1 models");
  }
  return ar_coefficient_;
}

double NoiseModel::innovation_variance() const {
  if (kind_ != NoiseKind::ar1) {
    throw std::logic_error("innovation_variance only applies to ar1 models");
  }
  return noise_variance_ * (1.0 - ar_coefficient_ * ar_coefficient_);
}

const HermitianCovariance& NoiseModel::target() const {
  if (kind_ != NoiseKind::receiver_correlated || !target_) {
    throw std::logic_error("target only applies to receiver_correlated models");
  }
  return *target_;
}

HermitianCovariance NoiseModel::statistical_covariance(int receivers,
                                                       int smoothing) const {
  if (receivers < 1 || smoothing < 0) {
    throw std::invalid_argument("bad fused-vector geometry");
  }
  const int depth = smoothing + 1;
  const int g = receivers * depth;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(g, g);
  switch (kind_) {
    case NoiseKind::white:
      m = noise_variance_ * Eigen::MatrixXcd::Identity(g, g);
      break;
    case NoiseKind::ar1: {
      // One Toeplitz block per receiver; receivers stay independent.
      for (int r = 0; r < receivers; ++r) {
        for (int q1 = 0; q1 < depth; ++q1) {
          for (int q2 = 0; q2 < depth; ++q2) {
            m(r * depth + q1, r * depth + q2) =
                noise_variance_ *
                std::pow(ar_coefficient_, std::abs(q1 - q2));
          }
        }
      }
      break;
    }
    case NoiseKind::receiver_correlated: {
      const auto& t = target().matrix();
      if (t.rows() != receivers) {
        throw std::invalid_argument(
            "target covariance dimension must match the receiver count");
      }
      // White in time: only delay-aligned entries are populated.
      for (int r = 0; r < receivers; ++r) {
        for (int s = 0; s < receivers; ++s) {
          for (int q = 0; q < depth; ++q) {
            m(r * depth + q, s * depth + q) = t(r, s);
          }
        }
      }
      break;
    }
  }
  return HermitianCovariance::from_matrix(m, CovarianceKind::statistical);
}

void CorrelationModel::validate() const {
  const Eigen::Index g = signal_corr.rows();
  if (g < 1 || signal_corr.cols() != g || noise_corr_h1.rows() != g ||
      noise_corr_h1.cols() != g || noise_corr_h0.rows() != g ||
      noise_corr_h0.cols() != g) {
    throw std::invalid_argument(
        "correlation matrices must be square and share one dimension");
  }
  if ((signal_corr - signal_corr.transpose()).cwiseAbs().maxCoeff() >
      1e-12) {
    throw std::invalid_argument("signal correlation must be symmetric");
  }
  auto check_noise = [g](const Eigen::MatrixXcd& m, const char* label) {
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument(std::string(label) +
                                  " correlation must be Hermitian");
    }
    for (Eigen::Index i = 0; i < g; ++i) {
      if (std::abs(m(i, i) - cxd(1.0, 0.0)) > 1e-12) {
        throw std::invalid_argument(std::string(label) +
                                    " correlation needs a unit diagonal");
      }
      for (Eigen::Index j = 0; j < g; ++j) {
        if (i != j && !(std::abs(m(i, j)) < 1.0)) {
          throw std::invalid_argument(
              std::string(label) +
              " correlation off-diagonals must have modulus below one");
        }
      }
    }
  };
  check_noise(noise_corr_h1, "nominal noise");
  check_noise(noise_corr_h0, "noise-only");
  for (Eigen::Index i = 0; i < g; ++i) {
    if (std::abs(signal_corr(i, i) - 1.0) > 1e-12) {
      throw std::invalid_argument("signal correlation needs a unit diagonal");
    }
    for (Eigen::Index j = 0; j < g; ++j) {
      if (i != j && std::abs(signal_corr(i, j)) > 1.0) {
        throw std::invalid_argument(
            "signal correlation entries cannot exceed one in modulus");
      }
    }
  }
}

double CorrelationModel::max_h0_noise_correlation() const {
  double best = 0.0;
  for (Eigen::Index i = 0; i < noise_corr_h0.rows(); ++i) {
    for (Eigen::Index j = 0; j < noise_corr_h0.cols(); ++j) {
      if (i != j) {
        best = std::max(best, std::abs(noise_corr_h0(i, j)));
      }
    }
  }
  return best;
}

CorrelationModel receiver_correlation_model(int receivers, double rho_h0) {
  if (receivers < 1) {
    throw std::invalid_argument("receiver count must be at least 1");
  }
  if (!(std::abs(rho_h0) < 1.0)) {
    throw std::invalid_argument("rho_h0 must have modulus below one");
  }
  CorrelationModel model;
  model.signal_corr = Eigen::MatrixXd::Ones(receivers, receivers);
  model.noise_corr_h1 = Eigen::MatrixXcd::Identity(receivers, receivers);
  Eigen::MatrixXcd h0 =
      Eigen::MatrixXcd::Constant(receivers, receivers, cxd(rho_h0, 0.0));
  h0.diagonal().setConstant(cxd(1.0, 0.0));
  model.noise_corr_h0 = std::move(h0);
  model.validate();
  return model;
}

CorrelationModel time_correlation_model(int smoothing, int oversampling,
                                        double ar_coefficient) {
  if (smoothing < 0 || oversampling < 1) {
    throw std::invalid_argument("bad smoothing or oversampling");
  }
  if (!(std::abs(ar_coefficient) < 1.0)) {
    throw std::invalid_argument("ar1 coefficient must satisfy |a| < 1");
  }
  const int g = smoothing + 1;
  SignalModelParams params;
  params.oversampling = oversampling;
  params.smoothing = smoothing;
  CorrelationModel model;
  model.signal_corr = signal_correlation_matrix(params);
  model.noise_corr_h1 = Eigen::MatrixXcd::Identity(g, g);
  Eigen::MatrixXcd h0(g, g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      h0(i, j) = cxd(std::pow(ar_coefficient, std::abs(i - j)), 0.0);
    }
  }
  model.noise_corr_h0 = std::move(h0);
  model.validate();
  return model;
}

Eigen::VectorXcd white_noise(Eigen::Index length, double noise_variance,
                             std::uint64_t seed) {
  if (length < 1) {
    throw std::invalid_argument("length must be at least 1");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("noise variance must be positive");
  }
  auto engine = make_engine(seed);
  std::normal_distribution<double> quadrature(0.0,
                                              std::sqrt(noise_variance / 2.0));
  Eigen::VectorXcd out(length);
  for (Eigen::Index n = 0; n < length; ++n) {
    const double re = quadrature(engine);
    const double im = quadrature(engine);
    out(n) = cxd(re, im);
  }
  return out;
}

Eigen::VectorXcd ar1_noise(Eigen::Index length, double coefficient,
                           double noise_variance, std::uint64_t seed) {
  if (length < 1) {
    throw std::invalid_argument("length must be at least 1");
  }
  if (!(std::abs(coefficient) < 1.0)) {
    throw std::invalid_argument("ar1 coefficient must satisfy |a| < 1");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("noise variance must be positive");
  }
  auto engine = make_engine(seed);
  // Stationary start: the first sample already carries the full variance,
  // later samples keep it because the innovation variance is shrunk by
  // (1 - a^2).
  std::normal_distribution<double> initial(0.0, std::sqrt(noise_variance / 2.0));
  const double innovation_variance =
      noise_variance * (1.0 - coefficient * coefficient);
  std::normal_distribution<double> innovation(
      0.0, std::sqrt(innovation_variance / 2.0));
  Eigen::VectorXcd out(length);
  out(0) = cxd(initial(engine), initial(engine));
  for (Eigen::Index n = 1; n < length; ++n) {
    const double re = innovation(engine);
    const double im = innovation(engine);
    out(n) = coefficient * out(n - 1) + cxd(re, im);
  }
  return out;
}

HermitianCovariance ar1_covariance(int smoothing, double coefficient,
                                   double noise_variance) {
  if (smoothing < 0) {
    throw std::invalid_argument("smoothing must be nonnegative");
  }
  if (!(std::abs(coefficient) < 1.0)) {
    throw std::invalid_argument("ar1 coefficient must satisfy |a| < 1");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("noise variance must be positive");
  }
  const int g = smoothing + 1;
  // Iterated products rather than pow() keep signs exact for negative a.
  std::vector<double> powers(static_cast<std::size_t>(g));
  powers[0] = 1.0;
  for (int k = 1; k < g; ++k) {
    powers[static_cast<std::size_t>(k)] =
        powers[static_cast<std::size_t>(k - 1)] * coefficient;
  }
  Eigen::MatrixXcd m(g, g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      m(i, j) = cxd(
          noise_variance * powers[static_cast<std::size_t>(std::abs(i - j))],
          0.0);
    }
  }
  return HermitianCovariance::from_matrix(m, CovarianceKind::statistical);
}

SampleBlock cholesky_colored_noise(const HermitianCovariance& target,
                                   Eigen::Index length, std::uint64_t seed) {
  if (length < 1) {
    throw std::invalid_argument("length must be at least 1");
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(target.matrix());
  if (llt.info() != Eigen::Success) {
    throw factorization_error(
        "target covariance is not positive definite; Cholesky factor does "
        "not exist");
  }
  const Eigen::MatrixXcd factor = llt.matrixL();
  const Eigen::Index p = target.dimension();
  auto engine = make_engine(seed);
  std::normal_distribution<double> quadrature(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd white(p, length);
  for (Eigen::Index n = 0; n < length; ++n) {
    for (Eigen::Index r = 0; r < p; ++r) {
      const double re = quadrature(engine);
      const double im = quadrature(engine);
      white(r, n) = cxd(re, im);
    }
  }
  return SampleBlock(factor * white);
}

Eigen::VectorXcd psd_shaped_noise(const Eigen::VectorXd& autocorrelation,
                                  Eigen::Index length, double noise_variance,
                                  std::uint64_t seed) {
  const Eigen::Index support = autocorrelation.size();
  if (support < 1) {
    throw std::invalid_argument("autocorrelation must be non-empty");
  }
  if (length < 1) {
    throw std::invalid_argument("length must be at least 1");
  }
  if (support > 1 && 2 * (support - 1) >= length) {
    throw std::invalid_argument(
        "autocorrelation support too long for the window; need "
        "2 * (support - 1) < length");
  }
  // Symmetric circular embedding of the lag profile; its DFT is real up to
  // roundoff, and that real part is the target spectrum.
  Eigen::VectorXcd circular = Eigen::VectorXcd::Zero(length);
  circular(0) = cxd(autocorrelation(0), 0.0);
  for (Eigen::Index k = 1; k < support; ++k) {
    circular(k) = cxd(autocorrelation(k), 0.0);
    circular(length - k) = cxd(autocorrelation(k), 0.0);
  }
  Eigen::VectorXcd spectrum(length);
  dft(circular.data(), spectrum.data(), length, FFTW_FORWARD);
  const Eigen::VectorXd psd = spectrum.real();
  return shape_spectrum(psd, noise_variance, seed);
}

Eigen::VectorXcd psd_shaped_noise(const NoiseModel& ar1_model,
                                  Eigen::Index length, std::uint64_t seed) {
  if (ar1_model.kind() != NoiseKind::ar1) {
    throw std::invalid_argument(
        "spectral synthesis from a model requires an ar1 model");
  }
  const Eigen::VectorXd psd = psd_of_ar1(ar1_model.ar_coefficient(), length,
                                         ar1_model.innovation_variance());
  return shape_spectrum(psd, ar1_model.noise_variance(), seed);
}

Eigen::VectorXd psd_of_ar1(double coefficient, Eigen::Index grid_size,
                           double innovation_variance) {
  if (!(std::abs(coefficient) < 1.0)) {
    throw std::invalid_argument("ar1 coefficient must satisfy |a| < 1");
  }
  if (grid_size < 1) {
    throw std::invalid_argument("grid size must be at least 1");
  }
  if (!(innovation_variance > 0.0)) {
    throw std::invalid_argument("innovation variance must be positive");
  }
  Eigen::VectorXd psd(grid_size);
  for (Eigen::Index k = 0; k < grid_size; ++k) {
    const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(grid_size);
    psd(k) = innovation_variance /
             (1.0 - 2.0 * coefficient * std::cos(omega) +
              coefficient * coefficient);
  }
  return psd;
}

}  // namespace snrwall
