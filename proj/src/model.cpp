#include "snrwall/model.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <utility>

#include "snrwall/rng.hpp"

namespace snrwall {

Snr Snr::from_linear(double value) {
  if (!(value >= 0.0)) {
    throw std::invalid_argument("snr must be nonnegative");
  }
  return Snr(value);
}

Snr Snr::from_db(double value_db) {
  return Snr(std::pow(10.0, value_db / 10.0));
}

double Snr::db() const { return 10.0 * std::log10(linear_); }

void SignalModelParams::validate() const {
  if (oversampling < 1) {
    throw std::invalid_argument("oversampling must be at least 1");
  }
  if (!(symbol_variance >= 0.0)) {
    throw std::invalid_argument("symbol variance must be nonnegative");
  }
  if (receivers < 1) {
    throw std::invalid_argument("receiver count must be at least 1");
  }
  if (smoothing < 0) {
    throw std::invalid_argument("smoothing must be nonnegative");
  }
}

SampleBlock::SampleBlock(Eigen::MatrixXcd samples)
    : samples_(std::move(samples)) {
  if (samples_.rows() < 1 || samples_.cols() < 1) {
    throw std::invalid_argument(
        "sample block needs at least one receiver and one sample");
  }
}

HermitianCovariance HermitianCovariance::from_matrix(const Eigen::MatrixXcd& m,
                                                     CovarianceKind kind) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw std::invalid_argument("covariance matrix must be square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asymmetry = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asymmetry > 1e-12 * scale) {
    throw std::invalid_argument("matrix is not Hermitian within tolerance");
  }
  // Mirror the lower triangle so downstream code sees an exactly Hermitian
  // matrix regardless of roundoff in the input.
  Eigen::MatrixXcd h = m;
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    h(j, j) = cxd(h(j, j).real(), 0.0);
    for (Eigen::Index i = j + 1; i < h.rows(); ++i) {
      h(j, i) = std::conj(h(i, j));
    }
  }
  return HermitianCovariance(std::move(h), kind);
}

Eigen::VectorXcd generate_bpsk_signal(Eigen::Index num_symbols,
                                      const SignalModelParams& params,
                                      std::uint64_t seed) {
  params.validate();
  if (num_symbols < 1) {
    throw std::invalid_argument("symbol count must be at least 1");
  }
  const double amplitude = std::sqrt(params.symbol_variance);
  auto engine = make_engine(seed);
  std::bernoulli_distribution flip(0.5);
  Eigen::VectorXcd out(num_symbols * params.oversampling);
  Eigen::Index pos = 0;
  for (Eigen::Index s = 0; s < num_symbols; ++s) {
    const double symbol = flip(engine) ? amplitude : -amplitude;
    for (int k = 0; k < params.oversampling; ++k) {
      out(pos++) = cxd(symbol, 0.0);
    }
  }
  return out;
}

double signal_autocorrelation(long lag, const SignalModelParams& params) {
  params.validate();
  const long a = std::labs(lag);
  if (a >= params.oversampling) {
    return 0.0;
  }
  return params.symbol_variance *
         (1.0 - static_cast<double>(a) / params.oversampling);
}

VectorSeries build_smoothed_vectors(const SampleBlock& block, int smoothing) {
  if (smoothing < 0) {
    throw std::invalid_argument("smoothing must be nonnegative");
  }
  const Eigen::Index p = block.receivers();
  const Eigen::Index n_total = block.length();
  if (n_total <= smoothing) {
    throw std::invalid_argument(
        "block too short for the requested smoothing depth");
  }
  const Eigen::Index depth = smoothing + 1;
  const Eigen::Index count = n_total - smoothing;
  Eigen::MatrixXcd vectors(p * depth, count);
  for (Eigen::Index n = smoothing; n < n_total; ++n) {
    for (Eigen::Index r = 0; r < p; ++r) {
      for (Eigen::Index q = 0; q < depth; ++q) {
        vectors(r * depth + q, n - smoothing) = block.samples()(r, n - q);
      }
    }
  }
  return VectorSeries{std::move(vectors)};
}

HermitianCovariance statistical_signal_covariance(
    const SignalModelParams& params) {
  params.validate();
  const int depth = params.smoothing + 1;
  const int g = params.fused_dimension();
  Eigen::MatrixXcd m(g, g);
  // Every receiver observes the same waveform, so the entry depends only on
  // the delay difference of the two fused components, not on which
  // receivers they come from.
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const int q1 = i % depth;
      const int q2 = j % depth;
      m(i, j) = cxd(signal_autocorrelation(q1 - q2, params), 0.0);
    }
  }
  return HermitianCovariance::from_matrix(m, CovarianceKind::statistical);
}

Eigen::MatrixXd signal_correlation_matrix(const SignalModelParams& params) {
  SignalModelParams unit = params;
  unit.symbol_variance = 1.0;
  const int depth = unit.smoothing + 1;
  const int g = unit.fused_dimension();
  Eigen::MatrixXd m(g, g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      m(i, j) = signal_autocorrelation(i % depth - j % depth, unit);
    }
  }
  return m;
}

}  // namespace snrwall
