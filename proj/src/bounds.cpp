#include "snrwall/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace snrwall {

std::string bound_report_json(const BoundReport& report) {
  nlohmann::json j;
  j["kappa_max"] = report.kappa_max;
  j["alpha_max"] = std::isfinite(report.alpha_max)
                       ? nlohmann::json(report.alpha_max)
                       : nlohmann::json(nullptr);
  j["validity_snr_cap"] = std::isfinite(report.validity_snr_cap)
                              ? nlohmann::json(report.validity_snr_cap)
                              : nlohmann::json(nullptr);
  if (report.defined) {
    j["wall_linear"] = report.wall_linear;
    j["wall_db"] = report.wall_db;
  } else {
    j["wall_linear"] = nullptr;
    j["wall_db"] = nullptr;
  }
  j["defined"] = report.defined;
  return j.dump(2);
}

double h0_statistic_lower_bound(double rho_max) {
  if (!(rho_max >= 0.0) || !(rho_max < 1.0)) {
    throw std::invalid_argument("rho_max must lie in [0, 1)");
  }
  return (1.0 + rho_max) / (1.0 - rho_max);
}

ProbePair make_rayleigh_probes(const HermitianCovariance& cov) {
  const auto& m = cov.matrix();
  const Eigen::Index g = m.rows();
  if (g < 2) {
    throw std::invalid_argument("probes need dimension at least 2");
  }
  Eigen::Index bi = 0;
  Eigen::Index bk = 1;
  double best = -1.0;
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index k = i + 1; k < g; ++k) {
      const double modulus = std::abs(m(i, k));
      if (modulus > best) {
        best = modulus;
        bi = i;
        bk = k;
      }
    }
  }
  const double phi = best > 0.0 ? std::arg(m(bi, bk)) : 0.0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  ProbePair pair;
  pair.z1 = Eigen::VectorXcd::Zero(g);
  pair.z2 = Eigen::VectorXcd::Zero(g);
  pair.z1(bi) = cxd(inv_sqrt2, 0.0);
  pair.z2(bi) = cxd(inv_sqrt2, 0.0);
  // The counter-rotation e^{-j phi} lines the probe up with the phase of the
  // dominant off-diagonal entry, so the cross terms add constructively in z1
  // and destructively in z2.
  pair.z1(bk) = std::polar(inv_sqrt2, -phi);
  pair.z2(bk) = -std::polar(inv_sqrt2, -phi);
  return pair;
}

RayleighBounds rayleigh_eigen_bounds(const HermitianCovariance& cov,
                                     const Eigen::VectorXcd& z1,
                                     const Eigen::VectorXcd& z2) {
  const Eigen::Index g = cov.dimension();
  if (z1.size() != g || z2.size() != g) {
    throw std::invalid_argument("probe dimension must match the matrix");
  }
  if (std::abs(z1.norm() - 1.0) > 1e-9 || std::abs(z2.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("probes must have unit norm");
  }
  const double q1 = z1.dot(cov.matrix() * z1).real();
  const double q2 = z2.dot(cov.matrix() * z2).real();
  RayleighBounds bounds;
  bounds.lambda_max_lower = std::max(q1, q2);
  bounds.lambda_min_upper = std::min(q1, q2);
  return bounds;
}

GershgorinBounds gershgorin_bounds(const HermitianCovariance& cov) {
  const auto& m = cov.matrix();
  const Eigen::Index g = m.rows();
  const double center = m(0, 0).real();
  for (Eigen::Index i = 1; i < g; ++i) {
    if (std::abs(m(i, i).real() - center) >
        1e-12 * std::max(1.0, std::abs(center))) {
      throw std::invalid_argument(
          "disc bounds require equal diagonal entries");
    }
  }
  double radius = 0.0;
  for (Eigen::Index i = 0; i < g; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < g; ++j) {
      if (j != i) {
        row += std::abs(m(i, j));
      }
    }
    radius = std::max(radius, row);
  }
  GershgorinBounds bounds;
  bounds.lambda_max_upper = center + radius;
  bounds.lambda_min_lower = center - radius;
  return bounds;
}

double max_mixed_row_sum(const CorrelationModel& corr, Snr snr) {
  corr.validate();
  const Eigen::Index g = corr.signal_corr.rows();
  const double s = snr.linear();
  double best = 0.0;
  for (Eigen::Index i = 0; i < g; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < g; ++j) {
      if (j != i) {
        row += std::abs(corr.noise_corr_h1(i, j) + s * corr.signal_corr(i, j));
      }
    }
    best = std::max(best, row);
  }
  return best;
}

bool validity_condition(const CorrelationModel& corr, Snr snr) {
  return 1.0 + snr.linear() > max_mixed_row_sum(corr, snr);
}

std::optional<double> h1_statistic_upper_bound(const CorrelationModel& corr,
                                               Snr snr) {
  const double m = max_mixed_row_sum(corr, snr);
  const double center = 1.0 + snr.linear();
  if (!(center > m)) {
    return std::nullopt;
  }
  return (center + m) / (center - m);
}

double kappa_max_receiver(int receivers) {
  if (receivers < 1) {
    throw std::invalid_argument("receiver count must be at least 1");
  }
  return static_cast<double>(receivers - 1);
}

double kappa_max_time(int smoothing, int oversampling) {
  if (smoothing < 0) {
    throw std::invalid_argument("smoothing must be nonnegative");
  }
  if (oversampling < 1) {
    throw std::invalid_argument("oversampling must be at least 1");
  }
  if (smoothing == 0) {
    return 0.0;
  }
  // The worst row of the triangular lag profile is the middle one. Once the
  // smoothing window outgrows the symbol span the row sum saturates at the
  // full two-sided triangle mass, M - 1.
  const int half = (smoothing + 1) / 2;
  if (half >= oversampling) {
    return static_cast<double>(oversampling - 1);
  }
  const double q = smoothing;
  const double m = oversampling;
  if (smoothing % 2 == 0) {
    return q - (q * q + 2.0 * q) / (4.0 * m);
  }
  return q - (q + 1.0) * (q + 1.0) / (4.0 * m);
}

double kappa_max_combined(int receivers, double kappa_time) {
  if (receivers < 1) {
    throw std::invalid_argument("receiver count must be at least 1");
  }
  if (!(kappa_time >= 0.0)) {
    throw std::invalid_argument("kappa_time must be nonnegative");
  }
  // Each receiver contributes its own delay row sum, plus p - 1 fully
  // correlated lag-0 partners and their delay rows across receivers.
  return static_cast<double>(receivers - 1) +
         static_cast<double>(receivers) * kappa_time;
}

BoundReport snr_wall_lower_bound(double alpha_max, double kappa_max) {
  if (!(alpha_max > 1.0)) {
    throw std::invalid_argument("alpha_max must exceed 1");
  }
  if (!(kappa_max >= 0.0)) {
    throw std::invalid_argument("kappa_max must be nonnegative");
  }
  BoundReport report;
  report.kappa_max = kappa_max;
  report.alpha_max = alpha_max;
  report.validity_snr_cap =
      kappa_max > 1.0 ? 1.0 / (kappa_max - 1.0)
                      : std::numeric_limits<double>::infinity();
  if (kappa_max < 1.0) {
    // Too little signal correlation: the achievable statistic under the
    // signal hypothesis never reaches the guaranteed noise-only level.
    report.wall_linear = std::numeric_limits<double>::quiet_NaN();
    report.wall_db = std::numeric_limits<double>::quiet_NaN();
    report.defined = false;
    return report;
  }
  report.wall_linear = (alpha_max - 1.0) /
                       (1.0 + kappa_max + alpha_max * (kappa_max - 1.0));
  report.wall_db = 10.0 * std::log10(report.wall_linear);
  report.defined = report.wall_linear > 0.0 &&
                   report.wall_linear < report.validity_snr_cap;
  return report;
}

bool nonrobustness_inequality(const CorrelationModel& corr, Snr snr,
                              double rho_max_h0) {
  if (!(rho_max_h0 > 0.0) || !(rho_max_h0 < 1.0)) {
    throw std::invalid_argument("rho_max must lie in (0, 1)");
  }
  const auto upper = h1_statistic_upper_bound(corr, snr);
  if (!upper) {
    throw std::domain_error(
        "validity condition fails at this snr; the comparison is undefined");
  }
  return *upper <= h0_statistic_lower_bound(rho_max_h0);
}

}  // namespace snrwall
