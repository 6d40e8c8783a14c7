#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "snrwall/model.hpp"
#include "snrwall/noise.hpp"

namespace snrwall {

// Everything the closed-form robustness analysis produces for one scenario.
// When `defined` is false the wall fields are not meaningful (reported as
// null in serialized form); validity_snr_cap uses +infinity for "no cap".
struct BoundReport {
  double kappa_max = 0.0;
  double alpha_max = 0.0;
  double validity_snr_cap = 0.0;
  double wall_linear = 0.0;
  double wall_db = 0.0;
  bool defined = false;
};

// Flat JSON record with snake_case keys; undefined wall fields and an
// unbounded validity cap serialize as null.
std::string bound_report_json(const BoundReport& report);

// Worst-case noise-only statistic (1 + rho) / (1 - rho) guaranteed by any
// pair of receivers whose noise correlation modulus reaches rho_max.
// Requires rho_max in [0, 1).
double h0_statistic_lower_bound(double rho_max);

struct ProbePair {
  Eigen::VectorXcd z1;
  Eigen::VectorXcd z2;
};

// Unit probes aligned with the largest off-diagonal entry rho e^{j phi} at
// position (i, k), i < k: z = (e_i +/- e^{-j phi} e_k) / sqrt(2). Their
// quadratic forms against the matrix bracket the extreme eigenvalues.
// Requires dimension >= 2.
ProbePair make_rayleigh_probes(const HermitianCovariance& cov);

struct RayleighBounds {
  double lambda_max_lower = 0.0;
  double lambda_min_upper = 0.0;
};

// Variational bounds from two unit-norm probes: the larger quadratic form
// cannot exceed the top eigenvalue and the smaller cannot undercut the
// bottom one.
RayleighBounds rayleigh_eigen_bounds(const HermitianCovariance& cov,
                                     const Eigen::VectorXcd& z1,
                                     const Eigen::VectorXcd& z2);

struct GershgorinBounds {
  double lambda_max_upper = 0.0;
  double lambda_min_lower = 0.0;
};

// Disc bounds for a Hermitian matrix with equal diagonal entries d: all
// eigenvalues lie in [d - R, d + R] where R is the largest off-diagonal
// absolute row sum.
GershgorinBounds gershgorin_bounds(const HermitianCovariance& cov);

// Largest off-diagonal absolute row sum of rho_h1 + snr * rho_s, the
// quantity the validity condition compares against 1 + snr.
double max_mixed_row_sum(const CorrelationModel& corr, Snr snr);

// Whether the Gershgorin lower disc edge stays positive: 1 + snr must
// strictly exceed the largest mixed row sum.
bool validity_condition(const CorrelationModel& corr, Snr snr);

// Upper bound on the statistic under the signal hypothesis,
// (1 + snr + m) / (1 + snr - m) with m the largest mixed row sum. Empty when
// the validity condition fails and the ratio stops being meaningful.
std::optional<double> h1_statistic_upper_bound(const CorrelationModel& corr,
                                               Snr snr);

// Worst-case signal correlation row sums for the canonical scenarios; these
// feed snr_wall_lower_bound as kappa_max.
double kappa_max_receiver(int receivers);
double kappa_max_time(int smoothing, int oversampling);
double kappa_max_combined(int receivers, double kappa_time);

// The wall itself: detection is impossible below
// (alpha_max - 1) / (1 + kappa_max + alpha_max (kappa_max - 1)).
// Requires alpha_max > 1; kappa_max < 1 yields defined = false.
BoundReport snr_wall_lower_bound(double alpha_max, double kappa_max);

// True when the guaranteed noise-only statistic reaches the best possible
// signal-hypothesis statistic at this snr, i.e. no threshold separates the
// hypotheses. Throws std::domain_error if the validity condition fails.
bool nonrobustness_inequality(const CorrelationModel& corr, Snr snr,
                              double rho_max_h0);

}  // namespace snrwall
