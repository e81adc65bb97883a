#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "evodyn/engine.hpp"
#include "evodyn/payoffs.hpp"
#include "evodyn/rules.hpp"
#include "evodyn/simplex.hpp"

namespace evodyn {

// ---- negative-imaginary frequency test ----

struct NiReport {
  std::vector<double> omega_grid;
  /// Smallest eigenvalue of j(G(jw) - G(jw)^*) at each grid frequency.
  std::vector<double> min_eigenvalues;
  bool passed = true;
  /// First frequency whose smallest eigenvalue falls below -tol.
  std::optional<double> witness_omega;
  /// Largest entrywise gap between the sampled form and -2 k lambda^2 w/(w^2+lambda^2) A.
  double max_closed_form_error = 0.0;
  double tol = 0.0;
};

/// n log-spaced points covering [lo, hi].
std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n);

/// 200 points over [lambda/100, 100 lambda].
std::vector<double> default_omega_grid(double lambda);

/// Evaluates G(s) = k lambda s/(s + lambda) A from its state-space realization
/// on every grid point. Throws InvalidParameter for an empty, unsorted or
/// non-positive grid and NonHermitianForm if the sampled form is not Hermitian
/// within 1e-12.
NiReport ni_frequency_test(const LtiFilter& filter, const std::vector<double>& omega_grid, double tol = 0.0);

// ---- CCW falsification and certification ----

/// Least-squares slope of the recorded running minimum against time over the
/// last `fraction` of the horizon. Zero for records with fewer than two points
/// in the window.
double drift_slope(const TrajectoryRecord& record, double fraction = 0.8);

inline constexpr double kDefaultDriftThreshold = 1e-3;

struct CcwFalsification {
  bool witness = false;
  /// Steepest (most negative) fitted slope over all starts and where it occurred.
  double drift_rate = 0.0;
  std::size_t start_index = 0;
  std::vector<double> slopes;
  /// The trajectory that produced `drift_rate`.
  std::optional<TrajectoryRecord> trajectory;
};

/// Runs one closed-loop simulation per start over [0, T] (early stopping
/// disabled) and reports a witness when some fitted slope is below
/// -drift_threshold. IntegratorFailure from any run is rethrown.
CcwFalsification ccw_falsify(const PayoffMechanism& mech, const RuleSpec& spec,
                             const std::vector<PopulationState>& starts, double T,
                             double drift_threshold = kDefaultDriftThreshold, IntegratorConfig cfg = {});

enum class CcwVerdict { CertifiedByConstruction, Falsified, Inconclusive };

std::string to_string(CcwVerdict v);

/// True when the mechanism is CCW by construction: the base game has a
/// potential and any filter satisfies kA <= 0 with A symmetric.
bool ccw_by_construction(const PayoffMechanism& mech);

struct CcwCertificate {
  CcwVerdict verdict = CcwVerdict::Inconclusive;
  CcwFalsification search;
};

/// The falsifier always runs; a witness overrides everything else.
CcwCertificate certify_ccw(const PayoffMechanism& mech, const RuleSpec& spec,
                           const std::vector<PopulationState>& starts, double T,
                           double drift_threshold = kDefaultDriftThreshold, IntegratorConfig cfg = {});

// ---- convergence ----

inline constexpr double kCorrelationTailTol = 1e-6;

struct ConvergenceVerdict {
  /// ||x_dot||_inf at the last sample.
  double final_speed = 0.0;
  double final_ne_distance = 0.0;
  /// max correlation over the final 10% of the run.
  double correlation_tail = 0.0;
  bool converged = false;
};

/// Throws EmptyTrajectory for a record without samples.
ConvergenceVerdict convergence_verdict(const TrajectoryRecord& record, const NashSet& ne, double speed_tol,
                                       double dist_tol, double correlation_tol = kCorrelationTailTol);

struct BarbalatDiagnostic {
  double integral_of_correlation = 0.0;
  double correlation_tail_max = 0.0;
};

/// Trapezoid integral of the correlation and its maximum over the final 10%
/// of the horizon.
BarbalatDiagnostic barbalat_diagnostic(const TrajectoryRecord& record);

}  // namespace evodyn
