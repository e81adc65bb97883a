#include "evodyn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "evodyn/errors.hpp"

namespace evodyn {

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw InvalidParameter("log grid needs 0 < lo <= hi and n > 0");
  std::vector<double> grid(n);
  if (n == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log10(lo);
  const double step = (std::log10(hi) - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = std::pow(10.0, a + step * static_cast<double>(i));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_omega_grid(double lambda) { return log_spaced_grid(lambda / 100.0, 100.0 * lambda, 200); }

NiReport ni_frequency_test(const LtiFilter& filter, const std::vector<double>& omega_grid, double tol) {
  using CMatrix = Eigen::MatrixXcd;
  using cd = std::complex<double>;
  if (omega_grid.empty()) throw InvalidParameter("frequency grid is empty");
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    if (!(omega_grid[i] > 0.0) || (i > 0 && !(omega_grid[i] > omega_grid[i - 1]))) {
      throw InvalidParameter("frequency grid must be positive and strictly increasing");
    }
  }
  if (!(tol >= 0.0)) throw InvalidParameter("NI tolerance must be nonnegative");

  const double lam = filter.lambda;
  const double k = filter.k;
  const Eigen::Index n = filter.A.rows();
  const Matrix I = Matrix::Identity(n, n);
  // x_dot = Am x + B u, y = C x + D u with G(s) = D + C (sI - Am)^{-1} B.
  const Matrix Am = -lam * I;
  const Matrix B = lam * filter.A;
  const Matrix C = -k * lam * I;
  const Matrix D = k * lam * filter.A;

  NiReport report;
  report.omega_grid = omega_grid;
  report.tol = tol;
  report.min_eigenvalues.reserve(omega_grid.size());
  const cd j(0.0, 1.0);
  for (double w : omega_grid) {
    const CMatrix resolvent = (j * w * I.cast<cd>() - Am.cast<cd>()).partialPivLu().solve(B.cast<cd>());
    const CMatrix G = D.cast<cd>() + C.cast<cd>() * resolvent;
    const CMatrix M = j * (G - G.adjoint());

    const double scale = 1.0 + M.cwiseAbs().maxCoeff();
    if ((M - M.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      std::ostringstream os;
      os << "NI form is not Hermitian at omega = " << w;
      throw NonHermitianForm(os.str());
    }
    const Matrix closed = (-2.0 * k * lam * lam * w / (w * w + lam * lam)) * filter.A;
    report.max_closed_form_error =
        std::max(report.max_closed_form_error, (M - closed.cast<cd>()).cwiseAbs().maxCoeff());

    double min_eig = 0.0;
    if (n > 0) {
      const CMatrix H = 0.5 * (M + M.adjoint());
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(H, Eigen::EigenvaluesOnly);
      min_eig = eig.eigenvalues().minCoeff();
    }
    report.min_eigenvalues.push_back(min_eig);
    if (min_eig < -tol && report.passed) {
      report.passed = false;
      report.witness_omega = w;
    }
  }
  return report;
}

double drift_slope(const TrajectoryRecord& record, double fraction) {
  if (record.size() < 2) return 0.0;
  const double t_end = record.times.back();
  const double t_start = t_end - fraction * (t_end - record.times.front());
  double st = 0.0, sy = 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (record.times[i] < t_start) continue;
    st += record.times[i];
    sy += record.ccw_minima[i];
    ++m;
  }
  if (m < 2) return 0.0;
  const double tm = st / static_cast<double>(m);
  const double ym = sy / static_cast<double>(m);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (record.times[i] < t_start) continue;
    const double dt = record.times[i] - tm;
    num += dt * (record.ccw_minima[i] - ym);
    den += dt * dt;
  }
  return den > 0.0 ? num / den : 0.0;
}

CcwFalsification ccw_falsify(const PayoffMechanism& mech, const RuleSpec& spec,
                             const std::vector<PopulationState>& starts, double T, double drift_threshold,
                             IntegratorConfig cfg) {
  if (!(T > 0.0)) throw InvalidParameter("falsification horizon must be positive");
  if (!(drift_threshold >= 0.0)) throw InvalidParameter("drift threshold must be nonnegative");
  cfg.t_max = T;
  cfg.stop_speed = 0.0;

  CcwFalsification out;
  auto runs = batch_simulate({spec}, mech, starts, cfg);
  for (auto& run : runs) {
    if (!run.ok()) throw IntegratorFailure("falsification run failed: " + run.error);
    const double slope = drift_slope(*run.record);
    out.slopes.push_back(slope);
    if (!out.trajectory || slope < out.drift_rate) {
      out.drift_rate = slope;
      out.start_index = run.initial_index;
      out.trajectory = std::move(run.record);
    }
  }
  out.witness = out.trajectory.has_value() && out.drift_rate < -drift_threshold;
  return out;
}

std::string to_string(CcwVerdict v) {
  switch (v) {
    case CcwVerdict::CertifiedByConstruction:
      return "certified-by-construction";
    case CcwVerdict::Falsified:
      return "fail";
    case CcwVerdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

bool ccw_by_construction(const PayoffMechanism& mech) {
  if (!mech.base().has_potential()) return false;
  if (!mech.is_dynamic()) return true;
  const LtiFilter& f = *mech.filter();
  if ((f.A - f.A.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  return f.max_eigenvalue_kA() <= 1e-10;
}

CcwCertificate certify_ccw(const PayoffMechanism& mech, const RuleSpec& spec,
                           const std::vector<PopulationState>& starts, double T, double drift_threshold,
                           IntegratorConfig cfg) {
  CcwCertificate cert;
  cert.search = ccw_falsify(mech, spec, starts, T, drift_threshold, cfg);
  if (cert.search.witness) {
    cert.verdict = CcwVerdict::Falsified;
  } else if (ccw_by_construction(mech)) {
    cert.verdict = CcwVerdict::CertifiedByConstruction;
  } else {
    cert.verdict = CcwVerdict::Inconclusive;
  }
  return cert;
}

namespace {

double tail_start(const TrajectoryRecord& record) {
  const double t0 = record.times.front();
  return t0 + 0.9 * (record.times.back() - t0);
}

}  // namespace

ConvergenceVerdict convergence_verdict(const TrajectoryRecord& record, const NashSet& ne, double speed_tol,
                                       double dist_tol, double correlation_tol) {
  if (record.size() == 0) throw EmptyTrajectory("convergence verdict needs a nonempty trajectory");
  ConvergenceVerdict v;
  v.final_speed = record.speeds.back();
  v.final_ne_distance = ne.points.empty() ? std::numeric_limits<double>::infinity()
                                          : distance_to_set(record.states.back(), ne);
  v.correlation_tail = barbalat_diagnostic(record).correlation_tail_max;
  v.converged = v.final_speed <= speed_tol && v.final_ne_distance <= dist_tol && v.correlation_tail <= correlation_tol;
  return v;
}

BarbalatDiagnostic barbalat_diagnostic(const TrajectoryRecord& record) {
  BarbalatDiagnostic d;
  if (record.size() == 0) return d;
  for (std::size_t i = 0; i + 1 < record.size(); ++i) {
    d.integral_of_correlation +=
        0.5 * (record.correlations[i] + record.correlations[i + 1]) * (record.times[i + 1] - record.times[i]);
  }
  const double from = tail_start(record);
  d.correlation_tail_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (record.times[i] >= from) d.correlation_tail_max = std::max(d.correlation_tail_max, record.correlations[i]);
  }
  return d;
}

}  // namespace evodyn
