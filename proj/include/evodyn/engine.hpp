#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evodyn/ccw_ledger.hpp"
#include "evodyn/payoffs.hpp"
#include "evodyn/rules.hpp"
#include "evodyn/simplex.hpp"

namespace evodyn {

enum class IntegratorMethod { Rk4Fixed, Rk45Adaptive };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::Rk4Fixed;
  /// Fixed step for RK4, initial step for RK45.
  double dt = 1e-3;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t_max = 50.0;
  /// Early stop once ||x_dot||_inf, the filter rate and the correlation all
  /// fall below this (correlation uses 1e-9).
  double stop_speed = 1e-9;
  std::size_t record_stride = 1;
  double drift_bound = kDefaultDriftBound;

  /// Throws InvalidParameter on non-positive step, horizon or tolerances.
  void validate() const;
  bool operator==(const IntegratorConfig&) const = default;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<PopulationState> states;
  std::vector<PayoffVector> payoffs;
  std::vector<double> speeds;
  std::vector<double> correlations;
  std::vector<double> ccw_integrals;
  std::vector<double> ccw_minima;
  std::vector<Vector> mech_states;
  CcwLedger ccw_ledger;

  /// Largest ||x_projected - x_raw||_inf over all steps.
  double max_projection = 0.0;
  std::size_t steps = 0;
  bool stopped_early = false;

  std::size_t size() const { return times.size(); }
};

/// Payoff at (x, q), the EDM field it induces and the filter rate.
struct ClosedLoopRates {
  PayoffVector payoff;
  VectorField field;
  Vector state_rate;
};

ClosedLoopRates closed_loop_rhs(const RuleSpec& spec, const PayoffMechanism& mech, const PopulationState& x,
                                const Vector& q);

/// Integrates the EDM in feedback with `mech`, starting from x0 and the
/// mechanism's current internal state (zero unless set). The x block is
/// projected back onto the simplex after every step.
TrajectoryRecord simulate(const RuleSpec& spec, const PayoffMechanism& mech, const PopulationState& x0,
                          const IntegratorConfig& cfg);

struct BatchRun {
  std::size_t rule_index = 0;
  std::size_t initial_index = 0;
  std::optional<TrajectoryRecord> record;
  std::string error;

  bool ok() const { return record.has_value(); }
};

/// Every (rule, initial condition) pair, rule-major. Runs execute in parallel;
/// a failing run leaves its error message and does not affect the others.
std::vector<BatchRun> batch_simulate(const std::vector<RuleSpec>& specs, const PayoffMechanism& mech,
                                     const std::vector<PopulationState>& initial, const IntegratorConfig& cfg);

/// CSV with header t,x1..xn,p1..pn,speed,correlation,ccw_integral,ccw_min;
/// 17 significant digits, LF line endings.
void write_trajectory_csv(const TrajectoryRecord& record, std::ostream& out);
void write_trajectory_csv(const TrajectoryRecord& record, const std::string& path);

}  // namespace evodyn
