#pragma once

#include <limits>

#include "evodyn/simplex.hpp"

namespace evodyn {

/// Running value of int_0^T p_dot' x dt along one closed-loop run.
///
/// The integral is accumulated as a Stieltjes sum (p_next - p_prev)' x_mid, so
/// it stays exact for piecewise-linear payoff paths. `perturbation_*` tracks the
/// share contributed by a dynamic payoff perturbation, when there is one.
struct CcwLedger {
  double running_integral = 0.0;
  double running_min = 0.0;
  /// Theoretical envelope for -running_min: 2 (max ||F||_inf + max f) for a
  /// potential base game, NaN when unknown.
  double bound_estimate = std::numeric_limits<double>::quiet_NaN();
  double perturbation_integral = 0.0;
  double perturbation_min = 0.0;

  /// Envelope that -running_min must respect: the potential-game bound plus
  /// the measured contribution of the perturbation path.
  double envelope() const;
};

/// Adds (p_next - p_prev)' x_mid and updates the running minimum. Throws
/// InvalidParameter unless dt > 0.
CcwLedger ccw_ledger_step(CcwLedger ledger, const Vector& x_mid, const Vector& p_prev, const Vector& p_next,
                          double dt);

/// Same update for the perturbation share of the payoff.
void ccw_ledger_add_perturbation(CcwLedger& ledger, const Vector& x_mid, const Vector& g_prev, const Vector& g_next);

}  // namespace evodyn
