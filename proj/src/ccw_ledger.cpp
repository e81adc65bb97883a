#include "evodyn/ccw_ledger.hpp"

#include <algorithm>
#include <cmath>

#include "evodyn/errors.hpp"

namespace evodyn {

double CcwLedger::envelope() const {
  const double base = std::isnan(bound_estimate) ? 0.0 : bound_estimate;
  return base + std::max(0.0, -perturbation_min);
}

CcwLedger ccw_ledger_step(CcwLedger ledger, const Vector& x_mid, const Vector& p_prev, const Vector& p_next,
                          double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("ledger step needs dt > 0");
  if (x_mid.size() != p_prev.size() || p_prev.size() != p_next.size()) {
    throw DimensionMismatch("ledger step: state and payoffs differ in size");
  }
  ledger.running_integral += (p_next - p_prev).dot(x_mid);
  ledger.running_min = std::min(ledger.running_min, ledger.running_integral);
  return ledger;
}

void ccw_ledger_add_perturbation(CcwLedger& ledger, const Vector& x_mid, const Vector& g_prev,
                                 const Vector& g_next) {
  ledger.perturbation_integral += (g_next - g_prev).dot(x_mid);
  ledger.perturbation_min = std::min(ledger.perturbation_min, ledger.perturbation_integral);
}

}  // namespace evodyn
