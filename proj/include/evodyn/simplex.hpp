#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace evodyn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kDefaultDriftBound = 1e-6;
inline constexpr double kBestResponseTol = 1e-9;
inline constexpr double kNashDedupRadius = 1e-8;
inline constexpr std::size_t kMaxEnumeratedStrategies = 10;

/// Point of the probability simplex: entry i is the share of the population
/// playing strategy i.
class PopulationState {
 public:
  /// Validates that `entries` lies on the simplex (nonnegative, sums to one
  /// within kSimplexTol). Throws InvalidState otherwise.
  explicit PopulationState(Vector entries);

  static PopulationState uniform(std::size_t n);
  static PopulationState vertex(std::size_t n, std::size_t i);
  /// Uniform distribution over the strategies listed in `support`.
  static PopulationState barycenter(std::size_t n, const std::vector<std::size_t>& support);

  /// Wraps `entries` without validation. Reserved for integrator stage points,
  /// which sit within rounding of the simplex but are never recorded.
  static PopulationState trusted(Vector entries);

  const Vector& vec() const { return entries_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.size()); }
  double operator[](std::size_t i) const { return entries_(static_cast<Eigen::Index>(i)); }

  bool operator==(const PopulationState& other) const { return entries_ == other.entries_; }

 private:
  struct TrustedTag {};
  PopulationState(Vector entries, TrustedTag) : entries_(std::move(entries)) {}

  Vector entries_;
};

/// Per-strategy payoffs. Entries must be finite.
class PayoffVector {
 public:
  explicit PayoffVector(Vector entries);

  const Vector& vec() const { return entries_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.size()); }
  double operator[](std::size_t i) const { return entries_(static_cast<Eigen::Index>(i)); }

 private:
  Vector entries_;
};

/// p_i - p'x. Its population average x'p_hat vanishes.
struct ExcessPayoffVector {
  Vector entries;
};

/// Finite representation of the Nash equilibria of a stationary game.
struct NashSet {
  std::vector<PopulationState> points;
  /// max_i F_i(x) - x'F(x) at each stored point.
  std::vector<double> residuals;
  /// True when at least one support face carried a continuum of equilibria;
  /// the stored point for such a face is a representative, not the whole set.
  bool continuum = false;
  /// Supports (as index lists) whose linear system was singular and
  /// inconsistent, hence skipped.
  std::vector<std::vector<std::size_t>> skipped_supports;
};

/// Clips small negative entries and renormalizes. Inputs already on the
/// simplex (within kSimplexTol) are returned unchanged. Throws DriftExceeded
/// when the input is farther than `drift_bound` from the simplex, which
/// signals integrator trouble rather than rounding.
PopulationState project_to_simplex(const Vector& v, double drift_bound = kDefaultDriftBound);

/// Distance of `v` from the simplex as used by project_to_simplex: the larger
/// of the most negative entry magnitude and |sum - 1|.
double simplex_drift(const Vector& v);

ExcessPayoffVector excess_payoff(const PopulationState& x, const PayoffVector& p);

/// Indices (0-based) within `tol` of the maximal payoff.
std::vector<std::size_t> best_response_set(const PayoffVector& p, double tol = kBestResponseTol);

/// p'x >= max_i p_i - tol.
bool is_best_response(const PopulationState& x, const PayoffVector& p, double tol = kBestResponseTol);

/// max_i p_i - p'x, the best-response violation of x against p.
double best_response_gap(const Vector& x, const Vector& p);

/// Support enumeration for the affine game F(x) = Ax + b with n <= 10.
NashSet nash_equilibria_affine(const Matrix& A, const Vector& b, double tol = kBestResponseTol);

/// Smallest Euclidean distance from x to the stored points of `set`.
double distance_to_set(const PopulationState& x, const NashSet& set);

}  // namespace evodyn
