#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "evodyn/simplex.hpp"

namespace evodyn {

/// A memoryless payoff map F on the simplex, optionally with a potential.
///
/// Two families are supported. Affine games F(x) = Ax + b get their potential
/// (when one exists) and all bounds computed exactly. Custom games carry a
/// user-supplied map, a declared sup-norm bound and optionally a potential.
class MemorylessGame {
 public:
  using PayoffFn = std::function<Vector(const Vector&)>;
  using PotentialFn = std::function<double(const Vector&)>;

  static MemorylessGame affine(Matrix A, Vector b);
  static MemorylessGame zero(std::size_t n);
  /// `payoff_sup` must bound max_x ||F(x)||_inf. When a potential is given,
  /// `potential_range` must bound it from below and above on the simplex.
  static MemorylessGame custom(std::size_t n, PayoffFn payoff, double payoff_sup,
                               PotentialFn potential = nullptr,
                               std::pair<double, double> potential_range = {0.0, 0.0});

  std::size_t size() const { return n_; }
  bool is_affine() const { return affine_; }
  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }

  PayoffVector evaluate(const PopulationState& x) const;
  Vector evaluate(const Vector& x) const;

  bool has_potential() const { return has_potential_; }
  /// Potential shifted to be nonnegative on the simplex. Throws
  /// NoPotentialAvailable for non-potential games.
  double potential(const PopulationState& x) const;
  double potential_min() const;
  double potential_max() const;

  /// max over the simplex of ||F(x)||_inf.
  double payoff_sup() const { return payoff_sup_; }

  /// 2 (max ||F||_inf + max f), the bound on -int p_dot' x dt for potential
  /// games. Throws NoPotentialAvailable.
  double ccw_bound() const;

 private:
  MemorylessGame() = default;
  double raw_potential(const Vector& x) const;

  std::size_t n_ = 0;
  bool affine_ = false;
  Matrix A_;
  Vector b_;
  PayoffFn custom_payoff_;
  PotentialFn custom_potential_;

  bool has_potential_ = false;
  // Affine potential: 1/2 x'Sx + c'x + shift_.
  Matrix sym_;
  Vector linear_;
  double shift_ = 0.0;
  double potential_min_ = 0.0;
  double potential_max_ = 0.0;
  double payoff_sup_ = 0.0;
};

/// Largest violation of tangent-space symmetry of A, max |(P(A - A')P)_ij|
/// with P the projector onto {sum = 0}. Zero iff x -> Ax + b is a potential game.
double tangent_asymmetry(const Matrix& A);

/// Trapezoid approximation of the line integral of F along a sampled path,
/// sum_k 1/2 (F(x_k) + F(x_{k+1}))'(x_{k+1} - x_k).
double line_integral(const MemorylessGame& game, const std::vector<PopulationState>& path);

/// Checks f(end) - f(start) against the line integral of F along `path`
/// (at least 100 samples). Throws NoPotentialAvailable for non-potential games.
bool verify_potential_identity(const MemorylessGame& game, const std::vector<PopulationState>& path,
                               double quad_tol);

/// First-order filter q' = lambda (Ax + b - q) whose output perturbs payoffs by
/// k lambda (Ax + b - q). Requires lambda > 0, A symmetric and kA negative
/// semidefinite.
struct LtiFilter {
  double lambda = 1.0;
  double k = 0.0;
  Matrix A;
  Vector b;

  /// Validating constructor; throws InvalidParameter on any violated invariant.
  static LtiFilter make(double lambda, double k, Matrix A, Vector b);

  /// Largest eigenvalue of kA (must be <= 1e-10 for a valid filter).
  double max_eigenvalue_kA() const;
};

/// Payoff mechanism: either a memoryless game, or a potential base game plus
/// an LTI perturbation with internal state q (zero at start).
class PayoffMechanism {
 public:
  static PayoffMechanism memoryless(MemorylessGame game);
  /// `validate = false` skips the filter invariants so that violating
  /// configurations can still be certified (and shown to fail).
  static PayoffMechanism perturbed(MemorylessGame base, LtiFilter filter, bool validate = true);

  std::size_t size() const { return base_.size(); }
  bool is_dynamic() const { return filter_.has_value(); }
  std::size_t state_dim() const { return filter_ ? size() : 0; }

  const MemorylessGame& base() const { return base_; }
  const std::optional<LtiFilter>& filter() const { return filter_; }

  const Vector& state() const { return q_; }
  void set_state(Vector q);
  void reset();

  /// Payoff at x using the stored filter state.
  PayoffVector evaluate(const PopulationState& x) const;
  Vector evaluate(const Vector& x, const Vector& q) const;
  /// Filter contribution k lambda (Ax + b - q); empty for memoryless.
  Vector perturbation(const Vector& x, const Vector& q) const;

  /// lambda (Ax + b - q) at the stored state; empty for memoryless.
  Vector state_derivative(const PopulationState& x) const;
  Vector state_derivative(const Vector& x, const Vector& q) const;

  /// The map payoffs converge to once x stops moving; for the perturbed
  /// variant the filter term dies out and this is the base game.
  const MemorylessGame& stationary_game() const { return base_; }

  /// Uniform bound on ||p(t)||_inf over every admissible input.
  double payoff_bound() const;

 private:
  PayoffMechanism(MemorylessGame base, std::optional<LtiFilter> filter);

  MemorylessGame base_;
  std::optional<LtiFilter> filter_;
  Vector q_;
};

}  // namespace evodyn
