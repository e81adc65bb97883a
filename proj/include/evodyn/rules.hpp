#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "evodyn/simplex.hpp"

namespace evodyn {

/// n x n matrix of per-capita switch rates; entry (i, j) is the rate at which
/// an agent playing i moves to j. The diagonal is stored but never used.
struct SwitchRateMatrix {
  Matrix rates;
};

/// d/dt of the population state. Entries sum to zero.
struct VectorField {
  Vector velocity;
};

/// Imitative component: T_ij = x_j * coef * [p_j - p_i]_+^exponent.
/// The replicator rule is coef = 1, exponent = 1.
struct ImitationRule {
  double coef = 1.0;
  int exponent = 1;

  static ImitationRule replicator() { return {}; }
  bool operator==(const ImitationRule&) const = default;
};

/// Pairwise-comparison component, independent of x.
///   Power:              phi_ij = coef * [p_j - p_i]_+^exponent (Smith: 1, 1)
///   IndexedExponential: phi_ij = coef * j * (exp([p_j - p_i]_+) - 1), j 1-based
struct ComparisonRule {
  enum class Kind { Power, IndexedExponential };
  Kind kind = Kind::Power;
  double coef = 1.0;
  int exponent = 1;

  static ComparisonRule smith() { return {}; }
  static ComparisonRule indexed_exponential(double coef) { return {Kind::IndexedExponential, coef, 1}; }
  bool operator==(const ComparisonRule&) const = default;
};

/// Excess-payoff component, a function of p_hat only (column-constant rates).
///   Power:              phi_j = coef * [p_hat_j]_+^exponent (BNN: 1, 1)
///   ApproxBestResponse: phi_j = [p_hat_j]_+^k / (sum_i [p_hat_i]_+^k + eps^k)
struct ExcessRule {
  enum class Kind { Power, ApproxBestResponse };
  Kind kind = Kind::Power;
  double coef = 1.0;
  int exponent = 1;
  double eps = 0.0;

  static ExcessRule bnn() { return {}; }
  /// Throws InvalidParameter unless k >= 1 and eps in (0, 1).
  static ExcessRule approx_best_response(int k, double eps);
  bool operator==(const ExcessRule&) const = default;
};

/// Externally supplied rule, trusted to be positively correlated. Returns the
/// full rate matrix for (x, p).
using UserRule = std::function<Matrix(const Vector& x, const Vector& p)>;

enum class RuleClass { Imitation, Comparison, ExcessPayoff, User };

struct RuleTerm {
  double weight = 0.0;
  std::variant<ImitationRule, ComparisonRule, ExcessRule, UserRule> component;

  RuleClass rule_class() const { return static_cast<RuleClass>(component.index()); }
};

/// A hybrid learning rule: a conic combination of imitative, comparison,
/// excess-payoff and user rules. Several terms of the same class may appear;
/// the class weights are their sums. Construction enforces nonnegative weights
/// and alpha_CO + alpha_EP > 0.
class RuleSpec {
 public:
  static RuleSpec hybrid(std::vector<RuleTerm> terms, std::string label = {});

  /// Skips the alpha_CO + alpha_EP > 0 check so that purely imitative rules can
  /// be exercised as counterexamples. Weights must still be nonnegative.
  static RuleSpec unchecked(std::vector<RuleTerm> terms, std::string label = {});

  /// One rule per class with the given class weights; zero-weight terms are
  /// dropped.
  static RuleSpec canonical(double alpha_i, double alpha_co, double alpha_ep, ImitationRule i_rule = {},
                            ComparisonRule co_rule = {}, ExcessRule ep_rule = {}, double alpha_user = 0.0,
                            UserRule user_rule = nullptr, std::string label = {});

  static RuleSpec smith();
  static RuleSpec bnn();
  static RuleSpec abr(int k, double eps);
  /// Pure replicator; violates the hybrid cone, so it is built unchecked.
  static RuleSpec pure_replicator();

  // Hybrid rules a-d from the catalogue of worked examples.
  static RuleSpec example_a();
  static RuleSpec example_b();
  static RuleSpec example_c();
  static RuleSpec example_d();

  /// Looks up a preset by name: smith, bnn, replicator, abr, Ta, Tb, Tc, Td.
  static std::optional<RuleSpec> preset(const std::string& name);

  double alpha_imitation() const { return class_weight(RuleClass::Imitation); }
  double alpha_comparison() const { return class_weight(RuleClass::Comparison); }
  double alpha_excess() const { return class_weight(RuleClass::ExcessPayoff); }
  double alpha_user() const { return class_weight(RuleClass::User); }

  const std::vector<RuleTerm>& terms() const { return terms_; }
  const std::string& label() const { return label_; }
  bool cone_enforced() const { return cone_enforced_; }
  bool has_user_rule() const;

  /// Scales every weight by `factor` >= 0 (closure of the cone).
  RuleSpec scaled(double factor) const;
  /// Concatenation of terms; the result is checked when both inputs are.
  RuleSpec plus(const RuleSpec& other) const;

 private:
  RuleSpec(std::vector<RuleTerm> terms, std::string label, bool enforce);
  double class_weight(RuleClass c) const;

  std::vector<RuleTerm> terms_;
  std::string label_;
  bool cone_enforced_ = true;
};

SwitchRateMatrix smith_rates(const PopulationState& x, const PayoffVector& p);
SwitchRateMatrix bnn_rates(const PopulationState& x, const PayoffVector& p);
SwitchRateMatrix abr_rates(const PopulationState& x, const PayoffVector& p, int k, double eps);
SwitchRateMatrix replicator_rates(const PopulationState& x, const PayoffVector& p);

/// Rates of a single component, unweighted.
Matrix component_rates(const RuleTerm& term, const PopulationState& x, const PayoffVector& p);

/// Weighted sum of all component rate matrices.
SwitchRateMatrix hybrid_rates(const RuleSpec& spec, const PopulationState& x, const PayoffVector& p);

/// Net inflow V_i = sum_j x_j T_ji - x_i T_ij.
VectorField edm_field(const RuleSpec& spec, const PopulationState& x, const PayoffVector& p);
Vector edm_field_from_rates(const Vector& x, const Matrix& rates);

/// p' V(x, p).
double correlation(const RuleSpec& spec, const PopulationState& x, const PayoffVector& p);

/// The same quantity assembled pairwise: 1/2 sum_ij (p_j - p_i)(x_i T_ij - x_j T_ji).
double tellegen_decomposition(const RuleSpec& spec, const PopulationState& x, const PayoffVector& p);

/// Checks the imitative monotonicity condition of `rule` at p for every index
/// triple: p_j >= p_i iff psi_kj - psi_jk >= psi_ki - psi_ik.
bool imitation_monotone_at(const ImitationRule& rule, const Vector& p);

// --- Property samplers -----------------------------------------------------

struct PropertyWitness {
  Vector x;
  Vector p;
  double correlation = 0.0;
  double field_norm = 0.0;
  bool best_response = false;
};

struct PropertySampleReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double min_correlation = 0.0;
  std::optional<PropertyWitness> witness;

  bool passed() const { return violations == 0; }
};

// Both samplers draw three fifths of their pairs as uniform simplex states with
// payoffs uniform in [-1, 1]^n, one fifth as face states with such payoffs and
// one fifth as face states with payoffs they best-respond to.
//
// A shared zero threshold z is not scale-consistent: the correlation is of
// higher order in the payoff gaps than the field, so near ties produce pairs
// with correlation <= z < ||V||. For ABR with k = 5, eps = 0.1 this happens
// whenever the largest excess payoff is roughly in (1.6e-3, 4.6e-3).

/// Draws (x, p) pairs and checks positive correlation: correlation >= -1e-12,
/// and correlation <= zero_tol iff ||V||_inf <= zero_tol.
PropertySampleReport sample_positive_correlation(const RuleSpec& spec, std::size_t n, std::size_t samples,
                                                 std::uint64_t seed, double zero_tol = 1e-9);

/// Checks correlation <= zero_tol iff x is a best response to p (tolerance
/// zero_tol) on random pairs plus every vertex and face barycenter (each with
/// random and best-response payoffs) and the pair x = e1, p = e2.
PropertySampleReport sample_nash_stationarity(const RuleSpec& spec, std::size_t n, std::size_t samples,
                                              std::uint64_t seed, double zero_tol = 1e-9);

}  // namespace evodyn
