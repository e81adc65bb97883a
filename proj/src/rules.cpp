#include "evodyn/rules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evodyn/errors.hpp"
#include "evodyn/sampling.hpp"

namespace evodyn {

namespace {

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

double ipow(double base, int exponent) {
  double out = 1.0;
  for (int e = 0; e < exponent; ++e) out *= base;
  return out;
}

void require_same_size(const PopulationState& x, const PayoffVector& p) {
  if (x.size() != p.size()) {
    std::ostringstream os;
    os << "state has " << x.size() << " strategies but payoff has " << p.size();
    throw DimensionMismatch(os.str());
  }
}

void validate_abr(int k, double eps) {
  if (k < 1) throw InvalidParameter("ABR exponent k must be a positive integer");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("ABR eps must lie in (0, 1)");
}

Matrix imitation_rates(const ImitationRule& rule, const Vector& x, const Vector& p) {
  const Eigen::Index n = p.size();
  Matrix T(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      T(i, j) = x(j) * rule.coef * ipow(positive_part(p(j) - p(i)), rule.exponent);
    }
  }
  return T;
}

Matrix comparison_rates(const ComparisonRule& rule, const Vector& p) {
  const Eigen::Index n = p.size();
  Matrix T(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gain = positive_part(p(j) - p(i));
      switch (rule.kind) {
        case ComparisonRule::Kind::Power:
          T(i, j) = rule.coef * ipow(gain, rule.exponent);
          break;
        case ComparisonRule::Kind::IndexedExponential:
          T(i, j) = rule.coef * static_cast<double>(j + 1) * std::expm1(gain);
          break;
      }
    }
  }
  return T;
}

Vector excess_column_rates(const ExcessRule& rule, const Vector& x, const Vector& p) {
  const Vector excess = p.array() - p.dot(x);
  const Eigen::Index n = p.size();
  Vector phi(n);
  switch (rule.kind) {
    case ExcessRule::Kind::Power:
      for (Eigen::Index j = 0; j < n; ++j) phi(j) = rule.coef * ipow(positive_part(excess(j)), rule.exponent);
      break;
    case ExcessRule::Kind::ApproxBestResponse: {
      validate_abr(rule.exponent, rule.eps);
      double denom = ipow(rule.eps, rule.exponent);
      for (Eigen::Index j = 0; j < n; ++j) {
        phi(j) = ipow(positive_part(excess(j)), rule.exponent);
        denom += phi(j);
      }
      phi /= denom;
      break;
    }
  }
  return phi;
}

Matrix excess_rates(const ExcessRule& rule, const Vector& x, const Vector& p) {
  const Vector phi = excess_column_rates(rule, x, p);
  return Vector::Ones(p.size()) * phi.transpose();
}

}  // namespace

ExcessRule ExcessRule::approx_best_response(int k, double eps) {
  validate_abr(k, eps);
  return {Kind::ApproxBestResponse, 1.0, k, eps};
}

RuleSpec::RuleSpec(std::vector<RuleTerm> terms, std::string label, bool enforce)
    : terms_(std::move(terms)), label_(std::move(label)), cone_enforced_(enforce) {
  for (const auto& term : terms_) {
    if (!(term.weight >= 0.0) || !std::isfinite(term.weight)) {
      throw InvalidRuleSpec("rule weights must be finite and nonnegative");
    }
    if (const auto* user = std::get_if<UserRule>(&term.component); user && !*user) {
      throw InvalidRuleSpec("user rule term has no rate function");
    }
    if (const auto* ep = std::get_if<ExcessRule>(&term.component);
        ep && ep->kind == ExcessRule::Kind::ApproxBestResponse) {
      validate_abr(ep->exponent, ep->eps);
    }
  }
  if (cone_enforced_ && !(alpha_comparison() + alpha_excess() > 0.0)) {
    throw InvalidRuleSpec("hybrid cone constraint violated: alpha_CO + alpha_EP must be > 0");
  }
}

RuleSpec RuleSpec::hybrid(std::vector<RuleTerm> terms, std::string label) {
  return RuleSpec(std::move(terms), std::move(label), true);
}

RuleSpec RuleSpec::unchecked(std::vector<RuleTerm> terms, std::string label) {
  return RuleSpec(std::move(terms), std::move(label), false);
}

RuleSpec RuleSpec::canonical(double alpha_i, double alpha_co, double alpha_ep, ImitationRule i_rule,
                             ComparisonRule co_rule, ExcessRule ep_rule, double alpha_user, UserRule user_rule,
                             std::string label) {
  std::vector<RuleTerm> terms;
  if (alpha_i != 0.0) terms.push_back({alpha_i, i_rule});
  if (alpha_co != 0.0) terms.push_back({alpha_co, co_rule});
  if (alpha_ep != 0.0) terms.push_back({alpha_ep, ep_rule});
  if (alpha_user != 0.0) terms.push_back({alpha_user, std::move(user_rule)});
  return hybrid(std::move(terms), std::move(label));
}

RuleSpec RuleSpec::smith() { return hybrid({{1.0, ComparisonRule::smith()}}, "smith"); }

RuleSpec RuleSpec::bnn() { return hybrid({{1.0, ExcessRule::bnn()}}, "bnn"); }

RuleSpec RuleSpec::abr(int k, double eps) {
  return hybrid({{1.0, ExcessRule::approx_best_response(k, eps)}}, "abr");
}

RuleSpec RuleSpec::pure_replicator() { return unchecked({{1.0, ImitationRule::replicator()}}, "replicator"); }

RuleSpec RuleSpec::example_a() {
  return hybrid({{1.0, ImitationRule{2.0, 2}},
                 {1.0, ComparisonRule::indexed_exponential(3.0)},
                 {1.0, ExcessRule{ExcessRule::Kind::Power, 4.0, 2, 0.0}}},
                "Ta");
}

RuleSpec RuleSpec::example_b() {
  return hybrid({{1.0, ImitationRule::replicator()}, {0.01, ComparisonRule::smith()}}, "Tb");
}

RuleSpec RuleSpec::example_c() {
  // eps^k = 1e-5 with k = 5.
  return hybrid({{0.01, ComparisonRule::smith()}, {1.0, ExcessRule::approx_best_response(5, 0.1)}}, "Tc");
}

RuleSpec RuleSpec::example_d() {
  RuleSpec d = example_a().scaled(0.2).plus(example_b().scaled(3.0)).plus(example_c().scaled(40.0));
  d.label_ = "Td";
  return d;
}

std::optional<RuleSpec> RuleSpec::preset(const std::string& name) {
  if (name == "smith") return smith();
  if (name == "bnn") return bnn();
  if (name == "abr") return abr(5, 0.1);
  if (name == "replicator") return pure_replicator();
  if (name == "Ta") return example_a();
  if (name == "Tb") return example_b();
  if (name == "Tc") return example_c();
  if (name == "Td") return example_d();
  return std::nullopt;
}

bool RuleSpec::has_user_rule() const {
  return std::any_of(terms_.begin(), terms_.end(),
                     [](const RuleTerm& t) { return t.rule_class() == RuleClass::User; });
}

double RuleSpec::class_weight(RuleClass c) const {
  double total = 0.0;
  for (const auto& term : terms_) {
    if (term.rule_class() == c) total += term.weight;
  }
  return total;
}

RuleSpec RuleSpec::scaled(double factor) const {
  if (!(factor >= 0.0)) throw InvalidRuleSpec("cone scaling factor must be nonnegative");
  std::vector<RuleTerm> terms = terms_;
  for (auto& t : terms) t.weight *= factor;
  return RuleSpec(std::move(terms), label_, cone_enforced_);
}

RuleSpec RuleSpec::plus(const RuleSpec& other) const {
  std::vector<RuleTerm> terms = terms_;
  terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
  return RuleSpec(std::move(terms), label_, cone_enforced_ || other.cone_enforced_);
}

SwitchRateMatrix smith_rates(const PopulationState& x, const PayoffVector& p) {
  require_same_size(x, p);
  return {comparison_rates(ComparisonRule::smith(), p.vec())};
}

SwitchRateMatrix bnn_rates(const PopulationState& x, const PayoffVector& p) {
  require_same_size(x, p);
  return {excess_rates(ExcessRule::bnn(), x.vec(), p.vec())};
}

SwitchRateMatrix abr_rates(const PopulationState& x, const PayoffVector& p, int k, double eps) {
  require_same_size(x, p);
  return {excess_rates(ExcessRule::approx_best_response(k, eps), x.vec(), p.vec())};
}

SwitchRateMatrix replicator_rates(const PopulationState& x, const PayoffVector& p) {
  require_same_size(x, p);
  return {imitation_rates(ImitationRule::replicator(), x.vec(), p.vec())};
}

Matrix component_rates(const RuleTerm& term, const PopulationState& x, const PayoffVector& p) {
  require_same_size(x, p);
  return std::visit(
      [&](const auto& rule) -> Matrix {
        using R = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<R, ImitationRule>) {
          return imitation_rates(rule, x.vec(), p.vec());
        } else if constexpr (std::is_same_v<R, ComparisonRule>) {
          return comparison_rates(rule, p.vec());
        } else if constexpr (std::is_same_v<R, ExcessRule>) {
          return excess_rates(rule, x.vec(), p.vec());
        } else {
          Matrix T = rule(x.vec(), p.vec());
          if (T.rows() != p.vec().size() || T.cols() != p.vec().size()) {
            throw DimensionMismatch("user rule returned a rate matrix of the wrong size");
          }
          return T;
        }
      },
      term.component);
}

SwitchRateMatrix hybrid_rates(const RuleSpec& spec, const PopulationState& x, const PayoffVector& p) {
  require_same_size(x, p);
  if (spec.cone_enforced() && !(spec.alpha_comparison() + spec.alpha_excess() > 0.0)) {
    throw InvalidRuleSpec("hybrid cone constraint violated: alpha_CO + alpha_EP must be > 0");
  }
  const auto n = static_cast<Eigen::Index>(p.size());
  Matrix T = Matrix::Zero(n, n);
  for (const auto& term : spec.terms()) {
    if (term.weight == 0.0) continue;
    T += term.weight * component_rates(term, x, p);
  }
  return {std::move(T)};
}

Vector edm_field_from_rates(const Vector& x, const Matrix& rates) {
  Matrix T = rates;
  T.diagonal().setZero();
  const Vector inflow = T.transpose() * x;
  const Vector outflow = x.cwiseProduct(T.rowwise().sum());
  return inflow - outflow;
}

VectorField edm_field(const RuleSpec& spec, const PopulationState& x, const PayoffVector& p) {
  const SwitchRateMatrix T = hybrid_rates(spec, x, p);
  return {edm_field_from_rates(x.vec(), T.rates)};
}

double correlation(const RuleSpec& spec, const PopulationState& x, const PayoffVector& p) {
  return p.vec().dot(edm_field(spec, x, p).velocity);
}

double tellegen_decomposition(const RuleSpec& spec, const PopulationState& x, const PayoffVector& p) {
  const Matrix T = hybrid_rates(spec, x, p).rates;
  const Vector& xv = x.vec();
  const Vector& pv = p.vec();
  double total = 0.0;
  for (Eigen::Index i = 0; i < pv.size(); ++i) {
    for (Eigen::Index j = 0; j < pv.size(); ++j) {
      const double voltage = pv(j) - pv(i);
      const double current = xv(i) * T(i, j) - xv(j) * T(j, i);
      total += voltage * current;
    }
  }
  return 0.5 * total;
}

bool imitation_monotone_at(const ImitationRule& rule, const Vector& p) {
  const Eigen::Index n = p.size();
  auto psi = [&](Eigen::Index i, Eigen::Index j) { return rule.coef * ipow(positive_part(p(j) - p(i)), rule.exponent); };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        const bool lhs = p(j) >= p(i);
        const bool rhs = psi(k, j) - psi(j, k) >= psi(k, i) - psi(i, k);
        if (lhs != rhs) return false;
      }
    }
  }
  return true;
}

namespace {

// Sample mix: interior states with random payoffs, boundary states with random
// payoffs, and boundary states paired with payoffs they best-respond to (where
// both sides of the equivalences are exactly zero).
std::pair<Vector, Vector> draw_pair(Rng& rng, std::size_t n, std::size_t index) {
  switch (index % 5) {
    case 3: {
      const auto support = random_support(rng, n);
      return {random_face_point(rng, n, support), random_uniform_vector(rng, n, -1.0, 1.0)};
    }
    case 4: {
      const auto support = random_support(rng, n);
      return {random_face_point(rng, n, support), best_response_payoff(rng, n, support)};
    }
    default:
      return {random_simplex_point(rng, n), random_uniform_vector(rng, n, -1.0, 1.0)};
  }
}

template <typename Check>
PropertySampleReport run_sampler(const RuleSpec& spec, std::size_t n, std::size_t samples, std::uint64_t seed,
                                 bool with_faces, double zero_tol, Check violates) {
  if (n < 2) throw InvalidParameter("property samplers need at least two strategies");
  Rng rng(seed);
  PropertySampleReport report;
  report.min_correlation = std::numeric_limits<double>::infinity();
  auto evaluate = [&](const Vector& xv, const Vector& pv) {
    const PopulationState x = project_to_simplex(xv);
    const PayoffVector p(pv);
    PropertyWitness w;
    w.x = x.vec();
    w.p = pv;
    const Vector v = edm_field(spec, x, p).velocity;
    w.correlation = pv.dot(v);
    w.field_norm = v.lpNorm<Eigen::Infinity>();
    w.best_response = is_best_response(x, p, zero_tol);
    ++report.samples;
    report.min_correlation = std::min(report.min_correlation, w.correlation);
    if (violates(w)) {
      ++report.violations;
      if (!report.witness) report.witness = w;
    }
  };
  if (with_faces) {
    // The canonical counterexample for purely imitative rules goes first so
    // that it becomes the reported witness.
    Vector first_vertex = Vector::Zero(static_cast<Eigen::Index>(n));
    first_vertex(0) = 1.0;
    Vector favour_second = Vector::Zero(static_cast<Eigen::Index>(n));
    favour_second(1) = 1.0;
    evaluate(first_vertex, favour_second);
    for (const auto& support : all_supports(n)) {
      const Vector bary = PopulationState::barycenter(n, support).vec();
      for (int r = 0; r < 10; ++r) evaluate(bary, random_uniform_vector(rng, n, -1.0, 1.0));
      for (int r = 0; r < 3; ++r) evaluate(bary, best_response_payoff(rng, n, support));
    }
  }
  for (std::size_t s = 0; s < samples; ++s) {
    auto [x, p] = draw_pair(rng, n, s);
    evaluate(x, p);
  }
  return report;
}

}  // namespace

PropertySampleReport sample_positive_correlation(const RuleSpec& spec, std::size_t n, std::size_t samples,
                                                 std::uint64_t seed, double zero_tol) {
  return run_sampler(spec, n, samples, seed, false, zero_tol, [zero_tol](const PropertyWitness& w) {
    if (w.correlation < -1e-12) return true;
    return (w.correlation <= zero_tol) != (w.field_norm <= zero_tol);
  });
}

PropertySampleReport sample_nash_stationarity(const RuleSpec& spec, std::size_t n, std::size_t samples,
                                              std::uint64_t seed, double zero_tol) {
  return run_sampler(spec, n, samples, seed, true, zero_tol, [zero_tol](const PropertyWitness& w) {
    return (w.correlation <= zero_tol) != w.best_response;
  });
}

}  // namespace evodyn
