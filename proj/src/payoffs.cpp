#include "evodyn/payoffs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "evodyn/errors.hpp"
#include "evodyn/sampling.hpp"

namespace evodyn {

namespace {

constexpr double kAsymmetryTol = 1e-12;

Matrix tangent_projector(Eigen::Index n) {
  return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
}

// Extrema of 1/2 x'Sx + c'x over the simplex. Every extremum is a stationary
// point of the restriction to some face, so enumerating faces is exact.
std::pair<double, double> quadratic_range(const Matrix& S, const Vector& c) {
  const auto n = static_cast<std::size_t>(c.size());
  auto value = [&](const Vector& x) { return 0.5 * x.dot(S * x) + c.dot(x); };
  if (n > kMaxEnumeratedStrategies) {
    return {0.5 * S.minCoeff() + c.minCoeff(), 0.5 * S.maxCoeff() + c.maxCoeff()};
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& support : all_supports(n)) {
    const auto m = static_cast<Eigen::Index>(support.size());
    Matrix M = Matrix::Zero(m + 1, m + 1);
    Vector rhs(m + 1);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index col = 0; col < m; ++col) {
        M(r, col) = S(static_cast<Eigen::Index>(support[r]), static_cast<Eigen::Index>(support[col]));
      }
      M(r, m) = -1.0;
      rhs(r) = -c(static_cast<Eigen::Index>(support[r]));
    }
    M.row(m).head(m).setOnes();
    rhs(m) = 1.0;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
    cod.setThreshold(1e-12);
    const Vector y = cod.solve(rhs);
    if ((M * y - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
    if (y.head(m).minCoeff() < -1e-12) continue;
    Vector x = Vector::Zero(static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < m; ++r) x(static_cast<Eigen::Index>(support[r])) = std::max(0.0, y(r));
    x /= x.sum();
    const double f = value(x);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  return {lo, hi};
}

}  // namespace

double tangent_asymmetry(const Matrix& A) {
  const Matrix P = tangent_projector(A.rows());
  return (P * (A - A.transpose()) * P).cwiseAbs().maxCoeff();
}

MemorylessGame MemorylessGame::affine(Matrix A, Vector b) {
  if (A.rows() != b.size() || A.cols() != b.size() || b.size() == 0) {
    throw DimensionMismatch("affine game needs an n x n matrix and an n-vector");
  }
  if (!A.allFinite() || !b.allFinite()) throw InvalidParameter("affine game has non-finite coefficients");

  MemorylessGame g;
  g.n_ = static_cast<std::size_t>(b.size());
  g.affine_ = true;
  g.A_ = std::move(A);
  g.b_ = std::move(b);

  // ||Ax + b||_inf is convex, so its maximum sits at a vertex.
  for (Eigen::Index i = 0; i < g.b_.size(); ++i) {
    g.payoff_sup_ = std::max(g.payoff_sup_, (g.A_.col(i) + g.b_).lpNorm<Eigen::Infinity>());
  }

  const double scale = 1.0 + g.A_.cwiseAbs().maxCoeff();
  if (tangent_asymmetry(g.A_) <= kAsymmetryTol * scale) {
    // A = S + K with K = u1' - 1u' on the tangent space, u = K1/n. On the
    // simplex Kx = u - (u'x)1, so F differs from grad(1/2 x'Sx + (b+u)'x) by a
    // multiple of 1 only.
    const Matrix K = 0.5 * (g.A_ - g.A_.transpose());
    const Vector u = K * Vector::Ones(g.b_.size()) / static_cast<double>(g.n_);
    g.sym_ = 0.5 * (g.A_ + g.A_.transpose());
    g.linear_ = g.b_ + u;
    const auto [lo, hi] = quadratic_range(g.sym_, g.linear_);
    g.shift_ = -lo;
    g.potential_min_ = 0.0;
    g.potential_max_ = hi - lo;
    g.has_potential_ = true;
  }
  return g;
}

MemorylessGame MemorylessGame::zero(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return affine(Matrix::Zero(m, m), Vector::Zero(m));
}

MemorylessGame MemorylessGame::custom(std::size_t n, PayoffFn payoff, double payoff_sup, PotentialFn potential,
                                      std::pair<double, double> potential_range) {
  if (n == 0 || !payoff) throw InvalidParameter("custom game needs a dimension and a payoff map");
  if (!(payoff_sup >= 0.0) || !std::isfinite(payoff_sup)) {
    throw InvalidParameter("custom game needs a finite payoff bound");
  }
  MemorylessGame g;
  g.n_ = n;
  g.custom_payoff_ = std::move(payoff);
  g.payoff_sup_ = payoff_sup;
  if (potential) {
    if (!(potential_range.first <= potential_range.second)) {
      throw InvalidParameter("potential range must satisfy min <= max");
    }
    g.custom_potential_ = std::move(potential);
    g.has_potential_ = true;
    g.shift_ = -potential_range.first;
    g.potential_min_ = 0.0;
    g.potential_max_ = potential_range.second - potential_range.first;
  }
  return g;
}

Vector MemorylessGame::evaluate(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != n_) throw DimensionMismatch("game evaluated at a state of wrong size");
  if (affine_) return A_ * x + b_;
  Vector p = custom_payoff_(x);
  if (static_cast<std::size_t>(p.size()) != n_) throw DimensionMismatch("custom game returned wrong size");
  return p;
}

PayoffVector MemorylessGame::evaluate(const PopulationState& x) const { return PayoffVector(evaluate(x.vec())); }

double MemorylessGame::raw_potential(const Vector& x) const {
  if (affine_) return 0.5 * x.dot(sym_ * x) + linear_.dot(x);
  return custom_potential_(x);
}

double MemorylessGame::potential(const PopulationState& x) const {
  if (!has_potential_) throw NoPotentialAvailable("game has no potential");
  if (x.size() != n_) throw DimensionMismatch("potential evaluated at a state of wrong size");
  return raw_potential(x.vec()) + shift_;
}

double MemorylessGame::potential_min() const {
  if (!has_potential_) throw NoPotentialAvailable("game has no potential");
  return potential_min_;
}

double MemorylessGame::potential_max() const {
  if (!has_potential_) throw NoPotentialAvailable("game has no potential");
  return potential_max_;
}

double MemorylessGame::ccw_bound() const { return 2.0 * (payoff_sup_ + potential_max()); }

double line_integral(const MemorylessGame& game, const std::vector<PopulationState>& path) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const Vector f0 = game.evaluate(path[k].vec());
    const Vector f1 = game.evaluate(path[k + 1].vec());
    total += 0.5 * (f0 + f1).dot(path[k + 1].vec() - path[k].vec());
  }
  return total;
}

bool verify_potential_identity(const MemorylessGame& game, const std::vector<PopulationState>& path,
                               double quad_tol) {
  if (!game.has_potential()) throw NoPotentialAvailable("game has no potential to verify");
  if (path.size() < 100) throw InvalidParameter("potential identity needs a path with at least 100 samples");
  const double lhs = game.potential(path.back()) - game.potential(path.front());
  return std::abs(lhs - line_integral(game, path)) <= quad_tol;
}

LtiFilter LtiFilter::make(double lambda, double k, Matrix A, Vector b) {
  LtiFilter f{lambda, k, std::move(A), std::move(b)};
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidParameter("filter rate lambda must be positive");
  if (!std::isfinite(k)) throw InvalidParameter("filter gain k must be finite");
  if (f.A.rows() != f.A.cols() || f.A.rows() != f.b.size()) {
    throw DimensionMismatch("filter needs an n x n matrix A and an n-vector b");
  }
  if ((f.A - f.A.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidParameter("filter matrix A must be symmetric");
  }
  const double top = f.max_eigenvalue_kA();
  if (top > 1e-10) {
    std::ostringstream os;
    os << "filter requires kA negative semidefinite (largest eigenvalue of kA is " << top << ")";
    throw InvalidParameter(os.str());
  }
  return f;
}

double LtiFilter::max_eigenvalue_kA() const {
  const Matrix kA = k * 0.5 * (A + A.transpose());
  if (kA.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(kA, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

PayoffMechanism::PayoffMechanism(MemorylessGame base, std::optional<LtiFilter> filter)
    : base_(std::move(base)), filter_(std::move(filter)) {
  reset();
}

PayoffMechanism PayoffMechanism::memoryless(MemorylessGame game) { return PayoffMechanism(std::move(game), {}); }

PayoffMechanism PayoffMechanism::perturbed(MemorylessGame base, LtiFilter filter, bool validate) {
  if (validate) filter = LtiFilter::make(filter.lambda, filter.k, std::move(filter.A), std::move(filter.b));
  if (static_cast<std::size_t>(filter.b.size()) != base.size() || filter.A.rows() != filter.b.size() ||
      filter.A.cols() != filter.b.size()) {
    throw DimensionMismatch("filter and base game disagree on the number of strategies");
  }
  return PayoffMechanism(std::move(base), std::move(filter));
}

void PayoffMechanism::set_state(Vector q) {
  if (static_cast<std::size_t>(q.size()) != state_dim()) throw DimensionMismatch("mechanism state of wrong size");
  q_ = std::move(q);
}

void PayoffMechanism::reset() { q_ = Vector::Zero(static_cast<Eigen::Index>(state_dim())); }

Vector PayoffMechanism::perturbation(const Vector& x, const Vector& q) const {
  if (!filter_) return Vector();
  return filter_->k * filter_->lambda * (filter_->A * x + filter_->b - q);
}

Vector PayoffMechanism::evaluate(const Vector& x, const Vector& q) const {
  Vector p = base_.evaluate(x);
  if (filter_) p += perturbation(x, q);
  return p;
}

PayoffVector PayoffMechanism::evaluate(const PopulationState& x) const { return PayoffVector(evaluate(x.vec(), q_)); }

Vector PayoffMechanism::state_derivative(const Vector& x, const Vector& q) const {
  if (!filter_) return Vector();
  return filter_->lambda * (filter_->A * x + filter_->b - q);
}

Vector PayoffMechanism::state_derivative(const PopulationState& x) const { return state_derivative(x.vec(), q_); }

double PayoffMechanism::payoff_bound() const {
  if (!filter_) return base_.payoff_sup();
  // q is a low-pass of Ax + b started at zero, so ||q||_inf <= ||A||_inf + ||b||_inf.
  const double a_norm = filter_->A.cwiseAbs().rowwise().sum().maxCoeff();
  const double b_norm = filter_->b.lpNorm<Eigen::Infinity>();
  const double q_bound = a_norm + b_norm;
  return base_.payoff_sup() + std::abs(filter_->k * filter_->lambda) * (a_norm + b_norm + q_bound);
}

}  // namespace evodyn
