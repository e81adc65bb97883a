#include "evodyn/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "evodyn/errors.hpp"

namespace evodyn {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

PopulationState::PopulationState(Vector entries) : entries_(std::move(entries)) {
  if (entries_.size() < 1 || !all_finite(entries_)) {
    throw InvalidState("population state must be a nonempty finite vector");
  }
  if (entries_.minCoeff() < 0.0 || entries_.maxCoeff() > 1.0) {
    throw InvalidState("population state entries must lie in [0, 1]");
  }
  if (std::abs(entries_.sum() - 1.0) > kSimplexTol) {
    std::ostringstream os;
    os.precision(17);
    os << "population state must sum to 1 (sum = " << entries_.sum() << ")";
    throw InvalidState(os.str());
  }
}

PopulationState PopulationState::uniform(std::size_t n) {
  if (n == 0) throw InvalidState("uniform state needs at least one strategy");
  return PopulationState(Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

PopulationState PopulationState::vertex(std::size_t n, std::size_t i) {
  if (i >= n) throw InvalidState("vertex index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  v(static_cast<Eigen::Index>(i)) = 1.0;
  return PopulationState(std::move(v));
}

PopulationState PopulationState::barycenter(std::size_t n, const std::vector<std::size_t>& support) {
  if (support.empty()) throw InvalidState("barycenter of an empty support");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i : support) {
    if (i >= n) throw InvalidState("support index out of range");
    v(static_cast<Eigen::Index>(i)) = 1.0 / static_cast<double>(support.size());
  }
  return PopulationState(std::move(v));
}

PopulationState PopulationState::trusted(Vector entries) {
  return PopulationState(std::move(entries), TrustedTag{});
}

PayoffVector::PayoffVector(Vector entries) : entries_(std::move(entries)) {
  if (!all_finite(entries_)) throw InvalidParameter("payoff vector has non-finite entries");
}

double simplex_drift(const Vector& v) {
  const double negative = std::max(0.0, -v.minCoeff());
  return std::max(negative, std::abs(v.sum() - 1.0));
}

PopulationState project_to_simplex(const Vector& v, double drift_bound) {
  if (v.size() < 2) throw InvalidState("projection needs at least two strategies");
  if (!all_finite(v)) throw DriftExceeded("non-finite state handed to the simplex projection");

  const double drift = simplex_drift(v);
  if (drift > drift_bound) {
    std::ostringstream os;
    os << "state drifted " << drift << " from the simplex (bound " << drift_bound << ")";
    throw DriftExceeded(os.str());
  }
  if (v.minCoeff() >= 0.0 && std::abs(v.sum() - 1.0) <= kSimplexTol) {
    return PopulationState(v);
  }
  Vector clipped = v.cwiseMax(0.0);
  clipped /= clipped.sum();
  return PopulationState(std::move(clipped));
}

ExcessPayoffVector excess_payoff(const PopulationState& x, const PayoffVector& p) {
  require_same_size(x.size(), p.size(), "excess_payoff");
  const double average = p.vec().dot(x.vec());
  return ExcessPayoffVector{p.vec().array() - average};
}

std::vector<std::size_t> best_response_set(const PayoffVector& p, double tol) {
  const double top = p.vec().maxCoeff();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= top - tol) out.push_back(i);
  }
  return out;
}

bool is_best_response(const PopulationState& x, const PayoffVector& p, double tol) {
  require_same_size(x.size(), p.size(), "is_best_response");
  return p.vec().dot(x.vec()) >= p.vec().maxCoeff() - tol;
}

double best_response_gap(const Vector& x, const Vector& p) { return p.maxCoeff() - p.dot(x); }

NashSet nash_equilibria_affine(const Matrix& A, const Vector& b, double tol) {
  const auto n = static_cast<std::size_t>(b.size());
  if (A.rows() != b.size() || A.cols() != b.size()) {
    throw DimensionMismatch("nash_equilibria_affine: A must be n x n with n = size(b)");
  }
  if (n > kMaxEnumeratedStrategies) {
    throw TooManyStrategies("support enumeration is limited to 10 strategies");
  }
  if (n == 0) throw DimensionMismatch("nash_equilibria_affine: empty game");

  NashSet result;
  const std::size_t subsets = (std::size_t{1} << n) - 1;
  for (std::size_t mask = 1; mask <= subsets; ++mask) {
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) support.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(support.size());

    // Unknowns (x_S, v): A_SS x_S - v 1 = -b_S and 1'x_S = 1.
    Matrix M = Matrix::Zero(m + 1, m + 1);
    Vector rhs(m + 1);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) {
        M(r, c) = A(static_cast<Eigen::Index>(support[r]), static_cast<Eigen::Index>(support[c]));
      }
      M(r, m) = -1.0;
      rhs(r) = -b(static_cast<Eigen::Index>(support[r]));
    }
    M.row(m).head(m).setOnes();
    rhs(m) = 1.0;

    Eigen::FullPivLU<Matrix> lu(M);
    lu.setThreshold(1e-10);
    Vector y;
    bool degenerate = false;
    if (lu.isInvertible()) {
      y = lu.solve(rhs);
    } else {
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
      y = cod.solve(rhs);
      if ((M * y - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) {
        result.skipped_supports.push_back(support);
        continue;
      }
      // Solution subspace: take its point nearest the face barycenter.
      const Matrix kernel = lu.kernel();
      const Matrix kernel_x = kernel.topRows(m);
      const Vector target = Vector::Constant(m, 1.0 / static_cast<double>(m)) - y.head(m);
      const Vector z = kernel_x.completeOrthogonalDecomposition().solve(target);
      y += kernel * z;
      degenerate = true;
    }

    if (y.head(m).minCoeff() < -tol) continue;

    Vector x = Vector::Zero(static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < m; ++r) {
      x(static_cast<Eigen::Index>(support[r])) = std::max(0.0, y(r));
    }
    const double total = x.sum();
    if (total <= 0.0) continue;
    x /= total;

    const Vector payoff = A * x + b;
    const double gap = best_response_gap(x, payoff);
    if (gap > tol) continue;

    bool duplicate = false;
    for (const auto& existing : result.points) {
      if ((existing.vec() - x).norm() <= kNashDedupRadius) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;

    result.points.push_back(project_to_simplex(x));
    result.residuals.push_back(std::max(0.0, gap));
    result.continuum = result.continuum || degenerate;
  }
  return result;
}

double distance_to_set(const PopulationState& x, const NashSet& set) {
  if (set.points.empty()) throw EmptySet("distance to an empty Nash set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& y : set.points) {
    require_same_size(x.size(), y.size(), "distance_to_set");
    best = std::min(best, (x.vec() - y.vec()).norm());
  }
  return best;
}

}  // namespace evodyn
