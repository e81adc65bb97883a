#include "evodyn/sampling.hpp"

#include <algorithm>

namespace evodyn {

Vector random_simplex_point(Rng& rng, std::size_t n) {
  std::vector<std::size_t> support(n);
  for (std::size_t i = 0; i < n; ++i) support[i] = i;
  return random_face_point(rng, n, support);
}

Vector random_face_point(Rng& rng, std::size_t n, const std::vector<std::size_t>& support) {
  std::exponential_distribution<double> expo(1.0);
  Vector x = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i : support) x(static_cast<Eigen::Index>(i)) = expo(rng);
  const double total = x.sum();
  if (total <= 0.0) {
    for (std::size_t i : support) x(static_cast<Eigen::Index>(i)) = 1.0;
    return x / static_cast<double>(support.size());
  }
  x /= total;
  // Renormalize once more so the sum is 1 to the last bit where possible.
  x /= x.sum();
  return x;
}

std::vector<std::size_t> random_support(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> pick(1, (std::size_t{1} << n) - 1);
  const std::size_t mask = pick(rng);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask & (std::size_t{1} << i)) out.push_back(i);
  }
  return out;
}

Vector random_uniform_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  return v;
}

Matrix random_symmetric_matrix(Rng& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const auto m = static_cast<Eigen::Index>(n);
  Matrix A(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      A(i, j) = u(rng);
      A(j, i) = A(i, j);
    }
  }
  return A;
}

Vector best_response_payoff(Rng& rng, std::size_t n, const std::vector<std::size_t>& support) {
  std::uniform_real_distribution<double> level(-1.0, 1.0);
  std::uniform_real_distribution<double> gap(0.05, 1.0);
  const double top = level(rng);
  Vector p(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = top - gap(rng);
  for (std::size_t i : support) p(static_cast<Eigen::Index>(i)) = top;
  return p;
}

std::vector<std::vector<std::size_t>> all_supports(std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) s.push_back(i);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace evodyn
