#pragma once

#include <random>
#include <vector>

#include "evodyn/simplex.hpp"

namespace evodyn {

using Rng = std::mt19937_64;

/// Uniform point of the simplex (flat Dirichlet).
Vector random_simplex_point(Rng& rng, std::size_t n);

/// Uniform point of the face spanned by `support`; zero elsewhere.
Vector random_face_point(Rng& rng, std::size_t n, const std::vector<std::size_t>& support);

/// Nonempty random subset of {0..n-1}, sorted.
std::vector<std::size_t> random_support(Rng& rng, std::size_t n);

/// Entries uniform in [lo, hi].
Vector random_uniform_vector(Rng& rng, std::size_t n, double lo, double hi);

/// Symmetric matrix with entries uniform in [lo, hi].
Matrix random_symmetric_matrix(Rng& rng, std::size_t n, double lo, double hi);

/// Payoff vector for which every x supported on `support` is a best response:
/// constant on the support, strictly lower elsewhere.
Vector best_response_payoff(Rng& rng, std::size_t n, const std::vector<std::size_t>& support);

/// All nonempty supports of {0..n-1}, in bitmask order.
std::vector<std::vector<std::size_t>> all_supports(std::size_t n);

}  // namespace evodyn
