#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "evodyn/rules.hpp"
#include "evodyn/sampling.hpp"
#include "evodyn/simplex.hpp"

namespace evodyn::testing {

inline Vector v3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

inline PopulationState s3(double a, double b, double c) { return PopulationState(v3(a, b, c)); }
inline PayoffVector p3(double a, double b, double c) { return PayoffVector(v3(a, b, c)); }

inline Matrix m3(std::initializer_list<double> rowmajor) {
  Matrix m(3, 3);
  auto it = rowmajor.begin();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = *it++;
  return m;
}

inline Matrix skew_rps() { return m3({0, -1, 1, 1, 0, -1, -1, 1, 0}); }

// Random state: interior most of the time, otherwise on a random face.
inline Vector any_state(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 1);
  return u(rng) < 0.7 ? random_simplex_point(rng, n) : random_face_point(rng, n, random_support(rng, n));
}

inline std::vector<RuleSpec> catalogue() {
  return {RuleSpec::smith(),     RuleSpec::bnn(),       RuleSpec::abr(1, 0.1), RuleSpec::abr(5, 0.1),
          RuleSpec::example_a(), RuleSpec::example_b(), RuleSpec::example_c(), RuleSpec::example_d()};
}

}  // namespace evodyn::testing
