#pragma once

#include <cstdint>
#include <random>

#include "hlab/graded_sequence.hpp"
#include "hlab/particle_function.hpp"

namespace hlab {

/// Symmetrized random table with entries of order `scale`.
inline FiniteFunction random_symmetric_function(const FiniteSpace& space, int arity,
                                                std::mt19937_64& gen, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  FiniteFunction f(space, arity);
  for (double& v : f.values()) v = dist(gen);
  return f.symmetrized();
}

/// Random sequence with symmetric components.  Components above `closed_at`
/// (when >= 0) are zero, so the sequence describes a system of at most
/// `closed_at` particles.  The scalar component is set explicitly.
inline FiniteSequence random_finite_sequence(const FiniteSpace& space, int n_max,
                                             std::uint64_t seed, double scale = 1.0,
                                             double scalar = 0.0, int closed_at = -1) {
  std::mt19937_64 gen(seed);
  FiniteSequence f(space, n_max);
  f.component(0) = FiniteFunction::constant(space, 0, scalar);
  for (int n = 1; n <= n_max; ++n) {
    if (closed_at >= 0 && n > closed_at) continue;
    double level_scale = scale;
    for (int i = 1; i < n; ++i) level_scale *= scale;  // scale^n keeps tails small
    f.component(n) = random_symmetric_function(space, n, gen, level_scale);
  }
  return f;
}

/// Random one-particle test function u.
inline FiniteFunction random_test_function(const FiniteSpace& space, std::uint64_t seed,
                                           double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  FiniteFunction u(space, 1);
  for (double& v : u.values()) v = dist(gen);
  return u;
}

}  // namespace hlab
