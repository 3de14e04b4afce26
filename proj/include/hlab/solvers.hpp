#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hlab/cumulants.hpp"
#include "hlab/dynamics.hpp"
#include "hlab/graded_sequence.hpp"

namespace hlab {

/// Truncation request for series-valued solvers.
struct TruncationSpec {
  int n_term = 0;
  bool exact = false;  // set when the input is closed and the tail vanishes
};

/// Initial data for the solution expansions.
template <class F>
struct InitialData {
  enum class Kind { ClosedSystem, GrandCanonical, Chaos, Explicit };

  Kind kind = Kind::Explicit;
  GradedSequence<F> sequence;
  int closed_n = -1;  // N for closed systems

  /// N-particle system: only component N is nonzero.
  static InitialData closed_system(int n_particles, F d_n, int n_max = -1) {
    if (d_n.arity() != n_particles)
      throw ArgumentError("InitialData: D_N arity does not match N");
    InitialData init;
    init.kind = Kind::ClosedSystem;
    init.closed_n = n_particles;
    init.sequence = GradedSequence<F>(d_n.space(), std::max(n_particles, n_max));
    init.sequence.component(n_particles) = std::move(d_n);
    return init;
  }

  /// Product data D_n = z^n rho(x_1)...rho(x_n), truncated at n_max.
  static InitialData grand_canonical(double activity, const F& profile, int n_max) {
    if (!(activity > 0.0)) throw InvariantError("InitialData: activity must be positive");
    if (profile.arity() != 1) throw ArgumentError("InitialData: profile must be one-particle");
    InitialData init;
    init.kind = Kind::GrandCanonical;
    init.sequence = GradedSequence<F>(profile.space(), n_max);
    init.sequence.component(0) = F::constant(profile.space(), 0, 1.0);
    F power = profile.scaled(activity);
    for (int n = 1; n <= n_max; ++n) {
      init.sequence.component(n) = power;
      if (n < n_max) power = power.outer(profile.scaled(activity));
    }
    init.sequence.info().truncation_order = n_max;
    return init;
  }

  /// Chaos data: only the one-particle correlation component is nonzero.
  static InitialData chaos(const F& g1, int n_max) {
    if (g1.arity() != 1) throw ArgumentError("InitialData: chaos profile must be one-particle");
    InitialData init;
    init.kind = Kind::Chaos;
    init.sequence = GradedSequence<F>(g1.space(), n_max);
    init.sequence.component(1) = g1;
    return init;
  }

  static InitialData explicit_sequence(GradedSequence<F> seq) {
    InitialData init;
    init.kind = Kind::Explicit;
    init.sequence = std::move(seq);
    return init;
  }
};

/// Initial marginal distribution functions of the grand canonical ensemble:
/// F_s(0) = (D,I)^{-1} sum_n (1/n!) int D_{s+n} dx_{s+1}...dx_{s+n}, that is
/// the normalized exp_annihilate of D.
template <class F>
GradedSequence<F> grand_canonical_marginals(const GradedSequence<F>& d0) {
  GradedSequence<F> lifted = exp_annihilate(d0);
  double normalizer = lifted.scalar_component();
  if (!(normalizer > 0.0))
    throw ArgumentError("grand_canonical_marginals: normalizing factor must be positive");
  GradedSequence<F> out = lifted.scaled(1.0 / normalizer);
  out.component(0) = F::constant(d0.space(), 0, 1.0);  // exact, not normalizer/normalizer
  out.info() = d0.info();
  return out;
}

/// Nonperturbative solution of the BBGKY hierarchy:
///   F_s(t) = sum_n (1/n!) int A_{1+n}(-t, {Y}, X\Y) F_{s+n}(0) dx_{s+1..s+n},
/// truncated at n_term.  closed_at marks exact truncation for closed inputs.
template <class Dyn, class F = typename Dyn::Function>
F solve_marginal_distributions(const Dyn& dyn, const GradedSequence<F>& f0, int s, double t,
                               TruncationSpec trunc, int closed_at = -1,
                               bool time_derivative = false, const CumulantTweak& tweak = nullptr) {
  using T = ModelTraits<F>;
  if (s < 1) throw ArgumentError("solve_marginal_distributions: need s >= 1");
  std::vector<std::pair<F, double>> pieces;
  double inv_fact = 1.0;
  for (int n = 0; n <= trunc.n_term; ++n) {
    if (n > 0) inv_fact /= n;
    if (closed_at >= 0 && s + n > closed_at) break;  // vanishing tail
    CumulantOperator op =
        make_cumulant(ClusterTuple::cluster_plus_atoms(s, n), t, Direction::States, tweak);
    F applied = op.apply(dyn, f0.component(s + n), time_derivative);
    pieces.emplace_back(applied.integrate_last(n), inv_fact);
  }
  F out = T::linear_combination(dyn.space(), s, pieces);
  out.info().truncation_order = trunc.n_term;
  out.info().exact = closed_at >= 0 && trunc.n_term >= closed_at - s;
  return out;
}

/// Same expansion through reduced cumulants.
template <class Dyn, class F = typename Dyn::Function>
F solve_marginals_reduced(const Dyn& dyn, const GradedSequence<F>& f0, int s, double t,
                          TruncationSpec trunc, int closed_at = -1) {
  using T = ModelTraits<F>;
  if (s < 1) throw ArgumentError("solve_marginals_reduced: need s >= 1");
  std::vector<std::pair<F, double>> pieces;
  double inv_fact = 1.0;
  for (int n = 0; n <= trunc.n_term; ++n) {
    if (n > 0) inv_fact /= n;
    if (closed_at >= 0 && s + n > closed_at) break;
    CumulantOperator op = CumulantOperator::reduced(s, n, t, Direction::States);
    pieces.emplace_back(op.apply(dyn, f0.component(s + n)).integrate_last(n), inv_fact);
  }
  F out = T::linear_combination(dyn.space(), s, pieces);
  out.info().truncation_order = trunc.n_term;
  out.info().exact = closed_at >= 0 && trunc.n_term >= closed_at - s;
  return out;
}

/// Solution of the Liouville hierarchy for correlation functions: a finite
/// partition sum, no truncation.
template <class Dyn, class F = typename Dyn::Function>
F solve_correlations(const Dyn& dyn, const GradedSequence<F>& g0, int s, double t,
                     bool time_derivative = false, const CumulantTweak& tweak = nullptr) {
  if (g0.empty() || g0.scalar_component() != 0.0)
    throw PreconditionError("solve_correlations: correlation data needs a vanishing scalar component");
  ClusterInitialData<F> initial = [&g0](const ClusterTuple& sub) {
    return g0.component(sub.particle_count());
  };
  return cluster_evolution(dyn, ClusterTuple::atoms(s), t, initial, time_derivative, tweak);
}

/// Correlation function with a cluster argument: the Mobius transform of a
/// distribution sequence over the partition lattice of the cluster tuple.
/// For c = ({Y}, z_1,...,z_n) this is g(t, {Y}, z...) when d = D(t).
template <class F>
F cluster_correlation(const GradedSequence<F>& d, const ClusterTuple& c) {
  using T = ModelTraits<F>;
  const int m = c.particle_count();
  std::vector<std::pair<F, double>> pieces;
  for (const Partition& p : cached_partitions(c.size())) {
    std::vector<std::pair<F, std::vector<int>>> factors;
    for (const auto& block : p.blocks) {
      auto axes = block_axes(c, block);
      factors.emplace_back(d.component(static_cast<int>(axes.size())), axes);
    }
    pieces.emplace_back(assemble_product<F>(d.space(), m, std::move(factors)),
                        static_cast<double>(mobius_coefficient(p)));
  }
  return T::linear_combination(d.space(), m, pieces);
}

/// Evolved cluster-argument correlations: the Liouville-hierarchy evolution
/// operator over a cluster tuple, with initial data given by the cluster
/// Mobius transform of D(0) = Exp* g(0).
template <class Dyn, class F = typename Dyn::Function>
F solve_correlations_cluster(const Dyn& dyn, const GradedSequence<F>& d0,
                             const ClusterTuple& ground, double t,
                             const CumulantTweak& tweak = nullptr) {
  ClusterInitialData<F> initial = [&d0](const ClusterTuple& sub) {
    // Relabel so the sub-tuple's axes are its sorted-label ranks.
    const IndexSet& all = sub.declusterize();
    auto rank = [&all](Label l) {
      return static_cast<Label>(std::lower_bound(all.labels().begin(), all.labels().end(), l) -
                                all.labels().begin() + 1);
    };
    std::vector<ClusterElement> elems;
    for (const ClusterElement& e : sub.elements()) {
      std::vector<Label> mapped;
      for (Label l : e.labels.labels()) mapped.push_back(rank(l));
      elems.push_back(e.is_cluster ? ClusterElement::cluster(IndexSet(mapped))
                                   : ClusterElement::atom(mapped.front()));
    }
    return cluster_correlation(d0, ClusterTuple(std::move(elems)));
  };
  return cluster_evolution(dyn, ground, t, initial, false, tweak);
}

/// Marginal distribution functions in terms of correlation functions:
///   F_s = sum_n (1/n!) int g_{1+n}({Y}, x_{s+1},...) dx,
/// with the cluster-argument correlations taken from the given correlation
/// sequence (g_0 = 0 required).
template <class F>
F marginals_from_correlations(const GradedSequence<F>& g, int s, TruncationSpec trunc) {
  using T = ModelTraits<F>;
  if (g.empty() || g.scalar_component() != 0.0)
    throw PreconditionError("marginals_from_correlations: correlation data needs g_0 = 0");
  GradedSequence<F> d = exp_star(g);
  std::vector<std::pair<F, double>> pieces;
  double inv_fact = 1.0;
  for (int n = 0; n <= trunc.n_term; ++n) {
    if (n > 0) inv_fact /= n;
    F gc = cluster_correlation(d, ClusterTuple::cluster_plus_atoms(s, n));
    pieces.emplace_back(gc.integrate_last(n), inv_fact);
  }
  F out = T::linear_combination(g.space(), s, pieces);
  out.info().truncation_order = trunc.n_term;
  return out;
}

/// Marginal correlation functions in terms of correlation functions:
///   G_s = sum_n (1/n!) int g_{s+n} dx_{s+1}...dx_{s+n}.
template <class F>
F marginal_correlations_from_correlations(const GradedSequence<F>& g, int s,
                                          TruncationSpec trunc) {
  using T = ModelTraits<F>;
  std::vector<std::pair<F, double>> pieces;
  double inv_fact = 1.0;
  int closed_at = g.max_level();
  for (int n = 0; n <= trunc.n_term && s + n <= closed_at; ++n) {
    if (n > 0) inv_fact /= n;
    pieces.emplace_back(g.component(s + n).integrate_last(n), inv_fact);
  }
  F out = T::linear_combination(g.space(), s, pieces);
  out.info().truncation_order = trunc.n_term;
  out.info().exact = trunc.n_term >= closed_at - s;
  return out;
}

/// Nonperturbative solution of the nonlinear BBGKY hierarchy:
///   G_s(t) = sum_n (1/n!) int U_{1+n}(t; {Y}, x_{s+1..s+n} | G(0)) dx,
/// truncated at n_term.
template <class Dyn, class F = typename Dyn::Function>
F solve_marginal_correlations(const Dyn& dyn, const GradedSequence<F>& big_g0, int s, double t,
                              TruncationSpec trunc, bool time_derivative = false,
                              const CumulantTweak& tweak = nullptr) {
  using T = ModelTraits<F>;
  std::vector<std::pair<F, double>> pieces;
  double inv_fact = 1.0;
  for (int n = 0; n <= trunc.n_term; ++n) {
    if (n > 0) inv_fact /= n;
    F u = nonlinear_reduced_cumulant(dyn, s, n, t, big_g0, time_derivative, tweak);
    pieces.emplace_back(u.integrate_last(n), inv_fact);
  }
  F out = T::linear_combination(dyn.space(), s, pieces);
  out.info().truncation_order = trunc.n_term;
  return out;
}

/// Nonperturbative solution of the dual BBGKY hierarchy: the finite sum
///   B_s(t) = sum_{n=0}^{s} (1/n!) sum_{j_1 != ... != j_n}
///            A_{1+n}(t, {Y\X}, X) B_{s-n}(0, Y\X).
/// The n = s term acts on the scalar component and vanishes identically
/// (every flow preserves constants, and the signed partition sum over two
/// or more elements is zero), so it is skipped.
template <class Dyn, class F = typename Dyn::Function>
F solve_marginal_observables(const Dyn& dyn, const GradedSequence<F>& b0, int s, double t,
                             bool time_derivative = false, const CumulantTweak& tweak = nullptr) {
  using T = ModelTraits<F>;
  if (s == 0) return b0.component(0);
  std::vector<std::pair<F, double>> pieces;
  for (std::uint32_t mask = 0; mask < (1u << s); ++mask) {
    std::vector<Label> removed, kept;
    for (int i = 0; i < s; ++i)
      ((mask >> i) & 1u) ? removed.push_back(i + 1) : kept.push_back(i + 1);
    if (kept.empty()) continue;  // n = s: exactly zero on the scalar component
    int n = static_cast<int>(removed.size());
    std::vector<ClusterElement> elems{ClusterElement::cluster(IndexSet(kept))};
    for (Label l : removed) elems.push_back(ClusterElement::atom(l));
    CumulantOperator op =
        make_cumulant(ClusterTuple(std::move(elems)), t, Direction::Observables, tweak);
    std::vector<int> kept_axes;
    for (Label l : kept) kept_axes.push_back(l - 1);
    F extended =
        assemble_product<F>(dyn.space(), s, {{b0.component(s - n), kept_axes}});
    pieces.emplace_back(op.apply(dyn, extended, time_derivative), 1.0);
  }
  return T::linear_combination(dyn.space(), s, pieces);
}

/// Dual solution through reduced cumulants: the (1/n!)-weighted sum over
/// ordered tuples of removed variables, each with the alternating binomial
/// operator on its own ordering.
template <class Dyn, class F = typename Dyn::Function>
F solve_observables_reduced(const Dyn& dyn, const GradedSequence<F>& b0, int s, double t) {
  using T = ModelTraits<F>;
  if (s == 0) return b0.component(0);
  std::vector<std::pair<F, double>> pieces;
  for (std::uint32_t mask = 0; mask < (1u << s); ++mask) {
    std::vector<Label> removed, kept;
    for (int i = 0; i < s; ++i)
      ((mask >> i) & 1u) ? removed.push_back(i + 1) : kept.push_back(i + 1);
    if (kept.empty()) continue;
    int n = static_cast<int>(removed.size());
    std::vector<int> kept_axes;
    for (Label l : kept) kept_axes.push_back(l - 1);
    F extended = assemble_product<F>(dyn.space(), s, {{b0.component(s - n), kept_axes}});
    double weight = 1.0 / static_cast<double>(factorial(n));
    std::sort(removed.begin(), removed.end());
    do {
      std::vector<ClusterElement> elems{ClusterElement::cluster(IndexSet(kept))};
      for (Label l : removed) elems.push_back(ClusterElement::atom(l));
      CumulantOperator op =
          CumulantOperator::reduced_on(ClusterTuple(std::move(elems)), t, Direction::Observables);
      pieces.emplace_back(op.apply(dyn, extended), weight);
    } while (std::next_permutation(removed.begin(), removed.end()));
  }
  return T::linear_combination(dyn.space(), s, pieces);
}

/// Initial marginal observables from observables, B(0) = e^{-a+} A(0).
template <class F>
GradedSequence<F> marginal_observables_init(const GradedSequence<F>& a0) {
  return exp_create_neg(a0);
}

}  // namespace hlab
