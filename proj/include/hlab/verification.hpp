#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hlab/cumulants.hpp"
#include "hlab/dynamics.hpp"
#include "hlab/graded_sequence.hpp"
#include "hlab/solvers.hpp"

namespace hlab {

/// Outcome of one identity or residual check.
struct ResidualReport {
  std::string id;
  std::string equation;
  int s = 0;
  double t = 0.0;
  double h = 0.0;  // finite-difference step, when one was used
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string model;
  int truncation = -1;
  std::uint64_t seed = 0;
  std::string notes;

  static ResidualReport make(std::string id, std::string equation, double residual,
                             double tolerance, std::string model) {
    ResidualReport r;
    r.id = std::move(id);
    r.equation = std::move(equation);
    r.residual = residual;
    r.tolerance = tolerance;
    r.model = std::move(model);
    r.pass = residual >= 0.0 && residual <= tolerance;
    return r;
  }
};

// ---------------------------------------------------------------------------
// Hierarchy right-hand sides, finite model (exact generators)
// ---------------------------------------------------------------------------

/// BBGKY right-hand side: {H_s, F_s} plus the interaction terms coupling to
/// higher marginals.  Pair case: sum_i int Phi^{(i,s+1)} F_{s+1} dx_{s+1};
/// k-body interactions follow the many-body hierarchy with the sums over
/// argument subsets, truncated by the available components and n_cut.
inline FiniteFunction bbgky_rhs(const FiniteDynamics& dyn, const FiniteSequence& f, int s,
                                int n_cut = 4) {
  std::vector<int> lead(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) lead[static_cast<std::size_t>(i)] = i;
  FiniteFunction out = dyn.generator(f.component(s), lead, 1.0);

  for (int arity : dyn.liouvillian().interaction_arities()) {
    for (int k = 1; k < arity && k <= s; ++k) {
      int n = arity - k;
      if (n < 1 || n > n_cut || s + n > f.max_level()) continue;
      double inv_fact = 1.0 / static_cast<double>(factorial(n));
      // subsets of {0..s-1} of size k
      std::vector<int> subset(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i;
      while (true) {
        std::vector<int> axes = subset;
        for (int a = 0; a < n; ++a) axes.push_back(s + a);
        FiniteFunction term = dyn.liouvillian().apply_interaction(f.component(s + n), axes, 1.0);
        out = out.plus_scaled(term.integrate_last(n), inv_fact);
        int pos = k - 1;
        while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == s - k + pos) --pos;
        if (pos < 0) break;
        ++subset[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < k; ++i)
          subset[static_cast<std::size_t>(i)] = subset[static_cast<std::size_t>(i - 1)] + 1;
      }
    }
  }
  return out;
}

/// Liouville hierarchy right-hand side for correlation functions:
/// {H_s, g_s} plus potential terms over partitions with one nonempty
/// sub-selection per block.
inline FiniteFunction liouville_hierarchy_rhs(const FiniteDynamics& dyn, const FiniteSequence& g,
                                              int s) {
  std::vector<int> lead(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) lead[static_cast<std::size_t>(i)] = i;
  FiniteFunction out = dyn.generator(g.component(s), lead, 1.0);

  for (const Partition& p : cached_partitions(s)) {
    if (p.block_count() < 2) continue;
    // product of the block correlations
    std::vector<std::pair<FiniteFunction, std::vector<int>>> factors;
    for (const auto& block : p.blocks)
      factors.emplace_back(g.component(static_cast<int>(block.size())), block);
    FiniteFunction prod = assemble_product<FiniteFunction>(dyn.space(), s, std::move(factors));

    // nonempty Z_i within each block; total size must be a built arity
    std::vector<std::vector<int>> choices(p.blocks.size());
    std::function<void(std::size_t, std::vector<int>&)> recurse = [&](std::size_t bi,
                                                                      std::vector<int>& zs) {
      if (bi == p.blocks.size()) {
        if (!dyn.liouvillian().has_interaction(static_cast<int>(zs.size()))) return;
        std::vector<int> axes = zs;
        std::sort(axes.begin(), axes.end());
        out = out.plus_scaled(dyn.liouvillian().apply_interaction(prod, axes, 1.0), 1.0);
        return;
      }
      const auto& block = p.blocks[bi];
      for (std::uint32_t mask = 1; mask < (1u << block.size()); ++mask) {
        std::size_t before = zs.size();
        for (std::size_t i = 0; i < block.size(); ++i)
          if ((mask >> i) & 1u) zs.push_back(block[i]);
        recurse(bi + 1, zs);
        zs.resize(before);
      }
    };
    std::vector<int> zs;
    recurse(0, zs);
  }
  return out;
}

/// Nonlinear BBGKY right-hand side for marginal correlation functions:
/// the Liouville-hierarchy terms plus the collision group coupling to
/// higher marginal correlations.  Pair potentials are the verified case;
/// k-body collision terms follow the displayed constraints literally and
/// are experimental.
inline FiniteFunction nonlinear_bbgky_rhs(const FiniteDynamics& dyn, const FiniteSequence& g_big,
                                          int s, int n_cut = 4) {
  FiniteFunction out = liouville_hierarchy_rhs(dyn, g_big, s);

  for (int arity : dyn.liouvillian().interaction_arities()) {
    int n = arity - 1;  // Phi^{(n+1)}
    if (n < 1) continue;
    for (int k = 1; k <= n && k <= s; ++k) {
      int added = n + 1 - k;
      if (added < 0 || added > n_cut || s + added > g_big.max_level()) continue;
      const int total = s + added;
      // subsets (j_1 < ... < j_k) of {0..s-1}
      std::vector<int> subset(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i;
      while (true) {
        // admissible partitions: |P| <= n+1 and every block meets the
        // chosen arguments or the added variables
        FiniteFunction combo(dyn.space(), total);
        for (const Partition& p : cached_partitions(total)) {
          if (p.block_count() > n + 1) continue;
          bool ok = true;
          for (const auto& block : p.blocks) {
            bool meets = false;
            for (int e : block) {
              if (e >= s || std::find(subset.begin(), subset.end(), e) != subset.end()) {
                meets = true;
                break;
              }
            }
            if (!meets) {
              ok = false;
              break;
            }
          }
          if (!ok) continue;
          std::vector<std::pair<FiniteFunction, std::vector<int>>> factors;
          for (const auto& block : p.blocks)
            factors.emplace_back(g_big.component(static_cast<int>(block.size())), block);
          combo = combo.plus_scaled(
              assemble_product<FiniteFunction>(dyn.space(), total, std::move(factors)), 1.0);
        }
        std::vector<int> axes = subset;
        for (int a = 0; a < added; ++a) axes.push_back(s + a);
        FiniteFunction term = dyn.liouvillian().apply_interaction(combo, axes, 1.0);
        out = out.plus_scaled(term.integrate_last(added), 1.0);

        int pos = k - 1;
        while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == s - k + pos) --pos;
        if (pos < 0) break;
        ++subset[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < k; ++i)
          subset[static_cast<std::size_t>(i)] = subset[static_cast<std::size_t>(i - 1)] + 1;
      }
    }
  }
  return out;
}

/// Dual BBGKY right-hand side for marginal observables: {B_s, H_s} plus the
/// lower-marginal interaction terms (subset form of the many-body sums).
inline FiniteFunction dual_bbgky_rhs(const FiniteDynamics& dyn, const FiniteSequence& b, int s) {
  std::vector<int> lead(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) lead[static_cast<std::size_t>(i)] = i;
  FiniteFunction out = dyn.generator(b.component(s), lead, -1.0);

  for (int arity : dyn.liouvillian().interaction_arities()) {
    if (arity > s) continue;
    for (int n = 1; n < arity; ++n) {
      if (s - n < 0) continue;
      // site sets S of size `arity`, removed subsets R of S of size n
      std::vector<int> sites(static_cast<std::size_t>(arity));
      for (int i = 0; i < arity; ++i) sites[static_cast<std::size_t>(i)] = i;
      while (true) {
        for (std::uint32_t mask = 1; mask < (1u << arity); ++mask) {
          if (__builtin_popcount(mask) != n) continue;
          std::vector<int> kept_axes;
          std::vector<int> removed;
          for (int i = 0; i < arity; ++i)
            if ((mask >> i) & 1u) removed.push_back(sites[static_cast<std::size_t>(i)]);
          for (int a = 0; a < s; ++a)
            if (std::find(removed.begin(), removed.end(), a) == removed.end())
              kept_axes.push_back(a);
          FiniteFunction extended = assemble_product<FiniteFunction>(
              dyn.space(), s, {{b.component(s - n), kept_axes}});
          out = out.plus_scaled(dyn.liouvillian().apply_interaction(extended, sites, -1.0), 1.0);
        }
        int pos = arity - 1;
        while (pos >= 0 && sites[static_cast<std::size_t>(pos)] == s - arity + pos) --pos;
        if (pos < 0) break;
        ++sites[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < arity; ++i)
          sites[static_cast<std::size_t>(i)] = sites[static_cast<std::size_t>(i - 1)] + 1;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hierarchy right-hand sides, continuous model (pair potentials)
// ---------------------------------------------------------------------------

inline ContinuousFunction bbgky_rhs(const ContinuousDynamics& dyn, const ContinuousSequence& f,
                                    int s) {
  ContinuousFunction out = dyn.bracket_with_hamiltonian(f.component(s));
  if (dyn.hamiltonian().has_pair() && s + 1 <= f.max_level()) {
    for (int i = 0; i < s; ++i) {
      ContinuousFunction term = dyn.bracket_with_pair_potential(f.component(s + 1), i, s);
      out = out.plus_scaled(term.integrate_last(1), 1.0);
    }
  }
  return out;
}

inline ContinuousFunction liouville_hierarchy_rhs(const ContinuousDynamics& dyn,
                                                  const ContinuousSequence& g, int s) {
  ContinuousFunction out = dyn.bracket_with_hamiltonian(g.component(s));
  if (!dyn.hamiltonian().has_pair()) return out;
  for (const Partition& p : cached_partitions(s)) {
    if (p.block_count() != 2) continue;
    std::vector<std::pair<ContinuousFunction, std::vector<int>>> factors;
    for (const auto& block : p.blocks)
      factors.emplace_back(g.component(static_cast<int>(block.size())), block);
    ContinuousFunction prod =
        assemble_product<ContinuousFunction>(dyn.space(), s, std::move(factors));
    for (int a : p.blocks[0])
      for (int b : p.blocks[1])
        out = out.plus_scaled(dyn.bracket_with_pair_potential(prod, a, b), 1.0);
  }
  return out;
}

inline ContinuousFunction nonlinear_bbgky_rhs(const ContinuousDynamics& dyn,
                                              const ContinuousSequence& g_big, int s) {
  ContinuousFunction out = liouville_hierarchy_rhs(dyn, g_big, s);
  if (!dyn.hamiltonian().has_pair() || s + 1 > g_big.max_level()) return out;
  const int total = s + 1;
  for (int j = 0; j < s; ++j) {
    ContinuousFunction combo = g_big.component(total);
    // two-block partitions where one block holds x_j and the other x_{s+1}
    for (const Partition& p : cached_partitions(total)) {
      if (p.block_count() != 2) continue;
      bool ok = true;
      for (const auto& block : p.blocks) {
        bool meets = false;
        for (int e : block)
          if (e == j || e == s) meets = true;
        if (!meets) ok = false;
      }
      bool same_block = false;
      for (const auto& block : p.blocks) {
        bool has_j = std::find(block.begin(), block.end(), j) != block.end();
        bool has_added = std::find(block.begin(), block.end(), s) != block.end();
        if (has_j && has_added) same_block = true;
      }
      if (!ok || same_block) continue;
      std::vector<std::pair<ContinuousFunction, std::vector<int>>> factors;
      for (const auto& block : p.blocks)
        factors.emplace_back(g_big.component(static_cast<int>(block.size())), block);
      combo = combo.plus_scaled(
          assemble_product<ContinuousFunction>(dyn.space(), total, std::move(factors)), 1.0);
    }
    ContinuousFunction term = dyn.bracket_with_pair_potential(combo, j, s);
    out = out.plus_scaled(term.integrate_last(1), 1.0);
  }
  return out;
}

inline ContinuousFunction dual_bbgky_rhs(const ContinuousDynamics& dyn,
                                         const ContinuousSequence& b, int s) {
  ContinuousFunction out = dyn.bracket_with_hamiltonian(b.component(s), -1.0);
  if (!dyn.hamiltonian().has_pair() || s < 2) return out;
  for (int i = 0; i < s; ++i) {
    std::vector<int> kept_axes;
    for (int a = 0; a < s; ++a)
      if (a != i) kept_axes.push_back(a);
    ContinuousFunction extended =
        assemble_product<ContinuousFunction>(dyn.space(), s, {{b.component(s - 1), kept_axes}});
    for (int j = 0; j < s; ++j) {
      if (j == i) continue;
      out = out.plus_scaled(dyn.bracket_with_pair_potential(extended, i, j, -1.0), 1.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evolution equations in functional derivatives (finite model, exact)
// ---------------------------------------------------------------------------

enum class FunctionalEquation {
  Liouville,          // d/dt (D,u): plain derivatives, weight u, states
  Bbgky,              // d/dt (F,u): plain derivatives, weight u+1, states
  LiouvilleHierarchy, // d/dt (g,u): partition products, weight u, states
  NonlinearBbgky,     // d/dt (G,u): partition products, weight u+1, states
  DualLiouville,      // d/dt (A,u): plain derivatives, weight u, observables
  DualBbgky,          // d/dt (B,u): derivative subset sums, weight u, observables
};

inline FunctionalEquation functional_equation_from_name(const std::string& name) {
  if (name == "func_liouv" || name == "fh1nD") return FunctionalEquation::Liouville;
  if (name == "fh1" || name == "fh1nF") return FunctionalEquation::Bbgky;
  if (name == "eqfg" || name == "eqfg_2") return FunctionalEquation::LiouvilleHierarchy;
  if (name == "eqfG" || name == "eqfG_2") return FunctionalEquation::NonlinearBbgky;
  if (name == "func_liouvdual" || name == "fh1nA") return FunctionalEquation::DualLiouville;
  if (name == "fh2" || name == "fh2g") return FunctionalEquation::DualBbgky;
  throw ArgumentError("unknown functional equation id: " + name);
}

namespace detail {

/// Table over (x_1..x_k) of the shifted-sequence functional
/// (f^{(x_1..x_k)}, u), built by exact contraction of trailing arguments.
inline FiniteFunction shift_functional_table(const FiniteSequence& f, int k,
                                             const FiniteFunction& u) {
  const FiniteSpace& sp = f.space();
  const int m = sp.points();
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    int idx = j;
    v[static_cast<std::size_t>(j)] = sp.weight(j) * u.value(std::span<const int>(&idx, 1));
  }
  FiniteFunction out(sp, k);
  std::vector<Accumulator> acc(out.values().size());
  double inv_fact = 1.0;
  for (int mm = 0; k + mm <= f.max_level(); ++mm) {
    if (mm > 0) inv_fact /= mm;
    std::vector<double> cur = f.component(k + mm).values();
    for (int level = 0; level < mm; ++level) {
      std::size_t block = cur.size() / static_cast<std::size_t>(m);
      std::vector<double> next(block, 0.0);
      for (int j = 0; j < m; ++j)
        for (std::size_t r = 0; r < block; ++r)
          next[r] += v[static_cast<std::size_t>(j)] * cur[r * static_cast<std::size_t>(m) +
                                                          static_cast<std::size_t>(j)];
      cur.swap(next);
    }
    for (std::size_t r = 0; r < acc.size(); ++r) acc[r].add(inv_fact * cur[r]);
  }
  for (std::size_t r = 0; r < acc.size(); ++r) out.values()[r] = acc[r].value();
  return out;
}

}  // namespace detail

/// Two-sided evaluation of an evolution equation in functional derivatives
/// on the finite model.  seq is the solved family at time t and seq_dt its
/// exact time derivative; u is the test function.
inline ResidualReport functional_equation_residual(const FiniteDynamics& dyn,
                                                   const FiniteSequence& seq,
                                                   const FiniteSequence& seq_dt,
                                                   const FiniteFunction& u,
                                                   const std::string& equation_id) {
  const FunctionalEquation eq = functional_equation_from_name(equation_id);
  const FiniteSpace& sp = dyn.space();
  const int m = sp.points();

  const bool weight_shifted = eq == FunctionalEquation::Bbgky ||
                              eq == FunctionalEquation::NonlinearBbgky;
  const bool observables = eq == FunctionalEquation::DualLiouville ||
                           eq == FunctionalEquation::DualBbgky;
  const double side = observables ? -1.0 : 1.0;

  std::vector<double> wu(static_cast<std::size_t>(m));  // w * (u or u+1)
  for (int j = 0; j < m; ++j) {
    int idx = j;
    wu[static_cast<std::size_t>(j)] =
        sp.weight(j) * (u.value(std::span<const int>(&idx, 1)) + (weight_shifted ? 1.0 : 0.0));
  }

  Accumulator rhs;
  {  // kinetic term
    FiniteFunction t1 = detail::shift_functional_table(seq, 1, u);
    FiniteFunction kt1 = dyn.liouvillian().apply_site(t1, 0, side);
    for (int j = 0; j < m; ++j) {
      int idx = j;
      rhs.add(wu[static_cast<std::size_t>(j)] * kt1.value(std::span<const int>(&idx, 1)));
    }
  }
  for (int arity : dyn.liouvillian().interaction_arities()) {
    // derivative combination table over (x_1..x_arity)
    FiniteFunction combo(sp, arity);
    switch (eq) {
      case FunctionalEquation::Liouville:
      case FunctionalEquation::Bbgky:
      case FunctionalEquation::DualLiouville:
        combo = detail::shift_functional_table(seq, arity, u);
        break;
      case FunctionalEquation::LiouvilleHierarchy:
      case FunctionalEquation::NonlinearBbgky: {
        for (const Partition& p : cached_partitions(arity)) {
          std::vector<std::pair<FiniteFunction, std::vector<int>>> factors;
          for (const auto& block : p.blocks)
            factors.emplace_back(
                detail::shift_functional_table(seq, static_cast<int>(block.size()), u), block);
          combo = combo.plus_scaled(
              assemble_product<FiniteFunction>(sp, arity, std::move(factors)), 1.0);
        }
        break;
      }
      case FunctionalEquation::DualBbgky: {
        for (std::uint32_t mask = 1; mask < (1u << arity); ++mask) {
          std::vector<int> axes;
          for (int i = 0; i < arity; ++i)
            if ((mask >> i) & 1u) axes.push_back(i);
          FiniteFunction tk =
              detail::shift_functional_table(seq, static_cast<int>(axes.size()), u);
          combo = combo.plus_scaled(
              assemble_product<FiniteFunction>(sp, arity, {{tk, axes}}), 1.0);
        }
        break;
      }
    }
    FiniteFunction bracketed = dyn.liouvillian().apply_interaction(
        combo, [arity] {
          std::vector<int> axes(static_cast<std::size_t>(arity));
          for (int i = 0; i < arity; ++i) axes[static_cast<std::size_t>(i)] = i;
          return axes;
        }(),
        side);
    // contract with the weight product and 1/arity!
    double inv_fact = 1.0 / static_cast<double>(factorial(arity));
    Odometer odo(arity, m);
    Accumulator term;
    do {
      const auto& idx = odo.index();
      double w = 1.0;
      for (int i = 0; i < arity; ++i) w *= wu[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      term.add(w * bracketed.value(idx));
    } while (odo.advance());
    rhs.add(inv_fact * term.value());
  }

  FiniteFunction u_plain = u;
  double lhs = generating_functional(seq_dt, u_plain);
  ResidualReport report = ResidualReport::make("functional." + equation_id, equation_id,
                                               std::abs(lhs - rhs.value()), 0.0, "finite");
  return report;
}

// ---------------------------------------------------------------------------
// Brute-force oracle and conservation checks
// ---------------------------------------------------------------------------

/// Closed-system oracle: flow D_N with S_N(-t), integrate out N-s variables
/// and normalize.  No cumulant machinery involved.
template <class Dyn, class F = typename Dyn::Function>
F oracle_closed_system(const Dyn& dyn, const InitialData<F>& init, int s, double t) {
  if (init.kind != InitialData<F>::Kind::ClosedSystem)
    throw ArgumentError("oracle_closed_system: closed-system initial data required");
  const int n = init.closed_n;
  if (s < 1 || s > n) throw ArgumentError("oracle_closed_system: need 1 <= s <= N");
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  F flowed = dyn.flow(init.sequence.component(n), -t, all);
  double normalizer =
      init.sequence.component(n).integrate_all() / static_cast<double>(factorial(n));
  if (!(normalizer > 0.0))
    throw ArgumentError("oracle_closed_system: normalizing factor must be positive");
  F out = flowed.integrate_last(n - s).scaled(
      1.0 / (normalizer * static_cast<double>(factorial(n - s))));
  out.info().exact = true;
  return out;
}

/// (S(-t) D(0), I) = (D(0), I): both sides computed independently.
template <class Dyn, class F = typename Dyn::Function>
ResidualReport check_normalization_invariance(const Dyn& dyn, const GradedSequence<F>& d0,
                                              double t, double tolerance) {
  Accumulator lhs, rhs;
  double inv_fact = 1.0;
  for (int n = 0; n <= d0.max_level(); ++n) {
    if (n > 0) inv_fact /= n;
    std::vector<int> axes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) axes[static_cast<std::size_t>(i)] = i;
    lhs.add(inv_fact * dyn.flow(d0.component(n), -t, axes).integrate_all());
    rhs.add(inv_fact * d0.component(n).integrate_all());
  }
  ResidualReport report = ResidualReport::make(
      "normalization_invariance", "normalizing-factor invariance",
      std::abs(lhs.value() - rhs.value()),
      tolerance, ModelTraits<F>::is_finite ? "finite" : "continuous");
  report.t = t;
  return report;
}

}  // namespace hlab
