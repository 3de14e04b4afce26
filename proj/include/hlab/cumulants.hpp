#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hlab/combinatorics.hpp"
#include "hlab/dynamics.hpp"
#include "hlab/graded_sequence.hpp"

namespace hlab {

/// One term of an operator expansion: a signed coefficient and the element
/// groups whose declusterized variables are flowed jointly.  Elements not
/// listed in any group are left untouched.
struct OperatorTerm {
  double coefficient = 1.0;
  std::vector<std::vector<int>> flow_groups;
};

/// Cumulants and reduced cumulants of groups of evolution operators,
/// materialized as explicit term lists.  Terms follow canonical partition
/// order and are applied with compensated summation, since the expansions
/// are alternating.
class CumulantOperator {
 public:
  /// Mobius cumulant over the ground tuple: sum over partitions P of
  /// (-1)^{|P|-1}(|P|-1)! times the product of block flows.
  static CumulantOperator cumulant(ClusterTuple ground, double t, Direction dir) {
    CumulantOperator op(std::move(ground), t, dir);
    for (const Partition& p : cached_partitions(op.ground_.size())) {
      OperatorTerm term;
      term.coefficient = static_cast<double>(mobius_coefficient(p));
      term.flow_groups = p.blocks;
      op.terms_.push_back(std::move(term));
    }
    return op;
  }

  /// Reduced cumulant on an explicit ground (one cluster element followed
  /// by atoms): term k flows the cluster together with the first n-k atoms
  /// in element order and carries weight (-1)^k binom(n,k).
  static CumulantOperator reduced_on(ClusterTuple ground, double t, Direction dir) {
    const int n = ground.size() - 1;
    CumulantOperator op(std::move(ground), t, dir);
    for (int k = 0; k <= n; ++k) {
      OperatorTerm term;
      term.coefficient = static_cast<double>(((k % 2 == 0) ? 1 : -1) * binomial(n, k));
      std::vector<int> group;
      for (int e = 0; e <= n - k; ++e) group.push_back(e);
      term.flow_groups.push_back(std::move(group));
      op.terms_.push_back(std::move(term));
    }
    return op;
  }

  /// Reduced cumulant over ({Y}, x_{s+1},...,x_{s+n}) for states, or
  /// ({Y\X}, X) with canonical ordering for observables.
  static CumulantOperator reduced(int cluster_size, int n, double t, Direction dir) {
    return reduced_on(ClusterTuple::cluster_plus_atoms(cluster_size, n), t, dir);
  }

  const ClusterTuple& ground() const { return ground_; }
  double time() const { return t_; }
  Direction direction() const { return dir_; }
  int order() const { return ground_.size(); }
  const std::vector<OperatorTerm>& terms() const { return terms_; }

  /// Operator time argument under the S(tau) convention: states evolve with
  /// S(-t), observables with S(+t).
  double tau() const { return dir_ == Direction::States ? -t_ : t_; }

  /// Additively perturb one term's coefficient (for mutation testing).
  void perturb_coefficient(std::size_t term_index, double delta) {
    if (term_index >= terms_.size()) throw ArgumentError("perturb_coefficient: no such term");
    terms_[term_index].coefficient += delta;
  }

  /// Apply to a function whose leading axes carry the ground's particles
  /// (labels declusterize to 1..K; axes beyond K are untouched).  With
  /// time_derivative set, applies d/dt of the operator instead; exact on
  /// the finite model.
  template <class Dyn>
  typename Dyn::Function apply(const Dyn& dyn, const typename Dyn::Function& f,
                               bool time_derivative = false) const {
    using F = typename Dyn::Function;
    using T = ModelTraits<F>;
    if (f.arity() < ground_.particle_count())
      throw ArgumentError("CumulantOperator: function arity below ground particle count");
    const double sign_dt = dir_ == Direction::States ? 1.0 : -1.0;

    if constexpr (T::is_finite) {
      std::vector<std::pair<F, double>> items;
      items.reserve(terms_.size());
      for (const OperatorTerm& term : terms_) {
        F g = f;
        for (const auto& group : term.flow_groups)
          g = dyn.flow(g, tau(), block_axes(ground_, group));
        if (!time_derivative) {
          items.emplace_back(std::move(g), term.coefficient);
        } else {
          for (const auto& group : term.flow_groups)
            items.emplace_back(dyn.generator(g, block_axes(ground_, group), sign_dt),
                               term.coefficient);
        }
      }
      return T::linear_combination(f.space(), f.arity(), items);
    } else {
      if (time_derivative)
        throw NotSupportedError("CumulantOperator: exact time derivative needs the finite model");
      // Pointwise evaluation: per term, flow each group's coordinates.
      std::vector<std::vector<std::vector<int>>> group_axes;
      std::vector<double> coeffs;
      for (const OperatorTerm& term : terms_) {
        std::vector<std::vector<int>> axes;
        for (const auto& group : term.flow_groups) axes.push_back(block_axes(ground_, group));
        group_axes.push_back(std::move(axes));
        coeffs.push_back(term.coefficient);
      }
      const Hamiltonian* h = &dyn.hamiltonian();
      const int cpp = dyn.space().coords_per_particle();
      const double tv = tau();
      F self = f;
      return F(dyn.space(), f.arity(),
               [self, h, cpp, tv, group_axes = std::move(group_axes),
                coeffs = std::move(coeffs)](std::span<const double> x) {
                 Accumulator acc;
                 std::vector<double> pt(x.size());
                 std::vector<double> block;
                 for (std::size_t ti = 0; ti < coeffs.size(); ++ti) {
                   std::copy(x.begin(), x.end(), pt.begin());
                   for (const auto& axes : group_axes[ti]) {
                     block.resize(axes.size() * static_cast<std::size_t>(cpp));
                     for (std::size_t i = 0; i < axes.size(); ++i)
                       std::copy_n(pt.begin() + axes[i] * cpp, cpp,
                                   block.begin() + static_cast<std::ptrdiff_t>(i) * cpp);
                     h->flow_points(static_cast<int>(axes.size()), tv, block);
                     for (std::size_t i = 0; i < axes.size(); ++i)
                       std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(i) * cpp, cpp,
                                   pt.begin() + axes[i] * cpp);
                   }
                   acc.add(coeffs[ti] * self.value(pt));
                 }
                 return acc.value();
               });
    }
  }

  /// Dense operator embedding: op on the listed axes, identity elsewhere.
  static Eigen::MatrixXd embed_operator(const FiniteSpace& sp, const Eigen::MatrixXd& op,
                                        const std::vector<int>& axes, int m_total) {
    const std::size_t dim = sp.table_size(m_total);
    const int m = sp.points();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim));
    std::vector<std::size_t> stride(static_cast<std::size_t>(m_total), 1);
    for (int a = m_total - 2; a >= 0; --a)
      stride[static_cast<std::size_t>(a)] =
          stride[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(m);
    std::size_t fiber = sp.table_size(static_cast<int>(axes.size()));
    std::vector<std::size_t> fiber_off(fiber, 0);
    for (std::size_t r = 0; r < fiber; ++r) {
      std::size_t rem = r, off = 0;
      for (int i = static_cast<int>(axes.size()) - 1; i >= 0; --i) {
        off += (rem % static_cast<std::size_t>(m)) *
               stride[static_cast<std::size_t>(axes[static_cast<std::size_t>(i)])];
        rem /= static_cast<std::size_t>(m);
      }
      fiber_off[r] = off;
    }
    std::vector<int> others;
    for (int a = 0; a < m_total; ++a)
      if (std::find(axes.begin(), axes.end(), a) == axes.end()) others.push_back(a);
    Odometer odo(static_cast<int>(others.size()), m);
    do {
      std::size_t base = 0;
      const auto& oidx = odo.index();
      for (std::size_t r = 0; r < others.size(); ++r)
        base += static_cast<std::size_t>(oidx[r]) * stride[static_cast<std::size_t>(others[r])];
      for (std::size_t rf = 0; rf < fiber; ++rf)
        for (std::size_t cf = 0; cf < fiber; ++cf)
          out(static_cast<Eigen::Index>(base + fiber_off[rf]),
              static_cast<Eigen::Index>(base + fiber_off[cf])) +=
              op(static_cast<Eigen::Index>(rf), static_cast<Eigen::Index>(cf));
    } while (odo.advance());
    return out;
  }

  /// Dense matrix of the operator on the finite model, acting on
  /// ground-particle axes plus `extra_axes` untouched trailing particles.
  Eigen::MatrixXd dense(const FiniteDynamics& dyn, int extra_axes = 0) const {
    const FiniteSpace& sp = dyn.space();
    const int m_total = ground_.particle_count() + extra_axes;
    const std::size_t dim = sp.table_size(m_total);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim));
    for (const OperatorTerm& term : terms_) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim),
                                                      static_cast<Eigen::Index>(dim));
      for (const auto& group : term.flow_groups) {
        auto axes = block_axes(ground_, group);
        acc = embed_operator(sp,
                             dyn.liouvillian().flow_matrix(static_cast<int>(axes.size()), tau()),
                             axes, m_total) *
              acc;
      }
      out += term.coefficient * acc;
    }
    return out;
  }

 private:
  CumulantOperator(ClusterTuple ground, double t, Direction dir)
      : ground_(std::move(ground)), t_(t), dir_(dir) {
    const auto& labels = ground_.declusterize().labels();
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] != static_cast<Label>(i + 1))
        throw ArgumentError("CumulantOperator: ground labels must be 1..K");
  }

  ClusterTuple ground_;
  double t_;
  Direction dir_;
  std::vector<OperatorTerm> terms_;
};

/// Optional hook applied to every cumulant a solver builds; the mutation
/// tests use it to knock single coefficients off their exact values.
using CumulantTweak = std::function<void(CumulantOperator&)>;

inline CumulantOperator make_cumulant(const ClusterTuple& ground, double t, Direction dir,
                                      const CumulantTweak& tweak = nullptr) {
  CumulantOperator op = CumulantOperator::cumulant(ground, t, dir);
  if (tweak) tweak(op);
  return op;
}

/// Ground tuple whose elements are the given clusters.
inline ClusterTuple make_cluster_ground(const std::vector<IndexSet>& clusters) {
  std::vector<ClusterElement> elems;
  for (const IndexSet& c : clusters) elems.push_back(ClusterElement::cluster(c));
  return ClusterTuple(std::move(elems));
}

/// Cumulant over a sub-tuple whose labels need not be 1..K: relabel by rank.
/// Apply the result through dense_on_axes or to gathered sub-tables.
inline CumulantOperator relabelled_cumulant(const ClusterTuple& sub, double t, Direction dir,
                                            const CumulantTweak& tweak = nullptr) {
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
  return make_cumulant(ClusterTuple(std::move(elems)), t, dir, tweak);
}

/// Dense matrix of a (relabelled) cumulant acting on the given global axes.
inline Eigen::MatrixXd dense_on_axes(const FiniteDynamics& dyn, const CumulantOperator& op,
                                     const std::vector<int>& axes, int m_total) {
  return CumulantOperator::embed_operator(dyn.space(), op.dense(dyn), axes, m_total);
}

/// Product function whose factors sit on the listed particle positions.
template <class F>
F assemble_product(const typename ModelTraits<F>::Space& sp, int arity,
                   std::vector<std::pair<F, std::vector<int>>> factors) {
  using T = ModelTraits<F>;
  for (const auto& [f, axes] : factors)
    if (f.arity() != static_cast<int>(axes.size()))
      throw ArgumentError("assemble_product: factor arity does not match axes");
  return T::make(sp, arity, [factors = std::move(factors)](typename T::Args x) {
    double prod = 1.0;
    for (const auto& [f, axes] : factors) prod *= T::eval_gather(f, x, axes);
    return prod;
  });
}

/// Initial data for cluster-argument evolution: maps a sub-tuple to its
/// initial function (arity = particle count, arguments in sorted label
/// order).
template <class F>
using ClusterInitialData = std::function<F(const ClusterTuple&)>;

/// The evolution operator of the correlation-function hierarchy:
///   sum over partitions P of the ground of
///   A_{|P|}(-t, {theta(B_1)},...,{theta(B_|P|)}) prod_i initial(B_i).
template <class Dyn>
typename Dyn::Function cluster_evolution(const Dyn& dyn, const ClusterTuple& ground, double t,
                                         const ClusterInitialData<typename Dyn::Function>& initial,
                                         bool time_derivative = false,
                                         const CumulantTweak& tweak = nullptr) {
  using F = typename Dyn::Function;
  using T = ModelTraits<F>;
  const int m = ground.particle_count();
  std::vector<std::pair<F, double>> pieces;
  for (const Partition& p : cached_partitions(ground.size())) {
    std::vector<std::pair<F, std::vector<int>>> factors;
    std::vector<IndexSet> clusters;
    for (const auto& block : p.blocks) {
      ClusterTuple sub = ground.subset(block);
      factors.emplace_back(initial(sub), block_axes(ground, block));
      clusters.push_back(sub.declusterize());
    }
    F product = assemble_product<F>(dyn.space(), m, std::move(factors));
    CumulantOperator op = relabelled_cumulant(make_cluster_ground(clusters), t, Direction::States, tweak);
    pieces.emplace_back(op.apply(dyn, product, time_derivative), 1.0);
  }
  return T::linear_combination(dyn.space(), m, pieces);
}

/// Reduced cumulant of the nonlinear hierarchy: alternating binomial sum
/// over k of partition sums with cluster cumulants; the k reservoir
/// variables are distributed over the canonically ordered blocks in
/// contiguous runs with nested binomial weights, each block paired with the
/// correspondingly extended initial component.  Result has arity s + n.
template <class Dyn, class F = typename Dyn::Function>
F nonlinear_reduced_cumulant(const Dyn& dyn, int s, int n, double t, const GradedSequence<F>& g0,
                             bool time_derivative = false, const CumulantTweak& tweak = nullptr) {
  using T = ModelTraits<F>;
  if (s < 1) throw ArgumentError("nonlinear_reduced_cumulant: need s >= 1");
  const int total = s + n;
  std::vector<std::pair<F, double>> pieces;

  for (int k = 0; k <= n; ++k) {
    const int m = total - k;  // flowed particles
    double outer = static_cast<double>(((k % 2 == 0) ? 1 : -1) * binomial(n, k));
    for (const Partition& p : cached_partitions(m)) {
      std::vector<IndexSet> clusters;
      for (const auto& block : p.blocks) {
        std::vector<Label> labels;
        for (int e : block) labels.push_back(e + 1);
        clusters.push_back(IndexSet(labels));
      }
      CumulantOperator op = make_cumulant(make_cluster_ground(clusters), t, Direction::States, tweak);

      // Block i takes the contiguous run of reservoir variables
      // [total-k_{i-1}, total-k_i) with weight binom(k_{i-1}, k_i).
      std::vector<int> runs(static_cast<std::size_t>(p.block_count()), 0);
      std::function<void(int, int, double)> distribute = [&](int block, int remaining,
                                                             double coeff) {
        if (block == p.block_count() - 1) {
          runs[static_cast<std::size_t>(block)] = remaining;
          std::vector<std::pair<F, std::vector<int>>> factors;
          int consumed = 0;
          for (int b = 0; b < p.block_count(); ++b) {
            std::vector<int> axes(p.blocks[static_cast<std::size_t>(b)]);
            for (int r = 0; r < runs[static_cast<std::size_t>(b)]; ++r)
              axes.push_back(m + consumed + r);
            consumed += runs[static_cast<std::size_t>(b)];
            int comp = static_cast<int>(axes.size());
            if (comp > g0.max_level())
              throw ArgumentError("nonlinear_reduced_cumulant: initial data misses component " +
                                  std::to_string(comp));
            factors.emplace_back(g0.component(comp), std::move(axes));
          }
          F product = assemble_product<F>(dyn.space(), total, std::move(factors));
          pieces.emplace_back(op.apply(dyn, product, time_derivative), outer * coeff);
          return;
        }
        for (int next = 0; next <= remaining; ++next) {
          runs[static_cast<std::size_t>(block)] = remaining - next;
          distribute(block + 1, next, coeff * static_cast<double>(binomial(remaining, next)));
        }
      };
      distribute(0, k, 1.0);
    }
  }
  return T::linear_combination(dyn.space(), total, pieces);
}

/// Reconstruction checks for the cluster expansions (finite model, dense).
struct ClusterExpansionReport {
  double states_deviation = 0.0;
  double dual_deviation = 0.0;
  bool pass(double tol) const { return states_deviation <= tol && dual_deviation <= tol; }
};

/// States: rebuild S_{s+n}(-t, Y, X\Y) from cumulant blocks over the ground
/// ({Y}, X\Y).  Dual (needs n < s): check the signed binomial recurrence
/// for (-1)^n S_{s-n}(t, Y\X) on functions independent of X.
inline ClusterExpansionReport verify_cluster_expansion(const FiniteDynamics& dyn, int s, int n,
                                                       double t,
                                                       const CumulantTweak& tweak = nullptr,
                                                       std::uint64_t seed = 2024) {
  ClusterExpansionReport report;
  const FiniteSpace& sp = dyn.space();

  {  // states direction, ground ({Y}, x_{s+1..s+n})
    ClusterTuple ground = ClusterTuple::cluster_plus_atoms(s, n);
    const int m = ground.particle_count();
    const std::size_t dim = sp.table_size(m);
    Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                  static_cast<Eigen::Index>(dim));
    for (const Partition& p : cached_partitions(ground.size())) {
      Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim),
                                                       static_cast<Eigen::Index>(dim));
      for (const auto& block : p.blocks) {
        ClusterTuple sub = ground.subset(block);
        CumulantOperator sub_op = relabelled_cumulant(sub, t, Direction::States, tweak);
        prod = dense_on_axes(dyn, sub_op, block_axes(ground, block), m) * prod;
      }
      recon += prod;
    }
    report.states_deviation =
        (recon - dyn.liouvillian().flow_matrix(m, -t)).cwiseAbs().maxCoeff();
  }

  if (n < s) {  // dual recurrence on functions independent of X = last n labels
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    FiniteFunction b(sp, s - n);
    for (double& v : b.values()) v = dist(gen);
    std::vector<int> lead(static_cast<std::size_t>(s - n));
    for (int i = 0; i < s - n; ++i) lead[static_cast<std::size_t>(i)] = i;
    FiniteFunction extended = assemble_product<FiniteFunction>(sp, s, {{b, lead}});

    FiniteFunction lhs = dyn.flow(extended, t, lead).scaled((n % 2 == 0) ? 1.0 : -1.0);

    FiniteFunction rhs(sp, s);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<Label> removed;
      for (int i = 0; i < n; ++i)
        if ((mask >> i) & 1u) removed.push_back(s - n + i + 1);
      int k = static_cast<int>(removed.size());
      std::vector<Label> kept;
      for (Label l = 1; l <= s; ++l)
        if (std::find(removed.begin(), removed.end(), l) == removed.end()) kept.push_back(l);
      std::vector<ClusterElement> elems{ClusterElement::cluster(IndexSet(kept))};
      for (Label l : removed) elems.push_back(ClusterElement::atom(l));
      CumulantOperator op =
          make_cumulant(ClusterTuple(std::move(elems)), t, Direction::Observables, tweak);
      double sign = ((n - k) % 2 == 0) ? 1.0 : -1.0;
      rhs = rhs.plus_scaled(op.apply(dyn, extended), sign);
    }
    report.dual_deviation = lhs.max_abs_diff(rhs);
  }
  return report;
}

}  // namespace hlab
