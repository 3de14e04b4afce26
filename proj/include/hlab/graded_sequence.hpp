#pragma once

#include <map>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hlab/combinatorics.hpp"
#include "hlab/errors.hpp"
#include "hlab/numeric.hpp"
#include "hlab/particle_function.hpp"

namespace hlab {

inline const std::vector<Partition>& cached_partitions(int k) {
  static std::mutex mu;
  static std::map<int, std::vector<Partition>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, enumerate_partitions(k)).first;
  return it->second;
}

/// A sequence f = (f_0, f_1, ..., f_{n_max}) of symmetric n-particle
/// functions; the universal carrier for states, observables and correlation
/// functions.  Component n has arity n; component 0 is a scalar.
template <class F>
class GradedSequence {
 public:
  using Traits = ModelTraits<F>;
  using Space = typename Traits::Space;

  GradedSequence() = default;

  /// All-zero sequence up to n_max (n_max = -1 gives the empty sequence).
  GradedSequence(const Space& space, int n_max) : space_(&space) {
    for (int n = 0; n <= n_max; ++n) comps_.push_back(F(space, n));
  }

  static GradedSequence zero(const Space& space, int n_max) { return GradedSequence(space, n_max); }

  /// The unit sequence (1, 0, 0, ...).
  static GradedSequence one(const Space& space, int n_max) {
    GradedSequence s(space, n_max);
    s.component(0) = F::constant(space, 0, 1.0);
    return s;
  }

  explicit GradedSequence(const Space& space, std::vector<F> comps)
      : space_(&space), comps_(std::move(comps)) {
    for (int n = 0; n <= max_level(); ++n)
      if (comps_[static_cast<std::size_t>(n)].arity() != n)
        throw ArgumentError("GradedSequence: component " + std::to_string(n) + " has wrong arity");
  }

  const Space& space() const { return *space_; }
  int max_level() const { return static_cast<int>(comps_.size()) - 1; }
  bool empty() const { return comps_.empty(); }

  const F& component(int n) const {
    if (n < 0 || n > max_level())
      throw ArgumentError("GradedSequence: missing component " + std::to_string(n));
    return comps_[static_cast<std::size_t>(n)];
  }
  F& component(int n) {
    if (n < 0 || n > max_level())
      throw ArgumentError("GradedSequence: missing component " + std::to_string(n));
    return comps_[static_cast<std::size_t>(n)];
  }

  double scalar_component() const { return component(0).scalar(); }

  SeriesInfo& info() { return info_; }
  const SeriesInfo& info() const { return info_; }

  GradedSequence plus_scaled(const GradedSequence& o, double c) const {
    if (max_level() != o.max_level()) throw ArgumentError("GradedSequence: level mismatch");
    GradedSequence out = *this;
    for (int n = 0; n <= max_level(); ++n)
      out.component(n) = component(n).plus_scaled(o.component(n), c);
    return out;
  }

  GradedSequence scaled(double c) const {
    GradedSequence out = *this;
    for (int n = 0; n <= max_level(); ++n) out.component(n) = component(n).scaled(c);
    return out;
  }

  /// Truncate or zero-extend to the given level.
  GradedSequence resized(int n_max) const {
    GradedSequence out(*space_, n_max);
    for (int n = 0; n <= std::min(n_max, max_level()); ++n) out.component(n) = component(n);
    out.info_ = info_;
    return out;
  }

 private:
  const Space* space_ = nullptr;
  std::vector<F> comps_;
  SeriesInfo info_;
};

using FiniteSequence = GradedSequence<FiniteFunction>;
using ContinuousSequence = GradedSequence<ContinuousFunction>;

// ---------------------------------------------------------------------------
// Basic operations
// ---------------------------------------------------------------------------

/// Integrate out the last k arguments of an n-particle function.
template <class F>
F integrate_out(const F& f, int k) {
  if (k > f.arity()) throw ArgumentError("integrate_out: k exceeds arity");
  return f.integrate_last(k);
}

/// (f * g)_{|Y|}(Y) = sum over subsets Z of Y of f_{|Z|}(Z) g_{|Y\Z|}(Y\Z).
template <class F>
GradedSequence<F> star_product(const GradedSequence<F>& a, const GradedSequence<F>& b) {
  using T = ModelTraits<F>;
  if (!(a.space() == b.space())) throw ArgumentError("star_product: state spaces differ");
  int n_max = std::min(a.max_level(), b.max_level());
  GradedSequence<F> out(a.space(), n_max);
  for (int s = 0; s <= n_max; ++s) {
    out.component(s) = T::make(a.space(), s, [&a, &b, s](typename T::Args x) {
      Accumulator acc;
      std::vector<int> za, zb;
      za.reserve(static_cast<std::size_t>(s));
      zb.reserve(static_cast<std::size_t>(s));
      for (std::uint32_t mask = 0; mask < (1u << s); ++mask) {
        za.clear();
        zb.clear();
        for (int i = 0; i < s; ++i)
          ((mask >> i) & 1u) ? za.push_back(i) : zb.push_back(i);
        acc.add(T::eval_gather(a.component(static_cast<int>(za.size())), x, za) *
                T::eval_gather(b.component(static_cast<int>(zb.size())), x, zb));
      }
      return acc.value();
    });
  }
  out.info().truncation_order = n_max;
  out.info().exact = a.info().exact && b.info().exact;
  return out;
}

/// (Exp* f)_{|Y|}(Y) = delta_{|Y|,0} + sum over partitions P of Y of the
/// block products of f.  Requires f_0 = 0.
template <class F>
GradedSequence<F> exp_star(const GradedSequence<F>& f) {
  using T = ModelTraits<F>;
  if (f.empty() || f.scalar_component() != 0.0)
    throw PreconditionError("exp_star: scalar component must vanish");
  GradedSequence<F> out(f.space(), f.max_level());
  out.component(0) = F::constant(f.space(), 0, 1.0);
  for (int s = 1; s <= f.max_level(); ++s) {
    const auto& parts = cached_partitions(s);
    out.component(s) = T::make(f.space(), s, [&f, &parts](typename T::Args x) {
      Accumulator acc;
      for (const Partition& p : parts) {
        double prod = 1.0;
        for (const auto& block : p.blocks)
          prod *= T::eval_gather(f.component(static_cast<int>(block.size())), x, block);
        acc.add(prod);
      }
      return acc.value();
    });
  }
  return out;
}

/// Inverse of exp_star: signed partition sum with Mobius coefficients.
/// Requires h_0 = 1.
template <class F>
GradedSequence<F> ln_star(const GradedSequence<F>& h) {
  using T = ModelTraits<F>;
  if (h.empty() || h.scalar_component() != 1.0)
    throw PreconditionError("ln_star: scalar component must equal one");
  GradedSequence<F> out(h.space(), h.max_level());
  for (int s = 1; s <= h.max_level(); ++s) {
    const auto& parts = cached_partitions(s);
    out.component(s) = T::make(h.space(), s, [&h, &parts](typename T::Args x) {
      Accumulator acc;
      for (const Partition& p : parts) {
        double prod = static_cast<double>(mobius_coefficient(p));
        for (const auto& block : p.blocks)
          prod *= T::eval_gather(h.component(static_cast<int>(block.size())), x, block);
        acc.add(prod);
      }
      return acc.value();
    });
  }
  return out;
}

/// (f, u) = sum_n (1/n!) int f_n u(x_1)...u(x_n) dx.  Exact weighted sums on
/// the finite model, quadrature otherwise.
template <class F>
double generating_functional(const GradedSequence<F>& f, const F& u) {
  using T = ModelTraits<F>;
  if (f.empty()) return 0.0;
  if (u.arity() != 1) throw ArgumentError("generating_functional: test function must have arity 1");
  if (!(f.space() == u.space())) throw ArgumentError("generating_functional: state spaces differ");
  Accumulator total;
  double inv_fact = 1.0;
  for (int n = 0; n <= f.max_level(); ++n) {
    if (n > 0) inv_fact /= n;
    double term;
    if constexpr (T::is_finite) {
      const FiniteSpace& sp = f.space();
      const int m = sp.points();
      std::vector<double> v(static_cast<std::size_t>(m));
      for (int j = 0; j < m; ++j) {
        int idx = j;
        v[static_cast<std::size_t>(j)] = sp.weight(j) * u.value(std::span<const int>(&idx, 1));
      }
      std::vector<double> cur = f.component(n).values();
      for (int level = n; level >= 1; --level) {
        std::size_t block = cur.size() / static_cast<std::size_t>(m);
        std::vector<double> next(block, 0.0);
        for (int j = 0; j < m; ++j)
          for (std::size_t r = 0; r < block; ++r)
            next[r] += v[static_cast<std::size_t>(j)] * cur[static_cast<std::size_t>(j) * block + r];
        cur.swap(next);
      }
      term = cur[0];
    } else {
      F integrand = f.component(n);
      for (int i = 0; i < n; ++i) {
        // multiply by u(x_{i+1}) through an axis-aligned product
        F ucopy = u;
        const int cpp = f.space().coords_per_particle();
        F prev = integrand;
        integrand = F(f.space(), n, [prev, ucopy, i, cpp](std::span<const double> x) {
          return prev.value(x) * ucopy.value(x.subspan(static_cast<std::size_t>(i) * cpp,
                                                       static_cast<std::size_t>(cpp)));
        });
      }
      term = integrand.integrate_all();
    }
    if (!std::isfinite(term)) throw NumericError("generating_functional: non-finite term");
    total.add(inv_fact * term);
  }
  return total.value();
}

/// The shifted sequence f^{(x)} with f^{(x)}_n = f_{1+n}(x, .), so that
/// (d/du(x))(f, u) = (f^{(x)}, u).
template <class F>
GradedSequence<F> functional_derivative(const GradedSequence<F>& f,
                                        const typename ModelTraits<F>::PointArg& x) {
  GradedSequence<F> out(f.space(), f.max_level() - 1);
  for (int n = 0; n < f.max_level(); ++n) out.component(n) = f.component(n + 1).bind_first(x);
  return out;
}

/// (a f)_n = int f_{n+1} dx_{n+1}.
template <class F>
GradedSequence<F> annihilate(const GradedSequence<F>& f) {
  GradedSequence<F> out(f.space(), f.max_level() - 1);
  for (int n = 0; n < f.max_level(); ++n) out.component(n) = f.component(n + 1).integrate_last(1);
  return out;
}

/// (e^a f)_s = sum_n (1/n!) int f_{s+n} dx_{s+1}...dx_{s+n}, truncated at the
/// input's level.
template <class F>
GradedSequence<F> exp_annihilate(const GradedSequence<F>& f) {
  using T = ModelTraits<F>;
  GradedSequence<F> out(f.space(), f.max_level());
  for (int s = 0; s <= f.max_level(); ++s) {
    std::vector<std::pair<F, double>> items;
    double inv_fact = 1.0;
    for (int n = 0; s + n <= f.max_level(); ++n) {
      if (n > 0) inv_fact /= n;
      items.emplace_back(f.component(s + n).integrate_last(n), inv_fact);
    }
    out.component(s) = T::linear_combination(f.space(), s, items);
  }
  out.info().truncation_order = f.max_level();
  return out;
}

/// (a+ b)_s(x_1,...,x_s) = sum_j b_{s-1}((x_1,...,x_s) minus x_j).
template <class F>
GradedSequence<F> create(const GradedSequence<F>& b) {
  using T = ModelTraits<F>;
  GradedSequence<F> out(b.space(), b.max_level() + 1);
  for (int s = 1; s <= b.max_level() + 1; ++s) {
    out.component(s) = T::make(b.space(), s, [&b, s](typename T::Args x) {
      Accumulator acc;
      std::vector<int> rest;
      rest.reserve(static_cast<std::size_t>(s - 1));
      for (int j = 0; j < s; ++j) {
        rest.clear();
        for (int i = 0; i < s; ++i)
          if (i != j) rest.push_back(i);
        acc.add(T::eval_gather(b.component(s - 1), x, rest));
      }
      return acc.value();
    });
  }
  return out;
}

/// (e^{sign a+} A)_s = sum over subsets T of the arguments of
/// sign^{|T|} A_{s-|T|}(remaining arguments).  sign = -1 gives the marginal
/// observable map, sign = +1 its inverse.
template <class F>
GradedSequence<F> exp_create(const GradedSequence<F>& a, double sign) {
  using T = ModelTraits<F>;
  GradedSequence<F> out(a.space(), a.max_level());
  out.component(0) = a.component(0);
  for (int s = 1; s <= a.max_level(); ++s) {
    out.component(s) = T::make(a.space(), s, [&a, s, sign](typename T::Args x) {
      Accumulator acc;
      std::vector<int> rest;
      rest.reserve(static_cast<std::size_t>(s));
      for (std::uint32_t mask = 0; mask < (1u << s); ++mask) {
        rest.clear();
        double c = 1.0;
        for (int i = 0; i < s; ++i) {
          if ((mask >> i) & 1u)
            c *= sign;
          else
            rest.push_back(i);
        }
        acc.add(c * T::eval_gather(a.component(static_cast<int>(rest.size())), x, rest));
      }
      return acc.value();
    });
  }
  return out;
}

/// Componentwise form of the marginal-observable map B = e^{-a+} A.
template <class F>
GradedSequence<F> exp_create_neg(const GradedSequence<F>& a) {
  return exp_create(a, -1.0);
}

/// Mean value pairing <b, f> = sum_s (1/s!) int b_s f_s dx_1...dx_s.
template <class F>
double duality_pairing(const GradedSequence<F>& b, const GradedSequence<F>& f) {
  if (!(b.space() == f.space())) throw ArgumentError("duality_pairing: state spaces differ");
  Accumulator acc;
  double inv_fact = 1.0;
  int top = std::min(b.max_level(), f.max_level());
  for (int s = 0; s <= top; ++s) {
    if (s > 0) inv_fact /= s;
    acc.add(inv_fact * b.component(s).multiply(f.component(s)).integrate_all());
  }
  return acc.value();
}

/// Largest componentwise deviation between two sequences (finite model).
inline double max_component_diff(const FiniteSequence& a, const FiniteSequence& b) {
  int top = std::min(a.max_level(), b.max_level());
  double worst = 0.0;
  for (int n = 0; n <= top; ++n)
    worst = std::max(worst, a.component(n).max_abs_diff(b.component(n)));
  return worst;
}

}  // namespace hlab
