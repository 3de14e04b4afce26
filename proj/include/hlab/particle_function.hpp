#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "hlab/errors.hpp"
#include "hlab/numeric.hpp"
#include "hlab/state_space.hpp"

namespace hlab {

/// Truncation bookkeeping for series-valued results.  order < 0 means the
/// value is a complete (untruncated) expression.
struct SeriesInfo {
  int truncation_order = -1;
  bool exact = true;
};

// ---------------------------------------------------------------------------
// Finite model: dense M^n tables
// ---------------------------------------------------------------------------

/// A symmetric n-particle function on the finite phase model, stored as a
/// dense row-major table of M^n values.
class FiniteFunction {
 public:
  FiniteFunction(const FiniteSpace& space, int arity)
      : space_(&space), arity_(arity), values_(space.table_size(arity), 0.0) {}

  FiniteFunction(const FiniteSpace& space, int arity, std::vector<double> values)
      : space_(&space), arity_(arity), values_(std::move(values)) {
    if (values_.size() != space.table_size(arity))
      throw ArgumentError("FiniteFunction: table size does not match arity");
  }

  static FiniteFunction constant(const FiniteSpace& space, int arity, double c) {
    FiniteFunction f(space, arity);
    std::fill(f.values_.begin(), f.values_.end(), c);
    return f;
  }

  int arity() const { return arity_; }
  const FiniteSpace& space() const { return *space_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  SeriesInfo& info() { return info_; }
  const SeriesInfo& info() const { return info_; }

  std::size_t offset(std::span<const int> idx) const {
    assert(static_cast<int>(idx.size()) == arity_);
    std::size_t off = 0;
    for (int i = 0; i < arity_; ++i) {
      assert(idx[i] >= 0 && idx[i] < space_->points());
      off = off * static_cast<std::size_t>(space_->points()) + static_cast<std::size_t>(idx[i]);
    }
    return off;
  }

  double value(std::span<const int> idx) const { return values_[offset(idx)]; }
  double& at(std::span<const int> idx) { return values_[offset(idx)]; }

  double scalar() const {
    if (arity_ != 0) throw ArgumentError("FiniteFunction: scalar() on non-scalar");
    return values_[0];
  }

  // -- linear structure ------------------------------------------------------

  FiniteFunction plus_scaled(const FiniteFunction& o, double c) const {
    require_same_shape(o);
    FiniteFunction out = *this;
    for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] += c * o.values_[i];
    return out;
  }

  FiniteFunction scaled(double c) const {
    FiniteFunction out = *this;
    for (double& v : out.values_) v *= c;
    return out;
  }

  FiniteFunction multiply(const FiniteFunction& o) const {
    require_same_shape(o);
    FiniteFunction out = *this;
    for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] *= o.values_[i];
    return out;
  }

  /// Tensor product: arguments of *this first, then o's.
  FiniteFunction outer(const FiniteFunction& o) const {
    FiniteFunction out(*space_, arity_ + o.arity_);
    std::size_t inner = o.values_.size();
    for (std::size_t a = 0; a < values_.size(); ++a)
      for (std::size_t b = 0; b < inner; ++b) out.values_[a * inner + b] = values_[a] * o.values_[b];
    return out;
  }

  // -- integration -----------------------------------------------------------

  /// Integrate out the listed axes against the weights; arity drops.
  FiniteFunction integrate_axes(std::vector<int> axes) const {
    std::sort(axes.begin(), axes.end());
    for (std::size_t i = 0; i < axes.size(); ++i) {
      if (axes[i] < 0 || axes[i] >= arity_) throw ArgumentError("integrate_axes: axis out of range");
      if (i > 0 && axes[i] == axes[i - 1]) throw ArgumentError("integrate_axes: repeated axis");
    }
    const int m = space_->points();
    FiniteFunction out(*space_, arity_ - static_cast<int>(axes.size()));
    std::vector<int> remaining;
    for (int a = 0; a < arity_; ++a)
      if (!std::binary_search(axes.begin(), axes.end(), a)) remaining.push_back(a);

    std::vector<int> full(static_cast<std::size_t>(arity_), 0);
    Odometer outer_odo(static_cast<int>(remaining.size()), m);
    std::size_t out_off = 0;
    do {
      const auto& oidx = outer_odo.index();
      for (std::size_t r = 0; r < remaining.size(); ++r)
        full[static_cast<std::size_t>(remaining[r])] = oidx[r];
      Accumulator acc;
      Odometer inner_odo(static_cast<int>(axes.size()), m);
      do {
        const auto& iidx = inner_odo.index();
        double w = 1.0;
        for (std::size_t r = 0; r < axes.size(); ++r) {
          full[static_cast<std::size_t>(axes[r])] = iidx[r];
          w *= space_->weight(iidx[r]);
        }
        acc.add(w * value(full));
      } while (inner_odo.advance());
      out.values_[out_off++] = acc.value();
    } while (outer_odo.advance());
    return out;
  }

  FiniteFunction integrate_last(int k) const {
    if (k < 0 || k > arity_) throw ArgumentError("integrate_last: k out of range");
    std::vector<int> axes(static_cast<std::size_t>(k));
    std::iota(axes.begin(), axes.end(), arity_ - k);
    return integrate_axes(std::move(axes));
  }

  double integrate_all() const { return integrate_last(arity_).values()[0]; }

  // -- operator application --------------------------------------------------

  /// Apply a dense operator on the listed (strictly ascending) axes.  op acts
  /// on M^k with row-major combined indices in axis order.
  FiniteFunction apply_matrix(const Eigen::MatrixXd& op, std::span<const int> axes) const {
    const int k = static_cast<int>(axes.size());
    const int m = space_->points();
    std::size_t fiber = 1;
    for (int i = 0; i < k; ++i) fiber *= static_cast<std::size_t>(m);
    if (op.rows() != static_cast<Eigen::Index>(fiber) || op.cols() != op.rows())
      throw ArgumentError("apply_matrix: operator size does not match axes");
    for (int i = 0; i < k; ++i) {
      if (axes[i] < 0 || axes[i] >= arity_) throw ArgumentError("apply_matrix: axis out of range");
      if (i > 0 && axes[i] <= axes[i - 1]) throw ArgumentError("apply_matrix: axes must ascend");
    }

    std::vector<std::size_t> stride(static_cast<std::size_t>(arity_), 1);
    for (int a = arity_ - 2; a >= 0; --a)
      stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(m);

    std::vector<std::size_t> fiber_off(fiber, 0);
    for (std::size_t r = 0; r < fiber; ++r) {
      std::size_t rem = r, off = 0;
      for (int i = k - 1; i >= 0; --i) {
        off += (rem % static_cast<std::size_t>(m)) * stride[static_cast<std::size_t>(axes[i])];
        rem /= static_cast<std::size_t>(m);
      }
      fiber_off[r] = off;
    }

    std::vector<int> others;
    for (int a = 0; a < arity_; ++a)
      if (std::find(axes.begin(), axes.end(), a) == axes.end()) others.push_back(a);

    FiniteFunction out(*space_, arity_);
    Eigen::VectorXd x(static_cast<Eigen::Index>(fiber)), y;
    Odometer odo(static_cast<int>(others.size()), m);
    do {
      std::size_t base = 0;
      const auto& oidx = odo.index();
      for (std::size_t r = 0; r < others.size(); ++r)
        base += static_cast<std::size_t>(oidx[r]) * stride[static_cast<std::size_t>(others[r])];
      for (std::size_t r = 0; r < fiber; ++r) x(static_cast<Eigen::Index>(r)) = values_[base + fiber_off[r]];
      y = op * x;
      for (std::size_t r = 0; r < fiber; ++r) out.values_[base + fiber_off[r]] = y(static_cast<Eigen::Index>(r));
    } while (odo.advance());
    return out;
  }

  // -- argument manipulation -------------------------------------------------

  FiniteFunction bind_first(int point) const {
    if (arity_ < 1) throw ArgumentError("bind_first: scalar function");
    if (point < 0 || point >= space_->points()) throw ArgumentError("bind_first: point out of range");
    FiniteFunction out(*space_, arity_ - 1);
    std::size_t block = out.values_.size();
    std::copy(values_.begin() + static_cast<std::ptrdiff_t>(block * static_cast<std::size_t>(point)),
              values_.begin() + static_cast<std::ptrdiff_t>(block * static_cast<std::size_t>(point + 1)),
              out.values_.begin());
    return out;
  }

  /// result(j_0,...,j_{n-1}) = this(j_{perm[0]},...,j_{perm[n-1]}).
  FiniteFunction permute_axes(const std::vector<int>& perm) const {
    if (static_cast<int>(perm.size()) != arity_) throw ArgumentError("permute_axes: bad permutation size");
    FiniteFunction out(*space_, arity_);
    const int m = space_->points();
    std::vector<int> src(static_cast<std::size_t>(arity_));
    Odometer odo(arity_, m);
    std::size_t off = 0;
    do {
      const auto& idx = odo.index();
      for (int i = 0; i < arity_; ++i)
        src[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      out.values_[off++] = value(src);
    } while (odo.advance());
    return out;
  }

  FiniteFunction symmetrized() const {
    if (arity_ <= 1) return *this;
    std::vector<int> perm(static_cast<std::size_t>(arity_));
    std::iota(perm.begin(), perm.end(), 0);
    FiniteFunction acc(*space_, arity_);
    std::int64_t count = 0;
    do {
      acc = acc.plus_scaled(permute_axes(perm), 1.0);
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return acc.scaled(1.0 / static_cast<double>(count));
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double max_abs_diff(const FiniteFunction& o) const {
    require_same_shape(o);
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      m = std::max(m, std::abs(values_[i] - o.values_[i]));
    return m;
  }

  /// Largest |f(x) - f(permuted x)| over sampled permutations.
  double max_symmetry_violation(int samples = 64, std::uint64_t seed = 1) const {
    if (arity_ <= 1) return 0.0;
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> pt(0, space_->points() - 1);
    std::vector<int> idx(static_cast<std::size_t>(arity_)), per(idx.size());
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      for (auto& j : idx) j = pt(gen);
      per = idx;
      std::shuffle(per.begin(), per.end(), gen);
      worst = std::max(worst, std::abs(value(idx) - value(per)));
    }
    return worst;
  }

 private:
  void require_same_shape(const FiniteFunction& o) const {
    if (arity_ != o.arity_ || !(*space_ == *o.space_))
      throw ArgumentError("FiniteFunction: shape or space mismatch");
  }

  const FiniteSpace* space_;
  int arity_;
  std::vector<double> values_;
  SeriesInfo info_;
};

// ---------------------------------------------------------------------------
// Continuous model: evaluable closures over flat coordinate packs
// ---------------------------------------------------------------------------

/// A symmetric n-particle function on continuous phase space.  The argument
/// pack is the flat coordinate vector (q_1, p_1, q_2, p_2, ...), 2*d values
/// per particle.  Compositions stay lazy; integrals run the space's rule.
class ContinuousFunction {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  ContinuousFunction(const ContinuousSpace& space, int arity, Fn f)
      : space_(&space), arity_(arity), fn_(std::make_shared<const Fn>(std::move(f))) {}

  /// Identically zero function.
  ContinuousFunction(const ContinuousSpace& space, int arity)
      : ContinuousFunction(space, arity, [](std::span<const double>) { return 0.0; }) {}

  static ContinuousFunction constant(const ContinuousSpace& space, int arity, double c) {
    return ContinuousFunction(space, arity, [c](std::span<const double>) { return c; });
  }

  int arity() const { return arity_; }
  const ContinuousSpace& space() const { return *space_; }
  SeriesInfo& info() { return info_; }
  const SeriesInfo& info() const { return info_; }
  int coords() const { return arity_ * space_->coords_per_particle(); }

  double value(std::span<const double> x) const {
    assert(static_cast<int>(x.size()) == coords());
    return (*fn_)(x);
  }

  double scalar() const {
    if (arity_ != 0) throw ArgumentError("ContinuousFunction: scalar() on non-scalar");
    return (*fn_)(std::span<const double>{});
  }

  ContinuousFunction plus_scaled(const ContinuousFunction& o, double c) const {
    require_same_shape(o);
    ContinuousFunction self = *this, other = o;
    return ContinuousFunction(*space_, arity_, [self, other, c](std::span<const double> x) {
      return self.value(x) + c * other.value(x);
    });
  }

  ContinuousFunction scaled(double c) const {
    ContinuousFunction self = *this;
    return ContinuousFunction(*space_, arity_,
                              [self, c](std::span<const double> x) { return c * self.value(x); });
  }

  ContinuousFunction multiply(const ContinuousFunction& o) const {
    require_same_shape(o);
    ContinuousFunction self = *this, other = o;
    return ContinuousFunction(*space_, arity_, [self, other](std::span<const double> x) {
      return self.value(x) * other.value(x);
    });
  }

  ContinuousFunction outer(const ContinuousFunction& o) const {
    ContinuousFunction self = *this, other = o;
    int split = coords();
    return ContinuousFunction(*space_, arity_ + o.arity_, [self, other, split](std::span<const double> x) {
      return self.value(x.subspan(0, static_cast<std::size_t>(split))) *
             other.value(x.subspan(static_cast<std::size_t>(split)));
    });
  }

  /// Integrate out the last k particles; the result evaluates the space's
  /// quadrature on demand.
  ContinuousFunction integrate_last(int k) const {
    if (k < 0 || k > arity_) throw ArgumentError("integrate_last: k out of range");
    if (k == 0) return *this;
    ContinuousFunction self = *this;
    int outer_coords = (arity_ - k) * space_->coords_per_particle();
    int inner_coords = k * space_->coords_per_particle();
    const ContinuousSpace* sp = space_;
    return ContinuousFunction(
        *space_, arity_ - k, [self, sp, outer_coords, inner_coords](std::span<const double> x) {
          std::vector<double> full(static_cast<std::size_t>(outer_coords + inner_coords));
          std::copy(x.begin(), x.end(), full.begin());
          return sp->integrate(inner_coords, [&](std::span<const double> z) {
            std::copy(z.begin(), z.end(), full.begin() + outer_coords);
            return self.value(full);
          });
        });
  }

  double integrate_all() const {
    ContinuousFunction self = *this;
    return space_->integrate(coords(), [&](std::span<const double> x) { return self.value(x); });
  }

  ContinuousFunction bind_first(std::vector<double> first) const {
    if (arity_ < 1) throw ArgumentError("bind_first: scalar function");
    if (static_cast<int>(first.size()) != space_->coords_per_particle())
      throw ArgumentError("bind_first: coordinate count mismatch");
    ContinuousFunction self = *this;
    return ContinuousFunction(*space_, arity_ - 1, [self, first](std::span<const double> x) {
      std::vector<double> full(first.size() + x.size());
      std::copy(first.begin(), first.end(), full.begin());
      std::copy(x.begin(), x.end(), full.begin() + static_cast<std::ptrdiff_t>(first.size()));
      return self.value(full);
    });
  }

  /// Largest |f(x) - f(permuted x)| over random points and permutations.
  double max_symmetry_violation(int samples = 16, std::uint64_t seed = 1, double box = 1.5) const {
    if (arity_ <= 1) return 0.0;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-box, box);
    const int cpp = space_->coords_per_particle();
    std::vector<double> x(static_cast<std::size_t>(coords())), y(x.size());
    std::vector<int> perm(static_cast<std::size_t>(arity_));
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      for (auto& xi : x) xi = dist(gen);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), gen);
      for (int p = 0; p < arity_; ++p)
        std::copy_n(x.begin() + perm[static_cast<std::size_t>(p)] * cpp, cpp,
                    y.begin() + p * cpp);
      worst = std::max(worst, std::abs(value(x) - value(y)));
    }
    return worst;
  }

 private:
  void require_same_shape(const ContinuousFunction& o) const {
    if (arity_ != o.arity_ || !(*space_ == *o.space_))
      throw ArgumentError("ContinuousFunction: shape or space mismatch");
  }

  const ContinuousSpace* space_;
  int arity_;
  std::shared_ptr<const Fn> fn_;
  SeriesInfo info_;
};

// ---------------------------------------------------------------------------
// Model traits: the bridge that lets the sequence calculus be written once
// ---------------------------------------------------------------------------

template <class F>
struct ModelTraits;

template <>
struct ModelTraits<FiniteFunction> {
  static constexpr bool is_finite = true;
  using Function = FiniteFunction;
  using Space = FiniteSpace;
  using Args = std::span<const int>;
  using PointArg = int;  // one particle's coordinate

  template <class Formula>
  static FiniteFunction make(const Space& sp, int arity, Formula&& formula) {
    FiniteFunction out(sp, arity);
    if (arity == 0) {
      out.values()[0] = formula(Args{});
      return out;
    }
    Odometer odo(arity, sp.points());
    std::size_t off = 0;
    do {
      out.values()[off++] = formula(Args(odo.index()));
    } while (odo.advance());
    return out;
  }

  /// Evaluate f on the sub-pack of `args` given by particle positions `which`.
  static double eval_gather(const FiniteFunction& f, Args args, std::span<const int> which) {
    std::array<int, 16> buf;
    assert(which.size() <= buf.size());
    for (std::size_t i = 0; i < which.size(); ++i) buf[i] = args[static_cast<std::size_t>(which[i])];
    return f.value(std::span<const int>(buf.data(), which.size()));
  }

  static FiniteFunction linear_combination(const Space& sp, int arity,
                                           const std::vector<std::pair<FiniteFunction, double>>& items) {
    FiniteFunction out(sp, arity);
    std::vector<Accumulator> acc(out.values().size());
    for (const auto& [f, c] : items) {
      if (f.arity() != arity) throw ArgumentError("linear_combination: arity mismatch");
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i].add(c * f.values()[i]);
    }
    for (std::size_t i = 0; i < acc.size(); ++i) out.values()[i] = acc[i].value();
    return out;
  }
};

template <>
struct ModelTraits<ContinuousFunction> {
  static constexpr bool is_finite = false;
  using Function = ContinuousFunction;
  using Space = ContinuousSpace;
  using Args = std::span<const double>;
  using PointArg = std::vector<double>;

  template <class Formula>
  static ContinuousFunction make(const Space& sp, int arity, Formula&& formula) {
    return ContinuousFunction(sp, arity,
                              [g = std::forward<Formula>(formula)](Args x) { return g(x); });
  }

  static double eval_gather(const ContinuousFunction& f, Args args, std::span<const int> which) {
    const int cpp = f.space().coords_per_particle();
    std::array<double, 128> buf;
    assert(which.size() * static_cast<std::size_t>(cpp) <= buf.size());
    for (std::size_t i = 0; i < which.size(); ++i)
      std::copy_n(args.begin() + which[i] * cpp, cpp, buf.begin() + static_cast<std::ptrdiff_t>(i) * cpp);
    return f.value(Args(buf.data(), which.size() * static_cast<std::size_t>(cpp)));
  }

  static ContinuousFunction linear_combination(const Space& sp, int arity,
                                               std::vector<std::pair<ContinuousFunction, double>> items) {
    for (const auto& [f, c] : items)
      if (f.arity() != arity) throw ArgumentError("linear_combination: arity mismatch");
    return ContinuousFunction(sp, arity, [items = std::move(items)](Args x) {
      Accumulator acc;
      for (const auto& [f, c] : items) acc.add(c * f.value(x));
      return acc.value();
    });
  }
};

}  // namespace hlab
