#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "hlab/errors.hpp"
#include "hlab/particle_function.hpp"
#include "hlab/state_space.hpp"

namespace hlab {

inline constexpr std::size_t kDefaultTableLimit = 65536;

/// Which side of the duality an operator acts on.  States evolve with
/// S(-t), observables with S(+t); on the finite model the corresponding
/// generators differ by a sign.
enum class Direction { States, Observables };

// ---------------------------------------------------------------------------
// Finite model dynamics
// ---------------------------------------------------------------------------

/// Generators of the finite surrogate dynamics.  The one-site matrix K and
/// the k-site interaction matrices are built so that W L is skew-symmetric
/// (W the diagonal weight matrix), L annihilates constants and the measure,
/// and multi-site generators commute with site swaps.  Those are exactly the
/// structural properties Hamiltonian flows contribute to the hierarchy
/// identities, so every identity is machine-checkable here.
class FiniteLiouvillian {
 public:
  struct Options {
    std::vector<int> interaction_arities{2};
    std::uint64_t seed = 12345;
    double scale = 1.0;
    std::size_t table_limit = kDefaultTableLimit;
  };

  explicit FiniteLiouvillian(const FiniteSpace& space) : FiniteLiouvillian(space, Options()) {}

  FiniteLiouvillian(const FiniteSpace& space, Options opt)
      : space_(&space), opt_(std::move(opt)) {
    std::mt19937_64 gen(opt_.seed);
    site_ = make_generator(1, gen) * opt_.scale;
    for (int k : opt_.interaction_arities) {
      if (k < 2) throw ArgumentError("FiniteLiouvillian: interaction arity must be >= 2");
      multi_[k] = make_generator(k, gen) * opt_.scale;
    }
  }

  FiniteLiouvillian(const FiniteLiouvillian& o)
      : space_(o.space_), opt_(o.opt_), site_(o.site_), multi_(o.multi_) {}

  /// Non-interacting variant sharing the one-site generator.
  FiniteLiouvillian free_copy() const {
    FiniteLiouvillian out(*space_, Options{{}, opt_.seed, opt_.scale, opt_.table_limit});
    out.site_ = site_;
    out.multi_.clear();
    return out;
  }

  const FiniteSpace& space() const { return *space_; }
  const Eigen::MatrixXd& site_generator() const { return site_; }

  bool has_interaction(int arity) const { return multi_.count(arity) > 0; }
  std::vector<int> interaction_arities() const {
    std::vector<int> out;
    for (const auto& [k, m] : multi_) out.push_back(k);
    return out;
  }

  const Eigen::MatrixXd& interaction_generator(int arity) const {
    auto it = multi_.find(arity);
    if (it == multi_.end())
      throw ArgumentError("FiniteLiouvillian: no interaction of arity " + std::to_string(arity));
    return it->second;
  }

  /// Full n-particle generator L_n = sum_i K^(i) + sum_k sum_{i_1<...<i_k} Phi^(k).
  const Eigen::MatrixXd& full_generator(int n) const {
    check_table(n);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = gen_cache_.find(n);
    if (it != gen_cache_.end()) return it->second;
    std::size_t dim = space_->table_size(n);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
    for (int i = 0; i < n; ++i) accumulate_embedded(L, site_, {i}, n);
    for (const auto& [k, phi] : multi_) {
      if (k > n) continue;
      std::vector<int> axes(static_cast<std::size_t>(k));
      // iterate subsets of size k
      for (int i = 0; i < k; ++i) axes[static_cast<std::size_t>(i)] = i;
      while (true) {
        accumulate_embedded(L, phi, axes, n);
        int pos = k - 1;
        while (pos >= 0 && axes[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
        if (pos < 0) break;
        ++axes[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < k; ++i)
          axes[static_cast<std::size_t>(i)] = axes[static_cast<std::size_t>(i - 1)] + 1;
      }
    }
    return gen_cache_.emplace(n, std::move(L)).first->second;
  }

  /// Flow matrix for the group convention S(tau) = exp(-tau L_n):
  /// states use S(-t) = exp(+t L_n), observables S(+t) = exp(-t L_n).
  const Eigen::MatrixXd& flow_matrix(int n, double tau) const {
    full_generator(n);  // ensure generator is cached outside the lock below
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, tau);
    auto it = flow_cache_.find(key);
    if (it != flow_cache_.end()) return it->second;
    Eigen::MatrixXd e = (-tau * gen_cache_.at(n)).exp();
    return flow_cache_.emplace(key, std::move(e)).first->second;
  }

  FiniteFunction apply_flow(const FiniteFunction& f, double tau, std::span<const int> axes) const {
    if (axes.empty()) return f;
    return f.apply_matrix(flow_matrix(static_cast<int>(axes.size()), tau), axes);
  }

  /// sign * L_k applied on the listed axes.
  FiniteFunction apply_generator(const FiniteFunction& f, std::span<const int> axes,
                                 double sign) const {
    if (axes.empty()) return FiniteFunction(*space_, f.arity());
    return f.apply_matrix(sign * full_generator(static_cast<int>(axes.size())), axes);
  }

  /// sign * Phi^(k) (bare interaction, no kinetic part) on the listed axes.
  FiniteFunction apply_interaction(const FiniteFunction& f, std::span<const int> axes,
                                   double sign) const {
    return f.apply_matrix(sign * interaction_generator(static_cast<int>(axes.size())), axes);
  }

  FiniteFunction apply_site(const FiniteFunction& f, int axis, double sign) const {
    std::array<int, 1> axes{axis};
    return f.apply_matrix(sign * site_, axes);
  }

  /// Worst violation of the structural invariants over all built generators.
  double max_generator_defect(int up_to_n = 2) const {
    double worst = 0.0;
    for (int n = 1; n <= up_to_n; ++n) {
      const Eigen::MatrixXd& L = full_generator(n);
      Eigen::VectorXd w = weight_vector(n);
      Eigen::MatrixXd WL = w.asDiagonal() * L;
      worst = std::max(worst, (WL + WL.transpose()).cwiseAbs().maxCoeff());
      worst = std::max(worst, (L * Eigen::VectorXd::Ones(L.cols())).cwiseAbs().maxCoeff());
      worst = std::max(worst, (WL.transpose() * Eigen::VectorXd::Ones(L.rows())).cwiseAbs().maxCoeff());
    }
    return worst;
  }

  Eigen::VectorXd weight_vector(int n) const {
    std::size_t dim = space_->table_size(n);
    Eigen::VectorXd w(static_cast<Eigen::Index>(dim));
    const int m = space_->points();
    for (std::size_t r = 0; r < dim; ++r) {
      double v = 1.0;
      std::size_t rem = r;
      for (int i = 0; i < n; ++i) {
        v *= space_->weight(static_cast<int>(rem % static_cast<std::size_t>(m)));
        rem /= static_cast<std::size_t>(m);
      }
      w(static_cast<Eigen::Index>(r)) = v;
    }
    return w;
  }

 private:
  void check_table(int n) const {
    if (space_->table_size(n) > opt_.table_limit)
      throw ResourceLimitError("FiniteLiouvillian: table size for n = " + std::to_string(n) +
                               " exceeds limit");
  }

  /// Random k-site generator: W_k^{-1} P (A - A^T) P symmetrized over site
  /// swaps, with P the projector orthogonal to constants.
  Eigen::MatrixXd make_generator(int k, std::mt19937_64& gen) const {
    const std::size_t dim = space_->table_size(k);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = dist(gen);
    Eigen::MatrixXd skew = a - a.transpose();
    Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(a.rows(), a.cols()) -
                           Eigen::MatrixXd::Constant(a.rows(), a.cols(), 1.0 / static_cast<double>(dim));
    Eigen::MatrixXd s = proj * skew * proj;

    if (k > 1) {
      // Average over site swaps.
      std::vector<int> perm(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
      Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(s.rows(), s.cols());
      int count = 0;
      do {
        std::vector<std::size_t> map(dim);
        for (std::size_t r = 0; r < dim; ++r) map[r] = permute_combined(r, perm, k);
        for (std::size_t r = 0; r < dim; ++r)
          for (std::size_t c = 0; c < dim; ++c)
            sym(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +=
                s(static_cast<Eigen::Index>(map[r]), static_cast<Eigen::Index>(map[c]));
        ++count;
      } while (std::next_permutation(perm.begin(), perm.end()));
      s = sym / static_cast<double>(count);
    }

    Eigen::VectorXd w = weight_vector(k);
    return w.cwiseInverse().asDiagonal() * s;
  }

  /// Combined row-major index after permuting site digits.
  std::size_t permute_combined(std::size_t r, const std::vector<int>& perm, int k) const {
    const int m = space_->points();
    std::array<int, 16> digits{};
    for (int i = k - 1; i >= 0; --i) {
      digits[static_cast<std::size_t>(i)] = static_cast<int>(r % static_cast<std::size_t>(m));
      r /= static_cast<std::size_t>(m);
    }
    std::size_t out = 0;
    for (int i = 0; i < k; ++i)
      out = out * static_cast<std::size_t>(m) +
            static_cast<std::size_t>(digits[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
    return out;
  }

  /// L += op embedded at the given (ascending) axes of an n-site table.
  void accumulate_embedded(Eigen::MatrixXd& L, const Eigen::MatrixXd& op, std::vector<int> axes,
                           int n) const {
    const int m = space_->points();
    const int k = static_cast<int>(axes.size());
    std::vector<std::size_t> stride(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a)
      stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(m);

    std::size_t fiber = space_->table_size(k);
    std::vector<std::size_t> fiber_off(fiber, 0);
    for (std::size_t rf = 0; rf < fiber; ++rf) {
      std::size_t rem = rf, off = 0;
      for (int i = k - 1; i >= 0; --i) {
        off += (rem % static_cast<std::size_t>(m)) * stride[static_cast<std::size_t>(axes[static_cast<std::size_t>(i)])];
        rem /= static_cast<std::size_t>(m);
      }
      fiber_off[rf] = off;
    }

    std::vector<int> others;
    for (int a = 0; a < n; ++a)
      if (std::find(axes.begin(), axes.end(), a) == axes.end()) others.push_back(a);
    Odometer odo(static_cast<int>(others.size()), m);
    do {
      std::size_t base = 0;
      const auto& oidx = odo.index();
      for (std::size_t r = 0; r < others.size(); ++r)
        base += static_cast<std::size_t>(oidx[r]) * stride[static_cast<std::size_t>(others[r])];
      for (std::size_t rf = 0; rf < fiber; ++rf)
        for (std::size_t cf = 0; cf < fiber; ++cf)
          L(static_cast<Eigen::Index>(base + fiber_off[rf]),
            static_cast<Eigen::Index>(base + fiber_off[cf])) +=
              op(static_cast<Eigen::Index>(rf), static_cast<Eigen::Index>(cf));
    } while (odo.advance());
  }

  const FiniteSpace* space_;
  Options opt_;
  Eigen::MatrixXd site_;
  std::map<int, Eigen::MatrixXd> multi_;
  mutable std::mutex mu_;
  mutable std::map<int, Eigen::MatrixXd> gen_cache_;
  mutable std::map<std::pair<int, double>, Eigen::MatrixXd> flow_cache_;
};

// ---------------------------------------------------------------------------
// Continuous model dynamics
// ---------------------------------------------------------------------------

/// Pair interaction potential Phi(q_i - q_j) with analytic gradient.
struct PairPotential {
  std::function<double(std::span<const double>)> value;               // r in R^d
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  bool harmonic = false;
  double kappa = 0.0;

  static PairPotential harmonic_pair(double kappa) {
    PairPotential p;
    p.harmonic = true;
    p.kappa = kappa;
    p.value = [kappa](std::span<const double> r) {
      double s = 0.0;
      for (double x : r) s += x * x;
      return 0.5 * kappa * s;
    };
    p.gradient = [kappa](std::span<const double> r, std::span<double> out) {
      for (std::size_t i = 0; i < r.size(); ++i) out[i] = kappa * r[i];
    };
    return p;
  }
};

/// k-body potential Phi^(k)(q_1,...,q_k); used by hierarchy right-hand
/// sides only, never integrated by the flows.
struct ManyBodyPotential {
  int arity = 3;
  std::function<double(std::span<const double>)> value;  // k*d position coords
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

/// Kinetic term |p|^2 / 2m plus a pair potential; generates the Hamilton
/// flows and the continuous hierarchy right-hand sides.
class Hamiltonian {
 public:
  struct Options {
    double mass = 1.0;
    int dim = 1;
    double verlet_dt = 1e-3;
    double drift_tolerance = 1e-4;
    int n_dyn_max = 6;
  };

  Hamiltonian(Options opt, std::optional<PairPotential> pair,
              std::vector<ManyBodyPotential> many = {})
      : opt_(opt), pair_(std::move(pair)), many_(std::move(many)) {
    if (opt_.mass <= 0.0) throw InvariantError("Hamiltonian: mass must be positive");
  }

  Hamiltonian(const Hamiltonian& o) : opt_(o.opt_), pair_(o.pair_), many_(o.many_) {}

  static Hamiltonian free_particles(double mass = 1.0, int dim = 1) {
    Options o;
    o.mass = mass;
    o.dim = dim;
    return Hamiltonian(o, std::nullopt);
  }

  static Hamiltonian harmonic(double kappa, double mass = 1.0, int dim = 1) {
    Options o;
    o.mass = mass;
    o.dim = dim;
    return Hamiltonian(o, PairPotential::harmonic_pair(kappa));
  }

  const Options& options() const { return opt_; }
  int dim() const { return opt_.dim; }
  double mass() const { return opt_.mass; }
  bool has_pair() const { return pair_.has_value(); }
  const PairPotential& pair() const { return *pair_; }
  const std::vector<ManyBodyPotential>& many_body() const { return many_; }

  /// Exact linear symplectic flow is available for free or harmonic systems.
  bool linear_flow() const { return !pair_ || pair_->harmonic; }

  /// Flow energy (kinetic + pair potential) of an n-particle configuration.
  double energy(int n, std::span<const double> x) const {
    const int d = opt_.dim;
    double e = 0.0;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) {
        double p = x[static_cast<std::size_t>(i * 2 * d + d + a)];
        e += p * p / (2.0 * opt_.mass);
      }
    if (pair_) {
      std::vector<double> r(static_cast<std::size_t>(d));
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          for (int a = 0; a < d; ++a)
            r[static_cast<std::size_t>(a)] = x[static_cast<std::size_t>(i * 2 * d + a)] -
                                             x[static_cast<std::size_t>(j * 2 * d + a)];
          e += pair_->value(r);
        }
    }
    return e;
  }

  /// X(tau, x): Hamilton flow of n particles by time tau, in place.
  /// Layout per particle: (q_1..q_d, p_1..p_d).
  void flow_points(int n, double tau, std::span<double> x) const {
    if (n > opt_.n_dyn_max)
      throw ResourceLimitError("Hamiltonian: particle count exceeds n_dyn_max");
    if (!std::isfinite(tau)) throw ArgumentError("Hamiltonian: non-finite time");
    if (tau == 0.0 || n == 0) return;
    if (linear_flow())
      flow_linear(n, tau, x);
    else
      flow_verlet(n, tau, x);
  }

  /// d/dq_i of the total pair potential (analytic).
  void potential_gradient(int n, std::span<const double> x, std::span<double> dq) const {
    const int d = opt_.dim;
    std::fill(dq.begin(), dq.end(), 0.0);
    if (!pair_) return;
    std::vector<double> r(static_cast<std::size_t>(d)), g(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        for (int a = 0; a < d; ++a)
          r[static_cast<std::size_t>(a)] = x[static_cast<std::size_t>(i * 2 * d + a)] -
                                           x[static_cast<std::size_t>(j * 2 * d + a)];
        pair_->gradient(r, g);
        for (int a = 0; a < d; ++a) {
          dq[static_cast<std::size_t>(i * d + a)] += g[static_cast<std::size_t>(a)];
          dq[static_cast<std::size_t>(j * d + a)] -= g[static_cast<std::size_t>(a)];
        }
      }
  }

 private:
  void flow_linear(int n, double tau, std::span<double> x) const {
    const Eigen::MatrixXd& e = linear_matrix(n, tau);
    const int d = opt_.dim;
    Eigen::VectorXd v(2 * n);
    for (int a = 0; a < d; ++a) {
      for (int i = 0; i < n; ++i) {
        v(i) = x[static_cast<std::size_t>(i * 2 * d + a)];
        v(n + i) = x[static_cast<std::size_t>(i * 2 * d + d + a)];
      }
      Eigen::VectorXd w = e * v;
      for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i * 2 * d + a)] = w(i);
        x[static_cast<std::size_t>(i * 2 * d + d + a)] = w(n + i);
      }
    }
  }

  const Eigen::MatrixXd& linear_matrix(int n, double tau) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, tau);
    auto it = linear_cache_.find(key);
    if (it != linear_cache_.end()) return it->second;
    double kappa = pair_ ? pair_->kappa : 0.0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) a(i, n + i) = 1.0 / opt_.mass;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(n + i, j) = -kappa * ((i == j) ? (n - 1.0) : -1.0);
    Eigen::MatrixXd e = (tau * a).exp();
    return linear_cache_.emplace(key, std::move(e)).first->second;
  }

  void flow_verlet(int n, double tau, std::span<double> x) const {
    const int d = opt_.dim;
    const double e0 = energy(n, x);
    const double sign = tau >= 0.0 ? 1.0 : -1.0;
    double remaining = std::abs(tau);
    std::vector<double> dq(static_cast<std::size_t>(n * d));
    auto half_kick = [&](double h) {
      potential_gradient(n, x, dq);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a)
          x[static_cast<std::size_t>(i * 2 * d + d + a)] -=
              0.5 * h * dq[static_cast<std::size_t>(i * d + a)];
    };
    while (remaining > 0.0) {
      double h = sign * std::min(remaining, opt_.verlet_dt);
      half_kick(h);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a)
          x[static_cast<std::size_t>(i * 2 * d + a)] +=
              h * x[static_cast<std::size_t>(i * 2 * d + d + a)] / opt_.mass;
      half_kick(h);
      remaining -= std::abs(h);
    }
    const double e1 = energy(n, x);
    if (!std::isfinite(e1) ||
        std::abs(e1 - e0) > opt_.drift_tolerance * std::max(1.0, std::abs(e0)))
      throw NumericError("Hamiltonian: integrator energy drift beyond threshold");
  }

  Options opt_;
  std::optional<PairPotential> pair_;
  std::vector<ManyBodyPotential> many_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, double>, Eigen::MatrixXd> linear_cache_;
};

// ---------------------------------------------------------------------------
// Uniform dynamics adapters used by cumulants and solvers
// ---------------------------------------------------------------------------

class FiniteDynamics {
 public:
  using Function = FiniteFunction;
  using Space = FiniteSpace;
  static constexpr bool exact_generator = true;

  FiniteDynamics(const FiniteSpace& space, const FiniteLiouvillian& li)
      : space_(&space), li_(&li) {}

  const Space& space() const { return *space_; }
  const FiniteLiouvillian& liouvillian() const { return *li_; }

  /// S(tau) on the listed particle axes (block flows use the block's own
  /// sub-dynamics; disjoint blocks commute).
  Function flow(const Function& f, double tau, std::span<const int> axes) const {
    return li_->apply_flow(f, tau, axes);
  }

  Function generator(const Function& f, std::span<const int> axes, double sign) const {
    return li_->apply_generator(f, axes, sign);
  }

 private:
  const Space* space_;
  const FiniteLiouvillian* li_;
};

class ContinuousDynamics {
 public:
  using Function = ContinuousFunction;
  using Space = ContinuousSpace;
  static constexpr bool exact_generator = false;

  struct Options {
    double fd_step = 1e-5;  // phase-space finite differences
  };

  ContinuousDynamics(const ContinuousSpace& space, const Hamiltonian& h)
      : ContinuousDynamics(space, h, Options()) {}

  ContinuousDynamics(const ContinuousSpace& space, const Hamiltonian& h, Options opt)
      : space_(&space), h_(&h), opt_(opt) {
    if (space.dim() != h.dim())
      throw ArgumentError("ContinuousDynamics: space and Hamiltonian dimensions differ");
  }

  const Space& space() const { return *space_; }
  const Hamiltonian& hamiltonian() const { return *h_; }

  Function flow(const Function& f, double tau, std::span<const int> axes) const {
    if (axes.empty() || tau == 0.0) return f;
    std::vector<int> ax(axes.begin(), axes.end());
    const Hamiltonian* h = h_;
    const int cpp = space_->coords_per_particle();
    ContinuousFunction self = f;
    return ContinuousFunction(*space_, f.arity(), [self, h, ax, cpp, tau](std::span<const double> x) {
      std::vector<double> pt(x.begin(), x.end());
      std::vector<double> block(ax.size() * static_cast<std::size_t>(cpp));
      for (std::size_t i = 0; i < ax.size(); ++i)
        std::copy_n(pt.begin() + ax[i] * cpp, cpp, block.begin() + static_cast<std::ptrdiff_t>(i) * cpp);
      h->flow_points(static_cast<int>(ax.size()), tau, block);
      for (std::size_t i = 0; i < ax.size(); ++i)
        std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(i) * cpp, cpp, pt.begin() + ax[i] * cpp);
      return self.value(pt);
    });
  }

  Function generator(const Function&, std::span<const int>, double) const {
    throw NotSupportedError("ContinuousDynamics: exact generators exist on the finite model only");
  }

  /// {H_n, f} with analytic Hamiltonian gradients and central differences
  /// for the function.
  Function bracket_with_hamiltonian(const Function& f, double sign = 1.0) const {
    const int n = f.arity();
    const int d = space_->dim();
    const Hamiltonian* h = h_;
    const double step = opt_.fd_step;
    ContinuousFunction self = f;
    return ContinuousFunction(*space_, n, [self, h, n, d, step, sign](std::span<const double> x) {
      std::vector<double> pt(x.begin(), x.end());
      std::vector<double> dq(static_cast<std::size_t>(n * d));
      h->potential_gradient(n, pt, dq);
      Accumulator acc;
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a) {
          std::size_t qi = static_cast<std::size_t>(i * 2 * d + a);
          std::size_t pi = static_cast<std::size_t>(i * 2 * d + d + a);
          double dHdq = dq[static_cast<std::size_t>(i * d + a)];
          double dHdp = pt[pi] / h->mass();
          acc.add(dHdq * central_difference(self, pt, pi, step));
          acc.add(-dHdp * central_difference(self, pt, qi, step));
        }
      return sign * acc.value();
    });
  }

  /// {Phi^{(k)}(q_{sites}), f} for a k-body potential with analytic gradient.
  Function bracket_with_many_body(const Function& f, const ManyBodyPotential& pot,
                                  std::vector<int> sites, double sign = 1.0) const {
    if (static_cast<int>(sites.size()) != pot.arity)
      throw ArgumentError("bracket_with_many_body: site count does not match potential arity");
    const int d = space_->dim();
    const double step = opt_.fd_step;
    ContinuousFunction self = f;
    return ContinuousFunction(
        *space_, f.arity(), [self, pot, sites = std::move(sites), d, step, sign](std::span<const double> x) {
          std::vector<double> pt(x.begin(), x.end());
          std::vector<double> q(sites.size() * static_cast<std::size_t>(d));
          std::vector<double> g(q.size());
          for (std::size_t i = 0; i < sites.size(); ++i)
            for (int a = 0; a < d; ++a)
              q[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] =
                  pt[static_cast<std::size_t>(sites[i] * 2 * d + a)];
          pot.gradient(q, g);
          Accumulator acc;
          for (std::size_t i = 0; i < sites.size(); ++i)
            for (int a = 0; a < d; ++a) {
              std::size_t pi = static_cast<std::size_t>(sites[i] * 2 * d + d + a);
              acc.add(g[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] *
                      central_difference(self, pt, pi, step));
            }
          return sign * acc.value();
        });
  }

  /// {Phi(q_i - q_j), f} for the Hamiltonian's pair potential at particle
  /// positions (i, j) of f's argument list.
  Function bracket_with_pair_potential(const Function& f, int i, int j, double sign = 1.0) const {
    if (!h_->has_pair()) throw ArgumentError("bracket_with_pair_potential: no pair potential");
    const int d = space_->dim();
    const Hamiltonian* h = h_;
    const double step = opt_.fd_step;
    ContinuousFunction self = f;
    return ContinuousFunction(*space_, f.arity(), [self, h, i, j, d, step, sign](std::span<const double> x) {
      std::vector<double> pt(x.begin(), x.end());
      std::vector<double> r(static_cast<std::size_t>(d)), g(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a)
        r[static_cast<std::size_t>(a)] =
            pt[static_cast<std::size_t>(i * 2 * d + a)] - pt[static_cast<std::size_t>(j * 2 * d + a)];
      h->pair().gradient(r, g);
      Accumulator acc;
      for (int a = 0; a < d; ++a) {
        std::size_t pi = static_cast<std::size_t>(i * 2 * d + d + a);
        std::size_t pj = static_cast<std::size_t>(j * 2 * d + d + a);
        acc.add(g[static_cast<std::size_t>(a)] * central_difference(self, pt, pi, step));
        acc.add(-g[static_cast<std::size_t>(a)] * central_difference(self, pt, pj, step));
      }
      return sign * acc.value();
    });
  }

 private:
  static double central_difference(const ContinuousFunction& f, std::vector<double>& pt,
                                   std::size_t coord, double step) {
    double saved = pt[coord];
    pt[coord] = saved + step;
    double up = f.value(pt);
    pt[coord] = saved - step;
    double dn = f.value(pt);
    pt[coord] = saved;
    double r = (up - dn) / (2.0 * step);
    if (!std::isfinite(r)) throw NumericError("central_difference: non-finite derivative");
    return r;
  }

  const Space* space_;
  const Hamiltonian* h_;
  Options opt_;
};

/// Liouville right-hand side: {H_n, f} for states (sign +1), {f, H_n} for
/// observables (sign -1).  Exact on the finite model.
inline FiniteFunction liouville_rhs(const FiniteDynamics& dyn, const FiniteFunction& f,
                                    Direction dir = Direction::States) {
  std::vector<int> axes(static_cast<std::size_t>(f.arity()));
  for (int i = 0; i < f.arity(); ++i) axes[static_cast<std::size_t>(i)] = i;
  return dyn.generator(f, axes, dir == Direction::States ? 1.0 : -1.0);
}

inline ContinuousFunction liouville_rhs(const ContinuousDynamics& dyn, const ContinuousFunction& f,
                                        Direction dir = Direction::States) {
  return dyn.bracket_with_hamiltonian(f, dir == Direction::States ? 1.0 : -1.0);
}

}  // namespace hlab
