#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hlab/errors.hpp"
#include "hlab/numeric.hpp"
#include "hlab/quadrature.hpp"

namespace hlab {

/// Finite weighted phase model: M abstract points, and the integral of f is
/// the weighted sum over points.  Every identity in the calculus becomes an
/// exact finite sum here.
class FiniteSpace {
 public:
  FiniteSpace(int num_points, std::vector<double> weights)
      : m_(num_points), weights_(std::move(weights)) {
    if (m_ < 1) throw InvariantError("FiniteSpace: need at least one point");
    if (static_cast<int>(weights_.size()) != m_)
      throw InvariantError("FiniteSpace: weight count does not match point count");
    for (double w : weights_)
      if (!(w > 0.0)) throw InvariantError("FiniteSpace: weights must be strictly positive");
  }

  static FiniteSpace uniform(int num_points) {
    return FiniteSpace(num_points, std::vector<double>(static_cast<std::size_t>(num_points), 1.0));
  }

  int points() const { return m_; }
  double weight(int j) const { return weights_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& weights() const { return weights_; }

  std::size_t table_size(int arity) const {
    std::size_t s = 1;
    for (int i = 0; i < arity; ++i) s *= static_cast<std::size_t>(m_);
    return s;
  }

  friend bool operator==(const FiniteSpace& a, const FiniteSpace& b) {
    return a.m_ == b.m_ && a.weights_ == b.weights_;
  }

 private:
  int m_;
  std::vector<double> weights_;
};

enum class QuadratureKind { GaussHermite, MonteCarlo };

/// Continuous d-dimensional phase space with a declared discretization: a
/// per-coordinate Gauss rule for Gaussian-weighted integrands, or a seeded
/// Monte Carlo fallback over a bounding box.
class ContinuousSpace {
 public:
  struct Options {
    int dim = 1;
    QuadratureKind quadrature = QuadratureKind::GaussHermite;
    int nodes_per_coord = 20;
    double hermite_alpha = 1.0 / 3.0;
    long mc_samples = 100000;
    std::uint64_t mc_seed = 20140414;
    double bound = 8.0;  // MC box half-width per coordinate
  };

  explicit ContinuousSpace(Options opt) : opt_(opt) {
    if (opt_.dim < 1) throw InvariantError("ContinuousSpace: dimension must be >= 1");
    if (opt_.nodes_per_coord < 1)
      throw InvariantError("ContinuousSpace: need at least one quadrature node per coordinate");
    if (opt_.quadrature == QuadratureKind::GaussHermite)
      rule_ = gauss_hermite_compensated(opt_.nodes_per_coord, opt_.hermite_alpha);
  }

  static ContinuousSpace gauss(int dim, int nodes_per_coord, double alpha = 1.0 / 3.0) {
    Options o;
    o.dim = dim;
    o.nodes_per_coord = nodes_per_coord;
    o.hermite_alpha = alpha;
    return ContinuousSpace(o);
  }

  const Options& options() const { return opt_; }
  int dim() const { return opt_.dim; }
  int coords_per_particle() const { return 2 * opt_.dim; }
  const Quadrature1D& rule() const { return rule_; }

  /// Integral of f over ncoords phase coordinates.
  double integrate(int ncoords, const std::function<double(std::span<const double>)>& f) const {
    if (ncoords == 0) return f(std::span<const double>{});
    if (opt_.quadrature == QuadratureKind::GaussHermite) return integrate_gauss(ncoords, f);
    return integrate_mc(ncoords, f);
  }

  friend bool operator==(const ContinuousSpace& a, const ContinuousSpace& b) {
    return a.opt_.dim == b.opt_.dim && a.opt_.quadrature == b.opt_.quadrature &&
           a.opt_.nodes_per_coord == b.opt_.nodes_per_coord &&
           a.opt_.hermite_alpha == b.opt_.hermite_alpha;
  }

 private:
  double integrate_gauss(int ncoords, const std::function<double(std::span<const double>)>& f) const {
    double logn = ncoords * std::log(static_cast<double>(rule_.size()));
    if (logn > std::log(4.0e8))
      throw ResourceLimitError("ContinuousSpace: tensor grid too large for " +
                               std::to_string(ncoords) + " coordinates");
    std::vector<double> x(static_cast<std::size_t>(ncoords));
    Accumulator acc;
    Odometer odo(ncoords, rule_.size());
    do {
      double w = 1.0;
      const auto& idx = odo.index();
      for (int c = 0; c < ncoords; ++c) {
        w *= rule_.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])];
        x[static_cast<std::size_t>(c)] = rule_.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])];
      }
      acc.add(w * f(x));
    } while (odo.advance());
    double v = acc.value();
    if (!std::isfinite(v)) throw NumericError("ContinuousSpace: non-finite quadrature result");
    return v;
  }

  double integrate_mc(int ncoords, const std::function<double(std::span<const double>)>& f) const {
    std::mt19937_64 gen(opt_.mc_seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(ncoords)));
    std::uniform_real_distribution<double> dist(-opt_.bound, opt_.bound);
    std::vector<double> x(static_cast<std::size_t>(ncoords));
    double volume = std::pow(2.0 * opt_.bound, ncoords);
    Accumulator acc;
    for (long s = 0; s < opt_.mc_samples; ++s) {
      for (auto& xi : x) xi = dist(gen);
      acc.add(f(x));
    }
    double v = acc.value() * volume / static_cast<double>(opt_.mc_samples);
    if (!std::isfinite(v)) throw NumericError("ContinuousSpace: non-finite Monte Carlo result");
    return v;
  }

  Options opt_;
  Quadrature1D rule_;
};

}  // namespace hlab
