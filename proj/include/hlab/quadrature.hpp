#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hlab/errors.hpp"

namespace hlab {

struct Quadrature1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// Gauss-Hermite rule for the weight e^{-x^2}: int e^{-x^2} g(x) dx ~ sum w_i g(x_i).
/// Nodes and weights via Golub-Welsch on the Jacobi matrix (beta_k = sqrt(k/2)).
inline Quadrature1D gauss_hermite_plain(int n) {
  if (n < 1) throw ArgumentError("gauss_hermite_plain: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success) throw NumericError("gauss_hermite_plain: eigensolver failed");
  const double mu0 = std::sqrt(M_PI);
  Quadrature1D rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

/// Rule for plain integrals int f(x) dx of functions with Gaussian-type decay:
/// the weights carry the factor e^{+y^2} and the nodes are scaled so the rule
/// is adapted to integrands behaving like e^{-alpha x^2}.
inline Quadrature1D gauss_hermite_compensated(int n, double alpha) {
  if (alpha <= 0.0) throw ArgumentError("gauss_hermite_compensated: alpha must be positive");
  Quadrature1D base = gauss_hermite_plain(n);
  double root = std::sqrt(alpha);
  Quadrature1D rule;
  rule.nodes.resize(base.nodes.size());
  rule.weights.resize(base.nodes.size());
  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    double y = base.nodes[i];
    rule.nodes[i] = y / root;
    rule.weights[i] = base.weights[i] * std::exp(y * y) / root;
  }
  return rule;
}

}  // namespace hlab
