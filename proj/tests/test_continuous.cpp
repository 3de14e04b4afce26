#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hlab/quadrature.hpp"
#include "hlab/solvers.hpp"
#include "hlab/verification.hpp"

using namespace hlab;

namespace {

ContinuousFunction unit_gaussian(const ContinuousSpace& sp, int arity, double amplitude = 1.0) {
  return ContinuousFunction(sp, arity, [amplitude](std::span<const double> x) {
    double s = 0.0;
    for (double c : x) s += c * c;
    return amplitude * std::exp(-0.5 * s);
  });
}

}  // namespace

TEST_CASE("gauss-hermite rule integrates gaussians to high accuracy") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 20);
  ContinuousFunction g1 = unit_gaussian(sp, 1);
  CHECK(std::abs(g1.integrate_all() - 2.0 * M_PI) < 1e-10 * 2.0 * M_PI);

  // Second moment of e^{-x^2/2} per coordinate.
  ContinuousFunction xx(sp, 1, [](std::span<const double> x) {
    return x[0] * x[0] * std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
  });
  CHECK(std::abs(xx.integrate_all() - 2.0 * M_PI) < 1e-9);

  // integrate_out drops the last particle of a two-particle gaussian.
  ContinuousFunction g2 = unit_gaussian(sp, 2);
  ContinuousFunction g1_out = integrate_out(g2, 1);
  std::vector<double> pt{0.4, -0.6};
  CHECK(std::abs(g1_out.value(pt) - 2.0 * M_PI * g1.value(pt)) < 1e-9);
}

TEST_CASE("monte carlo fallback integrates a box profile deterministically") {
  ContinuousSpace::Options opt;
  opt.dim = 1;
  opt.quadrature = QuadratureKind::MonteCarlo;
  opt.mc_samples = 200000;
  opt.bound = 4.0;
  ContinuousSpace sp(opt);
  ContinuousFunction g(sp, 1, [](std::span<const double> x) {
    return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
  });
  double a = g.integrate_all();
  double b = g.integrate_all();
  CHECK(a == b);  // seeded, deterministic
  CHECK(std::abs(a - 2.0 * M_PI) < 0.05 * 2.0 * M_PI);
}

TEST_CASE("continuous closed system: solver matches the brute-force oracle") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 12);
  Hamiltonian h = Hamiltonian::harmonic(1.0);
  ContinuousDynamics dyn(sp, h);
  auto init = InitialData<ContinuousFunction>::closed_system(3, unit_gaussian(sp, 3));
  ContinuousSequence f0 = grand_canonical_marginals(init.sequence);

  const double t = 0.6;
  ContinuousFunction sol1 = solve_marginal_distributions(dyn, f0, 1, t, {2, true}, 3);
  ContinuousFunction ora1 = oracle_closed_system(dyn, init, 1, t);
  for (std::vector<double> p : {std::vector<double>{0.3, -0.5}, std::vector<double>{-0.9, 0.4}}) {
    double a = sol1.value(p), b = ora1.value(p);
    CHECK(std::abs(a - b) < 1e-6 * std::abs(b));
  }
  ContinuousFunction sol2 = solve_marginal_distributions(dyn, f0, 2, t, {1, true}, 3);
  ContinuousFunction ora2 = oracle_closed_system(dyn, init, 2, t);
  std::vector<double> p2{0.4, -0.3, -0.8, 0.6};
  CHECK(std::abs(sol2.value(p2) - ora2.value(p2)) < 1e-6 * std::abs(ora2.value(p2)));
}

TEST_CASE("continuous normalization invariance") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 14);
  Hamiltonian h = Hamiltonian::harmonic(1.0);
  ContinuousDynamics dyn(sp, h);
  ContinuousSequence d0(sp, 2);
  d0.component(2) = unit_gaussian(sp, 2);
  ResidualReport rep = check_normalization_invariance(dyn, d0, 1.0, 1e-6 * 4 * M_PI * M_PI);
  CHECK(rep.pass);
}

TEST_CASE("continuous BBGKY residual stays below 1e-4") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 12);
  Hamiltonian h = Hamiltonian::harmonic(1.0);
  ContinuousDynamics dyn(sp, h);
  auto init = InitialData<ContinuousFunction>::closed_system(2, unit_gaussian(sp, 2));
  ContinuousSequence f0 = grand_canonical_marginals(init.sequence);

  const double t = 0.5, ht = 1e-4;
  ContinuousSequence ft(sp, 2);
  for (int s = 1; s <= 2; ++s)
    ft.component(s) = solve_marginal_distributions(dyn, f0, s, t, {2 - s, true}, 2);
  ContinuousFunction rhs1 = bbgky_rhs(dyn, ft, 1);
  ContinuousFunction up = solve_marginal_distributions(dyn, f0, 1, t + ht, {1, true}, 2);
  ContinuousFunction dn = solve_marginal_distributions(dyn, f0, 1, t - ht, {1, true}, 2);

  for (std::vector<double> p : {std::vector<double>{0.2, -0.4}, std::vector<double>{0.8, 0.5}}) {
    double lhs = (up.value(p) - dn.value(p)) / (2 * ht);
    CHECK(std::abs(lhs - rhs1.value(p)) < 1e-4);
  }
}

TEST_CASE("continuous Liouville-hierarchy residual stays below 1e-4") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 10);
  Hamiltonian h = Hamiltonian::harmonic(1.0);
  ContinuousDynamics dyn(sp, h);

  ContinuousSequence g0(sp, 3);
  g0.component(1) = unit_gaussian(sp, 1, 0.8);
  g0.component(2) = unit_gaussian(sp, 2, 0.3);

  const double t = 0.4, ht = 1e-4;
  ContinuousSequence gt(sp, 2);
  for (int s = 1; s <= 2; ++s) gt.component(s) = solve_correlations(dyn, g0, s, t);
  ContinuousFunction rhs = liouville_hierarchy_rhs(dyn, gt, 2);
  ContinuousFunction up = solve_correlations(dyn, g0, 2, t + ht);
  ContinuousFunction dn = solve_correlations(dyn, g0, 2, t - ht);
  std::vector<double> p{0.3, -0.2, -0.5, 0.6};
  double lhs = (up.value(p) - dn.value(p)) / (2 * ht);
  CHECK(std::abs(lhs - rhs.value(p)) < 1e-4);
}

TEST_CASE("continuous dual-hierarchy residual for additive observables") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 10);
  Hamiltonian h = Hamiltonian::harmonic(1.0);
  ContinuousDynamics dyn(sp, h);

  ContinuousSequence b0(sp, 2);
  b0.component(1) = ContinuousFunction(
      sp, 1, [](std::span<const double> x) { return x[0] * x[0] + 0.5 * x[1]; });

  const double t = 0.5, ht = 1e-4;
  ContinuousSequence bt(sp, 2);
  for (int s = 1; s <= 2; ++s) bt.component(s) = solve_marginal_observables(dyn, b0, s, t);
  ContinuousFunction rhs = dual_bbgky_rhs(dyn, bt, 2);
  ContinuousFunction up = solve_marginal_observables(dyn, b0, 2, t + ht);
  ContinuousFunction dn = solve_marginal_observables(dyn, b0, 2, t - ht);
  std::vector<double> p{0.4, 0.1, -0.3, -0.6};
  double lhs = (up.value(p) - dn.value(p)) / (2 * ht);
  CHECK(std::abs(lhs - rhs.value(p)) < 1e-4);
}

TEST_CASE("continuous nonlinear-hierarchy residual with chaos data") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 10);
  Hamiltonian h = Hamiltonian::harmonic(1.0);
  ContinuousDynamics dyn(sp, h);

  auto chaos = InitialData<ContinuousFunction>::chaos(unit_gaussian(sp, 1, 0.08), 6);
  const double t = 0.3, ht = 1e-4;
  ContinuousSequence gt(sp, 2);
  gt.component(1) = solve_marginal_correlations(dyn, chaos.sequence, 1, t, {2, false});
  gt.component(2) = solve_marginal_correlations(dyn, chaos.sequence, 2, t, {1, false});
  ContinuousFunction rhs = nonlinear_bbgky_rhs(dyn, gt, 1);
  ContinuousFunction up = solve_marginal_correlations(dyn, chaos.sequence, 1, t + ht, {2, false});
  ContinuousFunction dn = solve_marginal_correlations(dyn, chaos.sequence, 1, t - ht, {2, false});
  std::vector<double> p{0.3, -0.4};
  double lhs = (up.value(p) - dn.value(p)) / (2 * ht);
  CHECK(std::abs(lhs - rhs.value(p)) < 1e-4);
}

TEST_CASE("verlet-backed flows drive the solver when the potential is not harmonic") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 8);
  PairPotential bump;
  bump.value = [](std::span<const double> r) { return 0.4 * std::exp(-r[0] * r[0]); };
  bump.gradient = [](std::span<const double> r, std::span<double> g) {
    g[0] = -0.8 * r[0] * std::exp(-r[0] * r[0]);
  };
  Hamiltonian::Options opt;
  Hamiltonian h(opt, bump);
  ContinuousDynamics dyn(sp, h);
  auto init = InitialData<ContinuousFunction>::closed_system(2, unit_gaussian(sp, 2));
  ContinuousSequence f0 = grand_canonical_marginals(init.sequence);
  const double t = 0.4;
  ContinuousFunction sol = solve_marginal_distributions(dyn, f0, 1, t, {1, true}, 2);
  ContinuousFunction ora = oracle_closed_system(dyn, init, 1, t);
  std::vector<double> p{0.2, -0.3};
  // dt^2-limited: the two routes integrate different trajectories
  CHECK(std::abs(sol.value(p) - ora.value(p)) < 1e-5 * std::abs(ora.value(p)));
}

TEST_CASE("continuous symmetry spot check") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 8);
  ContinuousFunction g2 = unit_gaussian(sp, 2);
  CHECK(g2.max_symmetry_violation(32, 7) < 1e-12);
}
