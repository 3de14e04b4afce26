#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hlab/dynamics.hpp"
#include "hlab/graded_sequence.hpp"
#include "hlab/random_data.hpp"

using namespace hlab;

TEST_CASE("hamilton flow: identity at t = 0 and free-particle drift") {
  Hamiltonian h = Hamiltonian::free_particles(2.0);
  std::vector<double> x{0.3, -1.2, 0.7, 0.4};  // (q1,p1,q2,p2)
  std::vector<double> x0 = x;
  h.flow_points(2, 0.0, x);
  CHECK(x == x0);

  h.flow_points(2, 1.7, x);
  CHECK(x[0] == Catch::Approx(0.3 + 1.7 * (-1.2) / 2.0).epsilon(1e-12));
  CHECK(x[1] == Catch::Approx(-1.2));
  CHECK(x[2] == Catch::Approx(0.7 + 1.7 * 0.4 / 2.0).epsilon(1e-12));
  CHECK(x[3] == Catch::Approx(0.4));
}

TEST_CASE("two-particle harmonic flow matches the normal-mode solution") {
  const double kappa = 1.3, m = 0.8, t = 0.9;
  Hamiltonian h = Hamiltonian::harmonic(kappa, m);
  std::vector<double> x{0.25, -0.4, -1.1, 0.65};
  std::vector<double> flowed = x;
  h.flow_points(2, t, flowed);

  const double s = 1.0 / std::sqrt(2.0);
  double qp = s * (x[0] + x[2]), pp = s * (x[1] + x[3]);
  double qm = s * (x[0] - x[2]), pm = s * (x[1] - x[3]);
  double omega = std::sqrt(2.0 * kappa / m);
  double qp_t = qp + t * pp / m, pp_t = pp;
  double qm_t = qm * std::cos(omega * t) + pm / (m * omega) * std::sin(omega * t);
  double pm_t = -m * omega * qm * std::sin(omega * t) + pm * std::cos(omega * t);

  CHECK(std::abs(flowed[0] - s * (qp_t + qm_t)) < 1e-10);
  CHECK(std::abs(flowed[2] - s * (qp_t - qm_t)) < 1e-10);
  CHECK(std::abs(flowed[1] - s * (pp_t + pm_t)) < 1e-10);
  CHECK(std::abs(flowed[3] - s * (pp_t - pm_t)) < 1e-10);
}

TEST_CASE("verlet integrator agrees with the analytic harmonic flow") {
  Hamiltonian analytic = Hamiltonian::harmonic(1.0);
  // Same potential but routed through the integrator.
  PairPotential soft;
  soft.value = [](std::span<const double> r) { return 0.5 * r[0] * r[0]; };
  soft.gradient = [](std::span<const double> r, std::span<double> g) { g[0] = r[0]; };
  Hamiltonian::Options opt;
  Hamiltonian stepped(opt, soft);

  std::vector<double> a{0.5, 0.2, -0.3, -0.1}, b = a;
  analytic.flow_points(2, 0.8, a);
  stepped.flow_points(2, 0.8, b);
  for (int c = 0; c < 4; ++c) CHECK(std::abs(a[c] - b[c]) < 1e-5);
}

TEST_CASE("verlet energy drift stays below 1e-6 on a smooth potential") {
  PairPotential bump;
  bump.value = [](std::span<const double> r) { return std::exp(-r[0] * r[0]); };
  bump.gradient = [](std::span<const double> r, std::span<double> g) {
    g[0] = -2.0 * r[0] * std::exp(-r[0] * r[0]);
  };
  Hamiltonian::Options opt;
  opt.drift_tolerance = 1e-6;
  Hamiltonian h(opt, bump);
  std::vector<double> x{0.4, 0.3, -0.2, -0.5, 1.1, 0.2};
  double e0 = h.energy(3, x);
  CHECK_NOTHROW(h.flow_points(3, 10.0, x));  // the drift check is internal
  CHECK(std::abs(h.energy(3, x) - e0) < 1e-6 * std::max(1.0, std::abs(e0)));
}

TEST_CASE("flow composition: constants, t = 0, group law") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 8);
  Hamiltonian h = Hamiltonian::harmonic(1.0);
  ContinuousDynamics dyn(sp, h);

  ContinuousFunction one = ContinuousFunction::constant(sp, 2, 1.0);
  ContinuousFunction g(sp, 2, [](std::span<const double> x) {
    return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3])) + 0.3 * x[0];
  });
  std::vector<int> both{0, 1};
  std::vector<double> pt{0.2, -0.7, 0.5, 0.1};

  CHECK(dyn.flow(one, 1.3, both).value(pt) == 1.0);
  CHECK(dyn.flow(g, 0.0, both).value(pt) == g.value(pt));

  ContinuousFunction two_step = dyn.flow(dyn.flow(g, -0.4, both), -0.8, both);
  ContinuousFunction one_step = dyn.flow(g, -1.2, both);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int s = 0; s < 10; ++s) {
    std::vector<double> y{dist(gen), dist(gen), dist(gen), dist(gen)};
    CHECK(std::abs(two_step.value(y) - one_step.value(y)) < 1e-9);
  }
}

TEST_CASE("finite liouvillian satisfies its structural invariants") {
  for (const FiniteSpace& sp : {FiniteSpace::uniform(3), FiniteSpace(3, {1.0, 0.5, 2.0})}) {
    FiniteLiouvillian li(sp, {{2}, 77, 1.0, kDefaultTableLimit});
    CHECK(li.max_generator_defect(2) < 1e-12);

    // Swap symmetry of the two-site generator.
    const Eigen::MatrixXd& phi = li.interaction_generator(2);
    const int m = sp.points();
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c)
          for (int d = 0; d < m; ++d)
            CHECK(phi(a * m + b, c * m + d) == Catch::Approx(phi(b * m + a, d * m + c)).margin(1e-14));
  }
}

TEST_CASE("finite flow: identity, constants, measure, group law") {
  FiniteSpace sp(2, {1.0, 1.7});
  FiniteLiouvillian li(sp, {{2}, 11, 1.0, kDefaultTableLimit});

  CHECK(li.flow_matrix(2, 0.0).isIdentity(1e-14));

  const Eigen::MatrixXd& e = li.flow_matrix(2, 0.6);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(e.cols());
  CHECK((e * ones - ones).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::VectorXd w = li.weight_vector(2);
  CHECK((e.transpose() * w - w).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd comp = li.flow_matrix(2, 0.35) * li.flow_matrix(2, 0.25);
  CHECK((comp - e).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::MatrixXd inv = li.flow_matrix(2, -0.6) * e;
  CHECK(inv.isIdentity(1e-10));
}

TEST_CASE("table limit is enforced for finite flows") {
  FiniteSpace sp = FiniteSpace::uniform(4);
  FiniteLiouvillian li(sp, {{2}, 5, 1.0, 64});
  CHECK_THROWS_AS(li.full_generator(4), ResourceLimitError);
}

TEST_CASE("finite duality pairing is conserved by the flows") {
  FiniteSpace sp(3, {1.0, 0.4, 1.9});
  FiniteLiouvillian li(sp, {{2}, 21, 1.0, kDefaultTableLimit});
  FiniteDynamics dyn(sp, li);

  std::mt19937_64 gen(9);
  FiniteFunction a = random_symmetric_function(sp, 2, gen);
  FiniteFunction d = random_symmetric_function(sp, 2, gen);
  std::vector<int> axes{0, 1};
  const double t = 0.8;
  // <S(t) a, d> = <a, S(-t) d> under the weighted pairing.
  double lhs = dyn.flow(a, t, axes).multiply(d).integrate_all();
  double rhs = a.multiply(dyn.flow(d, -t, axes)).integrate_all();
  CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("normalization invariance of the finite flow") {
  FiniteSpace sp = FiniteSpace::uniform(2);
  FiniteLiouvillian li(sp);
  FiniteDynamics dyn(sp, li);
  FiniteSequence d0 = random_finite_sequence(sp, 3, 31, 0.8, 1.0);
  FiniteSequence dt = d0;
  for (int n = 1; n <= 3; ++n) {
    std::vector<int> axes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) axes[static_cast<std::size_t>(i)] = i;
    dt.component(n) = dyn.flow(d0.component(n), -1.0, axes);
  }
  FiniteFunction eye = FiniteFunction::constant(sp, 1, 1.0);
  CHECK(std::abs(generating_functional(dt, eye) - generating_functional(d0, eye)) < 1e-10);
}

TEST_CASE("liouville right-hand side: constants and generator consistency") {
  FiniteSpace sp = FiniteSpace::uniform(2);
  FiniteLiouvillian li(sp, {{2}, 41, 1.0, kDefaultTableLimit});
  FiniteDynamics dyn(sp, li);

  FiniteFunction c = FiniteFunction::constant(sp, 2, 3.25);
  CHECK(liouville_rhs(dyn, c).max_abs() < 1e-14);

  // d/dt S(-t) f |_{t} equals L applied to the flowed table, exactly.
  std::mt19937_64 gen(42);
  FiniteFunction f = random_symmetric_function(sp, 2, gen);
  std::vector<int> axes{0, 1};
  const double t = 0.3, h = 1e-4;
  FiniteFunction fd = dyn.flow(f, -(t + h), axes).plus_scaled(dyn.flow(f, -(t - h), axes), -1.0);
  FiniteFunction rhs = liouville_rhs(dyn, dyn.flow(f, -t, axes));
  CHECK(fd.scaled(1.0 / (2 * h)).max_abs_diff(rhs) < 1e-6);
}

TEST_CASE("continuous liouville right-hand side") {
  ContinuousSpace sp = ContinuousSpace::gauss(1, 8);
  Hamiltonian h = Hamiltonian::harmonic(1.0);
  ContinuousDynamics dyn(sp, h);

  ContinuousFunction c = ContinuousFunction::constant(sp, 2, 2.0);
  std::vector<double> pt{0.1, 0.6, -0.4, 0.2};
  CHECK(std::abs(liouville_rhs(dyn, c).value(pt)) < 1e-12);

  // {H, H} = 0.
  ContinuousFunction energy(sp, 2,
                            [&h](std::span<const double> x) { return h.energy(2, x); });
  CHECK(std::abs(liouville_rhs(dyn, energy).value(pt)) < 1e-8);

  // Generator consistency: d/dt (S(-t) f)|_{t=0} = {H, f}.
  ContinuousFunction g(sp, 2, [](std::span<const double> x) {
    return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]));
  });
  std::vector<int> axes{0, 1};
  const double ht = 1e-4;
  double fd = (dyn.flow(g, -ht, axes).value(pt) - dyn.flow(g, ht, axes).value(pt)) / (2 * ht);
  CHECK(std::abs(fd - liouville_rhs(dyn, g).value(pt)) < 1e-6);
}
