#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hlab/solvers.hpp"
#include "hlab/random_data.hpp"
#include "hlab/verification.hpp"

using namespace hlab;

namespace {

struct FiniteFixture {
  FiniteSpace sp = FiniteSpace::uniform(2);
  FiniteLiouvillian li{sp, {{2}, 101, 1.0, kDefaultTableLimit}};
  FiniteDynamics dyn{sp, li};
};

FiniteSequence flow_sequence(const FiniteDynamics& dyn, const FiniteSequence& d0, double t) {
  FiniteSequence out = d0;
  for (int n = 1; n <= d0.max_level(); ++n) {
    std::vector<int> axes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) axes[static_cast<std::size_t>(i)] = i;
    out.component(n) = dyn.flow(d0.component(n), -t, axes);
  }
  return out;
}

}  // namespace

TEST_CASE("grand canonical marginals: closed system and product data") {
  FiniteFixture fx;
  std::mt19937_64 gen(7);

  // Closed system: F_N = D_N N! / int D_N, F_0 = 1.
  FiniteFunction d3 = random_symmetric_function(fx.sp, 3, gen, 0.5);
  for (double& v : d3.values()) v = std::abs(v) + 0.1;  // positive density
  auto init = InitialData<FiniteFunction>::closed_system(3, d3);
  FiniteSequence f0 = grand_canonical_marginals(init.sequence);
  CHECK(f0.scalar_component() == Catch::Approx(1.0));
  double mass = d3.integrate_all();
  CHECK(f0.component(3).max_abs_diff(d3.scaled(6.0 / mass)) < 1e-12);

  // Product data: F_s = prod z rho(x_i) up to a tiny truncation tail.
  FiniteFunction rho(fx.sp, 1, {0.25, 0.75});  // integrates to 1 (uniform weights)
  auto gc = InitialData<FiniteFunction>::grand_canonical(0.5, rho, 12);
  FiniteSequence fgc = grand_canonical_marginals(gc.sequence);
  for (int s = 1; s <= 3; ++s) {
    FiniteFunction expect = rho.scaled(0.5);
    for (int i = 1; i < s; ++i) expect = expect.outer(rho.scaled(0.5));
    CHECK(fgc.component(s).max_abs_diff(expect) < 1e-9);  // z-series tail
  }

  CHECK_THROWS_AS(grand_canonical_marginals(FiniteSequence(fx.sp, 2)), ArgumentError);
}

TEST_CASE("marginal solver: t = 0, free factorization, closed-system oracle") {
  FiniteFixture fx;
  std::mt19937_64 gen(11);
  FiniteFunction d3 = random_symmetric_function(fx.sp, 3, gen, 0.4);
  for (double& v : d3.values()) v = std::abs(v) + 0.2;
  auto init = InitialData<FiniteFunction>::closed_system(3, d3);
  FiniteSequence f0 = grand_canonical_marginals(init.sequence);

  for (int s = 1; s <= 3; ++s) {
    FiniteFunction at0 =
        solve_marginal_distributions(fx.dyn, f0, s, 0.0, {3 - s, true}, 3);
    CHECK(at0.max_abs_diff(f0.component(s)) < 1e-12);
  }

  // Non-interacting dynamics: F_s(t) = S^free_s(-t) F_s(0).
  FiniteLiouvillian free = fx.li.free_copy();
  FiniteDynamics free_dyn(fx.sp, free);
  const double t = 0.9;
  for (int s = 1; s <= 2; ++s) {
    FiniteFunction via_series =
        solve_marginal_distributions(free_dyn, f0, s, t, {3 - s, true}, 3);
    std::vector<int> axes(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) axes[static_cast<std::size_t>(i)] = i;
    CHECK(via_series.max_abs_diff(free_dyn.flow(f0.component(s), -t, axes)) < 1e-12);
  }

  // Interacting closed system vs the brute-force oracle.
  for (int s = 1; s <= 3; ++s) {
    FiniteFunction sol = solve_marginal_distributions(fx.dyn, f0, s, t, {3 - s, true}, 3);
    FiniteFunction oracle = oracle_closed_system(fx.dyn, init, s, t);
    CHECK(sol.info().exact);
    CHECK(sol.max_abs_diff(oracle) < 1e-10);
  }
}

TEST_CASE("reduced-cumulant route agrees with the mobius route") {
  FiniteFixture fx;
  FiniteSequence f0 = random_finite_sequence(fx.sp, 4, 21, 0.8, 1.0);
  const double t = 0.6;
  for (int s = 1; s <= 2; ++s)
    for (int n_term = 0; n_term <= 4 - s; ++n_term) {
      FiniteFunction a = solve_marginal_distributions(fx.dyn, f0, s, t, {n_term, false});
      FiniteFunction b = solve_marginals_reduced(fx.dyn, f0, s, t, {n_term, false});
      CHECK(a.max_abs_diff(b) < 1e-10);
    }

  // n_term = 0 keeps only the leading flow.
  std::vector<int> one{0};
  FiniteFunction lead = solve_marginals_reduced(fx.dyn, f0, 1, t, {0, false});
  CHECK(lead.max_abs_diff(fx.dyn.flow(f0.component(1), -t, one)) < 1e-12);
}

TEST_CASE("correlation solver: single particle, uncorrelated data, exp-star transport") {
  FiniteFixture fx;
  std::mt19937_64 gen(31);
  const double t = 0.7;

  FiniteSequence g0 = random_finite_sequence(fx.sp, 4, 41, 0.7, 0.0);
  std::vector<int> one{0};
  CHECK(solve_correlations(fx.dyn, g0, 1, t)
            .max_abs_diff(fx.dyn.flow(g0.component(1), -t, one)) < 1e-12);

  // Uncorrelated initial data with non-interacting dynamics stays a product.
  FiniteSequence unc(fx.sp, 3);
  unc.component(1) = random_symmetric_function(fx.sp, 1, gen);
  FiniteLiouvillian free = fx.li.free_copy();
  FiniteDynamics free_dyn(fx.sp, free);
  for (int s = 2; s <= 3; ++s)
    CHECK(solve_correlations(free_dyn, unc, s, t).max_abs() < 1e-12);

  // Exp* g(t) = S(-t) Exp* g(0), componentwise.
  FiniteSequence gt(fx.sp, 4);
  for (int s = 1; s <= 4; ++s) gt.component(s) = solve_correlations(fx.dyn, g0, s, t);
  FiniteSequence lhs = exp_star(gt);
  FiniteSequence rhs = flow_sequence(fx.dyn, exp_star(g0), t);
  CHECK(max_component_diff(lhs, rhs) < 1e-10);

  CHECK_THROWS_AS(solve_correlations(fx.dyn, random_finite_sequence(fx.sp, 2, 5, 1.0, 0.3), 1, t),
                  PreconditionError);
}

TEST_CASE("cluster-argument correlations: dynamic route equals static mobius route") {
  FiniteFixture fx;
  FiniteSequence g0 = random_finite_sequence(fx.sp, 4, 51, 0.6, 0.0);
  FiniteSequence d0 = exp_star(g0);
  const double t = 0.5;

  FiniteSequence dt = flow_sequence(fx.dyn, d0, t);
  for (int s = 1; s <= 2; ++s)
    for (int n = 0; s + n <= 4 && n <= 2; ++n) {
      ClusterTuple c = ClusterTuple::cluster_plus_atoms(s, n);
      FiniteFunction dynamic = solve_correlations_cluster(fx.dyn, d0, c, t);
      FiniteFunction statical = cluster_correlation(dt, c);
      CHECK(dynamic.max_abs_diff(statical) < 1e-10);
    }
}

TEST_CASE("marginals from correlations") {
  FiniteFixture fx;
  std::mt19937_64 gen(61);

  // Only g_1: F_1 = g_1 and the series truncates exactly.
  FiniteSequence only1(fx.sp, 3);
  only1.component(1) = random_symmetric_function(fx.sp, 1, gen);
  FiniteFunction f1 = marginals_from_correlations(only1, 1, {2, false});
  CHECK(f1.max_abs_diff(only1.component(1)) < 1e-12);

  // Two-route check against the distribution-function route, small closed
  // correlation data so the matched truncations leave a negligible tail.
  FiniteSequence g0 = random_finite_sequence(fx.sp, 8, 62, 0.06, 0.0, 3);
  FiniteSequence d0 = exp_star(g0);
  const double t = 0.8;
  FiniteSequence dt = flow_sequence(fx.dyn, d0, t);
  FiniteSequence via_d = grand_canonical_marginals(dt);
  FiniteSequence gt = ln_star(dt);
  for (int s = 1; s <= 3; ++s) {
    FiniteFunction via_g = marginals_from_correlations(gt, s, {8 - s, false});
    CHECK(via_g.max_abs_diff(via_d.component(s)) < 1e-8);
  }
}

TEST_CASE("marginal correlations from correlations") {
  FiniteFixture fx;
  std::mt19937_64 gen(71);
  FiniteSequence only1(fx.sp, 3);
  only1.component(1) = random_symmetric_function(fx.sp, 1, gen);
  CHECK(marginal_correlations_from_correlations(only1, 1, {2, false})
            .max_abs_diff(only1.component(1)) < 1e-12);
  CHECK(marginal_correlations_from_correlations(only1, 2, {1, false}).max_abs() < 1e-12);

  // Matches ln_star of the marginal route on small data.
  FiniteSequence g0 = random_finite_sequence(fx.sp, 8, 72, 0.06, 0.0, 3);
  FiniteSequence d0 = exp_star(g0);
  const double t = 0.6;
  FiniteSequence dt = flow_sequence(fx.dyn, d0, t);
  FiniteSequence gt = ln_star(dt);
  FiniteSequence f = grand_canonical_marginals(dt);
  FiniteSequence big_g = ln_star(f.resized(5));
  for (int s = 1; s <= 2; ++s) {
    FiniteFunction via_series = marginal_correlations_from_correlations(gt, s, {8 - s, false});
    CHECK(via_series.max_abs_diff(big_g.component(s)) < 1e-8);
  }
}

TEST_CASE("nonlinear solver: t = 0 identity and exp-star consistency") {
  FiniteFixture fx;
  FiniteSequence g0 = random_finite_sequence(fx.sp, 8, 81, 0.06, 0.0, 3);
  FiniteSequence d0 = exp_star(g0);
  FiniteSequence f0 = grand_canonical_marginals(d0);
  FiniteSequence big_g0 = ln_star(f0.resized(8));

  for (int s = 1; s <= 2; ++s) {
    FiniteFunction at0 = solve_marginal_correlations(fx.dyn, big_g0, s, 0.0, {3, false});
    CHECK(at0.max_abs_diff(big_g0.component(s)) < 1e-11);
  }

  // F(t) = Exp* G(t) at matched truncations.
  const double t = 0.7;
  const int n_term = 6;
  FiniteSequence big_gt(fx.sp, 2);
  for (int s = 1; s <= 2; ++s)
    big_gt.component(s) = solve_marginal_correlations(fx.dyn, big_g0, s, t, {n_term, false});
  FiniteSequence ft = exp_star(big_gt.resized(2));
  for (int s = 1; s <= 2; ++s) {
    FiniteFunction direct = solve_marginal_distributions(fx.dyn, f0, s, t, {n_term, false});
    CHECK(ft.component(s).max_abs_diff(direct) < 1e-8);
  }
}

TEST_CASE("dual solver: additive observables, t = 0, duality pairing") {
  FiniteFixture fx;
  std::mt19937_64 gen(91);
  const double t = 0.8;

  // Additive-type observables: B_s(t) = A_s(t, Y) sum_i a_1(x_i).
  FiniteSequence b1(fx.sp, 3);
  b1.component(1) = random_symmetric_function(fx.sp, 1, gen);
  for (int s = 1; s <= 3; ++s) {
    FiniteFunction got = solve_marginal_observables(fx.dyn, b1, s, t);
    std::vector<std::pair<FiniteFunction, std::vector<int>>> terms;
    FiniteFunction summed(fx.sp, s);
    for (int i = 0; i < s; ++i)
      summed = summed.plus_scaled(
          assemble_product<FiniteFunction>(fx.sp, s, {{b1.component(1), {i}}}), 1.0);
    CumulantOperator top =
        CumulantOperator::cumulant(ClusterTuple::atoms(s), t, Direction::Observables);
    CHECK(got.max_abs_diff(top.apply(fx.dyn, summed)) < 1e-11);
  }

  FiniteSequence b0 = random_finite_sequence(fx.sp, 3, 92, 0.8, 0.5);
  for (int s = 1; s <= 3; ++s)
    CHECK(solve_marginal_observables(fx.dyn, b0, s, 0.0).max_abs_diff(b0.component(s)) < 1e-12);

  // Reduced-cumulant dual route.
  for (int s = 1; s <= 3; ++s) {
    FiniteFunction a = solve_marginal_observables(fx.dyn, b0, s, t);
    FiniteFunction b = solve_observables_reduced(fx.dyn, b0, s, t);
    CHECK(a.max_abs_diff(b) < 1e-10);
  }

  // <B(t), F(0)> = <B(0), F(t)> on a closed system.
  FiniteFunction d3 = random_symmetric_function(fx.sp, 3, gen, 0.5);
  for (double& v : d3.values()) v = std::abs(v) + 0.15;
  auto init = InitialData<FiniteFunction>::closed_system(3, d3);
  FiniteSequence f0 = grand_canonical_marginals(init.sequence);
  FiniteSequence ft(fx.sp, 3);
  ft.component(0) = FiniteFunction::constant(fx.sp, 0, 1.0);
  FiniteSequence bt(fx.sp, 3);
  bt.component(0) = b0.component(0);
  for (int s = 1; s <= 3; ++s) {
    ft.component(s) = solve_marginal_distributions(fx.dyn, f0, s, t, {3 - s, true}, 3);
    bt.component(s) = solve_marginal_observables(fx.dyn, b0, s, t);
  }
  double lhs = duality_pairing(bt, f0);
  double rhs = duality_pairing(b0, ft);
  CHECK(std::abs(lhs - rhs) < 1e-8);
}

TEST_CASE("k-ary observables map to one-component marginal observables") {
  FiniteFixture fx;
  std::mt19937_64 gen(99);
  FiniteSequence b2(fx.sp, 4);
  b2.component(2) = random_symmetric_function(fx.sp, 2, gen);
  FiniteSequence a = exp_create(b2, +1.0);
  // A_3 = sum_{i<j} a_2(x_i, x_j)
  FiniteFunction expect(fx.sp, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      expect = expect.plus_scaled(
          assemble_product<FiniteFunction>(fx.sp, 3, {{b2.component(2), {i, j}}}), 1.0);
  CHECK(a.component(3).max_abs_diff(expect) < 1e-12);
  CHECK(max_component_diff(marginal_observables_init(a), b2) < 1e-12);
}

TEST_CASE("missing components raise argument errors naming the component") {
  FiniteFixture fx;
  FiniteSequence f0 = random_finite_sequence(fx.sp, 2, 101, 0.9, 1.0);
  try {
    solve_marginal_distributions(fx.dyn, f0, 2, 0.5, {3, false});
    FAIL("expected ArgumentError");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}
