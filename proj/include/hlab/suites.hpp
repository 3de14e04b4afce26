#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "hlab/random_data.hpp"
#include "hlab/solvers.hpp"
#include "hlab/verification.hpp"

namespace hlab {

struct SuiteCheck {
  std::string id;
  std::function<ResidualReport()> run;
};

/// Parallelism cap: HIERARCHY_LAB_THREADS, else hardware concurrency.
inline int thread_cap() {
  if (const char* env = std::getenv("HIERARCHY_LAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run checks in parallel; results land at their check's index, so the
/// merged report is deterministic regardless of the thread count.
inline std::vector<ResidualReport> run_checks(const std::vector<SuiteCheck>& checks,
                                              int threads = thread_cap()) {
  std::vector<ResidualReport> out(checks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= checks.size()) return;
      try {
        out[i] = checks[i].run();
      } catch (const std::exception& e) {
        ResidualReport r;
        r.id = checks[i].id;
        r.residual = -1.0;
        r.pass = false;
        r.notes = std::string("exception: ") + e.what();
        out[i] = r;
      }
      out[i].id = checks[i].id;
    }
  };
  int n = std::min<int>(threads, static_cast<int>(checks.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

struct SuiteParams {
  std::uint64_t seed = 7;
  int finite_points = 2;
  int nodes = 12;
  double mass = 1.0;
  double kappa = 1.0;
  double t = 0.7;
};

namespace suites {

inline ResidualReport report_of(std::string id, std::string equation, double residual, double tol,
                                std::string model, const SuiteParams& p, int s = 0, double t = 0,
                                int truncation = -1) {
  ResidualReport r = ResidualReport::make(std::move(id), std::move(equation), residual, tol,
                                          std::move(model));
  r.seed = p.seed;
  r.s = s;
  r.t = t;
  r.truncation = truncation;
  return r;
}

// -- algebra ---------------------------------------------------------------

inline std::vector<SuiteCheck> algebra_finite(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  auto add = [&checks](std::string id, std::function<ResidualReport()> fn) {
    checks.push_back({std::move(id), std::move(fn)});
  };

  add("alg.star_homomorphism", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence f = random_finite_sequence(sp, 5, p.seed + 1, 0.8, 0.9, 2);
    FiniteSequence g = random_finite_sequence(sp, 5, p.seed + 2, 0.6, 1.2, 2);
    FiniteSequence fg = star_product(f, g);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      FiniteFunction u = random_test_function(sp, p.seed + 10 + k);
      worst = std::max(worst, std::abs(generating_functional(fg, u) -
                                       generating_functional(f, u) * generating_functional(g, u)));
    }
    return report_of("", "star-product homomorphism", worst, 1e-12, "finite", p);
  });

  add("alg.exp_ln_roundtrip", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence f = random_finite_sequence(sp, 5, p.seed + 3, 0.9, 0.0);
    FiniteSequence h = random_finite_sequence(sp, 5, p.seed + 4, 0.8, 1.0);
    double worst = std::max(max_component_diff(ln_star(exp_star(f)), f),
                            max_component_diff(exp_star(ln_star(h)), h));
    return report_of("", "Exp*/Ln* round trips", worst, 1e-12, "finite", p);
  });

  add("alg.shift_u_plus_one", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence f = random_finite_sequence(sp, 5, p.seed + 5, 0.8, 0.4, 2);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      FiniteFunction u = random_test_function(sp, p.seed + 20 + k, 0.7);
      FiniteFunction u1 = u;
      for (double& v : u1.values()) v += 1.0;
      worst = std::max(worst, std::abs(generating_functional(f, u1) -
                                       generating_functional(exp_annihilate(f), u)));
    }
    return report_of("", "(f,u+1) = (e^a f,u)", worst, 1e-12, "finite", p);
  });

  add("alg.shift_dual", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence a = random_finite_sequence(sp, 10, p.seed + 6, 0.8, 0.4, 2);
    FiniteSequence b = exp_create_neg(a);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      FiniteFunction u = random_test_function(sp, p.seed + 30 + k, 0.15);
      double int_u = 0.0;
      for (int j = 0; j < sp.points(); ++j) {
        int idx = j;
        int_u += sp.weight(j) * u.value(std::span<const int>(&idx, 1));
      }
      double lhs = generating_functional(a, u) * std::exp(-int_u);
      worst = std::max(worst, std::abs(lhs - generating_functional(b, u)));
    }
    return report_of("", "(A, u e^{-int u}) = (e^{-a+} A, u)", worst, 1e-12, "finite", p);
  });

  add("alg.adjointness", [p] {
    FiniteSpace sp(p.finite_points, std::vector<double>(p.finite_points, 1.0));
    FiniteSequence b = random_finite_sequence(sp, 3, p.seed + 7, 0.8, -0.6);
    FiniteSequence d = random_finite_sequence(sp, 4, p.seed + 8, 0.9, 0.3);
    double lhs = duality_pairing(create(b), d);
    double rhs = duality_pairing(b, annihilate(d));
    return report_of("", "<a+ b, d> = <b, a d>", std::abs(lhs - rhs), 1e-12, "finite", p);
  });

  add("alg.exp_star_functional", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence g = random_finite_sequence(sp, 8, p.seed + 9, 0.25, 0.0);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      FiniteFunction u = random_test_function(sp, p.seed + 40 + k, 0.4);
      worst = std::max(worst, std::abs(generating_functional(exp_star(g), u) -
                                       std::exp(generating_functional(g, u))));
    }
    return report_of("", "(Exp* g, u) = exp((g,u))", worst, 1e-12, "finite", p);
  });

  add("alg.derivative_shift", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence f = random_finite_sequence(sp, 4, p.seed + 11, 0.9, 0.5);
    std::mt19937_64 gen(p.seed + 12);
    std::uniform_int_distribution<int> pick(0, sp.points() - 1);
    double worst = 0.0;
    std::vector<int> pts{pick(gen), pick(gen), pick(gen)};
    GradedSequence<FiniteFunction> cur = f;
    for (int x : pts) cur = functional_derivative(cur, x);
    worst = std::abs(cur.scalar_component() - f.component(3).value(pts));
    return report_of("", "iterated derivatives recover components", worst, 1e-12, "finite", p);
  });

  add("alg.derivative_leibniz", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence f = random_finite_sequence(sp, 4, p.seed + 13, 0.8, 0.7);
    FiniteSequence g = random_finite_sequence(sp, 4, p.seed + 14, 0.7, -1.1);
    GradedSequence<FiniteFunction> lhs = functional_derivative(star_product(f, g), 0);
    FiniteSequence rhs = star_product(functional_derivative(f, 0), g)
                             .resized(lhs.max_level())
                             .plus_scaled(star_product(f, functional_derivative(g, 0))
                                              .resized(lhs.max_level()),
                                          1.0);
    double worst = 0.0;
    for (int n = 0; n <= lhs.max_level(); ++n)
      worst = std::max(worst, lhs.component(n).max_abs_diff(rhs.component(n)));
    return report_of("", "derivative Leibniz rule under *", worst, 1e-12, "finite", p);
  });

  add("alg.symmetry_preservation", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence f = random_finite_sequence(sp, 4, p.seed + 15, 0.9, 0.2);
    FiniteSequence g = random_finite_sequence(sp, 4, p.seed + 16, 0.8, 1.3);
    double worst = 0.0;
    for (const FiniteSequence& s :
         {star_product(f, g), exp_annihilate(f), create(f), exp_create_neg(f)})
      for (int n = 2; n <= s.max_level(); ++n)
        worst = std::max(worst, s.component(n).max_symmetry_violation(64, p.seed));
    return report_of("", "operations preserve symmetry", worst, 1e-12, "finite", p);
  });

  return checks;
}

// -- cumulants ---------------------------------------------------------------

inline std::vector<SuiteCheck> cumulants_finite(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  auto add = [&checks](std::string id, std::function<ResidualReport()> fn) {
    checks.push_back({std::move(id), std::move(fn)});
  };

  add("cum.bell_counts", [p] {
    double worst = 0.0;
    std::vector<std::int64_t> bell{1};
    for (int n = 0; n < 8; ++n) {
      std::int64_t next = 0;
      for (int k = 0; k <= n; ++k) next += binomial(n, k) * bell[static_cast<std::size_t>(k)];
      bell.push_back(next);
    }
    for (int k = 0; k <= 8; ++k)
      worst = std::max(worst, std::abs(static_cast<double>(
                                  static_cast<std::int64_t>(enumerate_partitions(k).size()) -
                                  bell[static_cast<std::size_t>(k)])));
    return report_of("", "partition counts vs Bell recurrence", worst, 0.0, "finite", p);
  });

  add("cum.alternating_sum", [p] {
    double worst = 0.0;
    for (int k = 0; k <= 8; ++k)
      worst = std::max(worst, std::abs(static_cast<double>(alternating_partition_sum(k) -
                                                           ((k % 2 == 0) ? 1 : -1))));
    return report_of("", "sum (-1)^{|P|} |P|! = (-1)^k", worst, 0.0, "finite", p);
  });

  add("cum.symbolic_inversion", [p] {
    // Mobius inversion over block-size indeterminates with exact integers.
    using Poly = std::map<std::vector<int>, std::int64_t>;
    auto mul = [](const Poly& a, const Poly& b) {
      Poly out;
      for (const auto& [ka, va] : a)
        for (const auto& [kb, vb] : b) {
          std::vector<int> key = ka;
          key.insert(key.end(), kb.begin(), kb.end());
          std::sort(key.begin(), key.end());
          out[key] += va * vb;
        }
      return out;
    };
    auto axpy = [](Poly& acc, const Poly& x, std::int64_t c) {
      for (const auto& [k, v] : x) {
        acc[k] += c * v;
        if (acc[k] == 0) acc.erase(k);
      }
    };
    const int k_max = 6;
    std::vector<Poly> cluster_sum(static_cast<std::size_t>(k_max) + 1);
    for (int k = 1; k <= k_max; ++k) {
      Poly e;
      for (const Partition& part : enumerate_partitions(k)) {
        Poly prod{{{}, 1}};
        for (const auto& block : part.blocks)
          prod = mul(prod, Poly{{{static_cast<int>(block.size())}, 1}});
        axpy(e, prod, 1);
      }
      cluster_sum[static_cast<std::size_t>(k)] = std::move(e);
    }
    double worst = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      Poly acc;
      for (const Partition& part : enumerate_partitions(k)) {
        Poly prod{{{}, 1}};
        for (const auto& block : part.blocks) prod = mul(prod, cluster_sum[block.size()]);
        axpy(acc, prod, mobius_coefficient(part));
      }
      Poly expect{{{k}, 1}};
      if (!(acc == expect)) worst = 1.0;
    }
    return report_of("", "symbolic Mobius inversion k <= 6", worst, 0.0, "finite", p);
  });

  add("cum.mobius_reconstruction", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    double worst = 0.0;
    for (auto [s, n] : std::vector<std::pair<int, int>>{{1, 0}, {2, 2}, {3, 2}, {2, 4}, {3, 3}, {1, 5}})
      worst = std::max(worst, verify_cluster_expansion(dyn, s, n, p.t).states_deviation);
    return report_of("", "cluster expansion reconstructs S", worst, 1e-10, "finite", p, 0, p.t);
  });

  add("cum.dual_recurrence", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    double worst = 0.0;
    for (auto [s, n] : std::vector<std::pair<int, int>>{{3, 2}, {4, 3}, {5, 4}})
      worst = std::max(worst, verify_cluster_expansion(dyn, s, n, p.t, nullptr, p.seed).dual_deviation);
    return report_of("", "dual recurrence reconstruction", worst, 1e-10, "finite", p, 0, p.t);
  });

  add("cum.reduced_equivalence", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence f0 = random_finite_sequence(sp, 4, p.seed + 1, 0.8, 1.0);
    double worst = 0.0;
    for (int s = 1; s <= 2; ++s)
      for (int n_term = 0; n_term <= 4 - s; ++n_term)
        worst = std::max(
            worst, solve_marginal_distributions(dyn, f0, s, p.t, {n_term, false})
                       .max_abs_diff(solve_marginals_reduced(dyn, f0, s, p.t, {n_term, false})));
    return report_of("", "cumulant vs reduced-cumulant route", worst, 1e-10, "finite", p, 0, p.t);
  });

  add("cum.degenerate_cases", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteLiouvillian free = li.free_copy();
    FiniteDynamics dyn(sp, li), free_dyn(sp, free);
    double worst = 0.0;
    for (int order = 2; order <= 3; ++order) {
      ClusterTuple ground = ClusterTuple::atoms(order);
      worst = std::max(worst, CumulantOperator::cumulant(ground, p.t, Direction::States)
                                  .dense(free_dyn)
                                  .cwiseAbs()
                                  .maxCoeff());
      worst = std::max(worst, CumulantOperator::cumulant(ground, 0.0, Direction::States)
                                  .dense(dyn)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    return report_of("", "order >= 2 cumulants vanish (free dynamics, t = 0)", worst, 1e-12,
                     "finite", p);
  });

  return checks;
}

// -- bbgky -------------------------------------------------------------------

namespace detail {

inline FiniteSequence closed_marginal_data(const FiniteSpace& sp, std::uint64_t seed, int n) {
  std::mt19937_64 gen(seed);
  FiniteFunction dn = random_symmetric_function(sp, n, gen, 0.5);
  for (double& v : dn.values()) v = std::abs(v) + 0.2;
  auto init = InitialData<FiniteFunction>::closed_system(n, dn);
  return grand_canonical_marginals(init.sequence);
}

inline FiniteSequence marginal_family(const FiniteDynamics& dyn, const FiniteSequence& f0,
                                      double t, int n, bool dt = false,
                                      const CumulantTweak& tweak = nullptr) {
  FiniteSequence out(dyn.space(), n);
  out.component(0) = FiniteFunction::constant(dyn.space(), 0, dt ? 0.0 : 1.0);
  for (int s = 1; s <= n; ++s)
    out.component(s) = solve_marginal_distributions(dyn, f0, s, t, {n - s, true}, n, dt, tweak);
  return out;
}

}  // namespace detail

inline std::vector<SuiteCheck> bbgky_finite(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  auto add = [&checks](std::string id, std::function<ResidualReport()> fn) {
    checks.push_back({std::move(id), std::move(fn)});
  };

  add("bb.closed_oracle", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    std::mt19937_64 gen(p.seed + 1);
    FiniteFunction d3 = random_symmetric_function(sp, 3, gen, 0.5);
    for (double& v : d3.values()) v = std::abs(v) + 0.2;
    auto init = InitialData<FiniteFunction>::closed_system(3, d3);
    FiniteSequence f0 = grand_canonical_marginals(init.sequence);
    double worst = 0.0;
    for (int s = 1; s <= 3; ++s)
      worst = std::max(worst,
                       solve_marginal_distributions(dyn, f0, s, p.t, {3 - s, true}, 3)
                           .max_abs_diff(oracle_closed_system(dyn, init, s, p.t)));
    return report_of("", "solution vs brute-force oracle", worst, 1e-10, "finite", p, 0, p.t);
  });

  add("bb.residual", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence f0 = detail::closed_marginal_data(sp, p.seed + 2, 3);
    FiniteSequence ft = detail::marginal_family(dyn, f0, p.t, 3);
    FiniteSequence dft = detail::marginal_family(dyn, f0, p.t, 3, true);
    double worst = 0.0;
    for (int s = 1; s <= 2; ++s)
      worst = std::max(worst, dft.component(s).max_abs_diff(bbgky_rhs(dyn, ft, s)));
    return report_of("", "BBGKY hierarchy residual", worst, 1e-8, "finite", p, 2, p.t);
  });

  add("bb.residual_threebody", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2, 3}, p.seed + 3, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence f0 = detail::closed_marginal_data(sp, p.seed + 4, 3);
    FiniteSequence ft = detail::marginal_family(dyn, f0, p.t, 3);
    FiniteSequence dft = detail::marginal_family(dyn, f0, p.t, 3, true);
    double worst = 0.0;
    for (int s = 1; s <= 2; ++s)
      worst = std::max(worst, dft.component(s).max_abs_diff(bbgky_rhs(dyn, ft, s)));
    return report_of("", "many-body BBGKY residual", worst, 1e-8, "finite", p, 2, p.t);
  });

  add("bb.normalization_invariance", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence d0 = random_finite_sequence(sp, 3, p.seed + 5, 0.8, 1.0);
    ResidualReport r = check_normalization_invariance(dyn, d0, 1.0, 1e-10);
    r.seed = p.seed;
    return r;
  });

  return checks;
}

inline std::vector<SuiteCheck> bbgky_continuous(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  auto add = [&checks](std::string id, std::function<ResidualReport()> fn) {
    checks.push_back({std::move(id), std::move(fn)});
  };

  auto gaussian = [](const ContinuousSpace& sp, int arity, double amp = 1.0) {
    return ContinuousFunction(sp, arity, [amp](std::span<const double> x) {
      double s = 0.0;
      for (double c : x) s += c * c;
      return amp * std::exp(-0.5 * s);
    });
  };

  add("bb.cont_oracle", [p, gaussian] {
    ContinuousSpace sp = ContinuousSpace::gauss(1, p.nodes);
    Hamiltonian h = Hamiltonian::harmonic(p.kappa, p.mass);
    ContinuousDynamics dyn(sp, h);
    auto init = InitialData<ContinuousFunction>::closed_system(3, gaussian(sp, 3));
    ContinuousSequence f0 = grand_canonical_marginals(init.sequence);
    double worst = 0.0;
    std::vector<std::vector<double>> pts1{{0.3, -0.5}, {1.0, 0.7}, {-1.2, 0.2}};
    for (double t : {0.1, 1.0}) {
      ContinuousFunction sol = solve_marginal_distributions(dyn, f0, 1, t, {2, true}, 3);
      ContinuousFunction ora = oracle_closed_system(dyn, init, 1, t);
      for (const auto& pt : pts1)
        worst = std::max(worst, std::abs(sol.value(pt) - ora.value(pt)) / std::abs(ora.value(pt)));
      ContinuousFunction sol2 = solve_marginal_distributions(dyn, f0, 2, t, {1, true}, 3);
      ContinuousFunction ora2 = oracle_closed_system(dyn, init, 2, t);
      std::vector<double> p2{0.4, -0.3, -0.8, 0.6};
      worst = std::max(worst,
                       std::abs(sol2.value(p2) - ora2.value(p2)) / std::abs(ora2.value(p2)));
    }
    ResidualReport r = report_of("", "harmonic closed system vs oracle (relative)", worst, 1e-6,
                                 "continuous", p, 0, 1.0);
    return r;
  });

  add("bb.cont_residual", [p, gaussian] {
    ContinuousSpace sp = ContinuousSpace::gauss(1, p.nodes);
    Hamiltonian h = Hamiltonian::harmonic(p.kappa, p.mass);
    ContinuousDynamics dyn(sp, h);
    auto init = InitialData<ContinuousFunction>::closed_system(2, gaussian(sp, 2));
    ContinuousSequence f0 = grand_canonical_marginals(init.sequence);
    const double t = 0.5, ht = 1e-4;
    ContinuousSequence ft(sp, 2);
    for (int s = 1; s <= 2; ++s)
      ft.component(s) = solve_marginal_distributions(dyn, f0, s, t, {2 - s, true}, 2);
    ContinuousFunction rhs = bbgky_rhs(dyn, ft, 1);
    ContinuousFunction up = solve_marginal_distributions(dyn, f0, 1, t + ht, {1, true}, 2);
    ContinuousFunction dn = solve_marginal_distributions(dyn, f0, 1, t - ht, {1, true}, 2);
    double worst = 0.0;
    for (std::vector<double> pt : {std::vector<double>{0.2, -0.4}, std::vector<double>{0.8, 0.5}}) {
      double lhs = (up.value(pt) - dn.value(pt)) / (2 * ht);
      worst = std::max(worst, std::abs(lhs - rhs.value(pt)));
    }
    ResidualReport r = report_of("", "continuous BBGKY residual", worst, 1e-4, "continuous", p, 1, t);
    r.h = ht;
    return r;
  });

  add("bb.cont_normalization", [p, gaussian] {
    ContinuousSpace sp = ContinuousSpace::gauss(1, p.nodes);
    Hamiltonian h = Hamiltonian::harmonic(p.kappa, p.mass);
    ContinuousDynamics dyn(sp, h);
    ContinuousSequence d0(sp, 2);
    d0.component(2) = gaussian(sp, 2);
    ResidualReport r =
        check_normalization_invariance(dyn, d0, 1.0, 1e-6 * 4 * M_PI * M_PI);
    r.seed = p.seed;
    return r;
  });

  return checks;
}

// -- dual ----------------------------------------------------------------------

inline std::vector<SuiteCheck> dual_finite(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  auto add = [&checks](std::string id, std::function<ResidualReport()> fn) {
    checks.push_back({std::move(id), std::move(fn)});
  };

  add("du.residual", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence b0 = random_finite_sequence(sp, 3, p.seed + 1, 0.8, 0.4);
    FiniteSequence bt(sp, 3), dbt(sp, 3);
    bt.component(0) = b0.component(0);
    for (int s = 1; s <= 3; ++s) {
      bt.component(s) = solve_marginal_observables(dyn, b0, s, p.t);
      dbt.component(s) = solve_marginal_observables(dyn, b0, s, p.t, true);
    }
    double worst = 0.0;
    for (int s = 1; s <= 3; ++s)
      worst = std::max(worst, dbt.component(s).max_abs_diff(dual_bbgky_rhs(dyn, bt, s)));
    return report_of("", "dual BBGKY residual", worst, 1e-8, "finite", p, 3, p.t);
  });

  add("du.additive", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    std::mt19937_64 gen(p.seed + 2);
    FiniteSequence b1(sp, 3);
    b1.component(1) = random_symmetric_function(sp, 1, gen);
    double worst = 0.0;
    for (int s = 1; s <= 3; ++s) {
      FiniteFunction got = solve_marginal_observables(dyn, b1, s, p.t);
      FiniteFunction summed(sp, s);
      for (int i = 0; i < s; ++i)
        summed = summed.plus_scaled(
            assemble_product<FiniteFunction>(sp, s, {{b1.component(1), {i}}}), 1.0);
      CumulantOperator top =
          CumulantOperator::cumulant(ClusterTuple::atoms(s), p.t, Direction::Observables);
      worst = std::max(worst, got.max_abs_diff(top.apply(dyn, summed)));
    }
    return report_of("", "additive-type observable shortcut", worst, 1e-10, "finite", p, 3, p.t);
  });

  add("du.duality_pairing", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence f0 = detail::closed_marginal_data(sp, p.seed + 3, 3);
    FiniteSequence b0 = random_finite_sequence(sp, 3, p.seed + 4, 0.8, 0.5);
    FiniteSequence ft = detail::marginal_family(dyn, f0, p.t, 3);
    FiniteSequence bt(sp, 3);
    bt.component(0) = b0.component(0);
    for (int s = 1; s <= 3; ++s) bt.component(s) = solve_marginal_observables(dyn, b0, s, p.t);
    double lhs = duality_pairing(bt, f0);
    double rhs = duality_pairing(b0, ft);
    return report_of("", "<B(t),F(0)> = <B(0),F(t)>", std::abs(lhs - rhs), 1e-8, "finite", p, 0,
                     p.t);
  });

  add("du.reduced_equivalence", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence b0 = random_finite_sequence(sp, 3, p.seed + 5, 0.8, -0.3);
    double worst = 0.0;
    for (int s = 1; s <= 3; ++s)
      worst = std::max(worst, solve_marginal_observables(dyn, b0, s, p.t)
                                  .max_abs_diff(solve_observables_reduced(dyn, b0, s, p.t)));
    return report_of("", "dual reduced-cumulant equivalence", worst, 1e-10, "finite", p, 3, p.t);
  });

  add("du.marginal_map_roundtrip", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteSequence a = random_finite_sequence(sp, 6, p.seed + 6, 0.9, -0.4);
    double worst = max_component_diff(exp_create(exp_create_neg(a), +1.0), a);
    return report_of("", "A -> B -> A round trip", worst, 1e-12, "finite", p);
  });

  return checks;
}

inline std::vector<SuiteCheck> dual_continuous(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  checks.push_back({"du.cont_residual", [p] {
    ContinuousSpace sp = ContinuousSpace::gauss(1, p.nodes);
    Hamiltonian h = Hamiltonian::harmonic(p.kappa, p.mass);
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
    std::vector<double> pt{0.4, 0.1, -0.3, -0.6};
    double lhs = (up.value(pt) - dn.value(pt)) / (2 * ht);
    ResidualReport r = report_of("", "continuous dual residual", std::abs(lhs - rhs.value(pt)),
                                 1e-4, "continuous", p, 2, t);
    r.h = ht;
    return r;
  }});
  return checks;
}

// -- correlations ---------------------------------------------------------------

inline std::vector<SuiteCheck> correlations_finite(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  auto add = [&checks](std::string id, std::function<ResidualReport()> fn) {
    checks.push_back({std::move(id), std::move(fn)});
  };

  add("co.exp_transport", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence g0 = random_finite_sequence(sp, 4, p.seed + 1, 0.7, 0.0);
    FiniteSequence gt(sp, 4);
    for (int s = 1; s <= 4; ++s) gt.component(s) = solve_correlations(dyn, g0, s, p.t);
    FiniteSequence lhs = exp_star(gt);
    FiniteSequence d0 = exp_star(g0);
    FiniteSequence rhs = d0;
    for (int n = 1; n <= 4; ++n) {
      std::vector<int> axes(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) axes[static_cast<std::size_t>(i)] = i;
      rhs.component(n) = dyn.flow(d0.component(n), -p.t, axes);
    }
    return report_of("", "Exp* g(t) = S(-t) Exp* g(0)", max_component_diff(lhs, rhs), 1e-10,
                     "finite", p, 0, p.t);
  });

  add("co.residual", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence g0 = random_finite_sequence(sp, 3, p.seed + 2, 0.7, 0.0);
    FiniteSequence gt(sp, 3), dgt(sp, 3);
    for (int s = 1; s <= 3; ++s) {
      gt.component(s) = solve_correlations(dyn, g0, s, p.t);
      dgt.component(s) = solve_correlations(dyn, g0, s, p.t, true);
    }
    double worst = 0.0;
    for (int s = 1; s <= 3; ++s)
      worst = std::max(worst, dgt.component(s).max_abs_diff(liouville_hierarchy_rhs(dyn, gt, s)));
    return report_of("", "Liouville hierarchy residual", worst, 1e-8, "finite", p, 3, p.t);
  });

  add("co.cluster_tworoute", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence g0 = random_finite_sequence(sp, 4, p.seed + 3, 0.6, 0.0);
    FiniteSequence d0 = exp_star(g0);
    FiniteSequence dt = d0;
    for (int n = 1; n <= 4; ++n) {
      std::vector<int> axes(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) axes[static_cast<std::size_t>(i)] = i;
      dt.component(n) = dyn.flow(d0.component(n), -p.t, axes);
    }
    double worst = 0.0;
    for (int s = 1; s <= 2; ++s)
      for (int n = 0; s + n <= 4 && n <= 2; ++n) {
        ClusterTuple c = ClusterTuple::cluster_plus_atoms(s, n);
        worst = std::max(worst, solve_correlations_cluster(dyn, d0, c, p.t)
                                    .max_abs_diff(cluster_correlation(dt, c)));
      }
    return report_of("", "cluster correlations: dynamic vs Mobius route", worst, 1e-10, "finite",
                     p, 0, p.t);
  });

  add("co.marginals_from_correlations", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence g0 = random_finite_sequence(sp, 8, p.seed + 4, 0.06, 0.0, 3);
    FiniteSequence d0 = exp_star(g0);
    FiniteSequence dt = d0;
    for (int n = 1; n <= 8; ++n) {
      std::vector<int> axes(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) axes[static_cast<std::size_t>(i)] = i;
      dt.component(n) = dyn.flow(d0.component(n), -p.t, axes);
    }
    FiniteSequence via_d = grand_canonical_marginals(dt);
    FiniteSequence gt = ln_star(dt);
    double worst = 0.0;
    for (int s = 1; s <= 3; ++s)
      worst = std::max(worst, marginals_from_correlations(gt, s, {8 - s, false})
                                  .max_abs_diff(via_d.component(s)));
    return report_of("", "marginals via correlations vs D-route", worst, 1e-8, "finite", p, 3,
                     p.t, 8);
  });

  return checks;
}

inline std::vector<SuiteCheck> correlations_continuous(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  checks.push_back({"co.cont_residual", [p] {
    ContinuousSpace sp = ContinuousSpace::gauss(1, p.nodes);
    Hamiltonian h = Hamiltonian::harmonic(p.kappa, p.mass);
    ContinuousDynamics dyn(sp, h);
    ContinuousSequence g0(sp, 3);
    g0.component(1) = ContinuousFunction(sp, 1, [](std::span<const double> x) {
      return 0.8 * std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
    });
    g0.component(2) = ContinuousFunction(sp, 2, [](std::span<const double> x) {
      double s = 0.0;
      for (double c : x) s += c * c;
      return 0.3 * std::exp(-0.5 * s);
    });
    const double t = 0.4, ht = 1e-4;
    ContinuousSequence gt(sp, 2);
    for (int s = 1; s <= 2; ++s) gt.component(s) = solve_correlations(dyn, g0, s, t);
    ContinuousFunction rhs = liouville_hierarchy_rhs(dyn, gt, 2);
    ContinuousFunction up = solve_correlations(dyn, g0, 2, t + ht);
    ContinuousFunction dn = solve_correlations(dyn, g0, 2, t - ht);
    std::vector<double> pt{0.3, -0.2, -0.5, 0.6};
    double lhs = (up.value(pt) - dn.value(pt)) / (2 * ht);
    ResidualReport r = report_of("", "continuous Liouville-hierarchy residual",
                                 std::abs(lhs - rhs.value(pt)), 1e-4, "continuous", p, 2, t);
    r.h = ht;
    return r;
  }});
  return checks;
}

// -- nonlinear ---------------------------------------------------------------

inline std::vector<SuiteCheck> nonlinear_finite(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  auto add = [&checks](std::string id, std::function<ResidualReport()> fn) {
    checks.push_back({std::move(id), std::move(fn)});
  };

  add("nl.chaos_collapse", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    std::mt19937_64 gen(p.seed + 1);
    FiniteSequence chaos(sp, 5);
    chaos.component(1) = random_symmetric_function(sp, 1, gen);
    double worst = 0.0;
    for (int s = 1; s <= 3; ++s)
      for (int n = 0; s + n <= 5 && n <= 2; ++n) {
        FiniteFunction u = nonlinear_reduced_cumulant(dyn, s, n, p.t, chaos);
        std::vector<std::pair<FiniteFunction, std::vector<int>>> factors;
        for (int i = 0; i < s + n; ++i)
          factors.emplace_back(chaos.component(1), std::vector<int>{i});
        FiniteFunction prod =
            assemble_product<FiniteFunction>(sp, s + n, std::move(factors));
        CumulantOperator top =
            CumulantOperator::cumulant(ClusterTuple::atoms(s + n), p.t, Direction::States);
        worst = std::max(worst, u.max_abs_diff(top.apply(dyn, prod)));
      }
    return report_of("", "chaos data collapses the reduced cumulant", worst, 1e-10, "finite", p,
                     0, p.t);
  });

  add("nl.expstar_consistency", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence g0 = random_finite_sequence(sp, 8, p.seed + 2, 0.06, 0.0, 3);
    FiniteSequence f0 = grand_canonical_marginals(exp_star(g0));
    FiniteSequence big_g0 = ln_star(f0.resized(8));
    const int n_term = 6;
    FiniteSequence big_gt(sp, 2);
    for (int s = 1; s <= 2; ++s)
      big_gt.component(s) = solve_marginal_correlations(dyn, big_g0, s, p.t, {n_term, false});
    FiniteSequence ft = exp_star(big_gt);
    double worst = 0.0;
    for (int s = 1; s <= 2; ++s)
      worst = std::max(worst,
                       ft.component(s).max_abs_diff(
                           solve_marginal_distributions(dyn, f0, s, p.t, {n_term, false})));
    return report_of("", "F = Exp* G consistency", worst, 1e-8, "finite", p, 2, p.t, n_term);
  });

  add("nl.residual", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence g0 = random_finite_sequence(sp, 8, p.seed + 3, 0.06, 0.0, 3);
    FiniteSequence f0 = grand_canonical_marginals(exp_star(g0));
    FiniteSequence big_g0 = ln_star(f0.resized(8));
    FiniteSequence gt(sp, 3), dgt(sp, 3);
    for (int s = 1; s <= 3; ++s) {
      int depth = std::min(6, 8 - s);
      gt.component(s) = solve_marginal_correlations(dyn, big_g0, s, p.t, {depth, false});
      dgt.component(s) = solve_marginal_correlations(dyn, big_g0, s, p.t, {depth, false}, true);
    }
    double worst = 0.0;
    for (int s = 1; s <= 2; ++s)
      worst = std::max(worst, dgt.component(s).max_abs_diff(nonlinear_bbgky_rhs(dyn, gt, s)));
    return report_of("", "nonlinear BBGKY residual", worst, 1e-8, "finite", p, 2, p.t, 6);
  });

  add("nl.marginal_correlation_series", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence g0 = random_finite_sequence(sp, 8, p.seed + 4, 0.06, 0.0, 3);
    FiniteSequence d0 = exp_star(g0);
    FiniteSequence dt = d0;
    for (int n = 1; n <= 8; ++n) {
      std::vector<int> axes(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) axes[static_cast<std::size_t>(i)] = i;
      dt.component(n) = dyn.flow(d0.component(n), -p.t, axes);
    }
    FiniteSequence gt = ln_star(dt);
    FiniteSequence f = grand_canonical_marginals(dt);
    FiniteSequence big_g = ln_star(f.resized(5));
    double worst = 0.0;
    for (int s = 1; s <= 2; ++s)
      worst = std::max(worst, marginal_correlations_from_correlations(gt, s, {8 - s, false})
                                  .max_abs_diff(big_g.component(s)));
    return report_of("", "G from correlation series vs Ln* F", worst, 1e-8, "finite", p, 2, p.t);
  });

  return checks;
}

inline std::vector<SuiteCheck> nonlinear_continuous(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  checks.push_back({"nl.cont_residual", [p] {
    ContinuousSpace sp = ContinuousSpace::gauss(1, std::min(p.nodes, 10));
    Hamiltonian h = Hamiltonian::harmonic(p.kappa, p.mass);
    ContinuousDynamics dyn(sp, h);
    auto chaos = InitialData<ContinuousFunction>::chaos(
        ContinuousFunction(sp, 1,
                           [](std::span<const double> x) {
                             return 0.08 * std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
                           }),
        6);
    const double t = 0.3, ht = 1e-4;
    ContinuousSequence gt(sp, 2);
    gt.component(1) = solve_marginal_correlations(dyn, chaos.sequence, 1, t, {2, false});
    gt.component(2) = solve_marginal_correlations(dyn, chaos.sequence, 2, t, {1, false});
    ContinuousFunction rhs = nonlinear_bbgky_rhs(dyn, gt, 1);
    ContinuousFunction up = solve_marginal_correlations(dyn, chaos.sequence, 1, t + ht, {2, false});
    ContinuousFunction dn = solve_marginal_correlations(dyn, chaos.sequence, 1, t - ht, {2, false});
    std::vector<double> pt{0.3, -0.4};
    double lhs = (up.value(pt) - dn.value(pt)) / (2 * ht);
    ResidualReport r = report_of("", "continuous nonlinear residual", std::abs(lhs - rhs.value(pt)),
                                 1e-4, "continuous", p, 1, t);
    r.h = ht;
    return r;
  }});
  return checks;
}

// -- functional ---------------------------------------------------------------

inline std::vector<SuiteCheck> functional_finite(const SuiteParams& p) {
  std::vector<SuiteCheck> checks;
  auto add = [&checks](std::string id, std::function<ResidualReport()> fn) {
    checks.push_back({std::move(id), std::move(fn)});
  };

  // Each check evaluates both sides against 5 random test functions.
  add("fe.fh1", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence f0 = detail::closed_marginal_data(sp, p.seed + 1, 3);
    FiniteSequence ft = detail::marginal_family(dyn, f0, p.t, 3);
    FiniteSequence dft = detail::marginal_family(dyn, f0, p.t, 3, true);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      FiniteFunction u = random_test_function(sp, p.seed + 50 + k, 0.3);
      worst = std::max(worst, functional_equation_residual(dyn, ft, dft, u, "fh1").residual);
    }
    return report_of("", "BBGKY hierarchy in functional derivatives", worst, 1e-8, "finite", p, 0,
                     p.t);
  });

  add("fe.eqfg", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence g0 = random_finite_sequence(sp, 6, p.seed + 2, 0.3, 0.0);
    FiniteSequence gt(sp, 6), dgt(sp, 6);
    for (int s = 1; s <= 6; ++s) {
      gt.component(s) = solve_correlations(dyn, g0, s, p.t);
      dgt.component(s) = solve_correlations(dyn, g0, s, p.t, true);
    }
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      FiniteFunction u = random_test_function(sp, p.seed + 60 + k, 0.1);
      worst = std::max(worst, functional_equation_residual(dyn, gt, dgt, u, "eqfg_2").residual);
    }
    return report_of("", "Liouville hierarchy in functional derivatives", worst, 1e-8, "finite",
                     p, 0, p.t);
  });

  add("fe.eqfG", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence gsm = random_finite_sequence(sp, 8, p.seed + 3, 0.06, 0.0, 3);
    FiniteSequence fsm = grand_canonical_marginals(exp_star(gsm));
    FiniteSequence big_g0 = ln_star(fsm.resized(8));
    FiniteSequence bgt(sp, 4), dbgt(sp, 4);
    for (int s = 1; s <= 4; ++s) {
      bgt.component(s) = solve_marginal_correlations(dyn, big_g0, s, p.t, {4, false});
      dbgt.component(s) = solve_marginal_correlations(dyn, big_g0, s, p.t, {4, false}, true);
    }
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      FiniteFunction u = random_test_function(sp, p.seed + 70 + k, 0.1);
      worst = std::max(worst, functional_equation_residual(dyn, bgt, dbgt, u, "eqfG_2").residual);
    }
    return report_of("", "nonlinear BBGKY in functional derivatives", worst, 1e-8, "finite", p, 0,
                     p.t);
  });

  add("fe.fh2", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence b0 = random_finite_sequence(sp, 6, p.seed + 4, 0.7, 0.2);
    FiniteSequence bt(sp, 6), dbt(sp, 6);
    bt.component(0) = b0.component(0);
    for (int s = 1; s <= 6; ++s) {
      bt.component(s) = solve_marginal_observables(dyn, b0, s, p.t);
      dbt.component(s) = solve_marginal_observables(dyn, b0, s, p.t, true);
    }
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      FiniteFunction u = random_test_function(sp, p.seed + 80 + k, 0.05);
      worst = std::max(worst, functional_equation_residual(dyn, bt, dbt, u, "fh2").residual);
    }
    return report_of("", "dual BBGKY hierarchy in functional derivatives", worst, 1e-8, "finite",
                     p, 0, p.t);
  });

  add("fe.u_zero", [p] {
    FiniteSpace sp = FiniteSpace::uniform(p.finite_points);
    FiniteLiouvillian li(sp, {{2}, p.seed, 1.0, kDefaultTableLimit});
    FiniteDynamics dyn(sp, li);
    FiniteSequence f0 = detail::closed_marginal_data(sp, p.seed + 5, 3);
    FiniteSequence ft = detail::marginal_family(dyn, f0, p.t, 3);
    FiniteSequence dft = detail::marginal_family(dyn, f0, p.t, 3, true);
    FiniteFunction u0(sp, 1);
    return report_of("", "u = 0 reduces to scalar dynamics",
                     functional_equation_residual(dyn, ft, dft, u0, "fh1").residual, 1e-10,
                     "finite", p, 0, p.t);
  });

  return checks;
}

}  // namespace suites

/// Assemble the named suite for the given model.
inline std::vector<SuiteCheck> make_suite(const std::string& name, const std::string& model,
                                          const SuiteParams& p) {
  const bool finite = model == "finite";
  const bool continuous = model == "continuous";
  if (!finite && !continuous) throw ArgumentError("make_suite: model must be finite|continuous");

  auto pick = [&](const std::string& suite) {
    std::vector<SuiteCheck> out;
    auto append = [&out](std::vector<SuiteCheck> v) {
      for (auto& c : v) out.push_back(std::move(c));
    };
    if (suite == "algebra") {
      if (finite) append(suites::algebra_finite(p));
    } else if (suite == "cumulants") {
      if (finite) append(suites::cumulants_finite(p));
    } else if (suite == "bbgky") {
      if (finite) append(suites::bbgky_finite(p));
      if (continuous) append(suites::bbgky_continuous(p));
    } else if (suite == "dual") {
      if (finite) append(suites::dual_finite(p));
      if (continuous) append(suites::dual_continuous(p));
    } else if (suite == "correlations") {
      if (finite) append(suites::correlations_finite(p));
      if (continuous) append(suites::correlations_continuous(p));
    } else if (suite == "nonlinear") {
      if (finite) append(suites::nonlinear_finite(p));
      if (continuous) append(suites::nonlinear_continuous(p));
    } else if (suite == "functional") {
      if (finite) append(suites::functional_finite(p));
      if (continuous)
        throw NotSupportedError(
            "functional-derivative equations are verified on the finite model only");
    } else {
      throw ArgumentError("unknown suite: " + suite);
    }
    return out;
  };

  if (name != "all") return pick(name);
  std::vector<SuiteCheck> out;
  for (const char* s : {"algebra", "cumulants", "bbgky", "dual", "correlations", "nonlinear"}) {
    auto v = pick(s);
    for (auto& c : v) out.push_back(std::move(c));
  }
  if (finite) {
    auto v = pick("functional");
    for (auto& c : v) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace hlab
