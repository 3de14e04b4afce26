// Command-line entry point: identity/residual suites, solution evaluation,
// cumulant term-list emission, and report rendering.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hlab/run_config.hpp"
#include "hlab/serialization.hpp"
#include "hlab/solvers.hpp"
#include "hlab/suites.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hlab::ArgumentError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw hlab::ArgumentError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hlab::ArgumentError("cannot write file: " + path);
  out << text << "\n";
}

struct VerifyArgs {
  std::string suite = "all";
  std::string model = "finite";
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string report_path;
};

int run_verify(const VerifyArgs& args) {
  hlab::RunConfig config;
  if (!args.config_path.empty()) config = hlab::RunConfig::from_json(load_json_file(args.config_path));
  config.model = args.model;
  if (args.seed) config.seed = *args.seed;
  config.validate();

  hlab::SuiteParams params;
  params.seed = config.seed;
  params.finite_points = config.finite_points;
  params.nodes = config.quadrature_nodes;
  params.mass = config.mass;
  params.kappa = config.kappa;
  params.t = config.time;

  auto checks = hlab::make_suite(args.suite, config.model, params);
  auto results = hlab::run_checks(checks);

  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    std::printf("[%s] %-34s residual %.3e tol %.1e (%s)\n", r.pass ? "PASS" : "FAIL",
                r.id.c_str(), r.residual, r.tolerance, r.equation.c_str());
  }
  std::printf("%zu checks, %s\n", results.size(), all_pass ? "all passed" : "FAILURES present");

  json report;
  report["schema"] = 1;
  report["suite"] = args.suite;
  report["model"] = config.model;
  report["seed"] = config.seed;
  report["config_hash"] = config.hash();
  report["all_pass"] = all_pass;
  json checks_json = json::array();
  for (const auto& r : results) checks_json.push_back(hlab::residual_to_json(r));
  report["checks"] = checks_json;
  if (!args.report_path.empty()) write_output(args.report_path, report.dump(2));

  return all_pass ? 0 : 1;
}

struct SolveArgs {
  std::string hierarchy;
  int s = 1;
  double t = 0.0;
  int trunc = -1;
  std::string init_path;
  std::string eval_path;
  std::string config_path;
  std::string out_path;
};

hlab::FiniteFunction finite_profile(const hlab::FiniteSpace& sp, const json& init, int arity) {
  std::string profile = init.value("profile", "random");
  if (profile == "random") {
    std::mt19937_64 gen(init.value("profile_seed", 5));
    double scale = init.value("scale", 0.5);
    hlab::FiniteFunction f = hlab::random_symmetric_function(sp, arity, gen, scale);
    if (init.value("positive", true))
      for (double& v : f.values()) v = std::abs(v) + 0.1;
    return f;
  }
  throw hlab::ArgumentError("init: unknown finite profile '" + profile + "'");
}

int run_solve(const SolveArgs& args) {
  hlab::RunConfig config;
  if (!args.config_path.empty()) config = hlab::RunConfig::from_json(load_json_file(args.config_path));
  json init = load_json_file(args.init_path);
  if (!init.contains("type")) throw hlab::ArgumentError("init: missing 'type'");
  std::string type = init.at("type").get<std::string>();
  int n_term = args.trunc >= 0 ? args.trunc : config.n_term;

  json out;
  out["schema"] = 1;
  out["config_hash"] = config.hash();
  out["seed"] = config.seed;
  out["hierarchy"] = args.hierarchy;
  out["s"] = args.s;
  out["t"] = args.t;

  if (config.model == "finite") {
    static std::optional<hlab::FiniteSpace> space;
    std::vector<double> weights = config.weights;
    if (weights.empty()) weights.assign(static_cast<std::size_t>(config.finite_points), 1.0);
    space.emplace(config.finite_points, weights);
    hlab::FiniteLiouvillian li(*space, {config.interaction_arities, config.seed,
                                        config.generator_scale, hlab::kDefaultTableLimit});
    hlab::FiniteDynamics dyn(*space, li);

    hlab::FiniteFunction result(*space, 0);
    int closed_at = -1;
    if (args.hierarchy == "bbgky") {
      hlab::InitialData<hlab::FiniteFunction> data;
      if (type == "closed") {
        int n = init.value("N", 3);
        if (init.contains("sequence")) {
          auto loaded = hlab::sequence_from_json(init.at("sequence"));
          data = hlab::InitialData<hlab::FiniteFunction>::closed_system(
              n, loaded.sequence.component(n));
        } else {
          data = hlab::InitialData<hlab::FiniteFunction>::closed_system(
              n, finite_profile(*space, init, n));
        }
        closed_at = n;
      } else if (type == "grand_canonical") {
        data = hlab::InitialData<hlab::FiniteFunction>::grand_canonical(
            init.value("activity", 0.5), finite_profile(*space, init, 1),
            init.value("n_max", 8));
      } else if (type == "explicit") {
        auto loaded = hlab::sequence_from_json(init.at("sequence"));
        data = hlab::InitialData<hlab::FiniteFunction>::explicit_sequence(
            loaded.sequence.resized(loaded.sequence.max_level()));
      } else {
        throw hlab::ArgumentError("init: type '" + type + "' not valid for bbgky");
      }
      // keep the space of the loaded sequence alive through `space`
      hlab::FiniteSequence f0 = hlab::grand_canonical_marginals(data.sequence.resized(
          std::max(data.sequence.max_level(), args.s + n_term)));
      int depth = std::min(n_term, f0.max_level() - args.s);
      result = hlab::solve_marginal_distributions(dyn, f0, args.s, args.t, {depth, false},
                                                  closed_at);
    } else if (args.hierarchy == "liouville") {
      hlab::FiniteSequence g0(*space, std::max(args.s, init.value("n_max", args.s)));
      if (type == "chaos") {
        g0.component(1) = finite_profile(*space, init, 1);
      } else if (type == "explicit") {
        auto loaded = hlab::sequence_from_json(init.at("sequence"));
        g0 = loaded.sequence.resized(std::max(args.s, loaded.sequence.max_level()));
      } else {
        throw hlab::ArgumentError("init: type '" + type + "' not valid for liouville");
      }
      result = hlab::solve_correlations(dyn, g0, args.s, args.t);
    } else if (args.hierarchy == "nonlinear") {
      hlab::FiniteSequence g0(*space, args.s + n_term + 2);
      if (type == "chaos") {
        g0.component(1) = finite_profile(*space, init, 1);
      } else if (type == "explicit") {
        auto loaded = hlab::sequence_from_json(init.at("sequence"));
        g0 = loaded.sequence.resized(std::max(args.s + n_term, loaded.sequence.max_level()));
      } else {
        throw hlab::ArgumentError("init: type '" + type + "' not valid for nonlinear");
      }
      int depth = std::min(n_term, g0.max_level() - args.s);
      result = hlab::solve_marginal_correlations(dyn, g0, args.s, args.t, {depth, false});
    } else if (args.hierarchy == "dual") {
      hlab::FiniteSequence b0(*space, args.s);
      if (type == "explicit") {
        auto loaded = hlab::sequence_from_json(init.at("sequence"));
        b0 = loaded.sequence.resized(std::max(args.s, loaded.sequence.max_level()));
      } else if (type == "additive") {
        b0.component(1) = finite_profile(*space, init, 1);
      } else {
        throw hlab::ArgumentError("init: type '" + type + "' not valid for dual");
      }
      result = hlab::solve_marginal_observables(dyn, b0, args.s, args.t);
    } else {
      throw hlab::ArgumentError("solve: unknown hierarchy '" + args.hierarchy + "'");
    }

    out["truncation"] = {{"n_term", result.info().truncation_order},
                         {"exact", result.info().exact}};
    json values = json::array();
    if (!args.eval_path.empty()) {
      json pts = load_json_file(args.eval_path);
      for (const auto& pt : pts) {
        std::vector<int> idx = pt.get<std::vector<int>>();
        if (static_cast<int>(idx.size()) != args.s)
          throw hlab::ArgumentError("eval: point arity does not match s");
        values.push_back(result.value(idx));
      }
    } else {
      values = result.values();  // full table, row-major
    }
    out["values"] = values;
  } else {
    hlab::ContinuousSpace::Options so;
    so.dim = config.dim;
    so.nodes_per_coord = config.quadrature_nodes;
    so.hermite_alpha = config.hermite_alpha;
    so.mc_samples = config.mc_samples;
    static std::optional<hlab::ContinuousSpace> space;
    space.emplace(so);
    hlab::Hamiltonian::Options ho;
    ho.dim = config.dim;
    ho.mass = config.mass;
    ho.verlet_dt = config.verlet_dt;
    static std::optional<hlab::Hamiltonian> ham;
    ham.emplace(ho, hlab::PairPotential::harmonic_pair(config.kappa));
    hlab::ContinuousDynamics dyn(*space, *ham);

    double sigma = init.value("sigma", 1.0);
    double amplitude = init.value("amplitude", 1.0);
    auto gaussian = [&](int arity) {
      return hlab::ContinuousFunction(*space, arity, [sigma, amplitude](std::span<const double> x) {
        double s2 = 0.0;
        for (double c : x) s2 += c * c;
        return amplitude * std::exp(-0.5 * s2 / (sigma * sigma));
      });
    };

    hlab::ContinuousFunction result(*space, 0);
    if (args.hierarchy == "bbgky") {
      if (type != "closed") throw hlab::ArgumentError("continuous bbgky solve expects type=closed");
      int n = init.value("N", 3);
      auto data = hlab::InitialData<hlab::ContinuousFunction>::closed_system(n, gaussian(n));
      hlab::ContinuousSequence f0 = hlab::grand_canonical_marginals(data.sequence);
      int depth = std::min(n_term, n - args.s);
      result = hlab::solve_marginal_distributions(dyn, f0, args.s, args.t, {depth, false}, n);
    } else if (args.hierarchy == "liouville" || args.hierarchy == "nonlinear") {
      if (type != "chaos") throw hlab::ArgumentError("continuous correlation solves expect type=chaos");
      auto data = hlab::InitialData<hlab::ContinuousFunction>::chaos(gaussian(1),
                                                                     args.s + n_term + 1);
      result = args.hierarchy == "liouville"
                   ? hlab::solve_correlations(dyn, data.sequence, args.s, args.t)
                   : hlab::solve_marginal_correlations(dyn, data.sequence, args.s, args.t,
                                                       {n_term, false});
    } else if (args.hierarchy == "dual") {
      if (type != "additive") throw hlab::ArgumentError("continuous dual solve expects type=additive");
      hlab::ContinuousSequence b0(*space, args.s);
      b0.component(1) = gaussian(1);
      result = hlab::solve_marginal_observables(dyn, b0, args.s, args.t);
    } else {
      throw hlab::ArgumentError("solve: unknown hierarchy '" + args.hierarchy + "'");
    }

    out["truncation"] = {{"n_term", result.info().truncation_order},
                         {"exact", result.info().exact}};
    if (args.eval_path.empty())
      throw hlab::ArgumentError("continuous solve requires --eval points");
    json pts = load_json_file(args.eval_path);
    json values = json::array();
    for (const auto& pt : pts) {
      std::vector<double> x = pt.get<std::vector<double>>();
      if (static_cast<int>(x.size()) != args.s * space->coords_per_particle())
        throw hlab::ArgumentError("eval: point size does not match s particles");
      values.push_back(result.value(x));
    }
    out["values"] = values;
  }

  write_output(args.out_path, out.dump(2));
  return 0;
}

struct ExpandArgs {
  std::string ground;
  int order = -1;
  std::string direction = "states";
  std::string out_path;
};

int run_expand(const ExpandArgs& args) {
  hlab::ClusterTuple ground =
      args.ground.empty() ? hlab::ClusterTuple::atoms(args.order) : hlab::parse_ground(args.ground);
  if (args.order >= 0 && args.order != ground.size())
    throw hlab::ArgumentError("expand: --order does not match the ground's element count");
  hlab::Direction dir = args.direction == "observables" ? hlab::Direction::Observables
                                                        : hlab::Direction::States;
  hlab::CumulantOperator op = hlab::CumulantOperator::cumulant(ground, 1.0, dir);
  json j = hlab::term_list_json(op);
  j["latex"] = hlab::term_list_latex(op);
  write_output(args.out_path, j.dump(2));
  return 0;
}

struct ReportArgs {
  std::string in_path;
  std::string csv_path;
};

int run_report(const ReportArgs& args) {
  json report = load_json_file(args.in_path);
  if (!report.contains("checks")) throw hlab::ArgumentError("report: missing 'checks'");
  std::printf("suite %s, model %s, seed %llu, config %s\n",
              report.value("suite", "?").c_str(), report.value("model", "?").c_str(),
              static_cast<unsigned long long>(report.value("seed", 0ULL)),
              report.value("config_hash", "?").c_str());
  for (const auto& c : report.at("checks"))
    std::printf("[%s] %-34s residual %.3e tol %.1e\n",
                c.value("pass", false) ? "PASS" : "FAIL", c.value("id", "?").c_str(),
                c.value("residual", 0.0), c.value("tolerance", 0.0));
  if (!args.csv_path.empty()) {
    std::ofstream csv(args.csv_path, std::ios::binary);
    if (!csv) throw hlab::ArgumentError("cannot write file: " + args.csv_path);
    csv << "id,equation,model,s,t,residual,tolerance,pass\n";
    for (const auto& c : report.at("checks")) {
      char line[512];
      std::snprintf(line, sizeof line, "%s,\"%s\",%s,%d,%g,%.17g,%.17g,%d\n",
                    c.value("id", "").c_str(), c.value("equation", "").c_str(),
                    c.value("model", "").c_str(), c.value("s", 0), c.value("t", 0.0),
                    c.value("residual", 0.0), c.value("tolerance", 0.0),
                    c.value("pass", false) ? 1 : 0);
      csv << line;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchies of evolution equations on finite and continuous phase models"};
  app.require_subcommand(1);

  VerifyArgs vargs;
  auto* verify = app.add_subcommand("verify", "run an identity/residual suite");
  verify->add_option("--suite", vargs.suite,
                     "algebra|cumulants|bbgky|dual|correlations|nonlinear|functional|all");
  verify->add_option("--model", vargs.model, "finite|continuous");
  std::uint64_t seed_opt = 0;
  auto* seed_flag = verify->add_option("--seed", seed_opt, "random seed");
  verify->add_option("--config", vargs.config_path, "JSON config file");
  verify->add_option("--report", vargs.report_path, "write the JSON report here");

  SolveArgs sargs;
  auto* solve = app.add_subcommand("solve", "evaluate a solution expansion");
  solve->add_option("--hierarchy", sargs.hierarchy, "bbgky|dual|liouville|nonlinear")->required();
  solve->add_option("--s", sargs.s, "marginal order");
  solve->add_option("--t", sargs.t, "time");
  solve->add_option("--trunc", sargs.trunc, "series truncation order");
  solve->add_option("--init", sargs.init_path, "initial-data JSON")->required();
  solve->add_option("--eval", sargs.eval_path, "points file (JSON array of arrays)");
  solve->add_option("--config", sargs.config_path, "JSON config file");
  solve->add_option("--out", sargs.out_path, "output path (default stdout)");

  ExpandArgs eargs;
  auto* expand = app.add_subcommand("expand", "emit a cumulant term list");
  expand->add_option("--ground", eargs.ground, "ground tuple, e.g. \"{Y:2}+2\" or \"3\"");
  expand->add_option("--order", eargs.order, "expected cumulant order");
  expand->add_option("--direction", eargs.direction, "states|observables");
  expand->add_option("--out", eargs.out_path, "output path (default stdout)");

  ReportArgs rargs;
  auto* report = app.add_subcommand("report", "render a verification report");
  report->add_option("--in", rargs.in_path, "report JSON")->required();
  report->add_option("--csv", rargs.csv_path, "also write a CSV summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (*verify) {
      if (seed_flag->count() > 0) vargs.seed = seed_opt;
      return run_verify(vargs);
    }
    if (*solve) return run_solve(sargs);
    if (*expand) {
      if (eargs.ground.empty() && eargs.order < 1)
        throw hlab::ArgumentError("expand: provide --ground or --order");
      return run_expand(eargs);
    }
    if (*report) return run_report(rargs);
  } catch (const hlab::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hlab::PreconditionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
