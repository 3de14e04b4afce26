#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlab/cumulants.hpp"
#include "hlab/errors.hpp"
#include "hlab/verification.hpp"

namespace hlab {

/// Run-wide configuration.  Loaded from JSON; unknown keys are rejected so
/// that misspelled options fail loudly instead of silently using defaults.
struct RunConfig {
  std::string model = "finite";
  std::uint64_t seed = 7;
  double time = 0.7;

  // finite model
  int finite_points = 2;
  std::vector<double> weights;  // empty = uniform
  std::vector<int> interaction_arities{2};
  double generator_scale = 1.0;

  // continuous model
  int dim = 1;
  double mass = 1.0;
  double kappa = 1.0;
  double verlet_dt = 1e-3;
  int quadrature_nodes = 20;
  double hermite_alpha = 1.0 / 3.0;
  long mc_samples = 100000;

  // truncation defaults
  int n_term = 8;

  static void require_known_keys(const nlohmann::json& j, const std::string& scope,
                                 const std::vector<std::string>& known) {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ArgumentError("config: unknown key '" + (scope.empty() ? key : scope + "." + key) +
                            "'");
    }
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    require_known_keys(j, "", {"model", "seed", "time", "finite", "continuous", "truncation"});
    if (j.contains("model")) c.model = j.at("model").get<std::string>();
    if (c.model != "finite" && c.model != "continuous")
      throw ArgumentError("config: model must be 'finite' or 'continuous'");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("time")) c.time = j.at("time").get<double>();
    if (j.contains("finite")) {
      const auto& f = j.at("finite");
      require_known_keys(f, "finite", {"points", "weights", "interaction_arities", "scale"});
      if (f.contains("points")) c.finite_points = f.at("points").get<int>();
      if (f.contains("weights")) c.weights = f.at("weights").get<std::vector<double>>();
      if (f.contains("interaction_arities"))
        c.interaction_arities = f.at("interaction_arities").get<std::vector<int>>();
      if (f.contains("scale")) c.generator_scale = f.at("scale").get<double>();
    }
    if (j.contains("continuous")) {
      const auto& k = j.at("continuous");
      require_known_keys(k, "continuous",
                         {"dim", "mass", "kappa", "dt", "quadrature_nodes", "hermite_alpha",
                          "mc_samples"});
      if (k.contains("dim")) c.dim = k.at("dim").get<int>();
      if (k.contains("mass")) c.mass = k.at("mass").get<double>();
      if (k.contains("kappa")) c.kappa = k.at("kappa").get<double>();
      if (k.contains("dt")) c.verlet_dt = k.at("dt").get<double>();
      if (k.contains("quadrature_nodes")) c.quadrature_nodes = k.at("quadrature_nodes").get<int>();
      if (k.contains("hermite_alpha")) c.hermite_alpha = k.at("hermite_alpha").get<double>();
      if (k.contains("mc_samples")) c.mc_samples = k.at("mc_samples").get<long>();
    }
    if (j.contains("truncation")) {
      const auto& t = j.at("truncation");
      require_known_keys(t, "truncation", {"n_term"});
      if (t.contains("n_term")) c.n_term = t.at("n_term").get<int>();
    }
    c.validate();
    return c;
  }

  void validate() const {
    if (finite_points < 1) throw ArgumentError("config: finite.points must be >= 1");
    if (!weights.empty() && static_cast<int>(weights.size()) != finite_points)
      throw ArgumentError("config: finite.weights length must equal finite.points");
    if (dim < 1) throw ArgumentError("config: continuous.dim must be >= 1");
    if (mass <= 0.0) throw ArgumentError("config: continuous.mass must be positive");
    if (verlet_dt <= 0.0) throw ArgumentError("config: continuous.dt must be positive");
    if (quadrature_nodes < 1) throw ArgumentError("config: continuous.quadrature_nodes must be >= 1");
    if (hermite_alpha <= 0.0) throw ArgumentError("config: continuous.hermite_alpha must be positive");
    if (mc_samples < 1) throw ArgumentError("config: continuous.mc_samples must be >= 1");
    if (n_term < 0) throw ArgumentError("config: truncation.n_term must be >= 0");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["model"] = model;
    j["seed"] = seed;
    j["time"] = time;
    j["finite"] = {{"points", finite_points},
                   {"weights", weights},
                   {"interaction_arities", interaction_arities},
                   {"scale", generator_scale}};
    j["continuous"] = {{"dim", dim},
                       {"mass", mass},
                       {"kappa", kappa},
                       {"dt", verlet_dt},
                       {"quadrature_nodes", quadrature_nodes},
                       {"hermite_alpha", hermite_alpha},
                       {"mc_samples", mc_samples}};
    j["truncation"] = {{"n_term", n_term}};
    return j;
  }

  /// FNV-1a over the canonical dump; embedded in every report so identical
  /// configurations are byte-identifiable.
  std::string hash() const {
    std::string dump = to_json().dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : dump) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }
};

inline nlohmann::json residual_to_json(const ResidualReport& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["equation"] = r.equation;
  j["s"] = r.s;
  j["t"] = r.t;
  j["h"] = r.h;
  j["residual"] = r.residual;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["model"] = r.model;
  j["truncation"] = r.truncation;
  j["seed"] = r.seed;
  j["notes"] = r.notes;
  return j;
}

/// Term list of a cumulant operator: partitions, coefficients, block sizes.
inline nlohmann::json term_list_json(const CumulantOperator& op) {
  nlohmann::json j;
  j["order"] = op.order();
  j["direction"] = op.direction() == Direction::States ? "states" : "observables";
  j["time_argument"] = op.direction() == Direction::States ? "-t" : "+t";
  nlohmann::json ground = nlohmann::json::array();
  for (const ClusterElement& e : op.ground().elements()) {
    nlohmann::json el;
    el["cluster"] = e.is_cluster;
    el["labels"] = e.labels.labels();
    ground.push_back(el);
  }
  j["ground"] = ground;
  nlohmann::json terms = nlohmann::json::array();
  for (const OperatorTerm& term : op.terms()) {
    nlohmann::json t;
    t["coefficient"] = term.coefficient;
    nlohmann::json groups = nlohmann::json::array();
    nlohmann::json sizes = nlohmann::json::array();
    for (const auto& group : term.flow_groups) {
      nlohmann::json labels = nlohmann::json::array();
      int particles = 0;
      for (int e : group) {
        labels.push_back(op.ground().element(e).labels.labels());
        particles += op.ground().element(e).particle_count();
      }
      groups.push_back(labels);
      sizes.push_back(particles);
    }
    t["blocks"] = groups;
    t["block_particles"] = sizes;
    terms.push_back(t);
  }
  j["terms"] = terms;
  return j;
}

/// Presentation-only LaTeX rendering of the term list.
inline std::string term_list_latex(const CumulantOperator& op) {
  const std::string targ = op.direction() == Direction::States ? "-t" : "t";
  std::string out = "\\mathfrak{A}_{" + std::to_string(op.order()) + "}(" + targ + ") = ";
  bool first = true;
  for (const OperatorTerm& term : op.terms()) {
    double c = term.coefficient;
    std::string coeff;
    if (c >= 0 && !first) coeff = " + ";
    if (c < 0) coeff = first ? "-" : " - ";
    double mag = std::abs(c);
    if (mag != 1.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g\\,", mag);
      coeff += buf;
    }
    std::string prod;
    for (const auto& group : term.flow_groups) {
      int particles = 0;
      std::string args;
      for (int e : group) {
        const auto& labels = op.ground().element(e).labels.labels();
        particles += static_cast<int>(labels.size());
        if (!args.empty()) args += ",";
        if (op.ground().element(e).is_cluster) {
          args += "\\{";
          for (std::size_t i = 0; i < labels.size(); ++i)
            args += (i ? "," : "") + std::string("x_{") + std::to_string(labels[i]) + "}";
          args += "\\}";
        } else {
          args += "x_{" + std::to_string(labels.front()) + "}";
        }
      }
      prod += "S_{" + std::to_string(particles) + "}(" + targ + ";" + args + ")";
    }
    out += coeff + prod;
    first = false;
  }
  return out;
}

/// Parse the CLI ground syntax "{Y:s}+n" (cluster of s particles plus n
/// atoms) or "n" (n atoms).
inline ClusterTuple parse_ground(const std::string& text) {
  if (text.empty()) throw ArgumentError("expand: empty ground");
  if (text.front() == '{') {
    auto colon = text.find(':');
    auto brace = text.find('}');
    if (colon == std::string::npos || brace == std::string::npos || colon > brace)
      throw ArgumentError("expand: ground syntax is {Y:s}+n");
    int s = std::stoi(text.substr(colon + 1, brace - colon - 1));
    int n = 0;
    auto plus = text.find('+', brace);
    if (plus != std::string::npos) n = std::stoi(text.substr(plus + 1));
    if (s < 1 || n < 0) throw ArgumentError("expand: ground sizes must be positive");
    return ClusterTuple::cluster_plus_atoms(s, n);
  }
  int n = std::stoi(text);
  if (n < 1) throw ArgumentError("expand: ground needs at least one element");
  return ClusterTuple::atoms(n);
}

}  // namespace hlab
