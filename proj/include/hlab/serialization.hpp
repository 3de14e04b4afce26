#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "hlab/graded_sequence.hpp"

namespace hlab {

/// JSON document for a finite-model sequence:
///   { "M": int, "weights": [...], "components": { "n": row-major table } }
inline nlohmann::json to_json(const FiniteSequence& seq) {
  nlohmann::json j;
  j["M"] = seq.space().points();
  j["weights"] = seq.space().weights();
  nlohmann::json comps = nlohmann::json::object();
  for (int n = 0; n <= seq.max_level(); ++n)
    comps[std::to_string(n)] = seq.component(n).values();
  j["components"] = comps;
  return j;
}

/// A deserialized sequence owning its state space.
struct LoadedSequence {
  std::shared_ptr<FiniteSpace> space;
  FiniteSequence sequence;
};

inline LoadedSequence sequence_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("M") || !j.contains("weights") || !j.contains("components"))
    throw ArgumentError("sequence_from_json: expected keys M, weights, components");
  int m = j.at("M").get<int>();
  auto weights = j.at("weights").get<std::vector<double>>();
  auto space = std::make_shared<FiniteSpace>(m, std::move(weights));

  int n_max = -1;
  for (const auto& [key, value] : j.at("components").items()) {
    (void)value;
    n_max = std::max(n_max, std::stoi(key));
  }
  FiniteSequence seq(*space, n_max);
  for (const auto& [key, value] : j.at("components").items()) {
    int n = std::stoi(key);
    auto table = value.get<std::vector<double>>();
    if (table.size() != space->table_size(n))
      throw ArgumentError("sequence_from_json: component " + key + " has wrong table size");
    seq.component(n) = FiniteFunction(*space, n, std::move(table));
  }
  return LoadedSequence{std::move(space), std::move(seq)};
}

}  // namespace hlab
