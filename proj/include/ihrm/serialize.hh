// Apache License, Version 2.0, refer to LICENSE.txt

// JSON forms of chain configurations and posterior snapshots. A samples
// file holds one snapshot per line:
//   {"sweep": s, "log_likelihood": l, "mode": "...",
//    "assignments": {"<Class>": [...]}, "cluster_counts": {"<Class>": K},
//    "params": {...}}            (instantiated mode only)

#pragma once

#include <string>
#include <vector>

#include "ihrm/gibbs.hh"
#include "json.hpp"

namespace ihrm {

nlohmann::json chain_config_to_json(const ChainConfig& config);
// Missing keys keep their defaults; unknown keys are errors.
ChainConfig chain_config_from_json(const nlohmann::json& value);

struct SnapshotRecord {
  int sweep = 0;
  double log_likelihood = 0.0;
  LatentState state;
};

nlohmann::json snapshot_to_json(const LatentState& state, const Model& model, int sweep,
                                double log_likelihood);
// Recounts statistics from the stored assignments; instantiated parameters
// are restored when present. Throws DataError on malformed records.
SnapshotRecord snapshot_from_json(const nlohmann::json& value, const Model& model);

std::string samples_to_jsonl(const PosteriorSamples& samples, const Model& model);
std::vector<SnapshotRecord> samples_from_jsonl(const std::string& text,
                                               const Model& model);

}  // namespace ihrm
