// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/serialize.hh"

#include <sstream>

namespace ihrm {

using nlohmann::json;

json chain_config_to_json(const ChainConfig& config) {
  return {{"iterations", config.iterations},
          {"burn_in", config.burn_in},
          {"thin", config.thin},
          {"param_update_period", config.param_update_period},
          {"mode", std::string(to_string(config.mode))},
          {"seed", config.seed}};
}

ChainConfig chain_config_from_json(const json& value) {
  ChainConfig config;
  try {
    for (const auto& [key, item] : value.items()) {
      if (key == "iterations") {
        config.iterations = item.get<int>();
      } else if (key == "burn_in") {
        config.burn_in = item.get<int>();
      } else if (key == "thin") {
        config.thin = item.get<int>();
      } else if (key == "param_update_period") {
        config.param_update_period = item.get<int>();
      } else if (key == "mode") {
        config.mode = parse_sampler_mode(item.get<std::string>());
      } else if (key == "seed") {
        config.seed = item.get<std::uint64_t>();
      } else {
        throw DataError("chain config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("chain config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("chain config: ") + e.what());
  }
  return config;
}

json snapshot_to_json(const LatentState& state, const Model& model, int sweep,
                      double log_likelihood) {
  const Schema& schema = model.schema();
  json assignments = json::object();
  json cluster_counts = json::object();
  for (int c = 0; c < model.class_count(); ++c) {
    assignments[schema.entity_classes[c].name] = state.classes[c].assignment;
    cluster_counts[schema.entity_classes[c].name] = state.cluster_count(c);
  }
  json out = {{"sweep", sweep},
              {"log_likelihood", log_likelihood},
              {"mode", std::string(to_string(state.mode))},
              {"assignments", assignments},
              {"cluster_counts", cluster_counts}};
  if (state.mode != SamplerMode::kInstantiated) return out;

  json attributes = json::object();
  for (int c = 0; c < model.class_count(); ++c) {
    json per_class = json::object();
    for (int a = 0; a < model.attribute_count(c); ++a) {
      json rows = json::array();
      for (int k = 0; k < state.cluster_count(c); ++k) {
        const auto p = state.classes[c].attribute_params[a].cell(k, 0);
        rows.push_back(std::vector<double>(p.begin(), p.end()));
      }
      per_class[schema.entity_classes[c].attributes[a].name] = rows;
    }
    attributes[schema.entity_classes[c].name] = per_class;
  }
  json relations = json::object();
  for (int r = 0; r < model.relation_count(); ++r) {
    const auto& grid = state.relations[r].params;
    json cells = json::array();
    for (int row = 0; row < grid.rows(); ++row) {
      for (int col = 0; col < grid.cols(); ++col) {
        if (model.relation(r).symmetric && row > col) continue;
        const auto p = grid.cell(row, col);
        cells.push_back({row, col, std::vector<double>(p.begin(), p.end())});
      }
    }
    relations[schema.relation_classes[r].name] = cells;
  }
  out["params"] = {{"attributes", attributes}, {"relations", relations}};
  return out;
}

namespace {

void restore_vector(std::span<double> target, const json& value) {
  const auto p = value.get<std::vector<double>>();
  if (p.size() != target.size()) throw DataError("snapshot: parameter length mismatch");
  std::copy(p.begin(), p.end(), target.begin());
}

}  // namespace

SnapshotRecord snapshot_from_json(const json& value, const Model& model) {
  const Schema& schema = model.schema();
  SnapshotRecord record;
  try {
    record.sweep = value.at("sweep").get<int>();
    record.log_likelihood = value.at("log_likelihood").get<double>();
    const SamplerMode mode = parse_sampler_mode(value.at("mode").get<std::string>());
    std::vector<std::vector<int>> assignments;
    for (int c = 0; c < model.class_count(); ++c) {
      const auto& name = schema.entity_classes[c].name;
      auto z = value.at("assignments").at(name).get<std::vector<int>>();
      if (static_cast<int>(z.size()) != model.dataset().entity_count(c)) {
        throw DataError("snapshot: class " + name + " has " + std::to_string(z.size()) +
                        " assignments, dataset has " +
                        std::to_string(model.dataset().entity_count(c)) + " entities");
      }
      for (int k : z) {
        if (k < 0) throw DataError("snapshot: negative cluster label in " + name);
      }
      assignments.push_back(std::move(z));
    }
    record.state = build_state(model, std::move(assignments), mode);
    for (int c = 0; c < model.class_count(); ++c) {
      for (Count n : record.state.classes[c].occupancy) {
        if (n == 0) throw DataError("snapshot: cluster labels are not contiguous");
      }
    }
    if (mode == SamplerMode::kInstantiated && value.contains("params")) {
      const json& params = value.at("params");
      for (int c = 0; c < model.class_count(); ++c) {
        const auto& spec = schema.entity_classes[c];
        for (int a = 0; a < model.attribute_count(c); ++a) {
          const json& rows = params.at("attributes").at(spec.name).at(spec.attributes[a].name);
          if (static_cast<int>(rows.size()) != record.state.cluster_count(c)) {
            throw DataError("snapshot: attribute parameter count mismatch");
          }
          for (int k = 0; k < record.state.cluster_count(c); ++k) {
            restore_vector(record.state.classes[c].attribute_params[a].cell(k, 0), rows[k]);
          }
        }
      }
      for (int r = 0; r < model.relation_count(); ++r) {
        auto& grid = record.state.relations[r].params;
        for (const auto& cell : params.at("relations").at(schema.relation_classes[r].name)) {
          const int row = cell.at(0).get<int>();
          const int col = cell.at(1).get<int>();
          if (row < 0 || row >= grid.rows() || col < 0 || col >= grid.cols()) {
            throw DataError("snapshot: relation cell out of range");
          }
          restore_vector(grid.cell(row, col), cell.at(2));
        }
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("snapshot: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("snapshot: ") + e.what());
  }
  return record;
}

std::string samples_to_jsonl(const PosteriorSamples& samples, const Model& model) {
  std::string out;
  for (size_t i = 0; i < samples.snapshots.size(); ++i) {
    const int sweep = samples.snapshot_sweeps[i];
    out += snapshot_to_json(samples.snapshots[i], model, sweep,
                            samples.log_likelihood_trace[sweep])
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<SnapshotRecord> samples_from_jsonl(const std::string& text,
                                               const Model& model) {
  std::vector<SnapshotRecord> out;
  std::istringstream stream(text);
  std::string line;
  int number = 0;
  while (std::getline(stream, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("samples line " + std::to_string(number) + ": " + e.what());
    }
    out.push_back(snapshot_from_json(value, model));
  }
  return out;
}

}  // namespace ihrm
