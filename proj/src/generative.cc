// Apache License, Version 2.0, refer to LICENSE.txt

#include "ihrm/generative.hh"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace ihrm {

using nlohmann::json;

std::vector<double> crp_assign_probs(std::span<const Count> occupancies,
                                     double alpha0) {
  if (!(alpha0 > 0.0)) {
    throw std::invalid_argument("crp_assign_probs: alpha0 must be positive");
  }
  Count total = 0;
  for (Count n : occupancies) {
    if (n < 1) throw std::invalid_argument("crp_assign_probs: occupancy < 1");
    total += n;
  }
  const double denominator = static_cast<double>(total) + alpha0;
  std::vector<double> probs;
  probs.reserve(occupancies.size() + 1);
  for (Count n : occupancies) probs.push_back(static_cast<double>(n) / denominator);
  probs.push_back(alpha0 / denominator);
  return probs;
}

std::vector<int> sample_crp_partition(int n, double alpha0, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_crp_partition: n must be >= 1");
  std::vector<int> assignment(n);
  std::vector<Count> occupancy;
  for (int i = 0; i < n; ++i) {
    const auto probs = crp_assign_probs(occupancy, alpha0);
    const int k = sample_categorical(probs, rng);
    if (k == static_cast<int>(occupancy.size())) occupancy.push_back(0);
    ++occupancy[k];
    assignment[i] = k;
  }
  return assignment;
}

double crp_sequence_probability(std::span<const int> assignment,
                                std::span<const int> order, double alpha0) {
  if (order.size() != assignment.size()) {
    throw std::invalid_argument("crp_sequence_probability: order length mismatch");
  }
  std::vector<Count> occupancy(assignment.size(), 0);
  double probability = 1.0;
  double seated = 0.0;
  for (int entity : order) {
    if (entity < 0 || entity >= static_cast<int>(assignment.size()) ||
        assignment[entity] < 0 || assignment[entity] >= static_cast<int>(occupancy.size())) {
      throw std::out_of_range("crp_sequence_probability: bad entity or label");
    }
    const int k = assignment[entity];
    probability *= (occupancy[k] == 0 ? alpha0 : static_cast<double>(occupancy[k])) /
                   (seated + alpha0);
    ++occupancy[k];
    seated += 1.0;
  }
  return probability;
}

double crp_partition_log_prob(std::span<const int> assignment, double alpha0) {
  std::vector<Count> occupancy;
  for (int k : assignment) {
    if (k < 0) throw std::invalid_argument("crp_partition_log_prob: negative label");
    if (k >= static_cast<int>(occupancy.size())) occupancy.resize(k + 1, 0);
    ++occupancy[k];
  }
  double out = -log_rising(alpha0, static_cast<Count>(assignment.size()));
  for (Count n : occupancy) {
    if (n > 0) out += std::log(alpha0) + std::lgamma(static_cast<double>(n));
  }
  return out;
}

namespace {

bool is_probability_vector(const std::vector<double>& p, int cardinality) {
  if (static_cast<int>(p.size()) != cardinality) return false;
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= 1e-12;
}

}  // namespace

std::vector<std::string> ground_truth_violations(const GroundTruth& truth,
                                                 const Schema& schema) {
  std::vector<std::string> out;
  if (truth.classes.size() != schema.entity_classes.size()) {
    out.push_back("class count mismatch");
    return out;
  }
  for (size_t c = 0; c < truth.classes.size(); ++c) {
    const auto& ct = truth.classes[c];
    const auto& spec = schema.entity_classes[c];
    std::vector<int> occupancy(std::max(ct.cluster_count, 0), 0);
    for (int k : ct.assignment) {
      if (k < 0 || k >= ct.cluster_count) {
        out.push_back(spec.name + ": label " + std::to_string(k) + " out of range");
      } else {
        ++occupancy[k];
      }
    }
    for (int k = 0; k < ct.cluster_count; ++k) {
      if (occupancy[k] == 0) {
        out.push_back(spec.name + ": cluster " + std::to_string(k) + " unoccupied");
      }
    }
    if (ct.attribute_params.size() != spec.attributes.size()) {
      out.push_back(spec.name + ": attribute count mismatch");
      continue;
    }
    for (size_t a = 0; a < spec.attributes.size(); ++a) {
      const auto& params = ct.attribute_params[a];
      if (static_cast<int>(params.size()) != ct.cluster_count) {
        out.push_back(spec.name + "." + spec.attributes[a].name +
                      ": one vector per cluster required");
        continue;
      }
      for (int k = 0; k < ct.cluster_count; ++k) {
        if (!is_probability_vector(params[k], spec.attributes[a].cardinality)) {
          out.push_back(spec.name + "." + spec.attributes[a].name + "[" +
                        std::to_string(k) + "]: not a probability vector");
        }
      }
    }
  }
  if (truth.relation_params.size() != schema.relation_classes.size()) {
    out.push_back("relation count mismatch");
    return out;
  }
  for (size_t r = 0; r < schema.relation_classes.size(); ++r) {
    const auto& spec = schema.relation_classes[r];
    const int s = schema.entity_class_index(spec.subject_class);
    const int o = schema.entity_class_index(spec.object_class);
    for (const auto& [cell, params] : truth.relation_params[r]) {
      const auto [row, col] = cell;
      if (row < 0 || row >= truth.classes[s].cluster_count || col < 0 ||
          col >= truth.classes[o].cluster_count || (spec.symmetric() && row > col)) {
        out.push_back(spec.name + ": cell (" + std::to_string(row) + "," +
                      std::to_string(col) + ") out of range");
      }
      if (!is_probability_vector(params, spec.attribute.cardinality)) {
        out.push_back(spec.name + ": cell (" + std::to_string(row) + "," +
                      std::to_string(col) + ") not a probability vector");
      }
    }
  }
  return out;
}

std::string ground_truth_to_json(const GroundTruth& truth, const Schema& schema) {
  json classes = json::object();
  for (size_t c = 0; c < truth.classes.size(); ++c) {
    const auto& ct = truth.classes[c];
    const auto& spec = schema.entity_classes[c];
    json attributes = json::object();
    for (size_t a = 0; a < spec.attributes.size(); ++a) {
      attributes[spec.attributes[a].name] = ct.attribute_params[a];
    }
    classes[spec.name] = {{"assignment", ct.assignment},
                          {"cluster_count", ct.cluster_count},
                          {"attributes", attributes}};
  }
  json relations = json::object();
  for (size_t r = 0; r < truth.relation_params.size(); ++r) {
    json cells = json::array();
    for (const auto& [cell, params] : truth.relation_params[r]) {
      cells.push_back({{"subject_cluster", cell.first},
                       {"object_cluster", cell.second},
                       {"params", params}});
    }
    relations[schema.relation_classes[r].name] = cells;
  }
  return json{{"classes", classes}, {"relations", relations}}.dump(2) + "\n";
}

GroundTruth ground_truth_from_json(const std::string& text, const Schema& schema) {
  GroundTruth truth;
  try {
    const json doc = json::parse(text);
    for (const auto& spec : schema.entity_classes) {
      const json& entry = doc.at("classes").at(spec.name);
      GroundTruth::ClassTruth ct;
      ct.assignment = entry.at("assignment").get<std::vector<int>>();
      ct.cluster_count = entry.at("cluster_count").get<int>();
      for (const auto& attribute : spec.attributes) {
        ct.attribute_params.push_back(
            entry.at("attributes")
                .at(attribute.name)
                .get<std::vector<std::vector<double>>>());
      }
      truth.classes.push_back(std::move(ct));
    }
    for (const auto& spec : schema.relation_classes) {
      std::map<std::pair<int, int>, std::vector<double>> cells;
      for (const auto& cell : doc.at("relations").at(spec.name)) {
        cells[{cell.at("subject_cluster").get<int>(),
               cell.at("object_cluster").get<int>()}] =
            cell.at("params").get<std::vector<double>>();
      }
      truth.relation_params.push_back(std::move(cells));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("ground truth: ") + e.what());
  }
  return truth;
}

GeneratedData sample_generative(std::shared_ptr<const Schema> schema,
                                std::span<const int> sizes, Rng& rng) {
  const auto missing = missing_prior_strengths(*schema);
  if (!missing.empty()) {
    throw SchemaError("sample_generative: prior_strength unset for " + missing.front());
  }
  const int class_count = static_cast<int>(schema->entity_classes.size());
  if (static_cast<int>(sizes.size()) != class_count) {
    throw std::invalid_argument("sample_generative: one size per entity class");
  }
  for (int n : sizes) {
    if (n < 1) throw std::invalid_argument("sample_generative: sizes must be >= 1");
  }

  GroundTruth truth;
  truth.classes.resize(class_count);
  std::vector<std::vector<Count>> occupancy(class_count);
  std::vector<std::vector<DirichletPrior>> attribute_priors(class_count);
  for (int c = 0; c < class_count; ++c) {
    for (const auto& attribute : schema->entity_classes[c].attributes) {
      attribute_priors[c].push_back(DirichletPrior::from_attribute(attribute));
    }
    truth.classes[c].assignment.resize(sizes[c]);
    truth.classes[c].attribute_params.resize(attribute_priors[c].size());
  }

  // Classes take turns seating their next entity.
  const int longest = *std::max_element(sizes.begin(), sizes.end());
  for (int i = 0; i < longest; ++i) {
    for (int c = 0; c < class_count; ++c) {
      if (i >= sizes[c]) continue;
      const auto probs =
          crp_assign_probs(occupancy[c], schema->entity_classes[c].concentration);
      const int k = sample_categorical(probs, rng);
      if (k == static_cast<int>(occupancy[c].size())) {
        occupancy[c].push_back(0);
        for (size_t a = 0; a < attribute_priors[c].size(); ++a) {
          truth.classes[c].attribute_params[a].push_back(
              sample_dirichlet(attribute_priors[c][a].alpha, rng));
        }
      }
      ++occupancy[c][k];
      truth.classes[c].assignment[i] = k;
    }
  }
  for (int c = 0; c < class_count; ++c) {
    truth.classes[c].cluster_count = static_cast<int>(occupancy[c].size());
  }

  std::vector<AttributeTable> tables;
  for (int c = 0; c < class_count; ++c) {
    const int attributes = static_cast<int>(attribute_priors[c].size());
    AttributeTable table(sizes[c], attributes);
    for (int j = 0; j < sizes[c]; ++j) {
      const int k = truth.classes[c].assignment[j];
      for (int a = 0; a < attributes; ++a) {
        table.set(j, a, sample_categorical(truth.classes[c].attribute_params[a][k], rng));
      }
    }
    tables.push_back(std::move(table));
  }

  std::vector<RelationObservations> relations;
  truth.relation_params.resize(schema->relation_classes.size());
  for (size_t r = 0; r < schema->relation_classes.size(); ++r) {
    const auto& spec = schema->relation_classes[r];
    const auto prior = DirichletPrior::from_attribute(spec.attribute);
    const int s = schema->entity_class_index(spec.subject_class);
    const int o = schema->entity_class_index(spec.object_class);
    const auto& zs = truth.classes[s].assignment;
    const auto& zo = truth.classes[o].assignment;
    auto& cells = truth.relation_params[r];
    RelationObservations observations;
    for (int i = 0; i < sizes[s]; ++i) {
      for (int j = spec.symmetric() ? i + 1 : 0; j < sizes[o]; ++j) {
        if (spec.self_relation() && i == j) continue;
        std::pair<int, int> cell{zs[i], zo[j]};
        if (spec.symmetric() && cell.first > cell.second) {
          std::swap(cell.first, cell.second);
        }
        auto it = cells.find(cell);
        if (it == cells.end()) {
          it = cells.emplace(cell, sample_dirichlet(prior.alpha, rng)).first;
        }
        const int value = sample_categorical(it->second, rng);
        if (spec.closed_world() && value == 0) continue;
        observations.triples.push_back({i, j, value});
      }
    }
    relations.push_back(std::move(observations));
  }

  GeneratedData out;
  out.dataset = std::make_shared<const Dataset>(schema, std::move(tables),
                                                std::move(relations));
  out.truth = std::move(truth);
  return out;
}

}  // namespace ihrm
