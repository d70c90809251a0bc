// Apache License, Version 2.0, refer to LICENSE.txt

#include "cli.hh"

#include <algorithm>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "ihrm/csv.hh"
#include "ihrm/data.hh"
#include "ihrm/evaluate.hh"
#include "ihrm/generative.hh"
#include "ihrm/gibbs.hh"
#include "ihrm/predict.hh"
#include "ihrm/schema.hh"
#include "ihrm/serialize.hh"
#include "ihrm/tune.hh"
#include "json.hpp"
#include "manifest.hh"

namespace ihrm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(text);
  while (std::getline(stream, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw InputError("invalid " + what + " '" + text + "'");
  }
}

int parse_int(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw InputError("invalid " + what + " '" + text + "'");
  }
}

// Writes every file under `directory` or none: contents go to temporary
// names first and are renamed once all writes succeed.
void write_files(const fs::path& directory, const std::map<std::string, std::string>& files) {
  std::vector<fs::path> temporary;
  std::vector<fs::path> committed;
  std::error_code ec;
  const auto cleanup = [&] {
    for (const auto& p : temporary) fs::remove(p, ec);
    for (const auto& p : committed) fs::remove(p, ec);
  };
  for (const auto& [name, content] : files) {
    const fs::path target = directory / name;
    fs::create_directories(target.parent_path(), ec);
    if (ec) {
      cleanup();
      throw IoError("cannot create directory '" + target.parent_path().string() +
                    "': " + ec.message());
    }
    fs::path tmp = target;
    tmp += ".tmp";
    std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
    if (stream) temporary.push_back(tmp);
    stream << content;
    stream.close();
    if (!stream) {
      cleanup();
      throw IoError("cannot write '" + target.string() + "'");
    }
  }
  for (const auto& [name, content] : files) {
    const fs::path target = directory / name;
    fs::path tmp = target;
    tmp += ".tmp";
    fs::rename(tmp, target, ec);
    if (ec) {
      cleanup();
      throw IoError("cannot write '" + target.string() + "': " + ec.message());
    }
    std::erase(temporary, tmp);
    committed.push_back(target);
  }
}

void write_file(const fs::path& path, const std::string& content) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  write_files(parent, {{path.filename().string(), content}});
}

// Writes to `path`, or to `out` when the path is "-".
void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path == "-") {
    out << content;
    out.flush();
  } else {
    write_file(path, content);
  }
}

struct Beta0Flags {
  std::optional<double> attribute;
  std::optional<double> relation;

  void add_to(CLI::App* app) {
    app->add_option("--attr-beta0", attribute,
                    "Prior strength for entity attributes lacking one")
        ->check(CLI::PositiveNumber);
    app->add_option("--rel-beta0", relation,
                    "Prior strength for relation attributes lacking one")
        ->check(CLI::PositiveNumber);
  }
};

std::shared_ptr<Schema> load_schema_file(const std::string& path, const Beta0Flags& beta0) {
  Schema schema;
  try {
    schema = parse_schema(read_input(path));
  } catch (const SchemaError& e) {
    throw InputError(path + ": " + e.what());
  }
  const auto report = validate_schema(schema);
  if (!report.empty()) throw InputError("invalid schema:\n" + format_report(report));
  set_prior_strengths(schema, beta0.attribute, beta0.relation, /*overwrite=*/false);
  return std::make_shared<Schema>(std::move(schema));
}

void require_prior_strengths(const Schema& schema) {
  const auto missing = missing_prior_strengths(schema);
  if (missing.empty()) return;
  std::string list;
  for (const auto& m : missing) list += "\n  " + m;
  throw InputError("prior_strength unset (use --attr-beta0/--rel-beta0 or tune):" + list);
}

LoadedData load_data(const std::string& directory, std::shared_ptr<const Schema> schema) {
  try {
    return load_dataset_dir(directory, std::move(schema));
  } catch (const DataError& e) {
    throw InputError(e.what());
  } catch (const SchemaError& e) {
    throw InputError(e.what());
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
}

int relation_index(const Schema& schema, const std::string& name) {
  if (name.empty()) {
    if (schema.relation_classes.size() == 1) return 0;
    throw InputError("--relation is required when the schema has several relations");
  }
  const int r = schema.relation_class_index(name);
  if (r < 0) throw InputError("unknown relation '" + name + "'");
  return r;
}

int entity_index(const LoadedData& data, int entity_class, const std::string& id) {
  const auto found = data.ids[entity_class].find(id);
  if (!found) {
    throw InputError("unknown entity '" + id + "' of class " +
                     data.dataset->schema().entity_classes[entity_class].name);
  }
  return *found;
}

int value_code(const ValueDictionary& dictionary, const std::string& token) {
  const auto code = dictionary.code(token);
  if (!code) throw InputError("value '" + token + "' not in dictionary");
  return *code;
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
  std::string schema;
  std::string sizes;
  std::uint64_t seed = 0;
  std::string out;
  Beta0Flags beta0;
};

std::vector<int> parse_sizes(const std::string& text, const Schema& schema) {
  const auto items = split_list(text);
  std::vector<int> sizes(schema.entity_classes.size(), -1);
  for (size_t i = 0; i < items.size(); ++i) {
    const auto eq = items[i].find('=');
    int c = static_cast<int>(i);
    std::string count = items[i];
    if (eq != std::string::npos) {
      c = schema.entity_class_index(items[i].substr(0, eq));
      if (c < 0) throw InputError("unknown entity class in --sizes: " + items[i]);
      count = items[i].substr(eq + 1);
    } else if (c >= static_cast<int>(sizes.size())) {
      throw InputError("more sizes than entity classes");
    }
    sizes[c] = parse_int(count, "size");
    if (sizes[c] < 1) throw InputError("sizes must be >= 1");
  }
  for (size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] < 0) {
      throw InputError("no size given for entity class " + schema.entity_classes[c].name);
    }
  }
  return sizes;
}

int cmd_generate(const GenerateOptions& options) {
  const auto start = Clock::now();
  auto schema = load_schema_file(options.schema, options.beta0);
  require_prior_strengths(*schema);
  const auto sizes = parse_sizes(options.sizes, *schema);
  Rng rng(options.seed);
  const auto generated = sample_generative(schema, sizes, rng);
  auto files = format_dataset_files(*generated.dataset,
                                    default_entity_ids(*generated.dataset),
                                    identity_dictionaries(*schema));
  files["ground_truth.json"] = ground_truth_to_json(generated.truth, *schema);
  files["schema.json"] = serialize_schema(*schema);

  RunManifest manifest;
  manifest.command = "generate";
  manifest.schema = *schema;
  manifest.schema_hash = schema_hash(*schema);
  manifest.seed = options.seed;
  for (const auto& [name, content] : files) manifest.digests[name] = sha256_hex(content);
  manifest.wall_seconds = seconds_since(start);
  files["manifest.json"] = manifest_to_json(manifest).dump(2) + "\n";
  write_files(options.out, files);
  return kSuccess;
}

// --------------------------------------------------------------------- fit

struct FitOptions {
  std::string schema;
  std::string data;
  std::string out;
  ChainConfig chain;
  std::string mode = "collapsed";
  int chains = 1;
  bool quiet = false;
  Beta0Flags beta0;
};

fs::path chain_path(const fs::path& out, int chain) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + ".chain" + std::to_string(chain) +
                     out.extension().string());
  return p;
}

int cmd_fit(const FitOptions& options, std::ostream& err) {
  const auto start = Clock::now();
  auto schema = load_schema_file(options.schema, options.beta0);
  require_prior_strengths(*schema);
  const auto data = load_data(options.data, schema);
  const Model model(data.dataset);
  ChainConfig config = options.chain;
  try {
    config.mode = parse_sampler_mode(options.mode);
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (options.chains < 1) throw InputError("--chains must be >= 1");

  std::mutex progress_mutex;
  std::vector<PosteriorSamples> results(options.chains);
  std::vector<std::exception_ptr> failures(options.chains);
  const auto run_chain = [&](int chain) {
    ChainConfig chain_config = config;
    if (options.chains > 1) chain_config.seed = derive_seed(config.seed, chain);
    const auto observer = [&](int sweep, const LatentState& state, double log_likelihood) {
      if (options.quiet || (sweep + 1) % 100 != 0) return;
      std::ostringstream line;
      if (options.chains > 1) line << "[chain " << chain << "] ";
      line << "sweep " << (sweep + 1) << "/" << chain_config.iterations << " K:";
      for (int c = 0; c < model.class_count(); ++c) {
        line << " " << model.schema().entity_classes[c].name << "="
             << state.cluster_count(c);
      }
      line << " log_likelihood=" << log_likelihood << "\n";
      std::lock_guard lock(progress_mutex);
      err << line.str();
      err.flush();
    };
    try {
      results[chain] = run_gibbs(model, chain_config, observer);
    } catch (...) {
      failures[chain] = std::current_exception();
    }
  };
  if (options.chains == 1) {
    run_chain(0);
  } else {
    std::vector<std::thread> threads;
    for (int c = 0; c < options.chains; ++c) threads.emplace_back(run_chain, c);
    for (auto& t : threads) t.join();
  }

  const fs::path out(options.out);
  for (int c = 0; c < options.chains; ++c) {
    if (!failures[c]) continue;
    try {
      std::rethrow_exception(failures[c]);
    } catch (const NumericalFault& fault) {
      fs::path dump = options.chains > 1 ? chain_path(out, c) : out;
      dump += ".fault.json";
      json report = {{"chain", c},
                     {"sweep", fault.sweep()},
                     {"message", fault.what()},
                     {"state", snapshot_to_json(fault.state(), model, fault.sweep(),
                                                joint_log_likelihood(fault.state(), model))}};
      write_file(dump, report.dump(2) + "\n");
      err << "error: numerical fault: " << fault.what() << "; state written to "
          << dump.string() << "\n";
      return kNumericalFault;
    }
  }

  int total_sweeps = 0;
  if (options.chains == 1) {
    write_file(out, samples_to_jsonl(results[0], model));
    total_sweeps = config.iterations;
  } else {
    std::map<std::string, std::string> files;
    std::string merged;
    for (int c = 0; c < options.chains; ++c) {
      files[chain_path(out, c).filename().string()] = samples_to_jsonl(results[c], model);
      for (size_t i = 0; i < results[c].snapshots.size(); ++i) {
        const int sweep = results[c].snapshot_sweeps[i];
        json line = snapshot_to_json(results[c].snapshots[i], model, sweep,
                                     results[c].log_likelihood_trace[sweep]);
        line["chain"] = c;
        merged += line.dump() + "\n";
      }
      total_sweeps += config.iterations;
    }
    files[out.filename().string()] = merged;
    write_files(out.has_parent_path() ? out.parent_path() : fs::path("."), files);
  }

  RunManifest manifest;
  manifest.command = "fit";
  manifest.schema = *schema;
  manifest.schema_hash = schema_hash(*schema);
  manifest.data_dir = fs::absolute(options.data).lexically_normal().string();
  manifest.digests = directory_digests(options.data);
  manifest.chain = config;
  manifest.chains = options.chains;
  manifest.seed = config.seed;
  manifest.wall_seconds = seconds_since(start);
  manifest.seconds_per_sweep = manifest.wall_seconds / std::max(total_sweeps, 1);
  fs::path manifest_path = out;
  manifest_path += ".manifest.json";
  write_file(manifest_path, manifest_to_json(manifest).dump(2) + "\n");
  return kSuccess;
}

// ------------------------------------------------------- fitted artifacts

struct FittedOptions {
  std::string samples;
  std::string schema;
  std::string data;
  Beta0Flags beta0;

  void add_to(CLI::App* app) {
    app->add_option("--samples", samples, "Samples JSON-lines file written by fit")
        ->required();
    app->add_option("--schema", schema, "Schema override (default: from the manifest)");
    app->add_option("--data", data, "Training data override (default: from the manifest)");
    beta0.add_to(app);
  }
};

struct Fitted {
  LoadedData data;
  std::unique_ptr<Model> model;
  std::vector<LatentState> snapshots;
};

Fitted load_fitted(const FittedOptions& options) {
  std::shared_ptr<Schema> schema;
  std::string data_dir = options.data;
  const std::string manifest_path = options.samples + ".manifest.json";
  if (fs::exists(manifest_path)) {
    RunManifest manifest;
    try {
      manifest = manifest_from_json(json::parse(read_input(manifest_path)));
    } catch (const json::exception& e) {
      throw InputError(manifest_path + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw InputError(manifest_path + ": " + e.what());
    }
    schema = std::make_shared<Schema>(manifest.schema);
    if (data_dir.empty()) data_dir = manifest.data_dir;
  } else if (options.schema.empty() || options.data.empty()) {
    throw InputError("no manifest next to '" + options.samples +
                     "'; pass --schema and --data");
  }
  if (!options.schema.empty()) schema = load_schema_file(options.schema, options.beta0);
  require_prior_strengths(*schema);
  Fitted fitted;
  fitted.data = load_data(data_dir, schema);
  fitted.model = std::make_unique<Model>(fitted.data.dataset);
  try {
    for (auto& record : samples_from_jsonl(read_input(options.samples), *fitted.model)) {
      fitted.snapshots.push_back(std::move(record.state));
    }
  } catch (const DataError& e) {
    throw InputError(options.samples + ": " + e.what());
  }
  return fitted;
}

// ----------------------------------------------------------------- predict

Role parse_role(const json& value) {
  const auto text = value.get<std::string>();
  if (text == "subject") return Role::kSubject;
  if (text == "object") return Role::kObject;
  throw InputError("role must be 'subject' or 'object', got '" + text + "'");
}

NewEntity parse_new_entity(const json& value, const Fitted& fitted) {
  const Schema& schema = fitted.model->schema();
  NewEntity entity;
  entity.entity_class = schema.entity_class_index(value.at("class").get<std::string>());
  if (entity.entity_class < 0) {
    throw InputError("unknown entity class '" + value.at("class").get<std::string>() + "'");
  }
  const auto& spec = schema.entity_classes[entity.entity_class];
  entity.attributes.assign(spec.attributes.size(), kMissing);
  if (value.contains("attributes")) {
    for (const auto& [name, token] : value.at("attributes").items()) {
      const int a = spec.attribute_index(name);
      if (a < 0) throw InputError("unknown attribute '" + name + "' of " + spec.name);
      entity.attributes[a] = value_code(
          fitted.data.dictionaries.attributes[entity.entity_class][a], token.get<std::string>());
    }
  }
  if (value.contains("relations")) {
    for (const auto& item : value.at("relations")) {
      ExternalObservation observation;
      observation.relation = relation_index(schema, item.at("relation").get<std::string>());
      const auto& g = fitted.model->relation(observation.relation);
      observation.role = item.contains("role") ? parse_role(item.at("role")) : Role::kSubject;
      const int counterpart_class =
          observation.role == Role::kSubject ? g.object_class : g.subject_class;
      observation.counterpart =
          entity_index(fitted.data, counterpart_class, item.at("counterpart").get<std::string>());
      observation.value = value_code(fitted.data.dictionaries.relations[observation.relation],
                                     item.at("value").get<std::string>());
      entity.relations.push_back(observation);
    }
  }
  entity.imply_absences = value.value("imply_absences", false);
  return entity;
}

// Answers one query line.
json answer_query(const json& query, const Fitted& fitted) {
  const Schema& schema = fitted.model->schema();
  const auto& snapshots = fitted.snapshots;
  const auto with_values = [&](const PredictionResult& result,
                               const ValueDictionary& dictionary) {
    return json{{"query", query},
                {"values", dictionary.tokens()},
                {"distribution", result.distribution},
                {"samples_used", result.samples_used}};
  };

  if (query.contains("fold_in")) {
    const NewEntity entity = parse_new_entity(query.at("fold_in"), fitted);
    if (query.contains("relation")) {
      FoldInRelationQuery q;
      q.entity = entity;
      q.relation = relation_index(schema, query.at("relation").get<std::string>());
      q.role = query.contains("role") ? parse_role(query.at("role")) : Role::kSubject;
      const auto& g = fitted.model->relation(q.relation);
      const int counterpart_class = q.role == Role::kSubject ? g.object_class : g.subject_class;
      q.counterpart = entity_index(fitted.data, counterpart_class,
                                   query.at("counterpart").get<std::string>());
      return with_values(predict_fold_in_relation(snapshots, *fitted.model, q),
                         fitted.data.dictionaries.relations[q.relation]);
    }
    if (query.contains("attribute")) {
      FoldInAttributeQuery q;
      q.entity = entity;
      q.attribute = schema.entity_classes[entity.entity_class].attribute_index(
          query.at("attribute").get<std::string>());
      if (q.attribute < 0) throw InputError("unknown attribute in query");
      return with_values(predict_fold_in_attribute(snapshots, *fitted.model, q),
                         fitted.data.dictionaries.attributes[entity.entity_class][q.attribute]);
    }
    return json{{"query", query},
                {"membership", fold_in_entity(snapshots, *fitted.model, entity)},
                {"samples_used", snapshots.size()}};
  }
  if (query.contains("relation")) {
    RelationQuery q;
    q.relation = relation_index(schema, query.at("relation").get<std::string>());
    const auto& g = fitted.model->relation(q.relation);
    q.subject = entity_index(fitted.data, g.subject_class, query.at("subject").get<std::string>());
    q.object = entity_index(fitted.data, g.object_class, query.at("object").get<std::string>());
    return with_values(predict_relation(snapshots, *fitted.model, q),
                       fitted.data.dictionaries.relations[q.relation]);
  }
  if (query.contains("attribute")) {
    AttributeQuery q;
    q.entity_class = schema.entity_class_index(query.at("class").get<std::string>());
    if (q.entity_class < 0) throw InputError("unknown entity class in query");
    q.entity = entity_index(fitted.data, q.entity_class, query.at("entity").get<std::string>());
    q.attribute = schema.entity_classes[q.entity_class].attribute_index(
        query.at("attribute").get<std::string>());
    if (q.attribute < 0) throw InputError("unknown attribute in query");
    return with_values(predict_attribute(snapshots, *fitted.model, q),
                       fitted.data.dictionaries.attributes[q.entity_class][q.attribute]);
  }
  throw InputError("query needs 'relation', 'attribute' or 'fold_in'");
}

struct PredictOptions {
  FittedOptions fitted;
  std::string queries;
  std::string out = "-";
};

int cmd_predict(const PredictOptions& options, std::ostream& out) {
  const std::string text = read_input(options.queries);
  const Fitted fitted = load_fitted(options.fitted);
  std::string output;
  std::istringstream lines(text);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = options.queries + ":" + std::to_string(number) + ": ";
    try {
      output += answer_query(json::parse(line), fitted).dump() + "\n";
    } catch (const json::exception& e) {
      throw InputError(where + e.what());
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    } catch (const std::logic_error& e) {
      throw InputError(where + e.what());
    }
  }
  emit(options.out, output, out);
  return kSuccess;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  FittedOptions fitted;
  std::string test;
  std::string metric = "accuracy";
  std::string relation;
  std::string topn;
  std::string truth;
  std::string subject_filter;
  double threshold = 0.5;
  std::string out = "-";
};

std::vector<Triple> load_test_triples(const std::string& path, const Fitted& fitted,
                                      int relation) {
  std::vector<csv::Row> rows;
  try {
    rows = csv::read_file(path);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
  if (rows.empty()) throw InputError(path + ": header row required");
  const auto& g = fitted.model->relation(relation);
  std::vector<Triple> triples;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = path + ":" + std::to_string(i + 1) + ": ";
    if (row.size() != 3) throw InputError(where + "expected subject,object,value");
    try {
      triples.push_back({entity_index(fitted.data, g.subject_class, row[0]),
                         entity_index(fitted.data, g.object_class, row[1]),
                         value_code(fitted.data.dictionaries.relations[relation], row[2])});
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
  }
  return triples;
}

json evaluate_accuracy(const EvaluateOptions& options, const Fitted& fitted, int relation) {
  const auto triples = load_test_triples(options.test, fitted, relation);
  if (triples.empty()) throw InputError(options.test + ": no test triples");
  std::vector<PredictionResult> predictions;
  std::vector<int> truth;
  for (const auto& t : triples) {
    predictions.push_back(
        predict_relation(fitted.snapshots, *fitted.model, {relation, t.subject, t.object}));
    truth.push_back(t.value);
  }
  return {{"metric", "accuracy"},
          {"relation", fitted.model->schema().relation_classes[relation].name},
          {"accuracy", accuracy(predictions, truth, options.threshold)},
          {"test_count", triples.size()},
          {"samples_used", fitted.snapshots.size()}};
}

json evaluate_roc(const EvaluateOptions& options, const Fitted& fitted, int relation) {
  const auto triples = load_test_triples(options.test, fitted, relation);
  const auto& g = fitted.model->relation(relation);
  std::vector<int> n_values = default_topn();
  if (!options.topn.empty()) {
    n_values.clear();
    for (const auto& item : split_list(options.topn)) {
      n_values.push_back(parse_int(item, "--topn entry"));
      if (n_values.back() < 1) throw InputError("--topn entries must be >= 1");
    }
  }
  const auto positive = [&](int value) {
    return g.closed_world ? value != 0 : value == g.cardinality - 1;
  };
  std::map<int, std::set<int>> test_positives;
  std::set<int> subjects;
  for (const auto& t : triples) {
    subjects.insert(t.subject);
    if (positive(t.value)) test_positives[t.subject].insert(t.object);
    if (g.symmetric) {
      subjects.insert(t.object);
      if (positive(t.value)) test_positives[t.object].insert(t.subject);
    }
  }
  if (!options.subject_filter.empty()) {
    subjects.clear();
    std::istringstream lines(read_input(options.subject_filter));
    std::string id;
    while (std::getline(lines, id)) {
      id.erase(id.find_last_not_of(" \t\r") + 1);
      if (!id.empty()) subjects.insert(entity_index(fitted.data, g.subject_class, id));
    }
  }
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<int>> positives;
  const Dataset& train = fitted.model->dataset();
  for (int s : subjects) {
    std::vector<double> row;
    std::vector<int> hits;
    for (int o = 0; o < train.entity_count(g.object_class); ++o) {
      if (g.self_relation && o == s) continue;
      const auto known = train.find_pair(relation, s, o);
      if (known && *known != kMissing) continue;
      const auto result = predict_relation(fitted.snapshots, *fitted.model, {relation, s, o});
      if (test_positives[s].contains(o)) hits.push_back(static_cast<int>(row.size()));
      row.push_back(relation_score(result, g.closed_world));
    }
    if (row.empty()) continue;
    scores.push_back(std::move(row));
    positives.push_back(std::move(hits));
  }
  if (scores.empty()) throw InputError("no subjects with candidate objects to rank");
  const auto curve = roc_topn(scores, positives, n_values);
  json points = json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"n", p.n},
                      {"sensitivity", p.sensitivity},
                      {"one_minus_specificity", p.one_minus_specificity}});
  }
  return {{"metric", "roc"},
          {"relation", fitted.model->schema().relation_classes[relation].name},
          {"subjects", scores.size()},
          {"points", points},
          {"samples_used", fitted.snapshots.size()}};
}

json evaluate_ari(const EvaluateOptions& options, const Fitted& fitted) {
  const Schema& schema = fitted.model->schema();
  GroundTruth truth;
  try {
    truth = ground_truth_from_json(read_input(options.truth), schema);
  } catch (const DataError& e) {
    throw InputError(e.what());
  }
  if (fitted.snapshots.empty()) throw InputError("no posterior samples");
  json classes = json::object();
  for (int c = 0; c < fitted.model->class_count(); ++c) {
    const auto& true_z = truth.classes[c].assignment;
    if (static_cast<int>(true_z.size()) != fitted.model->dataset().entity_count(c)) {
      throw InputError("ground truth size mismatch for class " + schema.entity_classes[c].name);
    }
    std::vector<std::vector<int>> partitions;
    std::vector<int> counts;
    for (const auto& s : fitted.snapshots) {
      partitions.push_back(s.classes[c].assignment);
      counts.push_back(s.cluster_count(c));
    }
    json entry = {{"posterior_mode_k", posterior_mode(counts)},
                  {"true_k", truth.classes[c].cluster_count}};
    if (true_z.size() >= 2) {
      entry["ari"] = adjusted_rand_index(consensus_partition(partitions), true_z);
    } else {
      entry["ari"] = nullptr;
    }
    classes[schema.entity_classes[c].name] = entry;
  }
  return {{"metric", "ari"}, {"classes", classes}, {"samples_used", fitted.snapshots.size()}};
}

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out) {
  if (options.metric == "ari") {
    if (options.truth.empty()) throw InputError("--metric ari requires --truth");
  } else if (options.metric != "accuracy" && options.metric != "roc") {
    throw InputError("unknown metric '" + options.metric + "'");
  } else if (options.test.empty()) {
    throw InputError("--metric " + options.metric + " requires --test");
  }
  const Fitted fitted = load_fitted(options.fitted);
  json report;
  try {
    if (options.metric == "ari") {
      report = evaluate_ari(options, fitted);
    } else {
      const int relation = relation_index(fitted.model->schema(), options.relation);
      report = options.metric == "accuracy" ? evaluate_accuracy(options, fitted, relation)
                                            : evaluate_roc(options, fitted, relation);
    }
  } catch (const std::logic_error& e) {
    throw InputError(e.what());
  }
  emit(options.out, report.dump(2) + "\n", out);
  return kSuccess;
}

// ------------------------------------------------------------------- split

struct SplitOptions {
  std::string schema;
  std::string data;
  std::string relation;
  double fraction = 0.2;
  int folds = 0;
  std::uint64_t seed = 0;
  std::string out;
};

std::string format_test_csv(const std::vector<Triple>& triples, const LoadedData& data,
                            int relation) {
  const Dataset& dataset = *data.dataset;
  const auto& subjects = data.ids[dataset.subject_class(relation)];
  const auto& objects = data.ids[dataset.object_class(relation)];
  const auto& dictionary = data.dictionaries.relations[relation];
  std::string text = csv::format_row({"subject", "object", "value"});
  for (const auto& t : triples) {
    text += csv::format_row(
        {subjects.ids[t.subject], objects.ids[t.object], dictionary.token(t.value)});
  }
  return text;
}

int cmd_split(const SplitOptions& options) {
  auto schema = load_schema_file(options.schema, {});
  const auto data = load_data(options.data, schema);
  const int relation = relation_index(*schema, options.relation);
  std::vector<SplitDataset> splits;
  try {
    if (options.folds > 0) {
      splits = k_fold_split(*data.dataset, relation, options.folds, options.seed);
    } else {
      splits.push_back(train_test_split(*data.dataset, relation, options.fraction, options.seed));
    }
  } catch (const DataError& e) {
    throw InputError(e.what());
  }
  std::map<std::string, std::string> files;
  for (size_t f = 0; f < splits.size(); ++f) {
    const std::string prefix = options.folds > 0 ? "fold" + std::to_string(f) + "/" : "";
    for (auto& [name, content] :
         format_dataset_files(*splits[f].train, data.ids, data.dictionaries)) {
      files[prefix + "train/" + name] = std::move(content);
    }
    files[prefix + "test.csv"] = format_test_csv(splits[f].test[relation], data, relation);
  }
  files["schema.json"] = serialize_schema(*schema);
  write_files(options.out, files);
  return kSuccess;
}

// ---------------------------------------------------------------- binarize

int cmd_binarize(const std::string& input, const std::string& output, std::ostream& out) {
  std::vector<csv::Row> rows;
  try {
    rows = csv::read_file(input);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
  if (rows.empty()) throw InputError(input + ": header row required");
  EntityIds subjects;
  EntityIds objects;
  std::vector<Rating> ratings;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = input + ":" + std::to_string(i + 1) + ": ";
    if (row.size() != 3) throw InputError(where + "expected subject,object,score");
    const auto s = subjects.find(row[0]);
    const auto o = objects.find(row[1]);
    ratings.push_back({s ? *s : subjects.add(row[0]), o ? *o : objects.add(row[1]),
                       parse_double(row[2], "score")});
  }
  std::vector<Triple> triples;
  try {
    triples = binarize_ratings(ratings);
  } catch (const DataError& e) {
    throw InputError(e.what());
  }
  std::string text = csv::format_row({"subject", "object", "value"});
  for (const auto& t : triples) {
    text += csv::format_row(
        {subjects.ids[t.subject], objects.ids[t.object], std::to_string(t.value)});
  }
  emit(output, text, out);
  return kSuccess;
}

// -------------------------------------------------------------------- tune

struct TuneOptions {
  std::string schema;
  std::string data;
  std::string relation;
  std::string grid = "0.1,0.3,1,3,10";
  int folds = 5;
  ChainConfig chain;
  std::string mode = "collapsed";
  bool per_attribute = false;
  std::string out = "-";
  std::string report;
};

int cmd_tune(const TuneOptions& options, std::ostream& out) {
  auto schema = load_schema_file(options.schema, {});
  const auto data = load_data(options.data, schema);
  TuneConfig config;
  for (const auto& item : split_list(options.grid)) {
    config.grid.push_back(parse_double(item, "grid value"));
  }
  config.folds = options.folds;
  config.relation_class = relation_index(*schema, options.relation);
  config.chain = options.chain;
  config.per_attribute = options.per_attribute;
  config.seed = options.chain.seed;
  TuneResult result;
  try {
    config.chain.mode = parse_sampler_mode(options.mode);
    result = cv_tune_beta0(*schema, *data.dataset, config);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  } catch (const DataError& e) {
    throw InputError(e.what());
  }
  if (!options.report.empty()) {
    json scores = json::array();
    for (const auto& s : result.scores) {
      scores.push_back({{"target", s.target},
                        {"beta0", s.beta0},
                        {"fold_scores", s.fold_scores},
                        {"mean", s.mean}});
    }
    json report = {{"scores", scores}, {"per_attribute", result.per_attribute}};
    report["relation_beta0"] = result.relation_beta0 ? json(*result.relation_beta0) : json();
    report["attribute_beta0"] = result.attribute_beta0 ? json(*result.attribute_beta0) : json();
    write_file(options.report, report.dump(2) + "\n");
  }
  emit(options.out, serialize_schema(result.tuned), out);
  return kSuccess;
}

void add_chain_options(CLI::App* app, ChainConfig& chain, std::string& mode) {
  app->add_option("--iterations", chain.iterations, "Sweeps")->capture_default_str();
  app->add_option("--burn-in", chain.burn_in, "Sweeps discarded before snapshots")
      ->capture_default_str();
  app->add_option("--thin", chain.thin, "Snapshot stride")->capture_default_str();
  app->add_option("--param-update-period", chain.param_update_period,
                  "Sweeps between parameter refreshes (instantiated mode)")
      ->capture_default_str();
  app->add_option("--mode", mode, "collapsed or instantiated")
      ->check(CLI::IsMember({"collapsed", "instantiated"}))
      ->capture_default_str();
  app->add_option("--seed", chain.seed, "RNG seed")->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Infinite hidden relational models: generate, fit, predict, evaluate"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  GenerateOptions generate;
  auto* generate_cmd = app.add_subcommand("generate", "Sample a synthetic dataset");
  generate_cmd->add_option("--schema", generate.schema, "Schema JSON")->required();
  generate_cmd->add_option("--sizes", generate.sizes,
                           "Entities per class: '100,50' or 'User=100,Movie=50'")
      ->required();
  generate_cmd->add_option("--seed", generate.seed, "RNG seed");
  generate_cmd->add_option("--out", generate.out, "Output directory")->required();
  generate.beta0.add_to(generate_cmd);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Run the Gibbs sampler");
  fit_cmd->add_option("--schema", fit.schema, "Schema JSON")->required();
  fit_cmd->add_option("--data", fit.data, "Data directory")->required();
  fit_cmd->add_option("--out", fit.out, "Samples JSON-lines output")->required();
  add_chain_options(fit_cmd, fit.chain, fit.mode);
  fit_cmd->add_option("--chains", fit.chains, "Independent chains run concurrently")
      ->capture_default_str();
  fit_cmd->add_flag("--quiet", fit.quiet, "No progress output");
  fit.beta0.add_to(fit_cmd);

  PredictOptions predict_options;
  auto* predict_cmd = app.add_subcommand("predict", "Answer queries from posterior samples");
  predict_options.fitted.add_to(predict_cmd);
  predict_cmd->add_option("--queries", predict_options.queries, "Queries JSON-lines")
      ->required();
  predict_cmd->add_option("--out", predict_options.out, "Output (default stdout)");

  EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score posterior samples");
  evaluate.fitted.add_to(evaluate_cmd);
  evaluate_cmd->add_option("--test", evaluate.test, "Held-out triples CSV");
  evaluate_cmd->add_option("--metric", evaluate.metric, "accuracy, roc or ari")
      ->capture_default_str();
  evaluate_cmd->add_option("--relation", evaluate.relation, "Relation class of --test");
  evaluate_cmd->add_option("--topn", evaluate.topn, "Comma list of N (default 5,10,...,50)");
  evaluate_cmd->add_option("--truth", evaluate.truth, "Ground truth JSON (ari)");
  evaluate_cmd->add_option("--subject-filter", evaluate.subject_filter,
                           "File of subject ids to rank (roc)");
  evaluate_cmd->add_option("--threshold", evaluate.threshold, "Accuracy threshold on P(1)")
      ->capture_default_str();
  evaluate_cmd->add_option("--out", evaluate.out, "Output (default stdout)");

  SplitOptions split;
  auto* split_cmd = app.add_subcommand("split", "Hold out relation triples");
  split_cmd->add_option("--schema", split.schema, "Schema JSON")->required();
  split_cmd->add_option("--data", split.data, "Data directory")->required();
  split_cmd->add_option("--relation", split.relation, "Relation class to split");
  split_cmd->add_option("--fraction", split.fraction, "Held-out fraction")
      ->capture_default_str();
  split_cmd->add_option("--folds", split.folds, "k-fold split instead of one holdout");
  split_cmd->add_option("--seed", split.seed, "RNG seed");
  split_cmd->add_option("--out", split.out, "Output directory")->required();

  std::string ratings_in;
  std::string ratings_out = "-";
  auto* binarize_cmd =
      app.add_subcommand("binarize", "Ratings to 0/1: 1 iff above the subject's mean");
  binarize_cmd->add_option("--ratings", ratings_in, "CSV: subject,object,score")->required();
  binarize_cmd->add_option("--out", ratings_out, "Output CSV (default stdout)");

  TuneOptions tune;
  auto* tune_cmd = app.add_subcommand("tune", "Cross-validate prior strengths");
  tune_cmd->add_option("--schema", tune.schema, "Schema JSON")->required();
  tune_cmd->add_option("--data", tune.data, "Data directory")->required();
  tune_cmd->add_option("--relation", tune.relation, "Relation scored on held-out triples");
  tune_cmd->add_option("--grid", tune.grid, "Comma list of prior strengths")
      ->capture_default_str();
  tune_cmd->add_option("--folds", tune.folds, "Folds")->capture_default_str();
  add_chain_options(tune_cmd, tune.chain, tune.mode);
  tune_cmd->add_flag("--per-attribute", tune.per_attribute, "Tune attributes one by one");
  tune_cmd->add_option("--out", tune.out, "Tuned schema (default stdout)");
  tune_cmd->add_option("--report", tune.report, "Fold scores JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kSuccess;
    }
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (*generate_cmd) return cmd_generate(generate);
    if (*fit_cmd) return cmd_fit(fit, err);
    if (*predict_cmd) return cmd_predict(predict_options, out);
    if (*evaluate_cmd) return cmd_evaluate(evaluate, out);
    if (*split_cmd) return cmd_split(split);
    if (*binarize_cmd) return cmd_binarize(ratings_in, ratings_out, out);
    if (*tune_cmd) return cmd_tune(tune, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalFault& e) {
    err << "error: numerical fault: " << e.what() << "\n";
    return kNumericalFault;
  } catch (const std::domain_error& e) {
    err << "error: numerical fault: " << e.what() << "\n";
    return kNumericalFault;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace ihrm::cli
