// Apache License, Version 2.0, refer to LICENSE.txt

// Run manifests: what went into a command and how long it took.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ihrm/gibbs.hh"
#include "ihrm/schema.hh"
#include "json.hpp"

namespace ihrm::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);
// Throws std::runtime_error when the file cannot be read.
std::string sha256_file(const std::string& path);

// Hash of the canonical serialization.
std::string schema_hash(const Schema& schema);

struct RunManifest {
  std::string command;
  std::string tool_version = std::string(kToolVersion);
  std::string schema_hash;
  // Effective schema, prior strengths included.
  Schema schema;
  std::string data_dir;
  // File name -> SHA-256 of the inputs.
  std::map<std::string, std::string> digests;
  std::optional<ChainConfig> chain;
  int chains = 1;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  double seconds_per_sweep = 0.0;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& value);

// SHA-256 of every regular file in a data directory, keyed by file name.
std::map<std::string, std::string> directory_digests(const std::string& directory);

}  // namespace ihrm::cli
