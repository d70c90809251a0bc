// Apache License, Version 2.0, refer to LICENSE.txt

#include "manifest.hh"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "ihrm/serialize.hh"

namespace ihrm::cli {

using nlohmann::json;

namespace {

std::string to_hex(const unsigned char* bytes, unsigned int length) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += kDigits[bytes[i] >> 4];
    out += kDigits[bytes[i] & 0xf];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  return to_hex(digest, length);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

std::string schema_hash(const Schema& schema) {
  return sha256_hex(serialize_schema(schema));
}

json manifest_to_json(const RunManifest& manifest) {
  json out = {{"command", manifest.command},
              {"tool_version", manifest.tool_version},
              {"schema_hash", manifest.schema_hash},
              {"schema", json::parse(serialize_schema(manifest.schema))},
              {"data_dir", manifest.data_dir},
              {"digests", manifest.digests},
              {"chains", manifest.chains},
              {"seed", manifest.seed},
              {"wall_seconds", manifest.wall_seconds},
              {"seconds_per_sweep", manifest.seconds_per_sweep}};
  out["chain_config"] = manifest.chain ? chain_config_to_json(*manifest.chain) : json();
  return out;
}

RunManifest manifest_from_json(const json& value) {
  RunManifest manifest;
  try {
    manifest.command = value.at("command").get<std::string>();
    manifest.tool_version = value.at("tool_version").get<std::string>();
    manifest.schema_hash = value.at("schema_hash").get<std::string>();
    manifest.schema = parse_schema(value.at("schema").dump());
    manifest.data_dir = value.at("data_dir").get<std::string>();
    manifest.digests = value.at("digests").get<std::map<std::string, std::string>>();
    manifest.chains = value.value("chains", 1);
    manifest.seed = value.value("seed", std::uint64_t{0});
    manifest.wall_seconds = value.value("wall_seconds", 0.0);
    manifest.seconds_per_sweep = value.value("seconds_per_sweep", 0.0);
    if (value.contains("chain_config") && !value.at("chain_config").is_null()) {
      manifest.chain = chain_config_from_json(value.at("chain_config"));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  return manifest;
}

std::map<std::string, std::string> directory_digests(const std::string& directory) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    out[entry.path().filename().string()] = sha256_file(entry.path().string());
  }
  return out;
}

}  // namespace ihrm::cli
