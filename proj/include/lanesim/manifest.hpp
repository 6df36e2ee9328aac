#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanesim/config.hpp"
#include "lanesim/errors.hpp"
#include "lanesim/version.hpp"

namespace lanesim {

/// FNV-1a over a file's bytes; cheap fingerprint for reproducibility records.
inline uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash " + path.string());
  uint64_t h = 1469598103934665603ULL;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<uint8_t>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

/// Fingerprint of a drive-log directory: manifest plus projection config.
inline uint64_t fingerprint_log_dir(const std::filesystem::path& dir) {
  uint64_t h = fnv1a64_file(dir / "manifest.csv");
  h ^= fnv1a64_file(dir / "projection.cfg") + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

/// Everything needed to replay a run bit-exactly: the resolved configuration,
/// seeds, and fingerprints of the inputs. Written before any outputs.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  uint64_t seed = 0;
  std::string config_echo;  // resolved config document text
  std::vector<std::pair<std::string, uint64_t>> inputs;

  void write(const std::filesystem::path& path) const {
    nlohmann::ordered_json j;
    j["tool_version"] = kVersion;
    j["subcommand"] = subcommand;
    j["argv"] = argv;
    j["seed"] = seed;
    j["config"] = config_echo;
    j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& [name, hash] : inputs) {
      nlohmann::ordered_json e;
      e["path"] = name;
      char buf[20];
      std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
      e["fnv1a64"] = buf;
      j["inputs"].push_back(e);
    }
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char ts[32];
    std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    j["created_utc"] = ts;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << j.dump(2) << "\n";
  }
};

}  // namespace lanesim
