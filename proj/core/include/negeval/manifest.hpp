#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace negeval {

// Reproducibility record for one CLI invocation: every parameter that can
// affect an output value, plus content digests of the inputs. Two runs with
// identical manifests (timestamp aside) produce byte-identical outputs.
struct RunManifest {
  std::string tool_version;
  std::string subcommand;
  std::string timestamp_utc;
  std::vector<std::pair<std::string, std::string>> parameters;
  struct InputDigest {
    std::string path;
    std::string digest;  // fnv1a64 hex, or "unavailable"
  };
  std::vector<InputDigest> inputs;
};

std::uint64_t fnv1a64_file(const std::filesystem::path& path);  // IoError

// "fnv1a64:<16 hex digits>", or "unavailable" when the file cannot be read.
std::string file_digest_or_unavailable(const std::filesystem::path& path);

std::string current_utc_timestamp();

void write_manifest_json(const std::filesystem::path& path,
                         const RunManifest& manifest);

}  // namespace negeval
