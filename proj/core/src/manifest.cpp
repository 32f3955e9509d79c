#include "negeval/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "io_util.hpp"

namespace negeval {

namespace {
using ordered_json = nlohmann::ordered_json;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  auto in = detail::open_input(path, std::ios::in | std::ios::binary);
  std::uint64_t hash = 14695981039346656037ull;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    const auto got = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 1099511628211ull;
    }
    if (!in) break;
  }
  return hash;
}

std::string file_digest_or_unavailable(const std::filesystem::path& path) {
  try {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(path)));
    return buf;
  } catch (const IoError&) {
    return "unavailable";
  }
}

std::string current_utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

void write_manifest_json(const std::filesystem::path& path,
                         const RunManifest& manifest) {
  auto out = detail::open_output(path);
  ordered_json doc;
  doc["tool_version"] = manifest.tool_version;
  doc["subcommand"] = manifest.subcommand;
  doc["timestamp_utc"] = manifest.timestamp_utc;
  ordered_json params = ordered_json::object();
  for (const auto& [key, value] : manifest.parameters) params[key] = value;
  doc["parameters"] = std::move(params);
  ordered_json inputs = ordered_json::array();
  for (const auto& input : manifest.inputs) {
    inputs.push_back({{"path", input.path}, {"digest", input.digest}});
  }
  doc["inputs"] = std::move(inputs);
  out << doc.dump(2) << '\n';
  detail::finish_output(out, path);
}

}  // namespace negeval
