#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ambiprobe {

std::string_view tool_version() noexcept;

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

struct InputDigest {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::vector<InputDigest> inputs;
  std::optional<std::uint64_t> seed;
  std::string tool_version;
  std::vector<std::string> outputs;  // relative to the output directory
  std::string created_at;            // RFC 3339, the only non-deterministic field
};

nlohmann::ordered_json to_json(const RunManifest& m);

/// Collects the files written by one command into a single directory and
/// writes `<command>.manifest.json` listing them on finish().
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, std::string command);

  void add_input(const std::string& path);
  void set_seed(std::uint64_t seed) { manifest_.seed = seed; }
  /// Writes `name` (a plain file name) inside the directory.
  void write(const std::string& name, std::string_view content);
  /// Returns the manifest path.
  std::filesystem::path finish();

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const RunManifest& manifest() const noexcept { return manifest_; }

 private:
  std::filesystem::path dir_;
  RunManifest manifest_;
};

}  // namespace ambiprobe
