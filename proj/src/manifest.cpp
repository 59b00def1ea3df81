#include "ambiprobe/manifest.hpp"

#include <array>
#include <chrono>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "ambiprobe/error.hpp"
#include "ambiprobe/judgments.hpp"

#ifndef AMBIPROBE_VERSION
#define AMBIPROBE_VERSION "0.0.0"
#endif

namespace ambiprobe {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view tool_version() noexcept { return AMBIPROBE_VERSION; }

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("SHA-256 initialisation failed");
    }
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) {
      throw Error("SHA-256 finalisation failed");
    }
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for hashing");
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

ordered_json to_json(const RunManifest& m) {
  ordered_json o;
  o["command"] = m.command;
  auto& inputs = o["inputs"] = ordered_json::array();
  for (const auto& in : m.inputs) inputs.push_back({{"path", in.path}, {"sha256", in.sha256}});
  o["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
  o["tool_version"] = m.tool_version;
  o["outputs"] = m.outputs;
  o["created_at"] = m.created_at;
  return o;
}

OutputDir::OutputDir(fs::path dir, std::string command) : dir_(std::move(dir)) {
  manifest_.command = std::move(command);
  manifest_.tool_version = std::string(tool_version());
  fs::create_directories(dir_);
}

void OutputDir::add_input(const std::string& path) {
  for (const auto& in : manifest_.inputs) {
    if (in.path == path) return;
  }
  manifest_.inputs.push_back({path, sha256_file(path)});
}

void OutputDir::write(const std::string& name, std::string_view content) {
  const fs::path rel(name);
  if (name.empty() || rel.has_parent_path() || rel.is_absolute() || name == "." || name == "..") {
    throw ArgumentError("output name '" + name + "' must be a plain file name");
  }
  const fs::path target = dir_ / rel;
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + target.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write to '" + target.string() + "' failed");
  manifest_.outputs.push_back(name);
}

fs::path OutputDir::finish() {
  manifest_.created_at = format_rfc3339(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count());
  const fs::path path = dir_ / (manifest_.command + ".manifest.json");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_json(manifest_).dump(2) << '\n';
  return path;
}

}  // namespace ambiprobe
