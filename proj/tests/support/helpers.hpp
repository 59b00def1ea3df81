#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ambiprobe/dataset.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

/// Directory holding the checked-in fixture.
std::filesystem::path fixture_dir();

/// CSV row for the dataset schema, spans computed from the word position.
std::string dataset_row(const std::string& pair_id, const std::string& word,
                        const std::string& sense, const std::string& a,
                        const std::string& cue_a, const std::string& b,
                        const std::string& cue_b);

ambiprobe::Dataset parse(const std::string& csv_body, const std::string& id = "t");

/// n pairs over `n_words` words; the first n_same are Same.
ambiprobe::Dataset small_dataset(std::size_t n_pairs, std::size_t n_same,
                                 std::size_t n_words = 5);

}  // namespace testing

namespace testing {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args);

/// Every regular file under `dir` (relative path -> bytes), skipping files
/// whose name ends in `skip_suffix`.
std::map<std::string, std::string> tree_contents(const std::filesystem::path& dir,
                                                 const std::string& skip_suffix = "");

}  // namespace testing
