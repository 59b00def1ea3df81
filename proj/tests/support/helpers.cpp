#include "helpers.hpp"

#include <atomic>
#include <stdexcept>

#include <unistd.h>

#include "ambiprobe/cli.hpp"
#include "ambiprobe/text.hpp"

namespace testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& stem) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (stem + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

fs::path fixture_dir() { return AMBIPROBE_FIXTURE_DIR; }

namespace {

std::pair<std::size_t, std::size_t> locate(const std::string& sentence, const std::string& word) {
  const auto pos = sentence.find(word);
  if (pos == std::string::npos) return {0, 0};
  const std::size_t begin = ambiprobe::text::length(sentence.substr(0, pos));
  return {begin, begin + ambiprobe::text::length(word)};
}

}  // namespace

std::string dataset_row(const std::string& pair_id, const std::string& word,
                        const std::string& sense, const std::string& a,
                        const std::string& cue_a, const std::string& b,
                        const std::string& cue_b) {
  const auto [sa, ea] = locate(a, word);
  const auto [sb, eb] = locate(b, word);
  return pair_id + "," + word + "," + word + ",es," + sense + "," + a + "," + cue_a + "," + b +
         "," + cue_b + "," + std::to_string(sa) + "," + std::to_string(ea) + "," +
         std::to_string(sb) + "," + std::to_string(eb) + "\n";
}

ambiprobe::Dataset parse(const std::string& csv_body, const std::string& id) {
  std::istringstream in(std::string(ambiprobe::kDatasetHeader) + "\n" + csv_body);
  return ambiprobe::parse_dataset(in, id);
}

ambiprobe::Dataset small_dataset(std::size_t n_pairs, std::size_t n_same, std::size_t n_words) {
  static const std::vector<std::string> words{"banco", "vela", "carta", "planta", "copa",
                                              "hoja", "cola", "pila", "gato", "llama"};
  static const std::vector<std::string> cues{"azul", "roja", "verde", "nueva", "vieja",
                                             "grande", "fina", "larga", "corta", "seca",
                                             "blanca", "negra", "dulce", "dura"};
  std::string body;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto& w = words[i % n_words];
    const auto& ca = cues[i % cues.size()];
    const auto& cb = cues[(i + 3) % cues.size()];
    body += dataset_row("p" + std::to_string(i + 1), w, i < n_same ? "Same" : "Different",
                        "Vimos la " + w + " " + ca, ca, "Vimos la " + w + " " + cb, cb);
  }
  return parse(body);
}

}  // namespace testing

namespace testing {

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"ambiprobe"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = ambiprobe::cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::string> tree_contents(const std::filesystem::path& dir,
                                                 const std::string& skip_suffix) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (!skip_suffix.empty() && name.size() >= skip_suffix.size() &&
        name.compare(name.size() - skip_suffix.size(), skip_suffix.size(), skip_suffix) == 0) {
      continue;
    }
    files[std::filesystem::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

}  // namespace testing
