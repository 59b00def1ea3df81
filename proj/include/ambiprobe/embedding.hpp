#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ambiprobe/dataset.hpp"
#include "ambiprobe/error.hpp"

namespace ambiprobe {

inline constexpr int kDumpSchemaVersion = 1;

struct DumpHeader {
  int schema_version = kDumpSchemaVersion;
  std::string model_id;
  std::size_t n_layers = 0;  // transformer blocks
  bool includes_layer0 = false;
  std::size_t hidden_dim = 0;
  std::string dtype = "f32le";

  std::size_t layers_present() const noexcept {
    return n_layers + (includes_layer0 ? 1 : 0);
  }
  /// Lowest addressable layer index (0 when the static embedding is present).
  std::size_t first_layer() const noexcept { return includes_layer0 ? 0 : 1; }
  bool operator==(const DumpHeader&) const = default;
};

enum class Side { A, B };

struct SentenceRecord {
  std::string sentence_id;
  std::string pair_id;
  Side side = Side::A;
  std::vector<std::string> tokens;
  Span target_span;             // token interval
  std::vector<float> vectors;   // layers_present x span_length x d, row-major

  std::size_t span_length() const noexcept { return target_span.size(); }
  bool operator==(const SentenceRecord&) const = default;
};

class DumpError : public Error {
 public:
  enum class Kind { Header, Version, Schema, Length, Encoding, NonFinite, UnknownSentence };

  DumpError(Kind kind, std::size_t record_index, const std::string& what)
      : Error("dump record " + std::to_string(record_index) + ": " + what),
        kind_(kind), record_index_(record_index) {}
  Kind kind() const noexcept { return kind_; }
  /// 0 is the header line; sentence records start at 1.
  std::size_t record_index() const noexcept { return record_index_; }

 private:
  Kind kind_;
  std::size_t record_index_;
};

/// Streaming reader over the JSON Lines dump. The header is parsed and
/// validated on construction; each next() validates one sentence record. When
/// a dataset is supplied, sentence and pair ids must resolve against it.
class DumpReader {
 public:
  explicit DumpReader(std::istream& in, const Dataset* dataset = nullptr);

  const DumpHeader& header() const noexcept { return header_; }
  std::optional<SentenceRecord> next();
  std::size_t records_read() const noexcept { return index_; }

 private:
  std::istream& in_;
  const Dataset* dataset_;
  DumpHeader header_;
  std::size_t index_ = 0;
  std::unordered_set<std::string> known_sentences_;
};

struct EmbeddingDump {
  DumpHeader header;
  std::vector<SentenceRecord> records;
};

EmbeddingDump read_dump(std::istream& in, const Dataset* dataset = nullptr);
EmbeddingDump load_dump(const std::string& path, const Dataset* dataset = nullptr);

std::string header_line(const DumpHeader& header);
std::string record_line(const SentenceRecord& record);
void write_dump(std::ostream& out, const DumpHeader& header,
                const std::vector<SentenceRecord>& records);

/// Mean of the target-span token vectors at `layer` (left-to-right Kahan).
std::vector<double> target_vector(const DumpHeader& header, const SentenceRecord& rec,
                                  std::size_t layer);

bool is_special_token(std::string_view token) noexcept;

struct TokenDiffStats {
  std::string model_id;
  double mean_diff = 0.0;
  std::size_t modal_diff = 0;
  std::size_t max_diff = 0;
  double mean_target_tokens = 0.0;
};

/// Per pair |len(tokens_a) - len(tokens_b)| with special tokens excluded.
/// Throws CompletenessError listing pairs that lack a side.
TokenDiffStats token_diff_stats(const EmbeddingDump& dump, const Dataset& d);

}  // namespace ambiprobe
