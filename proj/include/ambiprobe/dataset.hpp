#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ambiprobe {

enum class SenseRelationship { Same, Different };

std::string_view to_string(SenseRelationship s) noexcept;
/// Exact match on "Same" / "Different".
std::optional<SenseRelationship> parse_sense(std::string_view s) noexcept;

/// Half-open interval [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct TargetWord {
  std::string word_id;
  std::string surface_form;
  std::string language;  // BCP-47
  bool gender_varies = false;
  bool operator==(const TargetWord&) const = default;
};

struct Sentence {
  std::string sentence_id;
  std::string text;
  Span target_char_span;  // code point offsets into text
  std::string context_cue;
  bool operator==(const Sentence&) const = default;
};

struct SentencePair {
  std::string pair_id;
  std::string word_id;
  Sentence sentence_a;
  Sentence sentence_b;
  SenseRelationship sense_relationship = SenseRelationship::Same;
  bool operator==(const SentencePair&) const = default;
};

/// sentence_id convention shared with embedding dumps: "<pair_id>:a" / ":b".
std::string sentence_id_for(std::string_view pair_id, char side);

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string dataset_id, std::vector<SentencePair> pairs,
          std::vector<TargetWord> words);

  const std::string& dataset_id() const noexcept { return dataset_id_; }
  const std::vector<SentencePair>& pairs() const noexcept { return pairs_; }
  /// Words in order of first appearance.
  const std::vector<TargetWord>& words() const noexcept { return words_; }

  const TargetWord& word(std::string_view word_id) const;
  const TargetWord& word_of(const SentencePair& pair) const {
    return word(pair.word_id);
  }
  /// Index of a pair in dataset order, or nullopt.
  std::optional<std::size_t> pair_index(std::string_view pair_id) const;
  const SentencePair& pair(std::string_view pair_id) const;

  bool operator==(const Dataset& other) const {
    return pairs_ == other.pairs_ && words_ == other.words_;
  }

 private:
  std::string dataset_id_;
  std::vector<SentencePair> pairs_;
  std::vector<TargetWord> words_;
  std::unordered_map<std::string, std::size_t> pair_index_;
  std::unordered_map<std::string, std::size_t> word_index_;
};

/// The exact header row of the dataset CSV.
inline constexpr std::string_view kDatasetHeader =
    "pair_id,word_id,word,language,sense_relationship,sentence_a,cue_a,"
    "sentence_b,cue_b,target_char_start_a,target_char_end_a,"
    "target_char_start_b,target_char_end_b";

/// Parses the dataset CSV. Row order becomes pair order. Throws ParseError
/// (malformed rows, bad header, inconsistent word metadata) or DuplicateError.
Dataset parse_dataset(std::istream& in, std::string dataset_id = {});
Dataset load_dataset(const std::string& path);
std::string serialize_dataset(const Dataset& d);

/// Word-level Levenshtein distance over whitespace-delimited tokens.
std::size_t word_diff_count(std::string_view a, std::string_view b);

struct Violation {
  std::string invariant;  // short machine-friendly tag
  std::string field;      // e.g. "sentence_b"
  std::string message;    // "<field>: <description>"
};
using ValidationReport = std::vector<Violation>;

ValidationReport validate_pair(const SentencePair& pair, const TargetWord& word);
/// Runs validate_pair over every pair; violations are prefixed by pair_id.
ValidationReport validate_dataset(const Dataset& d);

struct DatasetStats {
  std::size_t n_pairs = 0;
  std::size_t n_words = 0;
  std::size_t pairs_per_word_min = 0;
  std::size_t pairs_per_word_max = 0;
  double pairs_per_word_mean = 0.0;
  double mean_words_per_sentence = 0.0;
  std::size_t n_same = 0;
  std::size_t n_different = 0;
};

DatasetStats dataset_stats(const Dataset& d);

}  // namespace ambiprobe
