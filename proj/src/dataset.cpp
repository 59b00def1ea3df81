#include "ambiprobe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "ambiprobe/csv.hpp"
#include "ambiprobe/error.hpp"
#include "ambiprobe/text.hpp"

namespace ambiprobe {

std::string_view to_string(SenseRelationship s) noexcept {
  return s == SenseRelationship::Same ? "Same" : "Different";
}

std::optional<SenseRelationship> parse_sense(std::string_view s) noexcept {
  if (s == "Same") return SenseRelationship::Same;
  if (s == "Different") return SenseRelationship::Different;
  return std::nullopt;
}

std::string sentence_id_for(std::string_view pair_id, char side) {
  std::string id(pair_id);
  id.push_back(':');
  id.push_back(side);
  return id;
}

Dataset::Dataset(std::string dataset_id, std::vector<SentencePair> pairs,
                 std::vector<TargetWord> words)
    : dataset_id_(std::move(dataset_id)),
      pairs_(std::move(pairs)),
      words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!word_index_.emplace(words_[i].word_id, i).second) {
      throw DuplicateError(i + 2, words_[i].word_id);
    }
  }
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (!pair_index_.emplace(pairs_[i].pair_id, i).second) {
      throw DuplicateError(i + 2, pairs_[i].pair_id);
    }
    if (!word_index_.contains(pairs_[i].word_id)) {
      throw ParseError(i + 2, "word_id '" + pairs_[i].word_id +
                                  "' does not resolve");
    }
  }
  std::unordered_set<std::string> used;
  for (const auto& p : pairs_) used.insert(p.word_id);
  for (const auto& w : words_) {
    if (!used.contains(w.word_id)) {
      throw Error("word '" + w.word_id + "' has no sentence pairs");
    }
  }
}

const TargetWord& Dataset::word(std::string_view word_id) const {
  const auto it = word_index_.find(std::string(word_id));
  if (it == word_index_.end()) {
    throw ArgumentError("unknown word_id '" + std::string(word_id) + "'");
  }
  return words_[it->second];
}

std::optional<std::size_t> Dataset::pair_index(std::string_view pair_id) const {
  const auto it = pair_index_.find(std::string(pair_id));
  if (it == pair_index_.end()) return std::nullopt;
  return it->second;
}

const SentencePair& Dataset::pair(std::string_view pair_id) const {
  const auto idx = pair_index(pair_id);
  if (!idx) throw ArgumentError("unknown pair_id '" + std::string(pair_id) + "'");
  return pairs_[*idx];
}

namespace {

constexpr std::size_t kColumns = 13;

std::size_t parse_offset(const std::string& s, std::size_t row,
                         std::string_view column) {
  std::size_t value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(row, std::string(column) + " is not a non-negative integer: '" +
                              s + "'");
  }
  return value;
}

const std::vector<std::string>& header_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> out;
    std::string_view h = kDatasetHeader;
    for (std::size_t pos = 0;;) {
      const auto comma = h.find(',', pos);
      out.emplace_back(h.substr(pos, comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return out;
  }();
  return cols;
}

}  // namespace

Dataset parse_dataset(std::istream& in, std::string dataset_id) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw ParseError(1, "missing header row");
  if (!header->empty() && header->front().starts_with("\xEF\xBB\xBF")) {
    header->front().erase(0, 3);
  }
  if (*header != header_columns()) {
    throw ParseError(1, "header does not match the dataset schema");
  }

  std::vector<SentencePair> pairs;
  std::vector<TargetWord> words;
  std::unordered_map<std::string, std::size_t> word_rows;
  std::unordered_map<std::string, std::size_t> seen_pairs;

  while (auto row = reader.next()) {
    const std::size_t rn = reader.record_number();
    if (row->size() == 1 && row->front().empty()) continue;  // blank line
    if (row->size() != kColumns) {
      throw ParseError(rn, "expected " + std::to_string(kColumns) +
                               " columns, found " + std::to_string(row->size()));
    }
    const auto& cols = header_columns();
    for (std::size_t c = 0; c < kColumns; ++c) {
      if ((*row)[c].empty()) {
        throw ParseError(rn, "empty required field '" + cols[c] + "'");
      }
      if (!text::is_valid_utf8((*row)[c])) {
        throw ParseError(rn, "field '" + cols[c] + "' is not valid UTF-8");
      }
    }
    auto& r = *row;
    if (!seen_pairs.emplace(r[0], rn).second) throw DuplicateError(rn, r[0]);

    const auto sense = parse_sense(r[4]);
    if (!sense) {
      throw ParseError(rn, "sense_relationship must be Same or Different, got '" +
                               r[4] + "'");
    }

    TargetWord word{r[1], r[2], r[3], false};
    if (auto it = word_rows.find(word.word_id); it != word_rows.end()) {
      const auto& prior = words[it->second];
      if (prior.surface_form != word.surface_form ||
          prior.language != word.language) {
        throw ParseError(rn, "word '" + word.word_id +
                                 "' has inconsistent surface form or language");
      }
    } else {
      word_rows.emplace(word.word_id, words.size());
      words.push_back(word);
    }

    SentencePair pair;
    pair.pair_id = r[0];
    pair.word_id = r[1];
    pair.sense_relationship = *sense;
    pair.sentence_a = Sentence{sentence_id_for(r[0], 'a'), r[5],
                               Span{parse_offset(r[9], rn, cols[9]),
                                    parse_offset(r[10], rn, cols[10])},
                               r[6]};
    pair.sentence_b = Sentence{sentence_id_for(r[0], 'b'), r[7],
                               Span{parse_offset(r[11], rn, cols[11]),
                                    parse_offset(r[12], rn, cols[12])},
                               r[8]};
    pairs.push_back(std::move(pair));
  }
  return Dataset(std::move(dataset_id), std::move(pairs), std::move(words));
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return parse_dataset(in, std::filesystem::path(path).stem().string());
}

std::string serialize_dataset(const Dataset& d) {
  std::string out(kDatasetHeader);
  out.push_back('\n');
  for (const auto& p : d.pairs()) {
    const auto& w = d.word_of(p);
    out += csv::format_row({
        p.pair_id, p.word_id, w.surface_form, w.language,
        std::string(to_string(p.sense_relationship)), p.sentence_a.text,
        p.sentence_a.context_cue, p.sentence_b.text, p.sentence_b.context_cue,
        std::to_string(p.sentence_a.target_char_span.begin),
        std::to_string(p.sentence_a.target_char_span.end),
        std::to_string(p.sentence_b.target_char_span.begin),
        std::to_string(p.sentence_b.target_char_span.end),
    });
  }
  return out;
}

std::size_t word_diff_count(std::string_view a, std::string_view b) {
  const auto wa = text::split_words(a);
  const auto wb = text::split_words(b);
  std::vector<std::size_t> prev(wb.size() + 1);
  std::vector<std::size_t> cur(wb.size() + 1);
  for (std::size_t j = 0; j <= wb.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= wa.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= wb.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (wa[i - 1] == wb[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[wb.size()];
}

namespace {

void check_sentence(const Sentence& s, std::string_view field,
                    const TargetWord& word, ValidationReport& report) {
  auto add = [&](std::string invariant, const std::string& what) {
    report.push_back({std::move(invariant), std::string(field),
                      std::string(field) + ": " + what});
  };
  const std::size_t len = text::length(s.text);
  const auto& span = s.target_char_span;
  const auto target_lower = text::to_lower(text::decode_utf8(word.surface_form));

  bool span_ok = span.begin < span.end && span.end <= len;
  if (span_ok) {
    const auto at_span = text::substr(s.text, span.begin, span.end);
    span_ok = text::equals_ignore_case(at_span, word.surface_form);
  }
  if (!span_ok) {
    const auto haystack = text::to_lower(text::decode_utf8(s.text));
    if (haystack.find(target_lower) == std::u32string::npos) {
      add("target-present", "target absent");
    } else if (span.begin >= span.end || span.end > len) {
      add("target-span", "target span out of bounds");
    } else {
      add("target-span", "target span does not cover the target word");
    }
  }
  if (s.text.find(s.context_cue) == std::string::npos) {
    add("cue-present", "context cue '" + s.context_cue + "' absent");
  }
}

}  // namespace

ValidationReport validate_pair(const SentencePair& pair, const TargetWord& word) {
  ValidationReport report;
  if (word.surface_form.empty() || text::split_words(word.surface_form).size() != 1) {
    report.push_back({"surface-form", "word",
                      "word: surface form must be a single token"});
    return report;
  }
  check_sentence(pair.sentence_a, "sentence_a", word, report);
  check_sentence(pair.sentence_b, "sentence_b", word, report);
  const auto diff = word_diff_count(pair.sentence_a.text, pair.sentence_b.text);
  if (diff == 0) {
    report.push_back({"word-diff", "sentence_b",
                      "sentence_b: word-diff is 0 (sentences identical)"});
  } else if (diff > 2) {
    report.push_back({"word-diff", "sentence_b",
                      "sentence_b: word-diff exceeds 2 (" + std::to_string(diff) +
                          ")"});
  }
  return report;
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport all;
  for (const auto& p : d.pairs()) {
    for (auto& v : validate_pair(p, d.word_of(p))) {
      v.message = p.pair_id + ": " + v.message;
      all.push_back(std::move(v));
    }
  }
  return all;
}

DatasetStats dataset_stats(const Dataset& d) {
  DatasetStats s;
  s.n_pairs = d.pairs().size();
  s.n_words = d.words().size();
  if (s.n_pairs == 0) return s;

  std::unordered_map<std::string, std::size_t> per_word;
  std::size_t total_words = 0;
  for (const auto& p : d.pairs()) {
    ++per_word[p.word_id];
    total_words += text::split_words(p.sentence_a.text).size();
    total_words += text::split_words(p.sentence_b.text).size();
    if (p.sense_relationship == SenseRelationship::Same) {
      ++s.n_same;
    } else {
      ++s.n_different;
    }
  }
  s.pairs_per_word_min = std::numeric_limits<std::size_t>::max();
  for (const auto& [_, count] : per_word) {
    s.pairs_per_word_min = std::min(s.pairs_per_word_min, count);
    s.pairs_per_word_max = std::max(s.pairs_per_word_max, count);
  }
  s.pairs_per_word_mean =
      static_cast<double>(s.n_pairs) / static_cast<double>(s.n_words);
  s.mean_words_per_sentence =
      static_cast<double>(total_words) / static_cast<double>(2 * s.n_pairs);
  return s;
}

}  // namespace ambiprobe
