#include "ambiprobe/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "ambiprobe/base64.hpp"
#include "ambiprobe/numeric.hpp"

namespace ambiprobe {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<std::uint8_t> floats_to_le_bytes(const std::vector<float>& v) {
  std::vector<std::uint8_t> bytes(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(v[i]);
    bytes[4 * i + 0] = static_cast<std::uint8_t>(bits);
    bytes[4 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
    bytes[4 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
    bytes[4 * i + 3] = static_cast<std::uint8_t>(bits >> 24);
  }
  return bytes;
}

std::vector<float> le_bytes_to_floats(const std::vector<std::uint8_t>& bytes) {
  std::vector<float> v(bytes.size() / 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                               static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
    v[i] = std::bit_cast<float>(bits);
  }
  return v;
}

bool next_nonempty_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

template <class T>
T field(const json& j, const char* key, DumpError::Kind kind, std::size_t index) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DumpError(kind, index, std::string("missing or mistyped field '") + key + "'");
  }
}

}  // namespace

DumpReader::DumpReader(std::istream& in, const Dataset* dataset)
    : in_(in), dataset_(dataset) {
  using K = DumpError::Kind;
  std::string line;
  if (!next_nonempty_line(in_, line)) throw DumpError(K::Header, 0, "empty dump");
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DumpError(K::Header, 0, std::string("header is not JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("record", "") != "header") {
    throw DumpError(K::Header, 0, "first line is not a header record");
  }
  header_.schema_version = field<int>(j, "schema_version", K::Header, 0);
  if (header_.schema_version != kDumpSchemaVersion) {
    throw DumpError(K::Version, 0,
                    "unsupported schema_version " + std::to_string(header_.schema_version));
  }
  header_.model_id = field<std::string>(j, "model_id", K::Header, 0);
  header_.n_layers = field<std::size_t>(j, "n_layers", K::Header, 0);
  header_.includes_layer0 = field<bool>(j, "includes_layer0", K::Header, 0);
  header_.hidden_dim = field<std::size_t>(j, "hidden_dim", K::Header, 0);
  header_.dtype = field<std::string>(j, "dtype", K::Header, 0);
  if (header_.n_layers < 1) throw DumpError(K::Header, 0, "n_layers must be >= 1");
  if (header_.hidden_dim < 1) throw DumpError(K::Header, 0, "hidden_dim must be >= 1");
  if (header_.dtype != "f32le") {
    throw DumpError(K::Header, 0, "unsupported dtype '" + header_.dtype + "'");
  }
  if (dataset_) {
    for (const auto& p : dataset_->pairs()) {
      known_sentences_.insert(p.sentence_a.sentence_id);
      known_sentences_.insert(p.sentence_b.sentence_id);
    }
  }
}

std::optional<SentenceRecord> DumpReader::next() {
  using K = DumpError::Kind;
  std::string line;
  if (!next_nonempty_line(in_, line)) return std::nullopt;
  const std::size_t idx = ++index_;

  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DumpError(K::Schema, idx, std::string("record is not JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("record", "") != "sentence") {
    throw DumpError(K::Schema, idx, "expected a sentence record");
  }
  SentenceRecord rec;
  rec.sentence_id = field<std::string>(j, "sentence_id", K::Schema, idx);
  rec.pair_id = field<std::string>(j, "pair_id", K::Schema, idx);
  const auto side = field<std::string>(j, "side", K::Schema, idx);
  if (side == "a") {
    rec.side = Side::A;
  } else if (side == "b") {
    rec.side = Side::B;
  } else {
    throw DumpError(K::Schema, idx, "side must be \"a\" or \"b\"");
  }
  rec.tokens = field<std::vector<std::string>>(j, "tokens", K::Schema, idx);
  const auto span = field<std::vector<std::size_t>>(j, "target_span", K::Schema, idx);
  if (span.size() != 2) throw DumpError(K::Schema, idx, "target_span must have 2 entries");
  rec.target_span = Span{span[0], span[1]};
  if (rec.target_span.begin >= rec.target_span.end ||
      rec.target_span.end > rec.tokens.size()) {
    throw DumpError(K::Schema, idx, "target_span empty or outside token bounds");
  }

  if (dataset_) {
    if (!known_sentences_.contains(rec.sentence_id)) {
      throw DumpError(K::UnknownSentence, idx,
                      "unknown sentence_id '" + rec.sentence_id + "'");
    }
    if (rec.sentence_id != sentence_id_for(rec.pair_id, side[0])) {
      throw DumpError(K::UnknownSentence, idx,
                      "sentence_id '" + rec.sentence_id + "' does not match pair/side");
    }
  }

  const auto encoded = field<std::string>(j, "vectors", K::Schema, idx);
  const std::size_t expected =
      header_.layers_present() * rec.span_length() * header_.hidden_dim * 4;
  if (encoded.size() % 4 != 0) {
    throw DumpError(K::Length, idx, "vector payload truncated (base64 length " +
                                        std::to_string(encoded.size()) + ")");
  }
  const auto bytes = base64::decode(encoded);
  if (!bytes) throw DumpError(K::Encoding, idx, "vector payload is not valid base64");
  if (bytes->size() != expected) {
    throw DumpError(K::Length, idx,
                    "vector payload has " + std::to_string(bytes->size()) +
                        " bytes, expected " + std::to_string(expected));
  }
  rec.vectors = le_bytes_to_floats(*bytes);
  for (float v : rec.vectors) {
    if (!std::isfinite(v)) throw DumpError(K::NonFinite, idx, "non-finite vector value");
  }
  return rec;
}

EmbeddingDump read_dump(std::istream& in, const Dataset* dataset) {
  DumpReader reader(in, dataset);
  EmbeddingDump dump{reader.header(), {}};
  while (auto rec = reader.next()) dump.records.push_back(std::move(*rec));
  return dump;
}

EmbeddingDump load_dump(const std::string& path, const Dataset* dataset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dump '" + path + "'");
  return read_dump(in, dataset);
}

std::string header_line(const DumpHeader& h) {
  ordered_json j;
  j["record"] = "header";
  j["schema_version"] = h.schema_version;
  j["model_id"] = h.model_id;
  j["n_layers"] = h.n_layers;
  j["includes_layer0"] = h.includes_layer0;
  j["hidden_dim"] = h.hidden_dim;
  j["dtype"] = h.dtype;
  return j.dump();
}

std::string record_line(const SentenceRecord& r) {
  ordered_json j;
  j["record"] = "sentence";
  j["sentence_id"] = r.sentence_id;
  j["pair_id"] = r.pair_id;
  j["side"] = r.side == Side::A ? "a" : "b";
  j["tokens"] = r.tokens;
  j["target_span"] = {r.target_span.begin, r.target_span.end};
  j["vectors"] = base64::encode(floats_to_le_bytes(r.vectors));
  return j.dump();
}

void write_dump(std::ostream& out, const DumpHeader& header,
                const std::vector<SentenceRecord>& records) {
  out << header_line(header) << '\n';
  for (const auto& r : records) out << record_line(r) << '\n';
}

std::vector<double> target_vector(const DumpHeader& header, const SentenceRecord& rec,
                                  std::size_t layer) {
  if (layer < header.first_layer() || layer > header.n_layers) {
    throw ArgumentError("layer " + std::to_string(layer) + " not present (range " +
                        std::to_string(header.first_layer()) + ".." +
                        std::to_string(header.n_layers) + ")");
  }
  const std::size_t slot = layer - header.first_layer();
  const std::size_t d = header.hidden_dim;
  const std::size_t span = rec.span_length();
  if (rec.vectors.size() != header.layers_present() * span * d) {
    throw ArgumentError("record '" + rec.sentence_id + "' has inconsistent vector size");
  }
  std::vector<double> out(d);
  const float* base = rec.vectors.data() + slot * span * d;
  for (std::size_t c = 0; c < d; ++c) {
    KahanSum s;
    for (std::size_t t = 0; t < span; ++t) s.add(static_cast<double>(base[t * d + c]));
    out[c] = s.value() / static_cast<double>(span);
  }
  return out;
}

bool is_special_token(std::string_view t) noexcept {
  return t == "[CLS]" || t == "[SEP]" || t == "[PAD]" || t == "[MASK]" ||
         t == "<s>" || t == "</s>" || t == "<pad>" || t == "<cls>" || t == "<sep>" ||
         t == "<mask>";
}

TokenDiffStats token_diff_stats(const EmbeddingDump& dump, const Dataset& d) {
  struct Sides {
    const SentenceRecord* a = nullptr;
    const SentenceRecord* b = nullptr;
  };
  std::unordered_map<std::string, Sides> by_pair;
  for (const auto& r : dump.records) {
    auto& s = by_pair[r.pair_id];
    (r.side == Side::A ? s.a : s.b) = &r;
  }
  std::vector<std::string> missing;
  for (const auto& p : d.pairs()) {
    const auto it = by_pair.find(p.pair_id);
    if (it == by_pair.end() || !it->second.a || !it->second.b) missing.push_back(p.pair_id);
  }
  if (!missing.empty()) throw CompletenessError(std::move(missing));

  auto content_length = [](const SentenceRecord& r) {
    std::size_t n = 0;
    for (const auto& t : r.tokens) n += is_special_token(t) ? 0 : 1;
    return n;
  };

  TokenDiffStats out;
  out.model_id = dump.header.model_id;
  if (d.pairs().empty()) return out;
  std::map<std::size_t, std::size_t> histogram;
  KahanSum diff_sum, target_sum;
  for (const auto& p : d.pairs()) {
    const auto& s = by_pair.at(p.pair_id);
    const std::size_t la = content_length(*s.a);
    const std::size_t lb = content_length(*s.b);
    const std::size_t diff = la > lb ? la - lb : lb - la;
    ++histogram[diff];
    diff_sum.add(static_cast<double>(diff));
    target_sum.add(static_cast<double>(s.a->span_length()));
    target_sum.add(static_cast<double>(s.b->span_length()));
    out.max_diff = std::max(out.max_diff, diff);
  }
  std::size_t best_count = 0;
  for (const auto& [value, count] : histogram) {
    if (count > best_count) {
      best_count = count;
      out.modal_diff = value;
    }
  }
  const auto n = static_cast<double>(d.pairs().size());
  out.mean_diff = diff_sum.value() / n;
  out.mean_target_tokens = target_sum.value() / (2.0 * n);
  return out;
}

}  // namespace ambiprobe
