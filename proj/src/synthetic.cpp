#include "ambiprobe/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "ambiprobe/error.hpp"
#include "ambiprobe/numeric.hpp"
#include "ambiprobe/rng.hpp"
#include "ambiprobe/text.hpp"

namespace ambiprobe::synthetic {

namespace {

struct Entry {
  const char* word;
  const char* article;
  std::vector<const char*> sense1;
  std::vector<const char*> sense2;
};

const std::vector<Entry>& lexicon() {
  static const std::vector<Entry> entries = {
      {"banco", "el", {"central", "nacional", "privado"}, {"largo", "verde", "roto"}},
      {"planta", "la", {"industrial", "química", "nuclear"}, {"tropical", "pequeña", "seca"}},
      {"carta", "la", {"certificada", "urgente", "larga"}, {"marcada", "ganadora", "repetida"}},
      {"hoja", "la", {"caída", "verde", "seca"}, {"impresa", "rayada", "blanca"}},
      {"llama", "la", {"andina", "joven", "lanuda"}, {"azul", "viva", "intensa"}},
      {"muñeca", "la", {"antigua", "bonita", "rota"}, {"izquierda", "fracturada", "hinchada"}},
      {"sierra", "la", {"eléctrica", "afilada", "oxidada"}, {"nevada", "alta", "rocosa"}},
      {"vela", "la", {"perfumada", "encendida", "gastada"}, {"mayor", "rasgada", "inflada"}},
      {"cura", "el", {"rural", "católico", "anciano"}, {"milagrosa", "rápida", "definitiva"}},
      {"gato", "el", {"negro", "callejero", "siamés"}, {"hidráulico", "mecánico", "pesado"}},
      {"pila", "la", {"alcalina", "recargable", "agotada"}, {"bautismal", "llena", "enorme"}},
      {"copa", "la", {"mundial", "europea", "dorada"}, {"vacía", "rota", "alta"}},
  };
  return entries;
}

const std::vector<const char*> kPrefixes = {"Vimos", "Había", "Encontramos", "Compré", "Miramos"};

std::string make_sentence(const char* prefix, const Entry& e, const char* cue) {
  return std::string(prefix) + " " + e.article + " " + e.word + " " + cue;
}

// Lower-cased word pieces; long words become two subword tokens.
std::vector<std::string> word_pieces(const std::string& word, std::size_t split_at) {
  const std::string lower = text::encode_utf8(text::to_lower(text::decode_utf8(word)));
  const std::size_t n = text::length(lower);
  if (n < split_at) return {lower};
  return {text::substr(lower, 0, 3), "##" + text::substr(lower, 3, n)};
}

}  // namespace

Dataset make_dataset(const DatasetSpec& spec) {
  const auto& lex = lexicon();
  if (spec.n_words == 0 || spec.n_words > lex.size()) {
    throw ArgumentError("n_words must lie in [1, " + std::to_string(lex.size()) + "]");
  }
  if (spec.min_pairs_per_word == 0 || spec.min_pairs_per_word > spec.max_pairs_per_word) {
    throw ArgumentError("invalid pairs-per-word range");
  }
  CounterRng rng(spec.seed, "synthetic/dataset");
  std::vector<std::size_t> order(lex.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  order.resize(spec.n_words);
  std::sort(order.begin(), order.end());

  std::vector<TargetWord> words;
  std::vector<SentencePair> pairs;
  for (std::size_t w : order) {
    const Entry& e = lex[w];
    words.push_back({e.word, e.word, "es", false});
    const std::size_t span = spec.max_pairs_per_word - spec.min_pairs_per_word + 1;
    const std::size_t n_pairs = spec.min_pairs_per_word + rng.uniform_below(span);
    for (std::size_t k = 0; k < n_pairs; ++k) {
      SentencePair p;
      p.pair_id = std::string(e.word) + "-" + std::to_string(k + 1);
      p.word_id = e.word;
      p.sense_relationship = rng.coin() ? SenseRelationship::Same : SenseRelationship::Different;
      const auto& first = rng.coin() ? e.sense1 : e.sense2;
      const auto& other = &first == &e.sense1 ? e.sense2 : e.sense1;
      const std::size_t i = rng.uniform_below(first.size());
      const char* cue_a = first[i];
      const char* cue_b;
      if (p.sense_relationship == SenseRelationship::Same) {
        cue_b = first[(i + 1 + rng.uniform_below(first.size() - 1)) % first.size()];
      } else {
        cue_b = other[rng.uniform_below(other.size())];
      }
      const char* prefix = kPrefixes[rng.uniform_below(kPrefixes.size())];
      const std::size_t start = text::length(prefix) + 1 + text::length(e.article) + 1;
      const Span target{start, start + text::length(e.word)};
      p.sentence_a = {sentence_id_for(p.pair_id, 'a'), make_sentence(prefix, e, cue_a), target,
                      cue_a};
      p.sentence_b = {sentence_id_for(p.pair_id, 'b'), make_sentence(prefix, e, cue_b), target,
                      cue_b};
      pairs.push_back(std::move(p));
    }
  }
  return Dataset(spec.dataset_id, std::move(pairs), std::move(words));
}

std::vector<double> latent_relatedness(const Dataset& d, std::uint64_t seed) {
  CounterRng rng(seed, "synthetic/relatedness");
  std::vector<double> out;
  for (const auto& p : d.pairs()) {
    const bool same = p.sense_relationship == SenseRelationship::Same;
    const double mu = same ? 4.2 + 0.5 * rng.normal() : 2.1 + 0.6 * rng.normal();
    out.push_back(std::clamp(mu, 1.0, 5.0));
  }
  return out;
}

std::vector<double> planted_distances(const Dataset& d, std::span<const double> relatedness,
                                      const DumpSpec& spec) {
  const std::size_t n = d.pairs().size();
  if (relatedness.size() != n) throw ArgumentError("one relatedness value per pair is required");
  if (spec.n_layers == 0 || spec.signal_layer > spec.n_layers ||
      (spec.signal_layer == 0 && !spec.includes_layer0)) {
    throw ArgumentError("signal layer outside the model");
  }
  if (!(spec.signal_rho >= -1.0 && spec.signal_rho <= 1.0)) {
    throw ArgumentError("signal_rho must lie in [-1, 1]");
  }
  // Standardised negated relatedness: related pairs sit closer together.
  std::vector<double> z(n, 0.0);
  if (n >= 2) {
    const double m = mean(relatedness);
    KahanSum ss;
    for (double r : relatedness) ss.add((r - m) * (r - m));
    const double sd = std::sqrt(ss.value() / static_cast<double>(n - 1));
    if (sd > 0) {
      for (std::size_t i = 0; i < n; ++i) z[i] = -(relatedness[i] - m) / sd;
    }
  }
  const std::size_t first = spec.includes_layer0 ? 0 : 1;
  const std::size_t n_present = spec.n_layers + 1 - first;
  std::vector<double> out(n * n_present);
  const double rho = spec.signal_rho;
  for (std::size_t li = 0; li < n_present; ++li) {
    const std::size_t layer = first + li;
    CounterRng rng(derive_seed(spec.seed, "synthetic/noise", layer), "layer");
    for (std::size_t i = 0; i < n; ++i) {
      const double e = rng.normal();
      const double signal = layer == spec.signal_layer ? rho * z[i] + std::sqrt(1 - rho * rho) * e : e;
      out[i * n_present + li] = std::clamp(0.35 + 0.1 * signal, 0.01, 1.5);
    }
  }
  return out;
}

EmbeddingDump make_dump(const Dataset& d, std::span<const double> relatedness,
                        const DumpSpec& spec) {
  const auto dist = planted_distances(d, relatedness, spec);
  EmbeddingDump dump;
  dump.header.model_id = spec.model_id;
  dump.header.n_layers = spec.n_layers;
  dump.header.includes_layer0 = spec.includes_layer0;
  dump.header.hidden_dim = spec.hidden_dim;
  const std::size_t dim = spec.hidden_dim;
  const std::size_t n_present = dump.header.layers_present();
  if (dim < 2) throw ArgumentError("hidden_dim must be at least 2");

  for (std::size_t i = 0; i < d.pairs().size(); ++i) {
    const SentencePair& p = d.pairs()[i];
    const TargetWord& w = d.word_of(p);
    SentenceRecord recs[2];
    for (int side = 0; side < 2; ++side) {
      const Sentence& s = side == 0 ? p.sentence_a : p.sentence_b;
      SentenceRecord& r = recs[side];
      r.sentence_id = s.sentence_id;
      r.pair_id = p.pair_id;
      r.side = side == 0 ? Side::A : Side::B;
      r.tokens.push_back("[CLS]");
      const auto words = text::split_words(s.text);
      std::size_t begin = 0, end = 0;
      for (const auto& word : words) {
        const bool is_target = text::equals_ignore_case(word, w.surface_form);
        const auto pieces = word_pieces(word, is_target ? 6 : 9);
        if (is_target) begin = r.tokens.size();
        r.tokens.insert(r.tokens.end(), pieces.begin(), pieces.end());
        if (is_target) end = r.tokens.size();
      }
      r.tokens.push_back("[SEP]");
      r.target_span = {begin, end};
      r.vectors.assign(n_present * r.span_length() * dim, 0.0f);
    }

    for (std::size_t li = 0; li < n_present; ++li) {
      CounterRng rng(derive_seed(spec.seed, "synthetic/vectors", i * 4096 + li), "pair-layer");
      std::vector<double> a(dim), g(dim);
      for (auto& x : a) x = rng.normal();
      for (auto& x : g) x = rng.normal();
      double na = 0;
      for (double x : a) na += x * x;
      na = std::sqrt(na);
      for (auto& x : a) x /= na;
      double proj = 0;
      for (std::size_t k = 0; k < dim; ++k) proj += g[k] * a[k];
      double ng = 0;
      for (std::size_t k = 0; k < dim; ++k) {
        g[k] -= proj * a[k];
        ng += g[k] * g[k];
      }
      ng = std::sqrt(ng);
      const double cos_t = 1.0 - dist[i * n_present + li];
      const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
      const double norm_a = 0.5 + 1.5 * rng.uniform01();
      const double norm_b = 0.5 + 1.5 * rng.uniform01();
      std::vector<double> target[2] = {std::vector<double>(dim), std::vector<double>(dim)};
      for (std::size_t k = 0; k < dim; ++k) {
        target[0][k] = norm_a * a[k];
        target[1][k] = norm_b * (cos_t * a[k] + sin_t * g[k] / ng);
      }
      for (int side = 0; side < 2; ++side) {
        SentenceRecord& r = recs[side];
        const std::size_t len = r.span_length();
        // Subword vectors scatter symmetrically around the target so their
        // mean is the target.
        std::vector<double> delta(dim, 0.0);
        if (len > 1) {
          for (auto& x : delta) x = 0.25 * rng.normal();
        }
        for (std::size_t t = 0; t < len; ++t) {
          const double sign = len == 1 ? 0.0 : (t % 2 == 0 ? 1.0 : -1.0);
          const double weight = (len % 2 == 1 && t == len - 1) ? 0.0 : sign;
          for (std::size_t k = 0; k < dim; ++k) {
            const double v = target[side][k] + weight * delta[k];
            r.vectors[(li * len + t) * dim + k] = static_cast<float>(v) * spec.scale;
          }
        }
      }
    }
    dump.records.push_back(std::move(recs[0]));
    dump.records.push_back(std::move(recs[1]));
  }
  return dump;
}

int simulated_rating(double mu, double noise_sd, std::uint64_t seed, std::uint64_t index) {
  CounterRng rng(derive_seed(seed, "synthetic/rating", index), "rating");
  const double r = std::round(mu + noise_sd * rng.normal());
  return static_cast<int>(std::clamp(r, 1.0, 5.0));
}

}  // namespace ambiprobe::synthetic
