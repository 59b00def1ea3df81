#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ambiprobe/dataset.hpp"
#include "ambiprobe/embedding.hpp"
#include "ambiprobe/judgments.hpp"

// Seeded synthetic inputs with known ground truth, for fixtures and tests.
namespace ambiprobe::synthetic {

struct DatasetSpec {
  std::string dataset_id = "synthetic";
  std::size_t n_words = 10;  // at most the size of the built-in lexicon
  std::size_t min_pairs_per_word = 3;
  std::size_t max_pairs_per_word = 6;
  std::uint64_t seed = 0;
};

/// Minimal pairs "<prefix> el <word> <cue>" whose cues select one of two
/// senses. Every pair satisfies the dataset invariants.
Dataset make_dataset(const DatasetSpec& spec);

/// Latent mean relatedness per pair: Same near 4.2, Different near 2.1,
/// clamped to [1, 5].
std::vector<double> latent_relatedness(const Dataset& d, std::uint64_t seed);

struct DumpSpec {
  std::string model_id = "synthetic-model";
  std::size_t n_layers = 6;
  bool includes_layer0 = true;
  std::size_t hidden_dim = 16;
  std::size_t signal_layer = 3;
  /// Population correlation between the signal layer's distances and the
  /// negated latent relatedness. Other layers carry independent noise.
  double signal_rho = 0.8;
  /// Multiplies every vector; distances do not depend on it.
  float scale = 1.0f;
  std::uint64_t seed = 0;
};

/// Planted per-pair cosine distances, pairs x layers_present, layer 0 first
/// when present.
std::vector<double> planted_distances(const Dataset& d, std::span<const double> relatedness,
                                      const DumpSpec& spec);

/// Dump whose target vectors realise planted_distances. Some words and cues
/// are split into two subword tokens.
EmbeddingDump make_dump(const Dataset& d, std::span<const double> relatedness,
                        const DumpSpec& spec);

/// Rating an attentive participant gives a pair with latent mean `mu`.
int simulated_rating(double mu, double noise_sd, std::uint64_t seed, std::uint64_t index);

}  // namespace ambiprobe::synthetic
