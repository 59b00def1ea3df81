#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ambiprobe/dataset.hpp"

namespace ambiprobe {

struct ListAssignment {
  std::size_t n_lists = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> lists;  // pair_ids in dataset order

  bool operator==(const ListAssignment&) const = default;
};

/// Stratified round-robin assignment: pairs are ordered by sense relationship,
/// then by word (seeded word order), then dealt to lists from a seeded start
/// offset. Sizes differ by at most one and each stratum is spread evenly.
ListAssignment assign_lists(const Dataset& d, std::size_t n_lists,
                            std::uint64_t seed);

nlohmann::ordered_json to_json(const ListAssignment& a);
ListAssignment list_assignment_from_json(const nlohmann::json& j);

struct Trial {
  std::size_t trial_index = 0;
  std::optional<std::string> pair_id;  // nullopt for the catch trial
  std::string target_word;
  std::string left_text;
  std::string right_text;
  bool left_was_sentence_a = true;
  bool is_catch = false;

  bool operator==(const Trial&) const = default;
};

struct SessionPlan {
  std::string session_id;
  std::size_t list_index = 0;
  std::uint64_t seed = 0;
  std::vector<Trial> trials;

  bool operator==(const SessionPlan&) const = default;
};

/// Deterministic in (assignment, list_index, dataset, seed). Trial order is a
/// seeded uniform permutation, sides are independent fair coins, and one catch
/// trial repeating a list pair's sentence_a is inserted at a uniform position.
SessionPlan build_session(const ListAssignment& assignment,
                          std::size_t list_index, const Dataset& d,
                          std::uint64_t seed);

nlohmann::ordered_json to_json(const SessionPlan& plan);

/// Produces a permutation of [0, n) for a given sample index.
using Permuter =
    std::function<std::vector<std::size_t>(std::size_t n, std::uint64_t sample)>;

/// The permutation generator used by build_session.
Permuter session_permuter(std::uint64_t seed);

/// Pearson chi-square of first-position frequencies against uniform.
double permutation_uniformity_check(std::size_t n, std::size_t n_samples,
                                    std::uint64_t seed);
double permutation_uniformity_check(std::size_t n, std::size_t n_samples,
                                    const Permuter& permuter);

}  // namespace ambiprobe
