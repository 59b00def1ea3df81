#include "ambiprobe/experiment.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "ambiprobe/error.hpp"
#include "ambiprobe/rng.hpp"

namespace ambiprobe {

ListAssignment assign_lists(const Dataset& d, std::size_t n_lists,
                            std::uint64_t seed) {
  const std::size_t n_pairs = d.pairs().size();
  if (n_lists == 0 || n_lists > n_pairs) {
    throw ArgumentError("n_lists must be in [1, " + std::to_string(n_pairs) +
                        "], got " + std::to_string(n_lists));
  }

  // Word order within each stratum is shuffled; pairs of one word stay
  // contiguous so the dealer spreads them over consecutive lists.
  std::vector<std::size_t> word_order(d.words().size());
  std::iota(word_order.begin(), word_order.end(), 0);
  CounterRng rng(seed, "assign-lists/word-order");
  rng.shuffle(word_order);
  std::unordered_map<std::string, std::size_t> word_rank;
  for (std::size_t r = 0; r < word_order.size(); ++r) {
    word_rank.emplace(d.words()[word_order[r]].word_id, r);
  }

  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = d.pairs()[a];
    const auto& pb = d.pairs()[b];
    if (pa.sense_relationship != pb.sense_relationship) {
      return pa.sense_relationship == SenseRelationship::Same;
    }
    return word_rank.at(pa.word_id) < word_rank.at(pb.word_id);
  });

  CounterRng offset_rng(seed, "assign-lists/offset");
  const std::size_t offset = offset_rng.uniform_below(n_lists);
  std::vector<std::vector<std::size_t>> members(n_lists);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    members[(offset + i) % n_lists].push_back(order[i]);
  }

  ListAssignment out;
  out.n_lists = n_lists;
  out.seed = seed;
  out.lists.resize(n_lists);
  for (std::size_t l = 0; l < n_lists; ++l) {
    std::sort(members[l].begin(), members[l].end());
    for (std::size_t idx : members[l]) out.lists[l].push_back(d.pairs()[idx].pair_id);
  }
  return out;
}

nlohmann::ordered_json to_json(const ListAssignment& a) {
  nlohmann::ordered_json j;
  j["n_lists"] = a.n_lists;
  j["seed"] = a.seed;
  j["lists"] = a.lists;
  return j;
}

ListAssignment list_assignment_from_json(const nlohmann::json& j) {
  ListAssignment a;
  try {
    a.n_lists = j.at("n_lists").get<std::size_t>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.lists = j.at("lists").get<std::vector<std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed list assignment: ") + e.what());
  }
  if (a.lists.size() != a.n_lists) {
    throw Error("list assignment declares " + std::to_string(a.n_lists) +
                " lists but contains " + std::to_string(a.lists.size()));
  }
  return a;
}

namespace {

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(seed, "session/order");
  rng.shuffle(perm);
  return perm;
}

}  // namespace

SessionPlan build_session(const ListAssignment& assignment,
                          std::size_t list_index, const Dataset& d,
                          std::uint64_t seed) {
  if (list_index >= assignment.lists.size()) {
    throw ArgumentError("list_index " + std::to_string(list_index) +
                        " out of range for " +
                        std::to_string(assignment.lists.size()) + " lists");
  }
  const auto& members = assignment.lists[list_index];
  if (members.empty()) throw ArgumentError("list is empty");

  SessionPlan plan;
  plan.session_id = fmt::format("s-{:016x}", derive_seed(seed, "session/id", 0));
  plan.list_index = list_index;
  plan.seed = seed;

  const auto perm = seeded_permutation(members.size(), seed);
  CounterRng sides(seed, "session/sides");
  std::vector<Trial> trials;
  trials.reserve(members.size() + 1);
  for (std::size_t k : perm) {
    const auto& pair = d.pair(members[k]);
    Trial t;
    t.pair_id = pair.pair_id;
    t.target_word = d.word_of(pair).surface_form;
    t.left_was_sentence_a = sides.coin();
    t.left_text = t.left_was_sentence_a ? pair.sentence_a.text : pair.sentence_b.text;
    t.right_text = t.left_was_sentence_a ? pair.sentence_b.text : pair.sentence_a.text;
    trials.push_back(std::move(t));
  }

  CounterRng catch_rng(seed, "session/catch");
  const auto& source = d.pair(members[catch_rng.uniform_below(members.size())]);
  Trial c;
  c.is_catch = true;
  c.target_word = d.word_of(source).surface_form;
  c.left_text = source.sentence_a.text;
  c.right_text = source.sentence_a.text;
  const std::size_t position = catch_rng.uniform_below(trials.size() + 1);
  trials.insert(trials.begin() + static_cast<std::ptrdiff_t>(position), std::move(c));

  for (std::size_t i = 0; i < trials.size(); ++i) trials[i].trial_index = i;
  plan.trials = std::move(trials);
  return plan;
}

nlohmann::ordered_json to_json(const SessionPlan& plan) {
  nlohmann::ordered_json j;
  j["session_id"] = plan.session_id;
  j["list_index"] = plan.list_index;
  j["seed"] = plan.seed;
  auto& trials = j["trials"] = nlohmann::ordered_json::array();
  for (const auto& t : plan.trials) {
    nlohmann::ordered_json tj;
    tj["trial_index"] = t.trial_index;
    tj["pair_id"] = t.pair_id ? nlohmann::ordered_json(*t.pair_id) : nullptr;
    tj["target_word"] = t.target_word;
    tj["left_text"] = t.left_text;
    tj["right_text"] = t.right_text;
    tj["left_was_sentence_a"] = t.left_was_sentence_a;
    tj["is_catch"] = t.is_catch;
    trials.push_back(std::move(tj));
  }
  return j;
}

Permuter session_permuter(std::uint64_t seed) {
  return [seed](std::size_t n, std::uint64_t sample) {
    return seeded_permutation(n, derive_seed(seed, "uniformity", sample));
  };
}

double permutation_uniformity_check(std::size_t n, std::size_t n_samples,
                                    std::uint64_t seed) {
  return permutation_uniformity_check(n, n_samples, session_permuter(seed));
}

double permutation_uniformity_check(std::size_t n, std::size_t n_samples,
                                    const Permuter& permuter) {
  if (n <= 1 || n_samples == 0) return 0.0;
  std::vector<std::size_t> first(n, 0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto perm = permuter(n, s);
    ++first.at(perm.at(0));
  }
  const double expected = static_cast<double>(n_samples) / static_cast<double>(n);
  double chi2 = 0.0;
  for (std::size_t count : first) {
    const double diff = static_cast<double>(count) - expected;
    chi2 += diff * diff / expected;
  }
  return chi2;
}

}  // namespace ambiprobe
