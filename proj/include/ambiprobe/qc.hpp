#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ambiprobe/dataset.hpp"
#include "ambiprobe/judgments.hpp"

namespace ambiprobe::qc {

struct ExclusionConfig {
  int catch_fail_threshold = 5;     // minimum passing catch rating
  double time_sd_multiplier = 3.0;
  double min_loo_r2 = 0.1;
  bool require_native = true;
  /// Accepted self-reports, compared case-insensitively. A BCP-47 tag whose
  /// primary subtag is listed (e.g. "es-MX") also counts.
  std::vector<std::string> native_languages{"es", "spa", "spanish", "español"};

  /// Throws ArgumentError on non-finite thresholds or min_loo_r2 outside [0, 1].
  void validate() const;
};

enum class ExclusionReason { CatchFail, SlowCompletion, LowAgreement, NonNative };
std::string_view to_string(ExclusionReason r) noexcept;

struct ExclusionReport {
  std::map<std::string, std::set<ExclusionReason>> excluded;
  std::set<std::string> retained;
  /// Per-participant squared LOO Pearson used by the LowAgreement rule;
  /// nullopt when undefined (fewer than 3 shared items or constant ratings).
  std::map<std::string, std::optional<double>> loo_r2;
  double completion_mean_ms = 0.0;
  double completion_sd_ms = 0.0;
};

/// All four criteria are evaluated once against statistics of the full
/// initial pool; reasons accumulate. An undefined LOO correlation counts as
/// LowAgreement. Throws DataIntegrityError for a participant without a catch
/// judgment or completion time, or judgments from unknown participants.
ExclusionReport apply_exclusions(std::span<const Judgment> judgments,
                                 std::span<const Participant> participants,
                                 const ExclusionConfig& cfg);

std::vector<Judgment> retained_judgments(std::span<const Judgment> judgments,
                                         const ExclusionReport& report);

enum class CorrelationMethod { Spearman, Pearson };

struct AgreementDistribution {
  /// Per annotator; nullopt marks an annotator whose correlation is undefined.
  std::map<std::string, std::optional<double>> per_annotator;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;

  std::vector<double> defined_values() const;
};

/// Leave-one-annotator-out agreement on non-catch judgments: each annotator
/// against the mean of all other annotators on the same items.
AgreementDistribution loo_agreement(std::span<const Judgment> judgments,
                                    CorrelationMethod method);

struct PairSummary {
  std::string pair_id;
  std::optional<double> mean;
  std::optional<double> sd;  // n-1 denominator; absent for n < 2
  std::size_t n = 0;
  bool complete = false;     // n >= configured minimum

  bool operator==(const PairSummary&) const = default;
};

inline constexpr std::size_t kDefaultMinRatings = 10;

/// Mean/SD/n per pair over non-catch judgments. With a dataset, every pair is
/// reported in dataset order (unrated pairs flagged incomplete); otherwise
/// pairs are sorted by id.
std::vector<PairSummary> pair_summaries(std::span<const Judgment> judgments,
                                        const Dataset* d = nullptr,
                                        std::size_t min_ratings = kDefaultMinRatings);

std::string pair_summaries_csv(std::span<const PairSummary> summaries);
std::vector<PairSummary> parse_pair_summaries_csv(std::istream& in,
                                                  std::size_t min_ratings = kDefaultMinRatings);
std::vector<PairSummary> load_pair_summaries(const std::string& path,
                                             std::size_t min_ratings = kDefaultMinRatings);

/// Means aligned with `pair_ids`; throws ArgumentError naming the first pair
/// without a mean.
std::vector<double> aligned_means(std::span<const PairSummary> summaries,
                                  std::span<const std::string> pair_ids);

enum class ConditionLevel { Item, Trial };

struct ConditionStats {
  double mean = 0.0;
  std::optional<double> sd;
  std::size_t n = 0;
};

struct ConditionSummary {
  ConditionStats same;
  ConditionStats different;
};

/// Item level pools pair means.
ConditionSummary condition_summary(std::span<const PairSummary> summaries, const Dataset& d);
/// Trial level pools raw non-catch ratings; item level goes through pair_summaries.
ConditionSummary condition_summary(std::span<const Judgment> judgments, const Dataset& d,
                                   ConditionLevel level);

enum class GroupAttribute { Nationality, Gender, NativeLanguage };

struct GroupCorrelations {
  std::vector<std::string> groups;  // sorted
  /// Row-major groups x groups; nullopt when fewer than 3 common items.
  std::vector<std::optional<double>> r;
  std::vector<std::size_t> common_items;

  std::optional<double> at(std::size_t i, std::size_t j) const {
    return r[i * groups.size() + j];
  }
};

/// Pearson r between group-level pair means on pairs rated by both groups.
/// With `only_groups`, other groups are ignored.
GroupCorrelations group_correlations(std::span<const Judgment> judgments,
                                     std::span<const Participant> participants,
                                     GroupAttribute attribute,
                                     const std::vector<std::string>& only_groups = {});

nlohmann::ordered_json to_json(const ExclusionReport& r);
nlohmann::ordered_json to_json(const AgreementDistribution& a);
nlohmann::ordered_json to_json(const ConditionSummary& c);
nlohmann::ordered_json to_json(const GroupCorrelations& g);

}  // namespace ambiprobe::qc
