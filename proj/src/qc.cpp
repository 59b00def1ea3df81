#include "ambiprobe/qc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "ambiprobe/csv.hpp"
#include "ambiprobe/error.hpp"
#include "ambiprobe/numeric.hpp"
#include "ambiprobe/stats.hpp"
#include "ambiprobe/text.hpp"

namespace ambiprobe::qc {

using nlohmann::ordered_json;

void ExclusionConfig::validate() const {
  if (!std::isfinite(time_sd_multiplier)) {
    throw ArgumentError("time_sd_multiplier must be finite");
  }
  if (!(min_loo_r2 >= 0.0 && min_loo_r2 <= 1.0)) {
    throw ArgumentError("min_loo_r2 must lie in [0, 1]");
  }
}

std::string_view to_string(ExclusionReason r) noexcept {
  switch (r) {
    case ExclusionReason::CatchFail: return "CatchFail";
    case ExclusionReason::SlowCompletion: return "SlowCompletion";
    case ExclusionReason::LowAgreement: return "LowAgreement";
    default: return "NonNative";
  }
}

namespace {

struct ItemTotals {
  double sum = 0.0;  // integer ratings, so sums are exact
  std::size_t count = 0;
};

// Non-catch ratings aggregated per annotator and per item, both keyed in
// sorted order so downstream reductions do not depend on input order.
struct RatingTable {
  std::map<std::string, std::map<std::string, ItemTotals>> by_annotator;
  std::map<std::string, ItemTotals> by_item;
};

RatingTable tabulate(std::span<const Judgment> judgments) {
  RatingTable t;
  for (const auto& j : judgments) {
    if (j.is_catch || !j.pair_id) continue;
    auto& own = t.by_annotator[j.participant_id][*j.pair_id];
    own.sum += j.rating;
    ++own.count;
    auto& item = t.by_item[*j.pair_id];
    item.sum += j.rating;
    ++item.count;
  }
  return t;
}

std::optional<double> loo_correlation(const RatingTable& t, const std::string& annotator,
                                      CorrelationMethod method) {
  std::vector<double> own, others;
  const auto it = t.by_annotator.find(annotator);
  if (it == t.by_annotator.end()) return std::nullopt;
  for (const auto& [item, mine] : it->second) {
    const auto& all = t.by_item.at(item);
    const std::size_t rest = all.count - mine.count;
    if (rest == 0) continue;
    own.push_back(mine.sum / static_cast<double>(mine.count));
    others.push_back((all.sum - mine.sum) / static_cast<double>(rest));
  }
  if (own.size() < 3) return std::nullopt;
  try {
    return method == CorrelationMethod::Spearman ? stats::spearman(own, others)
                                                 : stats::pearson(own, others);
  } catch (const UndefinedCorrelation&) {
    return std::nullopt;
  }
}

bool is_native(const Participant& p, const ExclusionConfig& cfg) {
  const auto lower = text::encode_utf8(text::to_lower(text::decode_utf8(p.native_language)));
  for (const auto& accepted : cfg.native_languages) {
    const auto want = text::encode_utf8(text::to_lower(text::decode_utf8(accepted)));
    if (lower == want) return true;
    if (lower.size() > want.size() && lower.starts_with(want) && lower[want.size()] == '-') {
      return true;
    }
  }
  return false;
}

}  // namespace

ExclusionReport apply_exclusions(std::span<const Judgment> judgments,
                                 std::span<const Participant> participants,
                                 const ExclusionConfig& cfg) {
  cfg.validate();
  ExclusionReport report;

  std::map<std::string, const Participant*> pool;
  for (const auto& p : participants) {
    if (!pool.emplace(p.participant_id, &p).second) {
      throw DataIntegrityError("participant '" + p.participant_id + "' listed twice");
    }
  }
  std::map<std::string, std::vector<int>> catch_ratings;
  for (const auto& j : judgments) {
    if (!pool.contains(j.participant_id)) {
      throw DataIntegrityError("judgment from unknown participant '" + j.participant_id + "'");
    }
    if (j.is_catch) catch_ratings[j.participant_id].push_back(j.rating);
  }

  std::vector<double> times;
  for (const auto& [id, p] : pool) {
    if (!catch_ratings.contains(id)) {
      throw DataIntegrityError("participant '" + id + "' has no catch trial");
    }
    if (!p->completion_time_ms) {
      throw DataIntegrityError("participant '" + id + "' has no completion time");
    }
    times.push_back(static_cast<double>(*p->completion_time_ms));
  }

  std::optional<double> slow_cutoff;
  if (times.size() >= 2) {
    report.completion_mean_ms = mean(times);
    KahanSum ss;
    for (double t : times) ss.add((t - report.completion_mean_ms) * (t - report.completion_mean_ms));
    report.completion_sd_ms = std::sqrt(ss.value() / static_cast<double>(times.size() - 1));
    slow_cutoff = report.completion_mean_ms + cfg.time_sd_multiplier * report.completion_sd_ms;
  } else if (times.size() == 1) {
    report.completion_mean_ms = times.front();
  }

  const auto table = tabulate(judgments);
  for (const auto& [id, p] : pool) {
    std::set<ExclusionReason> reasons;
    const auto& catches = catch_ratings.at(id);
    if (std::any_of(catches.begin(), catches.end(),
                    [&](int r) { return r < cfg.catch_fail_threshold; })) {
      reasons.insert(ExclusionReason::CatchFail);
    }
    if (slow_cutoff && static_cast<double>(*p->completion_time_ms) > *slow_cutoff) {
      reasons.insert(ExclusionReason::SlowCompletion);
    }
    const auto r = loo_correlation(table, id, CorrelationMethod::Pearson);
    const std::optional<double> r2 = r ? std::optional<double>(*r * *r) : std::nullopt;
    report.loo_r2[id] = r2;
    if (!r2 || *r2 < cfg.min_loo_r2) reasons.insert(ExclusionReason::LowAgreement);
    if (cfg.require_native && !is_native(*p, cfg)) reasons.insert(ExclusionReason::NonNative);

    if (reasons.empty()) {
      report.retained.insert(id);
    } else {
      report.excluded.emplace(id, std::move(reasons));
    }
  }
  return report;
}

std::vector<Judgment> retained_judgments(std::span<const Judgment> judgments,
                                         const ExclusionReport& report) {
  std::vector<Judgment> out;
  for (const auto& j : judgments) {
    if (report.retained.contains(j.participant_id)) out.push_back(j);
  }
  return out;
}

std::vector<double> AgreementDistribution::defined_values() const {
  std::vector<double> out;
  for (const auto& [_, v] : per_annotator) {
    if (v) out.push_back(*v);
  }
  return out;
}

AgreementDistribution loo_agreement(std::span<const Judgment> judgments,
                                    CorrelationMethod method) {
  const auto table = tabulate(judgments);
  AgreementDistribution out;
  for (const auto& [annotator, _] : table.by_annotator) {
    out.per_annotator[annotator] = loo_correlation(table, annotator, method);
  }
  const auto values = out.defined_values();
  if (!values.empty()) {
    out.mean = mean(values);
    out.min = *std::min_element(values.begin(), values.end());
    out.max = *std::max_element(values.begin(), values.end());
  }
  return out;
}

namespace {

ConditionStats describe(std::span<const double> xs) {
  ConditionStats s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = mean(xs);
  if (xs.size() >= 2) {
    KahanSum ss;
    for (double x : xs) ss.add((x - s.mean) * (x - s.mean));
    s.sd = std::sqrt(ss.value() / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

std::vector<PairSummary> pair_summaries(std::span<const Judgment> judgments,
                                        const Dataset* d, std::size_t min_ratings) {
  std::map<std::string, std::vector<double>> ratings;
  for (const auto& j : judgments) {
    if (j.is_catch || !j.pair_id) continue;
    ratings[*j.pair_id].push_back(j.rating);
  }
  auto summarize = [&](const std::string& id) {
    PairSummary s;
    s.pair_id = id;
    const auto it = ratings.find(id);
    if (it != ratings.end()) {
      const auto c = describe(it->second);
      s.n = c.n;
      s.mean = c.mean;
      s.sd = c.sd;
    }
    s.complete = s.n > 0 && s.n >= min_ratings;
    return s;
  };
  std::vector<PairSummary> out;
  if (d) {
    for (const auto& p : d->pairs()) out.push_back(summarize(p.pair_id));
    for (const auto& [id, _] : ratings) {
      if (!d->pair_index(id)) throw DataIntegrityError("judgment for unknown pair '" + id + "'");
    }
  } else {
    for (const auto& [id, _] : ratings) out.push_back(summarize(id));
  }
  return out;
}

std::string pair_summaries_csv(std::span<const PairSummary> summaries) {
  std::string out = "pair_id,mean,sd,n\n";
  for (const auto& s : summaries) {
    out += csv::format_row({s.pair_id, format_real(s.mean), format_real(s.sd),
                            std::to_string(s.n)});
  }
  return out;
}

std::vector<PairSummary> parse_pair_summaries_csv(std::istream& in, std::size_t min_ratings) {
  csv::Reader reader(in);
  const auto header = reader.next();
  if (!header || *header != csv::Row{"pair_id", "mean", "sd", "n"}) {
    throw ParseError(1, "pair summary header must be pair_id,mean,sd,n");
  }
  auto real = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError(reader.record_number(), "not a number: '" + s + "'");
    }
  };
  std::vector<PairSummary> out;
  std::set<std::string> seen;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;
    if (row->size() != 4) throw ParseError(reader.record_number(), "expected 4 columns");
    PairSummary s;
    s.pair_id = (*row)[0];
    if (s.pair_id.empty()) throw ParseError(reader.record_number(), "empty pair_id");
    if (!seen.insert(s.pair_id).second) throw DuplicateError(reader.record_number(), s.pair_id);
    s.mean = real((*row)[1]);
    s.sd = real((*row)[2]);
    const auto n = real((*row)[3]);
    if (!n || *n < 0 || std::floor(*n) != *n) {
      throw ParseError(reader.record_number(), "n must be a non-negative integer");
    }
    s.n = static_cast<std::size_t>(*n);
    s.complete = s.n > 0 && s.n >= min_ratings;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PairSummary> load_pair_summaries(const std::string& path, std::size_t min_ratings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open pair summaries '" + path + "'");
  return parse_pair_summaries_csv(in, min_ratings);
}

std::vector<double> aligned_means(std::span<const PairSummary> summaries,
                                  std::span<const std::string> pair_ids) {
  std::unordered_map<std::string, const PairSummary*> index;
  for (const auto& s : summaries) index.emplace(s.pair_id, &s);
  std::vector<double> out;
  out.reserve(pair_ids.size());
  for (const auto& id : pair_ids) {
    const auto it = index.find(id);
    if (it == index.end() || !it->second->mean) {
      throw ArgumentError("pair '" + id + "' has no mean relatedness");
    }
    out.push_back(*it->second->mean);
  }
  return out;
}

ConditionSummary condition_summary(std::span<const PairSummary> summaries, const Dataset& d) {
  std::vector<double> same, diff;
  for (const auto& s : summaries) {
    if (!s.mean) continue;
    const auto sense = d.pair(s.pair_id).sense_relationship;
    (sense == SenseRelationship::Same ? same : diff).push_back(*s.mean);
  }
  return {describe(same), describe(diff)};
}

ConditionSummary condition_summary(std::span<const Judgment> judgments, const Dataset& d,
                                   ConditionLevel level) {
  if (level == ConditionLevel::Item) {
    const auto summaries = pair_summaries(judgments, &d);
    return condition_summary(summaries, d);
  }
  std::vector<double> same, diff;
  for (const auto& j : judgments) {
    if (j.is_catch || !j.pair_id) continue;
    const auto sense = d.pair(*j.pair_id).sense_relationship;
    (sense == SenseRelationship::Same ? same : diff).push_back(j.rating);
  }
  return {describe(same), describe(diff)};
}

GroupCorrelations group_correlations(std::span<const Judgment> judgments,
                                     std::span<const Participant> participants,
                                     GroupAttribute attribute,
                                     const std::vector<std::string>& only_groups) {
  std::unordered_map<std::string, std::string> group_of;
  for (const auto& p : participants) {
    const std::string& g = attribute == GroupAttribute::Nationality ? p.nationality
                           : attribute == GroupAttribute::Gender    ? p.gender
                                                                    : p.native_language;
    if (!only_groups.empty() &&
        std::find(only_groups.begin(), only_groups.end(), g) == only_groups.end()) {
      continue;
    }
    group_of.emplace(p.participant_id, g);
  }
  // group -> pair -> totals
  std::map<std::string, std::map<std::string, ItemTotals>> totals;
  for (const auto& j : judgments) {
    if (j.is_catch || !j.pair_id) continue;
    const auto it = group_of.find(j.participant_id);
    if (it == group_of.end()) continue;
    auto& t = totals[it->second][*j.pair_id];
    t.sum += j.rating;
    ++t.count;
  }
  if (totals.size() < 2) throw ArgumentError("group correlations need at least 2 groups");

  GroupCorrelations out;
  for (const auto& [g, _] : totals) out.groups.push_back(g);
  const std::size_t k = out.groups.size();
  out.r.assign(k * k, std::nullopt);
  out.common_items.assign(k * k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const auto& gi = totals.at(out.groups[i]);
      const auto& gj = totals.at(out.groups[j]);
      std::vector<double> xi, xj;
      for (const auto& [pair, ti] : gi) {
        const auto tj = gj.find(pair);
        if (tj == gj.end()) continue;
        xi.push_back(ti.sum / static_cast<double>(ti.count));
        xj.push_back(tj->second.sum / static_cast<double>(tj->second.count));
      }
      std::optional<double> r;
      if (i == j) {
        r = 1.0;
      } else {
        try {
          r = stats::pearson(xi, xj);
        } catch (const UndefinedCorrelation&) {
        }
      }
      out.r[i * k + j] = out.r[j * k + i] = r;
      out.common_items[i * k + j] = out.common_items[j * k + i] = xi.size();
    }
  }
  return out;
}

namespace {

ordered_json optional_number(std::optional<double> v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json to_json(const ConditionStats& s) {
  ordered_json o;
  o["mean"] = s.n ? ordered_json(s.mean) : ordered_json(nullptr);
  o["sd"] = optional_number(s.sd);
  o["n"] = s.n;
  return o;
}

}  // namespace

ordered_json to_json(const ExclusionReport& r) {
  ordered_json o;
  o["n_initial"] = r.excluded.size() + r.retained.size();
  o["n_retained"] = r.retained.size();
  o["completion_mean_ms"] = r.completion_mean_ms;
  o["completion_sd_ms"] = r.completion_sd_ms;
  auto& ex = o["excluded"] = ordered_json::object();
  for (const auto& [id, reasons] : r.excluded) {
    auto& list = ex[id] = ordered_json::array();
    for (auto reason : reasons) list.push_back(std::string(to_string(reason)));
  }
  o["retained"] = r.retained;
  auto& loo = o["loo_r2"] = ordered_json::object();
  for (const auto& [id, v] : r.loo_r2) loo[id] = optional_number(v);
  return o;
}

ordered_json to_json(const AgreementDistribution& a) {
  ordered_json o;
  const auto values = a.defined_values();
  o["n_annotators"] = a.per_annotator.size();
  o["n_defined"] = values.size();
  o["mean"] = values.empty() ? ordered_json(nullptr) : ordered_json(a.mean);
  o["min"] = values.empty() ? ordered_json(nullptr) : ordered_json(a.min);
  o["max"] = values.empty() ? ordered_json(nullptr) : ordered_json(a.max);
  auto& per = o["per_annotator"] = ordered_json::object();
  for (const auto& [id, v] : a.per_annotator) per[id] = optional_number(v);
  return o;
}

ordered_json to_json(const ConditionSummary& c) {
  ordered_json o;
  o["Same"] = to_json(c.same);
  o["Different"] = to_json(c.different);
  return o;
}

ordered_json to_json(const GroupCorrelations& g) {
  ordered_json o;
  o["groups"] = g.groups;
  auto& m = o["r"] = ordered_json::array();
  auto& c = o["common_items"] = ordered_json::array();
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    ordered_json row = ordered_json::array();
    ordered_json crow = ordered_json::array();
    for (std::size_t j = 0; j < g.groups.size(); ++j) {
      row.push_back(optional_number(g.at(i, j)));
      crow.push_back(g.common_items[i * g.groups.size() + j]);
    }
    m.push_back(std::move(row));
    c.push_back(std::move(crow));
  }
  return o;
}

}  // namespace ambiprobe::qc
