#include "ambiprobe/report.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "ambiprobe/csv.hpp"
#include "ambiprobe/error.hpp"
#include "ambiprobe/numeric.hpp"

namespace ambiprobe::report {

using nlohmann::ordered_json;
using probe::ExpectedLayerTarget;
using probe::LayerScore;

namespace {

ordered_json number(std::optional<double> v) {
  return v && std::isfinite(*v) ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json number(double v) { return number(std::optional<double>(v)); }

template <class T>
ordered_json maybe(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json to_json(const stats::LrtResult& r) {
  ordered_json o;
  o["chi_square"] = number(r.chi_square);
  o["df"] = r.df;
  o["p_value"] = number(r.p_value);
  return o;
}

}  // namespace

ModelAnalysis analyze_model(const EmbeddingDump& dump, const Dataset& d,
                            std::span<const qc::PairSummary> summaries,
                            const AnalysisOptions& options) {
  ModelAnalysis out;
  const auto layers = options.layers.empty() ? probe::default_layers(dump.header) : options.layers;
  out.table = probe::pair_distances(dump, d, layers, options.threads);
  out.token_diffs = token_diff_stats(dump, d);

  const auto labels = probe::same_indicator(out.table, d);
  const bool both_labels = std::set<double>(labels.begin(), labels.end()).size() == 2;
  std::vector<double> means;
  if (!summaries.empty()) means = qc::aligned_means(summaries, out.table.pair_ids);

  out.profile = probe::build_layer_profile(
      out.table, both_labels ? std::span<const double>(labels) : std::span<const double>(), means,
      options.threads);

  if (options.expected_layers) {
    for (auto target : {ExpectedLayerTarget::SenseRelationship, ExpectedLayerTarget::MeanRelatedness}) {
      const bool sense = target == ExpectedLayerTarget::SenseRelationship;
      if (sense ? !both_labels : means.empty()) continue;
      for (auto score : {LayerScore::AIC, LayerScore::R2}) {
        ExpectedLayerEntry e{target, score, std::nullopt, {}};
        try {
          e.result = probe::expected_layer(out.table, target, sense ? labels : means, score);
        } catch (const Error& err) {
          e.error = err.what();
        }
        out.expected.push_back(std::move(e));
      }
    }
  }

  if (!means.empty() && both_labels && out.profile.best_relatedness_layer) {
    const std::size_t best = *out.profile.best_relatedness_layer;
    out.residuals = probe::sense_residuals(out.table, means, labels, best);
    try {
      out.nested = probe::nested_item_regressions(means, labels,
                                                  out.table.column(out.table.position_of(best)));
    } catch (const Error& err) {
      out.nested_error = err.what();
    }
  }
  return out;
}

std::string distance_table_csv(const probe::PairDistanceTable& t) {
  std::string out = "model_id,pair_id,layer,distance\n";
  for (std::size_t i = 0; i < t.n_pairs(); ++i) {
    for (std::size_t l = 0; l < t.layers.size(); ++l) {
      out += csv::format_row({t.model_id, t.pair_ids[i], std::to_string(t.layers[l]),
                              format_real(t.at(i, l))});
    }
  }
  return out;
}

std::string layer_profile_csv(std::span<const ModelAnalysis> models) {
  std::string out = "model_id,layer,aic_sense,r,rho,r2\n";
  for (const auto& m : models) {
    for (const auto& s : m.profile.layers) {
      out += csv::format_row({m.profile.model_id, std::to_string(s.layer),
                              format_real(s.aic_sense), format_real(s.r), format_real(s.rho),
                              format_real(s.r_squared)});
    }
  }
  return out;
}

ordered_json expected_layer_json(std::span<const ModelAnalysis> models) {
  ordered_json out = ordered_json::array();
  for (const auto& m : models) {
    for (const auto& e : m.expected) {
      ordered_json o;
      o["model_id"] = m.table.model_id;
      o["target"] = probe::to_string(e.target);
      o["score"] = probe::to_string(e.score);
      if (e.result) {
        o["layers"] = e.result->layers;
        auto& scores = o["scores"] = ordered_json::array();
        for (double s : e.result->scores) scores.push_back(number(s));
        auto& deltas = o["deltas"] = ordered_json::array();
        for (double s : e.result->deltas) deltas.push_back(number(s));
        o["expected_layer"] = number(e.result->expected_layer);
      } else {
        o["expected_layer"] = nullptr;
        o["error"] = e.error;
      }
      out.push_back(std::move(o));
    }
  }
  return out;
}

std::string residuals_csv(std::span<const ModelAnalysis> models, const Dataset& d) {
  std::string out = "model_id,layer,pair_id,sense_relationship,residual\n";
  for (const auto& m : models) {
    if (!m.residuals) continue;
    for (std::size_t i = 0; i < m.table.n_pairs(); ++i) {
      const auto& id = m.table.pair_ids[i];
      out += csv::format_row({m.table.model_id, std::to_string(m.residuals->layer), id,
                              std::string(to_string(d.pair(id).sense_relationship)),
                              format_real(m.residuals->residuals[i])});
    }
  }
  return out;
}

std::string trajectories_csv(std::span<const probe::TrajectoryCurve> curves) {
  std::string out = "family,ratio,mean_r2,class\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += csv::format_row({c.family, format_real(p.ratio), format_real(p.mean_r_squared),
                              std::string(probe::to_string(c.cls))});
    }
  }
  return out;
}

std::string scaling_csv(const probe::ScalingResult& r) {
  std::string out = "model_id,params,log10_params,best_r2,multilingual\n";
  for (const auto& m : r.models) {
    out += csv::format_row({m.model_id, format_real(m.params), format_real(std::log10(m.params)),
                            format_real(m.best_r_squared), m.multilingual ? "true" : "false"});
  }
  return out;
}

ordered_json to_json(const probe::ScalingResult& r) {
  ordered_json o;
  o["n_models"] = r.models.size();
  o["slope"] = number(r.slope);
  o["slope_se"] = number(r.slope_se);
  o["intercept"] = number(r.intercept);
  o["multilingual_coefficient"] = number(r.multilingual_coefficient);
  o["r_squared"] = number(r.fit.r_squared);
  return o;
}

ordered_json probe_summary_json(std::span<const ModelAnalysis> models,
                                const std::vector<double>& agreement) {
  ordered_json out = ordered_json::array();
  for (const auto& m : models) {
    ordered_json o;
    o["model_id"] = m.table.model_id;
    o["n_layers"] = m.table.n_layers;
    o["n_pairs"] = m.table.n_pairs();
    o["layers"] = m.table.layers;
    o["best_sense_layer"] = maybe(m.profile.best_sense_layer);
    o["best_relatedness_layer"] = maybe(m.profile.best_relatedness_layer);
    if (m.profile.best_relatedness_layer) {
      const auto& best = m.profile.layers[m.table.position_of(*m.profile.best_relatedness_layer)];
      o["best_r2"] = number(best.r_squared);
      o["best_r"] = number(best.r);
      o["best_rho"] = number(best.rho);
      if (!agreement.empty() && best.rho) {
        o["agreement_percentile"] =
            number(probe::benchmark_vs_agreement(std::fabs(*best.rho), agreement));
      }
    }
    if (m.residuals) {
      ordered_json r;
      r["layer"] = m.residuals->layer;
      r["mean_same"] = number(m.residuals->mean_same);
      r["mean_different"] = number(m.residuals->mean_different);
      r["n_same"] = m.residuals->n_same;
      r["n_different"] = m.residuals->n_different;
      o["residuals"] = std::move(r);
    }
    if (m.nested) {
      ordered_json n;
      n["r2_sense_only"] = number(m.nested->r2_sense_only);
      n["r2_distance_only"] = number(m.nested->r2_distance_only);
      n["r2_both"] = number(m.nested->r2_both);
      n["lrt_sense"] = to_json(m.nested->lrt_sense);
      n["lrt_distance"] = to_json(m.nested->lrt_distance);
      o["nested_regressions"] = std::move(n);
    } else if (!m.nested_error.empty()) {
      o["nested_regressions"] = {{"error", m.nested_error}};
    }
    if (m.token_diffs) {
      ordered_json t;
      t["mean_diff"] = number(m.token_diffs->mean_diff);
      t["modal_diff"] = m.token_diffs->modal_diff;
      t["max_diff"] = m.token_diffs->max_diff;
      t["mean_target_tokens"] = number(m.token_diffs->mean_target_tokens);
      o["token_diffs"] = std::move(t);
    }
    out.push_back(std::move(o));
  }
  return out;
}

ordered_json to_json(const DatasetStats& s) {
  ordered_json o;
  o["pairs"] = s.n_pairs;
  o["words"] = s.n_words;
  o["pairs_per_word_min"] = s.pairs_per_word_min;
  o["pairs_per_word_max"] = s.pairs_per_word_max;
  o["pairs_per_word_mean"] = number(s.pairs_per_word_mean);
  o["mean_words_per_sentence"] = number(s.mean_words_per_sentence);
  o["same"] = s.n_same;
  o["different"] = s.n_different;
  return o;
}

std::string pretty(const ordered_json& j) { return j.dump(2) + "\n"; }

namespace {

std::vector<csv::Row> read_table(const std::string& path, std::size_t min_columns,
                                 const csv::Row& expected_prefix) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  csv::Reader reader(in);
  const auto header = reader.next();
  if (!header || header->size() < min_columns ||
      !std::equal(expected_prefix.begin(), expected_prefix.end(), header->begin())) {
    std::string want;
    for (const auto& c : expected_prefix) want += (want.empty() ? "" : ",") + c;
    throw ParseError(1, "'" + path + "' must start with columns " + want);
  }
  std::vector<csv::Row> rows;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;
    if (row->size() < min_columns) {
      throw ParseError(reader.record_number(), "expected at least " +
                                                   std::to_string(min_columns) + " columns");
    }
    rows.push_back(std::move(*row));
  }
  return rows;
}

}  // namespace

std::map<std::string, std::string> load_family_map(const std::string& path) {
  std::map<std::string, std::string> out;
  std::size_t row = 1;
  for (auto& r : read_table(path, 2, {"model_id", "family"})) {
    ++row;
    if (!out.emplace(r[0], r[1]).second) throw DuplicateError(row, r[0]);
  }
  return out;
}

std::map<std::string, ModelProperties> load_params_map(const std::string& path) {
  std::map<std::string, ModelProperties> out;
  std::size_t row = 1;
  for (auto& r : read_table(path, 3, {"model_id", "params", "multilingual"})) {
    ++row;
    ModelProperties p;
    try {
      std::size_t used = 0;
      p.params = std::stod(r[1], &used);
      if (used != r[1].size()) throw std::invalid_argument(r[1]);
    } catch (const std::exception&) {
      throw ParseError(row, "params is not a number: '" + r[1] + "'");
    }
    const auto& m = r[2];
    if (m == "true" || m == "1" || m == "yes") {
      p.multilingual = true;
    } else if (m == "false" || m == "0" || m == "no") {
      p.multilingual = false;
    } else {
      throw ParseError(row, "multilingual must be true/false: '" + m + "'");
    }
    if (!out.emplace(r[0], p).second) throw DuplicateError(row, r[0]);
  }
  return out;
}

}  // namespace ambiprobe::report
