#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ambiprobe/dataset.hpp"
#include "ambiprobe/embedding.hpp"
#include "ambiprobe/probe.hpp"
#include "ambiprobe/qc.hpp"

namespace ambiprobe::report {

/// One expected-layer computation; `error` is set instead of `result` when
/// the statistic is undefined for this input.
struct ExpectedLayerEntry {
  probe::ExpectedLayerTarget target = probe::ExpectedLayerTarget::MeanRelatedness;
  probe::LayerScore score = probe::LayerScore::R2;
  std::optional<probe::ExpectedLayerResult> result;
  std::string error;
};

struct ModelAnalysis {
  probe::PairDistanceTable table;
  probe::LayerProfile profile;
  std::vector<ExpectedLayerEntry> expected;
  std::optional<probe::SenseResiduals> residuals;      // needs means
  std::optional<probe::NestedRegressions> nested;      // needs means
  std::string nested_error;
  std::optional<TokenDiffStats> token_diffs;
};

struct AnalysisOptions {
  std::vector<std::size_t> layers;  // empty selects layers 1..L
  unsigned threads = 1;
  bool expected_layers = true;
};

/// Runs the per-model analyses. `summaries` may be empty, in which case only
/// the sense-relationship analyses run.
ModelAnalysis analyze_model(const EmbeddingDump& dump, const Dataset& d,
                            std::span<const qc::PairSummary> summaries,
                            const AnalysisOptions& options);

std::string distance_table_csv(const probe::PairDistanceTable& t);
std::string layer_profile_csv(std::span<const ModelAnalysis> models);
nlohmann::ordered_json expected_layer_json(std::span<const ModelAnalysis> models);
std::string residuals_csv(std::span<const ModelAnalysis> models, const Dataset& d);
std::string trajectories_csv(std::span<const probe::TrajectoryCurve> curves);
std::string scaling_csv(const probe::ScalingResult& r);
nlohmann::ordered_json to_json(const probe::ScalingResult& r);
nlohmann::ordered_json probe_summary_json(std::span<const ModelAnalysis> models,
                                          const std::vector<double>& agreement = {});
nlohmann::ordered_json to_json(const DatasetStats& s);

/// Two-space indented JSON with a trailing newline.
std::string pretty(const nlohmann::ordered_json& j);

/// `model_id,family` CSV.
std::map<std::string, std::string> load_family_map(const std::string& path);

struct ModelProperties {
  double params = 0.0;
  bool multilingual = false;
};
/// `model_id,params,multilingual` CSV; further columns are ignored.
std::map<std::string, ModelProperties> load_params_map(const std::string& path);

}  // namespace ambiprobe::report
