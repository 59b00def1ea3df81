#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ambiprobe/dataset.hpp"
#include "ambiprobe/embedding.hpp"
#include "ambiprobe/stats.hpp"

namespace ambiprobe::probe {

/// 1 - cos(u, v), clamped to [0, 2]. Throws DegenerateVectorError when either
/// norm is <= 1e-12.
double cosine_distance(std::span<const double> u, std::span<const double> v);

/// Cosine distances, one row per dataset pair and one column per layer.
struct PairDistanceTable {
  std::string model_id;
  std::size_t n_layers = 0;  // the model's transformer depth L
  std::vector<std::string> pair_ids;
  std::vector<std::size_t> layers;
  std::vector<double> values;  // row-major pairs x layers

  std::size_t n_pairs() const noexcept { return pair_ids.size(); }
  double at(std::size_t pair, std::size_t layer_pos) const {
    return values[pair * layers.size() + layer_pos];
  }
  std::vector<double> column(std::size_t layer_pos) const;
  /// Position of `layer` in `layers`; throws ArgumentError if absent.
  std::size_t position_of(std::size_t layer) const;
};

/// Layers 1..L, the default sweep.
std::vector<std::size_t> default_layers(const DumpHeader& header);
/// Parses "all", "1-12", "0,3,6-8" and checks every index against the header.
std::vector<std::size_t> parse_layer_selection(std::string_view spec,
                                               const DumpHeader& header);

/// Averaged target vector for (pair index, side, layer).
using VectorSource =
    std::function<std::vector<double>(std::size_t pair, Side side, std::size_t layer)>;

PairDistanceTable pair_distances(const EmbeddingDump& dump, const Dataset& d,
                                 std::span<const std::size_t> layers,
                                 unsigned threads = 1);
/// Same computation over an arbitrary vector source; pair order is `pair_ids`.
PairDistanceTable pair_distances(std::string model_id, std::size_t n_layers,
                                 std::vector<std::string> pair_ids,
                                 std::span<const std::size_t> layers,
                                 const VectorSource& source, unsigned threads = 1);

/// 1.0 for Same, 0.0 for Different, aligned with the table rows.
std::vector<double> same_indicator(const PairDistanceTable& t, const Dataset& d);

struct LayerSenseFit {
  std::size_t layer = 0;
  double aic = 0.0;
  bool converged = false;
  bool separated = false;
};

struct SenseLayerResult {
  std::vector<LayerSenseFit> per_layer;
  std::size_t best_layer = 0;  // argmin AIC, earliest on ties
};

/// One univariate logistic fit (intercept + distance) per layer.
SenseLayerResult layer_sense_fit(const PairDistanceTable& t,
                                 std::span<const double> same_labels,
                                 unsigned threads = 1);

struct LayerRelatedness {
  std::size_t layer = 0;
  std::optional<double> r;
  std::optional<double> rho;
  std::optional<double> r_squared;
};

/// Per layer Pearson r, Spearman rho and univariate OLS R^2 between distance
/// and mean relatedness. Constant distances leave the layer's fields empty.
std::vector<LayerRelatedness> layer_relatedness_fit(const PairDistanceTable& t,
                                                    std::span<const double> means,
                                                    unsigned threads = 1);

struct LayerStats {
  std::size_t layer = 0;
  std::optional<double> aic_sense;
  std::optional<double> r;
  std::optional<double> rho;
  std::optional<double> r_squared;
};

struct LayerProfile {
  std::string model_id;
  std::size_t n_layers = 0;
  std::vector<LayerStats> layers;
  std::optional<std::size_t> best_sense_layer;
  std::optional<std::size_t> best_relatedness_layer;  // argmax R^2, earliest on ties
};

/// Combines both sweeps. Either label or mean input may be empty to skip it.
LayerProfile build_layer_profile(const PairDistanceTable& t,
                                 std::span<const double> same_labels,
                                 std::span<const double> means, unsigned threads = 1);

enum class ExpectedLayerTarget { SenseRelationship, MeanRelatedness };
enum class LayerScore { AIC, R2 };

std::string_view to_string(ExpectedLayerTarget t) noexcept;
std::string_view to_string(LayerScore s) noexcept;

struct ExpectedLayerResult {
  ExpectedLayerTarget target = ExpectedLayerTarget::MeanRelatedness;
  LayerScore score = LayerScore::R2;
  std::vector<std::size_t> layers;  // the table's layers, in cumulative order
  std::vector<double> scores;       // s(0) for the null model, then one per layer
  std::vector<double> deltas;       // clamped improvements, one per layer
  double expected_layer = 0.0;
};

/// sum(l * delta_l) / sum(delta_l). Throws UndefinedExpectationError when the
/// deltas sum to zero.
double expected_layer_from_deltas(std::span<const std::size_t> layers,
                                  std::span<const double> deltas);

/// Cumulative regressions: the model at step l uses the distances of the
/// first l table layers. Sense targets use logistic fits (R^2 is McFadden's
/// pseudo-R^2), relatedness targets use OLS. Improvements are positive for a
/// higher R^2 or a lower AIC and negative improvements are clamped to zero.
ExpectedLayerResult expected_layer(const PairDistanceTable& t, ExpectedLayerTarget target,
                                   std::span<const double> response, LayerScore score);

enum class TrajectoryClass { RiseAndPlateau, RiseAndFall, Indeterminate };
std::string_view to_string(TrajectoryClass c) noexcept;

struct TrajectoryPoint {
  double ratio = 0.0;  // upper edge of a 1/24-wide depth bin
  double mean_r_squared = 0.0;
};

struct TrajectoryCurve {
  std::string family;
  std::vector<TrajectoryPoint> points;
  TrajectoryClass cls = TrajectoryClass::Indeterminate;
};

inline constexpr std::size_t kDepthBins = 24;
inline constexpr double kFallFraction = 0.9;
inline constexpr double kPlateauRatio = 0.75;

/// Pools each family's per-layer R^2 by depth ratio l/L. A family is
/// RiseAndFall when its final bin is below 90% of its peak; otherwise
/// RiseAndPlateau when it first reaches 90% of its peak at a ratio <= 0.75;
/// otherwise Indeterminate. Families are returned sorted by name.
std::vector<TrajectoryCurve> depth_ratio_trajectories(
    std::span<const LayerProfile> profiles,
    const std::map<std::string, std::string>& family_map);
TrajectoryClass classify_trajectory(std::span<const TrajectoryPoint> points);

struct ScalingModel {
  std::string model_id;
  double best_r_squared = 0.0;
  double params = 0.0;
  bool multilingual = false;
};

struct ScalingResult {
  std::vector<ScalingModel> models;
  double slope = 0.0;  // per order of magnitude of parameters
  std::optional<double> slope_se;  // absent when the fit has no residual df
  double intercept = 0.0;
  /// Absent when every model has the same multilingual status.
  std::optional<double> multilingual_coefficient;
  stats::FitSummary fit;
};

/// OLS of best R^2 on log10(params) and a multilingual indicator.
ScalingResult scaling_analysis(std::vector<ScalingModel> models);

struct SenseResiduals {
  std::size_t layer = 0;
  std::vector<double> residuals;  // table row order
  double mean_same = 0.0;
  double mean_different = 0.0;
  std::size_t n_same = 0;
  std::size_t n_different = 0;
};

/// Residuals of mean relatedness ~ distance at `layer`, split by condition.
SenseResiduals sense_residuals(const PairDistanceTable& t, std::span<const double> means,
                               std::span<const double> same_labels, std::size_t layer);

struct NestedRegressions {
  double r2_sense_only = 0.0;
  double r2_distance_only = 0.0;
  double r2_both = 0.0;
  stats::LrtResult lrt_sense;     // both vs distance-only
  stats::LrtResult lrt_distance;  // both vs sense-only
};

NestedRegressions nested_item_regressions(std::span<const double> means,
                                          std::span<const double> same_labels,
                                          std::span<const double> distances);

/// Fraction of annotator agreement values strictly below `model_rho`. Pass the
/// model's correlation magnitude; distance correlates negatively with
/// relatedness.
double benchmark_vs_agreement(double model_rho, std::span<const double> agreement);

}  // namespace ambiprobe::probe
