#include "ambiprobe/probe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "ambiprobe/numeric.hpp"

namespace ambiprobe::probe {

using stats::FitSummary;
using stats::Matrix;

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ArgumentError("cosine_distance: dimension mismatch (" + std::to_string(u.size()) +
                        " vs " + std::to_string(v.size()) + ")");
  }
  KahanSum dot, uu, vv;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot.add(u[i] * v[i]);
    uu.add(u[i] * u[i]);
    vv.add(v[i] * v[i]);
  }
  const double nu = std::sqrt(uu.value());
  const double nv = std::sqrt(vv.value());
  if (!(nu > 1e-12) || !(nv > 1e-12)) {
    throw DegenerateVectorError("cosine_distance: vector norm below 1e-12");
  }
  // sqrt(x * x) == x in IEEE arithmetic, so u == v gives exactly zero.
  const double prod = uu.value() * vv.value();
  const double denom = std::isnormal(prod) ? std::sqrt(prod) : nu * nv;
  return std::clamp(1.0 - dot.value() / denom, 0.0, 2.0);
}

std::vector<double> PairDistanceTable::column(std::size_t layer_pos) const {
  std::vector<double> out(n_pairs());
  for (std::size_t p = 0; p < n_pairs(); ++p) out[p] = at(p, layer_pos);
  return out;
}

std::size_t PairDistanceTable::position_of(std::size_t layer) const {
  const auto it = std::find(layers.begin(), layers.end(), layer);
  if (it == layers.end()) {
    throw ArgumentError("layer " + std::to_string(layer) + " not in distance table");
  }
  return static_cast<std::size_t>(it - layers.begin());
}

std::vector<std::size_t> default_layers(const DumpHeader& header) {
  std::vector<std::size_t> out;
  for (std::size_t l = 1; l <= header.n_layers; ++l) out.push_back(l);
  return out;
}

std::vector<std::size_t> parse_layer_selection(std::string_view spec,
                                               const DumpHeader& header) {
  if (spec.empty() || spec == "default") return default_layers(header);
  std::vector<std::size_t> out;
  if (spec == "all") {
    for (std::size_t l = header.first_layer(); l <= header.n_layers; ++l) out.push_back(l);
    return out;
  }
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ArgumentError("bad layer selection '" + std::string(spec) + "'");
    }
    return v;
  };
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = spec.find(',', pos);
    const auto item = spec.substr(pos, comma == std::string_view::npos ? spec.npos : comma - pos);
    const auto dash = item.find('-');
    std::size_t lo = 0, hi = 0;
    if (dash == std::string_view::npos) {
      lo = hi = number(item);
    } else {
      lo = number(item.substr(0, dash));
      hi = number(item.substr(dash + 1));
    }
    if (lo > hi) throw ArgumentError("bad layer range '" + std::string(item) + "'");
    for (std::size_t l = lo; l <= hi; ++l) {
      if (l < header.first_layer() || l > header.n_layers) {
        throw ArgumentError("layer " + std::to_string(l) + " not present in dump");
      }
      if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

PairDistanceTable pair_distances(std::string model_id, std::size_t n_layers,
                                 std::vector<std::string> pair_ids,
                                 std::span<const std::size_t> layers,
                                 const VectorSource& source, unsigned threads) {
  PairDistanceTable t;
  t.model_id = std::move(model_id);
  t.n_layers = n_layers;
  t.pair_ids = std::move(pair_ids);
  t.layers.assign(layers.begin(), layers.end());
  t.values.assign(t.pair_ids.size() * t.layers.size(), 0.0);
  parallel_for(t.pair_ids.size(), threads, [&](std::size_t p) {
    for (std::size_t li = 0; li < t.layers.size(); ++li) {
      const auto a = source(p, Side::A, t.layers[li]);
      const auto b = source(p, Side::B, t.layers[li]);
      try {
        t.values[p * t.layers.size() + li] = cosine_distance(a, b);
      } catch (const DegenerateVectorError& e) {
        throw DegenerateVectorError("pair '" + t.pair_ids[p] + "' layer " +
                                    std::to_string(t.layers[li]) + ": " + e.what());
      }
    }
  });
  return t;
}

PairDistanceTable pair_distances(const EmbeddingDump& dump, const Dataset& d,
                                 std::span<const std::size_t> layers, unsigned threads) {
  struct Sides {
    const SentenceRecord* a = nullptr;
    const SentenceRecord* b = nullptr;
  };
  std::unordered_map<std::string, Sides> by_pair;
  for (const auto& r : dump.records) {
    auto& s = by_pair[r.pair_id];
    (r.side == Side::A ? s.a : s.b) = &r;
  }
  std::vector<Sides> rows;
  std::vector<std::string> ids;
  std::vector<std::string> missing;
  for (const auto& p : d.pairs()) {
    const auto it = by_pair.find(p.pair_id);
    if (it == by_pair.end() || !it->second.a || !it->second.b) {
      missing.push_back(p.pair_id);
      continue;
    }
    rows.push_back(it->second);
    ids.push_back(p.pair_id);
  }
  if (!missing.empty()) throw CompletenessError(std::move(missing));
  for (std::size_t l : layers) {
    if (l < dump.header.first_layer() || l > dump.header.n_layers) {
      throw ArgumentError("layer " + std::to_string(l) + " not present in dump");
    }
  }
  const VectorSource source = [&](std::size_t p, Side side, std::size_t layer) {
    return target_vector(dump.header, side == Side::A ? *rows[p].a : *rows[p].b, layer);
  };
  return pair_distances(dump.header.model_id, dump.header.n_layers, std::move(ids), layers,
                        source, threads);
}

std::vector<double> same_indicator(const PairDistanceTable& t, const Dataset& d) {
  std::vector<double> out;
  out.reserve(t.n_pairs());
  for (const auto& id : t.pair_ids) {
    out.push_back(d.pair(id).sense_relationship == SenseRelationship::Same ? 1.0 : 0.0);
  }
  return out;
}

namespace {

void require_rows(const PairDistanceTable& t, std::span<const double> v, const char* what) {
  if (v.size() != t.n_pairs()) {
    throw ArgumentError(std::string(what) + " has " + std::to_string(v.size()) +
                        " entries but the table has " + std::to_string(t.n_pairs()) +
                        " pairs");
  }
}

// Logistic fit that scores separated data by its (non-converged) deviance.
FitSummary logistic_or_separated(const Matrix& x, std::span<const double> y) {
  try {
    return stats::logistic_fit(x, y);
  } catch (const stats::SeparationError& e) {
    return e.fit();
  }
}

Matrix intercept_only(std::size_t n) { return Matrix(n, 1, 1.0); }

}  // namespace

SenseLayerResult layer_sense_fit(const PairDistanceTable& t,
                                 std::span<const double> same_labels, unsigned threads) {
  require_rows(t, same_labels, "labels");
  SenseLayerResult out;
  out.per_layer.resize(t.layers.size());
  parallel_for(t.layers.size(), threads, [&](std::size_t li) {
    const auto x = t.column(li);
    const auto design = Matrix::with_intercept({x});
    LayerSenseFit f;
    f.layer = t.layers[li];
    try {
      const auto fit = stats::logistic_fit(design, same_labels);
      f.aic = fit.aic;
      f.converged = fit.converged;
    } catch (const stats::SeparationError& e) {
      f.aic = e.fit().aic;
      f.separated = true;
    }
    out.per_layer[li] = f;
  });
  if (out.per_layer.empty()) throw ArgumentError("distance table has no layers");
  std::size_t best = 0;
  for (std::size_t li = 1; li < out.per_layer.size(); ++li) {
    if (out.per_layer[li].aic < out.per_layer[best].aic) best = li;
  }
  out.best_layer = out.per_layer[best].layer;
  return out;
}

std::vector<LayerRelatedness> layer_relatedness_fit(const PairDistanceTable& t,
                                                    std::span<const double> means,
                                                    unsigned threads) {
  require_rows(t, means, "means");
  std::vector<LayerRelatedness> out(t.layers.size());
  parallel_for(t.layers.size(), threads, [&](std::size_t li) {
    const auto x = t.column(li);
    LayerRelatedness lr;
    lr.layer = t.layers[li];
    try {
      lr.r = stats::pearson(x, means);
      lr.rho = stats::spearman(x, means);
      lr.r_squared = stats::ols_fit(Matrix::with_intercept({x}), means).r_squared;
    } catch (const UndefinedCorrelation&) {
      lr = LayerRelatedness{t.layers[li], {}, {}, {}};
    } catch (const SingularError&) {
      lr = LayerRelatedness{t.layers[li], {}, {}, {}};
    }
    out[li] = lr;
  });
  return out;
}

LayerProfile build_layer_profile(const PairDistanceTable& t,
                                 std::span<const double> same_labels,
                                 std::span<const double> means, unsigned threads) {
  LayerProfile p;
  p.model_id = t.model_id;
  p.n_layers = t.n_layers;
  p.layers.resize(t.layers.size());
  for (std::size_t li = 0; li < t.layers.size(); ++li) p.layers[li].layer = t.layers[li];
  if (!same_labels.empty()) {
    const auto sense = layer_sense_fit(t, same_labels, threads);
    for (std::size_t li = 0; li < t.layers.size(); ++li) {
      p.layers[li].aic_sense = sense.per_layer[li].aic;
    }
    p.best_sense_layer = sense.best_layer;
  }
  if (!means.empty()) {
    const auto rel = layer_relatedness_fit(t, means, threads);
    std::optional<std::size_t> best;
    for (std::size_t li = 0; li < t.layers.size(); ++li) {
      p.layers[li].r = rel[li].r;
      p.layers[li].rho = rel[li].rho;
      p.layers[li].r_squared = rel[li].r_squared;
      if (rel[li].r_squared &&
          (!best || *rel[li].r_squared > *p.layers[*best].r_squared)) {
        best = li;
      }
    }
    if (best) p.best_relatedness_layer = t.layers[*best];
  }
  return p;
}

std::string_view to_string(ExpectedLayerTarget t) noexcept {
  return t == ExpectedLayerTarget::SenseRelationship ? "SenseRelationship"
                                                     : "MeanRelatedness";
}

std::string_view to_string(LayerScore s) noexcept {
  return s == LayerScore::AIC ? "AIC" : "R2";
}

double expected_layer_from_deltas(std::span<const std::size_t> layers,
                                  std::span<const double> deltas) {
  if (layers.size() != deltas.size()) {
    throw ArgumentError("expected_layer: layers and deltas differ in length");
  }
  KahanSum total;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 0.0) || !std::isfinite(deltas[i])) {
      throw ArgumentError("expected_layer: deltas must be finite and non-negative");
    }
    total.add(deltas[i]);
  }
  if (!(total.value() > 0.0)) {
    throw UndefinedExpectationError("expected layer undefined: no layer improves the score");
  }
  // Normalising first keeps a single nonzero delta an exact weight of 1.
  KahanSum weighted;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    weighted.add(static_cast<double>(layers[i]) * (deltas[i] / total.value()));
  }
  return weighted.value();
}

ExpectedLayerResult expected_layer(const PairDistanceTable& t, ExpectedLayerTarget target,
                                   std::span<const double> response, LayerScore score) {
  require_rows(t, response, "response");
  if (t.layers.size() < 2) throw ArgumentError("expected_layer needs at least 2 layers");
  const bool logistic = target == ExpectedLayerTarget::SenseRelationship;

  ExpectedLayerResult out;
  out.target = target;
  out.score = score;
  out.layers = t.layers;

  const std::size_t n = t.n_pairs();
  const FitSummary null_fit = logistic ? logistic_or_separated(intercept_only(n), response)
                                       : stats::ols_fit(intercept_only(n), response);
  auto score_of = [&](const FitSummary& fit) -> double {
    if (score == LayerScore::AIC) return fit.aic;
    if (logistic) return 1.0 - fit.log_likelihood / null_fit.log_likelihood;
    return fit.r_squared.value_or(0.0);
  };

  out.scores.push_back(score_of(null_fit));
  std::vector<std::vector<double>> columns;
  for (std::size_t li = 0; li < t.layers.size(); ++li) {
    columns.push_back(t.column(li));
    std::vector<std::span<const double>> views(columns.begin(), columns.end());
    const auto design = Matrix::with_intercept(views);
    const FitSummary fit =
        logistic ? logistic_or_separated(design, response) : stats::ols_fit(design, response);
    out.scores.push_back(score_of(fit));
  }
  for (double s : out.scores) {
    if (!std::isfinite(s)) {
      throw UndefinedExpectationError("expected layer undefined: non-finite layer score");
    }
  }
  for (std::size_t li = 0; li < t.layers.size(); ++li) {
    const double raw = score == LayerScore::AIC ? out.scores[li] - out.scores[li + 1]
                                                : out.scores[li + 1] - out.scores[li];
    out.deltas.push_back(std::max(0.0, raw));
  }
  out.expected_layer = expected_layer_from_deltas(out.layers, out.deltas);
  return out;
}

std::string_view to_string(TrajectoryClass c) noexcept {
  switch (c) {
    case TrajectoryClass::RiseAndPlateau: return "RiseAndPlateau";
    case TrajectoryClass::RiseAndFall: return "RiseAndFall";
    default: return "Indeterminate";
  }
}

TrajectoryClass classify_trajectory(std::span<const TrajectoryPoint> points) {
  if (points.empty()) return TrajectoryClass::Indeterminate;
  double peak = points.front().mean_r_squared;
  for (const auto& p : points) peak = std::max(peak, p.mean_r_squared);
  if (!(peak > 0.0)) return TrajectoryClass::Indeterminate;
  if (points.back().mean_r_squared < kFallFraction * peak) return TrajectoryClass::RiseAndFall;
  // A curve that never drops is still rising at the last layer; treat it as a plateau.
  const bool monotone = std::adjacent_find(points.begin(), points.end(), [](const auto& a, const auto& b) {
                          return b.mean_r_squared < a.mean_r_squared;
                        }) == points.end();
  if (monotone) return TrajectoryClass::RiseAndPlateau;
  for (const auto& p : points) {
    if (p.mean_r_squared >= kFallFraction * peak) {
      return p.ratio <= kPlateauRatio ? TrajectoryClass::RiseAndPlateau
                                      : TrajectoryClass::Indeterminate;
    }
  }
  return TrajectoryClass::Indeterminate;
}

std::vector<TrajectoryCurve> depth_ratio_trajectories(
    std::span<const LayerProfile> profiles,
    const std::map<std::string, std::string>& family_map) {
  // family -> bin -> accumulated R^2 (profile order, then layer order)
  std::map<std::string, std::map<std::size_t, std::pair<KahanSum, std::size_t>>> bins;
  for (const auto& prof : profiles) {
    const auto fam = family_map.find(prof.model_id);
    if (fam == family_map.end()) {
      throw ArgumentError("model '" + prof.model_id + "' has no family mapping");
    }
    if (prof.n_layers == 0) throw ArgumentError("profile '" + prof.model_id + "' has L = 0");
    auto& family_bins = bins[fam->second];
    for (const auto& ls : prof.layers) {
      if (ls.layer == 0 || !ls.r_squared) continue;
      const std::size_t bin = (ls.layer * kDepthBins + prof.n_layers - 1) / prof.n_layers - 1;
      auto& [sum, count] = family_bins[bin];
      sum.add(*ls.r_squared);
      ++count;
    }
  }
  std::vector<TrajectoryCurve> out;
  for (auto& [family, family_bins] : bins) {
    TrajectoryCurve curve;
    curve.family = family;
    for (auto& [bin, acc] : family_bins) {
      curve.points.push_back({static_cast<double>(bin + 1) / static_cast<double>(kDepthBins),
                              acc.first.value() / static_cast<double>(acc.second)});
    }
    curve.cls = classify_trajectory(curve.points);
    out.push_back(std::move(curve));
  }
  return out;
}

ScalingResult scaling_analysis(std::vector<ScalingModel> models) {
  if (models.size() < 3) {
    throw SampleSizeError("scaling analysis needs at least 3 models, got " +
                          std::to_string(models.size()));
  }
  std::vector<double> log_params, multilingual, best;
  for (const auto& m : models) {
    if (!(m.params > 0.0)) {
      throw ArgumentError("model '" + m.model_id + "' has non-positive parameter count");
    }
    log_params.push_back(std::log10(m.params));
    multilingual.push_back(m.multilingual ? 1.0 : 0.0);
    best.push_back(m.best_r_squared);
  }
  const bool mixed = std::any_of(multilingual.begin(), multilingual.end(),
                                 [&](double v) { return v != multilingual.front(); });
  std::vector<std::span<const double>> cols{log_params};
  if (mixed) cols.emplace_back(multilingual);

  ScalingResult out;
  out.models = std::move(models);
  out.fit = stats::ols_fit(Matrix::with_intercept(cols), best);
  out.intercept = out.fit.coefficients[0];
  out.slope = out.fit.coefficients[1];
  if (!out.fit.standard_errors.empty()) out.slope_se = out.fit.standard_errors[1];
  if (mixed) out.multilingual_coefficient = out.fit.coefficients[2];
  return out;
}

SenseResiduals sense_residuals(const PairDistanceTable& t, std::span<const double> means,
                               std::span<const double> same_labels, std::size_t layer) {
  require_rows(t, means, "means");
  require_rows(t, same_labels, "labels");
  const auto x = t.column(t.position_of(layer));
  const auto fit = stats::ols_fit(Matrix::with_intercept({x}), means);

  SenseResiduals out;
  out.layer = layer;
  out.residuals = stats::residuals_of(fit);
  KahanSum same, diff;
  for (std::size_t i = 0; i < out.residuals.size(); ++i) {
    if (same_labels[i] == 1.0) {
      same.add(out.residuals[i]);
      ++out.n_same;
    } else {
      diff.add(out.residuals[i]);
      ++out.n_different;
    }
  }
  if (out.n_same) out.mean_same = same.value() / static_cast<double>(out.n_same);
  if (out.n_different) {
    out.mean_different = diff.value() / static_cast<double>(out.n_different);
  }
  return out;
}

NestedRegressions nested_item_regressions(std::span<const double> means,
                                          std::span<const double> same_labels,
                                          std::span<const double> distances) {
  if (means.size() != same_labels.size() || means.size() != distances.size()) {
    throw ArgumentError("nested regressions: inputs differ in length");
  }
  const auto sense = stats::ols_fit(Matrix::with_intercept({same_labels}), means);
  const auto dist = stats::ols_fit(Matrix::with_intercept({distances}), means);
  const auto both = stats::ols_fit(Matrix::with_intercept({same_labels, distances}), means);
  if (!sense.r_squared || !dist.r_squared || !both.r_squared) {
    throw ArgumentError("nested regressions: mean relatedness is constant");
  }
  NestedRegressions out;
  out.r2_sense_only = *sense.r_squared;
  out.r2_distance_only = *dist.r_squared;
  out.r2_both = *both.r_squared;
  out.lrt_sense = stats::likelihood_ratio_test(both, dist);
  out.lrt_distance = stats::likelihood_ratio_test(both, sense);
  return out;
}

double benchmark_vs_agreement(double model_rho, std::span<const double> agreement) {
  if (agreement.empty()) throw ArgumentError("agreement distribution is empty");
  std::size_t below = 0;
  for (double v : agreement) below += v < model_rho ? 1 : 0;
  return static_cast<double>(below) / static_cast<double>(agreement.size());
}

}  // namespace ambiprobe::probe
