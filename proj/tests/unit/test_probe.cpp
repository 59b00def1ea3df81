#include <doctest.h>

#include <cmath>
#include <map>

#include "ambiprobe/error.hpp"
#include "ambiprobe/probe.hpp"
#include "ambiprobe/rng.hpp"
#include "ambiprobe/stats.hpp"
#include "ambiprobe/synthetic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ambiprobe;
using namespace ambiprobe::probe;

namespace {

using Col = std::vector<double>;

PairDistanceTable table_from_columns(const std::vector<Col>& cols,
                                     std::vector<std::size_t> layers = {}) {
  PairDistanceTable t;
  t.model_id = "m";
  const std::size_t n = cols.front().size();
  if (layers.empty()) {
    for (std::size_t l = 1; l <= cols.size(); ++l) layers.push_back(l);
  }
  t.layers = layers;
  t.n_layers = layers.back();
  for (std::size_t i = 0; i < n; ++i) t.pair_ids.push_back("p" + std::to_string(i));
  t.values.resize(n * cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < cols.size(); ++l) t.values[i * cols.size() + l] = cols[l][i];
  }
  return t;
}

struct Planted {
  Dataset d;
  std::vector<double> means;
  std::vector<double> labels;
  EmbeddingDump dump;
};

Planted planted(std::uint64_t seed, std::size_t signal_layer = 3, float scale = 1.0f) {
  Planted p{synthetic::make_dataset({"syn", 12, 4, 6, seed}), {}, {}, {}};
  p.means = synthetic::latent_relatedness(p.d, seed);
  synthetic::DumpSpec spec;
  spec.n_layers = 6;
  spec.signal_layer = signal_layer;
  spec.scale = scale;
  spec.seed = seed;
  p.dump = synthetic::make_dump(p.d, p.means, spec);
  for (const auto& pair : p.d.pairs()) {
    p.labels.push_back(pair.sense_relationship == SenseRelationship::Same ? 1.0 : 0.0);
  }
  return p;
}

}  // namespace

TEST_SUITE("probe") {
  TEST_CASE("cosine distance examples") {
    const Col u{1, 2}, v{2, 1};
    CHECK(cosine_distance(u, u) == 0.0);
    CHECK(cosine_distance(Col{1, 0}, Col{0, 1}) == 1.0);
    CHECK(cosine_distance(Col{1, 0}, Col{-1, 0}) == 2.0);
    CHECK(cosine_distance(u, v) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK_THROWS_AS(cosine_distance(Col{0, 0}, v), DegenerateVectorError);
    CHECK_THROWS_AS(cosine_distance(Col{1, 2, 3}, v), ArgumentError);
  }

  TEST_CASE("cosine distance is symmetric, bounded and matches the oracle") {
    CounterRng rng(9, "cos");
    for (int it = 0; it < 500; ++it) {
      const std::size_t d = 1 + rng.uniform_below(32);
      Col a(d), b(d);
      for (std::size_t i = 0; i < d; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
      }
      const double ab = cosine_distance(a, b);
      CHECK(ab == cosine_distance(b, a));
      CHECK(ab >= 0.0);
      CHECK(ab <= 2.0);
      CHECK(ab == doctest::Approx(oracle::cosine_distance(a, b)).epsilon(1e-12).scale(1.0));
      CHECK(cosine_distance(a, a) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    }
  }

  TEST_CASE("layer selection parsing") {
    const DumpHeader h{1, "m", 12, true, 4, "f32le"};
    CHECK(default_layers(h) == std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    CHECK(parse_layer_selection("all", h).size() == 13);
    CHECK(parse_layer_selection("1-12", h) == default_layers(h));
    CHECK(parse_layer_selection("0,3,6-8", h) == std::vector<std::size_t>{0, 3, 6, 7, 8});
    CHECK_THROWS_AS(parse_layer_selection("13", h), ArgumentError);
    CHECK_THROWS_AS(parse_layer_selection("5-3", h), ArgumentError);
    CHECK_THROWS_AS(parse_layer_selection("x", h), ArgumentError);
    const DumpHeader no0{1, "m", 4, false, 4, "f32le"};
    CHECK_THROWS_AS(parse_layer_selection("0", no0), ArgumentError);
  }

  TEST_CASE("identical sides give a row of zeros") {
    const auto d = testing::small_dataset(1, 1);
    const DumpHeader h{1, "m", 2, false, 3, "f32le"};
    const std::vector<float> v{1, 2, 3, -1, 0, 4};
    EmbeddingDump dump{h, {{"p1:a", "p1", Side::A, {"x"}, {0, 1}, v},
                           {"p1:b", "p1", Side::B, {"x"}, {0, 1}, v}}};
    const std::vector<std::size_t> layers{1, 2};
    const auto t = pair_distances(dump, d, layers);
    CHECK(t.values == std::vector<double>{0.0, 0.0});
  }

  TEST_CASE("pair distances on a small dump match a per-element oracle") {
    auto p = planted(1);
    const std::vector<std::size_t> layers{0, 1, 2, 3, 4, 5, 6};
    const auto t = pair_distances(p.dump, p.d, layers);
    REQUIRE(t.n_pairs() == p.d.pairs().size());
    CHECK(t.pair_ids.front() == p.d.pairs().front().pair_id);
    std::map<std::string, const SentenceRecord*> by_id;
    for (const auto& r : p.dump.records) by_id[r.sentence_id] = &r;
    const auto& h = p.dump.header;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& pid = t.pair_ids[i];
      for (std::size_t li = 0; li < layers.size(); ++li) {
        auto avg = [&](const SentenceRecord& r) {
          Col out(h.hidden_dim, 0.0);
          const std::size_t span = r.span_length();
          for (std::size_t tok = 0; tok < span; ++tok) {
            for (std::size_t c = 0; c < h.hidden_dim; ++c) {
              out[c] += r.vectors[(layers[li] * span + tok) * h.hidden_dim + c] / double(span);
            }
          }
          return out;
        };
        const double want = oracle::cosine_distance(avg(*by_id[pid + ":a"]), avg(*by_id[pid + ":b"]));
        CHECK(t.at(i, li) == doctest::Approx(want).epsilon(1e-12).scale(1.0));
      }
    }
    for (double v : t.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 2.0);
    }
  }

  TEST_CASE("distance tables are invariant to positive rescaling") {
    auto base = planted(2);
    const std::vector<std::size_t> layers{1, 2, 3, 4, 5, 6};
    const auto t1 = pair_distances(base.dump, base.d, layers);
    for (float c : {0.25f, 2.0f, 1024.0f}) {
      auto scaled = base.dump;
      for (auto& r : scaled.records) {
        for (auto& v : r.vectors) v *= c;
      }
      const auto t2 = pair_distances(scaled, base.d, layers);
      for (std::size_t i = 0; i < t1.values.size(); ++i) {
        CHECK(std::fabs(t1.values[i] - t2.values[i]) <= 1e-9);
      }
    }
    // arbitrary c > 0 through the double-precision vector source
    CounterRng rng(5, "scale");
    std::vector<Col> vecs(5 * 2 * 3);
    for (auto& v : vecs) {
      v.resize(8);
      for (auto& x : v) x = rng.normal();
    }
    std::vector<std::string> ids{"a", "b", "c", "d", "e"};
    const std::vector<std::size_t> ls{1, 2, 3};
    auto source = [&](double c) {
      return VectorSource([&vecs, c](std::size_t p, Side s, std::size_t l) {
        Col v = vecs[(p * 2 + (s == Side::A ? 0 : 1)) * 3 + (l - 1)];
        for (auto& x : v) x *= c;
        return v;
      });
    };
    const auto ref = pair_distances("m", 3, ids, ls, source(1.0));
    for (int it = 0; it < 50; ++it) {
      const double c = std::exp(10.0 * (rng.uniform01() - 0.5));
      const auto t = pair_distances("m", 3, ids, ls, source(c));
      for (std::size_t i = 0; i < ref.values.size(); ++i) {
        CHECK(std::fabs(ref.values[i] - t.values[i]) <= 1e-9);
      }
    }
  }

  TEST_CASE("tables and profiles are bit identical across thread counts") {
    auto p = planted(3);
    const std::vector<std::size_t> layers{1, 2, 3, 4, 5, 6};
    const auto t1 = pair_distances(p.dump, p.d, layers, 1);
    const auto prof1 = build_layer_profile(t1, p.labels, p.means, 1);
    for (unsigned threads : {2u, 4u, 7u}) {
      const auto t = pair_distances(p.dump, p.d, layers, threads);
      CHECK(t.values == t1.values);
      const auto prof = build_layer_profile(t, p.labels, p.means, threads);
      for (std::size_t i = 0; i < prof.layers.size(); ++i) {
        CHECK(prof.layers[i].aic_sense == prof1.layers[i].aic_sense);
        CHECK(prof.layers[i].r_squared == prof1.layers[i].r_squared);
        CHECK(prof.layers[i].rho == prof1.layers[i].rho);
      }
    }
  }

  TEST_CASE("pair distances surface degenerate vectors with the pair id") {
    const auto d = testing::small_dataset(1, 1);
    const DumpHeader h{1, "m", 1, false, 2, "f32le"};
    EmbeddingDump dump{h, {{"p1:a", "p1", Side::A, {"x"}, {0, 1}, {0, 0}},
                           {"p1:b", "p1", Side::B, {"x"}, {0, 1}, {1, 0}}}};
    const std::vector<std::size_t> layers{1};
    try {
      pair_distances(dump, d, layers);
      FAIL("expected DegenerateVectorError");
    } catch (const DegenerateVectorError& e) {
      CHECK(std::string(e.what()).find("p1") != std::string::npos);
    }
    dump.records.pop_back();
    CHECK_THROWS_AS(pair_distances(dump, d, layers), CompletenessError);
  }

  TEST_CASE("relatedness fit: R^2 equals squared pearson and affine means give R^2 = 1") {
    CounterRng rng(12, "rel");
    const std::size_t n = 40;
    std::vector<Col> cols(4, Col(n));
    Col means(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : cols) c[i] = 0.3 + 0.1 * rng.uniform01();
      means[i] = 5.0 - 8.0 * cols[2][i];
    }
    const auto t = table_from_columns(cols);
    const auto fits = layer_relatedness_fit(t, means);
    for (std::size_t l = 0; l < 4; ++l) {
      const double r = stats::pearson(cols[l], means);
      CHECK(*fits[l].r_squared == doctest::Approx(r * r).epsilon(1e-10).scale(1.0));
      CHECK(*fits[l].r == doctest::Approx(r).epsilon(1e-12));
      CHECK(*fits[l].rho == doctest::Approx(stats::spearman(cols[l], means)));
    }
    CHECK(*fits[2].r_squared == doctest::Approx(1.0));
    const auto prof = build_layer_profile(t, {}, means);
    CHECK(prof.best_relatedness_layer == 3u);
    CHECK_FALSE(prof.best_sense_layer);
  }

  TEST_CASE("random distances show no relatedness signal") {
    CounterRng rng(13, "null");
    const std::size_t n = 812;
    std::vector<Col> cols(3, Col(n));
    Col means(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : cols) c[i] = rng.uniform01();
      means[i] = 1.0 + 4.0 * rng.uniform01();
    }
    for (const auto& f : layer_relatedness_fit(table_from_columns(cols), means)) {
      CHECK(std::fabs(*f.r) < 0.2);
    }
  }

  TEST_CASE("constant distances leave the layer undefined") {
    std::vector<Col> cols{{0.1, 0.2, 0.3, 0.4}, {0.5, 0.5, 0.5, 0.5}};
    const Col means{4, 3, 2, 1};
    const auto fits = layer_relatedness_fit(table_from_columns(cols), means);
    CHECK(fits[0].r_squared);
    CHECK_FALSE(fits[1].r);
    CHECK_FALSE(fits[1].rho);
    CHECK_FALSE(fits[1].r_squared);
  }

  TEST_CASE("sense fit picks the planted separating layer") {
    CounterRng rng(14, "sense");
    const std::size_t n = 80;
    std::vector<Col> cols(5, Col(n));
    Col labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i % 2 ? 1.0 : 0.0;
      for (auto& c : cols) c[i] = 0.5 + 0.1 * rng.normal();
      cols[2][i] = (labels[i] == 1.0 ? 0.2 : 0.5) + 0.1 * rng.normal();
    }
    const auto res = layer_sense_fit(table_from_columns(cols), labels);
    CHECK(res.best_layer == 3);
    REQUIRE(res.per_layer.size() == 5);
    for (const auto& f : res.per_layer) CHECK(f.converged);
  }

  TEST_CASE("sense fit scores separated layers and breaks ties to the earlier layer") {
    std::vector<Col> cols{{0.1, 0.2, 0.8, 0.9}, {0.1, 0.2, 0.8, 0.9}, {0.5, 0.1, 0.4, 0.2}};
    const Col labels{1, 1, 0, 0};
    const auto res = layer_sense_fit(table_from_columns(cols), labels);
    CHECK(res.per_layer[0].separated);
    CHECK(std::isfinite(res.per_layer[0].aic));
    CHECK(res.best_layer == 1);
  }

  TEST_CASE("expected layer from deltas") {
    const std::vector<std::size_t> layers{1, 2, 3, 4};
    CHECK(expected_layer_from_deltas(layers, Col{0, 0, 0.7, 0}) == 3.0);
    CHECK(expected_layer_from_deltas(std::vector<std::size_t>{1, 2}, Col{1, 1}) == 1.5);
    CHECK_THROWS_AS(expected_layer_from_deltas(layers, Col{0, 0, 0, 0}), UndefinedExpectationError);
    CHECK_THROWS_AS(expected_layer_from_deltas(layers, Col{0, -1, 2, 0}), ArgumentError);
  }

  TEST_CASE("cumulative R^2 improvement concentrated at one layer") {
    const Col h1{1, 1, 1, 1, -1, -1, -1, -1}, h2{1, 1, -1, -1, 1, 1, -1, -1},
        h3{1, -1, 1, -1, 1, -1, 1, -1}, h4{1, -1, -1, 1, 1, -1, -1, 1};
    auto shift = [](const Col& h) {
      Col c(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) c[i] = 0.5 + 0.1 * h[i];
      return c;
    };
    Col means(8);
    for (std::size_t i = 0; i < 8; ++i) means[i] = 3.0 + h3[i];
    const auto t = table_from_columns({shift(h1), shift(h2), shift(h3), shift(h4)});
    const auto r = expected_layer(t, ExpectedLayerTarget::MeanRelatedness, means, LayerScore::R2);
    CHECK(r.expected_layer == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.scores.size() == 5);
    CHECK(r.scores[0] == 0.0);
  }

  TEST_CASE("expected layer on a planted dump stays in range for every target and score") {
    auto p = planted(4, 3);
    const std::vector<std::size_t> layers{1, 2, 3, 4, 5, 6};
    const auto t = pair_distances(p.dump, p.d, layers);
    for (auto target : {ExpectedLayerTarget::SenseRelationship, ExpectedLayerTarget::MeanRelatedness}) {
      const auto& response = target == ExpectedLayerTarget::SenseRelationship ? p.labels : p.means;
      for (auto score : {LayerScore::AIC, LayerScore::R2}) {
        const auto r = expected_layer(t, target, response, score);
        CHECK(r.expected_layer >= 1.0);
        CHECK(r.expected_layer <= 6.0);
        CHECK(r.deltas.size() == 6);
        for (double dlt : r.deltas) CHECK(dlt >= 0.0);
        CHECK(r.expected_layer == expected_layer_from_deltas(r.layers, r.deltas));
      }
    }
    // Null model scores: intercept-only OLS has R^2 = 0.
    const auto rel = expected_layer(t, ExpectedLayerTarget::MeanRelatedness, p.means, LayerScore::R2);
    CHECK(rel.scores[0] == 0.0);
    const auto one = table_from_columns({t.column(0)});
    CHECK_THROWS_AS(expected_layer(one, ExpectedLayerTarget::MeanRelatedness, p.means, LayerScore::R2),
                    ArgumentError);
  }

  TEST_CASE("trajectory classification") {
    std::vector<TrajectoryPoint> rising;
    for (int b = 1; b <= 24; ++b) rising.push_back({b / 24.0, 0.01 * b});
    CHECK(classify_trajectory(rising) == TrajectoryClass::RiseAndPlateau);

    std::vector<TrajectoryPoint> falls;
    for (int b = 1; b <= 24; ++b) {
      const double ratio = b / 24.0;
      falls.push_back({ratio, ratio <= 0.5 ? ratio : 0.5 - (ratio - 0.5)});
    }
    CHECK(classify_trajectory(falls) == TrajectoryClass::RiseAndFall);

    std::vector<TrajectoryPoint> late{{0.25, 0.1}, {0.5, 0.2}, {0.75, 0.15}, {1.0, 0.3}};
    CHECK(classify_trajectory(late) == TrajectoryClass::Indeterminate);
    CHECK(classify_trajectory({}) == TrajectoryClass::Indeterminate);
    std::vector<TrajectoryPoint> early{{0.25, 0.5}, {0.5, 0.3}, {0.75, 0.46}, {1.0, 0.47}};
    CHECK(classify_trajectory(early) == TrajectoryClass::RiseAndPlateau);
  }

  TEST_CASE("depth ratio trajectories pool families by depth ratio") {
    auto profile = [](std::string id, std::size_t L, auto f) {
      LayerProfile p;
      p.model_id = id;
      p.n_layers = L;
      for (std::size_t l = 1; l <= L; ++l) {
        p.layers.push_back({l, {}, {}, {}, f(double(l) / double(L))});
      }
      return p;
    };
    const std::vector<LayerProfile> profiles{
        profile("a12", 12, [](double x) { return x; }),
        profile("a24", 24, [](double x) { return x; }),
        profile("b6", 6, [](double x) { return x < 0.5 ? x : 1.0 - x; }),
    };
    const std::map<std::string, std::string> fam{{"a12", "alpha"}, {"a24", "alpha"}, {"b6", "beta"}};
    const auto curves = depth_ratio_trajectories(profiles, fam);
    REQUIRE(curves.size() == 2);
    CHECK(curves[0].family == "alpha");
    CHECK(curves[0].points.size() == 24);
    CHECK(curves[0].points.back().ratio == 1.0);
    CHECK(curves[0].points.back().mean_r_squared == doctest::Approx(1.0));
    CHECK(curves[0].cls == TrajectoryClass::RiseAndPlateau);
    CHECK(curves[1].points.size() == 6);
    CHECK(curves[1].cls == TrajectoryClass::RiseAndFall);
    for (const auto& c : curves) {
      for (std::size_t i = 1; i < c.points.size(); ++i) {
        CHECK(c.points[i].ratio > c.points[i - 1].ratio);
        CHECK(c.points[i].ratio > 0.0);
        CHECK(c.points[i].ratio <= 1.0);
      }
    }
    CHECK_THROWS_AS(depth_ratio_trajectories(profiles, {{"a12", "alpha"}}), ArgumentError);
  }

  TEST_CASE("scaling analysis") {
    std::vector<ScalingModel> planted_models;
    for (int i = 0; i < 8; ++i) {
      const double params = std::pow(10.0, 7.0 + 0.4 * i);
      const bool multi = i % 3 == 0;
      planted_models.push_back({"m" + std::to_string(i),
                                0.05 + 0.1 * std::log10(params) - 0.03 * multi, params, multi});
    }
    const auto r = scaling_analysis(planted_models);
    CHECK(std::fabs(r.slope - 0.1) < 1e-9);
    CHECK(std::fabs(*r.multilingual_coefficient + 0.03) < 1e-9);
    CHECK(std::fabs(r.intercept - 0.05) < 1e-9);

    const std::vector<ScalingModel> flat{{"a", 0.3, 1e8, false}, {"b", 0.3, 1e9, false},
                                         {"c", 0.3, 1e7, false}, {"d", 0.3, 1e8, false}};
    const auto f = scaling_analysis(flat);
    CHECK(f.slope == doctest::Approx(0.0).scale(1.0));
    CHECK_FALSE(f.multilingual_coefficient);

    CHECK_THROWS_AS(scaling_analysis({flat[0], flat[1]}), SampleSizeError);
    CHECK_THROWS_AS(scaling_analysis({{"a", 0.3, 0.0, false}, flat[1], flat[2]}), ArgumentError);
  }

  TEST_CASE("sense residuals") {
    const Col dist{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    Col linear(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) linear[i] = 5.0 - 4.0 * dist[i];
    const Col labels{1, 1, 1, 0, 0, 0};
    const auto t = table_from_columns({dist});
    const auto zero = sense_residuals(t, linear, labels, 1);
    for (double r : zero.residuals) CHECK(r == doctest::Approx(0.0).scale(1.0));

    // compressed distances, bimodal means: Same under-predicted, Different over-predicted
    CounterRng rng(15, "resid");
    const std::size_t n = 60;
    Col d2(n), m2(n), l2(n);
    for (std::size_t i = 0; i < n; ++i) {
      l2[i] = i % 2 ? 1.0 : 0.0;
      m2[i] = (l2[i] == 1.0 ? 4.3 : 2.0) + 0.3 * rng.normal();
      d2[i] = 0.4 - 0.01 * m2[i] + 0.05 * rng.normal();
    }
    const auto res = sense_residuals(table_from_columns({d2}), m2, l2, 1);
    CHECK(res.mean_same > 0.0);
    CHECK(res.mean_different < 0.0);
    CHECK(res.n_same == 30);
    const auto beta = oracle::ols({d2}, m2);
    double same_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double want = m2[i] - beta[0] - beta[1] * d2[i];
      CHECK(res.residuals[i] == doctest::Approx(want).epsilon(1e-9).scale(1.0));
      if (l2[i] == 1.0) same_sum += want;
    }
    CHECK(res.mean_same == doctest::Approx(same_sum / 30).epsilon(1e-9));
  }

  TEST_CASE("nested item regressions") {
    const Col dist{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    Col perfect(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) perfect[i] = 5.0 - 4.0 * dist[i];
    const Col labels{1, 0, 0, 1, 1, 0, 1, 0};
    const auto p = nested_item_regressions(perfect, labels, dist);
    CHECK(p.r2_both == doctest::Approx(p.r2_distance_only));
    CHECK(p.r2_distance_only == doctest::Approx(1.0));

    CounterRng rng(16, "nested");
    const std::size_t n = 120;
    Col m(n), s(n), dd(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = i % 2 ? 1.0 : 0.0;
      dd[i] = 0.3 + 0.1 * rng.normal();
      m[i] = 2.0 + 1.5 * s[i] - 3.0 * dd[i] + 0.4 * rng.normal();
    }
    const auto r = nested_item_regressions(m, s, dd);
    auto r2 = [&](const std::vector<Col>& x) {
      const auto b = oracle::ols(x, m);
      double ssr = 0, sst = 0, mu = 0;
      for (double v : m) mu += v / n;
      for (std::size_t i = 0; i < n; ++i) {
        double fit = b[0];
        for (std::size_t j = 0; j < x.size(); ++j) fit += b[j + 1] * x[j][i];
        ssr += (m[i] - fit) * (m[i] - fit);
        sst += (m[i] - mu) * (m[i] - mu);
      }
      return 1.0 - ssr / sst;
    };
    CHECK(r.r2_sense_only == doctest::Approx(r2({s})).epsilon(1e-6));
    CHECK(r.r2_distance_only == doctest::Approx(r2({dd})).epsilon(1e-6));
    CHECK(r.r2_both == doctest::Approx(r2({s, dd})).epsilon(1e-6));
    CHECK(r.lrt_sense.df == 1);
    CHECK(r.lrt_sense.p_value < 0.001);
    CHECK(r.lrt_distance.p_value < 0.001);
    const double chi = 2.0 * n / 2.0 * std::log((1 - r.r2_distance_only) / (1 - r.r2_both));
    CHECK(r.lrt_sense.chi_square == doctest::Approx(chi).epsilon(1e-9));
  }

  TEST_CASE("benchmark against the agreement distribution") {
    Col values;
    for (int i = 0; i <= 100; ++i) values.push_back(i / 100.0);
    CHECK(benchmark_vs_agreement(0.5, values) == doctest::Approx(0.495).epsilon(0.01 / 0.495));
    CHECK(benchmark_vs_agreement(-1.0, values) == 0.0);
    CHECK(benchmark_vs_agreement(2.0, values) == 1.0);
    CHECK_THROWS_AS(benchmark_vs_agreement(0.5, Col{}), ArgumentError);
  }

  TEST_CASE("planted signal layer is recovered") {
    int hits = 0;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      auto p = planted(seed, 2 + seed % 4);
      const auto layers = default_layers(p.dump.header);
      const auto t = pair_distances(p.dump, p.d, layers);
      const auto prof = build_layer_profile(t, p.labels, p.means);
      hits += prof.best_relatedness_layer == 2 + seed % 4;
    }
    CHECK(hits >= 18);
  }
}
