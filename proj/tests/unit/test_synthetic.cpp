#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "ambiprobe/probe.hpp"
#include "ambiprobe/stats.hpp"
#include "ambiprobe/synthetic.hpp"

using namespace ambiprobe;

TEST_SUITE("synthetic") {
  TEST_CASE("generated datasets satisfy every invariant") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      synthetic::DatasetSpec spec;
      spec.seed = seed;
      const auto d = synthetic::make_dataset(spec);
      CHECK(validate_dataset(d).empty());
      const auto s = dataset_stats(d);
      CHECK(s.n_words == spec.n_words);
      CHECK(s.pairs_per_word_min >= spec.min_pairs_per_word);
      CHECK(s.pairs_per_word_max <= spec.max_pairs_per_word);
      const auto csv = serialize_dataset(d);
      std::istringstream in(csv);
      CHECK(serialize_dataset(parse_dataset(in, "again")) == csv);
    }
  }

  TEST_CASE("same seed, same dataset") {
    synthetic::DatasetSpec spec;
    spec.seed = 5;
    CHECK(serialize_dataset(synthetic::make_dataset(spec)) ==
          serialize_dataset(synthetic::make_dataset(spec)));
  }

  TEST_CASE("latent relatedness separates the conditions") {
    synthetic::DatasetSpec spec;
    spec.n_words = 10;
    spec.seed = 2;
    const auto d = synthetic::make_dataset(spec);
    const auto mu = synthetic::latent_relatedness(d, 3);
    REQUIRE(mu.size() == d.pairs().size());
    double same = 0, diff = 0;
    std::size_t ns = 0, nd = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      CHECK(mu[i] >= 1.0);
      CHECK(mu[i] <= 5.0);
      if (d.pairs()[i].sense_relationship == SenseRelationship::Same) {
        same += mu[i];
        ++ns;
      } else {
        diff += mu[i];
        ++nd;
      }
    }
    CHECK(same / ns > diff / nd + 1.0);
  }

  TEST_CASE("dumps realise the planted distances") {
    synthetic::DatasetSpec ds;
    ds.seed = 9;
    const auto d = synthetic::make_dataset(ds);
    const auto mu = synthetic::latent_relatedness(d, 9);
    synthetic::DumpSpec spec;
    spec.seed = 4;
    const auto planted = synthetic::planted_distances(d, mu, spec);
    const auto dump = synthetic::make_dump(d, mu, spec);

    // Survives a write/read cycle with dataset checks on.
    std::ostringstream out;
    write_dump(out, dump.header, dump.records);
    std::istringstream in(out.str());
    const auto back = read_dump(in, &d);
    CHECK(back.records.size() == 2 * d.pairs().size());

    std::vector<std::size_t> layers(spec.n_layers + 1);
    std::iota(layers.begin(), layers.end(), 0);
    const auto table = probe::pair_distances(back, d, layers);
    REQUIRE(table.values.size() == planted.size());
    for (std::size_t i = 0; i < planted.size(); ++i) {
      CHECK(table.values[i] == doctest::Approx(planted[i]).epsilon(1e-5));
    }

    // The signal layer tracks relatedness far better than a noise layer.
    const auto signal = table.column(spec.signal_layer);
    const auto noise = table.column(1);
    const double r_signal = stats::pearson(signal, mu);
    CHECK(r_signal < -0.5);
    CHECK(std::abs(stats::pearson(noise, mu)) < std::abs(r_signal));
  }

  TEST_CASE("scale does not move distances") {
    synthetic::DatasetSpec ds;
    ds.seed = 1;
    const auto d = synthetic::make_dataset(ds);
    const auto mu = synthetic::latent_relatedness(d, 1);
    synthetic::DumpSpec a, b;
    b.scale = 8.0f;
    const auto da = synthetic::make_dump(d, mu, a);
    const auto layers = probe::default_layers(da.header);
    const auto ta = probe::pair_distances(da, d, layers);
    const auto tb = probe::pair_distances(synthetic::make_dump(d, mu, b), d, layers);
    CHECK(ta.values == tb.values);
  }

  TEST_CASE("simulated ratings stay on the scale and are seeded") {
    for (std::uint64_t i = 0; i < 200; ++i) {
      const int r = synthetic::simulated_rating(3.3, 1.0, 7, i);
      CHECK(r >= 1);
      CHECK(r <= 5);
      CHECK(r == synthetic::simulated_rating(3.3, 1.0, 7, i));
    }
    CHECK(synthetic::simulated_rating(5.0, 0.0, 1, 0) == 5);
    CHECK(synthetic::simulated_rating(1.0, 0.0, 1, 0) == 1);
  }
}
