// Writes the bundled synthetic fixture: a dataset, list assignment, three
// planted-signal embedding dumps, a norming-service log produced by simulated
// participants, the resulting pair summaries and the model maps.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ambiprobe/dataset.hpp"
#include "ambiprobe/embedding.hpp"
#include "ambiprobe/experiment.hpp"
#include "ambiprobe/judgments.hpp"
#include "ambiprobe/norming.hpp"
#include "ambiprobe/qc.hpp"
#include "ambiprobe/rng.hpp"
#include "ambiprobe/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ambiprobe;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error("cannot write " + path.string());
}

enum class Behaviour { Attentive, Random, CatchFail, Slow, NonNative };

struct Model {
  const char* id;
  const char* family;
  std::size_t n_layers;
  std::size_t signal_layer;
  double params;
  bool multilingual;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic fixture", "make_fixture"};
  std::string out_dir = "tests/fixture";
  std::uint64_t seed = 20240611;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Seed");
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    synthetic::DatasetSpec ds;
    ds.dataset_id = "fixture";
    ds.n_words = 12;
    ds.seed = seed;
    const Dataset d = synthetic::make_dataset(ds);
    if (!validate_dataset(d).empty()) throw Error("generated dataset fails validation");
    write_file(dir / "fixture.csv", serialize_dataset(d));
    const auto latent = synthetic::latent_relatedness(d, seed);

    const ListAssignment lists = assign_lists(d, 4, seed);
    write_file(dir / "lists.json", to_json(lists).dump(2) + "\n");

    const Model models[] = {
        {"fixture-base", "bert", 6, 4, 1.1e8, false},
        {"fixture-large", "bert", 12, 9, 3.4e8, false},
        {"fixture-lite", "albert", 4, 2, 1.2e7, true},
        {"fixture-mini", "albert", 3, 2, 5.0e6, true},
    };
    std::string family_map = "model_id,family\n";
    std::string params_map = "model_id,params,multilingual\n";
    for (const auto& m : models) {
      synthetic::DumpSpec spec;
      spec.model_id = m.id;
      spec.n_layers = m.n_layers;
      spec.signal_layer = m.signal_layer;
      spec.seed = derive_seed(seed, m.id, 0);
      const auto dump = synthetic::make_dump(d, latent, spec);
      std::ofstream out(dir / (std::string(m.id) + ".jsonl"), std::ios::binary | std::ios::trunc);
      write_dump(out, dump.header, dump.records);
      family_map += fmt::format("{},{}\n", m.id, m.family);
      params_map += fmt::format("{},{:.0f},{}\n", m.id, m.params, m.multilingual);
    }
    write_file(dir / "family_map.csv", family_map);
    write_file(dir / "params_map.csv", params_map);

    // Simulated participants against the real service, on a fake clock.
    const fs::path log_path = dir / "judgments.jsonl";
    fs::remove(log_path);
    TimestampMs now = 1772445600000;  // 2026-03-02T10:00:00Z
    norming::ServiceConfig cfg;
    cfg.dataset = std::make_shared<const Dataset>(d);
    cfg.assignment = lists;
    cfg.log_path = log_path.string();
    cfg.base_seed = seed;
    cfg.clock = [&now] { return now; };
    norming::NormingService service(cfg);

    std::vector<Behaviour> pool = {Behaviour::Random, Behaviour::CatchFail, Behaviour::Slow,
                                   Behaviour::NonNative};
    pool.insert(pool.end(), 40, Behaviour::Attentive);
    const char* nationalities[] = {"Spain", "México", "Chile"};
    CounterRng rng(seed, "fixture/participants");
    std::uint64_t rating_index = 0;
    for (std::size_t pi = 0; pi < pool.size(); ++pi) {
      const Behaviour b = pool[pi];
      norming::Demographics who;
      who.nationality = nationalities[pi % 3];
      who.gender = rng.coin() ? "female" : "male";
      who.age = 18 + static_cast<int>(rng.uniform_below(40));
      who.native_language = b == Behaviour::NonNative ? "pt" : "es";
      who.consent = true;
      now += 60000;
      const auto created = service.create_session(who);
      while (const auto trial = service.next_trial(created.session_id)) {
        std::int64_t rt = 1500 + static_cast<std::int64_t>(rng.uniform_below(2500));
        if (b == Behaviour::Slow) rt *= 25;
        now += rt;
        int rating;
        if (trial->is_catch) {
          rating = b == Behaviour::CatchFail ? 3 : 5;
        } else if (b == Behaviour::Random) {
          rating = 1 + static_cast<int>(rng.uniform_below(5));
        } else {
          const double mu = latent[*d.pair_index(*trial->pair_id)];
          rating = synthetic::simulated_rating(mu, 0.6, seed, rating_index++);
        }
        service.submit_response(created.session_id, trial->trial_index, rating, rt);
      }
      now += 2000;
      service.complete_session(created.session_id);
    }

    const auto log = load_judgment_log(log_path.string());
    const auto report = qc::apply_exclusions(log.judgments, log.participants, {});
    const auto retained = qc::retained_judgments(log.judgments, report);
    const auto summaries = qc::pair_summaries(retained, &d);
    write_file(dir / "pair_summaries.csv", qc::pair_summaries_csv(summaries));

    std::size_t complete = 0;
    for (const auto& s : summaries) complete += s.complete;
    std::cout << fmt::format("{} pairs, {} participants, {} retained, {}/{} pairs complete\n",
                             d.pairs().size(), log.participants.size(), report.retained.size(),
                             complete, summaries.size());
    for (const auto& [id, reasons] : report.excluded) {
      std::cout << "excluded " << id << ":";
      for (auto r : reasons) std::cout << ' ' << qc::to_string(r);
      std::cout << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
