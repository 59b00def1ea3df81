#include "ambiprobe/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ambiprobe/dataset.hpp"
#include "ambiprobe/embedding.hpp"
#include "ambiprobe/experiment.hpp"
#include "ambiprobe/http_api.hpp"
#include "ambiprobe/judgments.hpp"
#include "ambiprobe/manifest.hpp"
#include "ambiprobe/norming.hpp"
#include "ambiprobe/numeric.hpp"
#include "ambiprobe/probe.hpp"
#include "ambiprobe/qc.hpp"
#include "ambiprobe/report.hpp"

namespace ambiprobe {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Raised after a command has already reported what failed validation.
class ValidationFailed : public Error {
 public:
  using Error::Error;
};

void configure_logging() {
  static const bool done = [] {
    auto logger = spdlog::stderr_color_mt("ambiprobe");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("AMBIPROBE_LOG_LEVEL");
    const std::string level = env ? env : "warn";
    if (level == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (level == "warn") {
      spdlog::set_level(spdlog::level::warn);
    } else if (level == "info") {
      spdlog::set_level(spdlog::level::info);
    } else if (level == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else {
      spdlog::set_level(spdlog::level::warn);
      spdlog::warn("ignoring AMBIPROBE_LOG_LEVEL={}; expected error, warn, info or debug", level);
    }
    return true;
  }();
  (void)done;
}

struct Options {
  std::string dataset;
  std::string lists;
  std::vector<std::string> dumps;
  std::string summaries;
  std::string judgments;
  std::string out;
  std::optional<std::uint64_t> seed;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string layers;
  std::string family_map;
  std::string params_map;
  std::string log;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::size_t n_lists = 10;
  std::size_t min_ratings = qc::kDefaultMinRatings;
  std::string method = "spearman";
  qc::ExclusionConfig exclusion;
  bool no_native_check = false;
};

Dataset read_dataset(const Options& o, OutputDir* dir) {
  if (dir) dir->add_input(o.dataset);
  return load_dataset(o.dataset);
}

std::vector<EmbeddingDump> read_dumps(const Options& o, const Dataset& d, OutputDir& dir) {
  std::vector<EmbeddingDump> dumps;
  std::set<std::string> seen;
  for (const auto& path : o.dumps) {
    dir.add_input(path);
    spdlog::info("loading dump {}", path);
    dumps.push_back(load_dump(path, &d));
    if (!seen.insert(dumps.back().header.model_id).second) {
      throw UsageError("model '" + dumps.back().header.model_id + "' given twice");
    }
  }
  return dumps;
}

std::vector<std::size_t> selected_layers(const Options& o, const DumpHeader& h) {
  if (o.layers.empty()) return probe::default_layers(h);
  try {
    return probe::parse_layer_selection(o.layers, h);
  } catch (const ArgumentError& e) {
    throw UsageError(std::string("--layers: ") + e.what());
  }
}

std::vector<qc::PairSummary> read_summaries(const Options& o, OutputDir& dir) {
  if (o.summaries.empty()) return {};
  dir.add_input(o.summaries);
  return qc::load_pair_summaries(o.summaries, o.min_ratings);
}

std::vector<report::ModelAnalysis> analyze_all(const Options& o, const Dataset& d,
                                               std::span<const EmbeddingDump> dumps,
                                               std::span<const qc::PairSummary> summaries,
                                               bool expected_layers) {
  std::vector<report::ModelAnalysis> out;
  for (const auto& dump : dumps) {
    report::AnalysisOptions a;
    a.layers = selected_layers(o, dump.header);
    a.threads = o.threads;
    a.expected_layers = expected_layers;
    spdlog::info("analysing {} over {} layers", dump.header.model_id, a.layers.size());
    out.push_back(report::analyze_model(dump, d, summaries, a));
  }
  return out;
}

std::vector<probe::LayerProfile> profiles_of(std::span<const report::ModelAnalysis> models) {
  std::vector<probe::LayerProfile> out;
  for (const auto& m : models) out.push_back(m.profile);
  return out;
}

std::optional<probe::ScalingResult> run_scaling(std::span<const report::ModelAnalysis> models,
                                                const std::string& params_path) {
  const auto props = report::load_params_map(params_path);
  std::vector<probe::ScalingModel> rows;
  for (const auto& m : models) {
    const auto it = props.find(m.profile.model_id);
    if (it == props.end()) {
      throw UsageError("--params-map has no row for model '" + m.profile.model_id + "'");
    }
    if (!m.profile.best_relatedness_layer) {
      throw ValidationFailed("model '" + m.profile.model_id + "' has no defined R^2");
    }
    const auto& best = m.profile.layers[m.table.position_of(*m.profile.best_relatedness_layer)];
    rows.push_back({m.profile.model_id, *best.r_squared, it->second.params,
                    it->second.multilingual});
  }
  return probe::scaling_analysis(std::move(rows));
}

std::vector<double> agreement_values(const std::string& judgments_path, OutputDir& dir) {
  dir.add_input(judgments_path);
  const auto log = load_judgment_log(judgments_path);
  return qc::loo_agreement(log.judgments, qc::CorrelationMethod::Spearman).defined_values();
}

// ---- subcommands -----------------------------------------------------------

int cmd_validate(const Options& o, std::ostream& out) {
  std::unique_ptr<OutputDir> dir;
  if (!o.out.empty()) dir = std::make_unique<OutputDir>(o.out, "validate");
  Dataset d;
  try {
    d = read_dataset(o, dir.get());
  } catch (const ParseError& e) {
    throw ValidationFailed(o.dataset + ": " + e.what());
  } catch (const DuplicateError& e) {
    throw ValidationFailed(o.dataset + ": " + e.what());
  }
  const auto stats = dataset_stats(d);
  const auto violations = validate_dataset(d);
  out << "dataset: " << d.dataset_id() << '\n'
      << "pairs: " << stats.n_pairs << '\n'
      << "words: " << stats.n_words << '\n'
      << fmt::format("pairs per word: min {} / max {} / mean {:.2f}\n", stats.pairs_per_word_min,
                     stats.pairs_per_word_max, stats.pairs_per_word_mean)
      << fmt::format("mean words per sentence: {:.2f}\n", stats.mean_words_per_sentence)
      << "same: " << stats.n_same << '\n'
      << "different: " << stats.n_different << '\n'
      << "violations: " << violations.size() << '\n';
  for (const auto& v : violations) out << "  " << v.message << '\n';
  if (dir) {
    ordered_json j;
    j["dataset_id"] = d.dataset_id();
    j["stats"] = report::to_json(stats);
    auto& list = j["violations"] = ordered_json::array();
    for (const auto& v : violations) {
      list.push_back({{"invariant", v.invariant}, {"field", v.field}, {"message", v.message}});
    }
    dir->write("validation.json", report::pretty(j));
    dir->finish();
  }
  return violations.empty() ? kExitOk : kExitValidation;
}

int cmd_assign_lists(const Options& o, std::ostream& out) {
  OutputDir dir(o.out, "assign-lists");
  const Dataset d = read_dataset(o, &dir);
  const std::uint64_t seed = o.seed.value_or(0);
  dir.set_seed(seed);
  ListAssignment a;
  try {
    a = assign_lists(d, o.n_lists, seed);
  } catch (const ArgumentError& e) {
    throw UsageError(std::string("--n-lists: ") + e.what());
  }
  dir.write("lists.json", report::pretty(to_json(a)));
  dir.finish();
  for (std::size_t i = 0; i < a.lists.size(); ++i) {
    out << "list " << i << ": " << a.lists[i].size() << " pairs\n";
  }
  return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& out) {
  std::string log_path = o.log;
  if (log_path.empty()) {
    if (o.out.empty()) throw UsageError("serve needs --log or --out");
    fs::create_directories(o.out);
    log_path = (fs::path(o.out) / "judgments.jsonl").string();
  }
  norming::ServiceConfig cfg;
  cfg.dataset = std::make_shared<const Dataset>(load_dataset(o.dataset));
  {
    std::ifstream in(o.lists, std::ios::binary);
    if (!in) throw Error("cannot open '" + o.lists + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationFailed(o.lists + ": " + e.what());
    }
    cfg.assignment = list_assignment_from_json(j);
  }
  cfg.log_path = log_path;
  cfg.base_seed = o.seed.value_or(0);
  norming::NormingService service(std::move(cfg));

  httplib::Server server;
  server.new_task_queue = [] { return new httplib::ThreadPool(16); };
  norming::mount_routes(server, service);

  // SIGINT/SIGTERM are delivered to a dedicated thread that stops the server.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigset_t old;
  pthread_sigmask(SIG_BLOCK, &set, &old);
  std::thread waiter([&server, set] {
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("signal {} received, stopping", sig);
    server.stop();
  });

  try {
    norming::serve(server, o.host, o.port, [&](int port) {
      out << "listening on http://" << o.host << ":" << port << std::endl;
      spdlog::info("serving dataset '{}' with log '{}'", service.dataset_id(), log_path);
    });
  } catch (...) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    pthread_sigmask(SIG_SETMASK, &old, nullptr);
    throw;
  }
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  pthread_sigmask(SIG_SETMASK, &old, nullptr);
  return kExitOk;
}

int cmd_exclusions(const Options& o, std::ostream& out) {
  OutputDir dir(o.out, "exclusions");
  dir.add_input(o.judgments);
  const auto log = load_judgment_log(o.judgments);
  std::unique_ptr<Dataset> d;
  if (!o.dataset.empty()) d = std::make_unique<Dataset>(read_dataset(o, &dir));
  if (log.participants.empty()) {
    throw ValidationFailed("'" + o.judgments +
                           "' has no participant records; pass the service log, not a bare export");
  }
  qc::ExclusionConfig cfg = o.exclusion;
  cfg.require_native = !o.no_native_check;
  qc::ExclusionReport rep;
  try {
    rep = qc::apply_exclusions(log.judgments, log.participants, cfg);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  const auto retained = qc::retained_judgments(log.judgments, rep);
  const auto summaries = qc::pair_summaries(retained, d.get(), o.min_ratings);
  dir.write("exclusions.json", report::pretty(qc::to_json(rep)));
  dir.write("pair_summaries.csv", qc::pair_summaries_csv(summaries));
  std::string lines;
  for (const auto& j : retained) lines += judgment_line(j) + "\n";
  dir.write("retained_judgments.jsonl", lines);
  dir.finish();
  const auto incomplete = std::count_if(summaries.begin(), summaries.end(),
                                        [](const qc::PairSummary& s) { return !s.complete; });
  out << "participants: " << rep.retained.size() + rep.excluded.size() << '\n'
      << "retained: " << rep.retained.size() << '\n'
      << "excluded: " << rep.excluded.size() << '\n'
      << "pairs below " << o.min_ratings << " ratings: " << incomplete << '\n';
  return kExitOk;
}

int cmd_agreement(const Options& o, std::ostream& out) {
  OutputDir dir(o.out, "agreement");
  dir.add_input(o.judgments);
  const auto log = load_judgment_log(o.judgments);
  qc::CorrelationMethod method;
  if (o.method == "spearman") {
    method = qc::CorrelationMethod::Spearman;
  } else if (o.method == "pearson") {
    method = qc::CorrelationMethod::Pearson;
  } else {
    throw UsageError("--method must be spearman or pearson");
  }
  const auto dist = qc::loo_agreement(log.judgments, method);
  ordered_json j;
  j["method"] = o.method;
  j["loo"] = qc::to_json(dist);
  if (!o.dataset.empty()) {
    const Dataset d = read_dataset(o, &dir);
    j["conditions"] = {
        {"item", qc::to_json(qc::condition_summary(log.judgments, d, qc::ConditionLevel::Item))},
        {"trial", qc::to_json(qc::condition_summary(log.judgments, d, qc::ConditionLevel::Trial))}};
  }
  if (!log.participants.empty()) {
    auto& groups = j["groups"] = ordered_json::object();
    const std::pair<const char*, qc::GroupAttribute> attrs[] = {
        {"nationality", qc::GroupAttribute::Nationality},
        {"gender", qc::GroupAttribute::Gender},
        {"native_language", qc::GroupAttribute::NativeLanguage}};
    for (const auto& [name, attr] : attrs) {
      try {
        groups[name] = qc::to_json(qc::group_correlations(log.judgments, log.participants, attr));
      } catch (const ArgumentError&) {
        // fewer than two groups
      }
    }
  }
  dir.write("agreement.json", report::pretty(j));
  dir.finish();
  const auto values = dist.defined_values();
  out << "annotators: " << dist.per_annotator.size() << " (" << values.size() << " defined)\n";
  if (!values.empty()) {
    out << fmt::format("mean: {:.4f}  min: {:.4f}  max: {:.4f}\n", dist.mean, dist.min, dist.max);
  }
  return kExitOk;
}

int cmd_probe(const Options& o, std::ostream& out) {
  OutputDir dir(o.out, "probe");
  const Dataset d = read_dataset(o, &dir);
  const auto summaries = read_summaries(o, dir);
  const auto dumps = read_dumps(o, d, dir);
  std::vector<double> agreement;
  if (!o.judgments.empty()) agreement = agreement_values(o.judgments, dir);
  const auto models = analyze_all(o, d, dumps, summaries, true);

  std::string distances;
  for (const auto& m : models) {
    const auto csv = report::distance_table_csv(m.table);
    distances += distances.empty() ? csv : csv.substr(csv.find('\n') + 1);
  }
  dir.write("distances.csv", distances);
  dir.write("layer_profile.csv", report::layer_profile_csv(models));
  dir.write("expected_layer.json", report::pretty(report::expected_layer_json(models)));
  if (!summaries.empty()) dir.write("residuals.csv", report::residuals_csv(models, d));
  dir.write("probe_summary.json", report::pretty(report::probe_summary_json(models, agreement)));
  dir.finish();
  for (const auto& m : models) {
    out << m.profile.model_id << ": best sense layer "
        << (m.profile.best_sense_layer ? std::to_string(*m.profile.best_sense_layer) : "-")
        << ", best relatedness layer "
        << (m.profile.best_relatedness_layer ? std::to_string(*m.profile.best_relatedness_layer)
                                             : "-")
        << '\n';
  }
  return kExitOk;
}

int cmd_expected_layer(const Options& o, std::ostream& out) {
  OutputDir dir(o.out, "expected-layer");
  const Dataset d = read_dataset(o, &dir);
  const auto summaries = read_summaries(o, dir);
  const auto dumps = read_dumps(o, d, dir);
  const auto models = analyze_all(o, d, dumps, summaries, true);
  const auto j = report::expected_layer_json(models);
  dir.write("expected_layer.json", report::pretty(j));
  dir.finish();
  for (const auto& e : j) {
    out << e["model_id"].get<std::string>() << " " << e["target"].get<std::string>() << " "
        << e["score"].get<std::string>() << ": "
        << (e["expected_layer"].is_null() ? std::string("undefined")
                                          : fmt::format("{:.4f}", e["expected_layer"].get<double>()))
        << '\n';
  }
  return kExitOk;
}

int cmd_trajectories(const Options& o, std::ostream& out) {
  OutputDir dir(o.out, "trajectories");
  const Dataset d = read_dataset(o, &dir);
  const auto summaries = read_summaries(o, dir);
  dir.add_input(o.family_map);
  const auto families = report::load_family_map(o.family_map);
  const auto dumps = read_dumps(o, d, dir);
  const auto models = analyze_all(o, d, dumps, summaries, false);
  const auto profiles = profiles_of(models);
  for (const auto& p : profiles) {
    if (!families.contains(p.model_id)) {
      throw UsageError("--family-map has no row for model '" + p.model_id + "'");
    }
  }
  const auto curves = probe::depth_ratio_trajectories(profiles, families);
  dir.write("trajectories.csv", report::trajectories_csv(curves));
  dir.finish();
  for (const auto& c : curves) out << c.family << ": " << probe::to_string(c.cls) << '\n';
  return kExitOk;
}

int cmd_scaling(const Options& o, std::ostream& out) {
  OutputDir dir(o.out, "scaling");
  const Dataset d = read_dataset(o, &dir);
  const auto summaries = read_summaries(o, dir);
  dir.add_input(o.params_map);
  const auto dumps = read_dumps(o, d, dir);
  const auto models = analyze_all(o, d, dumps, summaries, false);
  const auto result = run_scaling(models, o.params_map);
  dir.write("scaling.csv", report::scaling_csv(*result));
  dir.write("scaling.json", report::pretty(report::to_json(*result)));
  dir.finish();
  out << fmt::format("slope per decade: {:.4f}", result->slope);
  if (result->slope_se) out << fmt::format(" (SE {:.4f})", *result->slope_se);
  out << '\n';
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  OutputDir dir(o.out, "report");
  const Dataset d = read_dataset(o, &dir);
  const auto summaries = read_summaries(o, dir);
  const auto dumps = read_dumps(o, d, dir);
  std::vector<double> agreement;
  if (!o.judgments.empty()) agreement = agreement_values(o.judgments, dir);
  const auto models = analyze_all(o, d, dumps, summaries, true);

  ordered_json j;
  j["dataset"] = {{"dataset_id", d.dataset_id()}, {"stats", report::to_json(dataset_stats(d))}};
  j["models"] = report::probe_summary_json(models, agreement);
  j["expected_layer"] = report::expected_layer_json(models);

  dir.write("layer_profile.csv", report::layer_profile_csv(models));
  dir.write("expected_layer.json", report::pretty(j["expected_layer"]));
  if (!summaries.empty()) dir.write("residuals.csv", report::residuals_csv(models, d));
  if (!o.family_map.empty()) {
    dir.add_input(o.family_map);
    const auto families = report::load_family_map(o.family_map);
    const auto curves = probe::depth_ratio_trajectories(profiles_of(models), families);
    dir.write("trajectories.csv", report::trajectories_csv(curves));
    auto& t = j["trajectories"] = ordered_json::object();
    for (const auto& c : curves) t[c.family] = probe::to_string(c.cls);
  }
  if (!o.params_map.empty()) {
    dir.add_input(o.params_map);
    if (models.size() >= 3) {
      const auto result = run_scaling(models, o.params_map);
      dir.write("scaling.csv", report::scaling_csv(*result));
      j["scaling"] = report::to_json(*result);
    } else {
      j["scaling"] = {{"error", "scaling needs at least 3 models"}};
    }
  }
  if (!agreement.empty()) {
    j["agreement"] = {{"n", agreement.size()},
                      {"mean", mean(agreement)},
                      {"min", *std::min_element(agreement.begin(), agreement.end())},
                      {"max", *std::max_element(agreement.begin(), agreement.end())}};
  }
  dir.write("report.json", report::pretty(j));
  dir.finish();
  out << "wrote " << dir.manifest().outputs.size() << " files to " << o.out << '\n';
  return kExitOk;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Minimal-pair relatedness norming and layer-wise embedding probes", "ambiprobe"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));
  Options o;

  auto dataset = [&](CLI::App* c, bool required = true) {
    auto* opt = c->add_option("--dataset", o.dataset, "Minimal-pair dataset CSV");
    if (required) opt->required();
    opt->check(CLI::ExistingFile);
  };
  auto out_dir = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output directory")->required();
  };
  auto dumps = [&](CLI::App* c) {
    c->add_option("--dump", o.dumps, "Embedding dump (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--layers", o.layers, "Layer selection: all, default, 1-12, 0,3,6-8");
    c->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  };
  auto summaries = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--summaries", o.summaries, "pair_summaries.csv");
    opt->check(CLI::ExistingFile);
    if (required) opt->required();
    c->add_option("--min-ratings", o.min_ratings, "Ratings needed for a complete pair");
  };
  auto seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "64-bit seed"); };

  auto* validate = app.add_subcommand("validate", "Check a dataset and print its statistics");
  dataset(validate);
  validate->add_option("--out", o.out, "Write validation.json here");

  auto* assign = app.add_subcommand("assign-lists", "Partition pairs into experimental lists");
  dataset(assign);
  out_dir(assign);
  seed(assign);
  assign->add_option("--n-lists", o.n_lists, "Number of lists");

  auto* serve = app.add_subcommand("serve", "Run the norming HTTP service");
  dataset(serve);
  serve->add_option("--lists", o.lists, "lists.json from assign-lists")
      ->required()
      ->check(CLI::ExistingFile);
  serve->add_option("--port", o.port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--log", o.log, "Append-only judgment log");
  serve->add_option("--out", o.out, "Directory for the log when --log is not given");
  seed(serve);

  auto* excl = app.add_subcommand("exclusions", "Apply participant exclusion criteria");
  excl->add_option("--judgments", o.judgments, "Service log (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  dataset(excl, false);
  out_dir(excl);
  excl->add_option("--catch-threshold", o.exclusion.catch_fail_threshold,
                   "Minimum passing catch rating");
  excl->add_option("--time-sd", o.exclusion.time_sd_multiplier, "Completion-time SD multiplier");
  excl->add_option("--min-loo-r2", o.exclusion.min_loo_r2, "Minimum squared LOO Pearson");
  excl->add_flag("--no-native-check", o.no_native_check, "Skip the native-language criterion");
  excl->add_option("--min-ratings", o.min_ratings, "Ratings needed for a complete pair");

  auto* agree = app.add_subcommand("agreement", "Leave-one-annotator-out agreement");
  agree->add_option("--judgments", o.judgments, "Judgment export or service log")
      ->required()
      ->check(CLI::ExistingFile);
  dataset(agree, false);
  out_dir(agree);
  agree->add_option("--method", o.method, "spearman or pearson");

  auto* probe_cmd = app.add_subcommand("probe", "Layer-wise distance analyses");
  dataset(probe_cmd);
  dumps(probe_cmd);
  summaries(probe_cmd, false);
  probe_cmd->add_option("--judgments", o.judgments, "Judgments for the agreement benchmark")
      ->check(CLI::ExistingFile);
  out_dir(probe_cmd);

  auto* expected = app.add_subcommand("expected-layer", "Expected Layer statistics");
  dataset(expected);
  dumps(expected);
  summaries(expected, false);
  out_dir(expected);

  auto* traj = app.add_subcommand("trajectories", "Depth-ratio R^2 trajectories per family");
  dataset(traj);
  dumps(traj);
  summaries(traj, true);
  traj->add_option("--family-map", o.family_map, "CSV model_id,family")
      ->required()
      ->check(CLI::ExistingFile);
  out_dir(traj);

  auto* scaling = app.add_subcommand("scaling", "Best R^2 against model size");
  dataset(scaling);
  dumps(scaling);
  summaries(scaling, true);
  scaling->add_option("--params-map", o.params_map, "CSV model_id,params,multilingual")
      ->required()
      ->check(CLI::ExistingFile);
  out_dir(scaling);

  auto* rep = app.add_subcommand("report", "Run every analysis into one directory");
  dataset(rep);
  dumps(rep);
  summaries(rep, false);
  rep->add_option("--judgments", o.judgments, "Judgments for the agreement benchmark")
      ->check(CLI::ExistingFile);
  rep->add_option("--family-map", o.family_map, "CSV model_id,family")->check(CLI::ExistingFile);
  rep->add_option("--params-map", o.params_map, "CSV model_id,params,multilingual")
      ->check(CLI::ExistingFile);
  out_dir(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << tool_version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "validate") return cmd_validate(o, out);
    if (name == "assign-lists") return cmd_assign_lists(o, out);
    if (name == "serve") return cmd_serve(o, out);
    if (name == "exclusions") return cmd_exclusions(o, out);
    if (name == "agreement") return cmd_agreement(o, out);
    if (name == "probe") return cmd_probe(o, out);
    if (name == "expected-layer") return cmd_expected_layer(o, out);
    if (name == "trajectories") return cmd_trajectories(o, out);
    if (name == "scaling") return cmd_scaling(o, out);
    if (name == "report") return cmd_report(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace ambiprobe
