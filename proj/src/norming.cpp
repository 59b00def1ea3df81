#include "ambiprobe/norming.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ambiprobe/rng.hpp"

namespace ambiprobe::norming {

using nlohmann::json;
using nlohmann::ordered_json;

TimestampMs system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

struct NormingService::Session {
  SessionPlan plan;
  Participant participant;
  mutable std::mutex mu;
  std::size_t answered = 0;
  TimestampMs last_received_at = 0;
  bool sealed = false;
};

// Append-only file with a durable write per record.
struct NormingService::Log {
  int fd = -1;
  std::string path;

  explicit Log(std::string p) : path(std::move(p)) {
    fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) {
      throw Error("cannot open judgment log '" + path + "': " + std::strerror(errno));
    }
  }
  ~Log() {
    if (fd >= 0) ::close(fd);
  }

  void append(const std::string& line) {
    std::string buf = line;
    buf.push_back('\n');
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      const ssize_t n = ::write(fd, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error("judgment log write failed: " + std::string(std::strerror(errno)));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fdatasync(fd) != 0) {
      throw Error("judgment log sync failed: " + std::string(std::strerror(errno)));
    }
  }
};

namespace {

std::string hex_id(std::string_view prefix, std::uint64_t x) {
  return fmt::format("{}{:016x}", prefix, x);
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

NormingService::NormingService(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.dataset) throw ArgumentError("norming service needs a dataset");
  if (config_.assignment.n_lists == 0 ||
      config_.assignment.lists.size() != config_.assignment.n_lists) {
    throw ArgumentError("norming service needs a non-empty list assignment");
  }
  for (const auto& list : config_.assignment.lists) {
    for (const auto& id : list) {
      if (!config_.dataset->pair_index(id)) {
        throw ArgumentError("list assignment names unknown pair '" + id + "'");
      }
    }
  }
  if (!config_.clock) config_.clock = system_clock_ms;
  subscriptions_.assign(config_.assignment.n_lists, 0);
  replay();
  log_ = std::make_unique<Log>(config_.log_path);
}

NormingService::~NormingService() = default;

void NormingService::replay() {
  std::string content;
  {
    std::ifstream in(config_.log_path, std::ios::binary);
    if (!in) return;
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }
  const auto last_newline = content.rfind('\n');
  const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
  if (keep < content.size()) {
    spdlog::warn("dropping torn final record ({} bytes) from '{}'", content.size() - keep,
                 config_.log_path);
    if (::truncate(config_.log_path.c_str(), static_cast<off_t>(keep)) != 0) {
      throw Error("cannot truncate judgment log '" + config_.log_path +
                  "': " + std::strerror(errno));
    }
    content.resize(keep);
  }

  std::istringstream lines(content);
  std::string line;
  std::size_t line_no = 0;
  std::size_t n_judgments = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      const json o = json::parse(line);
      const std::string kind = o.at("record").get<std::string>();
      if (kind == "session") {
        apply_session_record(line);
      } else if (kind == "judgment") {
        Judgment j = judgment_from_json(o);
        Session& s = find(j.session_id);
        const auto& plan = s.plan;
        if (j.rating < 1 || j.rating > 5) throw DataIntegrityError("rating out of range");
        if (s.sealed || j.trial_index != s.answered || j.trial_index >= plan.trials.size()) {
          throw DataIntegrityError("judgment out of sequence");
        }
        const Trial& t = plan.trials[j.trial_index];
        if (t.pair_id != j.pair_id || t.is_catch != j.is_catch ||
            t.left_was_sentence_a != j.left_was_sentence_a) {
          throw DataIntegrityError("judgment disagrees with the rebuilt session plan");
        }
        ++s.answered;
        s.last_received_at = j.received_at;
        last_stamp_ = std::max(last_stamp_, j.received_at);
        judgments_.push_back(std::move(j));
        ++n_judgments;
      } else if (kind == "complete") {
        Session& s = find(o.at("session_id").get<std::string>());
        if (s.sealed || s.answered != s.plan.trials.size()) {
          throw DataIntegrityError("completion record for an unfinished session");
        }
        s.sealed = true;
        s.participant.completion_time_ms = o.at("completion_time_ms").get<std::int64_t>();
      } else {
        throw DataIntegrityError("unknown record '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw DataIntegrityError(fmt::format("judgment log '{}' line {}: {}", config_.log_path,
                                           line_no, e.what()));
    } catch (const Error& e) {
      throw DataIntegrityError(fmt::format("judgment log '{}' line {}: {}", config_.log_path,
                                           line_no, e.what()));
    }
  }
  spdlog::info("replayed {} sessions and {} judgments from '{}'", sessions_.size(), n_judgments,
               config_.log_path);
}

void NormingService::apply_session_record(const std::string& line) {
  const json o = json::parse(line);
  const auto dataset_id = o.at("dataset_id").get<std::string>();
  if (dataset_id != config_.dataset->dataset_id()) {
    throw DataIntegrityError("log belongs to dataset '" + dataset_id + "'");
  }
  const auto list_index = o.at("list_index").get<std::size_t>();
  const auto seed = o.at("seed").get<std::uint64_t>();
  const auto counter = o.at("counter").get<std::uint64_t>();
  if (list_index >= subscriptions_.size()) throw DataIntegrityError("list index out of range");
  auto s = std::make_unique<Session>();
  s->plan = build_session(config_.assignment, list_index, *config_.dataset, seed);
  if (s->plan.session_id != o.at("session_id").get<std::string>()) {
    throw DataIntegrityError("session plan does not rebuild under the current configuration");
  }
  s->participant = participant_from_json(o.at("participant"));
  last_stamp_ = std::max(last_stamp_, s->participant.consent_timestamp);
  ++subscriptions_[list_index];
  session_counter_ = std::max(session_counter_, counter + 1);
  const std::string id = s->plan.session_id;
  if (!sessions_.emplace(id, std::move(s)).second) {
    throw DataIntegrityError("session '" + id + "' created twice");
  }
}

NormingService::Session& NormingService::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
  return *it->second;
}

TimestampMs NormingService::stamp() {
  last_stamp_ = std::max(last_stamp_, config_.clock());
  return last_stamp_;
}

SessionCreated NormingService::create_session(const Demographics& who) {
  if (who.nationality.empty()) throw ValidationError("nationality is required");
  if (who.gender.empty()) throw ValidationError("gender is required");
  if (who.native_language.empty()) throw ValidationError("native_language is required");
  if (who.age < 18) throw ValidationError("participants must be at least 18");
  if (!who.consent) throw ValidationError("consent is required before any trial");

  std::lock_guard log_lock(log_mu_);
  const auto least = std::min_element(subscriptions_.begin(), subscriptions_.end());
  const auto list_index = static_cast<std::size_t>(least - subscriptions_.begin());

  auto s = std::make_unique<Session>();
  std::uint64_t counter = session_counter_;
  std::uint64_t seed = 0;
  for (;; ++counter) {
    seed = derive_seed(config_.base_seed, "norming/session", counter);
    s->plan = build_session(config_.assignment, list_index, *config_.dataset, seed);
    std::shared_lock lock(sessions_mu_);
    if (!sessions_.contains(s->plan.session_id)) break;
  }
  Participant& p = s->participant;
  p.participant_id = hex_id("p-", derive_seed(config_.base_seed, "norming/participant", counter));
  p.nationality = who.nationality;
  p.gender = who.gender;
  p.age = who.age;
  p.native_language = who.native_language;
  p.consent_timestamp = stamp();

  ordered_json rec;
  rec["record"] = "session";
  rec["session_id"] = s->plan.session_id;
  rec["dataset_id"] = config_.dataset->dataset_id();
  rec["list_index"] = list_index;
  rec["seed"] = seed;
  rec["counter"] = counter;
  rec["participant"] = to_json(p);
  log_->append(rec.dump());

  session_counter_ = counter + 1;
  ++subscriptions_[list_index];
  SessionCreated out{s->plan.session_id, p.participant_id, list_index, s->plan.trials.size()};
  {
    std::unique_lock lock(sessions_mu_);
    sessions_.emplace(out.session_id, std::move(s));
  }
  spdlog::debug("session {} on list {}", out.session_id, list_index);
  return out;
}

std::optional<Trial> NormingService::next_trial(const std::string& session_id) const {
  Session& s = find(session_id);
  std::lock_guard lock(s.mu);
  if (s.answered >= s.plan.trials.size()) return std::nullopt;
  return s.plan.trials[s.answered];
}

Acknowledgment NormingService::submit_response(const std::string& session_id,
                                               std::size_t trial_index, int rating,
                                               std::int64_t rt_ms) {
  Session& s = find(session_id);
  if (rating < 1 || rating > 5) throw ValidationError("rating must be an integer from 1 to 5");
  if (rt_ms < 0) throw ValidationError("rt_ms must be non-negative");

  std::lock_guard lock(s.mu);
  if (s.sealed) throw ConflictError("session is already complete");
  if (trial_index >= s.plan.trials.size()) {
    throw ValidationError(fmt::format("trial_index {} is outside the session", trial_index));
  }
  if (trial_index < s.answered) {
    throw ConflictError(fmt::format("trial {} was already answered", trial_index));
  }
  if (trial_index > s.answered) {
    throw ConflictError(
        fmt::format("trial {} is not the current trial ({})", trial_index, s.answered));
  }
  const Trial& t = s.plan.trials[trial_index];
  Judgment j;
  j.participant_id = s.participant.participant_id;
  j.session_id = session_id;
  j.trial_index = trial_index;
  j.pair_id = t.pair_id;
  j.is_catch = t.is_catch;
  j.rating = rating;
  j.rt_ms = rt_ms;
  j.left_was_sentence_a = t.left_was_sentence_a;
  {
    std::lock_guard log_lock(log_mu_);
    j.received_at = stamp();
    ordered_json rec;
    rec["record"] = "judgment";
    const ordered_json body = to_json(j);
    for (const auto& [k, v] : body.items()) rec[k] = v;
    log_->append(rec.dump());
    std::unique_lock jl(judgments_mu_);
    judgments_.push_back(j);
  }
  ++s.answered;
  s.last_received_at = j.received_at;
  return {session_id, trial_index, j.received_at};
}

std::int64_t NormingService::complete_session(const std::string& session_id) {
  Session& s = find(session_id);
  std::lock_guard lock(s.mu);
  if (s.sealed) throw ConflictError("session is already complete");
  if (s.answered < s.plan.trials.size()) {
    throw ConflictError(fmt::format("{} trials remain unanswered",
                                    s.plan.trials.size() - s.answered));
  }
  const std::int64_t elapsed = s.last_received_at - s.participant.consent_timestamp;
  ordered_json rec;
  rec["record"] = "complete";
  rec["session_id"] = session_id;
  rec["completion_time_ms"] = elapsed;
  {
    std::lock_guard log_lock(log_mu_);
    log_->append(rec.dump());
  }
  s.sealed = true;
  s.participant.completion_time_ms = elapsed;
  return elapsed;
}

std::vector<Judgment> NormingService::judgments(
    const std::optional<std::string>& dataset_id) const {
  if (dataset_id && *dataset_id != config_.dataset->dataset_id()) return {};
  std::shared_lock lock(judgments_mu_);
  return judgments_;
}

void NormingService::export_judgments(std::ostream& out,
                                      const std::optional<std::string>& dataset_id) const {
  for (const auto& j : judgments(dataset_id)) out << judgment_line(j) << '\n';
}

std::vector<std::size_t> NormingService::list_subscriptions() const {
  std::lock_guard lock(log_mu_);
  return subscriptions_;
}

const std::string& NormingService::dataset_id() const { return config_.dataset->dataset_id(); }

std::size_t NormingService::n_trials(const std::string& session_id) const {
  return find(session_id).plan.trials.size();
}

std::size_t NormingService::n_sessions() const {
  std::shared_lock lock(sessions_mu_);
  return sessions_.size();
}

}  // namespace ambiprobe::norming
