#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ambiprobe/dataset.hpp"
#include "ambiprobe/error.hpp"
#include "ambiprobe/experiment.hpp"
#include "ambiprobe/judgments.hpp"

namespace ambiprobe::norming {

/// Malformed or out-of-range request content (HTTP 422).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Request conflicts with session state: duplicate or out-of-order response,
/// early completion, or a write to a sealed session (HTTP 409).
class ConflictError : public Error {
 public:
  using Error::Error;
};

struct Demographics {
  std::string nationality;
  std::string gender;
  int age = 0;
  std::string native_language;
  bool consent = false;
};

using Clock = std::function<TimestampMs()>;
TimestampMs system_clock_ms();

struct ServiceConfig {
  std::shared_ptr<const Dataset> dataset;
  ListAssignment assignment;
  std::string log_path;
  std::uint64_t base_seed = 0;
  Clock clock = system_clock_ms;
};

struct SessionCreated {
  std::string session_id;
  std::string participant_id;
  std::size_t list_index = 0;
  std::size_t n_trials = 0;
};

struct Acknowledgment {
  std::string session_id;
  std::size_t trial_index = 0;
  TimestampMs received_at = 0;
};

/// Runs annotation sessions against seeded session plans. Every state change
/// is appended to a JSONL log and flushed to disk before the call returns;
/// construction replays an existing log (dropping a torn final line) so a
/// restarted service resumes exactly where the acknowledged state left off.
class NormingService {
 public:
  explicit NormingService(ServiceConfig config);
  ~NormingService();
  NormingService(const NormingService&) = delete;
  NormingService& operator=(const NormingService&) = delete;

  SessionCreated create_session(const Demographics& who);
  /// nullopt once every trial has been answered.
  std::optional<Trial> next_trial(const std::string& session_id) const;
  Acknowledgment submit_response(const std::string& session_id, std::size_t trial_index,
                                 int rating, std::int64_t rt_ms);
  std::int64_t complete_session(const std::string& session_id);

  /// Judgments in received_at order. A dataset_id other than the service's
  /// yields nothing.
  std::vector<Judgment> judgments(const std::optional<std::string>& dataset_id = {}) const;
  void export_judgments(std::ostream& out,
                        const std::optional<std::string>& dataset_id = {}) const;

  std::vector<std::size_t> list_subscriptions() const;
  const std::string& dataset_id() const;
  std::size_t n_sessions() const;
  std::size_t n_trials(const std::string& session_id) const;

 private:
  struct Session;
  struct Log;

  Session& find(const std::string& session_id) const;
  TimestampMs stamp();  // requires log_mu_
  void replay();
  void apply_session_record(const std::string& line);

  ServiceConfig config_;
  std::unique_ptr<Log> log_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;

  mutable std::mutex log_mu_;  // single writer on the log; also orders session creation
  std::vector<std::size_t> subscriptions_;
  std::uint64_t session_counter_ = 0;
  TimestampMs last_stamp_ = 0;

  mutable std::shared_mutex judgments_mu_;
  std::vector<Judgment> judgments_;
};

}  // namespace ambiprobe::norming
