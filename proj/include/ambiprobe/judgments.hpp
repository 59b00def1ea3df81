#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ambiprobe {

/// Milliseconds since the Unix epoch, UTC.
using TimestampMs = std::int64_t;

/// "YYYY-MM-DDTHH:MM:SS.mmmZ"
std::string format_rfc3339(TimestampMs ms);
/// Accepts "Z" or a numeric offset and optional fractional seconds.
TimestampMs parse_rfc3339(std::string_view s);

struct Participant {
  std::string participant_id;
  std::string nationality;
  std::string gender;
  int age = 0;
  std::string native_language;
  TimestampMs consent_timestamp = 0;
  std::optional<std::int64_t> completion_time_ms;  // set once sealed
};

struct Judgment {
  std::string participant_id;
  std::string session_id;
  std::size_t trial_index = 0;
  std::optional<std::string> pair_id;  // nullopt on catch trials
  bool is_catch = false;
  int rating = 0;
  std::int64_t rt_ms = 0;
  bool left_was_sentence_a = true;
  TimestampMs received_at = 0;

  bool operator==(const Judgment&) const = default;
};

/// The export schema, keys in canonical order.
nlohmann::ordered_json to_json(const Judgment& j);
Judgment judgment_from_json(const nlohmann::json& j);
std::string judgment_line(const Judgment& j);

nlohmann::ordered_json to_json(const Participant& p);
Participant participant_from_json(const nlohmann::json& j);

struct JudgmentLog {
  std::vector<Judgment> judgments;
  std::vector<Participant> participants;  // empty for a bare export
};

/// Reads either a bare judgment export or a full service log (which adds
/// session and completion records carrying participant data).
JudgmentLog read_judgment_log(std::istream& in);
JudgmentLog load_judgment_log(const std::string& path);

}  // namespace ambiprobe
