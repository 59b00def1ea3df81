#include "ambiprobe/judgments.hpp"

#include <charconv>
#include <ctime>
#include <fstream>
#include <unordered_map>

#include <fmt/format.h>

#include "ambiprobe/error.hpp"

namespace ambiprobe {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int read_int(std::string_view s, std::size_t pos, std::size_t len) {
  int v = 0;
  if (pos + len > s.size()) throw Error("truncated timestamp '" + std::string(s) + "'");
  const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (ec != std::errc() || ptr != s.data() + pos + len) {
    throw Error("malformed timestamp '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_rfc3339(TimestampMs ms) {
  std::int64_t secs = ms / 1000;
  std::int64_t frac = ms % 1000;
  if (frac < 0) {
    frac += 1000;
    --secs;
  }
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900,
                     tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, frac);
}

TimestampMs parse_rfc3339(std::string_view s) {
  if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') ||
      s[13] != ':' || s[16] != ':') {
    throw Error("malformed timestamp '" + std::string(s) + "'");
  }
  const int year = read_int(s, 0, 4);
  const int month = read_int(s, 5, 2);
  const int day = read_int(s, 8, 2);
  const int hour = read_int(s, 11, 2);
  const int minute = read_int(s, 14, 2);
  const int second = read_int(s, 17, 2);
  std::size_t pos = 19;
  std::int64_t millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) millis = millis * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    for (; digits < 3; ++digits) millis *= 10;
  }
  std::int64_t offset_min = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    const int sign = s[pos] == '-' ? -1 : 1;
    offset_min = sign * (read_int(s, pos + 1, 2) * 60 + read_int(s, pos + 4, 2));
    pos += 6;
  } else {
    throw Error("timestamp lacks a UTC offset: '" + std::string(s) + "'");
  }
  if (pos != s.size()) throw Error("trailing characters in timestamp '" + std::string(s) + "'");
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                            static_cast<unsigned>(day));
  const std::int64_t secs =
      days * 86400 + hour * 3600 + minute * 60 + second - offset_min * 60;
  return secs * 1000 + millis;
}

ordered_json to_json(const Judgment& j) {
  ordered_json o;
  o["participant_id"] = j.participant_id;
  o["session_id"] = j.session_id;
  o["trial_index"] = j.trial_index;
  o["pair_id"] = j.pair_id ? ordered_json(*j.pair_id) : ordered_json(nullptr);
  o["is_catch"] = j.is_catch;
  o["rating"] = j.rating;
  o["rt_ms"] = j.rt_ms;
  o["left_was_sentence_a"] = j.left_was_sentence_a;
  o["received_at"] = format_rfc3339(j.received_at);
  return o;
}

Judgment judgment_from_json(const json& o) {
  Judgment j;
  try {
    j.participant_id = o.at("participant_id").get<std::string>();
    j.session_id = o.at("session_id").get<std::string>();
    j.trial_index = o.at("trial_index").get<std::size_t>();
    if (!o.at("pair_id").is_null()) j.pair_id = o.at("pair_id").get<std::string>();
    j.is_catch = o.at("is_catch").get<bool>();
    j.rating = o.at("rating").get<int>();
    j.rt_ms = o.at("rt_ms").get<std::int64_t>();
    j.left_was_sentence_a = o.at("left_was_sentence_a").get<bool>();
    j.received_at = parse_rfc3339(o.at("received_at").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(std::string("malformed judgment record: ") + e.what());
  }
  return j;
}

std::string judgment_line(const Judgment& j) { return to_json(j).dump(); }

ordered_json to_json(const Participant& p) {
  ordered_json o;
  o["participant_id"] = p.participant_id;
  o["nationality"] = p.nationality;
  o["gender"] = p.gender;
  o["age"] = p.age;
  o["native_language"] = p.native_language;
  o["consent_timestamp"] = format_rfc3339(p.consent_timestamp);
  return o;
}

Participant participant_from_json(const json& o) {
  Participant p;
  try {
    p.participant_id = o.at("participant_id").get<std::string>();
    p.nationality = o.at("nationality").get<std::string>();
    p.gender = o.at("gender").get<std::string>();
    p.age = o.at("age").get<int>();
    p.native_language = o.at("native_language").get<std::string>();
    p.consent_timestamp = parse_rfc3339(o.at("consent_timestamp").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(std::string("malformed participant record: ") + e.what());
  }
  return p;
}

JudgmentLog read_judgment_log(std::istream& in) {
  JudgmentLog log;
  std::unordered_map<std::string, std::size_t> by_session;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json o;
    try {
      o = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("judgment log line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string kind = o.value("record", "judgment");
    if (kind == "judgment") {
      log.judgments.push_back(judgment_from_json(o));
    } else if (kind == "session") {
      by_session[o.at("session_id").get<std::string>()] = log.participants.size();
      log.participants.push_back(participant_from_json(o.at("participant")));
    } else if (kind == "complete") {
      const auto it = by_session.find(o.at("session_id").get<std::string>());
      if (it == by_session.end()) {
        throw Error("judgment log line " + std::to_string(line_no) +
                    ": completion for unknown session");
      }
      log.participants[it->second].completion_time_ms =
          o.at("completion_time_ms").get<std::int64_t>();
    } else {
      throw Error("judgment log line " + std::to_string(line_no) + ": unknown record '" +
                  kind + "'");
    }
  }
  return log;
}

JudgmentLog load_judgment_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open judgment file '" + path + "'");
  return read_judgment_log(in);
}

}  // namespace ambiprobe
