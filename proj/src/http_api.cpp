#include "ambiprobe/http_api.hpp"

#include <sstream>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

namespace ambiprobe::norming {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void fail(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
  ordered_json body;
  body["error"] = kind;
  body["message"] = message;
  reply(res, status, body);
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body);  // json::parse_error -> 400
  if (!body.is_object()) throw ValidationError("request body must be a JSON object");
  return body;
}

template <class T>
T field(const json& body, const char* name) {
  const auto it = body.find(name);
  if (it == body.end() || it->is_null()) throw ValidationError(std::string(name) + " is required");
  try {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer()) throw ValidationError(std::string(name) + " must be an integer");
    }
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string(name) + " has the wrong type");
  }
}

// Wraps a handler with the error-to-status mapping.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const json::parse_error& e) {
      fail(res, 400, "bad_request", e.what());
    } catch (const ValidationError& e) {
      fail(res, 422, "validation", e.what());
    } catch (const NotFoundError& e) {
      fail(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
      fail(res, 409, "conflict", e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      fail(res, 500, "internal", e.what());
    }
  };
}

ordered_json trial_payload(const Trial& t, std::size_t n_trials) {
  // Catch status, pair identity and side assignment stay server-side.
  ordered_json o;
  o["trial_index"] = t.trial_index;
  o["n_trials"] = n_trials;
  o["target_word"] = t.target_word;
  o["left"] = t.left_text;
  o["right"] = t.right_text;
  return o;
}

}  // namespace

void mount_routes(httplib::Server& server, NormingService& service) {
  server.Post("/api/sessions", guarded([&service](const httplib::Request& req,
                                                  httplib::Response& res) {
    const json body = parse_body(req);
    Demographics who;
    who.nationality = field<std::string>(body, "nationality");
    who.gender = field<std::string>(body, "gender");
    who.age = field<int>(body, "age");
    who.native_language = field<std::string>(body, "native_language");
    who.consent = field<bool>(body, "consent");
    const auto created = service.create_session(who);
    ordered_json out;
    out["session_id"] = created.session_id;
    out["participant_id"] = created.participant_id;
    out["list_index"] = created.list_index;
    out["n_trials"] = created.n_trials;
    reply(res, 201, out);
  }));

  server.Get("/api/sessions/:id/trials/next",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const auto& id = req.path_params.at("id");
               const auto trial = service.next_trial(id);
               ordered_json out;
               out["done"] = !trial.has_value();
               if (trial) out["trial"] = trial_payload(*trial, service.n_trials(id));
               reply(res, 200, out);
             }));

  server.Post("/api/sessions/:id/responses",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                const auto trial_index = field<std::int64_t>(body, "trial_index");
                const auto rating = field<std::int64_t>(body, "rating");
                const auto rt_ms = field<std::int64_t>(body, "rt_ms");
                if (trial_index < 0) throw ValidationError("trial_index must be non-negative");
                if (rating < 1 || rating > 5) {
                  throw ValidationError("rating must be an integer from 1 to 5");
                }
                const auto ack =
                    service.submit_response(req.path_params.at("id"),
                                            static_cast<std::size_t>(trial_index),
                                            static_cast<int>(rating), rt_ms);
                ordered_json out;
                out["accepted"] = true;
                out["session_id"] = ack.session_id;
                out["trial_index"] = ack.trial_index;
                out["received_at"] = format_rfc3339(ack.received_at);
                reply(res, 201, out);
              }));

  server.Post("/api/sessions/:id/complete",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                ordered_json out;
                out["completion_time_ms"] = service.complete_session(req.path_params.at("id"));
                reply(res, 200, out);
              }));

  server.Get("/api/admin/export",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               std::optional<std::string> dataset_id;
               if (req.has_param("dataset_id")) dataset_id = req.get_param_value("dataset_id");
               std::ostringstream out;
               service.export_judgments(out, dataset_id);
               res.status = 200;
               res.set_content(out.str(), "application/x-ndjson");
             }));
}

void serve(httplib::Server& server, const std::string& host, int port,
           const std::function<void(int)>& on_listening) {
  const int bound = port == 0 ? server.bind_to_any_port(host)
                              : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  if (on_listening) on_listening(bound);
  server.listen_after_bind();
}

}  // namespace ambiprobe::norming
