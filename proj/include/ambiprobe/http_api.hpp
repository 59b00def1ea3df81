#pragma once

#include <string>

#include "ambiprobe/norming.hpp"

namespace httplib {
class Server;
}

namespace ambiprobe::norming {

/// Registers the JSON API on `server`. The service must outlive the server.
///
///   POST /api/sessions                   demographics -> {session_id, participant_id, list_index, n_trials}
///   GET  /api/sessions/{id}/trials/next  -> {"done":false,"trial":{...}} or {"done":true}
///   POST /api/sessions/{id}/responses    {trial_index, rating, rt_ms} -> acknowledgment
///   POST /api/sessions/{id}/complete     -> {completion_time_ms}
///   GET  /api/admin/export[?dataset_id=] -> judgment JSONL
///
/// Errors are {"error": kind, "message": text} with status 400 (malformed
/// JSON), 404, 409 or 422.
void mount_routes(httplib::Server& server, NormingService& service);

/// Binds host:port (port 0 picks a free one), calls `on_listening` with the
/// bound port, then serves until `server.stop()`.
void serve(httplib::Server& server, const std::string& host, int port,
           const std::function<void(int)>& on_listening);

}  // namespace ambiprobe::norming
