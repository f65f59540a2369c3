#pragma once

// Eigen (via session.hpp) must precede httplib.h, which pulls in the
// resolver's `_res` macro.
#include "arspl/service/session.hpp"

#include <httplib.h>

namespace arspl::service {

// Routes:
//   POST /sessions                         -> {"id"}
//   GET  /sessions/{id}                    -> status
//   GET  /sessions/{id}/queries            -> pending batches (409 unless awaiting)
//   POST /sessions/{id}/annotations        -> ack with remaining count
//   POST /sessions/{id}/suspend
//   POST /sessions/{id}/resume
//   GET  /sessions/{id}/report             -> RunReport (409 until converged)
//   GET  /sessions/{id}/overlay/{image_id}
// Errors are {"error": message} with the matching status code.
void register_routes(httplib::Server& server, SessionManager& sessions);

// Serves until the process is stopped.
void serve(const std::string& host, int port, const std::filesystem::path& data_dir);

}  // namespace arspl::service
