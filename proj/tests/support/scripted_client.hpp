#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "arspl/core/image.hpp"
#include "arspl/core/manifest.hpp"
#include "arspl/suggest/suggest.hpp"

namespace arspl::testing {

struct ScriptedOutcome {
  std::string session_id;
  nlohmann::json report;
  int submissions = 0;
};

// Ground-truth masks of the manifest's training entries, in manifest order.
std::vector<LabelGrid> training_truths(const Manifest& manifest);

// Answers one batch of a GET /queries response from the ground truth.
suggest::AnnotationSet oracle_answer(const nlohmann::json& batch, const std::vector<LabelGrid>& truths);

// Answers every query batch of an existing session until it converges.
// Throws std::runtime_error on a failed or suspended session, an unexpected
// status code or a timeout.
ScriptedOutcome drive_session(const std::string& host, int port, const std::string& session_id,
                              const std::vector<LabelGrid>& truths, std::chrono::seconds timeout);

// Creates a session over HTTP and drives it to convergence.
ScriptedOutcome run_scripted_client(const std::string& host, int port, const nlohmann::json& create_request,
                                    const Manifest& manifest, std::chrono::seconds timeout);

}  // namespace arspl::testing
