#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "arspl/spl/run.hpp"
#include "arspl/suggest/suggest.hpp"

namespace arspl::service {

// A request that cannot be served; `status` is the HTTP status to return.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

enum class Phase { kTraining, kAwaitingAnnotations, kConverged, kSuspended, kFailed };

std::string phase_name(Phase phase);

// Everything needed to (re)build a run: persisted as part of the session.
struct SessionSpec {
  std::filesystem::path manifest;
  std::uint64_t seed = 0;
  spl::RunConfig run;
  spl::DatasetConfig dataset;
};

nlohmann::json to_json(const SessionSpec& spec);
// Throws ServiceError(400) on a malformed request or a missing manifest.
SessionSpec session_spec_from_json(const nlohmann::json& j);

// One training run driven by a remote annotator. The run executes on a
// background thread; every public method is safe to call concurrently.
// Files under `dir`: session.json (spec, phase), state/ (TrainState after
// every stage transition) and report.json once converged.
class Session {
 public:
  Session(std::string id, std::filesystem::path dir, SessionSpec spec);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Reopens a persisted session: converged sessions keep their report, any
  // other session comes back suspended.
  static std::unique_ptr<Session> load(const std::filesystem::path& dir);

  const std::string& id() const { return id_; }
  Phase phase() const;

  void start();
  // Continues a suspended session from its persisted state. 409 otherwise.
  void resume();

  nlohmann::json status() const;
  // Unanswered query batches with image context. 409 unless awaiting.
  nlohmann::json queries() const;
  // 409 when not awaiting or the batch was already answered; 422 when the
  // set does not match its pending batch.
  nlohmann::json submit(const suggest::AnnotationSet& set);
  // Takes effect at the next annotation point. 409 once converged.
  nlohmann::json suspend();
  // The RunReport once converged; 409 before.
  nlohmann::json report() const;
  // Key frame, current prediction, self-paced labels and annotated mask.
  nlohmann::json overlay(int image_id) const;

  // Blocks until the phase is converged, suspended or failed, or the timeout
  // expires. Returns the phase at that time.
  Phase wait_until_settled(std::chrono::milliseconds timeout) const;

 private:
  class Annotator;

  struct PendingBatch {
    suggest::QueryBatch batch;
    GrayImage image;
    superpixel::SuperpixelPartition partition;
    segmodel::ProbMap prediction;
    std::optional<suggest::AnnotationSet> answer;
  };

  void launch(std::optional<spl::TrainState> resume_state);
  void run(std::optional<spl::TrainState> resume_state);
  std::vector<suggest::AnnotationSet> annotate(std::span<const suggest::QueryRequest> requests);
  void set_phase_locked(Phase phase);
  void persist_locked() const;
  std::size_t remaining_locked() const;

  const std::string id_;
  const std::filesystem::path dir_;
  const SessionSpec spec_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  Phase phase_ = Phase::kSuspended;
  std::string failure_;
  bool suspend_requested_ = false;
  std::shared_ptr<const spl::Dataset> data_;
  std::optional<spl::TrainState> snapshot_;
  std::vector<PendingBatch> pending_;
  std::optional<nlohmann::json> report_;
  std::thread worker_;
};

class SessionManager {
 public:
  // Reopens every session persisted under data_dir/sessions.
  explicit SessionManager(std::filesystem::path data_dir);
  ~SessionManager();

  // Validates the request, persists and starts a new session; returns its id.
  std::string create(const nlohmann::json& request);
  // 404 for an unknown id.
  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace arspl::service
