#include "arspl/service/session.hpp"

#include <fstream>
#include <random>
#include <set>

#include <httplib.h>

#include "arspl/core/error.hpp"
#include "arspl/core/pgm.hpp"
#include "arspl/segmodel/predict.hpp"

namespace arspl::service {

using nlohmann::json;

namespace {

std::string pgm_base64(const GrayImage& image) { return httplib::detail::base64_encode(encode_pgm(image)); }

GrayImage prob_image(const segmodel::ProbMap& p) { return GrayImage(p.width, p.height, p.values); }

void write_json_atomically(const json& j, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return json::parse(in);
}

Phase parse_phase(const std::string& s) {
  for (Phase p : {Phase::kTraining, Phase::kAwaitingAnnotations, Phase::kConverged, Phase::kSuspended, Phase::kFailed}) {
    if (s == phase_name(p)) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown phase '" + s + "'");
}

std::string random_id() {
  std::random_device rd;
  const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string phase_name(Phase phase) {
  switch (phase) {
    case Phase::kTraining: return "training";
    case Phase::kAwaitingAnnotations: return "awaiting_annotations";
    case Phase::kConverged: return "converged";
    case Phase::kSuspended: return "suspended";
    case Phase::kFailed: return "failed";
  }
  return "unknown";
}

json to_json(const SessionSpec& spec) {
  return {{"manifest", spec.manifest.string()},
          {"seed", spec.seed},
          {"config", spl::to_json(spec.run)},
          {"dataset", spl::to_json(spec.dataset)}};
}

SessionSpec session_spec_from_json(const json& j) {
  if (!j.is_object()) throw ServiceError(400, "request body must be a JSON object");
  if (!j.contains("manifest") || !j.at("manifest").is_string()) {
    throw ServiceError(400, "missing 'manifest' (path to a dataset manifest)");
  }
  SessionSpec spec;
  spec.manifest = std::filesystem::absolute(j.at("manifest").get<std::string>());
  if (!std::filesystem::is_regular_file(spec.manifest)) {
    throw ServiceError(400, "manifest not found: " + spec.manifest.string());
  }
  try {
    load_manifest(spec.manifest);
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("config")) spec.run = spl::run_config_from_json(j.at("config"));
    spl::validate(spec.run);
    if (j.contains("dataset")) spec.dataset = spl::dataset_config_from_json(j.at("dataset"));
  } catch (const Error& e) {
    throw ServiceError(400, e.what());
  } catch (const json::exception& e) {
    throw ServiceError(400, std::string("malformed session request: ") + e.what());
  }
  return spec;
}

class Session::Annotator final : public suggest::Annotator {
 public:
  explicit Annotator(Session& session) : session_(session) {}
  std::vector<suggest::AnnotationSet> annotate(std::span<const suggest::QueryRequest> requests) override {
    return session_.annotate(requests);
  }

 private:
  Session& session_;
};

Session::Session(std::string id, std::filesystem::path dir, SessionSpec spec)
    : id_(std::move(id)), dir_(std::move(dir)), spec_(std::move(spec)) {
  std::filesystem::create_directories(dir_);
}

Session::~Session() {
  {
    std::lock_guard lk(mu_);
    suspend_requested_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

std::unique_ptr<Session> Session::load(const std::filesystem::path& dir) {
  const json meta = read_json(dir / "session.json");
  SessionSpec spec;
  spec.manifest = meta.at("spec").at("manifest").get<std::string>();
  spec.seed = meta.at("spec").at("seed").get<std::uint64_t>();
  spec.run = spl::run_config_from_json(meta.at("spec").at("config"));
  spec.dataset = spl::dataset_config_from_json(meta.at("spec").at("dataset"));
  auto session = std::make_unique<Session>(meta.at("id").get<std::string>(), dir, std::move(spec));
  const Phase persisted = parse_phase(meta.at("phase").get<std::string>());
  if (std::filesystem::exists(dir / "state" / "state.json")) session->snapshot_ = spl::load_state(dir / "state");
  if (persisted == Phase::kConverged && std::filesystem::exists(dir / "report.json")) {
    session->report_ = read_json(dir / "report.json");
    session->phase_ = Phase::kConverged;
  } else {
    session->phase_ = Phase::kSuspended;
  }
  return session;
}

Phase Session::phase() const {
  std::lock_guard lk(mu_);
  return phase_;
}

void Session::start() {
  {
    std::lock_guard lk(mu_);
    suspend_requested_ = false;
    set_phase_locked(Phase::kTraining);
  }
  launch(std::nullopt);
}

void Session::resume() {
  std::optional<spl::TrainState> state;
  {
    std::lock_guard lk(mu_);
    if (phase_ != Phase::kSuspended) throw ServiceError(409, "session is " + phase_name(phase_) + ", not suspended");
    if (std::filesystem::exists(dir_ / "state" / "state.json")) state = spl::load_state(dir_ / "state");
    suspend_requested_ = false;
    set_phase_locked(Phase::kTraining);
  }
  launch(std::move(state));
}

void Session::launch(std::optional<spl::TrainState> resume_state) {
  if (worker_.joinable()) worker_.join();
  worker_ = std::thread(&Session::run, this, std::move(resume_state));
}

void Session::run(std::optional<spl::TrainState> resume_state) {
  try {
    std::shared_ptr<const spl::Dataset> data;
    {
      std::lock_guard lk(mu_);
      data = data_;
    }
    if (!data) {
      data = std::make_shared<const spl::Dataset>(spl::prepare_dataset(load_manifest(spec_.manifest), spec_.dataset));
      std::lock_guard lk(mu_);
      data_ = data;
    }
    Annotator annotator(*this);
    const auto hook = [this](const spl::TrainState& s) {
      std::lock_guard lk(mu_);
      snapshot_ = s;
      spl::save_state(s, dir_ / "state");
      persist_locked();
    };
    spl::RunResult result = spl::arspl_run(*data, spec_.run, annotator, spec_.seed, hook, std::move(resume_state));
    std::lock_guard lk(mu_);
    snapshot_ = std::move(result.state);
    if (result.finished) {
      report_ = spl::to_json(result.report);
      write_json_atomically(*report_, dir_ / "report.json");
      set_phase_locked(Phase::kConverged);
    } else {
      set_phase_locked(Phase::kSuspended);
    }
  } catch (const std::exception& e) {
    std::lock_guard lk(mu_);
    failure_ = e.what();
    pending_.clear();
    set_phase_locked(Phase::kFailed);
  }
}

std::vector<suggest::AnnotationSet> Session::annotate(std::span<const suggest::QueryRequest> requests) {
  std::unique_lock lk(mu_);
  if (suspend_requested_) {
    suspend_requested_ = false;
    throw Error(ErrorCode::kAnnotatorAborted, "suspended");
  }
  pending_.clear();
  for (const auto& r : requests) pending_.push_back({r.batch, *r.image, *r.partition, *r.prediction, std::nullopt});
  set_phase_locked(Phase::kAwaitingAnnotations);
  cv_.wait(lk, [&] { return suspend_requested_ || remaining_locked() == 0; });
  if (remaining_locked() != 0) {
    suspend_requested_ = false;
    pending_.clear();
    throw Error(ErrorCode::kAnnotatorAborted, "suspended while awaiting annotations");
  }
  std::vector<suggest::AnnotationSet> answers;
  for (auto& p : pending_) answers.push_back(std::move(*p.answer));
  pending_.clear();
  return answers;
}

void Session::set_phase_locked(Phase phase) {
  phase_ = phase;
  persist_locked();
  cv_.notify_all();
}

void Session::persist_locked() const {
  json meta = {{"id", id_}, {"spec", to_json(spec_)}, {"phase", phase_name(phase_)}};
  if (!failure_.empty()) meta["error"] = failure_;
  write_json_atomically(meta, dir_ / "session.json");
}

std::size_t Session::remaining_locked() const {
  std::size_t n = 0;
  for (const auto& p : pending_) n += p.answer ? 0 : 1;
  return n;
}

json Session::status() const {
  std::lock_guard lk(mu_);
  json j = {{"id", id_}, {"phase", phase_name(phase_)}, {"mode", spl::mode_name(spec_.run.spl.mode)}};
  if (snapshot_) {
    std::size_t annotated = 0;
    for (const auto& img : snapshot_->images) annotated += img.annotations.size();
    j["iteration"] = snapshot_->k;
    j["dice_history"] = snapshot_->dice_history;
    j["annotated_superpixels"] = annotated;
  }
  if (phase_ == Phase::kAwaitingAnnotations) j["remaining"] = remaining_locked();
  if (phase_ == Phase::kFailed) j["error"] = failure_;
  return j;
}

json Session::queries() const {
  std::lock_guard lk(mu_);
  if (phase_ != Phase::kAwaitingAnnotations) {
    throw ServiceError(409, "no queries while the session is " + phase_name(phase_));
  }
  json batches = json::array();
  int iteration = 0;
  for (const auto& p : pending_) {
    iteration = p.batch.iteration;
    if (p.answer) continue;
    json sps = json::array();
    for (std::size_t i = 0; i < p.batch.superpixels.size(); ++i) {
      const int id = p.batch.superpixels[i];
      sps.push_back({{"id", id}, {"uncertainty", p.batch.uncertainty[i]}, {"pixels", p.partition.members[id]}});
    }
    batches.push_back({{"image_id", p.batch.image_id},
                       {"iteration", p.batch.iteration},
                       {"width", p.image.width},
                       {"height", p.image.height},
                       {"image", pgm_base64(p.image)},
                       {"prediction", pgm_base64(prob_image(p.prediction))},
                       {"superpixels", sps}});
  }
  return {{"iteration", iteration}, {"remaining", remaining_locked()}, {"batches", batches}};
}

json Session::submit(const suggest::AnnotationSet& set) {
  std::lock_guard lk(mu_);
  if (phase_ != Phase::kAwaitingAnnotations) {
    throw ServiceError(409, "annotations are not accepted while the session is " + phase_name(phase_));
  }
  PendingBatch* target = nullptr;
  for (auto& p : pending_) {
    if (p.batch.image_id == set.image_id) target = &p;
  }
  if (!target) throw ServiceError(422, "no pending batch for image " + std::to_string(set.image_id));
  if (target->answer) throw ServiceError(409, "batch for image " + std::to_string(set.image_id) + " already answered");
  if (set.iteration != target->batch.iteration) {
    throw ServiceError(422, "iteration " + std::to_string(set.iteration) + " does not match pending iteration " +
                                std::to_string(target->batch.iteration));
  }
  const std::set<int> asked(target->batch.superpixels.begin(), target->batch.superpixels.end());
  std::set<int> answered;
  for (const auto& sp : set.superpixels) {
    if (!asked.count(sp.id)) throw ServiceError(422, "superpixel " + std::to_string(sp.id) + " was not queried");
    if (!answered.insert(sp.id).second) {
      throw ServiceError(422, "superpixel " + std::to_string(sp.id) + " appears twice");
    }
    if (sp.labels.size() != target->partition.members[sp.id].size()) {
      throw ServiceError(422, "superpixel " + std::to_string(sp.id) + " needs " +
                                  std::to_string(target->partition.members[sp.id].size()) + " labels, got " +
                                  std::to_string(sp.labels.size()));
    }
  }
  if (answered != asked) throw ServiceError(422, "annotation set does not cover every queried superpixel");
  target->answer = set;
  const std::size_t remaining = remaining_locked();
  if (remaining == 0) set_phase_locked(Phase::kTraining);
  return {{"accepted", true}, {"remaining", remaining}, {"phase", phase_name(phase_)}};
}

json Session::suspend() {
  {
    std::lock_guard lk(mu_);
    if (phase_ == Phase::kConverged || phase_ == Phase::kFailed) {
      throw ServiceError(409, "session is " + phase_name(phase_));
    }
    if (phase_ != Phase::kSuspended) suspend_requested_ = true;
  }
  cv_.notify_all();
  std::lock_guard lk(mu_);
  return {{"phase", phase_name(phase_)}, {"suspend_requested", suspend_requested_}};
}

json Session::report() const {
  std::lock_guard lk(mu_);
  if (!report_) throw ServiceError(409, "no report while the session is " + phase_name(phase_));
  return *report_;
}

json Session::overlay(int image_id) const {
  std::shared_ptr<const spl::Dataset> data;
  segmodel::SegModel model;
  spl::ImageState state;
  {
    std::lock_guard lk(mu_);
    if (!data_ || !snapshot_) throw ServiceError(409, "session data is not loaded yet");
    if (image_id < 0 || image_id >= static_cast<int>(data_->train.size())) {
      throw ServiceError(404, "unknown image " + std::to_string(image_id));
    }
    data = data_;
    model = snapshot_->model;
    state = snapshot_->images[image_id];
  }
  const GrayImage& image = data->train[image_id].image;
  LabelGrid annotated(image.width, image.height, state.weights.annotated);
  return {{"image_id", image_id},
          {"width", image.width},
          {"height", image.height},
          {"image", pgm_base64(image)},
          {"prediction", pgm_base64(prob_image(segmodel::predict_proba(model, image)))},
          {"labels", pgm_base64(labels_to_image(state.labels))},
          {"annotated", pgm_base64(labels_to_image(annotated))}};
}

Phase Session::wait_until_settled(std::chrono::milliseconds timeout) const {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, timeout, [&] {
    return phase_ == Phase::kConverged || phase_ == Phase::kSuspended || phase_ == Phase::kFailed;
  });
  return phase_;
}

SessionManager::SessionManager(std::filesystem::path data_dir) : root_(std::move(data_dir) / "sessions") {
  std::filesystem::create_directories(root_);
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    if (!std::filesystem::exists(entry.path() / "session.json")) continue;
    std::shared_ptr<Session> s = Session::load(entry.path());
    sessions_.emplace(s->id(), std::move(s));
  }
}

SessionManager::~SessionManager() = default;

std::string SessionManager::create(const json& request) {
  SessionSpec spec = session_spec_from_json(request);
  std::shared_ptr<Session> session;
  {
    std::lock_guard lk(mu_);
    std::string id = random_id();
    while (sessions_.count(id)) id = random_id();
    session = std::make_shared<Session>(id, root_ / id, std::move(spec));
    sessions_.emplace(id, session);
  }
  session->start();
  return session->id();
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lk(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

}  // namespace arspl::service
