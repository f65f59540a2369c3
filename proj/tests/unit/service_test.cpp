#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <thread>

#include <unistd.h>

#include "arspl/core/manifest.hpp"
#include "arspl/service/server.hpp"
#include "arspl/synth/dataset.hpp"
#include "support/local_server.hpp"
#include "support/scripted_client.hpp"

using namespace arspl;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 7;

std::filesystem::path fresh_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("arspl_service_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct Fixture {
  std::filesystem::path manifest_path;
  Manifest manifest;
  spl::DatasetConfig dataset;
  spl::RunConfig run;

  json create_request() const {
    return {{"manifest", manifest_path.string()},
            {"seed", kSeed},
            {"config", spl::to_json(run)},
            {"dataset", spl::to_json(dataset)}};
  }
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    const auto dir = fresh_dir("data");
    synth::DatasetSpec spec;
    spec.seed = 42;
    spec.train = 4;
    spec.val = 2;
    spec.test = 2;
    spec.base.width = 32;
    spec.base.height = 32;
    spec.base.n_frames = 8;
    synth::write_dataset(dir, spec);
    f.manifest_path = dir / "manifest.json";
    f.manifest = load_manifest(f.manifest_path);
    f.dataset.pseudo.disk_diameter = 10;
    f.dataset.slic.target_count = 24;
    f.run.spl.max_alt_iters = 3;
    f.run.hyper.max_steps = 15;
    f.run.hyper.batch = 2;
    f.run.hyper.lr0 = 0.05;
    f.run.initial_steps = 25;
    f.run.baseline_steps = 25;
    f.run.queries_per_image = 2;
    f.run.mcdo_passes = 4;
    f.run.widths = {4, 8, 8};
    return f;
  }();
  return f;
}

const json& oracle_report() {
  static const json report = [] {
    const Fixture& f = fixture();
    const spl::Dataset data = spl::prepare_dataset(f.manifest, f.dataset);
    suggest::OracleAnnotator oracle(testing::training_truths(f.manifest));
    return spl::to_json(spl::arspl_run(data, f.run, oracle, kSeed).report);
  }();
  return report;
}

using TestServer = testing::LocalServer;

json get_json(httplib::Client& c, const std::string& path) {
  const auto r = c.Get(path);
  REQUIRE(r);
  REQUIRE(r->status == 200);
  return json::parse(r->body);
}

int post_status(httplib::Client& c, const std::string& path, const std::string& body) {
  const auto r = c.Post(path, body, "application/json");
  REQUIRE(r);
  return r->status;
}

std::string create_session(httplib::Client& c) {
  const auto r = c.Post("/sessions", fixture().create_request().dump(), "application/json");
  REQUIRE(r);
  REQUIRE(r->status == 200);
  return json::parse(r->body).at("id");
}

std::string wait_for_phase(httplib::Client& c, const std::string& id, const std::string& phase) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(120);
  std::string current;
  while (std::chrono::steady_clock::now() < deadline) {
    current = get_json(c, "/sessions/" + id).at("phase");
    if (current == phase || current == "failed") return current;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return current;
}

}  // namespace

TEST_CASE("scripted http client reproduces the oracle run report") {
  TestServer server(fresh_dir("sessions"));
  const testing::ScriptedOutcome out = testing::run_scripted_client(
      "127.0.0.1", server.port(), fixture().create_request(), fixture().manifest, std::chrono::seconds(300));
  CHECK(out.submissions > 0);
  CHECK(out.report.dump() == oracle_report().dump());
}

TEST_CASE("malformed session requests and unknown ids") {
  TestServer server(fresh_dir("sessions"));
  httplib::Client c = server.client();
  CHECK(post_status(c, "/sessions", "{") == 400);
  CHECK(post_status(c, "/sessions", "{}") == 400);
  CHECK(post_status(c, "/sessions", json{{"manifest", "/nonexistent/manifest.json"}}.dump()) == 400);
  json bad = fixture().create_request();
  bad["config"]["omega"] = 0.5;
  CHECK(post_status(c, "/sessions", bad.dump()) == 400);

  const auto r = c.Get("/sessions/nope");
  REQUIRE(r);
  CHECK(r->status == 404);
  CHECK(json::parse(r->body).contains("error"));
  CHECK(post_status(c, "/sessions/nope/suspend", "") == 404);
}

TEST_CASE("annotation protocol status codes") {
  TestServer server(fresh_dir("sessions"));
  httplib::Client c = server.client();
  const std::string id = create_session(c);
  const std::string base = "/sessions/" + id;
  REQUIRE(wait_for_phase(c, id, "awaiting_annotations") == "awaiting_annotations");

  const auto early = c.Get(base + "/report");
  REQUIRE(early);
  CHECK(early->status == 409);

  const auto overlay_missing = c.Get(base + "/overlay/99");
  REQUIRE(overlay_missing);
  CHECK(overlay_missing->status == 404);
  const json overlay = get_json(c, base + "/overlay/0");
  CHECK(overlay.at("width") == 32);
  CHECK(!overlay.at("image").get<std::string>().empty());

  const json queries = get_json(c, base + "/queries");
  REQUIRE(queries.at("batches").size() == fixture().manifest.train.size());
  const json& batch = queries.at("batches").at(0);
  CHECK(batch.at("superpixels").size() == 2);
  const std::vector<LabelGrid> truths = testing::training_truths(fixture().manifest);
  const suggest::AnnotationSet good = testing::oracle_answer(batch, truths);

  CHECK(post_status(c, base + "/annotations", "[") == 400);
  CHECK(post_status(c, base + "/annotations", json{{"foo", 1}}.dump()) == 422);
  suggest::AnnotationSet wrong_iteration = good;
  wrong_iteration.iteration += 1;
  CHECK(post_status(c, base + "/annotations", suggest::to_json(wrong_iteration).dump()) == 422);
  suggest::AnnotationSet partial = good;
  partial.superpixels.pop_back();
  CHECK(post_status(c, base + "/annotations", suggest::to_json(partial).dump()) == 422);
  suggest::AnnotationSet short_labels = good;
  short_labels.superpixels[0].labels.pop_back();
  CHECK(post_status(c, base + "/annotations", suggest::to_json(short_labels).dump()) == 422);
  suggest::AnnotationSet unknown_image = good;
  unknown_image.image_id = 99;
  CHECK(post_status(c, base + "/annotations", suggest::to_json(unknown_image).dump()) == 422);

  CHECK(post_status(c, base + "/annotations", suggest::to_json(good).dump()) == 200);
  CHECK(post_status(c, base + "/annotations", suggest::to_json(good).dump()) == 409);
  CHECK(get_json(c, base + "/queries").at("batches").size() == queries.at("batches").size() - 1);

  const testing::ScriptedOutcome out =
      testing::drive_session("127.0.0.1", server.port(), id, truths, std::chrono::seconds(300));
  CHECK(out.report.dump() == oracle_report().dump());
  CHECK(c.Get(base + "/queries")->status == 409);
  CHECK(post_status(c, base + "/annotations", suggest::to_json(good).dump()) == 409);
  CHECK(post_status(c, base + "/suspend", "") == 409);
  CHECK(post_status(c, base + "/resume", "") == 409);
}

TEST_CASE("suspended session survives a server restart and resumes") {
  const auto dir = fresh_dir("sessions");
  std::string id;
  {
    TestServer server(dir);
    httplib::Client c = server.client();
    id = create_session(c);
    REQUIRE(wait_for_phase(c, id, "awaiting_annotations") == "awaiting_annotations");
    CHECK(post_status(c, "/sessions/" + id + "/suspend", "") == 200);
    REQUIRE(wait_for_phase(c, id, "suspended") == "suspended");
    CHECK(c.Get("/sessions/" + id + "/queries")->status == 409);
  }
  TestServer server(dir);
  httplib::Client c = server.client();
  CHECK(get_json(c, "/sessions/" + id).at("phase") == "suspended");
  CHECK(post_status(c, "/sessions/" + id + "/resume", "") == 200);
  const testing::ScriptedOutcome out = testing::drive_session(
      "127.0.0.1", server.port(), id, testing::training_truths(fixture().manifest), std::chrono::seconds(300));
  CHECK(out.report.dump() == oracle_report().dump());

  TestServer reopened(dir);
  httplib::Client c2 = reopened.client();
  CHECK(get_json(c2, "/sessions/" + id).at("phase") == "converged");
  CHECK(get_json(c2, "/sessions/" + id + "/report").dump() == oracle_report().dump());
}
