#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "arspl/core/error.hpp"
#include "arspl/core/metrics.hpp"
#include "arspl/core/parallel.hpp"
#include "arspl/core/pgm.hpp"
#include "arspl/layersep/pseudo_label.hpp"
#include "arspl/segmodel/checkpoint.hpp"
#include "arspl/service/server.hpp"
#include "arspl/spl/run.hpp"
#include "arspl/synth/dataset.hpp"

namespace {

using namespace arspl;
using nlohmann::json;
namespace fs = std::filesystem;

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return json::parse(in);
}

std::pair<int, int> parse_size(const std::string& text) {
  int w = 0, h = 0;
  char sep = 0;
  if (std::sscanf(text.c_str(), "%d%c%d", &w, &sep, &h) != 3 || (sep != 'x' && sep != 'X') || w < 8 || h < 8) {
    throw CLI::ValidationError("--size", "expected WxH with both sides >= 8, got '" + text + "'");
  }
  return {w, h};
}

struct SynthArgs {
  std::uint64_t seed = 1;
  std::string out;
  int count = 35;
  std::string size = "64x64";
  int val = -1;
  int test = -1;
  int frames = 20;
  double noise = 0.02;
};

int run_synth(const SynthArgs& a) {
  synth::DatasetSpec spec;
  spec.seed = a.seed;
  std::tie(spec.base.width, spec.base.height) = parse_size(a.size);
  spec.base.n_frames = a.frames;
  spec.base.noise_sigma = a.noise;
  // Default split 4:1:2 (35 sequences -> 20/5/10).
  spec.val = a.val >= 0 ? a.val : a.count / 7;
  spec.test = a.test >= 0 ? a.test : 2 * a.count / 7;
  spec.train = a.count - spec.val - spec.test;
  if (spec.train < 0) throw Error(ErrorCode::kInvalidArgument, "--val plus --test exceeds --count");
  const Manifest m = synth::write_dataset(a.out, spec);
  std::cout << "wrote " << a.count << " sequences (" << m.train.size() << " train, " << m.val.size() << " val, "
            << m.test.size() << " test) to " << a.out << "\n";
  return 0;
}

struct PseudoArgs {
  std::string manifest;
  std::string out;
  double xi_scale = 0.8;
  int disk = 20;
};

int run_pseudolabel(const PseudoArgs& a) {
  const Manifest m = load_manifest(a.manifest);
  layersep::PseudoLabelConfig cfg;
  cfg.xi_scale = a.xi_scale;
  cfg.disk_diameter = a.disk;
  fs::create_directories(a.out);
  struct Item {
    std::string split;
    const ManifestEntry* entry;
  };
  std::vector<Item> items;
  for (const auto& e : m.train) items.push_back({"train", &e});
  for (const auto& e : m.val) items.push_back({"val", &e});
  for (const auto& e : m.test) items.push_back({"test", &e});
  std::vector<json> rows(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const ManifestEntry& e = *items[i].entry;
    const GraySequence seq = load_sequence(resolve(m, e.sequence_dir), e.key_frame_index);
    const layersep::PseudoLabel pl = layersep::generate_pseudo_label(seq, cfg);
    const std::string stem = fs::path(e.sequence_dir).filename().string();
    save_label_pgm(pl.labels, fs::path(a.out) / (stem + "_pseudo.pgm"));
    save_pgm(GrayImage(pl.vesselness.width, pl.vesselness.height, pl.vesselness.values),
             fs::path(a.out) / (stem + "_vesselness.pgm"));
    json row = {{"split", items[i].split},
                {"sequence_dir", e.sequence_dir},
                {"pseudo_label", stem + "_pseudo.pgm"},
                {"vesselness", stem + "_vesselness.pgm"},
                {"rpca_iterations", pl.rpca_iterations},
                {"rpca_converged", pl.rpca_converged},
                {"otsu_degenerate", pl.otsu_degenerate}};
    if (e.ground_truth_path) {
      row["dice"] = evaluate_mask(pl.labels, load_label_pgm(resolve(m, *e.ground_truth_path))).dice;
    }
    rows[i] = std::move(row);
  });
  write_json({{"pseudo_labels", rows}}, fs::path(a.out) / "pseudo_labels.json");
  std::cout << "wrote " << rows.size() << " pseudo labels to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string manifest;
  std::string mode = "arspl";
  std::string annotator = "oracle";
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  std::string dataset_config;
  int port = 8080;
  bool resume = false;
};

int run_train(const TrainArgs& a) {
  spl::RunConfig cfg = a.config.empty() ? spl::RunConfig{} : spl::run_config_from_json(read_json(a.config));
  cfg.spl.mode = spl::parse_mode(a.mode);
  const spl::DatasetConfig dcfg =
      a.dataset_config.empty() ? spl::DatasetConfig{} : spl::dataset_config_from_json(read_json(a.dataset_config));
  fs::create_directories(a.out);

  if (a.annotator == "interactive") {
    service::SessionManager sessions(a.out);
    json request = {{"manifest", fs::absolute(a.manifest).string()},
                    {"seed", a.seed},
                    {"config", spl::to_json(cfg)},
                    {"dataset", spl::to_json(dcfg)}};
    const std::string id = sessions.create(request);
    httplib::Server server;
    service::register_routes(server, sessions);
    std::thread http([&] { server.listen("127.0.0.1", a.port); });
    std::cout << "session " << id << " waiting for annotations at http://127.0.0.1:" << a.port << "/sessions/" << id
              << "\n";
    const auto session = sessions.find(id);
    service::Phase phase;
    while ((phase = session->wait_until_settled(std::chrono::hours(1))) == service::Phase::kTraining ||
           phase == service::Phase::kAwaitingAnnotations) {
    }
    server.stop();
    http.join();
    if (phase != service::Phase::kConverged) {
      std::cerr << "session ended " << service::phase_name(phase) << ": " << session->status().dump() << "\n";
      return 1;
    }
    write_json(session->report(), fs::path(a.out) / "report.json");
    std::cout << session->report().dump(2) << "\n";
    return 0;
  }
  if (a.annotator != "oracle") throw Error(ErrorCode::kInvalidArgument, "--annotator must be oracle or interactive");

  const Manifest manifest = load_manifest(a.manifest);
  const spl::Dataset data = spl::prepare_dataset(manifest, dcfg);
  std::vector<LabelGrid> truths;
  for (const auto& t : data.train) truths.push_back(t.truth.value_or(LabelGrid{}));
  suggest::OracleAnnotator oracle(std::move(truths));

  const fs::path state_dir = fs::path(a.out) / "state";
  std::optional<spl::TrainState> resume;
  if (a.resume && fs::exists(state_dir / "state.json")) resume = spl::load_state(state_dir);
  const auto hook = [&](const spl::TrainState& s) {
    spl::save_state(s, state_dir);
    std::cerr << "iteration " << s.k << " stage " << static_cast<int>(s.stage);
    if (!s.dice_history.empty()) std::cerr << " val dice " << s.dice_history.back();
    std::cerr << "\n";
  };
  const spl::RunResult result = spl::arspl_run(data, cfg, oracle, a.seed, hook, std::move(resume));
  const json report = spl::to_json(result.report);
  segmodel::save_checkpoint(result.state.model, fs::path(a.out) / "model.ckpt");
  write_json(report, fs::path(a.out) / "report.json");
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised vessel segmentation workbench"};
  app.require_subcommand(1);
  unsigned workers = 0;
  app.add_option("--workers", workers, "Worker threads (0 = all cores)");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic angiogram sequences and a manifest");
  synth_cmd->add_option("--seed", synth_args.seed, "Dataset seed")->required();
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
  synth_cmd->add_option("--count", synth_args.count, "Number of sequences")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--size", synth_args.size, "Frame size WxH");
  synth_cmd->add_option("--val", synth_args.val, "Validation sequences (default count/7)");
  synth_cmd->add_option("--test", synth_args.test, "Test sequences (default 2*count/7)");
  synth_cmd->add_option("--frames", synth_args.frames, "Frames per sequence")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise", synth_args.noise, "Noise standard deviation");

  PseudoArgs pseudo_args;
  auto* pseudo_cmd = app.add_subcommand("pseudolabel", "Generate pseudo labels for every manifest entry");
  pseudo_cmd->add_option("--manifest", pseudo_args.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  pseudo_cmd->add_option("--out", pseudo_args.out, "Output directory")->required();
  pseudo_cmd->add_option("--xi-scale", pseudo_args.xi_scale, "Sparsity weight scale (xi = scale / sqrt(pixels))");
  pseudo_cmd->add_option("--disk", pseudo_args.disk, "Closing disk diameter in pixels");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Run one training mode and write a RunReport");
  train_cmd->add_option("--manifest", train_args.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--mode", train_args.mode, "arspl|noar|nospl|ns|fs|pl")
      ->check(CLI::IsMember({"arspl", "noar", "nospl", "ns", "fs", "pl"}));
  train_cmd->add_option("--annotator", train_args.annotator, "oracle|interactive")
      ->check(CLI::IsMember({"oracle", "interactive"}));
  train_cmd->add_option("--seed", train_args.seed, "Run seed");
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--config", train_args.config, "RunConfig JSON file")->check(CLI::ExistingFile);
  train_cmd->add_option("--dataset-config", train_args.dataset_config, "Pseudo-label/superpixel JSON file")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--port", train_args.port, "HTTP port for the interactive annotator");
  train_cmd->add_flag("--resume", train_args.resume, "Continue from <out>/state if present");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Serve annotation sessions over HTTP");
  serve_cmd->add_option("--port", port, "Port")->required();
  serve_cmd->add_option("--data", data_dir, "Session storage directory")->required();
  serve_cmd->add_option("--host", host, "Bind address");

  CLI11_PARSE(app, argc, argv);
  set_worker_count(workers);
  try {
    if (*synth_cmd) return run_synth(synth_args);
    if (*pseudo_cmd) return run_pseudolabel(pseudo_args);
    if (*train_cmd) return run_train(train_args);
    if (*serve_cmd) {
      std::cout << "listening on http://" << host << ":" << port << "\n";
      service::serve(host, port, data_dir);
      return 0;
    }
  } catch (const arspl::Error& e) {
    std::cerr << "error [" << arspl::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
