#include <fstream>
#include <sstream>

#include "arspl/core/error.hpp"
#include "arspl/segmodel/checkpoint.hpp"
#include "arspl/spl/run.hpp"

namespace arspl::spl {

using nlohmann::json;

namespace {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kTrain: return "train";
    case Stage::kAwaitAnnotations: return "await_annotations";
    case Stage::kDone: return "done";
  }
  return "unknown";
}

Stage parse_stage(const std::string& s) {
  for (Stage st : {Stage::kTrain, Stage::kAwaitAnnotations, Stage::kDone}) {
    if (s == stage_name(st)) return st;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown stage '" + s + "'");
}

json label_json(const LabelGrid& g) {
  return {{"width", g.width}, {"height", g.height}, {"runs", suggest::rle_encode(g.labels)}};
}

LabelGrid label_from_json(const json& j) {
  LabelGrid g(j.at("width").get<int>(), j.at("height").get<int>(), suggest::rle_decode(j.at("runs")));
  return g;
}

json batch_json(const suggest::QueryBatch& b) {
  return {{"image_id", b.image_id},
          {"iteration", b.iteration},
          {"superpixels", b.superpixels},
          {"uncertainty", b.uncertainty}};
}

suggest::QueryBatch batch_from_json(const json& j) {
  return {j.at("image_id").get<int>(), j.at("iteration").get<int>(), j.at("superpixels").get<std::vector<int>>(),
          j.at("uncertainty").get<std::vector<double>>()};
}

json metrics_json(const MetricReport& m) {
  return {{"tp", m.tp}, {"fn", m.fn}, {"fp", m.fp}, {"recall", m.recall}, {"precision", m.precision},
          {"dice", m.dice}};
}

}  // namespace

json to_json(const DatasetConfig& c) {
  return {{"disk_diameter", c.pseudo.disk_diameter},
          {"xi_scale", c.pseudo.xi_scale},
          {"rpca_tol", c.pseudo.tol},
          {"rpca_max_iter", c.pseudo.max_iter},
          {"rpca_rho", c.pseudo.rho},
          {"superpixels", c.slic.target_count},
          {"compactness", c.slic.compactness},
          {"slic_iterations", c.slic.iterations}};
}

DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig c;
  try {
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("disk_diameter", c.pseudo.disk_diameter);
    get("xi_scale", c.pseudo.xi_scale);
    get("rpca_tol", c.pseudo.tol);
    get("rpca_max_iter", c.pseudo.max_iter);
    get("rpca_rho", c.pseudo.rho);
    get("superpixels", c.slic.target_count);
    get("compactness", c.slic.compactness);
    get("slic_iterations", c.slic.iterations);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed dataset config: ") + e.what());
  }
  return c;
}

json to_json(const RunConfig& cfg) {
  return {{"mode", mode_name(cfg.spl.mode)},
          {"tau0", cfg.spl.tau0},
          {"gamma0", cfg.spl.gamma0},
          {"mu", cfg.spl.mu},
          {"omega", cfg.spl.omega},
          {"lambda", cfg.spl.lambda},
          {"stop_dice_increment", cfg.spl.stop_dice_increment},
          {"max_alt_iters", cfg.spl.max_alt_iters},
          {"lr0", cfg.hyper.lr0},
          {"momentum", cfg.hyper.momentum},
          {"batch", cfg.hyper.batch},
          {"max_steps", cfg.hyper.max_steps},
          {"lr_power", cfg.hyper.lr_power},
          {"initial_steps", cfg.initial_steps},
          {"baseline_steps", cfg.baseline_steps},
          {"queries_per_image", cfg.queries_per_image},
          {"mcdo_passes", cfg.mcdo_passes},
          {"theta", cfg.theta},
          {"entropy", cfg.entropy == uncertainty::EntropyForm::kBinary ? "full" : "single"},
          {"dropout_rate", cfg.dropout_rate},
          {"widths", cfg.widths}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  try {
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    if (j.contains("mode")) cfg.spl.mode = parse_mode(j.at("mode").get<std::string>());
    get("tau0", cfg.spl.tau0);
    get("gamma0", cfg.spl.gamma0);
    get("mu", cfg.spl.mu);
    get("omega", cfg.spl.omega);
    get("lambda", cfg.spl.lambda);
    get("stop_dice_increment", cfg.spl.stop_dice_increment);
    get("max_alt_iters", cfg.spl.max_alt_iters);
    get("lr0", cfg.hyper.lr0);
    get("momentum", cfg.hyper.momentum);
    get("batch", cfg.hyper.batch);
    get("max_steps", cfg.hyper.max_steps);
    get("lr_power", cfg.hyper.lr_power);
    get("initial_steps", cfg.initial_steps);
    get("baseline_steps", cfg.baseline_steps);
    get("queries_per_image", cfg.queries_per_image);
    get("mcdo_passes", cfg.mcdo_passes);
    get("theta", cfg.theta);
    get("dropout_rate", cfg.dropout_rate);
    get("widths", cfg.widths);
    if (j.contains("entropy")) {
      const std::string e = j.at("entropy").get<std::string>();
      if (e == "full") {
        cfg.entropy = uncertainty::EntropyForm::kBinary;
      } else if (e == "single") {
        cfg.entropy = uncertainty::EntropyForm::kSingleTerm;
      } else {
        throw Error(ErrorCode::kInvalidArgument, "entropy must be 'single' or 'full'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed run config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

json to_json(const RunReport& r) {
  return {{"mode", r.mode},
          {"iterations", r.iterations},
          {"dice_history", r.dice_history},
          {"annotated_superpixels", r.annotated_superpixels},
          {"annotated_pixel_fraction", r.annotated_pixel_fraction},
          {"test_metrics", metrics_json(r.test_metrics)},
          {"convergence",
           {{"final_grad_norm", r.convergence.final_grad_norm},
            {"trailing_median_grad_norm", r.convergence.trailing_median},
            {"stable", r.convergence.stable}}}};
}

void save_state(const TrainState& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json images = json::array();
  for (const auto& img : s.images) {
    json store = json::array();
    for (const auto& [id, labels] : img.annotations.labeled) {
      store.push_back({{"id", id}, {"labels", suggest::rle_encode(labels)}});
    }
    images.push_back({{"labels", label_json(img.labels)},
                      {"weights", img.weights.v},
                      {"annotated", suggest::rle_encode(img.weights.annotated)},
                      {"annotations", store}});
  }
  json pending = json::array();
  for (const auto& b : s.pending) pending.push_back(batch_json(b));
  const json j = {{"k", s.k},
                  {"stage", stage_name(s.stage)},
                  {"images", images},
                  {"pending", pending},
                  {"dice_history", s.dice_history},
                  {"step_grad_norms", s.step_grad_norms},
                  {"final_grad_norm", s.final_grad_norm}};
  segmodel::save_checkpoint(s.model, dir / "model.ckpt.tmp");
  {
    std::ofstream out(dir / "state.json.tmp");
    out << j.dump();
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / "state.json.tmp").string());
  }
  std::filesystem::rename(dir / "model.ckpt.tmp", dir / "model.ckpt");
  std::filesystem::rename(dir / "state.json.tmp", dir / "state.json");
}

TrainState load_state(const std::filesystem::path& dir) {
  std::ifstream in(dir / "state.json");
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + (dir / "state.json").string());
  TrainState s;
  try {
    const json j = json::parse(in);
    s.k = j.at("k").get<int>();
    s.stage = parse_stage(j.at("stage").get<std::string>());
    for (const auto& ij : j.at("images")) {
      ImageState img;
      img.labels = label_from_json(ij.at("labels"));
      img.weights.v = ij.at("weights").get<std::vector<double>>();
      img.weights.annotated = suggest::rle_decode(ij.at("annotated").get<std::vector<int>>());
      for (const auto& a : ij.at("annotations")) {
        img.annotations.labeled.emplace(a.at("id").get<int>(),
                                        suggest::rle_decode(a.at("labels").get<std::vector<int>>()));
      }
      s.images.push_back(std::move(img));
    }
    for (const auto& b : j.at("pending")) s.pending.push_back(batch_from_json(b));
    s.dice_history = j.at("dice_history").get<std::vector<double>>();
    s.step_grad_norms = j.at("step_grad_norms").get<std::vector<double>>();
    s.final_grad_norm = j.at("final_grad_norm").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed state file: ") + e.what());
  }
  s.model = segmodel::load_checkpoint(dir / "model.ckpt");
  return s;
}

}  // namespace arspl::spl
