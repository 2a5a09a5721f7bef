// scenesynth: scene config -> simulation -> rendering -> labels -> detector -> VOC evaluation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "scenesynth/config.hpp"
#include "scenesynth/pipeline.hpp"

namespace fs = std::filesystem;
using namespace scenesynth;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kExperimentError = 4;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int jobs = pipeline::default_jobs();
};

config::SceneConfig scene_config(const Globals& g) {
  if (g.config.empty()) throw config::ConfigError("--config is required");
  auto cfg = config::load_scene_config(g.config);
  if (g.seed) cfg.sim.rng_seed = *g.seed;
  return cfg;
}

dataset::ImageSize parse_size(const std::string& s) {
  int w = 0, h = 0;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%dx%d%c", &w, &h, &extra) != 2 || w <= 0 || h <= 0)
    throw config::ConfigError("image size must look like 640x480, got '" + s + "'");
  return {w, h};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-specific synthetic pedestrian data: simulate, render, label, train, detect, evaluate."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Scene config (TOML)");
  app.add_option("--seed", g.seed, "Override the random seed");
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.fallthrough();

  auto* generate = app.add_subcommand("generate", "Simulate, render and label a dataset");
  std::optional<int> frames;
  generate->add_option("--frames", frames, "Override sim.frames");

  auto* render = app.add_subcommand("render", "Render frames without labels");
  std::string mode = "composite";
  render->add_option("--mode", mode, "composite|silhouette|instance")
      ->check(CLI::IsMember({"composite", "silhouette", "instance"}))
      ->capture_default_str();
  render->add_option("--frames", frames, "Override sim.frames");

  auto* label = app.add_subcommand("label", "Auto-labeler vs connected components, or import CSV ground truth");
  std::string import_csv, image_size, to_size, import_name = "imported";
  dataset::ColumnMap cols;
  bool one_based = false, corner_size = false, no_header = false;
  label->add_option("--frames", frames, "Override sim.frames");
  label->add_option("--import-csv", import_csv, "CSV ground truth to convert into VOC XML");
  label->add_option("--image-size", image_size, "Source image size WxH (with --import-csv)");
  label->add_option("--to-size", to_size, "Rescale imported labels to WxH");
  label->add_option("--name", import_name, "Dataset name for the imported manifest");
  label->add_option("--col-frame", cols.frame);
  label->add_option("--col-id", cols.id);
  label->add_option("--col-x1", cols.x1);
  label->add_option("--col-y1", cols.y1);
  label->add_option("--col-x2", cols.x2, "x2 or box width with --corner-size");
  label->add_option("--col-y2", cols.y2, "y2 or box height with --corner-size");
  label->add_flag("--one-based", one_based, "CSV coordinates start at 1");
  label->add_flag("--corner-size", corner_size, "Columns are x, y, width, height");
  label->add_flag("--no-header", no_header, "No header row; --col-* are column indices");

  auto* train = app.add_subcommand("train", "Train a detector on a generated dataset");
  std::string dataset_dir, model_path = "model.bin";
  train->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  train->add_option("--model", model_path, "Model file to write")->capture_default_str();

  auto* detect_cmd = app.add_subcommand("detect", "Run a detector over a dataset");
  std::string detections_out = "detections.csv";
  detect_cmd->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  detect_cmd->add_option("--model", model_path, "Model file")->required();
  detect_cmd->add_option("--output", detections_out, "Detections CSV")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "VOC average precision of detection files");
  auto* plot = app.add_subcommand("plot", "PR curves of detection files (SVG)");
  std::vector<std::string> detection_files;
  std::string ap_mode;
  bool pixel_area = false;
  for (auto* sub : {eval, plot}) {
    sub->add_option("--dataset", dataset_dir, "Dataset directory with ground truth")->required();
    sub->add_option("--detections", detection_files, "Detections CSV (repeatable)")->required();
  }
  eval->add_option("--ap-mode", ap_mode, "voc2007|auc")->check(CLI::IsMember({"voc2007", "auc"}));
  eval->add_flag("--pixel-area", pixel_area, "Use the +1 pixel area convention");

  auto* experiment = app.add_subcommand("experiment", "Matched vs mismatched training, per seed");
  std::string spec_path;
  bool keep_images = false;
  experiment->add_option("--spec", spec_path, "Experiment spec (defaults to --config)");
  experiment->add_flag("--keep-images", keep_images, "Also write images and XML for every frame");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const fs::path out = g.out_dir;
  try {
    if (*generate) {
      auto cfg = scene_config(g);
      if (frames) cfg.sim.frames = *frames;
      const auto s = pipeline::cmd_generate(cfg, cfg.sim.rng_seed, out, g.jobs);
      std::cout << "frames=" << s.frames << " annotations=" << s.annotations << " dir=" << out.string() << '\n';
    } else if (*render) {
      auto cfg = scene_config(g);
      if (frames) cfg.sim.frames = *frames;
      const auto m = mode == "silhouette" ? rasterlab::RenderMode::Silhouette
                     : mode == "instance" ? rasterlab::RenderMode::InstanceColor
                                          : rasterlab::RenderMode::Composite;
      const int n = pipeline::cmd_render(cfg, cfg.sim.rng_seed, m, out, g.jobs);
      std::cout << "frames=" << n << '\n';
    } else if (*label) {
      if (!import_csv.empty()) {
        if (image_size.empty()) throw config::ConfigError("--image-size is required with --import-csv");
        pipeline::ImportOptions opt;
        cols.has_header = !no_header;
        opt.columns = cols;
        opt.convention = {corner_size ? dataset::BoxFormat::CornerSize : dataset::BoxFormat::Corners, one_based};
        opt.image_size = parse_size(image_size);
        if (!to_size.empty()) opt.rescale_to = parse_size(to_size);
        opt.name = import_name;
        const auto r = pipeline::cmd_import(import_csv, opt, out);
        std::size_t boxes = 0;
        for (const auto& f : r.frames) boxes += f.annotations.size();
        std::cout << "frames=" << r.frames.size() << " boxes=" << boxes << " malformed_rows=" << r.malformed_rows
                  << '\n';
      } else {
        auto cfg = scene_config(g);
        if (frames) cfg.sim.frames = *frames;
        const auto s = pipeline::cmd_label(cfg, cfg.sim.rng_seed, out, g.jobs);
        std::cout << "frames=" << s.frames << " pedestrians=" << s.pedestrians << " ccl_boxes=" << s.ccl_boxes
                  << " merged_frames=" << s.merged_frames << '\n';
      }
    } else if (*train) {
      const auto cfg = scene_config(g);
      const auto model = pipeline::cmd_train(cfg, dataset_dir, model_path);
      std::cout << "model=" << model_path << " weights=" << model.weights.size() << '\n';
    } else if (*detect_cmd) {
      const auto cfg = scene_config(g);
      const auto dets = pipeline::cmd_detect(cfg, model_path, dataset_dir, detections_out, g.jobs);
      std::cout << "detections=" << dets.size() << " file=" << detections_out << '\n';
    } else if (*eval || *plot) {
      auto cfg = scene_config(g);
      if (ap_mode == "auc") cfg.eval.eval.ap_mode = evalkit::ApMode::ContinuousAuc;
      if (ap_mode == "voc2007") cfg.eval.eval.ap_mode = evalkit::ApMode::Voc2007ElevenPoint;
      if (pixel_area) cfg.eval.eval.area = evalkit::AreaConvention::PixelInclusive;
      std::vector<fs::path> files(detection_files.begin(), detection_files.end());
      const auto results = pipeline::cmd_eval(cfg, dataset_dir, files, out);
      if (*eval)
        for (const auto& r : results) std::printf("%s ap=%.6f\n", r.name.c_str(), r.result.ap);
      else
        std::cout << "plot=" << (out / "pr.svg").string() << '\n';
    } else if (*experiment) {
      const std::string path = spec_path.empty() ? g.config : spec_path;
      if (path.empty()) throw config::ConfigError("--spec (or --config) is required");
      auto spec = config::load_experiment_spec(path);
      if (g.seed) spec.seeds = {*g.seed};
      const auto r = pipeline::cmd_experiment(spec, out, {g.jobs, keep_images});
      std::cout << r.summary_csv << r.summary_line << '\n';
    }
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const dataset::ParseError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const dataset::EmptyFile& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const dataset::MissingColumn& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const pipeline::ExperimentError& e) {
    std::cerr << "experiment failed: " << e.what() << '\n';
    return kExperimentError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return *experiment ? kExperimentError : kFailure;
  }
  return kOk;
}
