#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scenesynth/detect.hpp"
#include "scenesynth/error.hpp"
#include "scenesynth/evalkit.hpp"
#include "scenesynth/rasterlab.hpp"
#include "scenesynth/scenesim.hpp"

/// TOML-style scene configuration (sections scene, camera, sim, render,
/// train, eval) and experiment specs. Unknown keys are rejected and every
/// module invariant is validated at load time.
namespace scenesynth::config {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RenderSettings {
  rasterlab::BackgroundStyle style;
  bool write_png = false;
  bool write_instance_pgm = false;
};

/// Detector/training settings plus how labeled boxes turn into detector windows.
struct TrainSettings {
  detect::HogParams hog;
  detect::TrainConfig train;
  detect::DetectParams detect{1.2, 8, -1.0, 0.5, 64};
  /// Person height as a fraction of the window height.
  double person_height_fraction = 0.8;
  /// Width / height of the person box reported for a detection window.
  double box_aspect = 0.4;
  /// Smallest labeled person (pixels tall) used as a positive sample.
  int min_positive_height = 40;
  int negatives_per_frame = 10;
  int mining_frames = 60;
};

struct EvalSettings {
  evalkit::EvalConfig eval;
  double difficult_threshold = 0.4;
};

struct SceneConfig {
  std::string name = "scene";
  scenesim::SceneDescription scene;
  scenesim::SimConfig sim;
  RenderSettings render;
  TrainSettings train;
  EvalSettings eval;
  /// Normalized dump of the parsed document; input to the manifest's config hash.
  std::string canonical;
};

/// Relative paths (scene.background) resolve against `base_dir`.
SceneConfig parse_scene_config(std::string_view text, const std::filesystem::path& base_dir = {});
/// Throws ConfigError (invalid content) or IoError (unreadable file).
SceneConfig load_scene_config(const std::filesystem::path& path);

struct ExperimentSpec {
  std::filesystem::path specific_scene;
  std::filesystem::path generic_scene;
  double test_fraction = 2.0 / 7.0;
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

ExperimentSpec parse_experiment_spec(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

}  // namespace scenesynth::config
