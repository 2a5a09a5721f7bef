#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "scenesynth/config.hpp"
#include "scenesynth/dataset.hpp"
#include "scenesynth/detect.hpp"
#include "scenesynth/evalkit.hpp"
#include "scenesynth/rasterlab.hpp"

/// End-to-end orchestration: simulate -> render -> label -> dataset -> train
/// -> detect -> evaluate. Everything here is deterministic in (config, seed)
/// and independent of the worker count.
namespace scenesynth::pipeline {

/// Experiment-level failure (exit code 4 in the CLI).
class ExperimentError : public Error {
 public:
  using Error::Error;
};

int default_jobs();

/// Runs fn(0..n-1) on up to `jobs` threads. The first exception is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct FrameData {
  int index = 0;
  rasterlab::RenderedFrame rendered;
  dataset::FrameRecord record;
};

/// Frames of one (config, seed) pair. Frames are grouped into episodes of
/// sim.episode_frames; each episode respawns agents from its own random
/// stream, so any frame range can be produced without replaying the others.
class FrameSource {
 public:
  FrameSource(const config::SceneConfig& cfg, std::uint64_t seed,
              rasterlab::RenderMode mode = rasterlab::RenderMode::Composite);

  int episode_length() const { return episode_length_; }
  const config::SceneConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }

  /// Simulates episode `episode` and hands over its frames in [begin, end).
  void render_episode(int episode, int begin, int end, const std::function<void(FrameData&&)>& each) const;

  /// Frames [begin, end) in order. `map` runs on worker threads, `sink` on the
  /// calling thread in frame order.
  template <class Map, class Sink>
  void run(int begin, int end, int jobs, Map map, Sink sink) const {
    using T = std::invoke_result_t<Map&, FrameData&&>;
    if (begin >= end) return;
    const int first = begin / episode_length_;
    const int last = (end - 1) / episode_length_;
    const int batch = std::max(1, jobs);
    for (int e0 = first; e0 <= last; e0 += batch) {
      const int count = std::min(batch, last - e0 + 1);
      std::vector<std::vector<T>> out(static_cast<std::size_t>(count));
      parallel_for(out.size(), jobs, [&](std::size_t i) {
        render_episode(e0 + static_cast<int>(i), begin, end,
                       [&](FrameData&& f) { out[i].push_back(map(std::move(f))); });
      });
      for (auto& episode : out)
        for (auto& item : episode) sink(std::move(item));
    }
  }

 private:
  config::SceneConfig cfg_;
  std::uint64_t seed_;
  rasterlab::RenderMode mode_;
  int episode_length_;
  rasterlab::SceneLayer layer_;
};

dataset::DatasetManifest make_manifest(const config::SceneConfig& cfg, std::uint64_t seed);

// ---- generate / render / label -------------------------------------------

struct GenerateSummary {
  int frames = 0;
  std::size_t annotations = 0;
};

/// Writes images/, annotations/ and manifest.txt under `out_dir`.
GenerateSummary cmd_generate(const config::SceneConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir,
                             int jobs);

/// Writes renders/NNNNNN.ppm in the given mode (plus 16-bit instance maps for RenderMode::InstanceColor).
int cmd_render(const config::SceneConfig& cfg, std::uint64_t seed, rasterlab::RenderMode mode,
               const std::filesystem::path& out_dir, int jobs);

struct LabelSummary {
  int frames = 0;
  std::size_t pedestrians = 0;  // instances with at least one visible pixel
  std::size_t ccl_boxes = 0;
  int merged_frames = 0;  // frames where CCL found fewer boxes than visible pedestrians
};

/// Auto-labeler vs connected-component boxes over simulated frames; writes labels.csv.
LabelSummary cmd_label(const config::SceneConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir,
                       int jobs);

/// CSV ground truth -> VOC XML + manifest (no images), optionally rescaled.
struct ImportOptions {
  dataset::ColumnMap columns;
  dataset::CoordinateConvention convention;
  dataset::ImageSize image_size;
  std::optional<dataset::ImageSize> rescale_to;
  std::string name = "imported";
};
dataset::CsvImport cmd_import(const std::filesystem::path& csv, const ImportOptions& options,
                              const std::filesystem::path& out_dir);

// ---- samples, training, detection ----------------------------------------

/// Detector window around a labeled person box, and back.
BoxF person_to_window(const BoxF& person, const config::TrainSettings& ts);
BoxF window_to_person(const BoxF& window, const config::TrainSettings& ts);

struct FrameSamples {
  std::vector<detect::Feature> positives;
  std::vector<detect::Feature> negatives;
  std::optional<detect::MiningScene> mining;
};

/// Positives (clear, untruncated, tall enough, plus mirrors) and random
/// background windows from one labeled image.
FrameSamples extract_samples(const GrayImage& image, const std::vector<rasterlab::AnnotationRecord>& records,
                             const config::TrainSettings& ts, std::uint64_t seed, bool keep_for_mining);

/// Accumulates samples frame by frame, then trains.
class SampleCollector {
 public:
  explicit SampleCollector(const config::TrainSettings& ts) : ts_(ts) {}
  void add(FrameSamples&& s);
  detect::LinearModel train() const;
  std::size_t positives() const { return positives_.size(); }
  std::size_t negatives() const { return negatives_.size(); }

 private:
  config::TrainSettings ts_;
  std::vector<detect::Feature> positives_;
  std::vector<detect::Feature> negatives_;
  std::vector<detect::MiningScene> mining_;
};

/// Person boxes for one image.
std::vector<detect::Detection> detect_people(const GrayImage& image, const detect::LinearModel& model,
                                             const config::TrainSettings& ts);

/// Trains on a generated dataset directory.
detect::LinearModel cmd_train(const config::SceneConfig& cfg, const std::filesystem::path& dataset_dir,
                              const std::filesystem::path& model_path);

/// Detections CSV: frame,score,x1,y1,x2,y2
std::string format_detections(const std::vector<evalkit::ScoredBox>& dets);
std::vector<evalkit::ScoredBox> parse_detections(std::string_view text);
std::vector<evalkit::ScoredBox> read_detections(const std::filesystem::path& path);

std::vector<evalkit::ScoredBox> cmd_detect(const config::SceneConfig& cfg, const std::filesystem::path& model_path,
                                           const std::filesystem::path& dataset_dir,
                                           const std::filesystem::path& out_csv, int jobs);

/// Ground truth of a dataset for the evaluator.
std::vector<evalkit::GtBox> dataset_ground_truth(const dataset::DatasetManifest& manifest, double difficult_threshold);

/// Evaluates each detections file against the dataset; writes pr.svg and ap.csv.
std::vector<evalkit::NamedResult> cmd_eval(const config::SceneConfig& cfg, const std::filesystem::path& dataset_dir,
                                           const std::vector<std::filesystem::path>& detection_files,
                                           const std::filesystem::path& out_dir);

// ---- experiment ----------------------------------------------------------

struct SeedResult {
  std::uint64_t seed = 0;
  evalkit::ApResult matched;
  evalkit::ApResult generic;
  double increment() const { return matched.ap - generic.ap; }
};

struct ExperimentResult {
  std::vector<SeedResult> seeds;
  double mean_increment = 0.0;
  std::string summary_csv;
  std::string summary_line;
};

struct ExperimentOptions {
  int jobs = 1;
  bool keep_images = false;
};

/// Per seed: matched train+test frames, mismatched train frames, one model per
/// train set, both evaluated on the matched test frames. Writes per-seed
/// manifests and models, pr.svg, ap.csv, summary.csv and summary.txt.
ExperimentResult cmd_experiment(const config::ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                const ExperimentOptions& options = {});
ExperimentResult run_experiment(const config::SceneConfig& matched, const config::SceneConfig& generic,
                                const config::ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                const ExperimentOptions& options = {});

}  // namespace scenesynth::pipeline
