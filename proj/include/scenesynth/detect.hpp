#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "scenesynth/box.hpp"
#include "scenesynth/error.hpp"
#include "scenesynth/image.hpp"

/// Gradient-orientation-histogram features, a linear hinge-loss classifier
/// trained by SGD with hard-negative mining, and a sliding-window detector.
namespace scenesynth::detect {

inline constexpr double kNormEpsilon = 1e-6;

class SizeMismatch : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ImageTooSmall : public Error {
 public:
  using Error::Error;
};

struct HogParams {
  int window_w = 32;
  int window_h = 64;
  int cell = 8;
  int block_cells = 2;
  int block_stride_cells = 1;
  int bins = 9;
  double clip = 0.2;

  int cells_x() const { return window_w / cell; }
  int cells_y() const { return window_h / cell; }
  int blocks_x() const { return (cells_x() - block_cells) / block_stride_cells + 1; }
  int blocks_y() const { return (cells_y() - block_cells) / block_stride_cells + 1; }
  int block_length() const { return block_cells * block_cells * bins; }
  int feature_length() const { return blocks_x() * blocks_y() * block_length(); }

  void validate() const;
  friend bool operator==(const HogParams&, const HogParams&) = default;
};

using Feature = std::vector<float>;

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  double score(std::span<const float> feature) const;
  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct Detection {
  BoxF box;
  double score = 0.0;
};

struct DetectParams {
  double scale_factor = 1.2;
  int stride = 8;
  double score_threshold = 0.0;
  double nms_iou = 0.5;
  /// Pyramid levels beyond this are not scanned.
  int max_levels = 64;
};

struct TrainConfig {
  int epochs = 12;
  double learning_rate = 0.05;
  double lambda = 1e-3;
  int hard_negative_rounds = 1;
  int negatives_per_round = 400;
  std::uint64_t rng_seed = 1;
  /// Detector settings used while mining; windows must overlap every
  /// positive box by less than mining_max_iou to count as negatives.
  DetectParams mining;
  double mining_max_iou = 0.3;

  void validate() const;
};

/// Labeled feature set; labels are +1 / -1.
struct TrainingSet {
  std::vector<Feature> features;
  std::vector<int> labels;

  void add(Feature f, int label) {
    features.push_back(std::move(f));
    labels.push_back(label);
  }
  std::size_t size() const { return features.size(); }
};

/// An image whose windows may be mined, with the window-shaped boxes that
/// contain people (in image pixels).
struct MiningScene {
  GrayImage image;
  std::vector<BoxF> people;
};

/// Per-cell orientation histograms, row-major cells, `bins` values each.
std::vector<float> cell_histograms(const GrayImage& patch, const HogParams& p);

/// Throws SizeMismatch unless the patch is exactly window-sized.
Feature extract_hog(const GrayImage& patch, const HogParams& p);

/// lambda/2 |w|^2 + mean hinge loss.
double hinge_objective(const LinearModel& model, const TrainingSet& data, double lambda);
/// Subgradient of hinge_objective (weights then bias).
LinearModel hinge_gradient(const LinearModel& model, const TrainingSet& data, double lambda);

/// SGD over `data` only, starting from zero; `epoch_objectives` (if given)
/// receives the objective after every epoch.
LinearModel fit_sgd(const TrainingSet& data, const TrainConfig& cfg, int feature_length,
                    std::vector<double>* epoch_objectives = nullptr);

/// Fits on positives/negatives, then for each hard-negative round scans the
/// mining scenes, appends the top-scoring windows away from people as
/// negatives and refits. Throws InsufficientData without at least one
/// positive and one negative.
LinearModel train(const std::vector<Feature>& positives, const std::vector<Feature>& negatives,
                  std::span<const MiningScene> scenes_for_mining, const HogParams& params, const TrainConfig& cfg);

/// Pyramid sliding-window scan followed by NMS. Throws ImageTooSmall.
std::vector<Detection> detect(const GrayImage& image, const LinearModel& model, const HogParams& params,
                              const DetectParams& dp = {});

/// Raw window scores before thresholding and NMS (every scanned window).
std::vector<Detection> score_windows(const GrayImage& image, const LinearModel& model, const HogParams& params,
                                     const DetectParams& dp = {});

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold = 0.5);

/// Little-endian file: "SSPD1", HogParams, weight count, float64 weights, float64 bias.
void save_model(const std::filesystem::path& path, const LinearModel& model, const HogParams& params);
std::pair<LinearModel, HogParams> load_model(const std::filesystem::path& path);

}  // namespace scenesynth::detect
