#pragma once

#include <string>
#include <vector>

#include "scenesynth/box.hpp"
#include "scenesynth/error.hpp"

/// PASCAL VOC 2007 detection evaluation.
namespace scenesynth::evalkit {

class NoGroundTruth : public Error {
 public:
  NoGroundTruth() : Error("average precision is undefined: detections exist but there is no ground truth") {}
};

enum class ApMode { Voc2007ElevenPoint, ContinuousAuc };

/// Continuous: boxes are [min, max] rectangles. PixelInclusive: the devkit's
/// +1 convention, where a box covers (max - min + 1) pixels per axis.
enum class AreaConvention { Continuous, PixelInclusive };

struct EvalConfig {
  double iou_threshold = 0.5;
  ApMode ap_mode = ApMode::Voc2007ElevenPoint;
  bool ignore_difficult = true;
  AreaConvention area = AreaConvention::Continuous;

  void validate() const;
};

struct ScoredBox {
  int frame = 0;
  BoxF box;
  double score = 0.0;
};

struct GtBox {
  int frame = 0;
  BoxF box;
  bool difficult = false;
};

enum class MatchKind { TruePositive, FalsePositive, Ignored };

struct MatchRecord {
  int frame = 0;
  double score = 0.0;
  MatchKind kind = MatchKind::FalsePositive;
  int gt_index = -1;  // index into the gt list for true positives
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // one per non-ignored detection, in score order
  int total_gt = 0;
};

struct ApResult {
  double ap = 0.0;
  PrCurve curve;
  std::vector<MatchRecord> matches;
};

double iou(const BoxF& a, const BoxF& b, AreaConvention area = AreaConvention::Continuous);

/// Matches in descending score (ties keep input order); frames never match across each other.
std::vector<MatchRecord> match_detections(const std::vector<ScoredBox>& dets, const std::vector<GtBox>& gts,
                                          const EvalConfig& cfg);

/// Number of gts that count toward recall under cfg.
int count_positives(const std::vector<GtBox>& gts, const EvalConfig& cfg);

PrCurve pr_curve(const std::vector<MatchRecord>& matches, int total_gt);

/// Throws NoGroundTruth when total_gt == 0 and a scored detection exists.
ApResult average_precision(const std::vector<MatchRecord>& matches, int total_gt, const EvalConfig& cfg);

/// match_detections + average_precision.
ApResult evaluate(const std::vector<ScoredBox>& dets, const std::vector<GtBox>& gts, const EvalConfig& cfg);

struct NamedResult {
  std::string name;
  ApResult result;
};

struct Report {
  std::string svg;
  std::string csv;
};

/// PR curves of every result in one SVG plus a CSV with columns
/// name,ap,baseline,increment. Results pair up in order (0 vs 1, 2 vs 3, ...):
/// the first of each pair is the scene-specific model, the second its generic
/// baseline, and the first's row carries increment = ap_first - ap_second.
Report emit_report(const std::vector<NamedResult>& results);

}  // namespace scenesynth::evalkit
