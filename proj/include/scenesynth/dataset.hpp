#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scenesynth/box.hpp"
#include "scenesynth/error.hpp"
#include "scenesynth/rasterlab.hpp"

/// Dataset assembly: VOC XML annotations, the reproducible text manifest,
/// CSV ground-truth ingestion and label rescaling.
///
/// Layout on disk: <root>/images/NNNNNN.ppm, <root>/annotations/NNNNNN.xml,
/// <root>/manifest.txt. Paths inside the manifest are relative to <root>.
namespace scenesynth::dataset {

using rasterlab::AnnotationRecord;

/// Annotations below this visibility are flagged difficult.
inline constexpr double kDifficultThreshold = 0.4;

class BoxOutOfBounds : public Error {
 public:
  using Error::Error;
};

class MissingColumn : public Error {
 public:
  using Error::Error;
};

class EmptyFile : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  friend constexpr bool operator==(ImageSize, ImageSize) = default;
};

struct FrameRecord {
  int frame_index = 0;
  std::string image_path;
  std::vector<AnnotationRecord> annotations;
};

struct DatasetManifest {
  std::string name;
  ImageSize image_size;
  std::vector<FrameRecord> frames;
  std::string config_hash;
  std::uint64_t rng_seed = 0;
};

// ---- VOC XML -------------------------------------------------------------

struct VocOptions {
  std::string class_name = "person";
  double difficult_threshold = kDifficultThreshold;
};

struct VocObject {
  std::string name;
  BoxI box;  // 0-based inclusive
  bool truncated = false;
  bool difficult = false;
  std::uint32_t instance_id = 0;
  double visibility = 1.0;
  std::optional<BoxI> visible_box;
};

struct VocAnnotation {
  std::string filename;
  ImageSize size;
  std::vector<VocObject> objects;
};

/// VOC boxes are written 1-based inclusive. Throws BoxOutOfBounds for boxes outside `size`.
std::string export_voc_xml(const FrameRecord& record, ImageSize size, const VocOptions& options = {});

/// Parses a VOC annotation back to 0-based boxes. Throws ParseError.
VocAnnotation parse_voc_xml(std::string_view xml);

// ---- CSV ingestion -------------------------------------------------------

enum class BoxFormat { Corners, CornerSize };

struct CoordinateConvention {
  BoxFormat format = BoxFormat::Corners;
  bool one_based = false;
};

/// Column names (matched against the header row) or, with has_header = false,
/// zero-based column indices written as decimal strings.
struct ColumnMap {
  std::string frame = "frame";
  std::string id = "id";
  std::string x1 = "x1";
  std::string y1 = "y1";
  std::string x2 = "x2";
  std::string y2 = "y2";
  bool has_header = true;
};

struct CsvImport {
  std::vector<FrameRecord> frames;  // sorted by frame_index
  std::size_t malformed_rows = 0;
};

/// Throws EmptyFile, MissingColumn or IoError.
CsvImport import_csv_annotations(const std::filesystem::path& path, const ColumnMap& columns,
                                 const CoordinateConvention& convention = {});
CsvImport import_csv_annotations_text(std::string_view text, const ColumnMap& columns,
                                      const CoordinateConvention& convention = {});

/// Scales every box per axis, rounding half-up, then clamps into the target image.
std::vector<FrameRecord> rescale_labels(const std::vector<FrameRecord>& records, ImageSize from, ImageSize to);
BoxI rescale_box(const BoxI& box, ImageSize from, ImageSize to);

// ---- Manifest ------------------------------------------------------------

std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text);

void write_manifest(const std::filesystem::path& root, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& root);

std::string frame_stem(int frame_index);

/// Writes images/NNNNNN.ppm and annotations/NNNNNN.xml under `root`.
void write_frame(const std::filesystem::path& root, const FrameRecord& record, const RgbImage& image,
                 const VocOptions& options = {});

/// Ground truth boxes for one frame, with difficult flags, from an annotation record list.
struct GroundTruthBox {
  BoxI box;
  bool difficult = false;
};
std::vector<GroundTruthBox> ground_truth(const FrameRecord& record, double difficult_threshold = kDifficultThreshold);

/// 64-bit FNV-1a, hex encoded; used to fingerprint generator configs.
std::string fingerprint(std::string_view text);

}  // namespace scenesynth::dataset
