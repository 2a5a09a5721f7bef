#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scenesynth/box.hpp"
#include "scenesynth/camgeom.hpp"
#include "scenesynth/image.hpp"
#include "scenesynth/meshgen.hpp"
#include "scenesynth/scenesim.hpp"

/// Software z-buffer rasterizer, the occlusion-aware auto-labeler, and the two
/// naive labeling baselines (connected components, white-background boxing).
///
/// Rasterization samples pixel centers (x + 0.5, y + 0.5) with a top-left fill
/// rule. Depth is perspective-correct camera z in millimeters. Fragments whose
/// depths differ by less than kDepthTieMm resolve to the lower instance id.
namespace scenesynth::rasterlab {

inline constexpr double kDepthTieMm = 0.01;

class ImageSizeMismatch : public Error {
 public:
  using Error::Error;
};

class MissingSoloRender : public Error {
 public:
  using Error::Error;
};

enum class RenderMode { Composite, Silhouette, InstanceColor };

struct RenderedFrame {
  RgbImage color;
  Image<std::uint32_t> instance;  // 0 = background
  Image<double> depth;            // +inf where instance == 0
};

/// Static part of a scene as seen by one camera: the background plate and the
/// depth of static occluders (+inf where nothing static occludes).
struct SceneLayer {
  RgbImage plate;
  Image<double> static_depth;
};

struct BackgroundStyle {
  Rgb ground_a{150, 150, 150};
  Rgb ground_b{120, 120, 125};
  Rgb offwalk{70, 95, 60};
  Rgb sky{185, 200, 215};
  Rgb obstacle{95, 80, 70};
  double tile_mm = 800.0;
  Vec3 light_dir{0.3, -0.5, 0.8};
  std::uint64_t texture_seed = 1;
};

/// Non-owning reference to a mesh placed in the world.
struct PosedMesh {
  std::uint32_t instance_id = 0;
  const meshgen::TriangleMesh* mesh = nullptr;
  Pose pose;
};

/// Depth-only render of one instance with nothing else in the scene, stored
/// over the pixel window it can touch.
struct SoloRender {
  std::uint32_t instance_id = 0;
  int origin_x = 0;
  int origin_y = 0;
  Image<double> depth;

  std::size_t pixel_count() const;
  bool covers(int x, int y) const;
};

struct InstanceBox {
  std::uint32_t instance_id = 0;
  camgeom::FullBBox box;
};

struct AnnotationRecord {
  std::uint32_t instance_id = 0;
  BoxI full_bbox;
  std::optional<BoxI> visible_bbox;
  double visibility = 0.0;
  bool truncated = false;
};

/// Plate rendered from the scene geometry (ground texture, obstacles, sky) or
/// loaded from scene.background; static depth always comes from the obstacles.
SceneLayer build_scene_layer(const scenesim::SceneDescription& scene, const BackgroundStyle& style);

/// Empty plate (white) with no static occluders.
SceneLayer blank_layer(int width, int height, Rgb color = kWhite);

/// Throws ImageSizeMismatch when the plate does not match the camera image size in Composite mode.
RenderedFrame rasterize(const SceneLayer& layer, std::span<const PosedMesh> meshes, const camgeom::CameraModel& cam,
                        RenderMode mode, Vec3 light_dir = BackgroundStyle{}.light_dir);

SoloRender render_solo(const PosedMesh& mesh, const camgeom::CameraModel& cam);

/// One record per instance box, sorted by instance id. Throws MissingSoloRender
/// when an instance present in the frame or in `boxes` has no solo render.
std::vector<AnnotationRecord> label_frame(const RenderedFrame& frame, std::span<const SoloRender> solo_renders,
                                          std::span<const InstanceBox> boxes);

/// Boxes of 8-connected foreground components (two-pass union-find), sorted by (y_min, x_min).
std::vector<BoxI> ccl_label(const Mask& binary);

/// Tight box over every pixel that differs from `bg`; only meaningful for single-object images.
std::optional<BoxI> whitebg_bbox(const RgbImage& image, Rgb bg = kWhite);

Mask foreground_mask(const RenderedFrame& frame);

/// Deterministic flat color per instance (never white).
Rgb instance_color(std::uint32_t id);

}  // namespace scenesynth::rasterlab
