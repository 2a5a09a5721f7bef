#pragma once

#include <array>
#include <optional>
#include <span>

#include "scenesynth/box.hpp"
#include "scenesynth/error.hpp"
#include "scenesynth/geometry.hpp"

/// Pinhole camera: world -> camera -> image plane -> pixel.
///
/// World units are millimeters. Camera frame: x right, y down, z along the
/// optical axis. No lens distortion.
namespace scenesynth::camgeom {

/// Points with camera depth at or below this (mm) are treated as behind the camera.
inline constexpr double kNearPlaneMm = 1.0;

struct Vec3World {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
  static Vec3World from(Vec3 v) { return {v.x, v.y, v.z}; }
};

struct Vec3Cam {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
  static Vec3Cam from(Vec3 v) { return {v.x, v.y, v.z}; }
};

class BehindCamera : public Error {
 public:
  BehindCamera() : Error("point is behind the camera near plane") {}
};

class EmptyVertexSet : public Error {
 public:
  EmptyVertexSet() : Error("vertex set is empty") {}
};

class InvalidCamera : public Error {
 public:
  using Error::Error;
};

struct Extrinsics {
  Mat3 rotation;
  Vec3 translation;

  /// Homogeneous [R t; 0 1], row-major.
  std::array<double, 16> homogeneous() const;

  /// Throws InvalidCamera unless R is orthonormal with det +1 (1e-9 per entry).
  void validate() const;
};

struct Intrinsics {
  double focal_mm = 1.0;
  double pitch_x_mm = 1.0;
  double pitch_y_mm = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

struct CameraModel {
  Extrinsics extrinsics;
  Intrinsics intrinsics;

  void validate() const {
    extrinsics.validate();
    intrinsics.validate();
  }

  /// Camera center in world coordinates (-R^T t).
  Vec3 center() const;
};

/// Box over projected vertices, already intersected with the image rectangle.
struct FullBBox {
  BoxF box;
  bool truncated = false;
};

Vec3Cam world_to_camera(Vec3World p, const Extrinsics& ext);

/// Throws BehindCamera when p.z <= kNearPlaneMm.
PixelPoint camera_to_pixel(Vec3Cam p, const Intrinsics& intr);

PixelPoint project(Vec3World p, const CameraModel& cam);

/// Throws EmptyVertexSet for an empty span. Vertices behind the near plane are
/// skipped; nullopt when none remain or the clipped box is empty.
std::optional<FullBBox> project_bbox(std::span<const Vec3World> vertices, const CameraModel& cam);

/// Integer pixel box covering every pixel whose center may fall inside `box`,
/// clamped to the image. Used to turn continuous labels into pixel labels.
BoxI to_pixel_box(const BoxF& box, int width, int height);

/// Extrinsics for a camera at `eye` looking at `target` with world +z up.
Extrinsics look_at(Vec3 eye, Vec3 target);

}  // namespace scenesynth::camgeom
