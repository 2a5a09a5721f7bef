#include "scenesynth/camgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace scenesynth::camgeom {

std::array<double, 16> Extrinsics::homogeneous() const {
  const Mat3& r = rotation;
  return {r(0, 0), r(0, 1), r(0, 2), translation.x,  //
          r(1, 0), r(1, 1), r(1, 2), translation.y,  //
          r(2, 0), r(2, 1), r(2, 2), translation.z,  //
          0.0,     0.0,     0.0,     1.0};
}

void Extrinsics::validate() const {
  constexpr double kTol = 1e-9;
  const Mat3 rrt = rotation * rotation.transposed();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (std::abs(rrt(i, j) - (i == j ? 1.0 : 0.0)) > kTol)
        throw InvalidCamera("camera.rotation is not orthonormal");
    }
  }
  if (std::abs(rotation.determinant() - 1.0) > kTol)
    throw InvalidCamera("camera.rotation must have determinant +1");
  if (!std::isfinite(translation.x) || !std::isfinite(translation.y) || !std::isfinite(translation.z))
    throw InvalidCamera("camera.translation_mm must be finite");
}

void Intrinsics::validate() const {
  if (!(focal_mm > 0.0) || !std::isfinite(focal_mm)) throw InvalidCamera("camera.f_mm must be > 0");
  if (!(pitch_x_mm > 0.0) || !(pitch_y_mm > 0.0)) throw InvalidCamera("camera pixel pitch must be > 0");
  if (!std::isfinite(u0) || !std::isfinite(v0)) throw InvalidCamera("principal point must be finite");
  if (width <= 0 || height <= 0) throw InvalidCamera("image size must be positive");
}

Vec3 CameraModel::center() const {
  const Vec3 c = extrinsics.rotation.transposed() * extrinsics.translation;
  return c * -1.0;
}

Vec3Cam world_to_camera(Vec3World p, const Extrinsics& ext) {
  return Vec3Cam::from(ext.rotation * p.vec() + ext.translation);
}

PixelPoint camera_to_pixel(Vec3Cam p, const Intrinsics& intr) {
  if (!(p.z > kNearPlaneMm)) throw BehindCamera();
  // Physical image-plane point (mm), then pixel conversion.
  const double xu = intr.focal_mm * p.x / p.z;
  const double yu = intr.focal_mm * p.y / p.z;
  return {xu / intr.pitch_x_mm + intr.u0, yu / intr.pitch_y_mm + intr.v0, p.z};
}

PixelPoint project(Vec3World p, const CameraModel& cam) {
  return camera_to_pixel(world_to_camera(p, cam.extrinsics), cam.intrinsics);
}

std::optional<FullBBox> project_bbox(std::span<const Vec3World> vertices, const CameraModel& cam) {
  if (vertices.empty()) throw EmptyVertexSet();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  BoxF raw{kInf, kInf, -kInf, -kInf};
  bool any = false;
  for (const auto& v : vertices) {
    const Vec3Cam c = world_to_camera(v, cam.extrinsics);
    if (!(c.z > kNearPlaneMm)) continue;
    const PixelPoint px = camera_to_pixel(c, cam.intrinsics);
    raw.u_min = std::min(raw.u_min, px.u);
    raw.v_min = std::min(raw.v_min, px.v);
    raw.u_max = std::max(raw.u_max, px.u);
    raw.v_max = std::max(raw.v_max, px.v);
    any = true;
  }
  if (!any) return std::nullopt;

  const double w = cam.intrinsics.width;
  const double h = cam.intrinsics.height;
  const BoxF clipped{std::max(raw.u_min, 0.0), std::max(raw.v_min, 0.0), std::min(raw.u_max, w),
                     std::min(raw.v_max, h)};
  if (clipped.u_min > clipped.u_max || clipped.v_min > clipped.v_max) return std::nullopt;
  const bool truncated = raw.u_min < 0.0 || raw.v_min < 0.0 || raw.u_max > w || raw.v_max > h;
  return FullBBox{clipped, truncated};
}

BoxI to_pixel_box(const BoxF& box, int width, int height) {
  auto clamp_x = [&](double v) { return static_cast<int>(std::clamp(v, 0.0, double(width - 1))); };
  auto clamp_y = [&](double v) { return static_cast<int>(std::clamp(v, 0.0, double(height - 1))); };
  BoxI out{clamp_x(std::floor(box.u_min)), clamp_y(std::floor(box.v_min)), clamp_x(std::ceil(box.u_max) - 1.0),
           clamp_y(std::ceil(box.v_max) - 1.0)};
  out.x_max = std::max(out.x_max, out.x_min);
  out.y_max = std::max(out.y_max, out.y_min);
  return out;
}

Extrinsics look_at(Vec3 eye, Vec3 target) {
  const Vec3 forward = normalized(target - eye);
  Vec3 right = cross(forward, Vec3{0, 0, 1});
  if (norm(right) < 1e-12) right = Vec3{1, 0, 0};  // looking straight down
  right = normalized(right);
  const Vec3 down = cross(forward, right);
  Extrinsics ext;
  ext.rotation = Mat3{{right.x, right.y, right.z, down.x, down.y, down.z, forward.x, forward.y, forward.z}};
  ext.translation = (ext.rotation * eye) * -1.0;
  return ext;
}

}  // namespace scenesynth::camgeom
