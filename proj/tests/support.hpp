#pragma once

// Independent oracles and fixtures shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "scenesynth/camgeom.hpp"
#include "scenesynth/evalkit.hpp"
#include "scenesynth/meshgen.hpp"
#include "scenesynth/rasterlab.hpp"
#include "scenesynth/rng.hpp"

namespace oracle {

using namespace scenesynth;

// ---- projection ---------------------------------------------------------

struct Projected {
  long double u, v, depth;
};

/// Builds P = K [R | t] as a 3x4 matrix in long double and applies it to (x, y, z, 1).
inline Projected brute_project(const std::array<double, 9>& R, const std::array<double, 3>& t, double f, double dx,
                               double dy, double u0, double v0, const std::array<double, 3>& p) {
  long double K[3][3] = {{f / (long double)dx, 0, u0}, {0, f / (long double)dy, v0}, {0, 0, 1}};
  long double Rt[3][4];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) Rt[r][c] = R[static_cast<std::size_t>(r * 3 + c)];
    Rt[r][3] = t[static_cast<std::size_t>(r)];
  }
  long double P[3][4] = {};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      for (int k = 0; k < 3; ++k) P[r][c] += K[r][k] * Rt[k][c];
  const long double X[4] = {p[0], p[1], p[2], 1.0L};
  long double h[3] = {};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) h[r] += P[r][c] * X[c];
  long double depth = 0;
  for (int c = 0; c < 4; ++c) depth += Rt[2][c] * X[c];
  return {h[0] / h[2], h[1] / h[2], depth};
}

/// Uniform random rotation from a unit quaternion.
inline Mat3 random_rotation(Rng& rng) {
  double q[4];
  double n = 0;
  do {
    n = 0;
    for (double& c : q) {
      c = rng.uniform(-1.0, 1.0);
      n += c * c;
    }
  } while (n > 1.0 || n < 1e-6);
  n = std::sqrt(n);
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  return {{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y), 2 * (x * y + w * z),
           1 - 2 * (x * x + z * z), 2 * (y * z - w * x), 2 * (x * z - w * y), 2 * (y * z + w * x),
           1 - 2 * (x * x + y * y)}};
}

// ---- scenes of humanoids --------------------------------------------------

struct Person {
  std::uint32_t id;
  meshgen::TriangleMesh mesh;
  Pose pose;
};

inline camgeom::CameraModel make_camera(Vec3 eye, Vec3 target, double f_px, int w, int h) {
  camgeom::CameraModel cam;
  cam.extrinsics = camgeom::look_at(eye, target);
  cam.intrinsics = {f_px * 0.01, 0.01, 0.01, w / 2.0, h / 2.0, w, h};
  return cam;
}

inline Person make_person(std::uint32_t id, Vec2 pos, double heading, std::uint64_t seed, double phase) {
  auto params = meshgen::appearance_from_seed(seed);
  params.gait_phase = phase;
  return {id, meshgen::build_humanoid(params), {Mat3::rotation_z(heading), {pos.x, pos.y, 0.0}}};
}

inline std::vector<rasterlab::PosedMesh> posed(const std::vector<Person>& people) {
  std::vector<rasterlab::PosedMesh> out;
  for (const auto& p : people) out.push_back({p.id, &p.mesh, p.pose});
  return out;
}

/// Random camera looking down at the ground, plus a point on the ground in view.
struct RandomView {
  camgeom::CameraModel cam;
  Vec2 target;
  Vec2 toward_camera;  // unit ground direction from target toward the camera
};

inline RandomView random_view(Rng& rng, int w, int h) {
  const double yaw = rng.uniform(0.0, 2 * 3.14159265358979);
  const double dist = rng.uniform(6000.0, 12000.0);
  const double height = rng.uniform(2000.0, 7000.0);
  const Vec2 target{rng.uniform(-2000.0, 2000.0), rng.uniform(-2000.0, 2000.0)};
  const Vec2 back{std::cos(yaw), std::sin(yaw)};
  const Vec3 eye{target.x + back.x * dist, target.y + back.y * dist, height};
  const double f_px = rng.uniform(0.9, 1.4) * h * dist / 2500.0;
  return {make_camera(eye, {target.x, target.y, 900.0}, f_px, w, h), target, back};
}

// ---- rasterizer oracle: per-pixel ray casting --------------------------------

/// Depth (camera z) where the ray through (px, py) hits the triangle, or +inf.
inline double ray_hit(const Vec3& c0, const Vec3& c1, const Vec3& c2, const Vec3& dir) {
  // Solve c0 + a (c1 - c0) + b (c2 - c0) = s dir with Cramer's rule.
  const Vec3 e1 = c1 - c0, e2 = c2 - c0;
  const Vec3 m = dir * -1.0;
  auto det3 = [](Vec3 a, Vec3 b, Vec3 c) { return dot(a, cross(b, c)); };
  const double d = det3(e1, e2, m);
  if (d == 0.0) return std::numeric_limits<double>::infinity();
  const Vec3 rhs = c0 * -1.0;
  const double a = det3(rhs, e2, m) / d;
  const double b = det3(e1, rhs, m) / d;
  const double s = det3(e1, e2, rhs) / d;
  if (a < 0 || b < 0 || a + b > 1 || s <= camgeom::kNearPlaneMm) return std::numeric_limits<double>::infinity();
  return s * dir.z;
}

/// Instance buffer by brute force: every pixel center against every triangle, nearest wins,
/// depths within 0.01 mm resolve to the lower id.
inline Image<std::uint32_t> raycast_instances(const std::vector<Person>& people, const camgeom::CameraModel& cam) {
  const auto& in = cam.intrinsics;
  const auto& ex = cam.extrinsics;
  struct Tri {
    Vec3 c[3];
    double u0, u1, v0, v1;
    std::uint32_t id;
  };
  std::vector<Tri> tris;
  for (const auto& p : people) {
    for (const auto& t : p.mesh.triangles) {
      Tri tri{};
      tri.id = p.id;
      tri.u0 = tri.v0 = std::numeric_limits<double>::infinity();
      tri.u1 = tri.v1 = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < 3; ++k) {
        const Vec3 w = p.pose.apply(p.mesh.vertices[t[static_cast<std::size_t>(k)]]);
        Vec3 c = ex.rotation * w + ex.translation;
        tri.c[k] = c;
        // Bounds only for culling; every fixture keeps geometry well in front of the camera.
        const double u = in.focal_mm * c.x / c.z / in.pitch_x_mm + in.u0;
        const double v = in.focal_mm * c.y / c.z / in.pitch_y_mm + in.v0;
        tri.u0 = std::min(tri.u0, u);
        tri.u1 = std::max(tri.u1, u);
        tri.v0 = std::min(tri.v0, v);
        tri.v1 = std::max(tri.v1, v);
      }
      tris.push_back(tri);
    }
  }
  Image<std::uint32_t> out(in.width, in.height, 0);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const Vec3 dir{(px - in.u0) * in.pitch_x_mm / in.focal_mm, (py - in.v0) * in.pitch_y_mm / in.focal_mm, 1.0};
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_id = 0;
      for (const auto& t : tris) {
        if (px < t.u0 - 1 || px > t.u1 + 1 || py < t.v0 - 1 || py > t.v1 + 1) continue;
        const double z = ray_hit(t.c[0], t.c[1], t.c[2], dir);
        if (!std::isfinite(z)) continue;
        const bool tie = std::abs(z - best) < 0.01;
        if ((tie && t.id < best_id) || (!tie && z < best)) {
          best = tie ? std::min(z, best) : z;
          best_id = t.id;
        }
      }
      out(x, y) = best_id;
    }
  }
  return out;
}

inline std::size_t count_id(const Image<std::uint32_t>& img, std::uint32_t id) {
  return static_cast<std::size_t>(std::count(img.pixels().begin(), img.pixels().end(), id));
}

/// Full render + solo renders + projected boxes + label_frame for a list of people.
inline std::vector<rasterlab::AnnotationRecord> auto_label(const rasterlab::RenderedFrame& frame,
                                                           const std::vector<Person>& people,
                                                           const camgeom::CameraModel& cam) {
  std::vector<rasterlab::SoloRender> solos;
  std::vector<rasterlab::InstanceBox> boxes;
  for (const auto& pm : posed(people)) {
    std::vector<camgeom::Vec3World> world;
    for (const auto& v : pm.mesh->vertices) world.push_back(camgeom::Vec3World::from(pm.pose.apply(v)));
    if (auto b = camgeom::project_bbox(world, cam)) boxes.push_back({pm.instance_id, *b});
    solos.push_back(rasterlab::render_solo(pm, cam));
  }
  return rasterlab::label_frame(frame, solos, boxes);
}

// ---- VOC 11-point AP oracle ----------------------------------------------

/// Matching written from the rule text: for each detection in descending score
/// (stable), the unmatched non-difficult gt or any difficult gt in its frame with
/// the highest IoU; TP if >= threshold and not difficult, ignored if difficult.
/// Returns +1 (TP), 0 (FP), -1 (ignored) in processing order.
inline std::vector<int> brute_match(const std::vector<evalkit::ScoredBox>& dets,
                                    const std::vector<evalkit::GtBox>& gts, double thr) {
  auto area = [](const BoxF& b) { return std::max(0.0, b.u_max - b.u_min) * std::max(0.0, b.v_max - b.v_min); };
  auto overlap = [&](const BoxF& a, const BoxF& b) {
    const BoxF i{std::max(a.u_min, b.u_min), std::max(a.v_min, b.v_min), std::min(a.u_max, b.u_max),
                 std::min(a.v_max, b.v_max)};
    const double inter = (i.u_max > i.u_min && i.v_max > i.v_min) ? area(i) : 0.0;
    const double uni = area(a) + area(b) - inter;
    return uni > 0 ? inter / uni : 0.0;
  };
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dets[a].score > dets[b].score; });
  std::vector<char> used(gts.size(), 0);
  std::vector<int> out;
  for (auto d : order) {
    double best = -1;
    int arg = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].frame != dets[d].frame) continue;
      if (!gts[g].difficult && used[g]) continue;
      const double o = overlap(dets[d].box, gts[g].box);
      if (o > best) {
        best = o;
        arg = static_cast<int>(g);
      }
    }
    if (arg < 0 || best < thr) {
      out.push_back(0);
    } else if (gts[static_cast<std::size_t>(arg)].difficult) {
      out.push_back(-1);
    } else {
      used[static_cast<std::size_t>(arg)] = 1;
      out.push_back(1);
    }
  }
  return out;
}

/// For each anchor k/10, the best precision over every prefix whose recall reaches it.
inline double brute_ap11(const std::vector<int>& kinds, int total_gt) {
  double sum = 0.0;
  for (int k = 0; k <= 10; ++k) {
    double best = 0.0;
    for (std::size_t end = 1; end <= kinds.size(); ++end) {
      if (kinds[end - 1] < 0) continue;  // prefixes end on scored, non-ignored detections
      int tp = 0, n = 0;
      for (std::size_t i = 0; i < end; ++i) {
        if (kinds[i] < 0) continue;
        ++n;
        tp += kinds[i];
      }
      if (tp * 10 >= k * total_gt) best = std::max(best, static_cast<double>(tp) / n);
    }
    sum += best;
  }
  return sum / 11.0;
}

}  // namespace oracle
