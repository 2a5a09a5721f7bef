#include "scenesynth/rasterlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <tuple>

namespace scenesynth::rasterlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Clip slightly in front of the near plane so every surviving vertex projects.
constexpr double kClipZ = camgeom::kNearPlaneMm * 1.001;

struct ScreenVertex {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

struct ScreenTriangle {
  std::array<ScreenVertex, 3> v;
  Vec3 normal;  // world space, unnormalized
  Rgb color;
};

struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;  // inclusive
  int y1 = -1;
};

double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (b.u - a.u) * (py - a.v) - (b.v - a.v) * (px - a.u);
}

bool top_left(const ScreenVertex& a, const ScreenVertex& b) {
  const double du = b.u - a.u;
  const double dv = b.v - a.v;
  return (dv == 0.0 && du > 0.0) || dv < 0.0;
}

/// Projects one world triangle, clipping it against the near plane; appends 0..2 screen triangles.
void setup_triangle(const std::array<Vec3, 3>& world, Rgb color, const camgeom::CameraModel& cam,
                    std::vector<ScreenTriangle>& out) {
  std::array<Vec3, 3> c{};
  for (int i = 0; i < 3; ++i)
    c[i] = camgeom::world_to_camera(camgeom::Vec3World::from(world[i]), cam.extrinsics).vec();

  // Sutherland-Hodgman against z >= kClipZ.
  std::array<Vec3, 4> poly{};
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = c[i];
    const Vec3& b = c[(i + 1) % 3];
    const bool a_in = a.z >= kClipZ;
    const bool b_in = b.z >= kClipZ;
    if (a_in) poly[n++] = a;
    if (a_in != b_in) {
      const double t = (kClipZ - a.z) / (b.z - a.z);
      Vec3 p = a + (b - a) * t;
      p.z = kClipZ;
      poly[n++] = p;
    }
  }
  if (n < 3) return;

  const Vec3 normal = cross(world[1] - world[0], world[2] - world[0]);
  std::array<ScreenVertex, 4> s{};
  for (int i = 0; i < n; ++i) {
    const auto px = camgeom::camera_to_pixel(camgeom::Vec3Cam::from(poly[i]), cam.intrinsics);
    s[i] = {px.u, px.v, px.depth};
  }
  for (int i = 1; i + 1 < n; ++i) out.push_back({{s[0], s[i], s[i + 1]}, normal, color});
}

std::vector<ScreenTriangle> setup_mesh(const PosedMesh& pm, const camgeom::CameraModel& cam) {
  std::vector<ScreenTriangle> out;
  const auto& mesh = *pm.mesh;
  out.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    setup_triangle({pm.pose.apply(mesh.vertices[tri[0]]), pm.pose.apply(mesh.vertices[tri[1]]),
                    pm.pose.apply(mesh.vertices[tri[2]])},
                   mesh.triangle_colors[t], cam, out);
  }
  return out;
}

/// Calls fn(x, y, depth) for every pixel center covered by the triangle inside `clip`.
template <class Fn>
void scan_triangle(const ScreenTriangle& tri, const PixelRect& clip, Fn&& fn) {
  ScreenVertex v0 = tri.v[0];
  ScreenVertex v1 = tri.v[1];
  ScreenVertex v2 = tri.v[2];
  double area = edge(v0, v1, v2.u, v2.v);
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(v1, v2);
    area = -area;
  }

  const double min_u = std::min({v0.u, v1.u, v2.u});
  const double max_u = std::max({v0.u, v1.u, v2.u});
  const double min_v = std::min({v0.v, v1.v, v2.v});
  const double max_v = std::max({v0.v, v1.v, v2.v});
  auto lo = [](double m, int bound) { return static_cast<int>(std::max(std::ceil(m - 0.5), double(bound))); };
  auto hi = [](double m, int bound) { return static_cast<int>(std::min(std::floor(m - 0.5), double(bound))); };
  if (max_u < clip.x0 || min_u > clip.x1 + 1.0 || max_v < clip.y0 || min_v > clip.y1 + 1.0) return;
  const int x_begin = lo(min_u, clip.x0);
  const int x_end = hi(max_u, clip.x1);
  const int y_begin = lo(min_v, clip.y0);
  const int y_end = hi(max_v, clip.y1);

  const bool tl0 = top_left(v1, v2);
  const bool tl1 = top_left(v2, v0);
  const bool tl2 = top_left(v0, v1);
  const double inv_z0 = 1.0 / v0.z;
  const double inv_z1 = 1.0 / v1.z;
  const double inv_z2 = 1.0 / v2.z;

  for (int y = y_begin; y <= y_end; ++y) {
    const double py = y + 0.5;
    for (int x = x_begin; x <= x_end; ++x) {
      const double px = x + 0.5;
      const double w0 = edge(v1, v2, px, py);
      const double w1 = edge(v2, v0, px, py);
      const double w2 = edge(v0, v1, px, py);
      if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
      if ((w0 == 0.0 && !tl0) || (w1 == 0.0 && !tl1) || (w2 == 0.0 && !tl2)) continue;
      const double inv_z = (w0 * inv_z0 + w1 * inv_z1 + w2 * inv_z2) / area;
      fn(x, y, 1.0 / inv_z);
    }
  }
}

/// Whether a fragment (depth, id) replaces the stored one.
bool wins(double depth, std::uint32_t id, double stored_depth, std::uint32_t stored_id) {
  if (stored_id == 0 || id == stored_id) return depth < stored_depth;
  if (depth < stored_depth - kDepthTieMm) return true;
  return depth <= stored_depth + kDepthTieMm && id < stored_id;
}

Rgb shade(Rgb base, Vec3 normal, Vec3 light) {
  const double n = norm(normal);
  const double lambert = n > 0.0 ? std::max(0.0, dot(normal, light) / n) : 0.0;
  const double k = 0.45 + 0.55 * lambert;
  auto ch = [k](std::uint8_t c) { return static_cast<std::uint8_t>(std::lround(std::min(255.0, c * k))); };
  return {ch(base.r), ch(base.g), ch(base.b)};
}

PixelRect full_rect(const camgeom::CameraModel& cam) {
  return {0, 0, cam.intrinsics.width - 1, cam.intrinsics.height - 1};
}

meshgen::TriangleMesh obstacle_mesh(const scenesim::Obstacle& o, Rgb color) {
  meshgen::TriangleMesh mesh;
  const auto& fp = o.footprint.vertices;
  const auto n = static_cast<std::uint32_t>(fp.size());
  for (const auto& p : fp) mesh.vertices.push_back({p.x, p.y, 0.0});
  for (const auto& p : fp) mesh.vertices.push_back({p.x, p.y, o.height_mm});
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    mesh.triangles.push_back({i, j, n + j});
    mesh.triangles.push_back({i, n + j, n + i});
  }
  for (std::uint32_t i = 1; i + 1 < n; ++i) mesh.triangles.push_back({n, n + i, n + i + 1});
  // Orient walls outward for shading.
  Vec2 centroid;
  for (const auto& p : fp) centroid = centroid + p * (1.0 / n);
  for (auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]];
    const Vec3 nrm = cross(mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a);
    const bool cap = std::abs(nrm.z) > 1e-9 * norm(nrm);
    const Vec3 out = cap ? Vec3{0, 0, 1} : Vec3{a.x - centroid.x, a.y - centroid.y, 0.0};
    if (dot(nrm, out) < 0.0) std::swap(t[1], t[2]);
  }
  mesh.triangle_colors.assign(mesh.triangles.size(), color);
  return mesh;
}

std::uint64_t tile_hash(long long i, long long j, std::uint64_t seed) {
  return mix_seed(mix_seed(static_cast<std::uint64_t>(i), seed), static_cast<std::uint64_t>(j));
}

}  // namespace

std::size_t SoloRender::pixel_count() const {
  const auto px = depth.pixels();
  return static_cast<std::size_t>(std::count_if(px.begin(), px.end(), [](double d) { return d < kInf; }));
}

bool SoloRender::covers(int x, int y) const {
  const int lx = x - origin_x;
  const int ly = y - origin_y;
  return depth.contains(lx, ly) && depth(lx, ly) < kInf;
}

Rgb instance_color(std::uint32_t id) {
  const std::uint64_t h = mix_seed(id, 0x636f6c6f72);
  Rgb c{static_cast<std::uint8_t>(h & 0xff), static_cast<std::uint8_t>((h >> 8) & 0xff),
        static_cast<std::uint8_t>((h >> 16) & 0xff)};
  if (c == kWhite) c.b = 254;
  return c;
}

SceneLayer blank_layer(int width, int height, Rgb color) {
  return {RgbImage(width, height, color), Image<double>(width, height, kInf)};
}

SceneLayer build_scene_layer(const scenesim::SceneDescription& scene, const BackgroundStyle& style) {
  const auto& cam = scene.camera;
  const int w = cam.intrinsics.width;
  const int h = cam.intrinsics.height;
  SceneLayer layer;
  layer.static_depth = Image<double>(w, h, kInf);
  const bool procedural = scene.background == "procedural";

  if (procedural) {
    layer.plate = RgbImage(w, h, style.sky);
    const Vec3 center = cam.center();
    const Mat3 rt = cam.extrinsics.rotation.transposed();
    const auto& in = cam.intrinsics;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Vec3 ray_cam{(x + 0.5 - in.u0) * in.pitch_x_mm / in.focal_mm,
                           (y + 0.5 - in.v0) * in.pitch_y_mm / in.focal_mm, 1.0};
        const Vec3 ray = rt * ray_cam;
        if (!(ray.z < 0.0)) {
          const double t = std::clamp(0.5 + ray.z, 0.0, 1.0);
          layer.plate(x, y) = {static_cast<std::uint8_t>(style.sky.r * (0.85 + 0.15 * t)),
                               static_cast<std::uint8_t>(style.sky.g * (0.85 + 0.15 * t)),
                               static_cast<std::uint8_t>(style.sky.b * (0.85 + 0.15 * t))};
          continue;
        }
        const double s = -center.z / ray.z;
        const Vec2 g{center.x + s * ray.x, center.y + s * ray.y};
        Rgb base = style.offwalk;
        double grout = 1.0;
        const long long ti = static_cast<long long>(std::floor(g.x / style.tile_mm));
        const long long tj = static_cast<long long>(std::floor(g.y / style.tile_mm));
        if (std::any_of(scene.walkable.begin(), scene.walkable.end(),
                        [&](const scenesim::Polygon& p) { return p.contains(g); })) {
          base = ((ti + tj) & 1) ? style.ground_a : style.ground_b;
          const double fx = g.x - ti * style.tile_mm;
          const double fy = g.y - tj * style.tile_mm;
          if (fx < 25.0 || fy < 25.0) grout = 0.7;
        }
        const double jitter = 0.9 + 0.2 * static_cast<double>(tile_hash(ti, tj, style.texture_seed) & 0xffff) / 65535.0;
        const double k = grout * jitter;
        auto ch = [k](std::uint8_t c) { return static_cast<std::uint8_t>(std::lround(std::min(255.0, c * k))); };
        layer.plate(x, y) = {ch(base.r), ch(base.g), ch(base.b)};
      }
    }
  } else {
    layer.plate = read_ppm(scene.background);
    if (layer.plate.width() != w || layer.plate.height() != h)
      throw ImageSizeMismatch("background plate " + scene.background + " does not match the camera image size");
  }

  const Vec3 light = normalized(style.light_dir);
  for (const auto& obstacle : scene.obstacles) {
    const auto mesh = obstacle_mesh(obstacle, style.obstacle);
    const PosedMesh pm{1, &mesh, Pose{}};
    for (const auto& tri : setup_mesh(pm, cam)) {
      const Rgb shaded = shade(tri.color, tri.normal, light);
      scan_triangle(tri, full_rect(cam), [&](int x, int y, double z) {
        if (z < layer.static_depth(x, y)) {
          layer.static_depth(x, y) = z;
          if (procedural) layer.plate(x, y) = shaded;
        }
      });
    }
  }
  return layer;
}

RenderedFrame rasterize(const SceneLayer& layer, std::span<const PosedMesh> meshes, const camgeom::CameraModel& cam,
                        RenderMode mode, Vec3 light_dir) {
  const int w = cam.intrinsics.width;
  const int h = cam.intrinsics.height;
  const bool composite = mode == RenderMode::Composite;
  if (composite && (layer.plate.width() != w || layer.plate.height() != h))
    throw ImageSizeMismatch("background plate size differs from the camera image size");
  const bool occluders = !layer.static_depth.empty();
  if (occluders && (layer.static_depth.width() != w || layer.static_depth.height() != h))
    throw ImageSizeMismatch("static depth size differs from the camera image size");

  RenderedFrame frame{composite ? layer.plate : RgbImage(w, h, kWhite), Image<std::uint32_t>(w, h, 0),
                      Image<double>(w, h, kInf)};
  const Vec3 light = normalized(light_dir);
  const PixelRect clip = full_rect(cam);
  for (const auto& pm : meshes) {
    for (const auto& tri : setup_mesh(pm, cam)) {
      const Rgb shaded = composite ? shade(tri.color, tri.normal, light) : Rgb{};
      scan_triangle(tri, clip, [&](int x, int y, double z) {
        if (occluders && z >= layer.static_depth(x, y)) return;
        if (!wins(z, pm.instance_id, frame.depth(x, y), frame.instance(x, y))) return;
        frame.depth(x, y) = z;
        frame.instance(x, y) = pm.instance_id;
        if (composite) frame.color(x, y) = shaded;
      });
    }
  }

  if (!composite) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::uint32_t id = frame.instance(x, y);
        if (id == 0) continue;
        frame.color(x, y) = mode == RenderMode::Silhouette ? kBlack : instance_color(id);
      }
    }
  }
  return frame;
}

SoloRender render_solo(const PosedMesh& pm, const camgeom::CameraModel& cam) {
  const auto tris = setup_mesh(pm, cam);
  SoloRender solo;
  solo.instance_id = pm.instance_id;
  double min_u = kInf, min_v = kInf, max_u = -kInf, max_v = -kInf;
  for (const auto& t : tris) {
    for (const auto& v : t.v) {
      min_u = std::min(min_u, v.u);
      min_v = std::min(min_v, v.v);
      max_u = std::max(max_u, v.u);
      max_v = std::max(max_v, v.v);
    }
  }
  const PixelRect image = full_rect(cam);
  if (tris.empty() || max_u < 0.0 || max_v < 0.0 || min_u > image.x1 + 1.0 || min_v > image.y1 + 1.0) return solo;
  const PixelRect window{static_cast<int>(std::clamp(std::floor(min_u), 0.0, double(image.x1))),
                         static_cast<int>(std::clamp(std::floor(min_v), 0.0, double(image.y1))),
                         static_cast<int>(std::clamp(std::ceil(max_u), 0.0, double(image.x1))),
                         static_cast<int>(std::clamp(std::ceil(max_v), 0.0, double(image.y1)))};
  solo.origin_x = window.x0;
  solo.origin_y = window.y0;
  solo.depth = Image<double>(window.x1 - window.x0 + 1, window.y1 - window.y0 + 1, kInf);
  for (const auto& tri : tris) {
    scan_triangle(tri, window, [&](int x, int y, double z) {
      double& d = solo.depth(x - window.x0, y - window.y0);
      d = std::min(d, z);
    });
  }
  return solo;
}

std::vector<AnnotationRecord> label_frame(const RenderedFrame& frame, std::span<const SoloRender> solo_renders,
                                          std::span<const InstanceBox> boxes) {
  std::map<std::uint32_t, const SoloRender*> solo_by_id;
  for (const auto& s : solo_renders) solo_by_id[s.instance_id] = &s;

  struct Visible {
    std::size_t count = 0;
    BoxI box{};
  };
  std::map<std::uint32_t, Visible> visible;
  const int w = frame.instance.width();
  const int h = frame.instance.height();
  for (int y = 0; y < h; ++y) {
    const auto row = frame.instance.row(y);
    for (int x = 0; x < w; ++x) {
      const std::uint32_t id = row[static_cast<std::size_t>(x)];
      if (id == 0) continue;
      auto [it, inserted] = visible.try_emplace(id, Visible{0, BoxI{x, y, x, y}});
      auto& vis = it->second;
      ++vis.count;
      vis.box = box_union(vis.box, BoxI{x, y, x, y});
    }
  }
  for (const auto& [id, vis] : visible) {
    if (!solo_by_id.contains(id)) throw MissingSoloRender("instance " + std::to_string(id) + " has no solo render");
  }

  std::vector<AnnotationRecord> records;
  records.reserve(boxes.size());
  for (const auto& ib : boxes) {
    const auto solo = solo_by_id.find(ib.instance_id);
    if (solo == solo_by_id.end())
      throw MissingSoloRender("instance " + std::to_string(ib.instance_id) + " has no solo render");
    AnnotationRecord rec;
    rec.instance_id = ib.instance_id;
    rec.truncated = ib.box.truncated;
    rec.full_bbox = camgeom::to_pixel_box(ib.box.box, w, h);
    const std::size_t solo_count = solo->second->pixel_count();
    if (const auto vis = visible.find(ib.instance_id); vis != visible.end() && solo_count > 0) {
      rec.visible_bbox = vis->second.box;
      rec.visibility = std::min(1.0, static_cast<double>(vis->second.count) / static_cast<double>(solo_count));
      // Geometry clipped at the near plane can project past the vertex box.
      rec.full_bbox = box_union(rec.full_bbox, vis->second.box);
    }
    records.push_back(rec);
  }
  std::sort(records.begin(), records.end(),
            [](const AnnotationRecord& a, const AnnotationRecord& b) { return a.instance_id < b.instance_id; });
  return records;
}

std::vector<BoxI> ccl_label(const Mask& binary) {
  const int w = binary.width();
  const int h = binary.height();
  Image<std::uint32_t> labels(w, h, 0);
  std::vector<std::uint32_t> parent{0};

  auto find = [&](std::uint32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  // First pass: provisional labels from the already-visited 8-neighbors.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!binary(x, y)) continue;
      std::uint32_t label = 0;
      for (const auto& [dx, dy] : {std::pair{-1, 0}, {-1, -1}, {0, -1}, {1, -1}}) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (!binary.contains(nx, ny) || labels(nx, ny) == 0) continue;
        if (label == 0) {
          label = labels(nx, ny);
        } else {
          unite(label, labels(nx, ny));
        }
      }
      if (label == 0) {
        label = static_cast<std::uint32_t>(parent.size());
        parent.push_back(label);
      }
      labels(x, y) = label;
    }
  }

  // Second pass: resolve to roots and accumulate extents.
  std::map<std::uint32_t, BoxI> extents;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (labels(x, y) == 0) continue;
      const std::uint32_t root = find(labels(x, y));
      auto [it, inserted] = extents.try_emplace(root, BoxI{x, y, x, y});
      if (!inserted) it->second = box_union(it->second, BoxI{x, y, x, y});
    }
  }
  std::vector<BoxI> boxes;
  boxes.reserve(extents.size());
  for (const auto& [root, box] : extents) boxes.push_back(box);
  std::sort(boxes.begin(), boxes.end(), [](const BoxI& a, const BoxI& b) {
    return std::tie(a.y_min, a.x_min, a.y_max, a.x_max) < std::tie(b.y_min, b.x_min, b.y_max, b.x_max);
  });
  return boxes;
}

std::optional<BoxI> whitebg_bbox(const RgbImage& image, Rgb bg) {
  std::optional<BoxI> box;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (image(x, y) == bg) continue;
      const BoxI px{x, y, x, y};
      box = box ? box_union(*box, px) : px;
    }
  }
  return box;
}

Mask foreground_mask(const RenderedFrame& frame) {
  Mask mask(frame.instance.width(), frame.instance.height(), 0);
  const auto src = frame.instance.pixels();
  auto dst = mask.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] != 0 ? 1 : 0;
  return mask;
}

}  // namespace scenesynth::rasterlab
