#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "support.hpp"

using namespace scenesynth;
using namespace scenesynth::rasterlab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Identity extrinsics: world coordinates are camera coordinates; 100 px focal length.
camgeom::CameraModel screen_camera(int w = 100, int h = 100) {
  return {{Mat3::identity(), {0, 0, 0}}, {1.0, 0.01, 0.01, w / 2.0, h / 2.0, w, h}};
}

// Point that projects to pixel (u, v) at depth z under screen_camera(100, 100).
Vec3 at(double u, double v, double z) { return {(u - 50) * z / 100, (v - 50) * z / 100, z}; }

meshgen::TriangleMesh screen_triangle(Vec2 a, Vec2 b, Vec2 c, double z) {
  meshgen::TriangleMesh m;
  m.vertices = {at(a.x, a.y, z), at(b.x, b.y, z), at(c.x, c.y, z)};
  m.triangles = {{0, 1, 2}};
  m.triangle_colors = {Rgb{200, 0, 0}};
  return m;
}

meshgen::TriangleMesh screen_square(double u0, double v0, double u1, double v1, double z) {
  meshgen::TriangleMesh m;
  m.vertices = {at(u0, v0, z), at(u1, v0, z), at(u1, v1, z), at(u0, v1, z)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.triangle_colors = {Rgb{0, 200, 0}, Rgb{0, 200, 0}};
  return m;
}

Mask blob_mask(int w, int h, std::initializer_list<BoxI> boxes) {
  Mask m(w, h, 0);
  for (const auto& b : boxes)
    for (int y = b.y_min; y <= b.y_max; ++y)
      for (int x = b.x_min; x <= b.x_max; ++x) m(x, y) = 1;
  return m;
}

}  // namespace

TEST_CASE("empty scene renders the plate") {
  const auto cam = screen_camera(40, 30);
  SceneLayer layer = blank_layer(40, 30, Rgb{10, 20, 30});
  layer.plate(3, 4) = Rgb{1, 2, 3};
  const auto f = rasterize(layer, {}, cam, RenderMode::Composite);
  CHECK(f.color == layer.plate);
  for (auto id : f.instance.pixels()) CHECK(id == 0);
  for (auto d : f.depth.pixels()) CHECK(d == kInf);
}

TEST_CASE("plate size must match the camera") {
  const auto cam = screen_camera(40, 30);
  CHECK_THROWS_AS(rasterize(blank_layer(41, 30), {}, cam, RenderMode::Composite), ImageSizeMismatch);
}

TEST_CASE("nearer triangle wins contested pixels") {
  const auto cam = screen_camera();
  const auto near_tri = screen_triangle({10, 10}, {90, 20}, {30, 85}, 1000);
  const auto far_tri = screen_triangle({10, 10}, {90, 20}, {30, 85}, 2000);
  for (auto [near_id, far_id] : {std::pair{1u, 2u}, std::pair{2u, 1u}}) {
    const std::vector<PosedMesh> meshes{{far_id, &far_tri, {}}, {near_id, &near_tri, {}}};
    const auto f = rasterize(blank_layer(100, 100), meshes, cam, RenderMode::Composite);
    std::size_t covered = 0;
    for (int y = 0; y < 100; ++y)
      for (int x = 0; x < 100; ++x) {
        if (f.instance(x, y) == 0) continue;
        ++covered;
        CHECK(f.instance(x, y) == near_id);
        CHECK(f.depth(x, y) == doctest::Approx(1000.0));
      }
    CHECK(covered > 1000);
  }
}

TEST_CASE("depth ties resolve to the lower id") {
  const auto cam = screen_camera();
  const auto a = screen_square(20, 20, 60, 60, 1500);
  const auto b = screen_square(20, 20, 60, 60, 1500.005);
  const std::vector<PosedMesh> meshes{{7, &a, {}}, {3, &b, {}}};
  const auto f = rasterize(blank_layer(100, 100), meshes, cam, RenderMode::Silhouette);
  CHECK(f.instance(40, 40) == 3);
}

TEST_CASE("pixel-aligned square covers exactly its pixels") {
  const auto cam = screen_camera();
  const auto sq = screen_square(10, 10, 20, 20, 1000);
  const std::vector<PosedMesh> meshes{{1, &sq, {}}};
  const auto f = rasterize(blank_layer(100, 100), meshes, cam, RenderMode::Silhouette);
  CHECK(oracle::count_id(f.instance, 1) == 100);
  const auto boxes = ccl_label(foreground_mask(f));
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0] == BoxI{10, 10, 19, 19});
}

TEST_CASE("render modes agree on instance and depth buffers") {
  const auto cam = oracle::make_camera({0, -7000, 2500}, {0, 0, 900}, 500, 160, 120);
  const std::vector<oracle::Person> people{oracle::make_person(1, {0, 0}, 0.3, 11, 0.2),
                                           oracle::make_person(2, {300, -1500}, 2.0, 12, 0.7)};
  const auto meshes = oracle::posed(people);
  const auto layer = blank_layer(160, 120);
  const auto c = rasterize(layer, meshes, cam, RenderMode::Composite);
  const auto s = rasterize(layer, meshes, cam, RenderMode::Silhouette);
  const auto i = rasterize(layer, meshes, cam, RenderMode::InstanceColor);
  CHECK(c.instance == s.instance);
  CHECK(c.instance == i.instance);
  CHECK(c.depth == s.depth);
  CHECK(c.depth == i.depth);

  std::size_t nonzero = 0, black = 0;
  for (auto id : s.instance.pixels()) nonzero += id != 0;
  for (auto px : s.color.pixels()) black += px == kBlack;
  CHECK(nonzero == black);
  CHECK(nonzero > 0);
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x) {
      CHECK((c.instance(x, y) != 0) == (c.depth(x, y) < kInf));
      if (i.instance(x, y)) CHECK(i.color(x, y) == instance_color(i.instance(x, y)));
    }
}

TEST_CASE("instance buffer matches the ray-cast oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto view = oracle::random_view(rng, 120, 90);
    const Vec2 lateral{-view.toward_camera.y, view.toward_camera.x};
    const std::vector<oracle::Person> people{
        oracle::make_person(1, view.target, rng.uniform(-3, 3), rng.next(), rng.uniform()),
        oracle::make_person(2, view.target + view.toward_camera * 1500.0 + lateral * rng.uniform(-400, 400),
                            rng.uniform(-3, 3), rng.next(), rng.uniform())};
    const auto f = rasterize(blank_layer(120, 90), oracle::posed(people), view.cam, RenderMode::Silhouette);
    CHECK(f.instance == oracle::raycast_instances(people, view.cam));
  }
}

TEST_CASE("full occlusion on one camera ray") {
  const auto cam = oracle::make_camera({0, -8000, 900}, {0, 0, 900}, 300, 160, 120);
  // Both people face the same way with the same appearance; the rear one is 1 m further away.
  const std::vector<oracle::Person> people{oracle::make_person(1, {0, -1000}, 0.0, 5, 0.0),
                                           oracle::make_person(2, {0, 0}, 0.0, 5, 0.0)};
  const auto f = rasterize(blank_layer(160, 120), oracle::posed(people), cam, RenderMode::Composite);
  const auto recs = oracle::auto_label(f, people, cam);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].instance_id == 1);
  CHECK(recs[0].visibility == 1.0);
  CHECK(recs[1].instance_id == 2);
  CHECK(recs[1].visibility == 0.0);
  CHECK_FALSE(recs[1].visible_bbox);
}

TEST_CASE("unoccluded pedestrian: visible box matches full box") {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto view = oracle::random_view(rng, 160, 120);
    const std::vector<oracle::Person> people{
        oracle::make_person(1, view.target, rng.uniform(-3, 3), rng.next(), rng.uniform())};
    const auto f = rasterize(blank_layer(160, 120), oracle::posed(people), view.cam, RenderMode::Composite);
    const auto recs = oracle::auto_label(f, people, view.cam);
    REQUIRE(recs.size() == 1);
    const auto& r = recs[0];
    if (r.truncated) continue;
    REQUIRE(r.visible_bbox);
    CHECK(r.visibility == 1.0);
    CHECK(std::abs(r.visible_bbox->x_min - r.full_bbox.x_min) <= 1);
    CHECK(std::abs(r.visible_bbox->y_min - r.full_bbox.y_min) <= 1);
    CHECK(std::abs(r.visible_bbox->x_max - r.full_bbox.x_max) <= 1);
    CHECK(std::abs(r.visible_bbox->y_max - r.full_bbox.y_max) <= 1);
    CHECK(r.full_bbox.contains(*r.visible_bbox));
  }
}

TEST_CASE("half overlap visibility equals a per-pixel recount") {
  const auto cam = oracle::make_camera({0, -8000, 1200}, {0, 0, 900}, 300, 160, 120);
  const std::vector<oracle::Person> people{oracle::make_person(1, {250, -800}, 0.0, 21, 0.1),
                                           oracle::make_person(2, {0, 0}, 0.0, 22, 0.6)};
  const auto f = rasterize(blank_layer(160, 120), oracle::posed(people), cam, RenderMode::Composite);
  const auto recs = oracle::auto_label(f, people, cam);
  const auto both = oracle::raycast_instances(people, cam);
  const auto rear_alone = oracle::raycast_instances({people[1]}, cam);
  const double expect = static_cast<double>(oracle::count_id(both, 2)) / static_cast<double>(oracle::count_id(rear_alone, 2));
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].visibility == expect);
  CHECK(recs[1].visibility > 0.2);
  CHECK(recs[1].visibility < 0.9);
}

TEST_CASE("labeler input checks and record invariants") {
  const auto cam = oracle::make_camera({0, -8000, 1200}, {0, 0, 900}, 300, 160, 120);
  const std::vector<oracle::Person> people{oracle::make_person(1, {0, 0}, 0.0, 1, 0.1)};
  const auto f = rasterize(blank_layer(160, 120), oracle::posed(people), cam, RenderMode::Composite);
  CHECK_THROWS_AS(label_frame(f, {}, {}), MissingSoloRender);
  const auto recs = oracle::auto_label(f, people, cam);
  for (const auto& r : recs) {
    CHECK(r.visibility >= 0.0);
    CHECK(r.visibility <= 1.0);
    CHECK((r.visibility == 0.0) == !r.visible_bbox.has_value());
  }
}

TEST_CASE("adding an occluder never raises visibility") {
  Rng rng(12);
  for (int trial = 0; trial < 15; ++trial) {
    const auto view = oracle::random_view(rng, 120, 90);
    std::vector<oracle::Person> people{
        oracle::make_person(1, view.target, rng.uniform(-3, 3), rng.next(), rng.uniform()),
        oracle::make_person(2, view.target + view.toward_camera * rng.uniform(800, 2500), rng.uniform(-3, 3), rng.next(),
                            rng.uniform())};
    const auto f1 = rasterize(blank_layer(120, 90), oracle::posed(people), view.cam, RenderMode::Silhouette);
    const auto before = oracle::auto_label(f1, people, view.cam);
    people.push_back(oracle::make_person(3, view.target + view.toward_camera * rng.uniform(500, 3000),
                                         rng.uniform(-3, 3), rng.next(), rng.uniform()));
    const auto f2 = rasterize(blank_layer(120, 90), oracle::posed(people), view.cam, RenderMode::Silhouette);
    const auto after = oracle::auto_label(f2, people, view.cam);
    for (const auto& b : before)
      for (const auto& a : after)
        if (a.instance_id == b.instance_id) CHECK(a.visibility <= b.visibility);
  }
}

TEST_CASE("static obstacles hide pedestrians without becoming instances") {
  scenesim::SceneDescription scene;
  scene.camera = oracle::make_camera({0, -8000, 1200}, {0, 0, 900}, 300, 160, 120);
  scene.walkable = {{{{-3000, -3000}, {3000, -3000}, {3000, 3000}, {-3000, 3000}}}};
  scene.obstacles = {{{{{-600, -2000}, {600, -2000}, {600, -1600}, {-600, -1600}}}, 1000.0}};
  const auto layer = build_scene_layer(scene, {});
  std::size_t occluding = 0;
  for (double d : layer.static_depth.pixels()) occluding += d < kInf;
  CHECK(occluding > 0);

  const std::vector<oracle::Person> people{oracle::make_person(1, {0, 0}, 0.0, 3, 0.0)};
  const auto f = rasterize(layer, oracle::posed(people), scene.camera, RenderMode::Composite);
  const auto recs = oracle::auto_label(f, people, scene.camera);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].visibility > 0.0);
  CHECK(recs[0].visibility < 1.0);
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x)
      if (f.instance(x, y)) CHECK(f.depth(x, y) < layer.static_depth(x, y));
}

TEST_CASE("ccl_label") {
  CHECK(ccl_label(Mask(20, 20, 0)).empty());

  const auto two = ccl_label(blob_mask(40, 30, {{20, 2, 25, 8}, {3, 10, 9, 20}}));
  REQUIRE(two.size() == 2);
  CHECK(two[0] == BoxI{20, 2, 25, 8});
  CHECK(two[1] == BoxI{3, 10, 9, 20});

  const auto merged = ccl_label(blob_mask(40, 30, {{2, 2, 12, 20}, {10, 5, 20, 25}}));
  REQUIRE(merged.size() == 1);
  CHECK(merged[0] == BoxI{2, 2, 20, 25});

  // diagonal neighbours join under 8-connectivity
  const auto diag = ccl_label(blob_mask(10, 10, {{1, 1, 1, 1}, {2, 2, 2, 2}}));
  REQUIRE(diag.size() == 1);
  CHECK(diag[0] == BoxI{1, 1, 2, 2});

  // U shape needs label merging in the second pass
  const auto u = ccl_label(blob_mask(10, 10, {{1, 1, 1, 8}, {8, 1, 8, 8}, {1, 8, 8, 8}}));
  REQUIRE(u.size() == 1);
  CHECK(u[0] == BoxI{1, 1, 8, 8});
}

TEST_CASE("overlapping silhouettes merge under CCL") {
  const auto cam = oracle::make_camera({0, -8000, 1200}, {0, 0, 900}, 300, 160, 120);
  const std::vector<oracle::Person> people{oracle::make_person(1, {250, -800}, 0.0, 21, 0.1),
                                           oracle::make_person(2, {0, 0}, 0.0, 22, 0.6)};
  const auto f = rasterize(blank_layer(160, 120), oracle::posed(people), cam, RenderMode::Silhouette);
  CHECK(ccl_label(foreground_mask(f)).size() == 1);
  CHECK(oracle::auto_label(f, people, cam).size() == 2);
}

TEST_CASE("whitebg_bbox") {
  RgbImage img(40, 40, kWhite);
  CHECK_FALSE(whitebg_bbox(img));
  for (int y = 10; y <= 19; ++y)
    for (int x = 10; x <= 19; ++x) img(x, y) = kBlack;
  REQUIRE(whitebg_bbox(img));
  CHECK(*whitebg_bbox(img) == BoxI{10, 10, 19, 19});
  img(30, 35) = Rgb{0, 0, 255};
  CHECK(*whitebg_bbox(img) == BoxI{10, 10, 30, 35});
  img(5, 5) = Rgb{255, 255, 254};
  CHECK(*whitebg_bbox(img) == BoxI{5, 5, 30, 35});
}

TEST_CASE("instance colors") {
  for (std::uint32_t id = 1; id < 2000; ++id) CHECK(instance_color(id) != kWhite);
  CHECK(instance_color(1) != instance_color(2));
  CHECK(instance_color(5) == instance_color(5));
}
