#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "support.hpp"

using namespace scenesynth;
using namespace scenesynth::camgeom;

namespace {

Intrinsics unit_intrinsics() { return {1.0, 1.0, 1.0, 0.0, 0.0, 100, 100}; }

CameraModel unit_camera() { return {Extrinsics{Mat3::identity(), {0, 0, 0}}, unit_intrinsics()}; }

}  // namespace

TEST_CASE("world_to_camera basic transforms") {
  const Extrinsics id{Mat3::identity(), {0, 0, 0}};
  auto c = world_to_camera({1, 2, 3}, id);
  CHECK(c.x == 1);
  CHECK(c.y == 2);
  CHECK(c.z == 3);

  c = world_to_camera({0, 0, 0}, {Mat3::identity(), {1, 2, 3}});
  CHECK(c.x == 1);
  CHECK(c.y == 2);
  CHECK(c.z == 3);

  c = world_to_camera({1, 0, 0}, {Mat3::rotation_z(std::numbers::pi / 2), {0, 0, 0}});
  CHECK(c.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.y == doctest::Approx(1.0));
  CHECK(c.z == doctest::Approx(0.0));
}

TEST_CASE("camera_to_pixel examples") {
  SUBCASE("optical axis hits the principal point") {
    const Intrinsics in{35.0, 0.02, 0.02, 320, 180, 640, 360};
    for (double z : {1.5, 10.0, 1e6}) {
      const auto p = camera_to_pixel({0, 0, z}, in);
      CHECK(p.u == 320);
      CHECK(p.v == 180);
      CHECK(p.depth == z);
    }
  }
  SUBCASE("unit camera") {
    // (2,3,1) sits on the near plane itself; the same ray one unit further out
    const auto p = camera_to_pixel({4, 6, 2}, unit_intrinsics());
    CHECK(p.u == 2.0);
    CHECK(p.v == 3.0);
    CHECK_THROWS_AS(camera_to_pixel({2, 3, 1}, unit_intrinsics()), BehindCamera);
  }
  SUBCASE("35 mm lens") {
    const Intrinsics in{35.0, 0.02, 0.02, 320, 180, 640, 360};
    const auto p = camera_to_pixel({100, -50, 5000}, in);
    const auto o = oracle::brute_project(Mat3::identity().m, {0, 0, 0}, 35, 0.02, 0.02, 320, 180, {100, -50, 5000});
    CHECK(p.u == doctest::Approx(static_cast<double>(o.u)).epsilon(1e-12));
    CHECK(p.v == doctest::Approx(static_cast<double>(o.v)).epsilon(1e-12));
    CHECK(p.u == doctest::Approx(355.0).epsilon(1e-12));
    CHECK(p.v == doctest::Approx(162.5).epsilon(1e-12));
  }
  SUBCASE("behind the near plane") {
    CHECK_THROWS_AS(camera_to_pixel({0, 0, 1.0}, unit_intrinsics()), BehindCamera);
    CHECK_THROWS_AS(camera_to_pixel({0, 0, 0.5}, unit_intrinsics()), BehindCamera);
    CHECK_THROWS_AS(camera_to_pixel({0, 0, -100}, unit_intrinsics()), BehindCamera);
  }
}

TEST_CASE("project composes the two stages") {
  CameraModel cam = unit_camera();
  auto p = project({4, 6, 2}, cam);
  CHECK(p.u == 2.0);
  CHECK(p.v == 3.0);

  CHECK_THROWS_AS(project({0, 0, -5}, cam), BehindCamera);

  CameraModel lens{{Mat3::identity(), {100, -50, 5000}}, {35.0, 0.02, 0.02, 320, 180, 640, 360}};
  p = project({0, 0, 0}, lens);
  CHECK(p.u == doctest::Approx(355.0).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(162.5).epsilon(1e-12));
  CHECK(p.depth == 5000);
}

TEST_CASE("project_bbox") {
  const CameraModel cam{{Mat3::identity(), {0, 0, 0}}, {35.0, 0.02, 0.02, 320, 180, 640, 360}};

  SUBCASE("empty input") { CHECK_THROWS_AS(project_bbox({}, cam), EmptyVertexSet); }

  SUBCASE("single on-axis vertex") {
    const std::vector<Vec3World> v{{0, 0, 3000}};
    const auto b = project_bbox(v, cam);
    REQUIRE(b);
    CHECK(b->box == BoxF{320, 180, 320, 180});
    CHECK_FALSE(b->truncated);
  }

  SUBCASE("everything behind the camera") {
    const std::vector<Vec3World> v{{0, 0, -1}, {10, 10, 0.5}, {0, 0, 1.0}};
    CHECK_FALSE(project_bbox(v, cam));
  }

  SUBCASE("cube on the optical axis matches per-vertex projection") {
    std::vector<Vec3World> v;
    for (int i = 0; i < 8; ++i) v.push_back({i & 1 ? 400.0 : -400.0, i & 2 ? 400.0 : -400.0, i & 4 ? 6400.0 : 5600.0});
    double u0 = 1e9, v0 = 1e9, u1 = -1e9, v1 = -1e9;
    for (const auto& p : v) {
      const auto o = oracle::brute_project(Mat3::identity().m, {0, 0, 0}, 35, 0.02, 0.02, 320, 180, {p.x, p.y, p.z});
      u0 = std::min(u0, double(o.u));
      v0 = std::min(v0, double(o.v));
      u1 = std::max(u1, double(o.u));
      v1 = std::max(v1, double(o.v));
    }
    const auto b = project_bbox(v, cam);
    REQUIRE(b);
    CHECK(b->box.u_min == doctest::Approx(u0).epsilon(1e-12));
    CHECK(b->box.v_min == doctest::Approx(v0).epsilon(1e-12));
    CHECK(b->box.u_max == doctest::Approx(u1).epsilon(1e-12));
    CHECK(b->box.v_max == doctest::Approx(v1).epsilon(1e-12));
    CHECK_FALSE(b->truncated);
  }

  SUBCASE("clipped to the image") {
    const std::vector<Vec3World> v{{-100000, 0, 5000}, {100, 100, 5000}};
    const auto b = project_bbox(v, cam);
    REQUIRE(b);
    CHECK(b->truncated);
    CHECK(b->box.u_min == 0.0);
  }
}

TEST_CASE("properties over random cameras") {
  Rng rng(42);
  for (int i = 0; i < 500; ++i) {
    const Extrinsics ex{oracle::random_rotation(rng),
                        {rng.uniform(-5000, 5000), rng.uniform(-5000, 5000), rng.uniform(-5000, 5000)}};
    CHECK_NOTHROW(ex.validate());
    const Vec3World a{rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4)};
    const Vec3World b{rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4)};

    // isometry
    const double dw = norm(a.vec() - b.vec());
    const double dc = norm(world_to_camera(a, ex).vec() - world_to_camera(b, ex).vec());
    CHECK(std::abs(dw - dc) <= 1e-6 * dw);

    // homogeneous form
    const auto H = ex.homogeneous();
    const Vec3 c = world_to_camera(a, ex).vec();
    const double h[3] = {H[0] * a.x + H[1] * a.y + H[2] * a.z + H[3], H[4] * a.x + H[5] * a.y + H[6] * a.z + H[7],
                         H[8] * a.x + H[9] * a.y + H[10] * a.z + H[11]};
    CHECK(std::abs(h[0] - c.x) <= 1e-12 * (1 + std::abs(c.x)) * 1e3);
    CHECK(std::abs(h[1] - c.y) <= 1e-12 * (1 + std::abs(c.y)) * 1e3);
    CHECK(std::abs(h[2] - c.z) <= 1e-12 * (1 + std::abs(c.z)) * 1e3);
    CHECK(H[12] == 0);
    CHECK(H[15] == 1);

    // ray scale invariance
    const Intrinsics in{rng.uniform(4, 50), rng.uniform(0.005, 0.03), rng.uniform(0.005, 0.03), 320, 240, 640, 480};
    const Vec3Cam p{rng.uniform(-2000, 2000), rng.uniform(-2000, 2000), rng.uniform(100, 9000)};
    const double lambda = rng.uniform(0.5, 20.0);
    const auto p1 = camera_to_pixel(p, in);
    const auto p2 = camera_to_pixel({p.x * lambda, p.y * lambda, p.z * lambda}, in);
    CHECK(std::abs(p1.u - p2.u) <= 1e-9 * (1 + std::abs(p1.u)));
    CHECK(std::abs(p1.v - p2.v) <= 1e-9 * (1 + std::abs(p1.v)));
    CHECK(p2.depth == doctest::Approx(p1.depth * lambda));
  }
}

TEST_CASE("project_bbox contains every in-image vertex projection") {
  Rng rng(7);
  const CameraModel cam{look_at({0, -8000, 3000}, {0, 0, 800}), {8.0, 0.01, 0.01, 320, 240, 640, 480}};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3World> v;
    const int n = static_cast<int>(rng.between(1, 20));
    for (int i = 0; i < n; ++i)
      v.push_back({rng.uniform(-6000, 6000), rng.uniform(-9000, 6000), rng.uniform(0, 4000)});
    const auto b = project_bbox(v, cam);
    if (!b) continue;
    CHECK(b->box.u_min >= 0);
    CHECK(b->box.v_min >= 0);
    CHECK(b->box.u_max <= 640);
    CHECK(b->box.v_max <= 480);
    for (const auto& p : v) {
      const auto c = world_to_camera(p, cam.extrinsics);
      if (c.z <= kNearPlaneMm) continue;
      const auto px = camera_to_pixel(c, cam.intrinsics);
      if (px.u < 0 || px.v < 0 || px.u > 640 || px.v > 480) continue;
      CHECK(px.u >= b->box.u_min);
      CHECK(px.u <= b->box.u_max);
      CHECK(px.v >= b->box.v_min);
      CHECK(px.v <= b->box.v_max);
    }
  }
}

TEST_CASE("validation") {
  Extrinsics bad{Mat3::identity(), {0, 0, 0}};
  bad.rotation(0, 0) = 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidCamera);
  Extrinsics mirror{Mat3::identity(), {0, 0, 0}};
  mirror.rotation(2, 2) = -1.0;
  CHECK_THROWS_AS(mirror.validate(), InvalidCamera);
  Intrinsics in = unit_intrinsics();
  in.focal_mm = 0;
  CHECK_THROWS_AS(in.validate(), InvalidCamera);
  in = unit_intrinsics();
  in.width = 0;
  CHECK_THROWS_AS(in.validate(), InvalidCamera);
}

TEST_CASE("look_at puts the target on the optical axis") {
  const auto ex = look_at({1000, -7000, 4000}, {300, 2000, 0});
  CHECK_NOTHROW(ex.validate());
  const auto c = world_to_camera({300, 2000, 0}, ex);
  CHECK(std::abs(c.x) < 1e-6);
  CHECK(std::abs(c.y) < 1e-6);
  CHECK(c.z > 0);
  // world up maps to image up (negative camera y)
  const auto up = world_to_camera({300, 2000, 1000}, ex);
  CHECK(up.y < 0);
}

TEST_CASE("to_pixel_box covers the continuous box") {
  CHECK(to_pixel_box({10.2, 20.7, 30.1, 40.0}, 100, 100) == BoxI{10, 20, 30, 39});
  CHECK(to_pixel_box({-5, -5, 500, 500}, 100, 80) == BoxI{0, 0, 99, 79});
  CHECK(to_pixel_box({5, 5, 5, 5}, 100, 80) == BoxI{5, 5, 5, 5});
}
