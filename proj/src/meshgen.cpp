#include "scenesynth/meshgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "scenesynth/rng.hpp"

namespace scenesynth::meshgen {
namespace {

// Body proportions as fractions of the total height.
constexpr double kHipFrac = 0.47;
constexpr double kTorsoTopFrac = 0.87;
constexpr double kShoulderPivotFrac = 0.84;
constexpr double kArmLengthFrac = 0.36;
constexpr double kArmWidthFrac = 0.055;
constexpr double kArmDepthFrac = 0.06;
constexpr double kLegWidthFrac = 0.075;
constexpr double kLegDepthFrac = 0.07;
constexpr double kTorsoDepthFrac = 0.12;
constexpr double kHeadSideFrac = 0.11;

struct Cuboid {
  // Extents relative to the pivot, before rotation.
  Vec3 lo;
  Vec3 hi;
  Vec3 pivot;
  double swing = 0.0;  // rotation about the model y axis
  Rgb color;
};

// Quads listed counter-clockwise when seen from outside; corner bits are (x, y, z).
constexpr std::array<std::array<int, 4>, 6> kFaces = {{
    {0b000, 0b001, 0b011, 0b010},  // -x
    {0b100, 0b110, 0b111, 0b101},  // +x
    {0b000, 0b100, 0b101, 0b001},  // -y
    {0b010, 0b011, 0b111, 0b110},  // +y
    {0b000, 0b010, 0b110, 0b100},  // -z
    {0b001, 0b101, 0b111, 0b011},  // +z
}};

void append_cuboid(TriangleMesh& mesh, const Cuboid& c) {
  // A positive swing moves the limb's lower end toward +x, i.e. a rotation by -swing about +y.
  const Mat3 rot = Mat3::rotation_y(-c.swing);
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 local{(corner & 0b100) ? c.hi.x : c.lo.x, (corner & 0b010) ? c.hi.y : c.lo.y,
                     (corner & 0b001) ? c.hi.z : c.lo.z};
    mesh.vertices.push_back(rot * local + c.pivot);
  }
  for (const auto& f : kFaces) {
    const auto a = base + static_cast<std::uint32_t>(f[0]);
    const auto b = base + static_cast<std::uint32_t>(f[1]);
    const auto cc = base + static_cast<std::uint32_t>(f[2]);
    const auto d = base + static_cast<std::uint32_t>(f[3]);
    mesh.triangles.push_back({a, b, cc});
    mesh.triangles.push_back({a, cc, d});
    mesh.triangle_colors.push_back(c.color);
    mesh.triangle_colors.push_back(c.color);
  }
}

}  // namespace

const std::array<Rgb, kPaletteSize>& clothing_palette() {
  static constexpr std::array<Rgb, kPaletteSize> kPalette = {{
      {178, 34, 34},   {25, 25, 112},  {34, 139, 34},  {218, 165, 32}, {47, 79, 79},   {139, 69, 19},
      {245, 245, 245}, {20, 20, 20},   {128, 0, 128},  {70, 130, 180}, {255, 140, 0},  {112, 128, 144},
  }};
  return kPalette;
}

LimbAngles limb_angles(const HumanoidParams& params) {
  if (params.pose == Pose::Standing) return {};
  const double amplitude = params.swing_amplitude_deg * std::numbers::pi / 180.0;
  const double swing = amplitude * std::sin(2.0 * std::numbers::pi * params.gait_phase);
  return {swing, -swing, -swing, swing};
}

TriangleMesh build_humanoid(const HumanoidParams& p) {
  const double h = p.height;
  const LimbAngles angles = limb_angles(p);

  const double arm_w = kArmWidthFrac * h;
  const double arm_d = kArmDepthFrac * h;
  const double torso_w = p.shoulder_width - 2.0 * arm_w;
  const double torso_d = kTorsoDepthFrac * h;
  const double leg_w = kLegWidthFrac * h;
  const double leg_d = kLegDepthFrac * h;
  const double hip = kHipFrac * h;
  const double head = kHeadSideFrac * h;
  const double head_bottom = kTorsoTopFrac * h;

  TriangleMesh mesh;
  mesh.vertices.reserve(48);
  mesh.triangles.reserve(72);
  mesh.triangle_colors.reserve(72);

  append_cuboid(mesh, {{-head / 2, -head / 2, 0.0}, {head / 2, head / 2, h - head_bottom}, {0, 0, head_bottom}, 0.0,
                       p.skin_color});
  append_cuboid(mesh, {{-torso_d / 2, -torso_w / 2, 0.0}, {torso_d / 2, torso_w / 2, head_bottom - hip}, {0, 0, hip},
                       0.0, p.torso_color});

  const double arm_y = p.shoulder_width / 2 - arm_w / 2;
  const double arm_len = kArmLengthFrac * h;
  const double shoulder = kShoulderPivotFrac * h;
  append_cuboid(mesh, {{-arm_d / 2, -arm_w / 2, -arm_len}, {arm_d / 2, arm_w / 2, 0.0}, {0, arm_y, shoulder},
                       angles.left_arm, p.torso_color});
  append_cuboid(mesh, {{-arm_d / 2, -arm_w / 2, -arm_len}, {arm_d / 2, arm_w / 2, 0.0}, {0, -arm_y, shoulder},
                       angles.right_arm, p.torso_color});

  // Leg length is chosen per pose so the lowest corner of a swung leg still
  // reaches the ground: L cos(a) + (d/2) |sin(a)| = hip.
  const double leg_y = torso_w / 4;
  for (const auto& [angle, y] : {std::pair{angles.left_leg, leg_y}, std::pair{angles.right_leg, -leg_y}}) {
    const double len = (hip - 0.5 * leg_d * std::abs(std::sin(angle))) / std::cos(angle);
    append_cuboid(mesh, {{-leg_d / 2, -leg_w / 2, -len}, {leg_d / 2, leg_w / 2, 0.0}, {0, y, hip}, angle,
                         p.legs_color});
  }

  // Snap the lowest vertex exactly onto z = 0.
  double min_z = mesh.vertices.front().z;
  for (const auto& v : mesh.vertices) min_z = std::min(min_z, v.z);
  for (auto& v : mesh.vertices) v.z -= min_z;
  return mesh;
}

HumanoidParams appearance_from_seed(std::uint64_t seed) {
  static constexpr std::array<Rgb, 4> kSkin = {{{241, 194, 125}, {224, 172, 105}, {141, 85, 36}, {198, 134, 66}}};
  Rng rng(mix_seed(seed, 0x6d657368));
  HumanoidParams p;
  p.height = rng.uniform(kMinHeightMm, kMaxHeightMm);
  p.shoulder_width = p.height * rng.uniform(0.30, 0.33);
  const auto& palette = clothing_palette();
  p.torso_color = palette[rng.below(palette.size())];
  p.legs_color = palette[rng.below(palette.size())];
  p.skin_color = kSkin[rng.below(kSkin.size())];
  return p;
}

std::string to_obj(const TriangleMesh& mesh) {
  std::ostringstream os;
  os.precision(9);
  for (const auto& v : mesh.vertices) os << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : mesh.triangles) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  return os.str();
}

}  // namespace scenesynth::meshgen
