#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scenesynth/geometry.hpp"
#include "scenesynth/image.hpp"

/// Procedural low-poly articulated pedestrians.
///
/// Model space: feet on z = 0, head top at z = height, facing +x, left is +y.
/// The body is six cuboids (head, torso, two arms, two legs); limbs rotate
/// about their hip/shoulder pivots in the x-z plane.
namespace scenesynth::meshgen {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Rgb> triangle_colors;
};

enum class Pose { Walking, Standing };

inline constexpr double kMinHeightMm = 1500.0;
inline constexpr double kMaxHeightMm = 1900.0;
inline constexpr double kDefaultSwingDeg = 30.0;
inline constexpr int kPaletteSize = 12;

struct HumanoidParams {
  double height = 1700.0;
  /// Outer arm-to-arm breadth (mm). The lateral extent of every posed mesh.
  double shoulder_width = 520.0;
  Rgb torso_color{200, 40, 40};
  Rgb legs_color{40, 40, 120};
  Rgb skin_color{224, 172, 105};
  double gait_phase = 0.0;
  Pose pose = Pose::Walking;
  double swing_amplitude_deg = kDefaultSwingDeg;
};

/// Limb rotation angles in radians; positive swings the limb end forward (+x).
struct LimbAngles {
  double left_leg = 0.0;
  double right_leg = 0.0;
  double left_arm = 0.0;
  double right_arm = 0.0;
};

/// The fixed clothing palette used by appearance_from_seed.
const std::array<Rgb, kPaletteSize>& clothing_palette();

/// Legs swing at A sin(2 pi phase), mirrored left/right; arms oppose the leg
/// on their side. All zero when standing.
LimbAngles limb_angles(const HumanoidParams& params);

TriangleMesh build_humanoid(const HumanoidParams& params);

/// Deterministic appearance: height uniform in [1500, 1900] mm, palette colors.
HumanoidParams appearance_from_seed(std::uint64_t seed);

/// Wavefront OBJ text (vertices + faces) for inspection.
std::string to_obj(const TriangleMesh& mesh);

}  // namespace scenesynth::meshgen
