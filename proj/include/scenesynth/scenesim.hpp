#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "scenesynth/camgeom.hpp"
#include "scenesynth/error.hpp"
#include "scenesynth/geometry.hpp"
#include "scenesynth/rng.hpp"

/// The rebuilt scene and the pedestrian simulation running on its ground plane (world z = 0).
namespace scenesynth::scenesim {

class SpawnOverflow : public Error {
 public:
  using Error::Error;
};

class InvalidScene : public Error {
 public:
  using Error::Error;
};

struct Polygon {
  std::vector<Vec2> vertices;

  /// Even-odd rule.
  bool contains(Vec2 p) const;
  double area() const;
  bool is_simple() const;
  bool is_convex() const;
};

struct Obstacle {
  Polygon footprint;  // convex
  double height_mm = 0.0;
};

struct SceneDescription {
  /// Path to a PPM plate, or "procedural" to render one from the geometry.
  std::string background = "procedural";
  camgeom::CameraModel camera;
  std::vector<Polygon> walkable;
  std::vector<Obstacle> obstacles;
  /// Empty means "spawn anywhere walkable".
  std::vector<Polygon> spawn_zones;

  const std::vector<Polygon>& spawn_regions() const { return spawn_zones.empty() ? walkable : spawn_zones; }

  /// Inside some walkable polygon and outside every obstacle footprint.
  bool is_free(Vec2 p) const;

  void validate() const;
};

struct WalkSolo {
  Vec2 waypoint;
};

struct WalkGroup {
  int group_id = 0;
  int size = 2;
  Vec2 waypoint;
};

struct StandPhoneCall {
  double remaining_s = 0.0;
};

using BehaviorState = std::variant<WalkSolo, WalkGroup, StandPhoneCall>;

struct AgentState {
  std::uint32_t id = 0;
  Vec2 pos;
  double heading = 0.0;
  double speed = 0.0;
  BehaviorState behavior;
  std::uint64_t appearance_seed = 0;
  double gait_phase = 0.0;

  bool walking() const { return !std::holds_alternative<StandPhoneCall>(behavior); }
};

/// Human-scale distances (mm) of the steering model.
struct SteeringTuning {
  double r_min = 400.0;
  double r_group = 1200.0;
  double r_arrive = 300.0;
  double stride_length = 1400.0;
  double phone_min_s = 5.0;
  double phone_max_s = 30.0;
  int max_spawn_attempts = 1000;
};

struct SimConfig {
  int n_agents_min = 3;
  int n_agents_max = 8;
  double speed_min = 900.0;
  double speed_max = 1600.0;
  double p_group = 0.2;
  double p_phone = 0.1;
  double dt = 0.04;
  int frames = 1;
  std::uint64_t rng_seed = 0;
  /// Simulation steps between two emitted frames.
  int steps_per_frame = 1;
  /// Agents are respawned every `episode_frames` frames; 0 keeps one episode.
  int episode_frames = 0;
  SteeringTuning tuning;

  void validate() const;
};

/// Throws SpawnOverflow when one agent cannot be placed after max_spawn_attempts draws.
std::vector<AgentState> spawn_agents(const SceneDescription& scene, const SimConfig& cfg, Rng& rng,
                                     std::uint32_t first_id = 1);

/// One time step of dt seconds. Pure apart from the draws taken from `rng`.
std::vector<AgentState> step(const SceneDescription& scene, const std::vector<AgentState>& agents,
                             const SimConfig& cfg, Rng& rng);

/// Ground placement with the model's +x axis turned to the heading.
Pose agent_world_pose(const AgentState& agent);

/// Random free point of the walkable area; throws SpawnOverflow after the retry cap.
Vec2 sample_waypoint(const SceneDescription& scene, const SimConfig& cfg, Rng& rng);

}  // namespace scenesynth::scenesim
