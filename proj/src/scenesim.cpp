#include "scenesynth/scenesim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace scenesynth::scenesim {
namespace {

struct Bounds {
  Vec2 lo{1e300, 1e300};
  Vec2 hi{-1e300, -1e300};
};

Bounds bounds_of(const std::vector<Polygon>& polys) {
  Bounds b;
  for (const auto& poly : polys) {
    for (const auto& v : poly.vertices) {
      b.lo = {std::min(b.lo.x, v.x), std::min(b.lo.y, v.y)};
      b.hi = {std::max(b.hi.x, v.x), std::max(b.hi.y, v.y)};
    }
  }
  return b;
}

bool inside_any(const std::vector<Polygon>& polys, Vec2 p) {
  return std::any_of(polys.begin(), polys.end(), [&](const Polygon& poly) { return poly.contains(p); });
}

double cross2(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross2(b - a, c - a);
  const double d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c);
  const double d4 = cross2(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

Vec2 unit(Vec2 v) {
  const double n = norm(v);
  return n > 0.0 ? v * (1.0 / n) : Vec2{};
}

Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Linear repulsion from `from`, full strength at contact, zero at `range`.
Vec2 repulsion(Vec2 pos, Vec2 from, double range) {
  const Vec2 d = pos - from;
  const double dist = norm(d);
  if (dist <= 0.0 || dist >= range) return {};
  return d * ((range - dist) / (range * dist));
}

void add_edge_repulsion(Vec2 pos, const Polygon& poly, double range, Vec2& force) {
  const auto& v = poly.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 q = closest_on_segment(pos, v[i], v[(i + 1) % v.size()]);
    force = force + repulsion(pos, q, range);
  }
}

Vec2* waypoint_of(BehaviorState& b) {
  if (auto* s = std::get_if<WalkSolo>(&b)) return &s->waypoint;
  if (auto* g = std::get_if<WalkGroup>(&b)) return &g->waypoint;
  return nullptr;
}

Vec2 sample_in(const std::vector<Polygon>& regions, const SceneDescription& scene, const SimConfig& cfg, Rng& rng,
               const std::vector<AgentState>& placed, const char* what) {
  const Bounds b = bounds_of(regions);
  for (int attempt = 0; attempt < cfg.tuning.max_spawn_attempts; ++attempt) {
    const Vec2 p{rng.uniform(b.lo.x, b.hi.x), rng.uniform(b.lo.y, b.hi.y)};
    if (!inside_any(regions, p) || !scene.is_free(p)) continue;
    const bool separated = std::all_of(placed.begin(), placed.end(), [&](const AgentState& a) {
      return norm(a.pos - p) >= cfg.tuning.r_min;
    });
    if (separated) return p;
  }
  throw SpawnOverflow(std::string("could not place ") + what + " after " +
                      std::to_string(cfg.tuning.max_spawn_attempts) + " attempts");
}

}  // namespace

bool Polygon::contains(Vec2 p) const {
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = vertices[i];
    const Vec2 b = vertices[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double Polygon::area() const {
  double twice = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    twice += cross2(vertices[i], vertices[(i + 1) % vertices.size()]);
  return std::abs(twice) / 2.0;
}

bool Polygon::is_simple() const {
  const std::size_t n = vertices.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (segments_cross(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n])) return false;
    }
  }
  return area() > 0.0;
}

bool Polygon::is_convex() const {
  const std::size_t n = vertices.size();
  if (n < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cross2(vertices[(i + 1) % n] - vertices[i], vertices[(i + 2) % n] - vertices[(i + 1) % n]);
    if (c == 0.0) continue;
    const int s = c > 0 ? 1 : -1;
    if (sign != 0 && s != sign) return false;
    sign = s;
  }
  return sign != 0;
}

bool SceneDescription::is_free(Vec2 p) const {
  if (!inside_any(walkable, p)) return false;
  return std::none_of(obstacles.begin(), obstacles.end(),
                      [&](const Obstacle& o) { return o.footprint.contains(p); });
}

void SceneDescription::validate() const {
  camera.validate();
  if (walkable.empty()) throw InvalidScene("scene.walkable must list at least one polygon");
  for (const auto& poly : walkable)
    if (!poly.is_simple()) throw InvalidScene("scene.walkable polygon is not simple");
  for (const auto& o : obstacles) {
    if (!o.footprint.is_simple() || !o.footprint.is_convex())
      throw InvalidScene("obstacle footprints must be simple convex polygons");
    if (!(o.height_mm > 0.0)) throw InvalidScene("obstacle height must be > 0");
  }
  for (const auto& zone : spawn_zones) {
    if (!zone.is_simple()) throw InvalidScene("scene.spawn_zones polygon is not simple");
    for (const auto& v : zone.vertices) {
      // Vertices may sit exactly on a walkable edge; nudge toward the zone centroid.
      Vec2 centroid;
      for (const auto& w : zone.vertices) centroid = centroid + w * (1.0 / double(zone.vertices.size()));
      if (!inside_any(walkable, v + (centroid - v) * 1e-6)) throw InvalidScene("spawn zone leaves the walkable area");
    }
  }
  // Some spawn point must be free: probe a regular grid over every spawn region.
  const auto& regions = spawn_regions();
  const Bounds b = bounds_of(regions);
  constexpr int kProbe = 64;
  for (int i = 0; i < kProbe; ++i) {
    for (int j = 0; j < kProbe; ++j) {
      const Vec2 p{b.lo.x + (b.hi.x - b.lo.x) * (i + 0.5) / kProbe, b.lo.y + (b.hi.y - b.lo.y) * (j + 0.5) / kProbe};
      if (inside_any(regions, p) && is_free(p)) return;
    }
  }
  throw InvalidScene("obstacles cover every spawn zone");
}

void SimConfig::validate() const {
  auto fail = [](const char* msg) { throw InvalidScene(msg); };
  if (n_agents_min < 0 || n_agents_max < n_agents_min) fail("sim.n_agents must be a range [min, max] with 0 <= min <= max");
  if (!(speed_min > 0.0) || speed_max < speed_min) fail("sim.speed_mm_s must satisfy 0 < min <= max");
  if (p_group < 0.0 || p_phone < 0.0 || p_group + p_phone > 1.0) fail("sim.p_group + sim.p_phone must lie in [0, 1]");
  if (!(dt > 0.0)) fail("sim.dt_s must be > 0");
  if (frames < 0) fail("sim.frames must be >= 0");
  if (steps_per_frame < 1) fail("sim.steps_per_frame must be >= 1");
  if (episode_frames < 0) fail("sim.episode_frames must be >= 0");
  if (tuning.max_spawn_attempts < 1) fail("spawn attempt cap must be >= 1");
}

Vec2 sample_waypoint(const SceneDescription& scene, const SimConfig& cfg, Rng& rng) {
  return sample_in(scene.walkable, scene, cfg, rng, {}, "a waypoint");
}

std::vector<AgentState> spawn_agents(const SceneDescription& scene, const SimConfig& cfg, Rng& rng,
                                     std::uint32_t first_id) {
  const auto n = static_cast<int>(rng.between(cfg.n_agents_min, cfg.n_agents_max));
  std::vector<AgentState> agents;
  agents.reserve(static_cast<std::size_t>(n));
  std::uint32_t next_id = first_id;
  int next_group = 1;

  auto make_agent = [&](Vec2 pos, BehaviorState behavior, double speed) {
    AgentState a;
    a.id = next_id++;
    a.pos = pos;
    a.speed = speed;
    a.behavior = behavior;
    a.appearance_seed = rng.next();
    a.gait_phase = rng.uniform();
    if (Vec2* wp = waypoint_of(a.behavior)) {
      const Vec2 d = *wp - pos;
      a.heading = std::atan2(d.y, d.x);
    } else {
      a.heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
    }
    return a;
  };

  while (static_cast<int>(agents.size()) < n) {
    const int remaining = n - static_cast<int>(agents.size());
    const double u = rng.uniform();
    if (u < cfg.p_group && remaining >= 2) {
      const int size = remaining >= 3 ? static_cast<int>(rng.between(2, 3)) : 2;
      const Vec2 waypoint = sample_waypoint(scene, cfg, rng);
      const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
      const WalkGroup group{next_group++, size, waypoint};
      const Vec2 leader = sample_in(scene.spawn_regions(), scene, cfg, rng, agents, "a group leader");
      agents.push_back(make_agent(leader, group, speed));
      for (int k = 1; k < size; ++k) {
        // Followers stay within r_group / 2 of the leader so every pair is within r_group.
        const double half = cfg.tuning.r_group / 2.0;
        Polygon disk;
        for (int s = 0; s < 16; ++s) {
          const double ang = 2.0 * std::numbers::pi * s / 16.0;
          disk.vertices.push_back(leader + Vec2{std::cos(ang), std::sin(ang)} * half);
        }
        const Vec2 pos = sample_in({disk}, scene, cfg, rng, agents, "a group member");
        agents.push_back(make_agent(pos, group, speed));
      }
    } else if (u < cfg.p_group + cfg.p_phone) {
      const Vec2 pos = sample_in(scene.spawn_regions(), scene, cfg, rng, agents, "an agent");
      const StandPhoneCall call{rng.uniform(cfg.tuning.phone_min_s, cfg.tuning.phone_max_s)};
      agents.push_back(make_agent(pos, call, 0.0));
    } else {
      const Vec2 pos = sample_in(scene.spawn_regions(), scene, cfg, rng, agents, "an agent");
      const WalkSolo solo{sample_waypoint(scene, cfg, rng)};
      agents.push_back(make_agent(pos, solo, rng.uniform(cfg.speed_min, cfg.speed_max)));
    }
  }
  return agents;
}

std::vector<AgentState> step(const SceneDescription& scene, const std::vector<AgentState>& agents,
                             const SimConfig& cfg, Rng& rng) {
  const SteeringTuning& tune = cfg.tuning;
  std::vector<AgentState> next = agents;

  // Behavior updates: arrivals, phone calls ending. Groups pick one shared waypoint.
  std::map<int, Vec2> group_waypoint;
  std::map<int, bool> group_arrived;
  for (const auto& a : agents) {
    if (const auto* g = std::get_if<WalkGroup>(&a.behavior)) {
      group_arrived[g->group_id] = group_arrived[g->group_id] || norm(g->waypoint - a.pos) < tune.r_arrive;
    }
  }
  for (auto& a : next) {
    if (auto* solo = std::get_if<WalkSolo>(&a.behavior)) {
      if (norm(solo->waypoint - a.pos) < tune.r_arrive) solo->waypoint = sample_waypoint(scene, cfg, rng);
    } else if (auto* g = std::get_if<WalkGroup>(&a.behavior)) {
      if (group_arrived[g->group_id]) {
        auto it = group_waypoint.find(g->group_id);
        if (it == group_waypoint.end()) it = group_waypoint.emplace(g->group_id, sample_waypoint(scene, cfg, rng)).first;
        g->waypoint = it->second;
      }
    } else if (auto* call = std::get_if<StandPhoneCall>(&a.behavior)) {
      call->remaining_s = std::max(0.0, call->remaining_s - cfg.dt);
      if (call->remaining_s <= 0.0) {
        a.behavior = WalkSolo{sample_waypoint(scene, cfg, rng)};
        a.speed = rng.uniform(cfg.speed_min, cfg.speed_max);
      }
    }
  }

  std::map<int, std::pair<Vec2, int>> centroid_acc;
  for (const auto& a : agents) {
    if (const auto* g = std::get_if<WalkGroup>(&a.behavior)) {
      auto& [sum, count] = centroid_acc[g->group_id];
      sum = sum + a.pos;
      ++count;
    }
  }

  const double range = 2.0 * tune.r_min;
  for (std::size_t i = 0; i < next.size(); ++i) {
    AgentState& a = next[i];
    const Vec2* wp = waypoint_of(a.behavior);
    if (wp == nullptr) continue;  // standing

    const Vec2 to_goal = *wp - a.pos;
    const double goal_dist = norm(to_goal);
    Vec2 force = unit(to_goal);
    for (std::size_t j = 0; j < agents.size(); ++j) {
      if (j != i) force = force + repulsion(a.pos, agents[j].pos, range);
    }
    for (const auto& o : scene.obstacles) add_edge_repulsion(a.pos, o.footprint, range, force);
    for (const auto& poly : scene.walkable) add_edge_repulsion(a.pos, poly, range, force);
    if (const auto* g = std::get_if<WalkGroup>(&a.behavior)) {
      const auto& [sum, count] = centroid_acc[g->group_id];
      const Vec2 to_centroid = sum * (1.0 / count) - a.pos;
      if (norm(to_centroid) > tune.r_group / 2.0) force = force + unit(to_centroid) * 0.5;
    }
    Vec2 dir = unit(force);
    if (dir == Vec2{}) dir = unit(to_goal);

    const double travel = std::min(a.speed * cfg.dt, goal_dist);
    // Re-steer in 15 degree increments, alternating sides, if the move leaves free space.
    bool moved = false;
    for (int k = 0; k <= 24 && !moved; ++k) {
      const double angle = (k % 2 == 1 ? 1.0 : -1.0) * ((k + 1) / 2) * std::numbers::pi / 12.0;
      const Vec2 d = rotate(dir, angle);
      const Vec2 candidate = a.pos + d * travel;
      if (scene.is_free(candidate)) {
        a.pos = candidate;
        if (travel > 0.0) a.heading = std::atan2(d.y, d.x);
        moved = true;
      }
    }
    if (moved) {
      a.gait_phase = std::fmod(a.gait_phase + a.speed * cfg.dt / tune.stride_length, 1.0);
    }
  }
  return next;
}

Pose agent_world_pose(const AgentState& agent) {
  return {Mat3::rotation_z(agent.heading), {agent.pos.x, agent.pos.y, 0.0}};
}

}  // namespace scenesynth::scenesim
