#include "scenesynth/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "toml.hpp"

namespace scenesynth::config {
namespace {

using KeySet = std::set<std::string, std::less<>>;

const std::map<std::string, KeySet, std::less<>>& known_keys() {
  static const std::map<std::string, KeySet, std::less<>> keys = {
      {"scene", {"name", "background", "walkable", "obstacles", "spawn_zones"}},
      {"camera", {"f_mm", "dx_mm", "dy_mm", "u0", "v0", "width", "height", "rotation", "translation_mm"}},
      {"sim",
       {"n_agents", "speed_mm_s", "p_group", "p_phone", "dt_s", "frames", "seed", "steps_per_frame",
        "episode_frames", "r_min_mm", "r_group_mm", "r_arrive_mm", "stride_length_mm"}},
      {"render",
       {"ground_a", "ground_b", "offwalk", "sky", "obstacle", "tile_mm", "light_dir", "texture_seed", "png",
        "instance_pgm"}},
      {"train",
       {"window", "cell", "epochs", "learning_rate", "lambda", "hard_negative_rounds", "negatives_per_round", "seed",
        "negatives_per_frame", "mining_frames", "mining_max_iou", "person_height_fraction", "box_aspect",
        "min_positive_height", "scale_factor", "stride", "score_threshold", "nms_iou"}},
      {"eval", {"iou_threshold", "ap_mode", "ignore_difficult", "difficult_threshold", "pixel_area"}},
  };
  return keys;
}

[[noreturn]] void fail(const std::string& key, const std::string& msg) { throw ConfigError(key + ": " + msg); }

toml::table parse_toml(std::string_view text) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }
}

void reject_unknown(const toml::table& root, const std::map<std::string, KeySet, std::less<>>& allowed) {
  for (const auto& [section, node] : root) {
    const auto it = allowed.find(section.str());
    if (it == allowed.end()) fail(std::string(section.str()), "unknown section");
    const auto* table = node.as_table();
    if (!table) fail(std::string(section.str()), "must be a section");
    for (const auto& [key, value] : *table) {
      if (!it->second.contains(key.str())) fail(std::string(section.str()) + "." + std::string(key.str()), "unknown key");
    }
  }
}

/// Typed accessors over one section; `name` is used in error messages.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  const toml::node* node(std::string_view key) const { return table_ ? table_->get(key) : nullptr; }
  std::string qualified(std::string_view key) const { return name_ + "." + std::string(key); }

  double number(std::string_view key, double fallback) const {
    const auto* n = node(key);
    if (!n) return fallback;
    return as_number(*n, qualified(key));
  }
  double required_number(std::string_view key) const {
    const auto* n = node(key);
    if (!n) fail(qualified(key), "required");
    return as_number(*n, qualified(key));
  }
  long long integer(std::string_view key, long long fallback) const {
    const auto* n = node(key);
    if (!n) return fallback;
    if (!n->is_integer()) fail(qualified(key), "must be an integer");
    return n->as_integer()->get();
  }
  long long required_integer(std::string_view key) const {
    if (!node(key)) fail(qualified(key), "required");
    return integer(key, 0);
  }
  bool boolean(std::string_view key, bool fallback) const {
    const auto* n = node(key);
    if (!n) return fallback;
    if (!n->is_boolean()) fail(qualified(key), "must be true or false");
    return n->as_boolean()->get();
  }
  std::string string(std::string_view key, std::string fallback) const {
    const auto* n = node(key);
    if (!n) return fallback;
    if (!n->is_string()) fail(qualified(key), "must be a string");
    return n->as_string()->get();
  }
  std::vector<double> numbers(std::string_view key, std::size_t expected) const {
    const auto* n = node(key);
    if (!n) fail(qualified(key), "required");
    return number_array(*n, qualified(key), expected);
  }
  Rgb color(std::string_view key, Rgb fallback) const {
    if (!node(key)) return fallback;
    const auto v = numbers(key, 3);
    for (const double c : v)
      if (c < 0 || c > 255 || c != std::floor(c)) fail(qualified(key), "color channels must be integers in [0, 255]");
    return {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
  }

  static double as_number(const toml::node& n, const std::string& key) {
    if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
    if (n.is_floating_point()) return n.as_floating_point()->get();
    fail(key, "must be a number");
  }
  static std::vector<double> number_array(const toml::node& n, const std::string& key, std::size_t expected) {
    const auto* arr = n.as_array();
    if (!arr) fail(key, "must be an array");
    if (expected && arr->size() != expected) fail(key, "must hold " + std::to_string(expected) + " values");
    std::vector<double> out;
    for (const auto& e : *arr) out.push_back(as_number(e, key));
    return out;
  }

 private:
  const toml::table* table_;
  std::string name_;
};

scenesim::Polygon polygon_from(const toml::node& n, const std::string& key) {
  const auto* arr = n.as_array();
  if (!arr || arr->size() < 3) fail(key, "a polygon needs at least 3 [x, y] vertices");
  scenesim::Polygon poly;
  for (const auto& v : *arr) {
    const auto xy = Section::number_array(v, key, 2);
    poly.vertices.push_back({xy[0], xy[1]});
  }
  return poly;
}

std::vector<scenesim::Polygon> polygons_from(const toml::node* n, const std::string& key) {
  std::vector<scenesim::Polygon> out;
  if (!n) return out;
  const auto* arr = n->as_array();
  if (!arr) fail(key, "must be an array of polygons");
  for (const auto& p : *arr) out.push_back(polygon_from(p, key));
  return out;
}

template <class Fn>
void validated(const char* what, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

SceneConfig parse_scene_config(std::string_view text, const std::filesystem::path& base_dir) {
  const toml::table root = parse_toml(text);
  reject_unknown(root, known_keys());
  SceneConfig cfg;
  {
    std::ostringstream os;
    os << root;
    cfg.canonical = os.str();
  }

  const Section scene(root["scene"].as_table(), "scene");
  cfg.name = scene.string("name", "scene");
  if (cfg.name.empty() || cfg.name.find_first_of(" \t\n") != std::string::npos)
    fail("scene.name", "must be a non-empty word");
  cfg.scene.background = scene.string("background", "procedural");
  if (cfg.scene.background != "procedural" && !base_dir.empty() &&
      std::filesystem::path(cfg.scene.background).is_relative())
    cfg.scene.background = (base_dir / cfg.scene.background).string();
  cfg.scene.walkable = polygons_from(scene.node("walkable"), "scene.walkable");
  cfg.scene.spawn_zones = polygons_from(scene.node("spawn_zones"), "scene.spawn_zones");
  if (const auto* obstacles = scene.node("obstacles")) {
    const auto* arr = obstacles->as_array();
    if (!arr) fail("scene.obstacles", "must be an array of tables");
    for (const auto& o : *arr) {
      const auto* t = o.as_table();
      if (!t) fail("scene.obstacles", "each obstacle must be a table");
      for (const auto& [key, value] : *t) {
        if (key != "footprint" && key != "height_mm") fail("scene.obstacles." + std::string(key.str()), "unknown key");
      }
      const Section os(t, "scene.obstacles");
      if (!os.node("footprint")) fail("scene.obstacles.footprint", "required");
      cfg.scene.obstacles.push_back({polygon_from(*os.node("footprint"), "scene.obstacles.footprint"),
                                     os.required_number("height_mm")});
    }
  }

  const Section cam(root["camera"].as_table(), "camera");
  auto& intr = cfg.scene.camera.intrinsics;
  intr.focal_mm = cam.required_number("f_mm");
  intr.pitch_x_mm = cam.required_number("dx_mm");
  intr.pitch_y_mm = cam.required_number("dy_mm");
  intr.u0 = cam.required_number("u0");
  intr.v0 = cam.required_number("v0");
  intr.width = static_cast<int>(cam.required_integer("width"));
  intr.height = static_cast<int>(cam.required_integer("height"));
  const auto rot = cam.numbers("rotation", 9);
  std::copy(rot.begin(), rot.end(), cfg.scene.camera.extrinsics.rotation.m.begin());
  const auto t = cam.numbers("translation_mm", 3);
  cfg.scene.camera.extrinsics.translation = {t[0], t[1], t[2]};
  validated("scene", [&] { cfg.scene.validate(); });

  const Section sim(root["sim"].as_table(), "sim");
  auto& s = cfg.sim;
  if (const auto* n = sim.node("n_agents")) {
    if (n->is_integer()) {
      s.n_agents_min = s.n_agents_max = static_cast<int>(n->as_integer()->get());
    } else {
      const auto range = Section::number_array(*n, "sim.n_agents", 2);
      s.n_agents_min = static_cast<int>(range[0]);
      s.n_agents_max = static_cast<int>(range[1]);
    }
  }
  if (sim.node("speed_mm_s")) {
    const auto speeds = sim.numbers("speed_mm_s", 2);
    s.speed_min = speeds[0];
    s.speed_max = speeds[1];
  }
  s.p_group = sim.number("p_group", s.p_group);
  s.p_phone = sim.number("p_phone", s.p_phone);
  s.dt = sim.number("dt_s", s.dt);
  s.frames = static_cast<int>(sim.integer("frames", s.frames));
  const long long seed = sim.integer("seed", 0);
  if (seed < 0) fail("sim.seed", "must be >= 0");
  s.rng_seed = static_cast<std::uint64_t>(seed);
  s.steps_per_frame = static_cast<int>(sim.integer("steps_per_frame", s.steps_per_frame));
  s.episode_frames = static_cast<int>(sim.integer("episode_frames", s.episode_frames));
  s.tuning.r_min = sim.number("r_min_mm", s.tuning.r_min);
  s.tuning.r_group = sim.number("r_group_mm", s.tuning.r_group);
  s.tuning.r_arrive = sim.number("r_arrive_mm", s.tuning.r_arrive);
  s.tuning.stride_length = sim.number("stride_length_mm", s.tuning.stride_length);
  validated("sim", [&] { s.validate(); });

  const Section render(root["render"].as_table(), "render");
  auto& style = cfg.render.style;
  style.ground_a = render.color("ground_a", style.ground_a);
  style.ground_b = render.color("ground_b", style.ground_b);
  style.offwalk = render.color("offwalk", style.offwalk);
  style.sky = render.color("sky", style.sky);
  style.obstacle = render.color("obstacle", style.obstacle);
  style.tile_mm = render.number("tile_mm", style.tile_mm);
  if (!(style.tile_mm > 0.0)) fail("render.tile_mm", "must be > 0");
  if (render.node("light_dir")) {
    const auto l = render.numbers("light_dir", 3);
    style.light_dir = {l[0], l[1], l[2]};
  }
  style.texture_seed = static_cast<std::uint64_t>(render.integer("texture_seed", 1));
  cfg.render.write_png = render.boolean("png", false);
  cfg.render.write_instance_pgm = render.boolean("instance_pgm", false);

  const Section train(root["train"].as_table(), "train");
  auto& ts = cfg.train;
  if (train.node("window")) {
    const auto w = train.numbers("window", 2);
    ts.hog.window_w = static_cast<int>(w[0]);
    ts.hog.window_h = static_cast<int>(w[1]);
  }
  ts.hog.cell = static_cast<int>(train.integer("cell", ts.hog.cell));
  ts.train.epochs = static_cast<int>(train.integer("epochs", ts.train.epochs));
  ts.train.learning_rate = train.number("learning_rate", ts.train.learning_rate);
  ts.train.lambda = train.number("lambda", ts.train.lambda);
  ts.train.hard_negative_rounds = static_cast<int>(train.integer("hard_negative_rounds", ts.train.hard_negative_rounds));
  ts.train.negatives_per_round = static_cast<int>(train.integer("negatives_per_round", ts.train.negatives_per_round));
  ts.train.rng_seed = static_cast<std::uint64_t>(train.integer("seed", 1));
  ts.train.mining_max_iou = train.number("mining_max_iou", ts.train.mining_max_iou);
  ts.negatives_per_frame = static_cast<int>(train.integer("negatives_per_frame", ts.negatives_per_frame));
  ts.mining_frames = static_cast<int>(train.integer("mining_frames", ts.mining_frames));
  ts.person_height_fraction = train.number("person_height_fraction", ts.person_height_fraction);
  ts.box_aspect = train.number("box_aspect", ts.box_aspect);
  ts.min_positive_height = static_cast<int>(train.integer("min_positive_height", ts.min_positive_height));
  ts.detect.scale_factor = train.number("scale_factor", ts.detect.scale_factor);
  ts.detect.stride = static_cast<int>(train.integer("stride", ts.detect.stride));
  ts.detect.score_threshold = train.number("score_threshold", ts.detect.score_threshold);
  ts.detect.nms_iou = train.number("nms_iou", ts.detect.nms_iou);
  ts.train.mining = ts.detect;
  validated("train", [&] {
    ts.hog.validate();
    ts.train.validate();
  });
  if (!(ts.person_height_fraction > 0.0 && ts.person_height_fraction <= 1.0))
    fail("train.person_height_fraction", "must lie in (0, 1]");
  if (!(ts.box_aspect > 0.0)) fail("train.box_aspect", "must be > 0");
  if (!(ts.detect.scale_factor > 1.0)) fail("train.scale_factor", "must be > 1");
  if (ts.detect.stride <= 0) fail("train.stride", "must be > 0");
  if (ts.negatives_per_frame < 0 || ts.mining_frames < 0) fail("train", "sample counts must be >= 0");

  const Section eval(root["eval"].as_table(), "eval");
  auto& ev = cfg.eval;
  ev.eval.iou_threshold = eval.number("iou_threshold", ev.eval.iou_threshold);
  const std::string mode = eval.string("ap_mode", "voc2007");
  if (mode == "voc2007") {
    ev.eval.ap_mode = evalkit::ApMode::Voc2007ElevenPoint;
  } else if (mode == "auc") {
    ev.eval.ap_mode = evalkit::ApMode::ContinuousAuc;
  } else {
    fail("eval.ap_mode", "must be \"voc2007\" or \"auc\"");
  }
  ev.eval.ignore_difficult = eval.boolean("ignore_difficult", true);
  ev.eval.area = eval.boolean("pixel_area", false) ? evalkit::AreaConvention::PixelInclusive
                                                   : evalkit::AreaConvention::Continuous;
  ev.difficult_threshold = eval.number("difficult_threshold", ev.difficult_threshold);
  validated("eval", [&] { ev.eval.validate(); });
  if (ev.difficult_threshold < 0.0 || ev.difficult_threshold > 1.0) fail("eval.difficult_threshold", "must lie in [0, 1]");
  return cfg;
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  return parse_scene_config(read_text(path), path.parent_path());
}

ExperimentSpec parse_experiment_spec(std::string_view text, const std::filesystem::path& base_dir) {
  const toml::table root = parse_toml(text);
  reject_unknown(root, {{"experiment", {"specific_scene", "generic_scene", "test_fraction", "seeds"}}});
  const Section ex(root["experiment"].as_table(), "experiment");
  ExperimentSpec spec;
  auto resolve = [&](const std::string& key) {
    std::filesystem::path p = ex.string(key, "");
    if (p.empty()) fail("experiment." + key, "required");
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  spec.specific_scene = resolve("specific_scene");
  spec.generic_scene = resolve("generic_scene");
  spec.test_fraction = ex.number("test_fraction", spec.test_fraction);
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) fail("experiment.test_fraction", "must lie in (0, 1)");
  if (ex.node("seeds")) {
    spec.seeds.clear();
    for (const double v : ex.numbers("seeds", 0)) {
      if (v < 0 || v != std::floor(v)) fail("experiment.seeds", "seeds must be non-negative integers");
      spec.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }
  if (spec.seeds.empty()) fail("experiment.seeds", "needs at least one seed");
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  return parse_experiment_spec(read_text(path), path.parent_path());
}

}  // namespace scenesynth::config
