#include "scenesynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace scenesynth::pipeline {
namespace fs = std::filesystem;

namespace {

constexpr double kClearVisibility = 0.8;
constexpr std::uint64_t kSampleStream = 0x73616d70;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string image_path(int index) { return "images/" + dataset::frame_stem(index) + ".ppm"; }

dataset::VocOptions voc_options(const config::SceneConfig& cfg) {
  dataset::VocOptions o;
  o.difficult_threshold = cfg.eval.difficult_threshold;
  return o;
}

int mining_stride(int frames, const config::TrainSettings& ts) {
  if (ts.mining_frames <= 0) return 0;
  return std::max(1, frames / ts.mining_frames);
}

bool keep_for_mining(int index, int stride, const config::TrainSettings& ts) {
  return stride > 0 && index % stride == 0 && index / stride < ts.mining_frames;
}

}  // namespace

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- FrameSource -----------------------------------------------------------

FrameSource::FrameSource(const config::SceneConfig& cfg, std::uint64_t seed, rasterlab::RenderMode mode)
    : cfg_(cfg),
      seed_(seed),
      mode_(mode),
      episode_length_(cfg.sim.episode_frames > 0 ? cfg.sim.episode_frames : std::max(1, cfg.sim.frames)),
      layer_(rasterlab::build_scene_layer(cfg.scene, cfg.render.style)) {}

void FrameSource::render_episode(int episode, int begin, int end,
                                 const std::function<void(FrameData&&)>& each) const {
  const auto& sim = cfg_.sim;
  const auto& cam = cfg_.scene.camera;
  const int first = episode * episode_length_;
  const int stop = std::min(end, first + episode_length_);
  if (stop <= std::max(begin, first)) return;

  Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(episode)));
  const auto first_id = static_cast<std::uint32_t>(episode) * static_cast<std::uint32_t>(sim.n_agents_max) + 1;
  auto agents = scenesim::spawn_agents(cfg_.scene, sim, rng, first_id);

  for (int f = first; f < stop; ++f) {
    if (f > first)
      for (int s = 0; s < sim.steps_per_frame; ++s) agents = scenesim::step(cfg_.scene, agents, sim, rng);
    if (f < begin) continue;

    std::vector<meshgen::TriangleMesh> meshes;
    meshes.reserve(agents.size());
    for (const auto& a : agents) {
      auto p = meshgen::appearance_from_seed(a.appearance_seed);
      p.gait_phase = a.gait_phase;
      p.pose = a.walking() ? meshgen::Pose::Walking : meshgen::Pose::Standing;
      meshes.push_back(meshgen::build_humanoid(p));
    }
    std::vector<rasterlab::PosedMesh> posed;
    for (std::size_t i = 0; i < agents.size(); ++i)
      posed.push_back({agents[i].id, &meshes[i], scenesim::agent_world_pose(agents[i])});

    FrameData fd;
    fd.index = f;
    fd.rendered = rasterlab::rasterize(layer_, posed, cam, mode_, cfg_.render.style.light_dir);

    std::vector<rasterlab::SoloRender> solos;
    std::vector<rasterlab::InstanceBox> boxes;
    std::vector<camgeom::Vec3World> world;
    for (const auto& pm : posed) {
      world.clear();
      for (const auto& v : pm.mesh->vertices) world.push_back(camgeom::Vec3World::from(pm.pose.apply(v)));
      if (auto b = camgeom::project_bbox(world, cam)) boxes.push_back({pm.instance_id, *b});
      solos.push_back(rasterlab::render_solo(pm, cam));
    }
    fd.record.frame_index = f;
    fd.record.image_path = image_path(f);
    fd.record.annotations = rasterlab::label_frame(fd.rendered, solos, boxes);
    each(std::move(fd));
  }
}

dataset::DatasetManifest make_manifest(const config::SceneConfig& cfg, std::uint64_t seed) {
  dataset::DatasetManifest m;
  m.name = cfg.name;
  m.image_size = {cfg.scene.camera.intrinsics.width, cfg.scene.camera.intrinsics.height};
  m.config_hash = dataset::fingerprint(cfg.canonical);
  m.rng_seed = seed;
  return m;
}

// ---- generate / render / label -----------------------------------------------

GenerateSummary cmd_generate(const config::SceneConfig& cfg, std::uint64_t seed, const fs::path& out_dir, int jobs) {
  const FrameSource source(cfg, seed);
  auto manifest = make_manifest(cfg, seed);
  const auto voc = voc_options(cfg);
  GenerateSummary summary;
  source.run(
      0, cfg.sim.frames, jobs,
      [&](FrameData&& f) {
        dataset::write_frame(out_dir, f.record, f.rendered.color, voc);
        const std::string stem = dataset::frame_stem(f.index);
        if (cfg.render.write_png) write_png(out_dir / "png" / (stem + ".png"), f.rendered.color);
        if (cfg.render.write_instance_pgm) {
          Image<std::uint16_t> ids(f.rendered.instance.width(), f.rendered.instance.height());
          for (int y = 0; y < ids.height(); ++y)
            for (int x = 0; x < ids.width(); ++x)
              ids(x, y) = static_cast<std::uint16_t>(std::min<std::uint32_t>(f.rendered.instance(x, y), 65535));
          write_pgm16(out_dir / "instances" / (stem + ".pgm"), ids);
        }
        return std::move(f.record);
      },
      [&](dataset::FrameRecord&& r) {
        summary.annotations += r.annotations.size();
        manifest.frames.push_back(std::move(r));
      });
  dataset::write_manifest(out_dir, manifest);
  summary.frames = static_cast<int>(manifest.frames.size());
  return summary;
}

int cmd_render(const config::SceneConfig& cfg, std::uint64_t seed, rasterlab::RenderMode mode, const fs::path& out_dir,
               int jobs) {
  const FrameSource source(cfg, seed, mode);
  fs::create_directories(out_dir / "renders");
  int count = 0;
  source.run(
      0, cfg.sim.frames, jobs,
      [&](FrameData&& f) {
        const std::string stem = dataset::frame_stem(f.index);
        write_ppm(out_dir / "renders" / (stem + ".ppm"), f.rendered.color);
        if (mode == rasterlab::RenderMode::InstanceColor) {
          Image<std::uint16_t> ids(f.rendered.instance.width(), f.rendered.instance.height());
          for (int y = 0; y < ids.height(); ++y)
            for (int x = 0; x < ids.width(); ++x)
              ids(x, y) = static_cast<std::uint16_t>(std::min<std::uint32_t>(f.rendered.instance(x, y), 65535));
          write_pgm16(out_dir / "renders" / (stem + "_id.pgm"), ids);
        }
        return 0;
      },
      [&](int) { ++count; });
  return count;
}

LabelSummary cmd_label(const config::SceneConfig& cfg, std::uint64_t seed, const fs::path& out_dir, int jobs) {
  struct Row {
    dataset::FrameRecord record;
    std::vector<BoxI> ccl;
  };
  const FrameSource source(cfg, seed);
  LabelSummary summary;
  std::ostringstream labels, ccl;
  labels << "frame,id,x1,y1,x2,y2,visibility,truncated\n";
  ccl << "frame,x1,y1,x2,y2\n";
  source.run(
      0, cfg.sim.frames, jobs,
      [&](FrameData&& f) { return Row{std::move(f.record), rasterlab::ccl_label(rasterlab::foreground_mask(f.rendered))}; },
      [&](Row&& row) {
        ++summary.frames;
        std::size_t visible = 0;
        for (const auto& a : row.record.annotations) {
          if (a.visible_bbox) ++visible;
          const auto& b = a.full_bbox;
          labels << row.record.frame_index << ',' << a.instance_id << ',' << b.x_min << ',' << b.y_min << ','
                 << b.x_max << ',' << b.y_max << ',' << fmt("%.6f", a.visibility) << ',' << (a.truncated ? 1 : 0)
                 << '\n';
        }
        for (const auto& b : row.ccl)
          ccl << row.record.frame_index << ',' << b.x_min << ',' << b.y_min << ',' << b.x_max << ',' << b.y_max << '\n';
        summary.pedestrians += visible;
        summary.ccl_boxes += row.ccl.size();
        if (row.ccl.size() < visible) ++summary.merged_frames;
      });
  write_text(out_dir / "labels.csv", labels.str());
  write_text(out_dir / "ccl.csv", ccl.str());
  return summary;
}

dataset::CsvImport cmd_import(const fs::path& csv, const ImportOptions& options, const fs::path& out_dir) {
  auto imported = dataset::import_csv_annotations(csv, options.columns, options.convention);
  dataset::ImageSize size = options.image_size;
  if (options.rescale_to) {
    imported.frames = dataset::rescale_labels(imported.frames, options.image_size, *options.rescale_to);
    size = *options.rescale_to;
  }
  dataset::DatasetManifest m;
  m.name = options.name;
  m.image_size = size;
  m.config_hash = dataset::fingerprint(read_text(csv));
  for (const auto& r : imported.frames)
    write_text(out_dir / "annotations" / (dataset::frame_stem(r.frame_index) + ".xml"), dataset::export_voc_xml(r, size));
  m.frames = imported.frames;
  dataset::write_manifest(out_dir, m);
  return imported;
}

// ---- samples, training, detection ----------------------------------------------

BoxF person_to_window(const BoxF& person, const config::TrainSettings& ts) {
  const double wh = person.height() / ts.person_height_fraction;
  const double ww = wh * ts.hog.window_w / ts.hog.window_h;
  const double cx = 0.5 * (person.u_min + person.u_max);
  const double cy = 0.5 * (person.v_min + person.v_max);
  return {cx - ww / 2, cy - wh / 2, cx + ww / 2, cy + wh / 2};
}

BoxF window_to_person(const BoxF& window, const config::TrainSettings& ts) {
  const double h = window.height() * ts.person_height_fraction;
  const double w = h * ts.box_aspect;
  const double cx = 0.5 * (window.u_min + window.u_max);
  const double cy = 0.5 * (window.v_min + window.v_max);
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

FrameSamples extract_samples(const GrayImage& image, const std::vector<rasterlab::AnnotationRecord>& records,
                             const config::TrainSettings& ts, std::uint64_t seed, bool keep) {
  const auto& hog = ts.hog;
  FrameSamples out;
  std::vector<BoxF> windows;
  for (const auto& r : records) windows.push_back(person_to_window(r.full_bbox.to_continuous(), ts));

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.visibility < kClearVisibility || r.truncated || r.full_bbox.height() < ts.min_positive_height) continue;
    const BoxF& w = windows[i];
    const GrayImage patch = resample(image, w.u_min, w.v_min, w.width(), w.height(), hog.window_w, hog.window_h);
    out.positives.push_back(detect::extract_hog(patch, hog));
    out.positives.push_back(detect::extract_hog(flip_horizontal(patch), hog));
  }

  Rng rng(seed);
  const double max_h = std::min<double>(image.height(), 3.0 * hog.window_h);
  if (max_h >= hog.window_h) {
    for (int n = 0; n < ts.negatives_per_frame; ++n) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const double wh = rng.uniform(hog.window_h, max_h);
        const double ww = wh * hog.window_w / hog.window_h;
        if (ww > image.width()) continue;
        const double x = rng.uniform(0.0, image.width() - ww);
        const double y = rng.uniform(0.0, image.height() - wh);
        const BoxF cand{x, y, x + ww, y + wh};
        const bool clear = std::all_of(windows.begin(), windows.end(), [&](const BoxF& p) {
          return evalkit::iou(cand, p) < ts.train.mining_max_iou;
        });
        if (!clear) continue;
        out.negatives.push_back(
            detect::extract_hog(resample(image, x, y, ww, wh, hog.window_w, hog.window_h), hog));
        break;
      }
    }
  }
  if (keep) out.mining = detect::MiningScene{image, windows};
  return out;
}

void SampleCollector::add(FrameSamples&& s) {
  for (auto& f : s.positives) positives_.push_back(std::move(f));
  for (auto& f : s.negatives) negatives_.push_back(std::move(f));
  if (s.mining) mining_.push_back(std::move(*s.mining));
}

detect::LinearModel SampleCollector::train() const {
  return detect::train(positives_, negatives_, mining_, ts_.hog, ts_.train);
}

std::vector<detect::Detection> detect_people(const GrayImage& image, const detect::LinearModel& model,
                                             const config::TrainSettings& ts) {
  auto dets = detect::detect(image, model, ts.hog, ts.detect);
  for (auto& d : dets) d.box = window_to_person(d.box, ts);
  return dets;
}

detect::LinearModel cmd_train(const config::SceneConfig& cfg, const fs::path& dataset_dir, const fs::path& model_path) {
  const auto manifest = dataset::read_manifest(dataset_dir);
  const int stride = mining_stride(static_cast<int>(manifest.frames.size()), cfg.train);
  SampleCollector collector(cfg.train);
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const auto& r = manifest.frames[i];
    const GrayImage gray = to_gray(read_ppm(dataset_dir / r.image_path));
    collector.add(extract_samples(gray, r.annotations, cfg.train,
                                  mix_seed(manifest.rng_seed ^ kSampleStream, static_cast<std::uint64_t>(r.frame_index)),
                                  keep_for_mining(static_cast<int>(i), stride, cfg.train)));
  }
  auto model = collector.train();
  detect::save_model(model_path, model, cfg.train.hog);
  return model;
}

std::string format_detections(const std::vector<evalkit::ScoredBox>& dets) {
  std::ostringstream os;
  os << "frame,score,x1,y1,x2,y2\n";
  for (const auto& d : dets)
    os << d.frame << ',' << fmt("%.9g", d.score) << ',' << fmt("%.4f", d.box.u_min) << ',' << fmt("%.4f", d.box.v_min)
       << ',' << fmt("%.4f", d.box.u_max) << ',' << fmt("%.4f", d.box.v_max) << '\n';
  return os.str();
}

std::vector<evalkit::ScoredBox> parse_detections(std::string_view text) {
  std::vector<evalkit::ScoredBox> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("frame", 0) == 0)) continue;
    evalkit::ScoredBox d;
    char extra = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf%c", &d.frame, &d.score, &d.box.u_min, &d.box.v_min,
                    &d.box.u_max, &d.box.v_max, &extra) != 6)
      throw dataset::ParseError("detections line " + std::to_string(lineno) + ": expected frame,score,x1,y1,x2,y2");
    out.push_back(d);
  }
  return out;
}

std::vector<evalkit::ScoredBox> read_detections(const fs::path& path) { return parse_detections(read_text(path)); }

std::vector<evalkit::ScoredBox> cmd_detect(const config::SceneConfig& cfg, const fs::path& model_path,
                                           const fs::path& dataset_dir, const fs::path& out_csv, int jobs) {
  const auto [model, hog] = detect::load_model(model_path);
  auto ts = cfg.train;
  ts.hog = hog;
  const auto manifest = dataset::read_manifest(dataset_dir);
  std::vector<std::vector<evalkit::ScoredBox>> per_frame(manifest.frames.size());
  parallel_for(per_frame.size(), jobs, [&](std::size_t i) {
    const auto& r = manifest.frames[i];
    for (const auto& d : detect_people(to_gray(read_ppm(dataset_dir / r.image_path)), model, ts))
      per_frame[i].push_back({r.frame_index, d.box, d.score});
  });
  std::vector<evalkit::ScoredBox> all;
  for (auto& v : per_frame) all.insert(all.end(), v.begin(), v.end());
  write_text(out_csv, format_detections(all));
  return all;
}

std::vector<evalkit::GtBox> dataset_ground_truth(const dataset::DatasetManifest& manifest, double difficult_threshold) {
  std::vector<evalkit::GtBox> gts;
  for (const auto& r : manifest.frames)
    for (const auto& g : dataset::ground_truth(r, difficult_threshold))
      gts.push_back({r.frame_index, g.box.to_continuous(), g.difficult});
  return gts;
}

std::vector<evalkit::NamedResult> cmd_eval(const config::SceneConfig& cfg, const fs::path& dataset_dir,
                                           const std::vector<fs::path>& detection_files, const fs::path& out_dir) {
  const auto gts = dataset_ground_truth(dataset::read_manifest(dataset_dir), cfg.eval.difficult_threshold);
  std::vector<evalkit::NamedResult> results;
  for (const auto& file : detection_files)
    results.push_back({file.stem().string(), evalkit::evaluate(read_detections(file), gts, cfg.eval.eval)});
  const auto report = evalkit::emit_report(results);
  write_text(out_dir / "pr.svg", report.svg);
  write_text(out_dir / "ap.csv", report.csv);
  return results;
}

// ---- experiment ----------------------------------------------------------------

namespace {

struct TrainFrame {
  dataset::FrameRecord record;
  FrameSamples samples;
};

detect::LinearModel train_on(const FrameSource& source, int frames, const config::TrainSettings& ts,
                             dataset::DatasetManifest& manifest, const fs::path& dir, const ExperimentOptions& opt) {
  SampleCollector collector(ts);
  const int stride = mining_stride(frames, ts);
  const auto voc = voc_options(source.config());
  source.run(
      0, frames, opt.jobs,
      [&](FrameData&& f) {
        if (opt.keep_images) dataset::write_frame(dir, f.record, f.rendered.color, voc);
        auto samples = extract_samples(to_gray(f.rendered.color), f.record.annotations, ts,
                                       mix_seed(source.seed() ^ kSampleStream, static_cast<std::uint64_t>(f.index)),
                                       keep_for_mining(f.index, stride, ts));
        return TrainFrame{std::move(f.record), std::move(samples)};
      },
      [&](TrainFrame&& t) {
        manifest.frames.push_back(std::move(t.record));
        collector.add(std::move(t.samples));
      });
  try {
    return collector.train();
  } catch (const detect::InsufficientData& e) {
    throw ExperimentError(source.config().name + ": " + e.what());
  }
}

}  // namespace

ExperimentResult run_experiment(const config::SceneConfig& matched, const config::SceneConfig& generic,
                                const config::ExperimentSpec& spec, const fs::path& out_dir,
                                const ExperimentOptions& options) {
  const int total = matched.sim.frames;
  const int n_test = static_cast<int>(std::lround(total * spec.test_fraction));
  const int n_train = total - n_test;
  if (n_test < 1 || n_train < 1)
    throw config::ConfigError("experiment: sim.frames too small for test_fraction");
  const auto& ts = matched.train;

  ExperimentResult result;
  std::vector<evalkit::NamedResult> named;
  for (const std::uint64_t seed : spec.seeds) {
    const fs::path seed_dir = out_dir / ("seed_" + std::to_string(seed));
    const FrameSource ms(matched, mix_seed(seed, 1));
    const FrameSource gs(generic, mix_seed(seed, 2));
    auto m_manifest = make_manifest(matched, ms.seed());
    auto g_manifest = make_manifest(generic, gs.seed());

    const auto m_model = train_on(ms, n_train, ts, m_manifest, seed_dir / "matched", options);
    const auto g_model = train_on(gs, n_train, ts, g_manifest, seed_dir / "generic", options);
    detect::save_model(seed_dir / "matched.model", m_model, ts.hog);
    detect::save_model(seed_dir / "generic.model", g_model, ts.hog);

    struct TestFrame {
      dataset::FrameRecord record;
      std::vector<detect::Detection> m, g;
    };
    std::vector<evalkit::ScoredBox> m_dets, g_dets;
    dataset::DatasetManifest test_manifest = m_manifest;
    test_manifest.frames.clear();
    const auto voc = voc_options(matched);
    ms.run(
        n_train, total, options.jobs,
        [&](FrameData&& f) {
          if (options.keep_images) dataset::write_frame(seed_dir / "matched", f.record, f.rendered.color, voc);
          const GrayImage gray = to_gray(f.rendered.color);
          return TestFrame{std::move(f.record), detect_people(gray, m_model, ts), detect_people(gray, g_model, ts)};
        },
        [&](TestFrame&& t) {
          for (const auto& d : t.m) m_dets.push_back({t.record.frame_index, d.box, d.score});
          for (const auto& d : t.g) g_dets.push_back({t.record.frame_index, d.box, d.score});
          test_manifest.frames.push_back(t.record);
          m_manifest.frames.push_back(std::move(t.record));
        });
    dataset::write_manifest(seed_dir / "matched", m_manifest);
    dataset::write_manifest(seed_dir / "generic", g_manifest);

    const auto gts = dataset_ground_truth(test_manifest, matched.eval.difficult_threshold);
    SeedResult sr;
    sr.seed = seed;
    try {
      sr.matched = evalkit::evaluate(m_dets, gts, matched.eval.eval);
      sr.generic = evalkit::evaluate(g_dets, gts, matched.eval.eval);
    } catch (const evalkit::NoGroundTruth& e) {
      throw ExperimentError(std::string("seed ") + std::to_string(seed) + ": " + e.what());
    }
    write_text(seed_dir / "matched_detections.csv", format_detections(m_dets));
    write_text(seed_dir / "generic_detections.csv", format_detections(g_dets));
    named.push_back({"matched_s" + std::to_string(seed), sr.matched});
    named.push_back({"generic_s" + std::to_string(seed), sr.generic});
    result.seeds.push_back(std::move(sr));
  }

  double sum_m = 0, sum_g = 0;
  std::ostringstream csv;
  csv << "seed,ap_matched,ap_generic,increment\n";
  for (const auto& s : result.seeds) {
    sum_m += s.matched.ap;
    sum_g += s.generic.ap;
    csv << s.seed << ',' << fmt("%.6f", s.matched.ap) << ',' << fmt("%.6f", s.generic.ap) << ','
        << fmt("%.6f", s.increment()) << '\n';
  }
  const double n = static_cast<double>(result.seeds.size());
  result.mean_increment = (sum_m - sum_g) / n;
  csv << "mean," << fmt("%.6f", sum_m / n) << ',' << fmt("%.6f", sum_g / n) << ',' << fmt("%.6f", result.mean_increment)
      << '\n';
  result.summary_csv = csv.str();
  result.summary_line =
      "seeds=" + std::to_string(result.seeds.size()) + ", mean_increment=" + fmt("%.6f", result.mean_increment);

  const auto report = evalkit::emit_report(named);
  write_text(out_dir / "pr.svg", report.svg);
  write_text(out_dir / "ap.csv", report.csv);
  write_text(out_dir / "summary.csv", result.summary_csv);
  write_text(out_dir / "summary.txt", result.summary_line + "\n");
  return result;
}

ExperimentResult cmd_experiment(const config::ExperimentSpec& spec, const fs::path& out_dir,
                                const ExperimentOptions& options) {
  const auto matched = config::load_scene_config(spec.specific_scene);
  const auto generic = config::load_scene_config(spec.generic_scene);
  return run_experiment(matched, generic, spec, out_dir, options);
}

}  // namespace scenesynth::pipeline
