#include "scenesynth/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "scenesynth/evalkit.hpp"
#include "scenesynth/rng.hpp"

namespace scenesynth::detect {
namespace {

struct DenseHog {
  int blocks_x = 0;
  int blocks_y = 0;
  int block_len = 0;
  std::vector<float> blocks;

  std::size_t offset(int bx, int by) const {
    return (static_cast<std::size_t>(by) * static_cast<std::size_t>(blocks_x) + static_cast<std::size_t>(bx)) *
           static_cast<std::size_t>(block_len);
  }
  const float* block(int bx, int by) const { return blocks.data() + offset(bx, by); }
  float* block(int bx, int by) { return blocks.data() + offset(bx, by); }
};

/// Histograms for every full cell of the image; gradients clamp at the image border.
std::vector<float> compute_cells(const GrayImage& img, const HogParams& p, int& cells_x, int& cells_y) {
  cells_x = img.width() / p.cell;
  cells_y = img.height() / p.cell;
  std::vector<float> hist(static_cast<std::size_t>(cells_x * cells_y * p.bins), 0.0f);
  const int w = cells_x * p.cell;
  const int h = cells_y * p.cell;
  const int iw = img.width();
  const int ih = img.height();
  const double bin_width = 180.0 / p.bins;
  for (int y = 0; y < h; ++y) {
    const auto up = img.row(std::max(y - 1, 0));
    const auto mid = img.row(y);
    const auto down = img.row(std::min(y + 1, ih - 1));
    float* cell_row = hist.data() + static_cast<std::size_t>((y / p.cell) * cells_x * p.bins);
    for (int x = 0; x < w; ++x) {
      const double gx = static_cast<double>(mid[static_cast<std::size_t>(std::min(x + 1, iw - 1))]) -
                        static_cast<double>(mid[static_cast<std::size_t>(std::max(x - 1, 0))]);
      const double gy = static_cast<double>(down[static_cast<std::size_t>(x)]) - static_cast<double>(up[static_cast<std::size_t>(x)]);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      // Linear vote between the two nearest bin centers (centers at (k + 0.5) * bin_width).
      const double pos = angle / bin_width - 0.5;
      const double lower = std::floor(pos);
      const double frac = pos - lower;
      const int b0 = (static_cast<int>(lower) + p.bins) % p.bins;
      const int b1 = (b0 + 1) % p.bins;
      float* cell = cell_row + static_cast<std::size_t>((x / p.cell) * p.bins);
      cell[b0] += static_cast<float>(mag * (1.0 - frac));
      cell[b1] += static_cast<float>(mag * frac);
    }
  }
  return hist;
}

void l2_hys(float* v, int n, double clip) {
  auto normalize = [&]() {
    double sq = 0.0;
    for (int i = 0; i < n; ++i) sq += static_cast<double>(v[i]) * v[i];
    const double inv = 1.0 / std::sqrt(sq + kNormEpsilon * kNormEpsilon);
    for (int i = 0; i < n; ++i) v[i] = static_cast<float>(v[i] * inv);
  };
  normalize();
  for (int i = 0; i < n; ++i) v[i] = std::min(v[i], static_cast<float>(clip));
  normalize();
}

DenseHog dense_hog(const GrayImage& img, const HogParams& p) {
  int cells_x = 0;
  int cells_y = 0;
  const auto cells = compute_cells(img, p, cells_x, cells_y);
  DenseHog d;
  d.block_len = p.block_length();
  d.blocks_x = cells_x >= p.block_cells ? (cells_x - p.block_cells) / p.block_stride_cells + 1 : 0;
  d.blocks_y = cells_y >= p.block_cells ? (cells_y - p.block_cells) / p.block_stride_cells + 1 : 0;
  d.blocks.resize(static_cast<std::size_t>(d.blocks_x * d.blocks_y * d.block_len));
  for (int by = 0; by < d.blocks_y; ++by) {
    for (int bx = 0; bx < d.blocks_x; ++bx) {
      float* out = d.block(bx, by);
      int k = 0;
      for (int cy = 0; cy < p.block_cells; ++cy) {
        for (int cx = 0; cx < p.block_cells; ++cx) {
          const int cell_x = bx * p.block_stride_cells + cx;
          const int cell_y = by * p.block_stride_cells + cy;
          const float* src = cells.data() + static_cast<std::size_t>((cell_y * cells_x + cell_x) * p.bins);
          std::copy(src, src + p.bins, out + k);
          k += p.bins;
        }
      }
      l2_hys(out, d.block_len, p.clip);
    }
  }
  return d;
}

/// Window whose top-left block is (bx, by); weights laid out in row-major block order.
double window_score(const DenseHog& d, const LinearModel& model, const HogParams& p, int bx, int by) {
  double s = model.bias;
  const int wbx = p.blocks_x();
  const int wby = p.blocks_y();
  const double* w = model.weights.data();
  for (int j = 0; j < wby; ++j) {
    for (int i = 0; i < wbx; ++i) {
      const float* f = d.block(bx + i, by + j);
      const double* wb = w + static_cast<std::size_t>((j * wbx + i) * d.block_len);
      double acc = 0.0;
      for (int k = 0; k < d.block_len; ++k) acc += wb[k] * f[k];
      s += acc;
    }
  }
  return s;
}

Feature window_feature(const DenseHog& d, const HogParams& p, int bx, int by) {
  Feature f;
  f.reserve(static_cast<std::size_t>(p.feature_length()));
  for (int j = 0; j < p.blocks_y(); ++j)
    for (int i = 0; i < p.blocks_x(); ++i) {
      const float* b = d.block(bx + i, by + j);
      f.insert(f.end(), b, b + d.block_len);
    }
  return f;
}

double dot(const std::vector<double>& w, std::span<const float> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::ostream& os, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(os, bits);
}
std::uint64_t get_u64(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == EOF) throw IoError("model file is truncated");
    v |= static_cast<std::uint64_t>(c) << (8 * i);
  }
  return v;
}
double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is, 8);
  double v = 0.0;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void HogParams::validate() const {
  if (cell <= 0 || window_w <= 0 || window_h <= 0 || window_w % cell != 0 || window_h % cell != 0)
    throw SizeMismatch("HOG window must be divisible by the cell size");
  if (block_cells <= 0 || block_stride_cells <= 0 || block_cells > cells_x() || block_cells > cells_y())
    throw SizeMismatch("HOG block does not fit in the window");
  if (bins <= 0 || !(clip > 0.0)) throw SizeMismatch("HOG bins and clip must be positive");
}

void TrainConfig::validate() const {
  if (epochs <= 0 || !(learning_rate > 0.0) || !(lambda > 0.0) || negatives_per_round <= 0)
    throw InsufficientData("train config: epochs, learning_rate, lambda and negatives_per_round must be positive");
  if (hard_negative_rounds < 0) throw InsufficientData("train config: hard_negative_rounds must be >= 0");
}

double LinearModel::score(std::span<const float> feature) const { return bias + dot(weights, feature); }

std::vector<float> cell_histograms(const GrayImage& patch, const HogParams& p) {
  int cx = 0;
  int cy = 0;
  return compute_cells(patch, p, cx, cy);
}

Feature extract_hog(const GrayImage& patch, const HogParams& p) {
  if (patch.width() != p.window_w || patch.height() != p.window_h)
    throw SizeMismatch("patch is " + std::to_string(patch.width()) + "x" + std::to_string(patch.height()) +
                       ", window is " + std::to_string(p.window_w) + "x" + std::to_string(p.window_h));
  return window_feature(dense_hog(patch, p), p, 0, 0);
}

double hinge_objective(const LinearModel& model, const TrainingSet& data, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    loss += std::max(0.0, 1.0 - data.labels[i] * model.score(data.features[i]));
  double reg = 0.0;
  for (const double w : model.weights) reg += w * w;
  return 0.5 * lambda * reg + (data.size() ? loss / static_cast<double>(data.size()) : 0.0);
}

LinearModel hinge_gradient(const LinearModel& model, const TrainingSet& data, double lambda) {
  LinearModel g;
  g.weights.resize(model.weights.size());
  for (std::size_t k = 0; k < g.weights.size(); ++k) g.weights[k] = lambda * model.weights[k];
  const double inv_n = data.size() ? 1.0 / static_cast<double>(data.size()) : 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int y = data.labels[i];
    if (y * model.score(data.features[i]) >= 1.0) continue;
    const auto& x = data.features[i];
    for (std::size_t k = 0; k < g.weights.size(); ++k) g.weights[k] -= inv_n * y * x[k];
    g.bias -= inv_n * y;
  }
  return g;
}

LinearModel fit_sgd(const TrainingSet& data, const TrainConfig& cfg, int feature_length,
                    std::vector<double>* epoch_objectives) {
  LinearModel model;
  model.weights.assign(static_cast<std::size_t>(feature_length), 0.0);
  Rng rng(mix_seed(cfg.rng_seed, 0x736764));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const double eta = cfg.learning_rate / (1.0 + epoch);
    const double shrink = 1.0 - eta * cfg.lambda;
    for (const std::size_t idx : order) {
      const int y = data.labels[idx];
      const auto& x = data.features[idx];
      const double margin = y * model.score(x);
      for (auto& w : model.weights) w *= shrink;
      if (margin < 1.0) {
        for (std::size_t k = 0; k < model.weights.size(); ++k) model.weights[k] += eta * y * x[k];
        model.bias += eta * y;
      }
    }
    if (epoch_objectives) epoch_objectives->push_back(hinge_objective(model, data, cfg.lambda));
  }
  return model;
}

LinearModel train(const std::vector<Feature>& positives, const std::vector<Feature>& negatives,
                  std::span<const MiningScene> scenes_for_mining, const HogParams& params, const TrainConfig& cfg) {
  params.validate();
  cfg.validate();
  if (positives.empty() || negatives.empty())
    throw InsufficientData("training needs at least one positive and one negative sample");
  const int dim = params.feature_length();
  TrainingSet data;
  for (const auto& f : positives) data.add(f, +1);
  for (const auto& f : negatives) data.add(f, -1);
  for (const auto& f : data.features) {
    if (static_cast<int>(f.size()) != dim) throw SizeMismatch("training feature has the wrong dimension");
  }

  LinearModel model = fit_sgd(data, cfg, dim);
  for (int round = 0; round < cfg.hard_negative_rounds; ++round) {
    struct Candidate {
      double score;
      std::size_t scene;
      BoxF box;
    };
    std::vector<Candidate> candidates;
    DetectParams mining = cfg.mining;
    mining.score_threshold = -1.0;  // anything inside the margin is informative
    for (std::size_t s = 0; s < scenes_for_mining.size(); ++s) {
      const auto& scene = scenes_for_mining[s];
      if (scene.image.width() < params.window_w || scene.image.height() < params.window_h) continue;
      for (const auto& det : detect(scene.image, model, params, mining)) {
        const bool clear = std::all_of(scene.people.begin(), scene.people.end(), [&](const BoxF& person) {
          return evalkit::iou(det.box, person) < cfg.mining_max_iou;
        });
        if (clear) candidates.push_back({det.score, s, det.box});
      }
    }
    if (candidates.empty()) break;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    const std::size_t take = std::min(candidates.size(), static_cast<std::size_t>(cfg.negatives_per_round));
    for (std::size_t k = 0; k < take; ++k) {
      const auto& c = candidates[k];
      const GrayImage patch = resample(scenes_for_mining[c.scene].image, c.box.u_min, c.box.v_min, c.box.width(),
                                       c.box.height(), params.window_w, params.window_h);
      data.add(extract_hog(patch, params), -1);
    }
    model = fit_sgd(data, cfg, dim);
  }
  return model;
}

std::vector<Detection> score_windows(const GrayImage& image, const LinearModel& model, const HogParams& params,
                                     const DetectParams& dp) {
  params.validate();
  if (image.width() < params.window_w || image.height() < params.window_h)
    throw ImageTooSmall("image " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                        " is smaller than the detection window");
  if (static_cast<int>(model.weights.size()) != params.feature_length())
    throw SizeMismatch("model weight count does not match the HOG dimension");

  const int stride = std::max(1, dp.stride);
  const bool dense = stride % params.cell == 0 && (stride / params.cell) % params.block_stride_cells == 0;
  std::vector<Detection> out;
  for (int level = 0; level < dp.max_levels; ++level) {
    const double scale = std::pow(dp.scale_factor, level);
    const int lw = level == 0 ? image.width() : static_cast<int>(std::lround(image.width() / scale));
    const int lh = level == 0 ? image.height() : static_cast<int>(std::lround(image.height() / scale));
    if (lw < params.window_w || lh < params.window_h) break;
    const GrayImage scaled = level == 0 ? GrayImage{} : resample(image, 0, 0, image.width(), image.height(), lw, lh);
    const GrayImage& img = level == 0 ? image : scaled;
    const double sx = static_cast<double>(image.width()) / lw;
    const double sy = static_cast<double>(image.height()) / lh;
    auto emit = [&](int x, int y, double score) {
      out.push_back({{x * sx, y * sy, (x + params.window_w) * sx, (y + params.window_h) * sy}, score});
    };

    if (dense) {
      const DenseHog d = dense_hog(img, params);
      const int step = stride / params.cell / params.block_stride_cells;
      for (int by = 0; by + params.blocks_y() <= d.blocks_y; by += step)
        for (int bx = 0; bx + params.blocks_x() <= d.blocks_x; bx += step)
          emit(bx * params.block_stride_cells * params.cell, by * params.block_stride_cells * params.cell,
               window_score(d, model, params, bx, by));
    } else {
      for (int y = 0; y + params.window_h <= lh; y += stride) {
        for (int x = 0; x + params.window_w <= lw; x += stride) {
          const GrayImage patch = resample(img, x, y, params.window_w, params.window_h, params.window_w, params.window_h);
          emit(x, y, model.score(extract_hog(patch, params)));
        }
      }
    }
    if (!(dp.scale_factor > 1.0)) break;
  }
  return out;
}

std::vector<Detection> detect(const GrayImage& image, const LinearModel& model, const HogParams& params,
                              const DetectParams& dp) {
  auto windows = score_windows(image, model, params, dp);
  std::erase_if(windows, [&](const Detection& d) { return d.score < dp.score_threshold; });
  return nms(std::move(windows), dp.nms_iou);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return evalkit::iou(d.box, k.box) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

void save_model(const std::filesystem::path& path, const LinearModel& model, const HogParams& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write("SSPD1", 5);
  for (const int v : {params.window_w, params.window_h, params.cell, params.block_cells, params.block_stride_cells,
                      params.bins})
    put_u32(os, static_cast<std::uint32_t>(v));
  put_f64(os, params.clip);
  put_u64(os, model.weights.size());
  for (const double w : model.weights) put_f64(os, w);
  put_f64(os, model.bias);
  if (!os) throw IoError("failed writing " + path.string());
}

std::pair<LinearModel, HogParams> load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[5] = {};
  is.read(magic, 5);
  if (!is || std::memcmp(magic, "SSPD1", 5) != 0) throw IoError(path.string() + " is not an SSPD1 model");
  HogParams p;
  std::array<int*, 6> ints = {&p.window_w, &p.window_h, &p.cell, &p.block_cells, &p.block_stride_cells, &p.bins};
  for (int* v : ints) *v = static_cast<int>(get_u64(is, 4));
  p.clip = get_f64(is);
  p.validate();
  const std::uint64_t n = get_u64(is, 8);
  if (n != static_cast<std::uint64_t>(p.feature_length())) throw IoError("model weight count does not match its HOG block");
  LinearModel m;
  m.weights.resize(n);
  for (auto& w : m.weights) w = get_f64(is);
  m.bias = get_f64(is);
  return {m, p};
}

}  // namespace scenesynth::detect
