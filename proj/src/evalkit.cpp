#include "scenesynth/evalkit.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace scenesynth::evalkit {
namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool counts(const GtBox& g, const EvalConfig& cfg) { return !(cfg.ignore_difficult && g.difficult); }

}  // namespace

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw Error("eval.iou_threshold must lie in (0, 1]");
}

double iou(const BoxF& a, const BoxF& b, AreaConvention area) {
  const double pad = area == AreaConvention::PixelInclusive ? 1.0 : 0.0;
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min) + pad;
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min) + pad;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (a.width() + pad) * (a.height() + pad);
  const double area_b = (b.width() + pad) * (b.height() + pad);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

int count_positives(const std::vector<GtBox>& gts, const EvalConfig& cfg) {
  return static_cast<int>(std::count_if(gts.begin(), gts.end(), [&](const GtBox& g) { return counts(g, cfg); }));
}

std::vector<MatchRecord> match_detections(const std::vector<ScoredBox>& dets, const std::vector<GtBox>& gts,
                                          const EvalConfig& cfg) {
  std::map<int, std::vector<int>> gts_by_frame;
  for (int i = 0; i < static_cast<int>(gts.size()); ++i) gts_by_frame[gts[static_cast<std::size_t>(i)].frame].push_back(i);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> matched(gts.size(), false);
  std::vector<MatchRecord> out;
  out.reserve(dets.size());
  for (const std::size_t d : order) {
    const ScoredBox& det = dets[d];
    MatchRecord rec{det.frame, det.score, MatchKind::FalsePositive, -1};
    int best = -1;
    double best_iou = -1.0;
    if (const auto it = gts_by_frame.find(det.frame); it != gts_by_frame.end()) {
      for (const int g : it->second) {
        const GtBox& gt = gts[static_cast<std::size_t>(g)];
        const bool difficult = cfg.ignore_difficult && gt.difficult;
        if (!difficult && matched[static_cast<std::size_t>(g)]) continue;
        const double o = iou(det.box, gt.box, cfg.area);
        // Equal overlaps resolve by box geometry so the result does not depend on gt order.
        const bool better =
            o > best_iou ||
            (o == best_iou && best >= 0 &&
             std::tie(gt.box.u_min, gt.box.v_min, gt.box.u_max, gt.box.v_max, gt.difficult) <
                 std::tie(gts[static_cast<std::size_t>(best)].box.u_min, gts[static_cast<std::size_t>(best)].box.v_min,
                          gts[static_cast<std::size_t>(best)].box.u_max, gts[static_cast<std::size_t>(best)].box.v_max,
                          gts[static_cast<std::size_t>(best)].difficult));
        if (better) {
          best = g;
          best_iou = o;
        }
      }
    }
    if (best >= 0 && best_iou >= cfg.iou_threshold) {
      if (cfg.ignore_difficult && gts[static_cast<std::size_t>(best)].difficult) {
        rec.kind = MatchKind::Ignored;
      } else {
        rec.kind = MatchKind::TruePositive;
        rec.gt_index = best;
        matched[static_cast<std::size_t>(best)] = true;
      }
    }
    out.push_back(rec);
  }
  return out;
}

PrCurve pr_curve(const std::vector<MatchRecord>& matches, int total_gt) {
  PrCurve curve;
  curve.total_gt = total_gt;
  int tp = 0;
  int seen = 0;
  for (const auto& m : matches) {
    if (m.kind == MatchKind::Ignored) continue;
    ++seen;
    if (m.kind == MatchKind::TruePositive) ++tp;
    const double recall = total_gt > 0 ? static_cast<double>(tp) / total_gt : 0.0;
    curve.points.push_back({recall, static_cast<double>(tp) / seen});
  }
  return curve;
}

ApResult average_precision(const std::vector<MatchRecord>& matches, int total_gt, const EvalConfig& cfg) {
  ApResult result;
  result.matches = matches;
  result.curve = pr_curve(matches, total_gt);
  const auto& pts = result.curve.points;
  if (total_gt == 0) {
    if (!pts.empty()) throw NoGroundTruth();
    result.ap = 1.0;
    return result;
  }
  if (pts.empty()) return result;

  if (cfg.ap_mode == ApMode::Voc2007ElevenPoint) {
    // Cumulative TP counts keep the recall-anchor comparison exact.
    std::vector<int> tp_count;
    tp_count.reserve(pts.size());
    int tp = 0;
    for (const auto& m : matches) {
      if (m.kind == MatchKind::Ignored) continue;
      if (m.kind == MatchKind::TruePositive) ++tp;
      tp_count.push_back(tp);
    }
    double sum = 0.0;
    for (int k = 0; k <= 10; ++k) {
      double best = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (static_cast<long long>(tp_count[i]) * 10 >= static_cast<long long>(k) * total_gt)
          best = std::max(best, pts[i].precision);
      }
      sum += best;
    }
    result.ap = sum / 11.0;
  } else {
    std::vector<double> rec{0.0};
    std::vector<double> prec{0.0};
    for (const auto& p : pts) {
      rec.push_back(p.recall);
      prec.push_back(p.precision);
    }
    rec.push_back(1.0);
    prec.push_back(0.0);
    for (std::size_t i = prec.size() - 1; i > 0; --i) prec[i - 1] = std::max(prec[i - 1], prec[i]);
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
      if (rec[i + 1] != rec[i]) area += (rec[i + 1] - rec[i]) * prec[i + 1];
    }
    result.ap = area;
  }
  return result;
}

ApResult evaluate(const std::vector<ScoredBox>& dets, const std::vector<GtBox>& gts, const EvalConfig& cfg) {
  return average_precision(match_detections(dets, gts, cfg), count_positives(gts, cfg), cfg);
}

Report emit_report(const std::vector<NamedResult>& results) {
  static constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                         "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  constexpr double kLeft = 70, kTop = 30, kSize = 360;
  auto px = [&](double r) { return fmt("%.2f", kLeft + r * kSize); };
  auto py = [&](double p) { return fmt("%.2f", kTop + (1.0 - p) * kSize); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"460\" viewBox=\"0 0 640 460\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"460\" fill=\"white\"/>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = t / 5.0;
    svg << "<line x1=\"" << px(v) << "\" y1=\"" << py(0) << "\" x2=\"" << px(v) << "\" y2=\"" << fmt("%.2f", kTop + kSize + 5)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px(v) << "\" y=\"" << fmt("%.2f", kTop + kSize + 20)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt("%.1f", v) << "</text>\n"
        << "<line x1=\"" << fmt("%.2f", kLeft - 5) << "\" y1=\"" << py(v) << "\" x2=\"" << px(0) << "\" y2=\"" << py(v)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt("%.2f", kLeft - 8) << "\" y=\"" << fmt("%.2f", kTop + (1.0 - v) * kSize + 4)
        << "\" font-size=\"12\" text-anchor=\"end\">" << fmt("%.1f", v) << "</text>\n";
  }
  svg << "<text x=\"" << px(0.5) << "\" y=\"" << fmt("%.2f", kTop + kSize + 40)
      << "\" font-size=\"14\" text-anchor=\"middle\">Recall</text>\n"
      << "<text x=\"20\" y=\"" << py(0.5) << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << py(0.5) << ")\">Precision</text>\n";

  for (std::size_t i = 0; i < results.size(); ++i) {
    const char* color = kColors[i % kColors.size()];
    const auto& pts = results[i].result.curve.points;
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) svg << (k ? " " : "") << px(pts[k].recall) << ',' << py(pts[k].precision);
    svg << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(i);
    svg << "<line x1=\"450\" y1=\"" << fmt("%.2f", ly) << "\" x2=\"470\" y2=\"" << fmt("%.2f", ly) << "\" stroke=\""
        << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"476\" y=\"" << fmt("%.2f", ly + 4) << "\" font-size=\"12\">" << results[i].name << " (AP "
        << fmt("%.3f", results[i].result.ap) << ")</text>\n";
  }
  svg << "</svg>\n";

  std::ostringstream csv;
  csv << "name,ap,baseline,increment\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    csv << results[i].name << ',' << fmt("%.6f", results[i].result.ap);
    if (i % 2 == 0 && i + 1 < results.size()) {
      csv << ',' << results[i + 1].name << ',' << fmt("%.6f", results[i].result.ap - results[i + 1].result.ap);
    } else {
      csv << ",,";
    }
    csv << '\n';
  }
  return {svg.str(), csv.str()};
}

}  // namespace scenesynth::evalkit
