#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "support.hpp"

using namespace scenesynth;
using namespace scenesynth::evalkit;

namespace {

BoxF random_box(Rng& rng) {
  const double u = rng.uniform(0, 80), v = rng.uniform(0, 80);
  return {u, v, u + rng.uniform(5, 40), v + rng.uniform(5, 40)};
}

struct Case {
  std::vector<ScoredBox> dets;
  std::vector<GtBox> gts;
};

// Detections are jittered copies of gts or free boxes, so both TPs and FPs occur.
Case random_case(Rng& rng, int max_dets = 20, int max_gts = 10, bool difficult = true) {
  Case c;
  const int frames = static_cast<int>(rng.between(1, 3));
  const int ng = static_cast<int>(rng.between(1, max_gts));
  for (int g = 0; g < ng; ++g)
    c.gts.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(frames))), random_box(rng),
                     difficult && g > 0 && rng.bernoulli(0.15)});
  const int nd = static_cast<int>(rng.between(0, max_dets));
  for (int d = 0; d < nd; ++d) {
    ScoredBox s;
    if (rng.bernoulli(0.7)) {
      const auto& g = c.gts[rng.below(c.gts.size())];
      const double j = rng.uniform(0, 8);
      s = {g.frame, {g.box.u_min + rng.uniform(-j, j), g.box.v_min + rng.uniform(-j, j), g.box.u_max + rng.uniform(-j, j),
                     g.box.v_max + rng.uniform(-j, j)}};
    } else {
      s = {static_cast<int>(rng.below(static_cast<std::uint64_t>(frames))), random_box(rng)};
    }
    s.score = rng.bernoulli(0.2) ? 0.5 : rng.uniform();
    c.dets.push_back(s);
  }
  return c;
}

std::vector<int> kinds(const std::vector<MatchRecord>& m) {
  std::vector<int> out;
  for (const auto& r : m) out.push_back(r.kind == MatchKind::TruePositive ? 1 : r.kind == MatchKind::Ignored ? -1 : 0);
  return out;
}

int positives(const std::vector<GtBox>& gts) {
  return static_cast<int>(std::count_if(gts.begin(), gts.end(), [](const GtBox& g) { return !g.difficult; }));
}

ApResult from_kinds(std::initializer_list<MatchKind> ks, int total_gt, ApMode mode = ApMode::Voc2007ElevenPoint) {
  std::vector<MatchRecord> m;
  double score = 1.0;
  for (auto k : ks) m.push_back({0, score -= 0.01, k, -1});
  EvalConfig cfg;
  cfg.ap_mode = mode;
  return average_precision(m, total_gt, cfg);
}

}  // namespace

TEST_CASE("iou") {
  const BoxF a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {20, 20, 30, 30}) == 0.0);
  CHECK(iou(a, {10, 0, 20, 10}) == 0.0);
  CHECK(iou(a, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou(a, {5, 0, 15, 10}) == iou({5, 0, 15, 10}, a));
  // +1 pixel convention: 11x11 boxes overlapping in 6 columns
  CHECK(iou(a, {5, 0, 15, 10}, AreaConvention::PixelInclusive) == doctest::Approx(66.0 / 176.0));
  CHECK(iou(a, {10, 0, 20, 10}, AreaConvention::PixelInclusive) == doctest::Approx(11.0 / 231.0));
}

TEST_CASE("matching examples") {
  EvalConfig cfg;
  const std::vector<GtBox> gts{{0, {0, 0, 10, 10}}, {0, {100, 100, 110, 110}}};
  SUBCASE("duplicate detection becomes a false positive") {
    const auto m = match_detections({{0, {0, 0, 10, 10}, 0.9}, {0, {0, 0, 10, 10}, 0.8}}, gts, cfg);
    REQUIRE(m.size() == 2);
    CHECK(m[0].kind == MatchKind::TruePositive);
    CHECK(m[0].gt_index == 0);
    CHECK(m[1].kind == MatchKind::FalsePositive);
  }
  SUBCASE("processing follows score, not input order") {
    const auto m = match_detections({{0, {0, 0, 10, 10}, 0.2}, {0, {1, 0, 11, 10}, 0.8}}, gts, cfg);
    CHECK(m[0].score == 0.8);
    CHECK(m[0].kind == MatchKind::TruePositive);
    CHECK(m[1].kind == MatchKind::FalsePositive);
  }
  SUBCASE("frames do not cross") {
    const auto m = match_detections({{1, {0, 0, 10, 10}, 0.9}}, gts, cfg);
    CHECK(m[0].kind == MatchKind::FalsePositive);
  }
  SUBCASE("threshold is inclusive") {
    // IoU exactly 0.5: 10x10 vs a 10x20 box containing it
    const auto m = match_detections({{0, {0, 0, 10, 20}, 0.9}}, gts, cfg);
    CHECK(m[0].kind == MatchKind::TruePositive);
  }
  SUBCASE("no scorable gt") {
    const std::vector<GtBox> hard{{0, {0, 0, 10, 10}, true}};
    CHECK_THROWS_AS(evaluate({{0, {50, 50, 60, 60}, 0.9}}, hard, cfg), NoGroundTruth);
    CHECK(evaluate({{0, {0, 0, 10, 10}, 0.9}}, hard, cfg).ap == 1.0);
  }
  SUBCASE("difficult gts are ignored and never consumed") {
    const std::vector<GtBox> hard{{0, {0, 0, 10, 10}, true}};
    const auto m = match_detections({{0, {0, 0, 10, 10}, 0.9}, {0, {0, 0, 10, 10}, 0.8}}, hard, cfg);
    CHECK(m[0].kind == MatchKind::Ignored);
    CHECK(m[1].kind == MatchKind::Ignored);
    CHECK(count_positives(hard, cfg) == 0);
    cfg.ignore_difficult = false;
    const auto m2 = match_detections({{0, {0, 0, 10, 10}, 0.9}, {0, {0, 0, 10, 10}, 0.8}}, hard, cfg);
    CHECK(m2[0].kind == MatchKind::TruePositive);
    CHECK(m2[1].kind == MatchKind::FalsePositive);
    CHECK(count_positives(hard, cfg) == 1);
  }
}

TEST_CASE("average precision examples") {
  using K = MatchKind;
  CHECK(from_kinds({K::TruePositive, K::FalsePositive, K::TruePositive}, 2).ap == doctest::Approx(28.0 / 33.0).epsilon(1e-12));
  CHECK(from_kinds({K::TruePositive, K::TruePositive}, 2).ap == 1.0);
  CHECK(from_kinds({K::FalsePositive, K::FalsePositive}, 2).ap == 0.0);
  CHECK(from_kinds({}, 3).ap == 0.0);
  // one of two found with precision 1: anchors 0..0.5 -> 6/11
  CHECK(from_kinds({K::TruePositive}, 2).ap == doctest::Approx(6.0 / 11.0));
  // ignored detections leave the curve untouched
  CHECK(from_kinds({K::TruePositive, K::Ignored, K::FalsePositive, K::TruePositive}, 2).ap == doctest::Approx(28.0 / 33.0));
  CHECK(from_kinds({}, 0).ap == 1.0);
  CHECK_THROWS_AS(from_kinds({K::FalsePositive}, 0), NoGroundTruth);

  const auto r = from_kinds({K::TruePositive, K::FalsePositive, K::TruePositive}, 2);
  REQUIRE(r.curve.points.size() == 3);
  CHECK(r.curve.points[1].recall == 0.5);
  CHECK(r.curve.points[1].precision == 0.5);
  CHECK(r.curve.points[2].recall == 1.0);

  // area under the interpolated curve: 0.5 * 1 + 0.5 * 2/3
  CHECK(from_kinds({K::TruePositive, K::FalsePositive, K::TruePositive}, 2, ApMode::ContinuousAuc).ap ==
        doctest::Approx(0.5 + 1.0 / 3.0));
  CHECK(from_kinds({K::TruePositive}, 2, ApMode::ContinuousAuc).ap == doctest::Approx(0.5));
}

TEST_CASE("evaluate agrees with the brute-force oracle") {
  Rng rng(2024);
  EvalConfig cfg;
  for (int i = 0; i < 300; ++i) {
    const auto c = random_case(rng);
    const auto expect_kinds = oracle::brute_match(c.dets, c.gts, cfg.iou_threshold);
    const int total = positives(c.gts);
    const auto r = evaluate(c.dets, c.gts, cfg);
    REQUIRE(kinds(r.matches) == expect_kinds);
    CHECK(r.ap == oracle::brute_ap11(expect_kinds, total));
  }
}

TEST_CASE("AP is invariant under monotone score maps") {
  Rng rng(5);
  EvalConfig cfg;
  for (int i = 0; i < 100; ++i) {
    auto c = random_case(rng, 20, 10, false);
    const double before = evaluate(c.dets, c.gts, cfg).ap;
    for (auto& d : c.dets) d.score = std::exp(3 * d.score) - 7;
    CHECK(evaluate(c.dets, c.gts, cfg).ap == before);
  }
}

TEST_CASE("AP responds to extra detections as expected") {
  Rng rng(6);
  EvalConfig cfg;
  for (int i = 0; i < 100; ++i) {
    auto c = random_case(rng, 20, 10, false);
    const double before = evaluate(c.dets, c.gts, cfg).ap;
    auto with_fp = c;
    with_fp.dets.push_back({0, {500, 500, 520, 540}, 2.0});
    CHECK(evaluate(with_fp.dets, with_fp.gts, cfg).ap <= before);
    auto with_tp = c;
    with_tp.gts.push_back({7, {0, 0, 20, 40}});
    const double diluted = evaluate(with_tp.dets, with_tp.gts, cfg).ap;
    with_tp.dets.push_back({7, {0, 0, 20, 40}, 2.0});
    CHECK(evaluate(with_tp.dets, with_tp.gts, cfg).ap >= diluted);
  }
}

TEST_CASE("AP does not depend on gt order") {
  Rng rng(8);
  EvalConfig cfg;
  for (int i = 0; i < 100; ++i) {
    auto c = random_case(rng);
    const double before = evaluate(c.dets, c.gts, cfg).ap;
    for (std::size_t k = c.gts.size(); k > 1; --k) std::swap(c.gts[k - 1], c.gts[rng.below(k)]);
    CHECK(evaluate(c.dets, c.gts, cfg).ap == before);
  }
  // two gts with equal overlap to one detection
  const std::vector<ScoredBox> dets{{0, {5, 0, 15, 10}, 0.9}, {0, {4, 0, 14, 10}, 0.8}};
  std::vector<GtBox> gts{{0, {0, 0, 10, 10}}, {0, {10, 0, 20, 10}}};
  cfg.iou_threshold = 0.3;
  const double a = evaluate(dets, gts, cfg).ap;
  std::swap(gts[0], gts[1]);
  CHECK(evaluate(dets, gts, cfg).ap == a);
}

TEST_CASE("eval config validation") {
  EvalConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.iou_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.iou_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("report") {
  using K = MatchKind;
  const std::vector<NamedResult> results{
      {"plaza", from_kinds({K::TruePositive, K::FalsePositive, K::TruePositive}, 2)},
      {"generic", from_kinds({K::TruePositive}, 2)},
      {"extra", from_kinds({K::TruePositive, K::TruePositive}, 2)}};
  const auto rep = emit_report(results);
  CHECK(rep.csv ==
        "name,ap,baseline,increment\n"
        "plaza,0.848485,generic,0.303030\n"
        "generic,0.545455,,\n"
        "extra,1.000000,,\n");
  CHECK(rep.svg.rfind("<svg", 0) == 0);
  CHECK(rep.svg.find("</svg>") != std::string::npos);
  CHECK(std::count(rep.svg.begin(), rep.svg.end(), '\n') > 10);
  for (const char* name : {"plaza (AP 0.848)", "generic (AP 0.545)", "extra (AP 1.000)"})
    CHECK(rep.svg.find(name) != std::string::npos);
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = rep.svg.find("<polyline", pos)) != std::string::npos; ++pos) ++lines;
  CHECK(lines == 3);
  CHECK(emit_report(results).svg == rep.svg);

  const auto empty = emit_report({});
  CHECK(empty.csv == "name,ap,baseline,increment\n");
  CHECK(empty.svg.find("</svg>") != std::string::npos);
}
