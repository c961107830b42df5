#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cmaff/errors.hpp"
#include "cmaff/metrics.hpp"
#include "metrics_oracle.hpp"

using namespace cmaff;
using namespace cmaff::metrics;
using cmaff::testing::oracle_evaluate;
using cmaff::testing::random_small_instance;

namespace {

constexpr auto TP = MatchLabel::TruePositive;
constexpr auto FP = MatchLabel::FalsePositive;

Box corners(double x0, double y0, double x1, double y1, double norm = 1.0) {
  return Box{(x0 + x1) / (2 * norm), (y0 + y1) / (2 * norm), (x1 - x0) / norm, (y1 - y0) / norm};
}

DetectionBox det(Box b, double score, std::string image = "a", int cls = 0) {
  return DetectionBox{b, cls, std::move(image), score};
}

GroundTruthBox gt(Box b, std::string image = "a", int cls = 0) {
  return GroundTruthBox{b, cls, std::move(image)};
}

double ap_of(const std::vector<DetectionBox>& d, const std::vector<GroundTruthBox>& g,
             double thresh = 0.5) {
  const auto m = match(d, g, thresh);
  return average_precision(pr_curve(m.labels, g.size()));
}

}  // namespace

TEST_SUITE("iou") {
  TEST_CASE("identical, disjoint and overlapping corner boxes") {
    const Box a = corners(0.1, 0.2, 0.4, 0.6);
    CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(iou(a, corners(0.5, 0.5, 0.9, 0.9)) == 0.0);
    CHECK(iou(corners(0, 0, 2, 2, 4), corners(1, 1, 3, 3, 4)) ==
          doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK(iou(corners(0, 0, 0.5, 0.5), corners(0.5, 0, 1, 0.5)) == 0.0);
  }

  TEST_CASE("symmetric and bounded") {
    std::mt19937_64 rng(101);
    for (int t = 0; t < 200; ++t) {
      const auto inst = random_small_instance(rng);
      for (const auto& d : inst.dets) {
        for (const auto& g : inst.gts) {
          const double v = iou(d.box, g.box);
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
          CHECK(v == iou(g.box, d.box));
        }
      }
    }
  }
}

TEST_SUITE("match") {
  TEST_CASE("perfect single detection") {
    const std::vector<GroundTruthBox> g{gt(corners(0.1, 0.1, 0.3, 0.3))};
    const std::vector<DetectionBox> d{det(g[0].box, 0.9)};
    const auto m = match(d, g, 0.5);
    CHECK(m.true_positives == 1);
    CHECK(m.false_positives == 0);
    CHECK(m.false_negatives == 0);
  }

  TEST_CASE("second detection on a matched ground truth is a false positive") {
    const std::vector<GroundTruthBox> g{gt(corners(0.1, 0.1, 0.3, 0.3))};
    const std::vector<DetectionBox> d{det(g[0].box, 0.4), det(g[0].box, 0.8)};
    const auto m = match(d, g, 0.5);
    REQUIRE(m.order == std::vector<std::size_t>{1, 0});
    CHECK(m.labels == std::vector<MatchLabel>{TP, FP});
    CHECK(m.false_negatives == 0);
  }

  TEST_CASE("equal scores are processed in input order") {
    const std::vector<GroundTruthBox> g{gt(corners(0.1, 0.1, 0.3, 0.3))};
    const std::vector<DetectionBox> d{det(g[0].box, 0.5), det(g[0].box, 0.5),
                                      det(g[0].box, 0.7)};
    const auto m = match(d, g, 0.5);
    CHECK(m.order == std::vector<std::size_t>{2, 0, 1});
  }

  TEST_CASE("detections never match across images") {
    const std::vector<GroundTruthBox> g{gt(corners(0.1, 0.1, 0.3, 0.3), "a")};
    const std::vector<DetectionBox> d{det(g[0].box, 0.9, "b")};
    const auto m = match(d, g, 0.5);
    CHECK(m.false_positives == 1);
    CHECK(m.false_negatives == 1);
  }

  TEST_CASE("empty inputs are legal") {
    const std::vector<GroundTruthBox> g{gt(corners(0.1, 0.1, 0.3, 0.3))};
    CHECK(match({}, g, 0.5).false_negatives == 1);
    const std::vector<DetectionBox> d{det(g[0].box, 0.9)};
    CHECK(match(d, {}, 0.5).false_positives == 1);
  }

  TEST_CASE("agrees with the brute-force matcher") {
    std::mt19937_64 rng(102);
    std::size_t hits = 0, misses = 0;
    for (int t = 0; t < 1000; ++t) {
      const auto inst = random_small_instance(rng);
      for (double thresh : {0.3, 0.5, 0.75}) {
        const auto m = match(inst.dets, inst.gts, thresh);
        const auto o = oracle_evaluate(inst.dets, inst.gts, thresh);
        hits += o.true_positives;
        misses += o.false_positives;
        REQUIRE(m.true_positives == o.true_positives);
        REQUIRE(m.false_positives == o.false_positives);
        REQUIRE(m.false_negatives == o.false_negatives);
        for (std::size_t k = 0; k < o.tp.size(); ++k) CHECK((m.labels[k] == TP) == o.tp[k]);
      }
    }
    // The generator must exercise both outcomes for the comparison to mean much.
    CHECK(hits > 1000);
    CHECK(misses > 1000);
  }

  TEST_CASE("permuting detections with distinct scores changes nothing") {
    std::mt19937_64 rng(103);
    for (int t = 0; t < 200; ++t) {
      auto inst = random_small_instance(rng);
      for (std::size_t i = 0; i < inst.dets.size(); ++i) {
        inst.dets[i].score = 0.05 + 0.9 * static_cast<double>(i) / 5.0;
      }
      const auto before = match(inst.dets, inst.gts, 0.5);
      const double ap_before = average_precision(pr_curve(before.labels, inst.gts.size()));
      std::shuffle(inst.dets.begin(), inst.dets.end(), rng);
      const auto after = match(inst.dets, inst.gts, 0.5);
      CHECK(after.true_positives == before.true_positives);
      CHECK(after.false_positives == before.false_positives);
      CHECK(after.false_negatives == before.false_negatives);
      CHECK(after.labels == before.labels);
      CHECK(average_precision(pr_curve(after.labels, inst.gts.size())) == ap_before);
    }
  }
}

TEST_SUITE("pr curve and AP") {
  TEST_CASE("cumulative ratios") {
    const std::vector<MatchLabel> one{TP};
    auto c = pr_curve(one, 1);
    REQUIRE(c.points.size() == 1);
    CHECK(c.points[0].recall == 1.0);
    CHECK(c.points[0].precision == 1.0);

    const std::vector<MatchLabel> two{TP, FP};
    c = pr_curve(two, 1);
    CHECK(c.points[1].recall == 1.0);
    CHECK(c.points[1].precision == 0.5);

    const std::vector<MatchLabel> three{TP, FP, TP};
    c = pr_curve(three, 2);
    REQUIRE(c.points.size() == 3);
    CHECK(c.points[0].recall == 0.5);
    CHECK(c.points[0].precision == 1.0);
    CHECK(c.points[1].recall == 0.5);
    CHECK(c.points[1].precision == 0.5);
    CHECK(c.points[2].recall == 1.0);
    CHECK(c.points[2].precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("no ground truth gives zero recall everywhere and AP 0") {
    const std::vector<MatchLabel> l{FP, FP};
    const auto c = pr_curve(l, 0);
    for (const auto& p : c.points) CHECK(p.recall == 0.0);
    CHECK(average_precision(c) == 0.0);
  }

  TEST_CASE("AP examples") {
    const std::vector<MatchLabel> one{TP};
    CHECK(average_precision(pr_curve(one, 1)) == 1.0);
    CHECK(average_precision(pr_curve({}, 3)) == 0.0);
    const std::vector<MatchLabel> three{TP, FP, TP};
    CHECK(std::abs(average_precision(pr_curve(three, 2)) - 5.0 / 6.0) <= 1e-9);
  }

  TEST_CASE("eleven-point interpolation") {
    const std::vector<MatchLabel> one{TP};
    CHECK(average_precision(pr_curve(one, 1), Interpolation::ElevenPoint) ==
          doctest::Approx(1.0));
    // Recall 0.5 at precision 1, recall 1 at precision 2/3.
    const std::vector<MatchLabel> three{TP, FP, TP};
    const double want = (6 * 1.0 + 5 * (2.0 / 3.0)) / 11.0;
    CHECK(average_precision(pr_curve(three, 2), Interpolation::ElevenPoint) ==
          doctest::Approx(want).epsilon(1e-12));
  }

  TEST_CASE("AP equals the brute-force evaluator exactly") {
    std::mt19937_64 rng(104);
    for (int t = 0; t < 1000; ++t) {
      const auto inst = random_small_instance(rng);
      for (double thresh : {0.5, 0.75}) {
        const auto o = oracle_evaluate(inst.dets, inst.gts, thresh);
        CHECK(ap_of(inst.dets, inst.gts, thresh) == o.ap);
      }
    }
  }

  TEST_CASE("AP bounded and envelope non-increasing in recall") {
    std::mt19937_64 rng(105);
    for (int t = 0; t < 500; ++t) {
      std::vector<MatchLabel> l(rng() % 12);
      for (auto& x : l) x = rng() % 2 ? TP : FP;
      const std::size_t tps = static_cast<std::size_t>(std::count(l.begin(), l.end(), TP));
      const auto c = pr_curve(l, tps + rng() % 3);
      const double ap = average_precision(c);
      CHECK(ap >= 0.0);
      CHECK(ap <= 1.0);
      double prev_recall = 0.0;
      double env = 0.0;
      std::vector<double> envelope(c.points.size());
      for (std::size_t i = c.points.size(); i-- > 0;) {
        env = std::max(env, c.points[i].precision);
        envelope[i] = env;
      }
      for (std::size_t i = 0; i < c.points.size(); ++i) {
        CHECK(c.points[i].recall >= prev_recall);
        prev_recall = c.points[i].recall;
        if (i > 0) CHECK(envelope[i] <= envelope[i - 1]);
      }
    }
  }

  TEST_CASE("adding a false-positive-only detection never raises AP") {
    std::mt19937_64 rng(106);
    for (int t = 0; t < 500; ++t) {
      auto inst = random_small_instance(rng);
      if (inst.gts.empty()) continue;
      const double before = ap_of(inst.dets, inst.gts);
      // A detection on an image with no ground truth can only be a false positive.
      auto extra = inst.dets;
      extra.push_back(det(Box{0.5, 0.5, 0.2, 0.2}, 0.05 + 0.9 * (rng() % 100) / 100.0,
                          "unlabeled"));
      CHECK(ap_of(extra, inst.gts) <= before);
    }
  }
}

TEST_SUITE("mAP") {
  TEST_CASE("mean over classes with ground truth") {
    const std::vector<ClassAp> a{{0, 1.0, 2}, {1, 0.0, 1}};
    CHECK(mean_ap(a) == 0.5);
    const std::vector<ClassAp> b{{0, 0.786, 4}};
    CHECK(mean_ap(b) == 0.786);
    const std::vector<ClassAp> c{{0, 0.4, 1}, {1, 0.9, 0}, {2, 0.6, 3}};
    CHECK(mean_ap(c) == doctest::Approx(0.5));
    const std::vector<ClassAp> none{{0, 0.0, 0}, {1, 0.0, 0}};
    CHECK_THROWS_AS(mean_ap(none), ConfigError);
  }

  TEST_CASE("nine random classes match the naive mean") {
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      std::vector<ClassAp> aps;
      double sum = 0.0;
      for (int k = 0; k < 9; ++k) {
        aps.push_back({k, u(rng), 1});
        sum += aps.back().ap;
      }
      CHECK(mean_ap(aps) == doctest::Approx(sum / 9.0).epsilon(1e-14));
    }
  }

  TEST_CASE("thresholds") {
    const auto t = coco_thresholds();
    CHECK(t[0] == 0.5);
    CHECK(t[2] == 0.6);
    CHECK(t[9] == 0.95);
  }

  TEST_CASE("perfect detections give 1 everywhere") {
    const std::vector<GroundTruthBox> g{gt(corners(0.1, 0.1, 0.3, 0.3)),
                                        gt(corners(0.5, 0.5, 0.9, 0.7), "b", 1)};
    const std::vector<DetectionBox> d{det(g[0].box, 0.9), det(g[1].box, 0.8, "b", 1)};
    const auto s = map_sweep(d, g);
    CHECK(s.map50 == 1.0);
    CHECK(s.map50_95 == 1.0);
  }

  TEST_CASE("IoU of exactly 0.6 counts at thresholds up to 0.6") {
    const Box g0{0.25, 0.25, 0.5, 0.5};
    const Box d0{0.15, 0.25, 0.3, 0.5};
    REQUIRE(iou(g0, d0) == 0.6);
    const std::vector<GroundTruthBox> g{gt(g0)};
    const std::vector<DetectionBox> d{det(d0, 0.9)};
    const auto r = evaluate(d, g);
    const auto th = coco_thresholds();
    for (std::size_t k = 0; k < th.size(); ++k) {
      CAPTURE(th[k]);
      CHECK(r.classes[0].ap[k] == (th[k] <= 0.6 ? 1.0 : 0.0));
    }
    CHECK(r.map50_95 == doctest::Approx(0.3));
  }

  TEST_CASE("sweep equals independent per-threshold evaluation") {
    std::mt19937_64 rng(108);
    for (int t = 0; t < 200; ++t) {
      const auto inst = random_small_instance(rng);
      if (inst.gts.empty()) continue;
      double sum = 0.0;
      double at50 = 0.0;
      for (double th : coco_thresholds()) {
        const double ap = oracle_evaluate(inst.dets, inst.gts, th).ap;
        if (th == 0.5) at50 = ap;
        sum += ap;
      }
      const auto s = map_sweep(inst.dets, inst.gts);
      CHECK(s.map50 == at50);
      CHECK(s.map50_95 == doctest::Approx(sum / 10.0).epsilon(1e-14));
    }
  }

  TEST_CASE("thread count does not change the report") {
    std::mt19937_64 rng(109);
    std::vector<DetectionBox> d;
    std::vector<GroundTruthBox> g;
    for (int k = 0; k < 9; ++k) {
      auto inst = random_small_instance(rng);
      for (auto& x : inst.dets) d.push_back(det(x.box, x.score, x.image_id, k));
      for (auto& x : inst.gts) g.push_back(gt(x.box, x.image_id, k));
    }
    g.push_back(gt(corners(0.1, 0.1, 0.2, 0.2), "img0", 0));
    EvalOptions one{9, Interpolation::AllPoint, 1};
    EvalOptions four{9, Interpolation::AllPoint, 4};
    std::ostringstream a, b;
    write_report(a, evaluate(d, g, one));
    write_report(b, evaluate(d, g, four));
    CHECK(a.str() == b.str());
  }

  TEST_CASE("evaluate errors") {
    const std::vector<GroundTruthBox> g{gt(corners(0.1, 0.1, 0.3, 0.3), "a", 3)};
    CHECK_THROWS_AS(evaluate({}, g, EvalOptions{2}), ConfigError);
    CHECK_THROWS_AS(evaluate({}, {}, EvalOptions{2}), ConfigError);
  }
}

TEST_SUITE("metrics text io") {
  TEST_CASE("parse ground truth and detections") {
    std::istringstream gin("# header\nimg1 2 0.5 0.5 0.2 0.2\n\nimg2 0 0.1 0.1 0.1 0.1 # tail\n");
    const auto g = parse_ground_truth(gin);
    REQUIRE(g.size() == 2);
    CHECK(g[0].image_id == "img1");
    CHECK(g[0].class_id == 2);
    CHECK(g[1].box == Box{0.1, 0.1, 0.1, 0.1});

    std::istringstream din("img1 2 0.75 0.5 0.5 0.2 0.2\n");
    const auto d = parse_detections(din);
    REQUIRE(d.size() == 1);
    CHECK(d[0].score == 0.75);
  }

  TEST_CASE("malformed lines name their line number") {
    std::istringstream bad_count("img1 0 0.5 0.5 0.2 0.2\nimg1 0 0.5 0.5 0.2\n");
    try {
      parse_ground_truth(bad_count);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    std::istringstream bad_num("img1 0 zero 0.5 0.5 0.2 0.2\n");
    CHECK_THROWS_AS(parse_detections(bad_num), ParseError);
    std::istringstream bad_score("img1 0 1.5 0.5 0.5 0.2 0.2\n");
    CHECK_THROWS_AS(parse_detections(bad_score), ParseError);
    std::istringstream bad_box("img1 0 0.5 0.5 0.0 0.2\n");
    CHECK_THROWS_AS(parse_ground_truth(bad_box), ParseError);
  }

  TEST_CASE("report key/value lines") {
    const std::vector<GroundTruthBox> g{gt(corners(0.1, 0.1, 0.3, 0.3))};
    const std::vector<DetectionBox> d{det(g[0].box, 0.9)};
    std::ostringstream out;
    write_report(out, evaluate(d, g, EvalOptions{2}));
    const auto s = out.str();
    CHECK(s.find("class.0.gt=1\n") != std::string::npos);
    CHECK(s.find("class.0.ap50=1.000000\n") != std::string::npos);
    CHECK(s.find("class.1.ap50=none\n") != std::string::npos);
    CHECK(s.find("map50=1.000000\n") != std::string::npos);
    CHECK(s.find("map5095=1.000000\n") != std::string::npos);
  }
}
