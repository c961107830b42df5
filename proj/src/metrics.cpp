#include "cmaff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <thread>

#include "cmaff/errors.hpp"
#include "text_util.hpp"

namespace cmaff::metrics {

bool is_valid(const Box& b) {
  const bool finite = std::isfinite(b.xc) && std::isfinite(b.yc) && std::isfinite(b.w) &&
                      std::isfinite(b.h);
  return finite && b.xc >= 0.0 && b.xc <= 1.0 && b.yc >= 0.0 && b.yc <= 1.0 && b.w > 0.0 &&
         b.h > 0.0 && b.x_min() >= -kCornerSlack && b.y_min() >= -kCornerSlack &&
         b.x_max() <= 1.0 + kCornerSlack && b.y_max() <= 1.0 + kCornerSlack;
}

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double iy = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

MatchResult match(std::span<const DetectionBox> dets, std::span<const GroundTruthBox> gts,
                  double iou_thresh) {
  MatchResult r;
  r.order.resize(dets.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<bool> taken(gts.size(), false);
  r.labels.reserve(dets.size());
  for (std::size_t k : r.order) {
    const auto& d = dets[k];
    double best_iou = -1.0;
    std::size_t best = gts.size();
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (taken[j] || gts[j].image_id != d.image_id) continue;
      const double v = iou(d.box, gts[j].box);
      if (v > best_iou) {
        best_iou = v;
        best = j;
      }
    }
    if (best < gts.size() && best_iou >= iou_thresh) {
      taken[best] = true;
      r.labels.push_back(MatchLabel::TruePositive);
      ++r.true_positives;
    } else {
      r.labels.push_back(MatchLabel::FalsePositive);
      ++r.false_positives;
    }
  }
  r.false_negatives = gts.size() - r.true_positives;
  return r;
}

PrCurve pr_curve(std::span<const MatchLabel> labels, std::size_t gt_count) {
  PrCurve curve;
  curve.gt_count = gt_count;
  curve.points.reserve(labels.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (auto l : labels) {
    (l == MatchLabel::TruePositive ? tp : fp) += 1;
    PrPoint p;
    p.true_positives = tp;
    p.false_positives = fp;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = gt_count == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gt_count);
    curve.points.push_back(p);
  }
  return curve;
}

namespace {

// envelope[i] = max precision over points i..end.
std::vector<double> precision_envelope(const PrCurve& curve) {
  std::vector<double> env(curve.points.size());
  double running = 0.0;
  for (std::size_t i = curve.points.size(); i-- > 0;) {
    running = std::max(running, curve.points[i].precision);
    env[i] = running;
  }
  return env;
}

}  // namespace

double average_precision(const PrCurve& curve, Interpolation mode) {
  if (curve.gt_count == 0 || curve.points.empty()) return 0.0;
  const auto env = precision_envelope(curve);
  const double gt = static_cast<double>(curve.gt_count);
  if (mode == Interpolation::ElevenPoint) {
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double p = 0.0;
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (curve.points[i].recall >= r) {
          p = env[i];
          break;
        }
      }
      sum += p;
    }
    return sum / 11.0;
  }
  // Recall steps are integer TP increments, so each step width is dtp / gt.
  double ap = 0.0;
  std::size_t prev_tp = 0;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const std::size_t tp = curve.points[i].true_positives;
    if (tp > prev_tp) {
      ap += (static_cast<double>(tp - prev_tp) / gt) * env[i];
      prev_tp = tp;
    }
  }
  return std::clamp(ap, 0.0, 1.0);
}

double mean_ap(std::span<const ClassAp> per_class) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : per_class) {
    if (c.gt_count == 0) continue;
    sum += c.ap;
    ++n;
  }
  if (n == 0) throw ConfigError("mean_ap: no class has ground truth; mAP undefined");
  return sum / static_cast<double>(n);
}

std::array<double, 10> coco_thresholds() {
  std::array<double, 10> t{};
  for (int k = 0; k < 10; ++k) t[k] = (50 + 5 * k) / 100.0;
  return t;
}

double ClassReport::ap50_95() const {
  double s = 0.0;
  for (double v : ap) s += v;
  return s / static_cast<double>(ap.size());
}

EvalReport evaluate(std::span<const DetectionBox> dets, std::span<const GroundTruthBox> gts,
                    const EvalOptions& opts) {
  int num_classes = opts.num_classes;
  if (num_classes <= 0) {
    int max_id = -1;
    for (const auto& g : gts) max_id = std::max(max_id, g.class_id);
    for (const auto& d : dets) max_id = std::max(max_id, d.class_id);
    num_classes = max_id + 1;
  }
  auto check_id = [&](int id) {
    if (id < 0 || id >= num_classes) {
      throw ConfigError("class id " + std::to_string(id) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
  };
  std::vector<std::vector<DetectionBox>> dets_by_class(static_cast<std::size_t>(std::max(0, num_classes)));
  std::vector<std::vector<GroundTruthBox>> gts_by_class(dets_by_class.size());
  for (const auto& d : dets) {
    check_id(d.class_id);
    dets_by_class[d.class_id].push_back(d);
  }
  for (const auto& g : gts) {
    check_id(g.class_id);
    gts_by_class[g.class_id].push_back(g);
  }

  const auto thresholds = coco_thresholds();
  EvalReport report;
  report.classes.resize(dets_by_class.size());
  auto eval_class = [&](std::size_t k) {
    ClassReport& cr = report.classes[k];
    cr.class_id = static_cast<int>(k);
    cr.gt_count = gts_by_class[k].size();
    cr.det_count = dets_by_class[k].size();
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      const auto m = match(dets_by_class[k], gts_by_class[k], thresholds[t]);
      cr.ap[t] = average_precision(pr_curve(m.labels, cr.gt_count), opts.interpolation);
    }
  };

  const unsigned workers = std::max(1u, opts.threads);
  if (workers == 1 || report.classes.size() <= 1) {
    for (std::size_t k = 0; k < report.classes.size(); ++k) eval_class(k);
  } else {
    // Each worker owns a fixed stride of classes and writes only its own slots.
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < report.classes.size(); k += workers) eval_class(k);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<ClassAp> at(report.classes.size());
  double sum_over_thresholds = 0.0;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    for (std::size_t k = 0; k < report.classes.size(); ++k) {
      at[k] = {report.classes[k].class_id, report.classes[k].ap[t], report.classes[k].gt_count};
    }
    const double m = mean_ap(at);
    if (t == 0) report.map50 = m;
    sum_over_thresholds += m;
  }
  report.map50_95 = sum_over_thresholds / static_cast<double>(thresholds.size());
  return report;
}

SweepResult map_sweep(std::span<const DetectionBox> dets, std::span<const GroundTruthBox> gts) {
  const auto r = evaluate(dets, gts);
  return {r.map50, r.map50_95};
}

namespace {

Box parse_box(std::span<const std::string_view> toks, std::size_t line) {
  Box b{text::to_double(toks[0], line, "xc"), text::to_double(toks[1], line, "yc"),
        text::to_double(toks[2], line, "w"), text::to_double(toks[3], line, "h")};
  if (!is_valid(b)) throw ParseError(line, "box outside the normalized [0,1] frame");
  return b;
}

}  // namespace

std::vector<GroundTruthBox> parse_ground_truth(std::istream& in) {
  std::vector<GroundTruthBox> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto toks = text::tokens(line);
    if (toks.empty()) continue;
    if (toks.size() != 6) {
      throw ParseError(n, "expected 'image_id class_id xc yc w h', got " +
                              std::to_string(toks.size()) + " fields");
    }
    GroundTruthBox g;
    g.image_id = std::string(toks[0]);
    g.class_id = text::to_int(toks[1], n, "class_id");
    if (g.class_id < 0) throw ParseError(n, "negative class_id");
    g.box = parse_box(std::span(toks).subspan(2), n);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<DetectionBox> parse_detections(std::istream& in) {
  std::vector<DetectionBox> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto toks = text::tokens(line);
    if (toks.empty()) continue;
    if (toks.size() != 7) {
      throw ParseError(n, "expected 'image_id class_id score xc yc w h', got " +
                              std::to_string(toks.size()) + " fields");
    }
    DetectionBox d;
    d.image_id = std::string(toks[0]);
    d.class_id = text::to_int(toks[1], n, "class_id");
    if (d.class_id < 0) throw ParseError(n, "negative class_id");
    d.score = text::to_double(toks[2], n, "score");
    if (!(d.score >= 0.0 && d.score <= 1.0)) throw ParseError(n, "score outside [0,1]");
    d.box = parse_box(std::span(toks).subspan(3), n);
    out.push_back(std::move(d));
  }
  return out;
}

void write_report(std::ostream& out, const EvalReport& report) {
  char buf[160];
  out << "# class       gt     dets      AP50   AP50:95\n";
  for (const auto& c : report.classes) {
    if (c.gt_count == 0) {
      std::snprintf(buf, sizeof buf, "# %5d %8zu %8zu %9s %9s\n", c.class_id, c.gt_count,
                    c.det_count, "-", "-");
    } else {
      std::snprintf(buf, sizeof buf, "# %5d %8zu %8zu %9.6f %9.6f\n", c.class_id, c.gt_count,
                    c.det_count, c.ap50(), c.ap50_95());
    }
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "# %-23s %9.6f %9.6f\n", "all", report.map50, report.map50_95);
  out << buf;
  for (const auto& c : report.classes) {
    out << "class." << c.class_id << ".gt=" << c.gt_count << "\n";
    if (c.gt_count == 0) {
      out << "class." << c.class_id << ".ap50=none\n";
      out << "class." << c.class_id << ".ap5095=none\n";
    } else {
      std::snprintf(buf, sizeof buf, "class.%d.ap50=%.6f\nclass.%d.ap5095=%.6f\n", c.class_id,
                    c.ap50(), c.class_id, c.ap50_95());
      out << buf;
    }
  }
  std::snprintf(buf, sizeof buf, "map50=%.6f\nmap5095=%.6f\n", report.map50, report.map50_95);
  out << buf;
}

}  // namespace cmaff::metrics
