#pragma once

// Detection evaluation: IoU, greedy confidence-ranked matching, cumulative
// precision/recall, AP (area under the interpolated PR curve) and mAP.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cmaff::metrics {

// Normalized center/size box.
struct Box {
  double xc = 0.0;
  double yc = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x_min() const { return xc - w / 2.0; }
  double x_max() const { return xc + w / 2.0; }
  double y_min() const { return yc - h / 2.0; }
  double y_max() const { return yc + h / 2.0; }
  double area() const { return w * h; }

  friend bool operator==(const Box&, const Box&) = default;
};

inline constexpr double kCornerSlack = 1e-6;

// 0 <= xc, yc <= 1, w, h > 0 and corners inside [-1e-6, 1 + 1e-6].
bool is_valid(const Box& b);

struct GroundTruthBox {
  Box box;
  int class_id = 0;
  std::string image_id;
};

struct DetectionBox {
  Box box;
  int class_id = 0;
  std::string image_id;
  double score = 0.0;
};

double iou(const Box& a, const Box& b);

enum class MatchLabel { TruePositive, FalsePositive };

struct MatchResult {
  std::vector<std::size_t> order;   // detection indices, descending score, ties by index
  std::vector<MatchLabel> labels;   // labels[k] belongs to detection order[k]
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;  // ground truths left unmatched
};

// Greedy single-class matching. Each detection, in descending score order,
// claims the unmatched same-image ground truth of highest IoU (ties to the lower
// index) when that IoU >= iou_thresh; otherwise it is a false positive.
MatchResult match(std::span<const DetectionBox> dets, std::span<const GroundTruthBox> gts,
                  double iou_thresh);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  std::size_t true_positives = 0;   // cumulative
  std::size_t false_positives = 0;  // cumulative
};

struct PrCurve {
  std::vector<PrPoint> points;
  std::size_t gt_count = 0;
};

// Cumulative precision/recall after each labeled detection (already in score
// order). With gt_count == 0 every recall is 0.
PrCurve pr_curve(std::span<const MatchLabel> labels, std::size_t gt_count);

enum class Interpolation {
  AllPoint,    // monotone envelope, exact integration over recall steps
  ElevenPoint  // mean of envelope precision at recall 0, 0.1, ..., 1
};

double average_precision(const PrCurve& curve, Interpolation mode = Interpolation::AllPoint);

struct ClassAp {
  int class_id = 0;
  double ap = 0.0;
  std::size_t gt_count = 0;
};

// Mean over classes with at least one ground truth. Throws ConfigError when
// no class has any.
double mean_ap(std::span<const ClassAp> per_class);

// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> coco_thresholds();

struct ClassReport {
  int class_id = 0;
  std::size_t gt_count = 0;
  std::size_t det_count = 0;
  std::array<double, 10> ap{};  // per threshold of coco_thresholds()

  double ap50() const { return ap[0]; }
  double ap50_95() const;
};

struct EvalReport {
  std::vector<ClassReport> classes;  // ascending class id, one per configured class
  double map50 = 0.0;
  double map50_95 = 0.0;
};

struct EvalOptions {
  int num_classes = 0;  // 0: infer as 1 + max class id seen
  Interpolation interpolation = Interpolation::AllPoint;
  unsigned threads = 1;  // per-class evaluation workers; results reduced in class order
};

// Per-class, per-image evaluation at all ten thresholds. Throws ConfigError if
// no class has ground truth or a class id falls outside [0, num_classes).
EvalReport evaluate(std::span<const DetectionBox> dets, std::span<const GroundTruthBox> gts,
                    const EvalOptions& opts = {});

struct SweepResult {
  double map50 = 0.0;
  double map50_95 = 0.0;
};

SweepResult map_sweep(std::span<const DetectionBox> dets, std::span<const GroundTruthBox> gts);

// "image_id class_id xc yc w h" per line; '#' starts a comment.
std::vector<GroundTruthBox> parse_ground_truth(std::istream& in);
// "image_id class_id score xc yc w h" per line; '#' starts a comment.
std::vector<DetectionBox> parse_detections(std::istream& in);

// Human-readable table followed by key/value lines:
//   class.<id>.gt=, class.<id>.ap50=, class.<id>.ap5095=, map50=, map5095=
// Classes without ground truth print "none" for their APs.
void write_report(std::ostream& out, const EvalReport& report);

}  // namespace cmaff::metrics
