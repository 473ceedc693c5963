#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cadsynth/bbox.hpp"
#include "cadsynth/detections.hpp"
#include "cadsynth/voc.hpp"

namespace cadsynth {

struct EvalConfig {
  double conf_threshold = 0.9;
  double iou_threshold = 0.5;

  bool operator==(const EvalConfig&) const = default;
};

void validate(const EvalConfig& config);  // throws ConfigError

// |A n B| / |A u B| over half-open pixel areas; 0 when disjoint.
double iou(const BBox& a, const BBox& b);

// A ratio whose denominator may be zero. Undefined ratios carry value 0.
struct Ratio {
  double value = 0;
  bool defined = false;

  static Ratio of(double num, double den) { return den > 0 ? Ratio{num / den, true} : Ratio{}; }
  bool operator==(const Ratio&) const = default;
};

enum class Verdict { rejected, true_positive, false_positive };

struct DetectionVerdict {
  Verdict verdict = Verdict::rejected;
  int gt_index = -1;

  bool operator==(const DetectionVerdict&) const = default;
};

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<DetectionVerdict> verdicts;  // parallel to the input detections
};

// Single image, single class. Detections with score <= conf_threshold are
// rejected; the rest are visited by descending score (stable). A detection is
// a TP when some unmatched ground truth has IoU > iou_threshold; the one with
// the largest IoU (then lowest index) is taken. Otherwise it is an FP.
// Unmatched ground truths are FNs.
MatchResult match_detections(std::span<const Detection> detections, std::span<const BBox> ground_truth,
                             const EvalConfig& config);

Ratio precision(const MatchResult& m);
Ratio recall(const MatchResult& m);
Ratio precision(int tp, int fp);
Ratio recall(int tp, int fn);

// Harmonic mean 2PR/(P+R); 0 when P + R = 0.
double f1(double precision, double recall);

struct MetricsReport {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  Ratio precision;
  Ratio recall;
  Ratio f1;  // defined when both precision and recall are

  static MetricsReport from_counts(int tp, int fp, int fn);
};

struct PrPoint {
  double confidence = 0;
  double recall = 0;
  double precision = 0;

  bool operator==(const PrPoint&) const = default;
};

// Ordered by descending confidence cutoff; one point per distinct score.
struct PRCurve {
  std::string class_name;
  int n_ground_truth = 0;
  std::vector<PrPoint> points;
};

// Per-image ground-truth boxes of one class.
using ImageBoxes = std::map<std::string, std::vector<BBox>>;

// Detections of one class across a dataset. Every detection takes part:
// they are matched once in descending score order (stable) under the
// match_detections rules, and each point accepts every detection with
// score >= its confidence.
PRCurve pr_curve(std::span<const Detection> detections, const ImageBoxes& ground_truth, double iou_threshold);

// All-point interpolated area under the curve over recall in [0, 1].
double average_precision(const PRCurve& curve);

struct ClassEvaluation {
  MetricsReport metrics;
  PRCurve curve;
  double ap = 0;
};

struct DatasetEvaluation {
  EvalConfig config;
  int n_images = 0;
  int n_detections = 0;
  std::map<std::string, ClassEvaluation> classes;
  MetricsReport aggregate;
  PRCurve aggregate_curve;  // all classes pooled, each matched within its class
  double aggregate_ap = 0;
  double mean_ap = 0;  // over classes with ground truth
};

// Throws MissingImageAnnotation for detections of images absent from gt.
DatasetEvaluation evaluate(const std::map<std::string, Annotation>& ground_truth,
                           std::span<const Detection> detections, const EvalConfig& config);

DatasetEvaluation evaluate_dataset(const std::filesystem::path& gt_dir, const std::filesystem::path& det_file,
                                   const EvalConfig& config);

nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const DatasetEvaluation& evaluation);

}  // namespace cadsynth
