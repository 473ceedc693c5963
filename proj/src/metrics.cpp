#include "cadsynth/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"

namespace cadsynth {

using nlohmann::json;

void validate(const EvalConfig& c) {
  if (!(c.conf_threshold >= 0 && c.conf_threshold <= 1)) throw ConfigError("conf threshold must be in [0, 1]");
  if (!(c.iou_threshold >= 0 && c.iou_threshold <= 1)) throw ConfigError("IoU threshold must be in [0, 1]");
}

double iou(const BBox& a, const BBox& b) {
  const std::int64_t w = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const std::int64_t h = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  const std::int64_t inter = w > 0 && h > 0 ? w * h : 0;
  const std::int64_t uni = a.area() + b.area() - inter;
  if (inter == 0 || uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Indices of detections sorted by descending score, input order on ties.
std::vector<std::size_t> by_score(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

// Greedy assignment for one image. Returns the matched ground-truth index or -1.
class ImageMatcher {
 public:
  ImageMatcher(std::span<const BBox> gt, double threshold) : gt_(gt), used_(gt.size(), false), threshold_(threshold) {}

  int take(const BBox& box) {
    int best = -1;
    double best_iou = 0;
    for (std::size_t g = 0; g < gt_.size(); ++g) {
      if (used_[g]) continue;
      const double v = iou(box, gt_[g]);
      if (v > threshold_ && (best < 0 || v > best_iou)) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) used_[best] = true;
    return best;
  }

 private:
  std::span<const BBox> gt_;
  std::vector<bool> used_;
  double threshold_;
};

struct ScoredVerdict {
  double score;
  std::size_t order;  // position in the caller's detection list
  bool tp;
};

std::vector<ScoredVerdict> match_for_curve(std::span<const Detection> dets, std::span<const std::size_t> positions,
                                           const ImageBoxes& gt, double iou_threshold) {
  std::map<std::string, ImageMatcher> matchers;
  static const std::vector<BBox> kNoBoxes;
  std::vector<ScoredVerdict> out;
  for (std::size_t i : by_score(dets)) {
    auto it = matchers.find(dets[i].image);
    if (it == matchers.end()) {
      const auto g = gt.find(dets[i].image);
      it = matchers.emplace(dets[i].image, ImageMatcher(g == gt.end() ? kNoBoxes : g->second, iou_threshold)).first;
    }
    out.push_back({dets[i].score, positions.empty() ? i : positions[i], it->second.take(dets[i].box) >= 0});
  }
  return out;
}

PRCurve curve_from_verdicts(std::vector<ScoredVerdict> verdicts, int n_gt, std::string class_name) {
  std::stable_sort(verdicts.begin(), verdicts.end(), [](const ScoredVerdict& a, const ScoredVerdict& b) {
    return a.score != b.score ? a.score > b.score : a.order < b.order;
  });
  PRCurve curve;
  curve.class_name = std::move(class_name);
  curve.n_ground_truth = n_gt;
  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    verdicts[i].tp ? ++tp : ++fp;
    if (i + 1 < verdicts.size() && verdicts[i + 1].score == verdicts[i].score) continue;
    curve.points.push_back({verdicts[i].score, n_gt > 0 ? static_cast<double>(tp) / n_gt : 0.0,
                            static_cast<double>(tp) / (tp + fp)});
  }
  return curve;
}

json ratio_json(const Ratio& r) { return r.defined ? json(r.value) : json(nullptr); }

}  // namespace

MatchResult match_detections(std::span<const Detection> dets, std::span<const BBox> gt, const EvalConfig& cfg) {
  MatchResult m;
  m.verdicts.resize(dets.size());
  ImageMatcher matcher(gt, cfg.iou_threshold);
  for (std::size_t i : by_score(dets)) {
    if (!(dets[i].score > cfg.conf_threshold)) continue;
    const int g = matcher.take(dets[i].box);
    if (g >= 0) {
      m.verdicts[i] = {Verdict::true_positive, g};
      ++m.tp;
    } else {
      m.verdicts[i] = {Verdict::false_positive, -1};
      ++m.fp;
    }
  }
  m.fn = static_cast<int>(gt.size()) - m.tp;
  return m;
}

Ratio precision(int tp, int fp) { return Ratio::of(tp, tp + fp); }
Ratio recall(int tp, int fn) { return Ratio::of(tp, tp + fn); }
Ratio precision(const MatchResult& m) { return precision(m.tp, m.fp); }
Ratio recall(const MatchResult& m) { return recall(m.tp, m.fn); }

double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

MetricsReport MetricsReport::from_counts(int tp, int fp, int fn) {
  MetricsReport r{tp, fp, fn, cadsynth::precision(tp, fp), cadsynth::recall(tp, fn), {}};
  if (r.precision.defined && r.recall.defined) r.f1 = {cadsynth::f1(r.precision.value, r.recall.value), true};
  return r;
}

PRCurve pr_curve(std::span<const Detection> dets, const ImageBoxes& gt, double iou_threshold) {
  int n_gt = 0;
  for (const auto& [image, boxes] : gt) n_gt += static_cast<int>(boxes.size());
  return curve_from_verdicts(match_for_curve(dets, {}, gt, iou_threshold), n_gt,
                             dets.empty() ? std::string() : dets.front().class_name);
}

double average_precision(const PRCurve& curve) {
  if (curve.points.empty() || curve.n_ground_truth == 0) return 0.0;
  const std::size_t n = curve.points.size();
  std::vector<double> rec(n + 2), prec(n + 2);
  rec[0] = 0;
  prec[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rec[i + 1] = curve.points[i].recall;
    prec[i + 1] = curve.points[i].precision;
  }
  rec[n + 1] = 1;
  prec[n + 1] = 0;
  for (std::size_t i = n + 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);
  double ap = 0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) ap += (rec[i + 1] - rec[i]) * prec[i + 1];
  return ap;
}

DatasetEvaluation evaluate(const std::map<std::string, Annotation>& gt, std::span<const Detection> dets,
                           const EvalConfig& cfg) {
  validate(cfg);
  DatasetEvaluation ev;
  ev.config = cfg;
  ev.n_images = static_cast<int>(gt.size());
  ev.n_detections = static_cast<int>(dets.size());

  std::set<std::string> class_names;
  for (const auto& [image, ann] : gt)
    for (const AnnotatedObject& o : ann.objects) class_names.insert(o.name);
  for (const Detection& d : dets) {
    if (!gt.count(d.image)) throw MissingImageAnnotation(fmt::format("detection references image '{}' with no annotation", d.image));
    class_names.insert(d.class_name);
  }

  std::vector<ScoredVerdict> pooled;
  int pooled_gt = 0, tp = 0, fp = 0, fn = 0;
  double ap_sum = 0;
  int ap_classes = 0;
  for (const std::string& name : class_names) {
    ImageBoxes boxes;
    for (const auto& [image, ann] : gt) {
      auto& list = boxes[image];
      for (const AnnotatedObject& o : ann.objects)
        if (o.name == name) list.push_back(o.box);
    }
    std::vector<Detection> class_dets;
    std::vector<std::size_t> positions;
    std::map<std::string, std::vector<Detection>> per_image;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (dets[i].class_name == name) {
        class_dets.push_back(dets[i]);
        positions.push_back(i);
        per_image[dets[i].image].push_back(dets[i]);
      }
    ClassEvaluation ce;
    int c_tp = 0, c_fp = 0, c_fn = 0;
    for (const auto& [image, list] : boxes) {
      const auto it = per_image.find(image);
      const std::span<const Detection> image_dets =
          it == per_image.end() ? std::span<const Detection>() : std::span<const Detection>(it->second);
      const MatchResult m = match_detections(image_dets, list, cfg);
      c_tp += m.tp;
      c_fp += m.fp;
      c_fn += m.fn;
    }
    ce.metrics = MetricsReport::from_counts(c_tp, c_fp, c_fn);
    std::vector<ScoredVerdict> verdicts = match_for_curve(class_dets, positions, boxes, cfg.iou_threshold);
    pooled.insert(pooled.end(), verdicts.begin(), verdicts.end());
    const int n_gt = c_tp + c_fn;
    ce.curve = curve_from_verdicts(std::move(verdicts), n_gt, name);
    ce.ap = average_precision(ce.curve);
    if (n_gt > 0) {
      ap_sum += ce.ap;
      ++ap_classes;
    }
    pooled_gt += n_gt;
    tp += c_tp;
    fp += c_fp;
    fn += c_fn;
    ev.classes.emplace(name, std::move(ce));
  }
  ev.aggregate = MetricsReport::from_counts(tp, fp, fn);
  ev.aggregate_curve = curve_from_verdicts(std::move(pooled), pooled_gt, "");
  ev.aggregate_ap = average_precision(ev.aggregate_curve);
  ev.mean_ap = ap_classes > 0 ? ap_sum / ap_classes : 0.0;
  return ev;
}

DatasetEvaluation evaluate_dataset(const std::filesystem::path& gt_dir, const std::filesystem::path& det_file,
                                   const EvalConfig& cfg) {
  validate(cfg);
  const auto gt = load_ground_truth(gt_dir);
  std::vector<Detection> dets;
  try {
    dets = parse_detections(read_text_file(det_file));
  } catch (const MalformedDetections& e) {
    throw MalformedDetections(fmt::format("{}: {}", det_file.string(), e.what()));
  }
  return evaluate(gt, dets, cfg);
}

json to_json(const MetricsReport& r) {
  return {{"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn},
          {"precision", ratio_json(r.precision)},
          {"recall", ratio_json(r.recall)},
          {"f1", ratio_json(r.f1)}};
}

json to_json(const DatasetEvaluation& ev) {
  json classes = json::object();
  for (const auto& [name, ce] : ev.classes) {
    json c = to_json(ce.metrics);
    c["ap"] = ce.ap;
    c["n_ground_truth"] = ce.curve.n_ground_truth;
    classes[name] = std::move(c);
  }
  return {{"conf_threshold", ev.config.conf_threshold},
          {"iou_threshold", ev.config.iou_threshold},
          {"n_images", ev.n_images},
          {"n_detections", ev.n_detections},
          {"aggregate", to_json(ev.aggregate)},
          {"aggregate_ap", ev.aggregate_ap},
          {"mean_ap", ev.mean_ap},
          {"classes", classes}};
}

}  // namespace cadsynth
