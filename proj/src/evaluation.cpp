#include "wastegrasp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "wastegrasp/error.hpp"

namespace wastegrasp {

double mask_iou(const InstanceMask& a, const InstanceMask& b) {
  if (a.width != b.width || a.height != b.height || a.bits.size() != b.bits.size()) {
    throw Error(ErrorCode::DimensionMismatch, "IoU of masks with different dimensions");
  }
  std::size_t intersection = 0;
  std::size_t union_count = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool in_a = a.bits[i] != 0;
    const bool in_b = b.bits[i] != 0;
    intersection += (in_a && in_b) ? 1 : 0;
    union_count += (in_a || in_b) ? 1 : 0;
  }
  if (union_count == 0) return 0.0;
  return static_cast<double>(intersection) / static_cast<double>(union_count);
}

GreedyMatch greedy_match(const std::vector<std::vector<double>>& ious,
                         std::span<const std::size_t> det_order,
                         const std::vector<bool>& gt_ignored, double iou_threshold) {
  const std::size_t num_gt = gt_ignored.size();
  GreedyMatch result;
  result.det_to_gt.assign(ious.size(), -1);
  result.gt_to_det.assign(num_gt, -1);
  for (std::size_t d : det_order) {
    int best = -1;
    double best_iou = 0.0;
    bool best_ignored = true;
    for (std::size_t g = 0; g < num_gt; ++g) {
      if (result.gt_to_det[g] >= 0) continue;
      const double iou = ious[d][g];
      if (iou < iou_threshold) continue;
      const bool ignored = gt_ignored[g];
      // A non-ignored ground truth always beats an ignored one.
      const bool better = best < 0 || (best_ignored && !ignored) ||
                          (best_ignored == ignored && iou > best_iou);
      if (better) {
        best = static_cast<int>(g);
        best_iou = iou;
        best_ignored = ignored;
      }
    }
    if (best >= 0) {
      result.det_to_gt[d] = best;
      result.gt_to_det[best] = static_cast<int>(d);
    }
  }
  return result;
}

namespace {

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

MatchSet match_detections(std::span<const DetectionRecord> detections,
                          std::span<const AnnotationRecord> ground_truths, double iou_threshold) {
  std::vector<InstanceMask> gt_masks;
  gt_masks.reserve(ground_truths.size());
  for (const auto& gt : ground_truths) gt_masks.push_back(load_mask(gt.mask));

  std::vector<double> scores;
  std::vector<std::vector<double>> ious;
  for (const auto& det : detections) {
    scores.push_back(det.score);
    const InstanceMask mask = load_mask(det.mask);
    std::vector<double> row;
    row.reserve(gt_masks.size());
    for (const auto& gt : gt_masks) row.push_back(mask_iou(mask, gt));
    ious.push_back(std::move(row));
  }
  const std::vector<std::size_t> order = order_by_score(scores);
  const std::vector<bool> ignored(ground_truths.size(), false);
  const GreedyMatch match = greedy_match(ious, order, ignored, iou_threshold);

  MatchSet set;
  for (std::size_t d : order) {
    if (match.det_to_gt[d] >= 0) {
      set.pairs.emplace_back(d, static_cast<std::size_t>(match.det_to_gt[d]));
    } else {
      set.false_positives.push_back(d);
    }
  }
  for (std::size_t g = 0; g < ground_truths.size(); ++g) {
    if (match.gt_to_det[g] < 0) set.false_negatives.push_back(g);
  }
  return set;
}

std::vector<PrPoint> precision_recall_curve(std::span<const RankedDetection> ranked,
                                            std::size_t num_ground_truth) {
  std::vector<PrPoint> curve;
  curve.reserve(ranked.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const auto& det : ranked) {
    (det.true_positive ? tp : fp) += 1;
    const double recall =
        num_ground_truth == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(num_ground_truth);
    curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

double average_precision(std::span<const RankedDetection> ranked, std::size_t num_ground_truth) {
  if (num_ground_truth == 0) {
    throw Error(ErrorCode::UndefinedMetric, "average precision without ground truth");
  }
  std::vector<PrPoint> curve = precision_recall_curve(ranked, num_ground_truth);
  // Precision envelope: best precision at any later (higher-recall) point.
  for (std::size_t i = curve.size(); i-- > 1;) {
    curve[i - 1].precision = std::max(curve[i - 1].precision, curve[i].precision);
  }
  constexpr int kRecallLevels = 101;
  double sum = 0.0;
  for (int r = 0; r < kRecallLevels; ++r) {
    const double level = r / 100.0;
    const auto it = std::lower_bound(curve.begin(), curve.end(), level,
                                     [](const PrPoint& p, double l) { return p.recall < l; });
    if (it != curve.end()) sum += it->precision;
  }
  return sum / kRecallLevels;
}

EvalParams::EvalParams() {
  for (int i = 0; i < 10; ++i) iou_thresholds.push_back((50 + 5 * i) / 100.0);
}

namespace {

constexpr int kNumBuckets = 4;

bool in_bucket(AreaBucket bucket, double area, const EvalParams& params) {
  switch (bucket) {
    case AreaBucket::All: return true;
    case AreaBucket::Small: return area < params.small_area;
    case AreaBucket::Medium: return area >= params.small_area && area < params.large_area;
    case AreaBucket::Large: return area >= params.large_area;
  }
  return false;
}

struct AccumulatedDetection {
  double score;
  std::size_t input_index;
  bool true_positive;
};

struct Accumulator {
  std::vector<AccumulatedDetection> detections;
  std::size_t num_ground_truth = 0;
};

std::optional<double> mean_of_defined(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (!v) continue;
    sum += *v;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

EvalReport coco_summary(std::span<const DetectionRecord> detections,
                        std::span<const AnnotationRecord> ground_truths, const EvalParams& params) {
  const std::size_t num_thresholds = params.iou_thresholds.size();

  // Group indices per (image, class); std::map gives a deterministic walk.
  std::map<std::pair<std::string, int>, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
      groups;
  std::map<std::string, int> images;
  for (std::size_t i = 0; i < ground_truths.size(); ++i) {
    groups[{ground_truths[i].image_id, class_id(ground_truths[i].label)}].second.push_back(i);
    images[ground_truths[i].image_id] = 0;
  }
  for (std::size_t i = 0; i < detections.size(); ++i) {
    groups[{detections[i].image_id, class_id(detections[i].label)}].first.push_back(i);
    images[detections[i].image_id] = 0;
  }

  // accumulators[class][bucket][threshold]
  std::vector<std::vector<std::vector<Accumulator>>> acc(
      kNumClasses, std::vector<std::vector<Accumulator>>(kNumBuckets,
                                                         std::vector<Accumulator>(num_thresholds)));

  for (const auto& [key, members] : groups) {
    const int cls = key.second;
    const auto& [det_indices_raw, gt_indices] = members;

    std::vector<double> scores;
    for (std::size_t d : det_indices_raw) scores.push_back(detections[d].score);
    std::vector<std::size_t> det_indices;
    for (std::size_t pos : order_by_score(scores)) det_indices.push_back(det_indices_raw[pos]);
    if (det_indices.size() > params.max_detections) det_indices.resize(params.max_detections);

    std::vector<InstanceMask> gt_masks;
    std::vector<double> gt_areas;
    for (std::size_t g : gt_indices) {
      gt_masks.push_back(load_mask(ground_truths[g].mask));
      gt_areas.push_back(static_cast<double>(mask_area(gt_masks.back())));
    }
    std::vector<double> det_areas;
    std::vector<std::vector<double>> ious;
    for (std::size_t d : det_indices) {
      const InstanceMask mask = load_mask(detections[d].mask);
      det_areas.push_back(static_cast<double>(mask_area(mask)));
      std::vector<double> row;
      for (const auto& gt : gt_masks) row.push_back(mask_iou(mask, gt));
      ious.push_back(std::move(row));
    }
    std::vector<std::size_t> order(det_indices.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int b = 0; b < kNumBuckets; ++b) {
      const auto bucket = static_cast<AreaBucket>(b);
      std::vector<bool> ignored(gt_indices.size(), false);
      std::size_t counted = 0;
      for (std::size_t g = 0; g < gt_indices.size(); ++g) {
        ignored[g] = !in_bucket(bucket, gt_areas[g], params);
        if (!ignored[g]) ++counted;
      }
      for (std::size_t t = 0; t < num_thresholds; ++t) {
        Accumulator& target = acc[cls][b][t];
        target.num_ground_truth += counted;
        const GreedyMatch match = greedy_match(ious, order, ignored, params.iou_thresholds[t]);
        for (std::size_t d = 0; d < det_indices.size(); ++d) {
          const int g = match.det_to_gt[d];
          // Matches to out-of-bucket ground truth, and unmatched detections
          // that are themselves out of bucket, count neither way.
          const bool skip = g >= 0 ? ignored[g] : !in_bucket(bucket, det_areas[d], params);
          if (skip) continue;
          target.detections.push_back({detections[det_indices[d]].score, det_indices[d], g >= 0});
        }
      }
    }
  }

  // ap_values[class][bucket][threshold]
  std::vector<std::vector<std::vector<std::optional<double>>>> ap_values(
      kNumClasses, std::vector<std::vector<std::optional<double>>>(
                       kNumBuckets, std::vector<std::optional<double>>(num_thresholds)));
  for (int c = 0; c < kNumClasses; ++c) {
    for (int b = 0; b < kNumBuckets; ++b) {
      for (std::size_t t = 0; t < num_thresholds; ++t) {
        Accumulator& a = acc[c][b][t];
        if (a.num_ground_truth == 0) continue;
        std::stable_sort(a.detections.begin(), a.detections.end(),
                         [](const AccumulatedDetection& x, const AccumulatedDetection& y) {
                           if (x.score != y.score) return x.score > y.score;
                           return x.input_index < y.input_index;
                         });
        std::vector<RankedDetection> ranked;
        ranked.reserve(a.detections.size());
        for (const auto& d : a.detections) ranked.push_back({d.score, d.true_positive});
        ap_values[c][b][t] = average_precision(ranked, a.num_ground_truth);
      }
    }
  }

  auto summarize = [&](AreaBucket bucket, std::optional<double> threshold) {
    std::vector<std::optional<double>> values;
    for (int c = 0; c < kNumClasses; ++c) {
      for (std::size_t t = 0; t < num_thresholds; ++t) {
        if (threshold && std::abs(params.iou_thresholds[t] - *threshold) > 1e-12) continue;
        values.push_back(ap_values[c][static_cast<int>(bucket)][t]);
      }
    }
    return mean_of_defined(values);
  };

  EvalReport report;
  report.ap = summarize(AreaBucket::All, std::nullopt);
  report.ap50 = summarize(AreaBucket::All, 0.5);
  report.ap75 = summarize(AreaBucket::All, 0.75);
  report.ap_small = summarize(AreaBucket::Small, std::nullopt);
  report.ap_medium = summarize(AreaBucket::Medium, std::nullopt);
  report.ap_large = summarize(AreaBucket::Large, std::nullopt);
  for (int c = 0; c < kNumClasses; ++c) {
    report.per_class[c] = mean_of_defined(ap_values[c][static_cast<int>(AreaBucket::All)]);
  }
  report.num_images = images.size();
  report.num_ground_truths = ground_truths.size();
  report.num_detections = detections.size();
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  auto value = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json per_class = nlohmann::json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    per_class[std::string(class_name(static_cast<ClassLabel>(c)))] = value(report.per_class[c]);
  }
  nlohmann::json doc = {
      {"ap", value(report.ap)},
      {"ap50", value(report.ap50)},
      {"ap75", value(report.ap75)},
      {"ap_small", value(report.ap_small)},
      {"ap_medium", value(report.ap_medium)},
      {"ap_large", value(report.ap_large)},
      {"per_class", per_class},
      {"num_images", report.num_images},
      {"num_ground_truths", report.num_ground_truths},
      {"num_detections", report.num_detections},
  };
  return doc.dump(2);
}

std::string format_eval_table(const EvalReport& report) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::optional<double>& v) {
    out << "  " << std::left << std::setw(28) << name;
    if (v) {
      out << std::fixed << std::setprecision(3) << *v;
    } else {
      out << "n/a";
    }
    out << '\n';
  };
  out << "Mask AP over " << report.num_images << " images, " << report.num_ground_truths
      << " ground truths, " << report.num_detections << " detections\n";
  row("AP @[.50:.95]", report.ap);
  row("AP50", report.ap50);
  row("AP75", report.ap75);
  row("APs (area < 32^2)", report.ap_small);
  row("APm (32^2 <= area < 96^2)", report.ap_medium);
  row("APl (area >= 96^2)", report.ap_large);
  out << "Per class AP @[.50:.95]\n";
  for (int c = 0; c < kNumClasses; ++c) {
    row(std::string(class_name(static_cast<ClassLabel>(c))), report.per_class[c]);
  }
  return out.str();
}

}  // namespace wastegrasp
