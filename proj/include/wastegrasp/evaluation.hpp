#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wastegrasp/camera_geometry.hpp"
#include "wastegrasp/dataset_io.hpp"

namespace wastegrasp {

/// |a ∩ b| / |a ∪ b|, 0 when both masks are empty.
double mask_iou(const InstanceMask& a, const InstanceMask& b);

struct MatchSet {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (detection, annotation)
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> false_negatives;

  std::size_t true_positives() const { return pairs.size(); }
};

/// Result of greedy matching at one threshold, indexed by detection.
struct GreedyMatch {
  std::vector<int> det_to_gt;  // -1 when unmatched
  std::vector<int> gt_to_det;  // -1 when unmatched
};

/// COCO greedy assignment over a precomputed IoU matrix (`ious[d][g]`).
///
/// Detections are visited in `det_order`. Each takes the highest-IoU
/// still-unmatched ground truth with IoU >= threshold, preferring
/// ground truths not flagged in `gt_ignored`; equal IoUs resolve to the
/// lower ground-truth index.
GreedyMatch greedy_match(const std::vector<std::vector<double>>& ious,
                         std::span<const std::size_t> det_order,
                         const std::vector<bool>& gt_ignored, double iou_threshold);

/// Matches detections of one image and class. Detections are processed by
/// descending score, ties by input order.
MatchSet match_detections(std::span<const DetectionRecord> detections,
                          std::span<const AnnotationRecord> ground_truths, double iou_threshold);

struct RankedDetection {
  double score = 0.0;
  bool true_positive = false;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Raw (non-interpolated) precision/recall after each detection, in
/// the given order, which must already be descending by score.
std::vector<PrPoint> precision_recall_curve(std::span<const RankedDetection> ranked,
                                            std::size_t num_ground_truth);

/// 101-point interpolated AP. Throws UndefinedMetric when
/// `num_ground_truth` is zero.
double average_precision(std::span<const RankedDetection> ranked, std::size_t num_ground_truth);

struct EvalParams {
  std::vector<double> iou_thresholds;  // default 0.50:0.05:0.95
  std::size_t max_detections = 100;    // per image and class
  double small_area = 32.0 * 32.0;     // small: area < small_area
  double large_area = 96.0 * 96.0;     // large: area >= large_area

  EvalParams();
};

enum class AreaBucket { All = 0, Small = 1, Medium = 2, Large = 3 };

/// Undefined entries (no ground truth in the bucket) are std::nullopt.
struct EvalReport {
  std::optional<double> ap;
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
  std::array<std::optional<double>, kNumClasses> per_class{};
  std::size_t num_images = 0;
  std::size_t num_ground_truths = 0;
  std::size_t num_detections = 0;
};

/// COCO-style mask evaluation. Detection ties across images are broken
/// by position in `detections`.
EvalReport coco_summary(std::span<const DetectionRecord> detections,
                        std::span<const AnnotationRecord> ground_truths,
                        const EvalParams& params = {});

std::string eval_report_json(const EvalReport& report);
std::string format_eval_table(const EvalReport& report);

}  // namespace wastegrasp
