#pragma once

#include "pothole/geometry.hpp"

#include <map>
#include <vector>

namespace pothole::metrics {

struct MatchCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RankedDetection {
  double confidence = 0.0;
  bool true_positive = false;
};

struct DetectionEvalReport {
  MatchCounts counts;
  PrecisionRecall pr;
  double ap50 = 0.0;
  double ap50_95 = 0.0;
  double iou_threshold = 0.7;
};

// Greedy one-to-one matching for a single image. Detections are visited in
// descending confidence (ties keep input order); each takes the unmatched
// ground truth of highest IoU and is a true positive iff that IoU >= thresh.
// Returns a flag per detection, in input order.
std::vector<bool> match_flags(const std::vector<BBox>& dets, const std::vector<double>& confidences,
                              const std::vector<BBox>& gts, double iou_thresh);

MatchCounts match_for_eval(const std::vector<Detection>& dets, const std::vector<Detection>& gts,
                           double iou_thresh);

PrecisionRecall precision_recall_f1(long tp, long fp, long fn) noexcept;
PrecisionRecall precision_recall_f1(double precision, double recall) noexcept;

// 101-point interpolated AP. `ranked` must be sorted by descending confidence.
double average_precision(const std::vector<RankedDetection>& ranked, long n_gt);

// Dataset-level evaluation over frames. Only pothole-class entries count.
DetectionEvalReport evaluate_detections(const std::map<long, std::vector<Detection>>& dets,
                                        const std::map<long, std::vector<Detection>>& gts,
                                        double iou_thresh = 0.7);

// AP at one IoU threshold over all frames.
double dataset_average_precision(const std::map<long, std::vector<Detection>>& dets,
                                 const std::map<long, std::vector<Detection>>& gts, double iou_thresh);

}  // namespace pothole::metrics
