#include "pothole/detection_metrics.hpp"

#include "pothole/error.hpp"

#include <algorithm>
#include <numeric>

namespace pothole::metrics {

namespace {

std::vector<std::size_t> rank_order(const std::vector<double>& confidences) {
  std::vector<std::size_t> order(confidences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return confidences[a] > confidences[b]; });
  return order;
}

std::vector<Detection> potholes_only(const std::vector<Detection>& in) {
  std::vector<Detection> out;
  std::copy_if(in.begin(), in.end(), std::back_inserter(out), [](const Detection& d) { return d.is_pothole(); });
  return out;
}

}  // namespace

std::vector<bool> match_flags(const std::vector<BBox>& dets, const std::vector<double>& confidences,
                              const std::vector<BBox>& gts, double iou_thresh) {
  if (dets.size() != confidences.size()) {
    throw Error(ErrorCode::InvalidArgument, "one confidence per detection required");
  }
  std::vector<bool> flags(dets.size(), false);
  std::vector<char> gt_used(gts.size(), 0);
  for (std::size_t k : rank_order(confidences)) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g]) continue;
      const double o = iou(dets[k], gts[g]);
      if (o > best) {
        best = o;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best >= iou_thresh) {
      gt_used[best_gt] = 1;
      flags[k] = true;
    }
  }
  return flags;
}

MatchCounts match_for_eval(const std::vector<Detection>& dets, const std::vector<Detection>& gts,
                           double iou_thresh) {
  std::vector<BBox> boxes, gt_boxes;
  std::vector<double> conf;
  for (const auto& d : dets) {
    boxes.push_back(d.bbox);
    conf.push_back(d.confidence);
  }
  for (const auto& g : gts) gt_boxes.push_back(g.bbox);
  const auto flags = match_flags(boxes, conf, gt_boxes, iou_thresh);
  MatchCounts c;
  c.tp = std::count(flags.begin(), flags.end(), true);
  c.fp = static_cast<long>(dets.size()) - c.tp;
  c.fn = static_cast<long>(gts.size()) - c.tp;
  return c;
}

PrecisionRecall precision_recall_f1(double precision, double recall) noexcept {
  PrecisionRecall pr{precision, recall, 0.0};
  if (precision + recall > 0.0) pr.f1 = 2.0 * precision * recall / (precision + recall);
  return pr;
}

PrecisionRecall precision_recall_f1(long tp, long fp, long fn) noexcept {
  const double p = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return precision_recall_f1(p, r);
}

double average_precision(const std::vector<RankedDetection>& ranked, long n_gt) {
  if (n_gt <= 0) return 0.0;
  const std::size_t n = ranked.size();
  std::vector<double> precision(n), recall(n);
  long tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (ranked[k].true_positive) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  // Precision envelope: max precision at any recall >= r.
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double sum = 0.0;
  for (int s = 0; s <= 100; ++s) {
    const double r = s / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r - 1e-12);
    if (it == recall.end()) break;
    sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

double dataset_average_precision(const std::map<long, std::vector<Detection>>& dets,
                                 const std::map<long, std::vector<Detection>>& gts, double iou_thresh) {
  std::vector<RankedDetection> ranked;
  long n_gt = 0;
  for (const auto& [frame, g] : gts) n_gt += static_cast<long>(potholes_only(g).size());
  for (const auto& [frame, d_all] : dets) {
    const auto d = potholes_only(d_all);
    std::vector<BBox> boxes, gt_boxes;
    std::vector<double> conf;
    for (const auto& x : d) {
      boxes.push_back(x.bbox);
      conf.push_back(x.confidence);
    }
    if (auto it = gts.find(frame); it != gts.end()) {
      for (const auto& x : potholes_only(it->second)) gt_boxes.push_back(x.bbox);
    }
    const auto flags = match_flags(boxes, conf, gt_boxes, iou_thresh);
    for (std::size_t k = 0; k < d.size(); ++k) ranked.push_back({conf[k], flags[k]});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedDetection& a, const RankedDetection& b) { return a.confidence > b.confidence; });
  return average_precision(ranked, n_gt);
}

DetectionEvalReport evaluate_detections(const std::map<long, std::vector<Detection>>& dets,
                                        const std::map<long, std::vector<Detection>>& gts,
                                        double iou_thresh) {
  DetectionEvalReport rep;
  rep.iou_threshold = iou_thresh;
  std::map<long, char> frames;
  for (const auto& [f, _] : dets) frames[f] = 1;
  for (const auto& [f, _] : gts) frames[f] = 1;
  static const std::vector<Detection> none;
  for (const auto& [f, _] : frames) {
    const auto di = dets.find(f);
    const auto gi = gts.find(f);
    const auto c = match_for_eval(potholes_only(di == dets.end() ? none : di->second),
                                  potholes_only(gi == gts.end() ? none : gi->second), iou_thresh);
    rep.counts.tp += c.tp;
    rep.counts.fp += c.fp;
    rep.counts.fn += c.fn;
  }
  rep.pr = precision_recall_f1(rep.counts.tp, rep.counts.fp, rep.counts.fn);
  rep.ap50 = dataset_average_precision(dets, gts, 0.5);
  double sum = 0.0;
  for (int k = 0; k < 10; ++k) sum += dataset_average_precision(dets, gts, 0.5 + 0.05 * k);
  rep.ap50_95 = sum / 10.0;
  return rep;
}

}  // namespace pothole::metrics
