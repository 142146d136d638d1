#include "pothole/tracker.hpp"

#include "pothole/error.hpp"
#include "pothole/hungarian.hpp"
#include "pothole/motion.hpp"

#include <algorithm>
#include <string>

namespace pothole {

void TrackerConfig::validate() const {
  if (!(low_conf_floor >= 0.0 && low_conf_floor < high_conf_threshold && high_conf_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "require 0 <= low_conf_floor < high_conf_threshold <= 1");
  }
  if (iou_gate_stage1 < 0.0 || iou_gate_stage1 > 1.0 || iou_gate_stage2 < 0.0 || iou_gate_stage2 > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "IoU gates must lie in [0, 1]");
  }
  if (max_misses < 0 || min_hits_to_confirm < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_misses >= 0 and min_hits_to_confirm >= 1 required");
  }
}

namespace {

void match_stage(const std::vector<BBox>& track_boxes, const std::vector<Detection>& dets,
                 std::vector<int>& tracks, std::vector<int>& candidates, double gate,
                 std::vector<std::pair<int, int>>& matches) {
  if (tracks.empty() || candidates.empty()) return;
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(tracks.size()), static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t r = 0; r < tracks.size(); ++r) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          1.0 - iou(track_boxes[static_cast<std::size_t>(tracks[r])], dets[static_cast<std::size_t>(candidates[c])].bbox);
    }
  }
  const Assignment a = hungarian_solve(cost);
  std::vector<char> track_used(tracks.size(), 0), cand_used(candidates.size(), 0);
  for (const auto& [r, c] : a.pairs) {
    if (1.0 - cost(r, c) < gate) continue;
    matches.emplace_back(tracks[static_cast<std::size_t>(r)], candidates[static_cast<std::size_t>(c)]);
    track_used[static_cast<std::size_t>(r)] = 1;
    cand_used[static_cast<std::size_t>(c)] = 1;
  }
  std::vector<int> rest_tracks, rest_cands;
  for (std::size_t r = 0; r < tracks.size(); ++r) {
    if (!track_used[r]) rest_tracks.push_back(tracks[r]);
  }
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!cand_used[c]) rest_cands.push_back(candidates[c]);
  }
  tracks = std::move(rest_tracks);
  candidates = std::move(rest_cands);
}

}  // namespace

AssociationResult associate(const std::vector<BBox>& track_boxes, const std::vector<Detection>& dets,
                            const TrackerConfig& cfg) {
  AssociationResult out;
  std::vector<int> tracks(track_boxes.size());
  for (std::size_t k = 0; k < tracks.size(); ++k) tracks[k] = static_cast<int>(k);
  std::vector<int> high, low, ignored;
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const double c = dets[k].confidence;
    if (c >= cfg.high_conf_threshold) {
      high.push_back(static_cast<int>(k));
    } else if (c >= cfg.low_conf_floor) {
      low.push_back(static_cast<int>(k));
    } else {
      ignored.push_back(static_cast<int>(k));
    }
  }
  match_stage(track_boxes, dets, tracks, high, cfg.iou_gate_stage1, out.matches);
  match_stage(track_boxes, dets, tracks, low, cfg.iou_gate_stage2, out.matches);
  out.unmatched_tracks = tracks;
  out.unmatched_detections = high;
  out.unmatched_detections.insert(out.unmatched_detections.end(), low.begin(), low.end());
  out.unmatched_detections.insert(out.unmatched_detections.end(), ignored.begin(), ignored.end());
  std::sort(out.matches.begin(), out.matches.end());
  std::sort(out.unmatched_detections.begin(), out.unmatched_detections.end());
  return out;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

Track* Tracker::find(long id) {
  auto it = std::find_if(tracks_.begin(), tracks_.end(), [id](const Track& t) { return t.id == id; });
  return it == tracks_.end() ? nullptr : &*it;
}

std::vector<TrackedDetection> Tracker::step(const std::vector<Detection>& dets,
                                            const std::optional<MotionTransform>& motion) {
  long frame = last_frame_ ? *last_frame_ + 1 : 0;
  if (!dets.empty()) frame = dets.front().frame;
  return step(frame, dets, motion);
}

std::vector<TrackedDetection> Tracker::step(long frame, const std::vector<Detection>& dets,
                                            const std::optional<MotionTransform>& motion) {
  if (last_frame_ && frame <= *last_frame_) {
    throw Error(ErrorCode::OutOfOrderFrame,
                "frame " + std::to_string(frame) + " after " + std::to_string(*last_frame_));
  }
  if (motion && !motion->is_invertible()) {
    throw Error(ErrorCode::SingularTransform, "motion transform is singular");
  }
  last_frame_ = frame;

  // Detections in the previous frame's coordinates.
  std::vector<Detection> compensated = dets;
  if (motion) {
    for (auto& d : compensated) d.bbox = compensate(d.bbox, *motion);
  }

  std::vector<BBox> predicted;
  predicted.reserve(tracks_.size());
  for (auto& t : tracks_) {
    t.state = predict(t.state, cfg_.noise);
    ++t.age;
    predicted.push_back(t.state.box());
  }

  const AssociationResult assoc = associate(predicted, compensated, cfg_);

  std::vector<long> det_track(dets.size(), 0);
  for (const auto& [ti, di] : assoc.matches) {
    Track& t = tracks_[static_cast<std::size_t>(ti)];
    t.state = kf_update(t.state, compensated[static_cast<std::size_t>(di)].bbox, cfg_.noise);
    t.misses = 0;
    ++t.hits;
    if (t.status == TrackStatus::Tentative && t.hits >= cfg_.min_hits_to_confirm) {
      t.status = TrackStatus::Confirmed;
    }
    det_track[static_cast<std::size_t>(di)] = t.id;
  }
  for (int ti : assoc.unmatched_tracks) {
    Track& t = tracks_[static_cast<std::size_t>(ti)];
    ++t.misses;
    if (t.status == TrackStatus::Tentative || t.misses > cfg_.max_misses) {
      t.status = TrackStatus::Deleted;
    }
  }
  std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::Deleted; });

  if (motion) {
    for (auto& t : tracks_) t.state = warp_state(t.state, *motion);
  }

  for (int di : assoc.unmatched_detections) {
    const Detection& d = dets[static_cast<std::size_t>(di)];
    if (d.confidence < cfg_.high_conf_threshold) continue;
    Track t;
    t.id = next_id_++;
    t.state = initiate_state(d.bbox, cfg_.noise);
    t.hits = 1;
    t.status = t.hits >= cfg_.min_hits_to_confirm ? TrackStatus::Confirmed : TrackStatus::Tentative;
    det_track[static_cast<std::size_t>(di)] = t.id;
    tracks_.push_back(std::move(t));
  }

  std::vector<TrackedDetection> out;
  for (std::size_t k = 0; k < dets.size(); ++k) {
    if (det_track[k] != 0) out.push_back({det_track[k], dets[k]});
  }
  return out;
}

}  // namespace pothole
