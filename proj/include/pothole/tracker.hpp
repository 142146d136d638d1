#pragma once

#include "pothole/box_kalman.hpp"
#include "pothole/cdkf.hpp"
#include "pothole/geometry.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace pothole {

struct TrackerConfig {
  double high_conf_threshold = 0.5;
  double low_conf_floor = 0.1;
  double iou_gate_stage1 = 0.3;
  double iou_gate_stage2 = 0.5;
  int max_misses = 30;
  int min_hits_to_confirm = 2;
  BoxNoise noise;

  void validate() const;
};

enum class TrackStatus { Tentative, Confirmed, Deleted };

struct Track {
  long id = 0;
  TrackState state;
  int age = 0;
  int misses = 0;
  int hits = 0;
  TrackStatus status = TrackStatus::Tentative;
  std::optional<cdkf::CdkfState> cdkf;
};

struct AssociationResult {
  std::vector<std::pair<int, int>> matches;  // (track index, detection index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
};

// Two-stage IoU association. Stage 1 matches every track against detections
// with confidence >= high_conf_threshold; stage 2 matches the remaining tracks
// against detections in [low_conf_floor, high_conf_threshold) under the
// relaxed gate. Each stage solves min sum(1 - IoU) with the Hungarian method
// and rejects pairs below its IoU gate.
AssociationResult associate(const std::vector<BBox>& track_boxes, const std::vector<Detection>& dets,
                            const TrackerConfig& cfg);

struct TrackedDetection {
  long track_id = 0;
  Detection detection;
};

// Appearance-free multi-object tracker with camera-motion compensation.
//
// The optional per-frame MotionTransform T maps frame k-1 pixels to frame k
// pixels. Detections are compensated through T^-1 into the previous frame's
// coordinates for association and update; surviving tracks are then
// re-expressed in frame k through T.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {});

  // Frames must be strictly increasing; throws OutOfOrderFrame otherwise.
  // Returns the tracked detections in input order (unassigned ones omitted).
  std::vector<TrackedDetection> step(long frame, const std::vector<Detection>& dets,
                                     const std::optional<MotionTransform>& motion = std::nullopt);

  // Convenience overload that takes the frame index from the detections
  // (or continues from the last frame when the list is empty).
  std::vector<TrackedDetection> step(const std::vector<Detection>& dets,
                                     const std::optional<MotionTransform>& motion = std::nullopt);

  const std::vector<Track>& tracks() const noexcept { return tracks_; }
  Track* find(long id);
  long next_id() const noexcept { return next_id_; }
  const TrackerConfig& config() const noexcept { return cfg_; }

 private:
  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  long next_id_ = 1;
  std::optional<long> last_frame_;
};

}  // namespace pothole
