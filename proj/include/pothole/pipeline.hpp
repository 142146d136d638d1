#pragma once

// End-to-end sequence processing:
//   load depth + detections -> motion estimate -> track -> area per tracked
//   detection -> per-track CDKF -> result records.
//
// Area estimation is stateless and may run ahead of tracking on a worker
// thread (parallel mode); tracking and smoothing always run in frame order,
// so serial and parallel runs emit identical records.

#include "pothole/area_metrics.hpp"
#include "pothole/bayes_opt.hpp"
#include "pothole/cdkf.hpp"
#include "pothole/io.hpp"
#include "pothole/mbtp.hpp"
#include "pothole/tracker.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pothole {

enum class AreaMethod { Mbtp, CornerPoint };

struct PipelineConfig {
  TrackerConfig tracker;
  cdkf::CdkfConfig cdkf;
  bool smoothing = true;
  AreaMethod method = AreaMethod::Mbtp;
  double min_valid_patch_fraction = 0.5;
  bool parallel = false;
  std::size_t queue_depth = 4;
  std::uint64_t seed = 0;  // RANSAC seed base
  RansacOptions ransac;
};

struct FrameResultRecord {
  long frame = 0;
  long track_id = 0;
  int class_id = 0;
  BBox bbox;
  double confidence = 0.0;
  double distance_m = 0.0;
  double area_raw_m2 = 0.0;
  double area_smoothed_m2 = 0.0;
  std::optional<double> nis;
  double valid_patch_fraction = 0.0;
};

std::string format_record(const FrameResultRecord& r);
// Throws MalformedLine naming the line.
std::vector<FrameResultRecord> parse_results(std::string_view text);

struct FrameInput {
  long frame = 0;
  DepthMap depth;
  std::vector<Detection> detections;
  std::optional<MotionTransform> motion;
  std::vector<Correspondence> correspondences;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual const CameraIntrinsics& intrinsics() const = 0;
  // nullopt at the end of the sequence.
  virtual std::optional<FrameInput> next() = 0;
};

// Loads frames lazily from a manifest. Errors carry the frame index.
class ManifestSource final : public FrameSource {
 public:
  explicit ManifestSource(io::SequenceManifest manifest);
  const CameraIntrinsics& intrinsics() const override { return manifest_.intrinsics; }
  std::optional<FrameInput> next() override;

 private:
  io::SequenceManifest manifest_;
  std::map<long, std::vector<Detection>> shared_dets_;
  std::size_t cursor_ = 0;
};

class MemorySource final : public FrameSource {
 public:
  MemorySource(CameraIntrinsics intr, std::vector<FrameInput> frames);
  const CameraIntrinsics& intrinsics() const override { return intr_; }
  std::optional<FrameInput> next() override;

 private:
  CameraIntrinsics intr_;
  std::vector<FrameInput> frames_;
  std::size_t cursor_ = 0;
};

// One area measurement of a tracked detection, before smoothing.
struct Measurement {
  long frame = 0;
  double area_m2 = 0.0;
  double confidence = 0.0;
  double distance_m = 0.0;
};

struct TrackMeasurements {
  long track_id = 0;
  int class_id = 0;
  std::vector<Measurement> measurements;
};

struct PipelineSummary {
  long frames = 0;
  long records = 0;
  long skipped_detections = 0;
  std::vector<TrackMeasurements> tracks;  // ordered by track id
};

using RecordSink = std::function<void(const FrameResultRecord&)>;
using LogSink = std::function<void(const std::string&)>;

PipelineSummary run_pipeline(FrameSource& source, const PipelineConfig& cfg, const RecordSink& sink,
                             const LogSink& log = {});

// Per-track area series of pothole-class records (smoothed or raw field).
std::vector<metrics::TrackSeries> series_from_records(const std::vector<FrameResultRecord>& records, bool smoothed);

// Re-runs CDKF over cached raw measurements (pothole tracks only).
std::vector<metrics::TrackSeries> smooth_tracks(const std::vector<TrackMeasurements>& tracks,
                                                const cdkf::CdkfConfig& cfg);
std::vector<metrics::TrackSeries> raw_tracks(const std::vector<TrackMeasurements>& tracks);

// Tunes (lambda, theta) of `base` for objective J over the cached measurements.
bayesopt::OptResult optimize_noise_weights(const std::vector<TrackMeasurements>& tracks,
                                           const cdkf::CdkfConfig& base, const bayesopt::SearchSpec& spec,
                                           long min_track_len = 5);

struct AblationRow {
  std::string name;
  metrics::AreaConsistencyReport report;
};

// Corner-point baseline, raw MBTP, then MBTP + CDKF with confidence-only,
// distance-only and combined noise, all with the weights in `cfg.cdkf`.
std::vector<AblationRow> run_ablation(const std::function<std::unique_ptr<FrameSource>()>& make_source,
                                      const PipelineConfig& cfg, long min_track_len = 5);

}  // namespace pothole
