#include "pothole/pipeline.hpp"

#include "pothole/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <variant>

namespace pothole {

using nlohmann::json;

std::string format_record(const FrameResultRecord& r) {
  json j;
  j["format_version"] = io::kFormatVersion;
  j["frame"] = r.frame;
  j["track_id"] = r.track_id;
  j["class_id"] = r.class_id;
  j["bbox"] = {r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h};
  j["confidence"] = r.confidence;
  j["distance_m"] = r.distance_m;
  j["area_raw_m2"] = r.area_raw_m2;
  j["area_smoothed_m2"] = r.area_smoothed_m2;
  j["nis"] = r.nis ? json(*r.nis) : json(nullptr);
  j["valid_patch_fraction"] = r.valid_patch_fraction;
  return j.dump();
}

std::vector<FrameResultRecord> parse_results(std::string_view text) {
  std::vector<FrameResultRecord> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      if (j.value("format_version", io::kFormatVersion) != io::kFormatVersion) {
        throw std::runtime_error("unsupported format_version");
      }
      FrameResultRecord r;
      r.frame = j.at("frame").get<long>();
      r.track_id = j.at("track_id").get<long>();
      r.class_id = j.at("class_id").get<int>();
      const auto b = j.at("bbox").get<std::vector<double>>();
      if (b.size() != 4) throw std::runtime_error("bbox needs 4 values");
      r.bbox = {b[0], b[1], b[2], b[3]};
      r.confidence = j.at("confidence").get<double>();
      r.distance_m = j.at("distance_m").get<double>();
      r.area_raw_m2 = j.at("area_raw_m2").get<double>();
      r.area_smoothed_m2 = j.at("area_smoothed_m2").get<double>();
      if (j.contains("nis") && !j.at("nis").is_null()) r.nis = j.at("nis").get<double>();
      r.valid_patch_fraction = j.at("valid_patch_fraction").get<double>();
      out.push_back(r);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sources

ManifestSource::ManifestSource(io::SequenceManifest manifest) : manifest_(std::move(manifest)) {
  manifest_.validate(true);
  if (manifest_.detections) shared_dets_ = io::parse_detections(io::read_file(manifest_.resolve(*manifest_.detections)));
}

std::optional<FrameInput> ManifestSource::next() {
  if (cursor_ >= manifest_.frames.size()) return std::nullopt;
  const io::ManifestFrame& mf = manifest_.frames[cursor_++];
  try {
    FrameInput f;
    f.frame = mf.frame;
    f.depth = io::parse_pfm(io::read_file(manifest_.resolve(mf.depth)));
    if (f.depth.width() != manifest_.intrinsics.width || f.depth.height() != manifest_.intrinsics.height) {
      throw Error(ErrorCode::DimensionMismatch, "depth map size differs from the camera image size");
    }
    if (mf.detections) {
      auto per_frame = io::parse_detections(io::read_file(manifest_.resolve(*mf.detections)));
      if (auto it = per_frame.find(mf.frame); it != per_frame.end()) f.detections = std::move(it->second);
    } else if (auto it = shared_dets_.find(mf.frame); it != shared_dets_.end()) {
      f.detections = it->second;
    }
    f.motion = mf.motion;
    if (mf.correspondences) {
      f.correspondences = io::parse_correspondences(io::read_file(manifest_.resolve(*mf.correspondences)));
    }
    return f;
  } catch (const Error& e) {
    throw Error(e.code(), "frame " + std::to_string(mf.frame) + ": " + e.what());
  }
}

MemorySource::MemorySource(CameraIntrinsics intr, std::vector<FrameInput> frames)
    : intr_(intr), frames_(std::move(frames)) {}

std::optional<FrameInput> MemorySource::next() {
  if (cursor_ >= frames_.size()) return std::nullopt;
  return frames_[cursor_++];
}

// ---------------------------------------------------------------------------
// Processing

namespace {

struct PreparedDetection {
  std::optional<AreaEstimate> estimate;
  std::string error;
};

struct PreparedFrame {
  FrameInput input;
  std::optional<MotionTransform> motion;
  std::vector<PreparedDetection> areas;
  std::string motion_note;
};

std::uint64_t mix_seed(std::uint64_t seed, long frame) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(frame) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

PreparedFrame prepare(FrameInput in, const CameraIntrinsics& intr, const PipelineConfig& cfg) {
  PreparedFrame p;
  if (in.motion) {
    p.motion = in.motion;
  } else if (in.correspondences.size() >= 3) {
    p.motion = fit_motion_ransac(in.correspondences, mix_seed(cfg.seed, in.frame), cfg.ransac);
  } else if (!in.correspondences.empty()) {
    p.motion_note = "fewer than 3 correspondences, motion compensation skipped";
  }
  p.areas.reserve(in.detections.size());
  for (auto& d : in.detections) d.frame = in.frame;
  for (const auto& d : in.detections) {
    PreparedDetection pd;
    try {
      pd.estimate = cfg.method == AreaMethod::Mbtp
                        ? estimate_area(d.bbox, in.depth, intr, d.confidence, in.frame)
                        : estimate_area_corner_point(d.bbox, in.depth, intr, d.confidence, in.frame);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoValidDepth && e.code() != ErrorCode::EmptyRegion) throw;
      pd.error = e.what();
    }
    p.areas.push_back(std::move(pd));
  }
  p.input = std::move(in);
  return p;
}

// Bounded single-producer queue for the parallel mode.
class FrameQueue {
 public:
  explicit FrameQueue(std::size_t cap) : cap_(std::max<std::size_t>(cap, 1)) {}

  using Item = std::variant<PreparedFrame, std::exception_ptr, std::monostate>;

  void push(Item item) {
    std::unique_lock lk(mu_);
    not_full_.wait(lk, [&] { return q_.size() < cap_ || cancelled_; });
    if (cancelled_) return;
    q_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  Item pop() {
    std::unique_lock lk(mu_);
    not_empty_.wait(lk, [&] { return !q_.empty(); });
    Item item = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void cancel() {
    std::lock_guard lk(mu_);
    cancelled_ = true;
    not_full_.notify_all();
  }

  bool cancelled() {
    std::lock_guard lk(mu_);
    return cancelled_;
  }

 private:
  std::size_t cap_;
  std::deque<Item> q_;
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  bool cancelled_ = false;
};

class Consumer {
 public:
  Consumer(const PipelineConfig& cfg, const RecordSink& sink, const LogSink& log)
      : cfg_(cfg), tracker_(cfg.tracker), sink_(sink), log_(log) {
    cfg_.cdkf.validate();
  }

  void consume(const PreparedFrame& p) {
    const FrameInput& in = p.input;
    ++summary_.frames;
    if (!p.motion_note.empty()) note("frame " + std::to_string(in.frame) + ": " + p.motion_note);
    const auto tracked = tracker_.step(in.frame, in.detections, p.motion);

    // Tracked detections keep the input order of `in.detections`.
    std::size_t cursor = 0;
    for (const auto& td : tracked) {
      while (cursor < in.detections.size() && !same(in.detections[cursor], td.detection)) ++cursor;
      const PreparedDetection& pd = p.areas[cursor];
      ++cursor;
      if (!pd.estimate) {
        ++summary_.skipped_detections;
        note("frame " + std::to_string(in.frame) + " track " + std::to_string(td.track_id) + ": skipped, " + pd.error);
        continue;
      }
      const AreaEstimate& est = *pd.estimate;
      if (cfg_.method == AreaMethod::Mbtp && est.valid_patch_fraction() < cfg_.min_valid_patch_fraction) {
        ++summary_.skipped_detections;
        note("frame " + std::to_string(in.frame) + " track " + std::to_string(td.track_id) +
             ": skipped, valid patch fraction " + std::to_string(est.valid_patch_fraction()));
        continue;
      }
      if (!(td.detection.confidence > 0.0)) {
        ++summary_.skipped_detections;
        note("frame " + std::to_string(in.frame) + " track " + std::to_string(td.track_id) + ": skipped, zero confidence");
        continue;
      }

      FrameResultRecord r;
      r.frame = in.frame;
      r.track_id = td.track_id;
      r.class_id = td.detection.class_id;
      r.bbox = td.detection.bbox;
      r.confidence = td.detection.confidence;
      r.distance_m = est.distance_m;
      r.area_raw_m2 = est.area_m2;
      r.area_smoothed_m2 = est.area_m2;
      r.valid_patch_fraction = est.valid_patch_fraction();
      if (cfg_.smoothing) {
        auto [it, inserted] = filters_.try_emplace(td.track_id, cfg_.cdkf);
        const auto& state = it->second.observe(est.area_m2, r.confidence, r.distance_m, in.frame);
        r.area_smoothed_m2 = state.A;
        r.nis = state.last_nis;
        if (Track* t = tracker_.find(td.track_id)) t->cdkf = state;
      }

      auto& tm = measurements_[td.track_id];
      tm.track_id = td.track_id;
      tm.class_id = r.class_id;
      tm.measurements.push_back({in.frame, est.area_m2, r.confidence, r.distance_m});

      ++summary_.records;
      if (sink_) sink_(r);
    }
  }

  PipelineSummary finish() {
    for (auto& [id, tm] : measurements_) summary_.tracks.push_back(std::move(tm));
    return std::move(summary_);
  }

 private:
  static bool same(const Detection& a, const Detection& b) {
    return a.bbox == b.bbox && a.confidence == b.confidence && a.class_id == b.class_id;
  }
  void note(const std::string& msg) {
    if (log_) log_(msg);
  }

  PipelineConfig cfg_;
  Tracker tracker_;
  const RecordSink& sink_;
  const LogSink& log_;
  std::map<long, cdkf::AreaFilter> filters_;
  std::map<long, TrackMeasurements> measurements_;
  PipelineSummary summary_;
};

}  // namespace

PipelineSummary run_pipeline(FrameSource& source, const PipelineConfig& cfg, const RecordSink& sink,
                             const LogSink& log) {
  const CameraIntrinsics intr = source.intrinsics();
  intr.validate();
  Consumer consumer(cfg, sink, log);

  if (!cfg.parallel) {
    while (auto in = source.next()) consumer.consume(prepare(std::move(*in), intr, cfg));
    return consumer.finish();
  }

  FrameQueue queue(cfg.queue_depth);
  std::thread producer([&] {
    try {
      while (!queue.cancelled()) {
        auto in = source.next();
        if (!in) break;
        queue.push(prepare(std::move(*in), intr, cfg));
      }
      queue.push(std::monostate{});
    } catch (...) {
      queue.push(std::current_exception());
    }
  });
  try {
    for (;;) {
      auto item = queue.pop();
      if (std::holds_alternative<std::monostate>(item)) break;
      if (auto* err = std::get_if<std::exception_ptr>(&item)) std::rethrow_exception(*err);
      consumer.consume(std::get<PreparedFrame>(item));
    }
  } catch (...) {
    queue.cancel();
    producer.join();
    throw;
  }
  producer.join();
  return consumer.finish();
}

// ---------------------------------------------------------------------------
// Evaluation helpers

std::vector<metrics::TrackSeries> series_from_records(const std::vector<FrameResultRecord>& records, bool smoothed) {
  std::map<long, metrics::TrackSeries> by_track;
  for (const auto& r : records) {
    if (r.class_id != static_cast<int>(ObjectClass::Pothole)) continue;
    auto& s = by_track[r.track_id];
    s.track_id = r.track_id;
    s.areas.push_back(smoothed ? r.area_smoothed_m2 : r.area_raw_m2);
    if (smoothed && r.nis) s.nis.push_back(*r.nis);
  }
  std::vector<metrics::TrackSeries> out;
  for (auto& [id, s] : by_track) out.push_back(std::move(s));
  return out;
}

std::vector<metrics::TrackSeries> smooth_tracks(const std::vector<TrackMeasurements>& tracks,
                                                const cdkf::CdkfConfig& cfg) {
  std::vector<metrics::TrackSeries> out;
  for (const auto& t : tracks) {
    if (t.class_id != static_cast<int>(ObjectClass::Pothole)) continue;
    cdkf::AreaFilter filter(cfg);
    metrics::TrackSeries s;
    s.track_id = t.track_id;
    for (const auto& m : t.measurements) {
      const auto& st = filter.observe(m.area_m2, m.confidence, m.distance_m, m.frame);
      s.areas.push_back(st.A);
      if (st.last_nis) s.nis.push_back(*st.last_nis);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<metrics::TrackSeries> raw_tracks(const std::vector<TrackMeasurements>& tracks) {
  std::vector<metrics::TrackSeries> out;
  for (const auto& t : tracks) {
    if (t.class_id != static_cast<int>(ObjectClass::Pothole)) continue;
    metrics::TrackSeries s;
    s.track_id = t.track_id;
    for (const auto& m : t.measurements) s.areas.push_back(m.area_m2);
    out.push_back(std::move(s));
  }
  return out;
}

bayesopt::OptResult optimize_noise_weights(const std::vector<TrackMeasurements>& tracks,
                                           const cdkf::CdkfConfig& base, const bayesopt::SearchSpec& spec,
                                           long min_track_len) {
  if (spec.bounds.size() != 2) throw Error(ErrorCode::InvalidArgument, "noise weight search is two-dimensional");
  auto objective = [&](const Eigen::VectorXd& p) {
    cdkf::CdkfConfig cfg = base;
    cfg.lambda = p(0);
    cfg.theta = p(1);
    const auto rep = metrics::evaluate_area_consistency(smooth_tracks(tracks, cfg), min_track_len);
    if (rep.track_count == 0) throw Error(ErrorCode::EmptySeries, "no track long enough to score");
    return rep.objective();
  };
  return bayesopt::optimize(objective, spec);
}

std::vector<AblationRow> run_ablation(const std::function<std::unique_ptr<FrameSource>()>& make_source,
                                      const PipelineConfig& cfg, long min_track_len) {
  std::vector<AblationRow> rows;
  PipelineConfig raw = cfg;
  raw.smoothing = false;

  raw.method = AreaMethod::CornerPoint;
  auto src_cp = make_source();
  const auto cp = run_pipeline(*src_cp, raw, {});
  rows.push_back({"corner_point", metrics::evaluate_area_consistency(raw_tracks(cp.tracks), min_track_len)});

  raw.method = AreaMethod::Mbtp;
  auto src_mbtp = make_source();
  const auto mbtp = run_pipeline(*src_mbtp, raw, {});
  rows.push_back({"mbtp", metrics::evaluate_area_consistency(raw_tracks(mbtp.tracks), min_track_len)});

  for (auto mode : {cdkf::NoiseMode::ConfidenceOnly, cdkf::NoiseMode::DistanceOnly, cdkf::NoiseMode::Combined}) {
    cdkf::CdkfConfig c = cfg.cdkf;
    c.mode = mode;
    rows.push_back({"mbtp+cdkf_" + std::string(cdkf::to_string(mode)),
                    metrics::evaluate_area_consistency(smooth_tracks(mbtp.tracks, c), min_track_len)});
  }
  return rows;
}

}  // namespace pothole
