#include "support.hpp"

#include "pothole/dataset.hpp"
#include "pothole/error.hpp"
#include "pothole/io.hpp"
#include "pothole/pipeline.hpp"
#include "pothole/synth.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace pothole;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pothole_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

synth::SceneSpec moving_scene(std::uint64_t seed, bool noisy) {
  synth::SceneSpec s;
  s.surface.kind = synth::SurfaceKind::TiltedPlane;
  s.surface.pitch_rad = 0.3;
  s.surface.base_depth = 6.0;
  s.potholes.push_back({0.0, 0.1, 0.3, 0.2, 0.05, 0});
  s.potholes.push_back({-0.6, 0.3, 0.2, 0.15, 0.04, 0});
  s.camera.velocity = {0.005, 0.0, -0.03};
  s.frames = 20;
  s.seed = seed;
  if (noisy) {
    s.noise.box_jitter_px = 3.0;
    s.noise.conf_noise_std = 0.05;
    s.noise.correspondence_noise_px = 0.3;
  }
  return s;
}

std::vector<FrameInput> frames_from(const synth::RenderResult& r) {
  std::vector<FrameInput> out;
  for (const auto& f : r.frames) {
    FrameInput in;
    in.frame = f.frame;
    in.depth = f.depth;
    in.detections = f.detections;
    in.correspondences = f.correspondences;
    out.push_back(std::move(in));
  }
  return out;
}

std::string run_to_string(FrameSource& src, PipelineConfig cfg, std::vector<std::string>* log = nullptr) {
  std::string out;
  run_pipeline(
      src, cfg, [&](const FrameResultRecord& r) { out += format_record(r) + "\n"; },
      [&](const std::string& m) {
        if (log) log->push_back(m);
      });
  return out;
}

}  // namespace

TEST_CASE("pfm round trip and header errors") {
  std::vector<float> vals(5 * 3);
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = 0.5f + static_cast<float>(k);
  vals[4] = std::numeric_limits<float>::quiet_NaN();
  const DepthMap d(5, 3, vals);
  const DepthMap back = io::parse_pfm(io::write_pfm(d));
  REQUIRE(back.width() == 5);
  REQUIRE(back.height() == 3);
  for (int v = 0; v < 3; ++v)
    for (int u = 0; u < 5; ++u) {
      if (u == 4 && v == 0) {
        CHECK(std::isnan(back.raw(u, v)));
      } else {
        CHECK(back.raw(u, v) == d.raw(u, v));
      }
    }

  CHECK(code_of([] { io::parse_pfm("PF\n1 1\n-1\n\0\0\0\0"); }) == ErrorCode::BadMagic);
  CHECK(code_of([] { io::parse_pfm(std::string("Pf\n2 2\n-1\n") + std::string(12, '\0')); }) ==
        ErrorCode::TruncatedPayload);
  CHECK(code_of([] { io::parse_pfm(std::string("Pf\n2 2\n-1\n") + std::string(20, '\0')); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("hand-built little-endian pfm is read bottom-up") {
  // 2x2 image, file rows bottom to top: [1 2] is the bottom row.
  std::string bytes = "Pf\n2 2\n-1.0\n";
  for (float f : {1.0f, 2.0f, 3.0f, 4.0f}) {
    unsigned char le[4];
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int i = 0; i < 4; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
    bytes.append(reinterpret_cast<const char*>(le), 4);
  }
  const DepthMap d = io::parse_pfm(bytes);
  CHECK(d.raw(0, 0) == 3.0f);
  CHECK(d.raw(1, 0) == 4.0f);
  CHECK(d.raw(0, 1) == 1.0f);
  CHECK(d.raw(1, 1) == 2.0f);
}

TEST_CASE("detection parsing") {
  CHECK(io::parse_detections("").empty());
  CHECK(io::parse_detections("\n  \n").empty());

  Detection a{{1, 2, 3, 4}, 0.9, 0, 0}, b{{5, 6, 7, 8}, 0.5, 1, 0}, c{{9, 9, 9, 9}, 0.1, 0, 3};
  const std::string text = io::format_detection(a) + "\n" + io::format_detection(b) + "\n\n" + io::format_detection(c);
  const auto m = io::parse_detections(text);
  REQUIRE(m.size() == 2);
  CHECK(m.at(0).size() == 2);
  CHECK(m.at(3).size() == 1);
  CHECK(m.at(0)[1].bbox == BBox{5, 6, 7, 8});
  CHECK(m.at(0)[1].class_id == 1);

  const std::string bad = io::format_detection(a) + "\n" +
                          R"({"frame":1,"class_id":0,"x":0,"y":0,"w":1,"h":1,"confidence":1.7})";
  try {
    io::parse_detections(bad);
    FAIL("expected MalformedLine");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedLine);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(code_of([] { io::parse_detections("{\"frame\": 1}"); }) == ErrorCode::MalformedLine);
}

TEST_CASE("manifest parsing") {
  const std::string text = R"({"format_version": 1, "dataset": "x", "fps": 30,
    "intrinsics": {"fu": 600, "fv": 610, "pu": 320, "pv": 180, "width": 640, "height": 360},
    "detections": "dets.jsonl",
    "frames": [{"frame": 0, "depth": "d0.pfm"},
               {"frame": 2, "depth": "d2.pfm", "motion": [[1,0,3],[0,1,-2],[0,0,1]]}]})";
  const auto m = io::parse_manifest(text, "/data");
  CHECK(m.intrinsics.fv == 610);
  CHECK(m.frames.size() == 2);
  CHECK(m.resolve(m.frames[1].depth) == fs::path("/data/d2.pfm"));
  REQUIRE(m.frames[1].motion.has_value());
  CHECK(m.frames[1].motion->m(0, 2) == 3.0);
  CHECK_NOTHROW(m.validate(false));
  CHECK(code_of([&] { m.validate(true); }) == ErrorCode::Io);

  auto out_of_order = m;
  std::swap(out_of_order.frames[0], out_of_order.frames[1]);
  CHECK(code_of([&] { out_of_order.validate(false); }) == ErrorCode::OutOfOrderFrame);

  const auto again = io::parse_manifest(io::format_manifest(m), "/data");
  CHECK(again.frames.size() == 2);
  CHECK(again.frames[1].motion->m(1, 2) == -2.0);
  CHECK(code_of([] { io::parse_manifest("{}", "."); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("result records round trip") {
  FrameResultRecord r;
  r.frame = 4;
  r.track_id = 2;
  r.bbox = {1.5, 2.5, 30, 40};
  r.confidence = 0.8;
  r.distance_m = 6.25;
  r.area_raw_m2 = 0.2;
  r.area_smoothed_m2 = 0.19;
  r.nis = 0.5;
  r.valid_patch_fraction = 1.0;
  const auto back = parse_results(format_record(r) + "\n");
  REQUIRE(back.size() == 1);
  CHECK(format_record(back[0]) == format_record(r));
  CHECK(code_of([] { parse_results("{\"frame\": 1}\n"); }) == ErrorCode::MalformedLine);
}

TEST_CASE("pipeline on empty detections emits nothing") {
  std::vector<FrameInput> frames(3);
  for (long k = 0; k < 3; ++k) {
    frames[k].frame = k;
    frames[k].depth = DepthMap(64, 48, 5.0f);
  }
  MemorySource src(test::intrinsics(100, 64, 48), frames);
  std::vector<FrameResultRecord> out;
  const auto summary = run_pipeline(src, {}, [&](const FrameResultRecord& r) { out.push_back(r); });
  CHECK(out.empty());
  CHECK(summary.frames == 3);
  CHECK(summary.records == 0);
}

TEST_CASE("pipeline output is deterministic and independent of threading") {
  const auto r = synth::render(moving_scene(5, true));
  const auto intr = moving_scene(5, true).intrinsics;
  PipelineConfig cfg;
  cfg.seed = 17;
  MemorySource a(intr, frames_from(r)), b(intr, frames_from(r));
  const std::string serial = run_to_string(a, cfg);
  const std::string serial2 = run_to_string(b, cfg);
  CHECK(serial == serial2);
  CHECK(!serial.empty());
  cfg.parallel = true;
  for (std::size_t depth : {1u, 2u, 8u}) {
    cfg.queue_depth = depth;
    MemorySource c(intr, frames_from(r));
    CHECK(run_to_string(c, cfg) == serial);
  }
}

TEST_CASE("noiseless sequence converges to the true footprint") {
  auto spec = moving_scene(1, false);
  spec.camera.velocity.setZero();  // constant reference, so filter lag cannot bias the check
  const auto r = synth::render(spec);
  MemorySource src(spec.intrinsics, frames_from(r));
  std::vector<FrameResultRecord> out;
  run_pipeline(src, {}, [&](const FrameResultRecord& rec) { out.push_back(rec); });
  int checked = 0;
  for (const auto& rec : out) {
    if (rec.frame < 10) continue;
    const auto& f = r.frames[static_cast<std::size_t>(rec.frame)];
    // Reference: quadrature over the box the detector reported on this frame.
    for (const auto& d : f.detections) {
      if (iou(d.bbox, rec.bbox) < 0.99) continue;
      const double truth = kEllipseFactor * synth::analytic_rect_footprint_area(spec, f.pose, d.bbox);
      INFO("frame " << rec.frame << " smoothed " << rec.area_smoothed_m2 << " raw " << rec.area_raw_m2 << " truth " << truth);
      CHECK(test::rel_close(rec.area_smoothed_m2, truth, 0.03));
      ++checked;
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("pipeline logs skipped detections") {
  std::vector<FrameInput> frames(2);
  DepthMap holes(64, 48, std::numeric_limits<float>::quiet_NaN());
  for (long k = 0; k < 2; ++k) {
    frames[k].frame = k;
    frames[k].depth = holes;
    frames[k].detections = {Detection{{10, 10, 20, 20}, 0.9, 0, k}};
  }
  MemorySource src(test::intrinsics(100, 64, 48), frames);
  std::vector<std::string> log;
  PipelineConfig cfg;
  const std::string out = run_to_string(src, cfg, &log);
  CHECK(out.empty());
  REQUIRE(!log.empty());
  CHECK(log[0].find("skipped") != std::string::npos);
}

TEST_CASE("dataset directory round trip and manifest errors") {
  const fs::path dir = scratch_dir("dataset");
  const auto spec = moving_scene(2, true);
  const fs::path manifest = synth::write_dataset(spec, dir, {});
  CHECK(fs::exists(dir / "gt.jsonl"));
  CHECK(fs::exists(dir / "truth.json"));

  ManifestSource src(io::load_manifest(manifest));
  const auto r = synth::render(spec);
  MemorySource mem(spec.intrinsics, frames_from(r));
  PipelineConfig cfg;
  CHECK(run_to_string(src, cfg) == run_to_string(mem, cfg));

  ManifestSource broken(io::load_manifest(manifest));
  io::write_file(dir / "depth" / "000003.pfm", "P5\n");
  try {
    run_to_string(broken, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadMagic);
    CHECK(std::string(e.what()).find("frame 3") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("ablation rows are ordered and combined noise helps") {
  const auto spec = moving_scene(8, true);
  const auto r = synth::render(spec);
  PipelineConfig cfg;
  const auto rows = run_ablation([&] { return std::make_unique<MemorySource>(spec.intrinsics, frames_from(r)); }, cfg);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].name == "corner_point");
  CHECK(rows[1].name == "mbtp");
  CHECK(rows[4].name == "mbtp+cdkf_combined");
  CHECK(rows[4].report.afd < rows[1].report.afd);
}
