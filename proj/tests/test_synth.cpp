#include "support.hpp"

#include "pothole/dataset.hpp"
#include "pothole/error.hpp"
#include "pothole/mbtp.hpp"
#include "pothole/projection.hpp"
#include "pothole/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

using namespace pothole;
using namespace pothole::synth;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

bool same_bytes(const DepthMap& a, const DepthMap& b) {
  const auto x = a.values(), y = b.values();
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size_bytes()) == 0;
}

SceneSpec tilted_scene(double pitch) {
  SceneSpec s;
  s.surface.kind = SurfaceKind::TiltedPlane;
  s.surface.pitch_rad = pitch;
  s.surface.base_depth = 6.0;
  return s;
}

}  // namespace

TEST_CASE("fronto-parallel plane renders constant optical-axis depth") {
  SceneSpec s;
  s.surface.base_depth = 5.0;
  const auto pose = camera_pose(s, 0);
  const DepthMap d = render_depth(s, pose);
  const auto& in = s.intrinsics;
  CHECK(d.raw(static_cast<int>(in.pu), static_cast<int>(in.pv)) == 5.0f);
  for (int v = 0; v < d.height(); v += 17)
    for (int u = 0; u < d.width(); u += 13) REQUIRE(d.raw(u, v) == 5.0f);
  // Range along the ray is Z / cos(angle to the optical axis).
  const Point3 p = backproject(10, 20, d.raw(10, 20), in);
  const double xn = (10 - in.pu) / in.fu, yn = (20 - in.pv) / in.fv;
  const double cos_a = 1.0 / std::sqrt(1 + xn * xn + yn * yn);
  CHECK(std::sqrt(p.X * p.X + p.Y * p.Y + p.Z * p.Z) == Approx(5.0 / cos_a).epsilon(1e-12));
}

TEST_CASE("pothole ground truth") {
  SceneSpec s;
  s.potholes.push_back({0.0, 0.0, 0.3, 0.2, 0.05, 0});
  const auto r = render(s);
  REQUIRE(r.truth.potholes.size() == 1);
  CHECK(r.truth.potholes[0].planar_area_m2 == Approx(kPi * 0.06).epsilon(1e-15));
  CHECK(r.truth.potholes[0].surface_area_m2 > r.truth.potholes[0].planar_area_m2);
  REQUIRE(r.frames[0].gt.size() == 1);
  CHECK(r.frames[0].gt[0].distance_m == Approx(5.05).epsilon(1e-12));
}

TEST_CASE("rendering is deterministic for a fixed seed") {
  SceneSpec s = tilted_scene(0.2);
  s.frames = 4;
  s.potholes.push_back({0.1, 0.0, 0.25, 0.2, 0.04, 0});
  s.camera.velocity = {0.0, 0.02, 0.0};
  s.noise.box_jitter_px = 2.0;
  s.noise.conf_noise_std = 0.05;
  s.noise.depth_noise_rel = 0.01;
  s.noise.correspondence_noise_px = 0.5;
  s.noise.outlier_fraction = 0.1;
  s.seed = 99;
  const auto a = render(s), b = render(s);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    CHECK(same_bytes(a.frames[k].depth, b.frames[k].depth));
    REQUIRE(a.frames[k].detections.size() == b.frames[k].detections.size());
    for (std::size_t i = 0; i < a.frames[k].detections.size(); ++i) {
      CHECK(a.frames[k].detections[i].bbox == b.frames[k].detections[i].bbox);
      CHECK(a.frames[k].detections[i].confidence == b.frames[k].detections[i].confidence);
    }
    CHECK(a.frames[k].correspondences.size() == b.frames[k].correspondences.size());
  }
  s.seed = 100;
  const auto c = render(s);
  CHECK_FALSE(same_bytes(c.frames[1].depth, a.frames[1].depth));
}

TEST_CASE("fronto footprint matches the closed form") {
  SceneSpec s;
  s.surface.base_depth = 7.0;
  const auto pose = camera_pose(s, 0);
  const auto& in = s.intrinsics;
  const BBox box{100, 50, 200, 120};
  // Pixel grid spans columns 100..299 and rows 50..169: (cols-1)(rows-1) Z^2 / (fu fv).
  const double closed = 199.0 * 119.0 * 49.0 / (in.fu * in.fv);
  CHECK(analytic_rect_footprint_area(s, pose, box) == Approx(closed).epsilon(1e-9));
  const auto est = estimate_area(box, render_depth(s, pose), in, 0.9);
  CHECK(est.area_m2 == Approx(kEllipseFactor * closed).epsilon(1e-6));
}

TEST_CASE("tilted plane: surface area is footprint over cos(pitch)") {
  for (double pitch : {0.1, 0.35, 0.7}) {
    const SceneSpec s = tilted_scene(pitch);
    const auto pose = camera_pose(s, 0);
    const BBox box{220, 100, 150, 90};
    const double xy = analytic_rect_footprint_area(s, pose, box);
    const double surf = footprint_surface_area(s, pose, box);
    CHECK(std::abs(surf - xy / std::cos(pitch)) <= 1e-4 * surf);
  }
}

TEST_CASE("mbtp agrees with quadrature on undulating ground") {
  SceneSpec s;
  s.surface.kind = SurfaceKind::Undulating;
  s.surface.base_depth = 6.0;
  s.surface.pitch_rad = 0.3;
  s.surface.amplitude = 0.05;
  s.surface.wavelength = 1.5;
  const auto pose = camera_pose(s, 0);
  const DepthMap d = render_depth(s, pose);
  for (const BBox& box : {BBox{60, 40, 100, 80}, BBox{300, 150, 220, 160}, BBox{500, 250, 40, 30}}) {
    const double ref = kEllipseFactor * analytic_rect_footprint_area(s, pose, box);
    const double est = estimate_area(box, d, s.intrinsics, 0.9).area_m2;
    CHECK(test::rel_close(est, ref, 0.02));
  }
}

TEST_CASE("gt box contains the projected ellipse") {
  SceneSpec s = tilted_scene(0.4);
  s.potholes.push_back({-0.2, 0.1, 0.35, 0.15, 0.06, 0});
  s.camera.roll_rate = 0.05;
  s.frames = 3;
  const auto r = render(s);
  const auto& p = s.potholes[0];
  for (const auto& f : r.frames) {
    REQUIRE(f.gt.size() == 1);
    const BBox& b = f.gt[0].bbox;
    Eigen::Matrix2d rot;
    rot << std::cos(f.pose.roll), -std::sin(f.pose.roll), std::sin(f.pose.roll), std::cos(f.pose.roll);
    for (int k = 0; k < 20000; ++k) {
      const double phi = 2 * kPi * (k + 0.37) / 20000;
      const double x = p.cx + p.a * std::cos(phi), y = p.cy + p.b * std::sin(phi);
      const Eigen::Vector2d rel = rot.transpose() * (Eigen::Vector2d(x, y) - f.pose.position.head<2>());
      const double z = surface_height(s, x, y) - f.pose.position.z();
      const double u = s.intrinsics.fu * rel.x() / z + s.intrinsics.pu;
      const double v = s.intrinsics.fv * rel.y() / z + s.intrinsics.pv;
      REQUIRE(u >= b.x);
      REQUIRE(u <= b.right());
      REQUIRE(v >= b.y);
      REQUIRE(v <= b.bottom());
    }
  }
}

TEST_CASE("confidence model decreases with distance and is clamped") {
  NoiseSpec n;
  double prev = 1.0;
  for (double d = 0.0; d < 60.0; d += 0.5) {
    const double c = confidence_model(n, d, 0.0);
    CHECK(c <= prev);
    CHECK(c >= 0.05);
    CHECK(c <= 0.99);
    prev = c;
  }
  CHECK(confidence_model(n, 100.0, 0.0) == 0.05);
}

TEST_CASE("pothole outside the view is reported") {
  SceneSpec s;
  s.potholes.push_back({50.0, 0.0, 0.3, 0.2, 0.05, 0});
  try {
    render(s);
    FAIL("expected PotholeNeverVisible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PotholeNeverVisible);
  }
}

TEST_CASE("invalid scene specs are rejected") {
  SceneSpec s;
  s.frames = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  SceneSpec t;
  t.potholes.push_back({0, 0, -0.1, 0.2, 0.05, 0});
  CHECK_THROWS_AS(render(t), Error);
}

TEST_CASE("scene spec text round trip") {
  SceneSpec s = tilted_scene(0.25);
  s.surface.kind = SurfaceKind::Undulating;
  s.surface.amplitude = 0.03;
  s.potholes.push_back({0.1, -0.2, 0.4, 0.25, 0.07, 1});
  s.camera.velocity = {0.01, 0.03, -0.02};
  s.camera.jump_frame = 7;
  s.camera.jump = {0.2, -0.1};
  s.noise.box_jitter_px = 1.5;
  s.frames = 12;
  s.seed = 1234567;
  const SceneSpec r = parse_scene_spec(format_scene_spec(s));
  CHECK(format_scene_spec(r) == format_scene_spec(s));
  CHECK(r.surface.kind == SurfaceKind::Undulating);
  CHECK(r.potholes.size() == 1);
  CHECK(r.camera.jump.y() == -0.1);
  CHECK(r.seed == 1234567);
  CHECK_THROWS_AS(parse_scene_spec("{\"surface\": {\"kind\": \"bowl\"}}"), Error);
  CHECK_THROWS_AS(parse_scene_spec("not json"), Error);
}

TEST_CASE("confidence-coupled jitter scales the same draws by sqrt(c0 / c)") {
  SceneSpec s = tilted_scene(0.2);
  s.potholes.push_back({0.0, 0.0, 0.3, 0.2, 0.05, 0});
  s.frames = 5;
  s.seed = 21;
  s.noise.box_jitter_px = 2.0;
  s.noise.conf_noise_std = 0.2;
  const auto plain = render(s);
  s.noise.jitter_scales_with_confidence = true;
  const auto coupled = render(s);
  for (std::size_t k = 0; k < plain.frames.size(); ++k) {
    const auto& a = plain.frames[k].detections.at(0);
    const auto& b = coupled.frames[k].detections.at(0);
    const BBox& g = plain.frames[k].gt.at(0).bbox;
    CHECK(a.confidence == b.confidence);
    const double f = std::sqrt(s.noise.conf_c0 / a.confidence);
    CHECK(b.bbox.x - g.x == Approx((a.bbox.x - g.x) * f).epsilon(1e-9));
    CHECK(b.bbox.y - g.y == Approx((a.bbox.y - g.y) * f).epsilon(1e-9));
  }
}
