#pragma once

// Synthetic road scenes with analytic ground truth.
//
// The road is a height field Z = S(X, Y) in a world frame that coincides with
// the camera frame of a camera at the origin with no roll. Potholes are
// smooth cosine-profile depressions (Z grows inside the ellipse). Depth maps
// are rendered by exact per-pixel ray casting through the pinhole model.

#include "pothole/geometry.hpp"
#include "pothole/motion.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace pothole::synth {

enum class SurfaceKind { FrontoParallel, TiltedPlane, Undulating };

struct SurfaceSpec {
  SurfaceKind kind = SurfaceKind::FrontoParallel;
  double base_depth = 5.0;   // Z at (X, Y) = (0, 0), meters
  double pitch_rad = 0.0;    // Z = base - Y tan(pitch) for tilted/undulating
  double amplitude = 0.0;    // undulation amplitude, meters
  double wavelength = 1.0;   // undulation wavelength, meters
};

struct PotholeSpec {
  double cx = 0.0;  // world X of the center, meters
  double cy = 0.0;  // world Y of the center, meters
  double a = 0.3;   // semi-axis along X, meters
  double b = 0.2;   // semi-axis along Y, meters
  double depth = 0.05;
  int class_id = 0;
};

struct CameraPath {
  Eigen::Vector3d start = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // meters per frame
  double roll_rate = 0.0;                              // radians per frame
  double shake_translation_std = 0.0;                  // meters
  double shake_roll_std = 0.0;                         // radians
  // Optional one-off lateral jump (meters, world X/Y) applied from `jump_frame` on.
  long jump_frame = -1;
  Eigen::Vector2d jump = Eigen::Vector2d::Zero();
};

struct NoiseSpec {
  double box_jitter_px = 0.0;
  // When set, a detection's jitter std is box_jitter_px * sqrt(conf_c0 / c):
  // less confident detections get noisier boxes.
  bool jitter_scales_with_confidence = false;
  double conf_c0 = 0.95;
  double conf_k = 0.02;        // per meter
  double conf_noise_std = 0.0;
  double depth_noise_rel = 0.0;
  int correspondences = 200;
  double correspondence_noise_px = 0.0;
  double outlier_fraction = 0.0;
};

struct SceneSpec {
  CameraIntrinsics intrinsics{600.0, 600.0, 320.0, 180.0, 640, 360};
  SurfaceSpec surface;
  std::vector<PotholeSpec> potholes;
  CameraPath camera;
  NoiseSpec noise;
  long frames = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double roll = 0.0;  // rotation about the optical axis, camera to world
};

struct GtBox {
  long pothole_id = 0;  // 1-based index into SceneSpec::potholes
  int class_id = 0;
  BBox bbox;
  double distance_m = 0.0;
};

struct RenderedFrame {
  long frame = 0;
  CameraPose pose;
  DepthMap depth;
  std::vector<Detection> detections;  // aligned with `gt`
  std::vector<GtBox> gt;
  std::vector<Correspondence> correspondences;  // frame-1 -> frame, empty on frame 0
  std::optional<MotionTransform> true_motion;
};

struct PotholeTruth {
  long pothole_id = 0;
  double planar_area_m2 = 0.0;   // pi a b
  double surface_area_m2 = 0.0;  // integrated over the (depressed) surface
};

struct GroundTruth {
  std::vector<PotholeTruth> potholes;
};

struct RenderResult {
  std::vector<RenderedFrame> frames;
  GroundTruth truth;
};

// Surface height and gradient at world (X, Y), potholes included.
double surface_height(const SceneSpec& spec, double x, double y);
Eigen::Vector2d surface_gradient(const SceneSpec& spec, double x, double y);

CameraPose camera_pose(const SceneSpec& spec, long frame);

// Camera-frame depth of the surface along the ray through continuous pixel
// (u, v); nullopt when the ray misses.
std::optional<double> ray_depth(const SceneSpec& spec, const CameraPose& pose, double u, double v);

DepthMap render_depth(const SceneSpec& spec, const CameraPose& pose);

// Deterministic for a given spec. Throws PotholeNeverVisible when a listed
// pothole is never fully inside the image.
RenderResult render(const SceneSpec& spec);

// Camera-frame XY-projected area of the surface seen through the box's pixel
// grid (grid points u0..u0+cols-1, v0..v0+rows-1): the quantity the MBTP patch
// sum estimates before the pi/4 factor. Adaptive Gauss-Kronrod quadrature.
double analytic_rect_footprint_area(const SceneSpec& spec, const CameraPose& pose, const BBox& box,
                                    double rel_tol = 1e-6);

// True 3D area of the same surface region.
double footprint_surface_area(const SceneSpec& spec, const CameraPose& pose, const BBox& box,
                              double rel_tol = 1e-6);

// Confidence model: clamp(c0 - k d + noise, 0.05, 0.99).
double confidence_model(const NoiseSpec& noise, double distance_m, double gaussian_draw) noexcept;

}  // namespace pothole::synth
