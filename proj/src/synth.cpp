#include "pothole/synth.hpp"

#include "pothole/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace pothole::synth {

namespace {

constexpr double kPi = std::numbers::pi;

std::mt19937_64 frame_rng(std::uint64_t seed, long frame, std::uint64_t stream) {
  // Independent stream per (frame, purpose) so frames can be rendered in any order.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Eigen::Matrix2d roll_matrix(double roll) {
  Eigen::Matrix2d r;
  r << std::cos(roll), -std::sin(roll), std::sin(roll), std::cos(roll);
  return r;
}

double base_height(const SurfaceSpec& s, double x, double y) {
  switch (s.kind) {
    case SurfaceKind::FrontoParallel: return s.base_depth;
    case SurfaceKind::TiltedPlane: return s.base_depth - y * std::tan(s.pitch_rad);
    case SurfaceKind::Undulating:
      return s.base_depth - y * std::tan(s.pitch_rad) +
             s.amplitude * std::sin(2.0 * kPi * x / s.wavelength) * std::cos(2.0 * kPi * y / s.wavelength);
  }
  return s.base_depth;
}

Eigen::Vector2d base_gradient(const SurfaceSpec& s, double x, double y) {
  switch (s.kind) {
    case SurfaceKind::FrontoParallel: return Eigen::Vector2d::Zero();
    case SurfaceKind::TiltedPlane: return {0.0, -std::tan(s.pitch_rad)};
    case SurfaceKind::Undulating: {
      const double k = 2.0 * kPi / s.wavelength;
      return {s.amplitude * k * std::cos(k * x) * std::cos(k * y),
              -std::tan(s.pitch_rad) - s.amplitude * k * std::sin(k * x) * std::sin(k * y)};
    }
  }
  return Eigen::Vector2d::Zero();
}

double pothole_rho(const PotholeSpec& p, double x, double y) {
  const double dx = (x - p.cx) / p.a;
  const double dy = (y - p.cy) / p.b;
  return std::sqrt(dx * dx + dy * dy);
}

double camera_depth_of(const CameraPose& pose, const Eigen::Vector3d& world, Eigen::Vector2d* xy_cam) {
  const Eigen::Vector2d rel = roll_matrix(pose.roll).transpose() * (world.head<2>() - pose.position.head<2>());
  if (xy_cam) *xy_cam = rel;
  return world.z() - pose.position.z();
}

template <class F>
double integrate(F f, double a, double b, double rel_tol) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 12, rel_tol);
}

template <class Weight>
double footprint_integral(const SceneSpec& spec, const CameraPose& pose, const BBox& box, double rel_tol,
                          Weight weight) {
  const auto& in = spec.intrinsics;
  const PixelGrid g = pixel_grid(box, in);
  if (g.cols < 2 || g.rows < 2) return 0.0;
  const Eigen::Matrix2d rot = roll_matrix(pose.roll);
  auto integrand = [&](double u, double v) {
    const auto z = ray_depth(spec, pose, u, v);
    if (!z) return 0.0;
    const double xn = (u - in.pu) / in.fu;
    const double yn = (v - in.pv) / in.fv;
    const Eigen::Vector2d world_xy = pose.position.head<2>() + *z * (rot * Eigen::Vector2d(xn, yn));
    const Eigen::Vector2d grad_w = surface_gradient(spec, world_xy.x(), world_xy.y());
    const Eigen::Vector2d grad_c = rot.transpose() * grad_w;
    const double denom = 1.0 - grad_c.x() * xn - grad_c.y() * yn;
    const double jac = (*z) * (*z) / std::abs(denom) / (in.fu * in.fv);
    return jac * weight(grad_w);
  };
  const double u0 = g.u0, u1 = g.u0 + g.cols - 1;
  const double v0 = g.v0, v1 = g.v0 + g.rows - 1;
  return integrate([&](double v) { return integrate([&](double u) { return integrand(u, v); }, u0, u1, rel_tol * 0.1); },
                   v0, v1, rel_tol);
}

}  // namespace

void SceneSpec::validate() const {
  intrinsics.validate();
  if (frames < 1) throw Error(ErrorCode::InvalidArgument, "scene needs at least one frame");
  if (!(surface.base_depth > 0.0)) throw Error(ErrorCode::InvalidArgument, "surface base depth must be positive");
  if (surface.kind == SurfaceKind::Undulating && !(surface.wavelength > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "undulation wavelength must be positive");
  }
  if (std::abs(surface.pitch_rad) >= kPi / 2) throw Error(ErrorCode::InvalidArgument, "pitch must be within (-90, 90) degrees");
  for (const auto& p : potholes) {
    if (!(p.a > 0.0) || !(p.b > 0.0)) throw Error(ErrorCode::InvalidArgument, "pothole semi-axes must be positive");
    if (p.depth < 0.0) throw Error(ErrorCode::InvalidArgument, "pothole depth must be non-negative");
  }
  if (noise.box_jitter_px < 0.0 || noise.conf_noise_std < 0.0 || noise.depth_noise_rel < 0.0 ||
      noise.correspondence_noise_px < 0.0 || noise.outlier_fraction < 0.0 || noise.outlier_fraction > 1.0 ||
      !(noise.conf_c0 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise parameters out of range");
  }
}

double surface_height(const SceneSpec& spec, double x, double y) {
  double z = base_height(spec.surface, x, y);
  for (const auto& p : spec.potholes) {
    const double rho = pothole_rho(p, x, y);
    if (rho < 1.0) z += p.depth * 0.5 * (1.0 + std::cos(kPi * rho));
  }
  return z;
}

Eigen::Vector2d surface_gradient(const SceneSpec& spec, double x, double y) {
  Eigen::Vector2d g = base_gradient(spec.surface, x, y);
  for (const auto& p : spec.potholes) {
    const double rho = pothole_rho(p, x, y);
    if (rho >= 1.0) continue;
    // d/drho of the cosine bump divided by rho, finite at the center.
    const double s_over_rho = rho > 1e-9 ? std::sin(kPi * rho) / rho : kPi;
    const double common = -p.depth * 0.5 * kPi * s_over_rho;
    g.x() += common * (x - p.cx) / (p.a * p.a);
    g.y() += common * (y - p.cy) / (p.b * p.b);
  }
  return g;
}

CameraPose camera_pose(const SceneSpec& spec, long frame) {
  CameraPose pose;
  const auto& c = spec.camera;
  pose.position = c.start + static_cast<double>(frame) * c.velocity;
  pose.roll = static_cast<double>(frame) * c.roll_rate;
  if (c.shake_translation_std > 0.0 || c.shake_roll_std > 0.0) {
    auto rng = frame_rng(spec.seed, frame, 1);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double sx = n01(rng), sy = n01(rng), sr = n01(rng);
    pose.position.x() += c.shake_translation_std * sx;
    pose.position.y() += c.shake_translation_std * sy;
    pose.roll += c.shake_roll_std * sr;
  }
  if (c.jump_frame >= 0 && frame >= c.jump_frame) pose.position.head<2>() += c.jump;
  return pose;
}

std::optional<double> ray_depth(const SceneSpec& spec, const CameraPose& pose, double u, double v) {
  const auto& in = spec.intrinsics;
  const Eigen::Vector2d dir = roll_matrix(pose.roll) * Eigen::Vector2d((u - in.pu) / in.fu, (v - in.pv) / in.fv);
  const Eigen::Vector3d& c = pose.position;
  // Start from the plane part of the surface.
  const double tan_p = spec.surface.kind == SurfaceKind::FrontoParallel ? 0.0 : std::tan(spec.surface.pitch_rad);
  const double denom0 = 1.0 + dir.y() * tan_p;
  if (!(denom0 > 1e-9)) return std::nullopt;
  double t = (spec.surface.base_depth - c.y() * tan_p - c.z()) / denom0;
  if (!(t > 0.0)) return std::nullopt;
  for (int it = 0; it < 60; ++it) {
    const double x = c.x() + t * dir.x();
    const double y = c.y() + t * dir.y();
    const double g = c.z() + t - surface_height(spec, x, y);
    const Eigen::Vector2d grad = surface_gradient(spec, x, y);
    const double dg = 1.0 - grad.dot(dir);
    if (!(dg > 1e-9)) return std::nullopt;
    const double step = g / dg;
    t -= step;
    if (!(t > 0.0)) return std::nullopt;
    if (std::abs(step) <= 1e-13 * std::max(1.0, t)) return t;
  }
  return std::nullopt;
}

DepthMap render_depth(const SceneSpec& spec, const CameraPose& pose) {
  const auto& in = spec.intrinsics;
  DepthMap d(in.width, in.height);
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      const auto z = ray_depth(spec, pose, u, v);
      d.raw(u, v) = z ? static_cast<float>(*z) : std::numeric_limits<float>::quiet_NaN();
    }
  }
  return d;
}

double confidence_model(const NoiseSpec& noise, double distance_m, double gaussian_draw) noexcept {
  return std::clamp(noise.conf_c0 - noise.conf_k * distance_m + noise.conf_noise_std * gaussian_draw, 0.05, 0.99);
}

namespace {

std::optional<GtBox> project_pothole(const SceneSpec& spec, const CameraPose& pose, const PotholeSpec& p) {
  const auto& in = spec.intrinsics;
  double umin = std::numeric_limits<double>::infinity(), umax = -umin, vmin = umin, vmax = -umin;
  // The rim usually carries the extremes, so it is sampled densely; the
  // final pad covers the residual gap between samples.
  constexpr int kRadial = 24, kAngular = 360, kRimAngular = 7200;
  constexpr double kPad = 0.01;
  for (int ir = 0; ir <= kRadial; ++ir) {
    const double r = static_cast<double>(ir) / kRadial;
    const int n_ang = ir == 0 ? 1 : (ir == kRadial ? kRimAngular : kAngular);
    for (int ia = 0; ia < n_ang; ++ia) {
      const double phi = 2.0 * kPi * ia / n_ang;
      const double x = p.cx + p.a * r * std::cos(phi);
      const double y = p.cy + p.b * r * std::sin(phi);
      Eigen::Vector2d xy;
      const double z = camera_depth_of(pose, {x, y, surface_height(spec, x, y)}, &xy);
      if (!(z > 1e-6)) return std::nullopt;
      const double u = in.fu * xy.x() / z + in.pu;
      const double v = in.fv * xy.y() / z + in.pv;
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  umin -= kPad;
  vmin -= kPad;
  umax += kPad;
  vmax += kPad;
  if (umin < 0.0 || vmin < 0.0 || umax > in.width - 1 || vmax > in.height - 1) return std::nullopt;
  GtBox box;
  box.class_id = p.class_id;
  box.bbox = {umin, vmin, umax - umin, vmax - vmin};
  Eigen::Vector2d xy;
  const double zc = camera_depth_of(pose, {p.cx, p.cy, surface_height(spec, p.cx, p.cy)}, &xy);
  box.distance_m = std::sqrt(xy.squaredNorm() + zc * zc);
  return box;
}

double pothole_surface_area(const SceneSpec& spec, const PotholeSpec& p) {
  auto integrand = [&](double r, double phi) {
    const double x = p.cx + p.a * r * std::cos(phi);
    const double y = p.cy + p.b * r * std::sin(phi);
    const Eigen::Vector2d g = surface_gradient(spec, x, y);
    return std::sqrt(1.0 + g.squaredNorm()) * p.a * p.b * r;
  };
  return integrate([&](double r) { return integrate([&](double phi) { return integrand(r, phi); }, 0.0, 2.0 * kPi, 1e-8); },
                   0.0, 1.0, 1e-7);
}

}  // namespace

RenderResult render(const SceneSpec& spec) {
  spec.validate();
  const auto& in = spec.intrinsics;
  RenderResult out;
  std::vector<char> seen(spec.potholes.size(), 0);

  for (long k = 0; k < spec.frames; ++k) {
    RenderedFrame f;
    f.frame = k;
    f.pose = camera_pose(spec, k);
    f.depth = render_depth(spec, f.pose);

    if (spec.noise.depth_noise_rel > 0.0) {
      auto rng = frame_rng(spec.seed, k, 2);
      std::normal_distribution<double> n01(0.0, 1.0);
      for (float& z : f.depth.values()) {
        const double draw = n01(rng);
        if (is_valid_depth(z)) z = static_cast<float>(z * std::max(1.0 + spec.noise.depth_noise_rel * draw, 0.05));
      }
    }

    auto det_rng = frame_rng(spec.seed, k, 3);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t i = 0; i < spec.potholes.size(); ++i) {
      const auto gt = project_pothole(spec, f.pose, spec.potholes[i]);
      // Draws are consumed whether or not the pothole is visible so that
      // one pothole's visibility never shifts another's noise.
      const double j1 = n01(det_rng), j2 = n01(det_rng), j3 = n01(det_rng), j4 = n01(det_rng), jc = n01(det_rng);
      if (!gt) continue;
      seen[i] = 1;
      GtBox g = *gt;
      g.pothole_id = static_cast<long>(i + 1);
      const double conf = confidence_model(spec.noise, g.distance_m, jc);
      const double s = spec.noise.box_jitter_px *
                       (spec.noise.jitter_scales_with_confidence ? std::sqrt(spec.noise.conf_c0 / conf) : 1.0);
      double x0 = g.bbox.x + s * j1, y0 = g.bbox.y + s * j2;
      double x1 = g.bbox.right() + s * j3, y1 = g.bbox.bottom() + s * j4;
      if (x1 - x0 < 1.0) x1 = x0 + 1.0;
      if (y1 - y0 < 1.0) y1 = y0 + 1.0;
      Detection d;
      d.bbox = {x0, y0, x1 - x0, y1 - y0};
      d.confidence = conf;
      d.class_id = g.class_id;
      d.frame = k;
      f.gt.push_back(g);
      f.detections.push_back(d);
    }

    if (k > 0) {
      const CameraPose prev = camera_pose(spec, k - 1);
      auto rng = frame_rng(spec.seed, k, 4);
      std::uniform_real_distribution<double> uu(0.0, in.width - 1.0), uv(0.0, in.height - 1.0), u01(0.0, 1.0);
      std::vector<Correspondence> clean;
      const int want = spec.noise.correspondences;
      for (int attempt = 0; attempt < 20 * want && static_cast<int>(clean.size()) < want; ++attempt) {
        const double u = uu(rng), v = uv(rng);
        const auto z = ray_depth(spec, prev, u, v);
        if (!z) continue;
        const Eigen::Vector2d dir = roll_matrix(prev.roll) * Eigen::Vector2d((u - in.pu) / in.fu, (v - in.pv) / in.fv);
        const Eigen::Vector3d world(prev.position.x() + *z * dir.x(), prev.position.y() + *z * dir.y(),
                                    prev.position.z() + *z);
        Eigen::Vector2d xy;
        const double zc = camera_depth_of(f.pose, world, &xy);
        if (!(zc > 1e-6)) continue;
        const Eigen::Vector2d p1(in.fu * xy.x() / zc + in.pu, in.fv * xy.y() / zc + in.pv);
        if (p1.x() < 0.0 || p1.y() < 0.0 || p1.x() > in.width - 1 || p1.y() > in.height - 1) continue;
        clean.push_back({{u, v}, p1});
      }
      if (clean.size() >= 3) f.true_motion = fit_affine_least_squares(clean);
      f.correspondences = clean;
      for (auto& c : f.correspondences) {
        const double o = u01(rng), nx = n01(rng), ny = n01(rng), ox = uu(rng), oy = uv(rng);
        if (o < spec.noise.outlier_fraction) {
          c.curr = {ox, oy};
        } else {
          c.curr += spec.noise.correspondence_noise_px * Eigen::Vector2d(nx, ny);
        }
      }
    }
    out.frames.push_back(std::move(f));
  }

  for (std::size_t i = 0; i < spec.potholes.size(); ++i) {
    if (!seen[i]) {
      throw Error(ErrorCode::PotholeNeverVisible, "pothole " + std::to_string(i + 1) + " is never fully in view");
    }
    const auto& p = spec.potholes[i];
    out.truth.potholes.push_back({static_cast<long>(i + 1), kPi * p.a * p.b, pothole_surface_area(spec, p)});
  }
  return out;
}

double analytic_rect_footprint_area(const SceneSpec& spec, const CameraPose& pose, const BBox& box, double rel_tol) {
  return footprint_integral(spec, pose, box, rel_tol, [](const Eigen::Vector2d&) { return 1.0; });
}

double footprint_surface_area(const SceneSpec& spec, const CameraPose& pose, const BBox& box, double rel_tol) {
  return footprint_integral(spec, pose, box, rel_tol,
                            [](const Eigen::Vector2d& g) { return std::sqrt(1.0 + g.squaredNorm()); });
}

}  // namespace pothole::synth
