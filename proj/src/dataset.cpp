#include "pothole/dataset.hpp"

#include "pothole/error.hpp"

#include <json.hpp>

#include <cstdio>

namespace pothole::synth {

using nlohmann::json;

namespace {

const char* kind_name(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::FrontoParallel: return "fronto_parallel";
    case SurfaceKind::TiltedPlane: return "tilted_plane";
    case SurfaceKind::Undulating: return "undulating";
  }
  return "fronto_parallel";
}

SurfaceKind parse_kind(const std::string& s) {
  if (s == "fronto_parallel") return SurfaceKind::FrontoParallel;
  if (s == "tilted_plane") return SurfaceKind::TiltedPlane;
  if (s == "undulating") return SurfaceKind::Undulating;
  throw std::runtime_error("unknown surface kind '" + s + "'");
}

template <class T>
void opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Eigen::Vector3d vec3(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw std::runtime_error("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

std::string frame_name(long frame, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06ld%s", frame, ext);
  return buf;
}

json detection_json(long frame, const Detection& d) {
  return {{"format_version", io::kFormatVersion}, {"frame", frame}, {"class_id", d.class_id},
          {"x", d.bbox.x}, {"y", d.bbox.y}, {"w", d.bbox.w}, {"h", d.bbox.h}, {"confidence", d.confidence}};
}

json motion_rows(const MotionTransform& t) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({t.m(r, 0), t.m(r, 1), t.m(r, 2)});
  return rows;
}

}  // namespace

SceneSpec parse_scene_spec(std::string_view text) {
  SceneSpec s;
  try {
    const json j = json::parse(text);
    if (j.value("format_version", io::kFormatVersion) != io::kFormatVersion) {
      throw std::runtime_error("unsupported format_version");
    }
    if (j.contains("intrinsics")) {
      const json& k = j.at("intrinsics");
      opt(k, "fu", s.intrinsics.fu);
      opt(k, "fv", s.intrinsics.fv);
      opt(k, "pu", s.intrinsics.pu);
      opt(k, "pv", s.intrinsics.pv);
      opt(k, "width", s.intrinsics.width);
      opt(k, "height", s.intrinsics.height);
    }
    if (j.contains("surface")) {
      const json& k = j.at("surface");
      if (k.contains("kind")) s.surface.kind = parse_kind(k.at("kind").get<std::string>());
      opt(k, "base_depth", s.surface.base_depth);
      opt(k, "pitch_rad", s.surface.pitch_rad);
      opt(k, "amplitude", s.surface.amplitude);
      opt(k, "wavelength", s.surface.wavelength);
    }
    if (j.contains("potholes")) {
      for (const json& p : j.at("potholes")) {
        PotholeSpec ps;
        opt(p, "cx", ps.cx);
        opt(p, "cy", ps.cy);
        opt(p, "a", ps.a);
        opt(p, "b", ps.b);
        opt(p, "depth", ps.depth);
        opt(p, "class_id", ps.class_id);
        s.potholes.push_back(ps);
      }
    }
    if (j.contains("camera")) {
      const json& k = j.at("camera");
      if (k.contains("start")) s.camera.start = vec3(k.at("start"));
      if (k.contains("velocity")) s.camera.velocity = vec3(k.at("velocity"));
      opt(k, "roll_rate", s.camera.roll_rate);
      opt(k, "shake_translation_std", s.camera.shake_translation_std);
      opt(k, "shake_roll_std", s.camera.shake_roll_std);
      opt(k, "jump_frame", s.camera.jump_frame);
      if (k.contains("jump")) {
        const auto v = k.at("jump").get<std::vector<double>>();
        if (v.size() != 2) throw std::runtime_error("camera.jump needs 2 values");
        s.camera.jump = {v[0], v[1]};
      }
    }
    if (j.contains("noise")) {
      const json& k = j.at("noise");
      opt(k, "box_jitter_px", s.noise.box_jitter_px);
      opt(k, "jitter_scales_with_confidence", s.noise.jitter_scales_with_confidence);
      opt(k, "conf_c0", s.noise.conf_c0);
      opt(k, "conf_k", s.noise.conf_k);
      opt(k, "conf_noise_std", s.noise.conf_noise_std);
      opt(k, "depth_noise_rel", s.noise.depth_noise_rel);
      opt(k, "correspondences", s.noise.correspondences);
      opt(k, "correspondence_noise_px", s.noise.correspondence_noise_px);
      opt(k, "outlier_fraction", s.noise.outlier_fraction);
    }
    opt(j, "frames", s.frames);
    opt(j, "seed", s.seed);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string format_scene_spec(const SceneSpec& s) {
  json j;
  j["format_version"] = io::kFormatVersion;
  j["intrinsics"] = {{"fu", s.intrinsics.fu}, {"fv", s.intrinsics.fv}, {"pu", s.intrinsics.pu},
                     {"pv", s.intrinsics.pv}, {"width", s.intrinsics.width}, {"height", s.intrinsics.height}};
  j["surface"] = {{"kind", kind_name(s.surface.kind)}, {"base_depth", s.surface.base_depth},
                  {"pitch_rad", s.surface.pitch_rad}, {"amplitude", s.surface.amplitude},
                  {"wavelength", s.surface.wavelength}};
  json ph = json::array();
  for (const auto& p : s.potholes) {
    ph.push_back({{"cx", p.cx}, {"cy", p.cy}, {"a", p.a}, {"b", p.b}, {"depth", p.depth}, {"class_id", p.class_id}});
  }
  j["potholes"] = ph;
  const auto& c = s.camera;
  j["camera"] = {{"start", {c.start.x(), c.start.y(), c.start.z()}},
                 {"velocity", {c.velocity.x(), c.velocity.y(), c.velocity.z()}},
                 {"roll_rate", c.roll_rate},
                 {"shake_translation_std", c.shake_translation_std},
                 {"shake_roll_std", c.shake_roll_std},
                 {"jump_frame", c.jump_frame},
                 {"jump", {c.jump.x(), c.jump.y()}}};
  const auto& n = s.noise;
  j["noise"] = {{"box_jitter_px", n.box_jitter_px}, {"jitter_scales_with_confidence", n.jitter_scales_with_confidence},
                {"conf_c0", n.conf_c0}, {"conf_k", n.conf_k},
                {"conf_noise_std", n.conf_noise_std}, {"depth_noise_rel", n.depth_noise_rel},
                {"correspondences", n.correspondences}, {"correspondence_noise_px", n.correspondence_noise_px},
                {"outlier_fraction", n.outlier_fraction}};
  j["frames"] = s.frames;
  j["seed"] = s.seed;
  return j.dump(2) + "\n";
}

std::filesystem::path write_dataset(const SceneSpec& spec, const std::filesystem::path& dir,
                                    const DatasetOptions& opts) {
  return write_dataset(render(spec), spec, dir, opts);
}

std::filesystem::path write_dataset(const RenderResult& rendered, const SceneSpec& spec,
                                    const std::filesystem::path& dir, const DatasetOptions& opts) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "depth");

  io::SequenceManifest m;
  m.intrinsics = spec.intrinsics;
  m.dataset = "synthetic";
  m.fps = 30.0;
  m.detections = fs::path("detections.jsonl");
  m.base_dir = dir;

  std::string dets, gts;
  json motions = json::array();
  for (const auto& f : rendered.frames) {
    io::ManifestFrame mf;
    mf.frame = f.frame;
    mf.depth = fs::path("depth") / frame_name(f.frame, ".pfm");
    io::write_file(dir / mf.depth, io::write_pfm(f.depth));
    if (opts.write_correspondences && !f.correspondences.empty()) {
      mf.correspondences = fs::path("corr") / frame_name(f.frame, ".json");
      io::write_file(dir / *mf.correspondences, io::format_correspondences(f.correspondences));
    }
    if (opts.embed_true_motion && f.true_motion) mf.motion = f.true_motion;
    m.frames.push_back(mf);

    for (const auto& d : f.detections) dets += detection_json(f.frame, d).dump() + "\n";
    for (const auto& g : f.gt) {
      Detection d;
      d.bbox = g.bbox;
      d.class_id = g.class_id;
      d.confidence = 1.0;
      json jg = detection_json(f.frame, d);
      jg["pothole_id"] = g.pothole_id;
      jg["distance_m"] = g.distance_m;
      gts += jg.dump() + "\n";
    }
    if (f.true_motion) motions.push_back({{"frame", f.frame}, {"motion", motion_rows(*f.true_motion)}});
  }
  io::write_file(dir / "detections.jsonl", dets);
  io::write_file(dir / "gt.jsonl", gts);

  json truth;
  truth["format_version"] = io::kFormatVersion;
  json ph = json::array();
  for (const auto& p : rendered.truth.potholes) {
    ph.push_back({{"pothole_id", p.pothole_id},
                  {"planar_area_m2", p.planar_area_m2},
                  {"surface_area_m2", p.surface_area_m2}});
  }
  truth["potholes"] = ph;
  truth["motion"] = motions;
  io::write_file(dir / "truth.json", truth.dump(2) + "\n");
  io::write_file(dir / "scene.json", format_scene_spec(spec));

  const fs::path manifest = dir / "manifest.json";
  io::write_file(manifest, io::format_manifest(m));
  return manifest;
}

}  // namespace pothole::synth
