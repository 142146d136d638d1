#pragma once

// Scene spec (JSON) and on-disk synthetic datasets in the same layout the
// estimator consumes:
//
//   DIR/manifest.json
//   DIR/depth/000000.pfm ...
//   DIR/detections.jsonl     detection records
//   DIR/gt.jsonl             ground-truth boxes (detection records + pothole_id)
//   DIR/corr/000001.json     correspondences, frame k-1 -> k
//   DIR/truth.json           per-pothole areas and per-frame true motion

#include "pothole/io.hpp"
#include "pothole/synth.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace pothole::synth {

SceneSpec parse_scene_spec(std::string_view text);
std::string format_scene_spec(const SceneSpec& spec);

struct DatasetOptions {
  bool write_correspondences = true;
  bool embed_true_motion = false;  // put the true transform in the manifest
};

// Renders `spec` and writes it under `dir`. Returns the manifest path.
std::filesystem::path write_dataset(const SceneSpec& spec, const std::filesystem::path& dir,
                                    const DatasetOptions& opts = {});
std::filesystem::path write_dataset(const RenderResult& rendered, const SceneSpec& spec,
                                    const std::filesystem::path& dir, const DatasetOptions& opts = {});

}  // namespace pothole::synth
