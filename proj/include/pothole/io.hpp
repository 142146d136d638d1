#pragma once

// On-disk formats. Every format carries `format_version` (currently 1).
//
//  * Depth: grayscale Portable Float Map ("Pf"), rows stored bottom to top,
//    negative scale meaning little-endian payload.
//  * Detections / ground truth / results: JSON Lines, one record per line.
//  * Manifest, correspondences, scene specs: JSON documents.

#include "pothole/geometry.hpp"
#include "pothole/motion.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pothole::io {

inline constexpr int kFormatVersion = 1;

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Throws BadMagic, DimensionMismatch, TruncatedPayload.
DepthMap parse_pfm(std::string_view bytes);
// Canonical little-endian encoding: "Pf\n<w> <h>\n-1\n" + payload.
std::string write_pfm(const DepthMap& depth);

std::string format_detection(const Detection& d);
// Groups by frame, keeping input order inside a frame. Blank lines are
// skipped. Throws MalformedLine naming the 1-based line number.
std::map<long, std::vector<Detection>> parse_detections(std::string_view text);

struct ManifestFrame {
  long frame = 0;
  std::filesystem::path depth;
  std::optional<std::filesystem::path> detections;
  std::optional<MotionTransform> motion;
  std::optional<std::filesystem::path> correspondences;
};

struct SequenceManifest {
  CameraIntrinsics intrinsics;
  std::vector<ManifestFrame> frames;  // strictly increasing frame indices
  std::optional<std::filesystem::path> detections;  // shared detections file
  double fps = 0.0;
  std::string dataset;
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  void validate(bool check_files = true) const;
};

SequenceManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
SequenceManifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const SequenceManifest& m);

std::vector<Correspondence> parse_correspondences(std::string_view text);
std::string format_correspondences(const std::vector<Correspondence>& c);

}  // namespace pothole::io
