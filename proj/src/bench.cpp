#include "pothole/bench.hpp"

#include "pothole/error.hpp"
#include "pothole/mbtp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

namespace pothole {

void BenchOptions::validate() const {
  if (width < 2 || height < 2 || boxes < 1 || iters < 1 || box_size < 2.0) {
    throw Error(ErrorCode::InvalidArgument, "bench parameters must be positive");
  }
  if (box_size > width || box_size > height) throw Error(ErrorCode::InvalidArgument, "box size exceeds the image");
}

BenchResult run_mbtp_bench(const BenchOptions& a) {
  a.validate();
  const CameraIntrinsics intr{0.8 * a.width, 0.8 * a.width, a.width / 2.0, a.height / 2.0, a.width, a.height};

  // Road-like depth: far at the top, near at the bottom, with per-pixel noise.
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<float> depth_noise(-0.05f, 0.05f);
  std::vector<float> values(static_cast<std::size_t>(a.width) * a.height);
  for (int v = 0; v < a.height; ++v) {
    for (int u = 0; u < a.width; ++u) {
      values[static_cast<std::size_t>(v) * a.width + u] = 4.0f + 6.0f * (1.0f - float(v) / a.height) + depth_noise(rng);
    }
  }
  const DepthMap depth(a.width, a.height, std::move(values));
  std::uniform_real_distribution<double> ux(0.0, a.width - a.box_size), uy(0.0, a.height - a.box_size);
  std::vector<BBox> boxes;
  for (int i = 0; i < a.boxes; ++i) boxes.push_back({ux(rng), uy(rng), a.box_size, a.box_size});

  std::vector<double> ms;
  double sink = 0.0;
  for (int it = 0; it < a.iters; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& b : boxes) sink += estimate_area(b, depth, intr, 0.9).area_m2;
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  BenchResult r;
  for (double v : ms) r.mean_ms += v;
  r.mean_ms /= static_cast<double>(ms.size());
  r.p95_ms = sorted[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size()))) - 1];
  r.min_ms = sorted.front();
  r.max_ms = sorted.back();
  r.checksum_m2 = sink / a.iters;
  return r;
}

}  // namespace pothole
