#pragma once
// MBTP latency benchmark on a synthetic ground-plane frame.
#include <cstdint>

namespace pothole {

struct BenchOptions {
  int width = 1920;
  int height = 1080;
  int boxes = 5;
  int iters = 100;
  double box_size = 200.0;
  std::uint64_t seed = 0;

  // Throws InvalidArgument.
  void validate() const;
};

struct BenchResult {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  double checksum_m2 = 0.0;  // mean summed area per frame; guards against dead-code elimination
};

BenchResult run_mbtp_bench(const BenchOptions& opts);

}  // namespace pothole
