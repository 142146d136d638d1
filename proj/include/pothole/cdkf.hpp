#pragma once

// Scalar constant-state Kalman filter over a track's area, with measurement
// noise driven by detection confidence and camera distance:
//
//   R = lambda / c + theta * max(d, d0)
//
// Units: area in m^2, so P, Q and R are in m^4.

#include <optional>
#include <string_view>

namespace pothole::cdkf {

enum class NoiseMode { Combined, ConfidenceOnly, DistanceOnly };

std::string_view to_string(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view text);

struct CdkfConfig {
  double lambda = 1.026;
  double theta = 0.7179;
  double d0 = 5.0;
  double q = 1e-3;
  NoiseMode mode = NoiseMode::Combined;

  void validate() const;
};

struct CdkfState {
  double A = 0.0;
  double P = 0.0;
  std::optional<double> last_nis;
  long updates = 0;

  bool initialized() const noexcept { return updates > 0; }
};

// A unchanged, P <- P + q. Throws Uninitialized.
CdkfState predict(const CdkfState& s, const CdkfConfig& cfg);

// Throws ZeroConfidence for c <= 0.
double measurement_noise(double confidence, double distance_m, const CdkfConfig& cfg);

// First measurement initializes A = z, P = R. Later calls expect a predicted
// state and record NIS = nu^2 / (P_prior + R).
CdkfState update(const CdkfState& s, double z, double confidence, double distance_m,
                 const CdkfConfig& cfg);

// Per-track convenience wrapper: predicts once per elapsed frame, then updates.
class AreaFilter {
 public:
  explicit AreaFilter(CdkfConfig cfg = {});

  const CdkfState& observe(double area_m2, double confidence, double distance_m, long frame);
  const CdkfState& state() const noexcept { return state_; }
  const CdkfConfig& config() const noexcept { return cfg_; }

 private:
  CdkfConfig cfg_;
  CdkfState state_;
  long last_frame_ = 0;
};

}  // namespace pothole::cdkf
