#include "pothole/cdkf.hpp"

#include "pothole/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pothole::cdkf {

std::string_view to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::Combined: return "combined";
    case NoiseMode::ConfidenceOnly: return "confidence_only";
    case NoiseMode::DistanceOnly: return "distance_only";
  }
  return "combined";
}

NoiseMode parse_noise_mode(std::string_view text) {
  if (text == "combined") return NoiseMode::Combined;
  if (text == "confidence_only" || text == "confidence") return NoiseMode::ConfidenceOnly;
  if (text == "distance_only" || text == "distance") return NoiseMode::DistanceOnly;
  throw Error(ErrorCode::InvalidArgument, "unknown noise mode '" + std::string(text) + "'");
}

void CdkfConfig::validate() const {
  if (!(lambda >= 0.0) || !(theta >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda and theta must be non-negative");
  }
  if (!(d0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "d0 must be positive");
  if (!(q >= 0.0)) throw Error(ErrorCode::InvalidArgument, "q must be non-negative");
}

CdkfState predict(const CdkfState& s, const CdkfConfig& cfg) {
  if (!s.initialized()) throw Error(ErrorCode::Uninitialized, "predict before first measurement");
  CdkfState out = s;
  out.P = s.P + cfg.q;
  return out;
}

double measurement_noise(double confidence, double distance_m, const CdkfConfig& cfg) {
  if (!(confidence > 0.0)) throw Error(ErrorCode::ZeroConfidence, "confidence must be positive");
  const double conf_term = cfg.lambda / confidence;
  const double dist_term = cfg.theta * std::max(distance_m, cfg.d0);
  switch (cfg.mode) {
    case NoiseMode::ConfidenceOnly: return conf_term;
    case NoiseMode::DistanceOnly: return dist_term;
    case NoiseMode::Combined: break;
  }
  return conf_term + dist_term;
}

CdkfState update(const CdkfState& s, double z, double confidence, double distance_m,
                 const CdkfConfig& cfg) {
  const double r = measurement_noise(confidence, distance_m, cfg);
  CdkfState out = s;
  if (!s.initialized()) {
    out.A = z;
    out.P = r;
    out.last_nis.reset();
    out.updates = 1;
    return out;
  }
  const double s_innov = s.P + r;
  const double nu = z - s.A;
  if (!(s_innov > 0.0) || std::isinf(r)) {
    // No trust in the measurement: the state is kept.
    out.last_nis = s_innov > 0.0 && std::isfinite(s_innov) ? nu * nu / s_innov : 0.0;
    ++out.updates;
    return out;
  }
  const double k = s.P / s_innov;
  out.A = s.A + k * nu;
  out.P = (1.0 - k) * s.P;
  out.last_nis = nu * nu / s_innov;
  ++out.updates;
  return out;
}

AreaFilter::AreaFilter(CdkfConfig cfg) : cfg_(cfg) { cfg_.validate(); }

const CdkfState& AreaFilter::observe(double area_m2, double confidence, double distance_m,
                                     long frame) {
  if (state_.initialized()) {
    const long steps = std::max(frame - last_frame_, 1L);
    for (long k = 0; k < steps; ++k) state_ = predict(state_, cfg_);
  }
  state_ = update(state_, area_m2, confidence, distance_m, cfg_);
  last_frame_ = frame;
  return state_;
}

}  // namespace pothole::cdkf
