#include "pothole/area_metrics.hpp"

#include "pothole/error.hpp"

#include <cmath>
#include <numeric>

namespace pothole::metrics {

namespace {

double mean_of(std::span<const double> s) {
  if (s.empty()) throw Error(ErrorCode::EmptySeries, "series is empty");
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

}  // namespace

double area_mae(std::span<const double> series) {
  const double m = mean_of(series);
  double acc = 0.0;
  for (double a : series) acc += std::abs(a - m);
  return acc / static_cast<double>(series.size());
}

double area_cv(std::span<const double> series) {
  const double m = mean_of(series);
  if (!(m > 0.0)) throw Error(ErrorCode::ZeroMean, "coefficient of variation needs a positive mean");
  double acc = 0.0;
  for (double a : series) acc += (a - m) * (a - m);
  return std::sqrt(acc / static_cast<double>(series.size())) / m;
}

double area_afd(std::span<const double> series) {
  if (series.size() < 2) throw Error(ErrorCode::TooShort, "adjacent differences need two values");
  double acc = 0.0;
  for (std::size_t k = 1; k < series.size(); ++k) acc += std::abs(series[k] - series[k - 1]);
  return acc / static_cast<double>(series.size() - 1);
}

double nis_aggregate(std::span<const double> per_update_nis) { return mean_of(per_update_nis); }

double objective_j(double mae, double cv, double afd, double nis) noexcept {
  return 10.0 * mae + cv + afd + nis;
}

AreaConsistencyReport evaluate_area_consistency(const std::vector<TrackSeries>& tracks,
                                                long min_track_len) {
  AreaConsistencyReport rep;
  long nis_tracks = 0;
  for (const auto& t : tracks) {
    const long n = static_cast<long>(t.areas.size());
    if (n < std::max(min_track_len, 2L) || !(mean_of(t.areas) > 0.0)) {
      ++rep.excluded_tracks;
      continue;
    }
    TrackConsistency c;
    c.track_id = t.track_id;
    c.length = n;
    c.mean_area = mean_of(t.areas);
    c.mae = area_mae(t.areas);
    c.cv = area_cv(t.areas);
    c.afd = area_afd(t.areas);
    if (!t.nis.empty()) {
      c.has_nis = true;
      c.nis_mean = nis_aggregate(t.nis);
      rep.nis_mean += c.nis_mean;
      ++nis_tracks;
    }
    rep.mae += c.mae;
    rep.cv += c.cv;
    rep.afd += c.afd;
    rep.per_track.push_back(c);
  }
  rep.track_count = static_cast<long>(rep.per_track.size());
  if (rep.track_count > 0) {
    const double n = static_cast<double>(rep.track_count);
    rep.mae /= n;
    rep.cv /= n;
    rep.afd /= n;
  }
  if (nis_tracks > 0) {
    rep.has_nis = true;
    rep.nis_mean /= static_cast<double>(nis_tracks);
  }
  return rep;
}

}  // namespace pothole::metrics
