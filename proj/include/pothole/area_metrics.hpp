#pragma once

#include <span>
#include <vector>

namespace pothole::metrics {

// Mean |A_k - mean(A)|. Throws EmptySeries.
double area_mae(std::span<const double> series);

// Population standard deviation over mean. Throws EmptySeries, ZeroMean.
double area_cv(std::span<const double> series);

// Mean |A_k - A_{k-1}|. Throws TooShort for fewer than two values.
double area_afd(std::span<const double> series);

// Arithmetic mean of per-update NIS values. Throws EmptySeries.
double nis_aggregate(std::span<const double> per_update_nis);

// J = 10 MAE + CV + AFD + NIS
double objective_j(double mae, double cv, double afd, double nis) noexcept;

struct TrackSeries {
  long track_id = 0;
  std::vector<double> areas;
  std::vector<double> nis;  // may be empty (unsmoothed series)
};

struct TrackConsistency {
  long track_id = 0;
  long length = 0;
  double mean_area = 0.0;
  double mae = 0.0;
  double cv = 0.0;
  double afd = 0.0;
  double nis_mean = 0.0;
  bool has_nis = false;
};

struct AreaConsistencyReport {
  double mae = 0.0;
  double cv = 0.0;
  double afd = 0.0;
  double nis_mean = 0.0;
  bool has_nis = false;
  long track_count = 0;
  long excluded_tracks = 0;
  std::vector<TrackConsistency> per_track;

  // J with NIS taken as 0 when no smoothed track carries NIS values.
  double objective() const noexcept { return objective_j(mae, cv, afd, has_nis ? nis_mean : 0.0); }
};

// Unweighted means over tracks with at least `min_track_len` observations and a
// positive mean area; other tracks count as excluded.
AreaConsistencyReport evaluate_area_consistency(const std::vector<TrackSeries>& tracks,
                                                long min_track_len = 5);

}  // namespace pothole::metrics
