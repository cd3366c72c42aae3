#pragma once

#include "shiptrack/common.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace shiptrack::trajectory {

/// Winds on a (time, height, lat, lon) grid, stored row-major in that order.
/// Each axis is strictly monotone (either direction). A single-entry axis is
/// treated as constant along that dimension.
struct WindField {
  std::vector<double> lats;
  std::vector<double> lons;
  std::vector<double> heights_m;
  std::vector<Timestamp> times;
  std::vector<float> u;  ///< east wind, m/s
  std::vector<float> v;  ///< north wind, m/s

  std::size_t node_count() const { return times.size() * heights_m.size() * lats.size() * lons.size(); }
  std::size_t index(std::size_t it, std::size_t ih, std::size_t ilat, std::size_t ilon) const {
    return ((it * heights_m.size() + ih) * lats.size() + ilat) * lons.size() + ilon;
  }
  void validate() const;
};

using WindFunction = std::function<Eigen::Vector2d(double lat, double lon, double height_m, Timestamp t)>;

/// Fills a field by evaluating fn at every node.
WindField sample_wind_field(std::vector<double> lats, std::vector<double> lons, std::vector<double> heights_m,
                            std::vector<Timestamp> times, const WindFunction& fn);

/// JSON header plus a little-endian float32 payload (u block then v block).
/// A relative payload path resolves against the header's directory.
WindField read_wind_field(const std::filesystem::path& header);
void write_wind_field(const std::filesystem::path& header, const WindField& field);

/// Quadrilinear (u, v) in m/s. Throws OutOfDomain outside the grid hull.
Eigen::Vector2d interpolate_wind(const WindField& field, double lat, double lon, double height_m, Timestamp t);

struct TrajectoryPoint {
  Timestamp t;
  double lat = 0.0;
  double lon = 0.0;
  double height_m = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;  ///< hourly, starting at the release point
  std::optional<std::string> truncated;  ///< why integration stopped early
};

/// Isoheight two-stage predictor-corrector. The step is shrunk if needed so a
/// whole number of steps fits in an hour.
Trajectory advect(const WindField& field, const TrajectoryPoint& start, int hours, double step_s = 300.0);

struct EnsembleRun {
  TrajectoryPoint init;
  std::vector<double> heights_m;
  std::vector<Trajectory> trajectories;
};

inline const std::vector<double> kDefaultHeights{0.0, 200.0, 400.0, 600.0};

/// One advect per height. Heights outside the field's levels are rejected.
EnsembleRun run_ensemble(const WindField& field, const TrajectoryPoint& init, int hours,
                         const std::vector<double>& heights_m = kDefaultHeights, double step_s = 300.0);

struct GeoSample {
  Timestamp t;
  double lat = 0.0;
  double lon = 0.0;
};

std::vector<GeoSample> to_geo_samples(const std::vector<TrajectoryPoint>& points);

struct DivergenceSample {
  Timestamp t;
  double km = 0.0;
};

/// Great-circle distance at each whole hour from the later start to the
/// earlier end, both paths linearly interpolated in time.
std::vector<DivergenceSample> divergence_series(const std::vector<GeoSample>& a, const std::vector<GeoSample>& b);

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryPoint>& points);

}  // namespace shiptrack::trajectory
