#include "shiptrack/solar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shiptrack::solar {

double solar_zenith(double lat_deg, double lon_deg, Timestamp t) {
  if (!(std::abs(lat_deg) <= 90.0)) fail(ErrorCode::InvalidArgument, "latitude outside [-90, 90]");
  const double unix_days = std::chrono::duration<double, std::ratio<86400>>(t.time_since_epoch()).count();
  const double n = unix_days + 2440587.5 - 2451545.0;  // days from J2000.0

  const double mean_longitude = std::fmod(280.460 + 0.9856474 * n, 360.0);
  const double mean_anomaly = std::fmod(357.528 + 0.9856003 * n, 360.0) * kDegToRad;
  const double ecliptic_longitude =
      (mean_longitude + 1.915 * std::sin(mean_anomaly) + 0.020 * std::sin(2.0 * mean_anomaly)) * kDegToRad;
  const double obliquity = (23.439 - 0.0000004 * n) * kDegToRad;

  const double right_ascension =
      std::atan2(std::cos(obliquity) * std::sin(ecliptic_longitude), std::cos(ecliptic_longitude));
  const double declination = std::asin(std::sin(obliquity) * std::sin(ecliptic_longitude));

  const double gmst_hours = std::fmod(18.697374558 + 24.06570982441908 * n, 24.0);
  const double hour_angle = (gmst_hours * 15.0 + lon_deg) * kDegToRad - right_ascension;

  const double lat = lat_deg * kDegToRad;
  double cos_zenith =
      std::sin(lat) * std::sin(declination) + std::cos(lat) * std::cos(declination) * std::cos(hour_angle);
  cos_zenith = std::clamp(cos_zenith, -1.0, 1.0);
  return std::acos(cos_zenith) * kRadToDeg;
}

void TransitionParams::validate() const {
  if (!(c > 0.0 && c < d && d < 180.0)) fail(ErrorCode::InvalidArgument, "transition thresholds need 0 < c < d < 180");
}

std::string_view to_string(DiurnalState state) {
  switch (state) {
    case DiurnalState::Day: return "Day";
    case DiurnalState::Night: return "Night";
    case DiurnalState::SunriseTransition: return "SunriseTransition";
    case DiurnalState::SunsetTransition: return "SunsetTransition";
  }
  return "Unknown";
}

PerimeterExtremes extremes(const PerimeterAngles& angles) {
  if (angles.alpha_r.empty() || angles.alpha_l.empty()) {
    fail(ErrorCode::InvalidArgument, "perimeter angle vectors must be nonempty");
  }
  const auto [min_r, max_r] = std::minmax_element(angles.alpha_r.begin(), angles.alpha_r.end());
  const auto [min_l, max_l] = std::minmax_element(angles.alpha_l.begin(), angles.alpha_l.end());
  return {*min_r, *max_r, *min_l, *max_l};
}

PerimeterAngles perimeter_angles(const TrackingBox& box, const raster::GeoTransform& geo, Timestamp t) {
  if (box.degenerate()) fail(ErrorCode::DegenerateBox, "box has zero area");
  const PixelRect r = box.pixels();
  if (r.width() < 2 || r.height() < 2) fail(ErrorCode::DegenerateBox, "box perimeter needs at least 2x2 pixels");

  PerimeterAngles out;
  auto sample = [&](int x, int y) {
    const raster::LatLon p = raster::pixel_to_geo(geo, x, y);
    const double zenith = solar_zenith(p.lat, normalize_longitude(p.lon), t);
    (x > box.center_x ? out.alpha_r : out.alpha_l).push_back(zenith);
  };
  for (int x = r.x0; x <= r.x1; ++x) {
    sample(x, r.y0);
    sample(x, r.y1);
  }
  for (int y = r.y0 + 1; y < r.y1; ++y) {
    sample(r.x0, y);
    sample(r.x1, y);
  }
  if (out.alpha_r.empty() || out.alpha_l.empty()) {
    fail(ErrorCode::DegenerateBox, "box center leaves one perimeter half empty");
  }
  return out;
}

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

DiurnalState transition_state(const PerimeterAngles& angles, const TransitionParams& params,
                              const TransitionContext& context) {
  params.validate();
  const PerimeterExtremes e = extremes(angles);
  const double c = params.c;
  const double d = params.d;
  const double max_all = std::max(e.max_r, e.max_l);
  const double min_all = std::min(e.min_r, e.min_l);

  const bool sunrise_set = e.min_r < d && e.max_l > c;
  const bool sunset_set = e.max_r > c && e.min_l < d;
  const double fall = context.previous ? context.previous->min_r - e.min_r : 0.0;
  const double rise = context.previous ? e.max_r - context.previous->max_r : 0.0;
  const bool falling = fall > 0.0;
  const bool rising = rise > 0.0;

  switch (context.previous_state.value_or(DiurnalState::Day)) {
    case DiurnalState::SunriseTransition:
      if (e.max_l <= c) return DiurnalState::Day;
      if (min_all >= d) return DiurnalState::Night;
      if (sunset_set && rising) return DiurnalState::SunsetTransition;
      return DiurnalState::SunriseTransition;
    case DiurnalState::SunsetTransition:
      if (e.min_l >= d) return DiurnalState::Night;
      if (max_all <= c) return DiurnalState::Day;
      if (sunrise_set && falling) return DiurnalState::SunriseTransition;
      return DiurnalState::SunsetTransition;
    case DiurnalState::Day:
    case DiurnalState::Night:
      break;
  }

  if (max_all <= c) return DiurnalState::Day;
  if (min_all >= d) return DiurnalState::Night;
  if (sunrise_set && !sunset_set) return DiurnalState::SunriseTransition;
  if (sunset_set && !sunrise_set) return DiurnalState::SunsetTransition;

  if (falling != rising) return falling ? DiurnalState::SunriseTransition : DiurnalState::SunsetTransition;
  if (falling && rising && fall != rise) {
    return fall > rise ? DiurnalState::SunriseTransition : DiurnalState::SunsetTransition;
  }
  return mean(angles.alpha_r) > mean(angles.alpha_l) ? DiurnalState::SunsetTransition
                                                     : DiurnalState::SunriseTransition;
}

}  // namespace shiptrack::solar
