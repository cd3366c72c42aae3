#pragma once

#include "shiptrack/box.hpp"
#include "shiptrack/common.hpp"
#include "shiptrack/raster.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace shiptrack::solar {

/// Geometric solar zenith angle in degrees (no refraction), from the
/// low-precision Astronomical Almanac series. About 0.01 deg for 1950-2050.
double solar_zenith(double lat_deg, double lon_deg, Timestamp t);

/// Zenith thresholds: day side c, night side d.
struct TransitionParams {
  double c = 84.0;
  double d = 96.0;

  void validate() const;
};

/// Zenith angles sampled on the box perimeter, split at the box center:
/// pixels with x > center_x form the right (east) half, the rest the left.
struct PerimeterAngles {
  std::vector<double> alpha_r;
  std::vector<double> alpha_l;
};

struct PerimeterExtremes {
  double min_r = 0.0;
  double max_r = 0.0;
  double min_l = 0.0;
  double max_l = 0.0;
};

PerimeterExtremes extremes(const PerimeterAngles& angles);

enum class DiurnalState { Day, Night, SunriseTransition, SunsetTransition };

std::string_view to_string(DiurnalState state);

inline bool is_transition(DiurnalState s) {
  return s == DiurnalState::SunriseTransition || s == DiurnalState::SunsetTransition;
}

/// What the classifier knows about the previous frame of the same box.
struct TransitionContext {
  std::optional<PerimeterExtremes> previous;
  std::optional<DiurnalState> previous_state;
};

PerimeterAngles perimeter_angles(const TrackingBox& box, const raster::GeoTransform& geo, Timestamp t);

/// Sunrise set: min(alpha_r) < d and max(alpha_l) > c.
/// Sunset set:  max(alpha_r) > c and min(alpha_l) < d.
///
/// An ongoing sunrise ends (Day) once max(alpha_l) <= c; an ongoing sunset
/// ends (Night) once min(alpha_l) >= d. A sunset start seen during a sunrise
/// (max(alpha_r) rising) or vice versa is reported as the new transition so the
/// caller can detect overlap. Outside a transition: Day when every angle is
/// <= c, Night when every angle is >= d; otherwise at least one set holds. When
/// both hold, a falling min(alpha_r) selects sunrise and a rising max(alpha_r)
/// selects sunset; if both or neither move, the larger move wins, and with no
/// usable slope the darker half decides (east darker means sunset).
DiurnalState transition_state(const PerimeterAngles& angles, const TransitionParams& params,
                              const TransitionContext& context = {});

}  // namespace shiptrack::solar
