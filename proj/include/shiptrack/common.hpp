#pragma once

#include <Eigen/Core>

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shiptrack {

/// Dense row-major raster. rows() is the image height, cols() the width.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel quality flags: 0 = good, nonzero = corrupt.
using QualityMask = Grid<std::uint8_t>;

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

enum class ErrorCode {
  InvalidArgument,
  Io,
  MalformedRaster,
  MissingMetadata,
  ShapeMismatch,
  TimeMismatch,
  TimestampOrder,
  AllCorrupt,
  FrameTooSmall,
  OutOfBounds,
  DegenerateBox,
  BoxOutOfBounds,
  InsufficientFeatures,
  OutOfDomain,
  HeightOutOfRange,
  DisjointTimeRanges,
  NoRecords,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// RFC 3339 instants. Parsing accepts 'Z' or a numeric offset and optional
// fractional seconds (truncated to milliseconds); formatting always emits UTC.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

inline double seconds_between(Timestamp from, Timestamp to) {
  return std::chrono::duration<double>(to - from).count();
}

inline Timestamp add_seconds(Timestamp t, double seconds) {
  return t + std::chrono::round<std::chrono::milliseconds>(std::chrono::duration<double>(seconds));
}

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;
constexpr double kEarthRadiusKm = 6371.0088;
/// Meters per degree of latitude used by the parcel integrator.
constexpr double kMetersPerDegree = 111320.0;

/// Great-circle distance on the mean-radius sphere.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

/// Wraps a longitude into (-180, 180].
double normalize_longitude(double lon);

}  // namespace shiptrack
