#pragma once

#include "shiptrack/common.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace shiptrack::raster {

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Affine equirectangular mapping: lat = lat0 + y*dlat, lon = lon0 + x*dlon.
struct GeoTransform {
  double lat0 = 0.0;
  double lon0 = 0.0;
  double dlat = -0.018;
  double dlon = 0.018;

  void validate() const;
};

LatLon pixel_to_geo(const GeoTransform& geo, double x, double y);
Eigen::Vector2d geo_to_pixel(const GeoTransform& geo, double lat, double lon);

/// One timestamped raster with its quality mask. Construct through make_frame
/// so the shape invariants are checked.
struct Frame {
  Grid<double> values;
  QualityMask quality;
  Timestamp timestamp{};
  GeoTransform geo;

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
};

/// Validates shapes; an empty quality mask means every pixel is good.
Frame make_frame(Grid<double> values, Timestamp timestamp, GeoTransform geo,
                 QualityMask quality = {});

// Portable graymap I/O. Reading accepts plain (P2) and binary (P5) files with
// any maxval up to 65535; 16-bit samples are big-endian.
struct Graymap {
  Grid<std::uint16_t> samples;
  int maxval = 65535;
};
Graymap read_pgm(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const Grid<std::uint16_t>& samples);
void write_pgm8(const std::filesystem::path& path, const Grid<std::uint8_t>& samples);

Frame load_frame(const std::filesystem::path& raster_path, const std::filesystem::path& sidecar_path);

/// Writes the raster (values rounded and clamped to 16 bits), the JSON sidecar,
/// and a quality mask next to the raster when any pixel is corrupt.
void save_frame(const Frame& frame, const std::filesystem::path& raster_path);

Frame band_difference(const Frame& c06, const Frame& c07);
Frame equalize_histogram(const Frame& frame);
double corrupt_fraction(const Frame& frame);

struct ManifestEntry {
  std::filesystem::path raster;
  std::filesystem::path sidecar;
};

struct SequenceManifest {
  std::vector<ManifestEntry> entries;
  std::vector<Timestamp> timestamps;
  double nominal_cadence_s = 300.0;
};

/// Newline-delimited raster paths, relative entries resolved against the
/// manifest's directory; each sidecar is the raster path plus ".json".
SequenceManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<std::filesystem::path>& rasters);

}  // namespace shiptrack::raster
