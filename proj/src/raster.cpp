#include "shiptrack/raster.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace shiptrack::raster {

namespace fs = std::filesystem;
using nlohmann::json;

void GeoTransform::validate() const {
  if (!std::isfinite(lat0) || !std::isfinite(lon0) || !std::isfinite(dlat) || !std::isfinite(dlon)) {
    fail(ErrorCode::InvalidArgument, "geo transform has non-finite fields");
  }
  if (dlat == 0.0 || dlon == 0.0) fail(ErrorCode::InvalidArgument, "geo transform step is zero");
}

LatLon pixel_to_geo(const GeoTransform& geo, double x, double y) {
  return {geo.lat0 + y * geo.dlat, geo.lon0 + x * geo.dlon};
}

Eigen::Vector2d geo_to_pixel(const GeoTransform& geo, double lat, double lon) {
  return {(lon - geo.lon0) / geo.dlon, (lat - geo.lat0) / geo.dlat};
}

Frame make_frame(Grid<double> values, Timestamp timestamp, GeoTransform geo, QualityMask quality) {
  if (values.rows() < 2 || values.cols() < 2) {
    fail(ErrorCode::ShapeMismatch, "frame must be at least 2x2");
  }
  geo.validate();
  if (quality.size() == 0) {
    quality = QualityMask::Zero(values.rows(), values.cols());
  } else if (quality.rows() != values.rows() || quality.cols() != values.cols()) {
    fail(ErrorCode::ShapeMismatch, "quality mask " + std::to_string(quality.cols()) + "x" +
                                       std::to_string(quality.rows()) + " does not match raster " +
                                       std::to_string(values.cols()) + "x" + std::to_string(values.rows()));
  }
  return Frame{std::move(values), std::move(quality), timestamp, geo};
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

class HeaderReader {
 public:
  HeaderReader(const std::string& data, const fs::path& path) : data_(data), path_(path) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= data_.size() || !std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      fail(ErrorCode::MalformedRaster, path_.string() + ": expected integer in header");
    }
    long value = 0;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      value = value * 10 + (data_[pos_++] - '0');
      if (value > 1'000'000'000L) fail(ErrorCode::MalformedRaster, path_.string() + ": header value too large");
    }
    return value;
  }

  // Binary rasters have exactly one whitespace byte between maxval and data.
  std::size_t binary_start() {
    if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_]))) {
      fail(ErrorCode::MalformedRaster, path_.string() + ": missing separator before raster data");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (std::isspace(static_cast<unsigned char>(data_[pos_]))) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& data_;
  const fs::path& path_;
  std::size_t pos_ = 2;
};

}  // namespace

Graymap read_pgm(const fs::path& path) {
  const std::string data = read_file(path);
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '2')) {
    fail(ErrorCode::MalformedRaster, path.string() + ": not a P2/P5 graymap");
  }
  const bool binary = data[1] == '5';
  HeaderReader header(data, path);
  const long width = header.next_int();
  const long height = header.next_int();
  const long maxval = header.next_int();
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
    fail(ErrorCode::MalformedRaster, path.string() + ": invalid header dimensions or maxval");
  }

  Graymap out;
  out.maxval = static_cast<int>(maxval);
  out.samples.resize(height, width);
  if (binary) {
    const std::size_t start = header.binary_start();
    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t needed = static_cast<std::size_t>(width * height) * bytes_per_sample;
    if (data.size() - start < needed) fail(ErrorCode::MalformedRaster, path.string() + ": truncated raster data");
    const auto* p = reinterpret_cast<const unsigned char*>(data.data() + start);
    for (long i = 0; i < width * height; ++i) {
      const std::uint16_t v = bytes_per_sample == 2 ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1])
                                                    : static_cast<std::uint16_t>(p[i]);
      if (v > maxval) fail(ErrorCode::MalformedRaster, path.string() + ": sample exceeds maxval");
      out.samples(i / width, i % width) = v;
    }
  } else {
    for (long i = 0; i < width * height; ++i) {
      const long v = header.next_int();
      if (v > maxval) fail(ErrorCode::MalformedRaster, path.string() + ": sample exceeds maxval");
      out.samples(i / width, i % width) = static_cast<std::uint16_t>(v);
    }
  }
  return out;
}

void write_pgm16(const fs::path& path, const Grid<std::uint16_t>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << samples.cols() << ' ' << samples.rows() << "\n65535\n";
  std::string buffer(static_cast<std::size_t>(samples.size()) * 2, '\0');
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const std::uint16_t v = samples.data()[i];
    buffer[2 * i] = static_cast<char>(v >> 8);
    buffer[2 * i + 1] = static_cast<char>(v & 0xff);
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

void write_pgm8(const fs::path& path, const Grid<std::uint8_t>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << samples.cols() << ' ' << samples.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(samples.data()), samples.size());
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

namespace {

double required_number(const json& sidecar, const char* key, const fs::path& path) {
  if (!sidecar.contains(key)) fail(ErrorCode::MissingMetadata, path.string() + ": missing \"" + key + "\"");
  if (!sidecar[key].is_number()) fail(ErrorCode::MissingMetadata, path.string() + ": \"" + key + "\" is not a number");
  return sidecar[key].get<double>();
}

json parse_sidecar(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::MissingMetadata, path.string() + ": " + e.what());
  }
}

Timestamp sidecar_timestamp(const json& sidecar, const fs::path& path) {
  if (!sidecar.contains("timestamp") || !sidecar["timestamp"].is_string()) {
    fail(ErrorCode::MissingMetadata, path.string() + ": missing \"timestamp\"");
  }
  return parse_timestamp(sidecar["timestamp"].get<std::string>());
}

}  // namespace

Frame load_frame(const fs::path& raster_path, const fs::path& sidecar_path) {
  const json sidecar = parse_sidecar(sidecar_path);
  const Timestamp t = sidecar_timestamp(sidecar, sidecar_path);
  GeoTransform geo{required_number(sidecar, "lat0", sidecar_path), required_number(sidecar, "lon0", sidecar_path),
                   required_number(sidecar, "dlat", sidecar_path), required_number(sidecar, "dlon", sidecar_path)};

  const Graymap raster = read_pgm(raster_path);
  QualityMask quality;
  if (sidecar.contains("quality_mask") && !sidecar["quality_mask"].is_null()) {
    fs::path mask_path = sidecar["quality_mask"].get<std::string>();
    if (mask_path.is_relative()) mask_path = sidecar_path.parent_path() / mask_path;
    const Graymap mask = read_pgm(mask_path);
    quality = (mask.samples != 0).cast<std::uint8_t>();
  }
  return make_frame(raster.samples.cast<double>(), t, geo, std::move(quality));
}

void save_frame(const Frame& frame, const fs::path& raster_path) {
  const Grid<std::uint16_t> samples = frame.values.round().max(0.0).min(65535.0).cast<std::uint16_t>();
  write_pgm16(raster_path, samples);

  json sidecar{{"timestamp", format_timestamp(frame.timestamp)},
               {"lat0", frame.geo.lat0},
               {"lon0", frame.geo.lon0},
               {"dlat", frame.geo.dlat},
               {"dlon", frame.geo.dlon}};
  if ((frame.quality != 0).any()) {
    fs::path mask_path = raster_path;
    mask_path.replace_extension(".mask.pgm");
    const Grid<std::uint8_t> mask = (frame.quality != 0).cast<std::uint8_t>() * std::uint8_t{255};
    write_pgm8(mask_path, mask);
    sidecar["quality_mask"] = mask_path.filename().string();
  }
  std::ofstream out(raster_path.string() + ".json");
  if (!out) fail(ErrorCode::Io, "cannot write sidecar for " + raster_path.string());
  out << sidecar.dump(2) << '\n';
}

Frame band_difference(const Frame& c06, const Frame& c07) {
  if (c06.values.rows() != c07.values.rows() || c06.values.cols() != c07.values.cols()) {
    fail(ErrorCode::ShapeMismatch, "band frames differ in size");
  }
  if (c06.timestamp != c07.timestamp) {
    fail(ErrorCode::TimeMismatch, format_timestamp(c06.timestamp) + " vs " + format_timestamp(c07.timestamp));
  }
  const GeoTransform& a = c06.geo;
  const GeoTransform& b = c07.geo;
  if (a.lat0 != b.lat0 || a.lon0 != b.lon0 || a.dlat != b.dlat || a.dlon != b.dlon) {
    fail(ErrorCode::ShapeMismatch, "band frames have different geo transforms");
  }
  QualityMask quality = ((c06.quality != 0) || (c07.quality != 0)).cast<std::uint8_t>();
  return make_frame(c06.values - c07.values, c06.timestamp, c06.geo, std::move(quality));
}

Frame equalize_histogram(const Frame& frame) {
  std::vector<double> good;
  good.reserve(static_cast<std::size_t>(frame.values.size()));
  for (Eigen::Index i = 0; i < frame.values.size(); ++i) {
    if (frame.quality.data()[i] == 0) good.push_back(frame.values.data()[i]);
  }
  if (good.empty()) fail(ErrorCode::AllCorrupt, "cannot equalize a frame with no good pixels");
  std::sort(good.begin(), good.end());
  const double n = static_cast<double>(good.size());

  Grid<double> out(frame.values.rows(), frame.values.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (frame.quality.data()[i] != 0) {
      out.data()[i] = 0.0;
      continue;
    }
    const auto rank = std::upper_bound(good.begin(), good.end(), frame.values.data()[i]) - good.begin();
    out.data()[i] = std::floor(65535.0 * static_cast<double>(rank) / n + 0.5);
  }
  return make_frame(std::move(out), frame.timestamp, frame.geo, frame.quality);
}

double corrupt_fraction(const Frame& frame) {
  if (frame.quality.size() == 0) return 0.0;
  return static_cast<double>((frame.quality != 0).count()) / static_cast<double>(frame.quality.size());
}

SequenceManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open manifest " + path.string());
  SequenceManifest manifest;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    fs::path raster = line.substr(first, last - first + 1);
    if (raster.is_relative()) raster = path.parent_path() / raster;
    fs::path sidecar = raster.string() + ".json";
    if (!fs::exists(raster)) fail(ErrorCode::Io, "manifest entry missing: " + raster.string());
    if (!fs::exists(sidecar)) fail(ErrorCode::MissingMetadata, "sidecar missing: " + sidecar.string());
    const Timestamp t = sidecar_timestamp(parse_sidecar(sidecar), sidecar);
    if (!manifest.timestamps.empty() && t <= manifest.timestamps.back()) {
      fail(ErrorCode::TimestampOrder, sidecar.string() + " is not after the previous entry");
    }
    manifest.entries.push_back({std::move(raster), std::move(sidecar)});
    manifest.timestamps.push_back(t);
  }
  if (manifest.entries.size() >= 2) {
    std::vector<double> steps;
    for (std::size_t i = 1; i < manifest.timestamps.size(); ++i) {
      steps.push_back(seconds_between(manifest.timestamps[i - 1], manifest.timestamps[i]));
    }
    std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
    manifest.nominal_cadence_s = steps[steps.size() / 2];
  }
  return manifest;
}

void write_manifest(const fs::path& path, const std::vector<fs::path>& rasters) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write manifest " + path.string());
  for (const auto& r : rasters) {
    std::error_code ec;
    const fs::path rel = fs::relative(r, path.parent_path(), ec);
    out << (ec || rel.empty() ? r.string() : rel.string()) << '\n';
  }
}

}  // namespace shiptrack::raster
