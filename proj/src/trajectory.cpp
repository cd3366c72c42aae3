#include "shiptrack/trajectory.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace shiptrack::trajectory {

using nlohmann::json;

namespace {

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) fail(ErrorCode::InvalidArgument, std::string(name) + " axis is empty");
  for (double x : axis) {
    if (!std::isfinite(x)) fail(ErrorCode::InvalidArgument, std::string(name) + " axis has a non-finite entry");
  }
  if (axis.size() < 2) return;
  const bool ascending = axis[1] > axis[0];
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (ascending ? !(axis[i] > axis[i - 1]) : !(axis[i] < axis[i - 1])) {
      fail(ErrorCode::InvalidArgument, std::string(name) + " axis is not strictly monotone");
    }
  }
}

std::vector<double> time_axis(const WindField& f) {
  std::vector<double> s;
  s.reserve(f.times.size());
  for (Timestamp t : f.times) s.push_back(seconds_between(f.times.front(), t));
  return s;
}

struct Bracket {
  std::size_t i0 = 0;
  std::size_t i1 = 0;
  double w = 0.0;
};

std::optional<Bracket> bracket(const std::vector<double>& axis, double x) {
  if (axis.size() == 1) return Bracket{};
  const bool ascending = axis.back() > axis.front();
  const double lo = ascending ? axis.front() : axis.back();
  const double hi = ascending ? axis.back() : axis.front();
  if (!(x >= lo && x <= hi)) return std::nullopt;
  std::size_t i = 0;
  if (ascending) {
    i = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) - axis.begin());
  } else {
    i = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x, std::greater<>()) - axis.begin());
  }
  i = std::clamp<std::size_t>(i, 1, axis.size() - 1);
  const double w = (x - axis[i - 1]) / (axis[i] - axis[i - 1]);
  return Bracket{i - 1, i, w};
}

// Converts a wind vector at lat to (dlat/dt, dlon/dt) in degrees per second.
Eigen::Vector2d degree_rate(const Eigen::Vector2d& wind, double lat) {
  return {wind.y() / kMetersPerDegree, wind.x() / (kMetersPerDegree * std::cos(lat * kDegToRad))};
}

}  // namespace

void WindField::validate() const {
  check_axis(lats, "lat");
  check_axis(lons, "lon");
  check_axis(heights_m, "height");
  if (times.empty()) fail(ErrorCode::InvalidArgument, "time axis is empty");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) fail(ErrorCode::InvalidArgument, "time axis is not strictly increasing");
  }
  if (u.size() != node_count() || v.size() != node_count()) {
    fail(ErrorCode::ShapeMismatch, "wind payload does not match the grid axes");
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || !std::isfinite(v[i])) fail(ErrorCode::InvalidArgument, "wind payload is not finite");
  }
}

WindField sample_wind_field(std::vector<double> lats, std::vector<double> lons, std::vector<double> heights_m,
                            std::vector<Timestamp> times, const WindFunction& fn) {
  WindField f{std::move(lats), std::move(lons), std::move(heights_m), std::move(times), {}, {}};
  f.u.resize(f.node_count());
  f.v.resize(f.node_count());
  for (std::size_t it = 0; it < f.times.size(); ++it) {
    for (std::size_t ih = 0; ih < f.heights_m.size(); ++ih) {
      for (std::size_t ia = 0; ia < f.lats.size(); ++ia) {
        for (std::size_t io = 0; io < f.lons.size(); ++io) {
          const Eigen::Vector2d w = fn(f.lats[ia], f.lons[io], f.heights_m[ih], f.times[it]);
          const std::size_t k = f.index(it, ih, ia, io);
          f.u[k] = static_cast<float>(w.x());
          f.v[k] = static_cast<float>(w.y());
        }
      }
    }
  }
  f.validate();
  return f;
}

namespace {

void put_le(std::ostream& out, float value) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), 4);
}

float get_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

WindField read_wind_field(const std::filesystem::path& header) {
  std::ifstream in(header);
  if (!in) fail(ErrorCode::Io, "cannot open wind header " + header.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, header.string() + ": " + e.what());
  }
  WindField f;
  try {
    f.lats = j.at("lats").get<std::vector<double>>();
    f.lons = j.at("lons").get<std::vector<double>>();
    f.heights_m = j.at("heights_m").get<std::vector<double>>();
    for (const auto& t : j.at("times")) f.times.push_back(parse_timestamp(t.get<std::string>()));
  } catch (const json::exception& e) {
    fail(ErrorCode::MissingMetadata, header.string() + ": " + e.what());
  }
  std::filesystem::path payload = j.value("payload", std::string());
  if (payload.empty()) fail(ErrorCode::MissingMetadata, header.string() + ": no payload path");
  if (payload.is_relative()) payload = header.parent_path() / payload;

  std::ifstream bin(payload, std::ios::binary);
  if (!bin) fail(ErrorCode::Io, "cannot open wind payload " + payload.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  const std::size_t n = f.node_count();
  if (bytes.size() != 8 * n) {
    fail(ErrorCode::ShapeMismatch, payload.string() + ": expected " + std::to_string(8 * n) + " bytes, found " +
                                       std::to_string(bytes.size()));
  }
  f.u.resize(n);
  f.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.u[i] = get_le(&bytes[4 * i]);
    f.v[i] = get_le(&bytes[4 * (n + i)]);
  }
  f.validate();
  return f;
}

void write_wind_field(const std::filesystem::path& header, const WindField& field) {
  field.validate();
  std::filesystem::path payload = header;
  payload.replace_extension(".bin");
  json times = json::array();
  for (Timestamp t : field.times) times.push_back(format_timestamp(t));
  json j{{"lats", field.lats},
         {"lons", field.lons},
         {"heights_m", field.heights_m},
         {"times", std::move(times)},
         {"payload", payload.filename().string()}};
  std::ofstream out(header);
  if (!out) fail(ErrorCode::Io, "cannot write " + header.string());
  out << j.dump(2) << '\n';

  std::ofstream bin(payload, std::ios::binary);
  if (!bin) fail(ErrorCode::Io, "cannot write " + payload.string());
  for (float x : field.u) put_le(bin, x);
  for (float x : field.v) put_le(bin, x);
  if (!bin) fail(ErrorCode::Io, "short write to " + payload.string());
}

Eigen::Vector2d interpolate_wind(const WindField& field, double lat, double lon, double height_m, Timestamp t) {
  const auto bt = bracket(time_axis(field), seconds_between(field.times.front(), t));
  const auto bh = bracket(field.heights_m, height_m);
  const auto ba = bracket(field.lats, lat);
  const auto bo = bracket(field.lons, lon);
  if (!bt || !bh || !ba || !bo) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "(lat %.4f, lon %.4f, height %.1f m, %s) is outside the wind grid", lat, lon,
                  height_m, format_timestamp(t).c_str());
    fail(ErrorCode::OutOfDomain, buf);
  }

  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (int ct = 0; ct < 2; ++ct) {
    const double wt = ct ? bt->w : 1.0 - bt->w;
    if (wt == 0.0) continue;
    for (int ch = 0; ch < 2; ++ch) {
      const double wh = ch ? bh->w : 1.0 - bh->w;
      if (wh == 0.0) continue;
      for (int ca = 0; ca < 2; ++ca) {
        const double wa = ca ? ba->w : 1.0 - ba->w;
        if (wa == 0.0) continue;
        for (int co = 0; co < 2; ++co) {
          const double wo = co ? bo->w : 1.0 - bo->w;
          if (wo == 0.0) continue;
          const std::size_t k = field.index(ct ? bt->i1 : bt->i0, ch ? bh->i1 : bh->i0, ca ? ba->i1 : ba->i0,
                                            co ? bo->i1 : bo->i0);
          const double w = wt * wh * wa * wo;
          out += w * Eigen::Vector2d(field.u[k], field.v[k]);
        }
      }
    }
  }
  return out;
}

Trajectory advect(const WindField& field, const TrajectoryPoint& start, int hours, double step_s) {
  if (hours < 0) fail(ErrorCode::InvalidArgument, "duration must be >= 0 hours");
  if (!(step_s > 0.0 && step_s <= 3600.0)) fail(ErrorCode::InvalidArgument, "step must lie in (0, 3600] s");
  if (!(std::abs(start.lat) <= 90.0)) fail(ErrorCode::InvalidArgument, "start latitude outside [-90, 90]");
  const int substeps = static_cast<int>(std::ceil(3600.0 / step_s - 1e-9));
  const double dt = 3600.0 / substeps;

  interpolate_wind(field, start.lat, start.lon, start.height_m, start.t);  // start must be inside

  Trajectory out;
  out.points.push_back(start);
  Eigen::Vector2d x(start.lat, start.lon);  // (lat, lon)
  for (int h = 0; h < hours; ++h) {
    for (int s = 0; s < substeps; ++s) {
      const double elapsed = h * 3600.0 + s * dt;
      const Timestamp t0 = add_seconds(start.t, elapsed);
      const Timestamp t1 = add_seconds(start.t, elapsed + dt);
      try {
        const Eigen::Vector2d r0 = degree_rate(interpolate_wind(field, x.x(), x.y(), start.height_m, t0), x.x());
        const Eigen::Vector2d xp = x + r0 * dt;
        if (!(std::abs(xp.x()) < 90.0)) fail(ErrorCode::OutOfDomain, "parcel crossed a pole");
        const Eigen::Vector2d r1 = degree_rate(interpolate_wind(field, xp.x(), xp.y(), start.height_m, t1), xp.x());
        x += 0.5 * (r0 + r1) * dt;
        if (!(std::abs(x.x()) < 90.0)) fail(ErrorCode::OutOfDomain, "parcel crossed a pole");
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OutOfDomain) throw;
        out.truncated = e.what();
        return out;
      }
    }
    out.points.push_back({add_seconds(start.t, (h + 1) * 3600.0), x.x(), x.y(), start.height_m});
  }
  return out;
}

EnsembleRun run_ensemble(const WindField& field, const TrajectoryPoint& init, int hours,
                         const std::vector<double>& heights_m, double step_s) {
  if (heights_m.empty()) fail(ErrorCode::InvalidArgument, "no ensemble heights");
  const auto [lo, hi] = std::minmax_element(field.heights_m.begin(), field.heights_m.end());
  for (double h : heights_m) {
    if (!(h >= *lo && h <= *hi)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "height %.1f m outside wind levels [%.1f, %.1f] m", h, *lo, *hi);
      fail(ErrorCode::HeightOutOfRange, buf);
    }
  }
  EnsembleRun run{init, heights_m, {}};
  for (double h : heights_m) {
    TrajectoryPoint start = init;
    start.height_m = h;
    run.trajectories.push_back(advect(field, start, hours, step_s));
  }
  return run;
}

std::vector<GeoSample> to_geo_samples(const std::vector<TrajectoryPoint>& points) {
  std::vector<GeoSample> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p.t, p.lat, p.lon});
  return out;
}

namespace {

GeoSample interpolate_path(const std::vector<GeoSample>& path, Timestamp t) {
  auto it = std::lower_bound(path.begin(), path.end(), t, [](const GeoSample& s, Timestamp x) { return s.t < x; });
  if (it == path.end()) return path.back();
  if (it->t == t || it == path.begin()) return *it;
  const GeoSample& a = *(it - 1);
  const GeoSample& b = *it;
  const double w = seconds_between(a.t, t) / seconds_between(a.t, b.t);
  return {t, a.lat + w * (b.lat - a.lat), a.lon + w * (b.lon - a.lon)};
}

void check_path(const std::vector<GeoSample>& path) {
  if (path.empty()) fail(ErrorCode::InvalidArgument, "empty path");
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (!(path[i].t > path[i - 1].t)) fail(ErrorCode::TimestampOrder, "path timestamps must strictly increase");
  }
}

}  // namespace

std::vector<DivergenceSample> divergence_series(const std::vector<GeoSample>& a, const std::vector<GeoSample>& b) {
  check_path(a);
  check_path(b);
  const Timestamp begin = std::max(a.front().t, b.front().t);
  const Timestamp end = std::min(a.back().t, b.back().t);
  if (begin > end) fail(ErrorCode::DisjointTimeRanges, "paths do not overlap in time");
  std::vector<DivergenceSample> out;
  for (Timestamp t = begin; t <= end; t += std::chrono::hours(1)) {
    const GeoSample pa = interpolate_path(a, t);
    const GeoSample pb = interpolate_path(b, t);
    out.push_back({t, haversine_km(pa.lat, pa.lon, pb.lat, pb.lon)});
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryPoint>& points) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "timestamp,lat,lon,height_m\n";
  char buf[160];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.1f\n", format_timestamp(p.t).c_str(), p.lat, p.lon, p.height_m);
    out << buf;
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace shiptrack::trajectory
