#include "shiptrack/shipmatch.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <tuple>

namespace shiptrack::shipmatch {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  return cells;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double x = std::stod(s, &used);
  if (used != s.size() || !std::isfinite(x)) throw std::invalid_argument("not a number: " + s);
  return x;
}

}  // namespace

AisLoad parse_ais(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::NoRecords, source + ": empty AIS file");
  std::vector<std::string> header = split_csv(line);
  for (auto& h : header) h = trim(h);
  if (header.size() < 4 || header[0] != "vessel_id" || header[1] != "timestamp" || header[2] != "lat" ||
      header[3] != "lon") {
    fail(ErrorCode::InvalidArgument, source + ": header must start with vessel_id,timestamp,lat,lon");
  }
  int col_name = -1, col_type = -1, col_speed = -1;
  for (std::size_t i = 4; i < header.size(); ++i) {
    if (header[i] == "name") col_name = static_cast<int>(i);
    if (header[i] == "type") col_type = static_cast<int>(i);
    if (header[i] == "speed" || header[i] == "speed_knots") col_speed = static_cast<int>(i);
  }

  AisLoad out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv(line);
    for (auto& c : cells) c = trim(c);
    try {
      if (cells.size() < 4) throw std::invalid_argument("fewer than 4 fields");
      ShipRecord r;
      r.vessel_id = cells[0];
      if (r.vessel_id.empty()) throw std::invalid_argument("empty vessel_id");
      r.t = parse_timestamp(cells[1]);
      r.lat = parse_double(cells[2]);
      r.lon = parse_double(cells[3]);
      if (std::abs(r.lat) > 90.0) throw std::invalid_argument("latitude outside [-90, 90]");
      if (std::abs(r.lon) > 360.0) throw std::invalid_argument("longitude out of range");
      auto cell = [&](int col) -> const std::string* {
        return col >= 0 && static_cast<std::size_t>(col) < cells.size() && !cells[col].empty() ? &cells[col]
                                                                                               : nullptr;
      };
      if (auto* s = cell(col_name)) r.name = *s;
      if (auto* s = cell(col_type)) r.type = *s;
      if (auto* s = cell(col_speed)) r.speed_knots = parse_double(*s);
      out.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      ++out.skipped;
      out.warnings.push_back(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.records.empty()) fail(ErrorCode::NoRecords, source + ": no valid AIS rows");
  return out;
}

AisLoad load_ais(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return parse_ais(in, path.string());
}

std::optional<ShipMatch> nearest_ship(const std::vector<ShipRecord>& records, double lat, double lon, Timestamp t,
                                      double max_km, double max_minutes) {
  std::optional<ShipMatch> best;
  for (const auto& r : records) {
    const double dt = seconds_between(t, r.t) / 60.0;
    if (std::abs(dt) > max_minutes) continue;
    const double km = haversine_km(lat, lon, r.lat, r.lon);
    if (km > max_km) continue;
    ShipMatch m{r, km, dt};
    if (!best) {
      best = std::move(m);
      continue;
    }
    const double adt = std::abs(dt), best_adt = std::abs(best->dt_minutes);
    if (std::tie(km, adt, r.vessel_id, r.t) <
        std::tie(best->distance_km, best_adt, best->record.vessel_id, best->record.t)) {
      best = std::move(m);
    }
  }
  return best;
}

}  // namespace shiptrack::shipmatch
