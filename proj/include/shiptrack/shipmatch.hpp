#pragma once

#include "shiptrack/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace shiptrack::shipmatch {

struct ShipRecord {
  std::string vessel_id;
  Timestamp t;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<std::string> name;
  std::optional<std::string> type;
  std::optional<double> speed_knots;
};

struct AisLoad {
  std::vector<ShipRecord> records;
  std::size_t skipped = 0;  ///< rows rejected during parsing
  std::vector<std::string> warnings;
};

/// CSV with header vessel_id,timestamp,lat,lon and optional name,type,speed
/// columns. Fields may be double-quoted. Throws NoRecords when nothing parses.
AisLoad load_ais(const std::filesystem::path& path);
AisLoad parse_ais(std::istream& in, const std::string& source = "<stream>");

struct ShipMatch {
  ShipRecord record;
  double distance_km = 0.0;
  double dt_minutes = 0.0;  ///< record time minus query time
};

/// Closest record within max_minutes and max_km. Ties go to the smaller
/// |dt|, then the smaller vessel_id, then the earlier record.
std::optional<ShipMatch> nearest_ship(const std::vector<ShipRecord>& records, double lat, double lon, Timestamp t,
                                      double max_km = 50.0, double max_minutes = 60.0);

}  // namespace shiptrack::shipmatch
