#include "scenes.hpp"
#include "shiptrack/shipmatch.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

using namespace shiptrack;
using namespace shiptrack::shipmatch;

namespace {

const Timestamp kT = parse_timestamp("2023-06-01T18:00:00Z");

AisLoad parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ais(in, "test.csv");
}

ShipRecord rec(const std::string& id, double lat, double lon, double minutes) {
  ShipRecord r;
  r.vessel_id = id;
  r.t = add_seconds(kT, minutes * 60.0);
  r.lat = lat;
  r.lon = lon;
  return r;
}

}  // namespace

TEST(LoadAis, ThreeValidRows) {
  const AisLoad a = parse(
      "vessel_id,timestamp,lat,lon,name,type,speed\n"
      "367000001,2023-06-01T18:00:00Z,36.5,-125.0,\"Pacific, Star\",Cargo,14.5\n"
      "367000002,2023-06-01T18:15:00Z,36.6,-125.2,,Tanker,\n"
      "367000003,2023-06-01T18:30:00Z,36.7,-125.4,Blue Whale,,11\n");
  ASSERT_EQ(a.records.size(), 3u);
  EXPECT_EQ(a.skipped, 0u);
  EXPECT_EQ(a.records[0].name, "Pacific, Star");
  EXPECT_EQ(a.records[0].speed_knots, 14.5);
  EXPECT_FALSE(a.records[1].name);
  EXPECT_EQ(a.records[1].type, "Tanker");
  EXPECT_FALSE(a.records[1].speed_knots);
  EXPECT_EQ(a.records[2].t, parse_timestamp("2023-06-01T18:30:00Z"));
}

TEST(LoadAis, MinimalColumns) {
  const AisLoad a = parse("vessel_id,timestamp,lat,lon\nA,2023-06-01T18:00:00Z,1,2\n");
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_FALSE(a.records[0].name);
}

TEST(LoadAis, InvalidRowsAreSkippedWithWarnings) {
  const AisLoad a = parse(
      "vessel_id,timestamp,lat,lon\n"
      "A,2023-06-01T18:00:00Z,95,-125\n"
      "B,2023-06-01T18:00:00Z,36,-125\n"
      "C,not-a-time,36,-125\n"
      "D,2023-06-01T18:00:00Z,abc,-125\n");
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_EQ(a.records[0].vessel_id, "B");
  EXPECT_EQ(a.skipped, 3u);
  ASSERT_EQ(a.warnings.size(), 3u);
  EXPECT_NE(a.warnings[0].find("test.csv:2"), std::string::npos);

  const AisLoad one = parse("vessel_id,timestamp,lat,lon\nA,2023-06-01T18:00:00Z,95,-125\nB,2023-06-01T18:00:00Z,1,1\n");
  EXPECT_EQ(one.skipped, 1u);
}

TEST(LoadAis, EmptyOrAllInvalid) {
  try {
    parse("");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRecords);
  }
  try {
    parse("vessel_id,timestamp,lat,lon\nA,2023-06-01T18:00:00Z,95,-125\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRecords);
  }
  EXPECT_THROW(parse("id,time,lat,lon\n"), Error);
}

TEST(LoadAis, FromFile) {
  scenes::TempDir dir("ais");
  std::ofstream(dir / "a.csv") << "vessel_id,timestamp,lat,lon\r\nA,2023-06-01T18:00:00Z,1,2\r\n";
  EXPECT_EQ(load_ais(dir / "a.csv").records.size(), 1u);
  EXPECT_THROW(load_ais(dir / "missing.csv"), Error);
}

TEST(NearestShip, SingleRecordWithinLimits) {
  // 0.045 deg of latitude is about 5 km.
  const std::vector<ShipRecord> r{rec("A", 36.045, -125.0, 10.0)};
  const auto m = nearest_ship(r, 36.0, -125.0, kT, 50.0, 60.0);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->record.vessel_id, "A");
  EXPECT_NEAR(m->distance_km, 5.0, 0.01);
  EXPECT_DOUBLE_EQ(m->dt_minutes, 10.0);
}

TEST(NearestShip, EqualDistancePrefersSmallerTimeOffset) {
  const std::vector<ShipRecord> r{rec("A", 36.1, -125.0, 20.0), rec("B", 35.9, -125.0, -5.0)};
  const auto m = nearest_ship(r, 36.0, -125.0, kT, 50.0, 60.0);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->record.vessel_id, "B");
}

TEST(NearestShip, FullTieGoesToTheSmallerId) {
  const std::vector<ShipRecord> r{rec("B", 36.1, -125.0, 5.0), rec("A", 36.1, -125.0, 5.0)};
  EXPECT_EQ(nearest_ship(r, 36.0, -125.0, kT)->record.vessel_id, "A");
}

TEST(NearestShip, NothingCloseEnough) {
  const std::vector<ShipRecord> far{rec("A", 37.8, -125.0, 0.0), rec("B", 34.2, -125.0, 0.0)};
  EXPECT_FALSE(nearest_ship(far, 36.0, -125.0, kT, 50.0, 60.0));
  const std::vector<ShipRecord> late{rec("A", 36.0, -125.0, 61.0)};
  EXPECT_FALSE(nearest_ship(late, 36.0, -125.0, kT, 50.0, 60.0));
  EXPECT_FALSE(nearest_ship({}, 36.0, -125.0, kT));
}

TEST(NearestShip, LimitsHoldAndOrderDoesNotMatter) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> dlat(-0.6, 0.6), dmin(-90.0, 90.0);
  std::vector<ShipRecord> r;
  for (int i = 0; i < 200; ++i) {
    // Coarse values so ties are common.
    r.push_back(rec("V" + std::to_string(i % 17), 36.0 + std::round(dlat(rng) * 20) / 20,
                    -125.0 + std::round(dlat(rng) * 20) / 20, std::round(dmin(rng) / 5) * 5));
  }
  const auto ref = nearest_ship(r, 36.0, -125.0, kT, 30.0, 45.0);
  ASSERT_TRUE(ref);
  EXPECT_LE(ref->distance_km, 30.0);
  EXPECT_LE(std::abs(ref->dt_minutes), 45.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(r.begin(), r.end(), rng);
    const auto m = nearest_ship(r, 36.0, -125.0, kT, 30.0, 45.0);
    ASSERT_TRUE(m);
    EXPECT_EQ(m->record.vessel_id, ref->record.vessel_id);
    EXPECT_EQ(m->record.t, ref->record.t);
    EXPECT_EQ(m->distance_km, ref->distance_km);
  }
}
