#include "shiptrack/common.hpp"

#include <gtest/gtest.h>

using namespace shiptrack;

TEST(Timestamp, RoundTripsUtc) {
  const Timestamp t = parse_timestamp("2023-06-01T18:05:00Z");
  EXPECT_EQ(format_timestamp(t), "2023-06-01T18:05:00Z");
  EXPECT_EQ(format_timestamp(parse_timestamp("2023-06-01T18:05:00.250Z")), "2023-06-01T18:05:00.250Z");
}

TEST(Timestamp, AppliesOffsets) {
  EXPECT_EQ(parse_timestamp("2023-06-01T20:05:00+02:00"), parse_timestamp("2023-06-01T18:05:00Z"));
  EXPECT_EQ(parse_timestamp("2023-06-01T13:05:00-05:00"), parse_timestamp("2023-06-01T18:05:00Z"));
}

TEST(Timestamp, TruncatesSubMillisecondDigits) {
  EXPECT_EQ(format_timestamp(parse_timestamp("2023-01-01T00:00:00.123999Z")), "2023-01-01T00:00:00.123Z");
}

TEST(Timestamp, RejectsMalformedText) {
  for (const char* bad : {"2023-06-01", "2023-06-01T18:05:00", "2023-13-01T00:00:00Z", "2023-02-30T00:00:00Z",
                          "2023-06-01T18:05:00Zjunk", "yesterday"}) {
    EXPECT_THROW(parse_timestamp(bad), Error) << bad;
  }
}

TEST(Timestamp, SecondsArithmetic) {
  const Timestamp t = parse_timestamp("2023-06-01T23:59:00Z");
  EXPECT_EQ(add_seconds(t, 120.0), parse_timestamp("2023-06-02T00:01:00Z"));
  EXPECT_DOUBLE_EQ(seconds_between(t, add_seconds(t, 300.0)), 300.0);
}

TEST(Haversine, TenthOfADegreeOfLatitude) {
  EXPECT_NEAR(haversine_km(0.0, 0.0, 0.1, 0.0), 11.119, 0.01);
}

TEST(Haversine, SymmetricAndZeroOnDiagonal) {
  EXPECT_DOUBLE_EQ(haversine_km(35.0, -125.0, 36.0, -124.0), haversine_km(36.0, -124.0, 35.0, -125.0));
  EXPECT_DOUBLE_EQ(haversine_km(35.0, -125.0, 35.0, -125.0), 0.0);
}

TEST(Haversine, AntipodesGiveHalfCircumference) {
  EXPECT_NEAR(haversine_km(0.0, 0.0, 0.0, 180.0), kPi * kEarthRadiusKm, 1e-6);
}

TEST(Longitude, NormalizesIntoHalfOpenRange) {
  EXPECT_DOUBLE_EQ(normalize_longitude(190.0), -170.0);
  EXPECT_DOUBLE_EQ(normalize_longitude(-180.0), 180.0);
  EXPECT_DOUBLE_EQ(normalize_longitude(180.0), 180.0);
  EXPECT_DOUBLE_EQ(normalize_longitude(-540.0), 180.0);
  EXPECT_DOUBLE_EQ(normalize_longitude(12.5), 12.5);
}

TEST(Errors, CarryTheirCode) {
  try {
    fail(ErrorCode::NoRecords, "nothing here");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRecords);
    EXPECT_NE(std::string(e.what()).find("NoRecords"), std::string::npos);
  }
}
