#include "oracles.hpp"
#include "scenes.hpp"
#include "shiptrack/raster.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace shiptrack;
using namespace shiptrack::raster;
using scenes::TempDir;

namespace {

Frame frame_of(const Grid<double>& v, const char* t = "2023-06-01T18:00:00Z") { return scenes::frame_of(v, t); }

void write_sidecar(const std::filesystem::path& path, const std::string& body) {
  std::ofstream(path) << body;
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Geo, OriginAndLinearity) {
  const GeoTransform geo{40.0, -130.0, -0.018, 0.018};
  EXPECT_DOUBLE_EQ(pixel_to_geo(geo, 0, 0).lat, 40.0);
  EXPECT_DOUBLE_EQ(pixel_to_geo(geo, 0, 0).lon, -130.0);
  EXPECT_NEAR(pixel_to_geo(geo, 100, 0).lon, -130.0 + 1.8, 1e-12);
  EXPECT_NEAR(pixel_to_geo(geo, 0, 100).lat, 40.0 - 1.8, 1e-12);
}

TEST(Geo, RoundTripOfRandomPoints) {
  const GeoTransform geo{38.0, -128.0, -0.018, 0.018};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2000.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), y = u(rng);
    const LatLon ll = pixel_to_geo(geo, x, y);
    const Eigen::Vector2d back = geo_to_pixel(geo, ll.lat, ll.lon);
    worst = std::max({worst, std::abs(back.x() - x), std::abs(back.y() - y)});
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Geo, ZeroStepIsRejected) {
  EXPECT_THROW((GeoTransform{0, 0, 0.0, 0.018}.validate()), Error);
}

TEST(Frame, MissingMaskMeansAllGood) {
  const Frame f = frame_of(Grid<double>::Constant(4, 4, 3.0));
  EXPECT_EQ(corrupt_fraction(f), 0.0);
}

TEST(Frame, RejectsTinyAndMismatchedInputs) {
  EXPECT_EQ(code_of([] { frame_of(Grid<double>::Zero(1, 4)); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([] {
              make_frame(Grid<double>::Zero(4, 4), Timestamp{}, GeoTransform{}, QualityMask::Zero(3, 3));
            }),
            ErrorCode::ShapeMismatch);
}

TEST(CorruptFraction, CountsFlags) {
  QualityMask q = QualityMask::Zero(10, 10);
  q(0, 0) = 1;
  q(5, 7) = 1;
  const Frame f = make_frame(Grid<double>::Zero(10, 10), Timestamp{}, GeoTransform{}, q);
  EXPECT_DOUBLE_EQ(corrupt_fraction(f), 0.02);
  const Frame all = make_frame(Grid<double>::Zero(10, 10), Timestamp{}, GeoTransform{}, QualityMask::Ones(10, 10));
  EXPECT_DOUBLE_EQ(corrupt_fraction(all), 1.0);
}

TEST(Pgm, SixteenBitRoundTrip) {
  TempDir dir("pgm");
  Grid<std::uint16_t> s(3, 5);
  for (int i = 0; i < 15; ++i) s.data()[i] = static_cast<std::uint16_t>(i * 4000 + 7);
  write_pgm16(dir / "a.pgm", s);
  const Graymap g = read_pgm(dir / "a.pgm");
  EXPECT_EQ(g.maxval, 65535);
  EXPECT_TRUE((g.samples == s).all());
}

TEST(Pgm, ReadsPlainAsciiWithComments) {
  TempDir dir("pgm");
  std::ofstream(dir / "p2.pgm") << "P2\n# comment\n3 2\n# another\n9\n0 1 2\n3 4 9\n";
  const Graymap g = read_pgm(dir / "p2.pgm");
  ASSERT_EQ(g.samples.rows(), 2);
  ASSERT_EQ(g.samples.cols(), 3);
  EXPECT_EQ(g.samples(1, 2), 9);
  EXPECT_EQ(g.maxval, 9);
}

TEST(Pgm, MalformedInputsAreRejected) {
  TempDir dir("pgm");
  std::ofstream(dir / "bad.pgm") << "P6\n2 2\n255\n";
  EXPECT_EQ(code_of([&] { read_pgm(dir / "bad.pgm"); }), ErrorCode::MalformedRaster);
  std::ofstream(dir / "short.pgm", std::ios::binary) << "P5\n4 4\n65535\n\x01\x02";
  EXPECT_EQ(code_of([&] { read_pgm(dir / "short.pgm"); }), ErrorCode::MalformedRaster);
  EXPECT_EQ(code_of([&] { read_pgm(dir / "missing.pgm"); }), ErrorCode::Io);
}

TEST(LoadFrame, FourByFourWithoutMask) {
  TempDir dir("load");
  write_pgm16(dir / "f.pgm", Grid<std::uint16_t>::Constant(4, 4, 1000));
  write_sidecar(dir / "f.pgm.json",
                R"({"timestamp":"2023-06-01T18:00:00Z","lat0":38,"lon0":-128,"dlat":-0.018,"dlon":0.018})");
  const Frame f = load_frame(dir / "f.pgm", dir / "f.pgm.json");
  EXPECT_EQ(f.width(), 4);
  EXPECT_EQ(corrupt_fraction(f), 0.0);
  EXPECT_EQ(f.timestamp, parse_timestamp("2023-06-01T18:00:00Z"));
  EXPECT_DOUBLE_EQ(f.values(2, 3), 1000.0);
}

TEST(LoadFrame, MissingTimestampIsMissingMetadata) {
  TempDir dir("load");
  write_pgm16(dir / "f.pgm", Grid<std::uint16_t>::Constant(4, 4, 1));
  write_sidecar(dir / "f.pgm.json", R"({"lat0":38,"lon0":-128,"dlat":-0.018,"dlon":0.018})");
  EXPECT_EQ(code_of([&] { load_frame(dir / "f.pgm", dir / "f.pgm.json"); }), ErrorCode::MissingMetadata);
}

TEST(LoadFrame, MaskShapeMismatch) {
  TempDir dir("load");
  write_pgm16(dir / "f.pgm", Grid<std::uint16_t>::Constant(4, 4, 1));
  write_pgm8(dir / "m.pgm", Grid<std::uint8_t>::Zero(3, 3));
  write_sidecar(dir / "f.pgm.json",
                R"({"timestamp":"2023-06-01T18:00:00Z","lat0":38,"lon0":-128,"dlat":-0.018,"dlon":0.018,)"
                R"("quality_mask":"m.pgm"})");
  EXPECT_EQ(code_of([&] { load_frame(dir / "f.pgm", dir / "f.pgm.json"); }), ErrorCode::ShapeMismatch);
}

TEST(SaveFrame, RoundTripKeepsMaskAndGeo) {
  TempDir dir("save");
  Grid<double> v(6, 5);
  for (int i = 0; i < 30; ++i) v.data()[i] = i * 100.0;
  QualityMask q = QualityMask::Zero(6, 5);
  q(2, 3) = 1;
  const Frame f = make_frame(v, parse_timestamp("2023-06-01T18:05:00Z"), GeoTransform{10, 20, -0.5, 0.25}, q);
  save_frame(f, dir / "x.pgm");
  const Frame g = load_frame(dir / "x.pgm", dir / "x.pgm.json");
  EXPECT_TRUE((g.values == f.values).all());
  EXPECT_TRUE((g.quality == f.quality).all());
  EXPECT_EQ(g.timestamp, f.timestamp);
  EXPECT_DOUBLE_EQ(g.geo.dlon, 0.25);
}

TEST(BandDifference, Elementwise) {
  Grid<double> a(1, 2), b(1, 2);
  a << 5, 7;
  b << 2, 9;
  Grid<double> a2 = Grid<double>::Zero(2, 2), b2 = Grid<double>::Zero(2, 2);
  a2.row(0) = a.row(0);
  b2.row(0) = b.row(0);
  const Frame d = band_difference(frame_of(a2), frame_of(b2));
  EXPECT_EQ(d.values(0, 0), 3.0);
  EXPECT_EQ(d.values(0, 1), -2.0);
}

TEST(BandDifference, IdenticalInputsGiveZeroAndAntisymmetry) {
  const Grid<double> a = oracle::white_noise(8, 9, 1) * 1000.0;
  const Grid<double> b = oracle::white_noise(8, 9, 2) * 1000.0;
  EXPECT_TRUE((band_difference(frame_of(a), frame_of(a)).values == 0.0).all());
  const Frame ab = band_difference(frame_of(a), frame_of(b));
  const Frame ba = band_difference(frame_of(b), frame_of(a));
  EXPECT_TRUE((ab.values == -ba.values).all());
}

TEST(BandDifference, PropagatesCorruptFlags) {
  QualityMask q = QualityMask::Zero(3, 3);
  q(1, 2) = 1;
  const Frame c06 = frame_of(Grid<double>::Ones(3, 3));
  const Frame c07 = make_frame(Grid<double>::Ones(3, 3), c06.timestamp, c06.geo, q);
  const Frame d = band_difference(c06, c07);
  EXPECT_EQ(d.quality(1, 2), 1);
  EXPECT_EQ(d.quality.cast<int>().sum(), 1);
}

TEST(BandDifference, MismatchedTimesOrShapes) {
  const Frame a = frame_of(Grid<double>::Ones(3, 3), "2023-06-01T18:00:00Z");
  const Frame b = frame_of(Grid<double>::Ones(3, 3), "2023-06-01T18:05:00Z");
  EXPECT_EQ(code_of([&] { band_difference(a, b); }), ErrorCode::TimeMismatch);
  const Frame c = frame_of(Grid<double>::Ones(3, 4));
  EXPECT_EQ(code_of([&] { band_difference(a, c); }), ErrorCode::ShapeMismatch);
}

TEST(Equalize, ConstantFrameMapsToMax) {
  const Frame e = equalize_histogram(frame_of(Grid<double>::Constant(5, 5, 42.0)));
  EXPECT_TRUE((e.values == 65535.0).all());
}

TEST(Equalize, TwoValuedFrame) {
  Grid<double> v(4, 5);
  for (int i = 0; i < 20; ++i) v.data()[i] = i % 2 ? 90.0 : 10.0;
  const Frame e = equalize_histogram(frame_of(v));
  for (int i = 0; i < 20; ++i) EXPECT_EQ(e.values.data()[i], i % 2 ? 65535.0 : 32768.0);
}

TEST(Equalize, MonotoneOverGoodPixelsAndIgnoresCorrupt) {
  const Grid<double> v = oracle::white_noise(20, 20, 3) * 5000.0 - 1000.0;
  QualityMask q = QualityMask::Zero(20, 20);
  q(3, 3) = q(10, 12) = 1;
  const Frame e = equalize_histogram(make_frame(v, Timestamp{}, GeoTransform{}, q));
  EXPECT_EQ(e.values(3, 3), 0.0);
  EXPECT_EQ(e.quality(10, 12), 1);
  for (int i = 0; i < 400; ++i) {
    for (int j = 0; j < 400; ++j) {
      if (q.data()[i] || q.data()[j]) continue;
      if (v.data()[i] <= v.data()[j]) ASSERT_LE(e.values.data()[i], e.values.data()[j]);
    }
  }
  EXPECT_GE(e.values.minCoeff(), 0.0);
  EXPECT_LE(e.values.maxCoeff(), 65535.0);
}

TEST(Equalize, IdempotentWithinOneLevel) {
  const Grid<double> v = (oracle::smooth_noise(32, 32, 4, 2.0) * 3000.0).round();
  const Frame once = equalize_histogram(frame_of(v));
  const Frame twice = equalize_histogram(once);
  EXPECT_LE((once.values - twice.values).abs().maxCoeff(), 1.0);
}

TEST(Equalize, AllCorruptFails) {
  const Frame f = make_frame(Grid<double>::Zero(3, 3), Timestamp{}, GeoTransform{}, QualityMask::Ones(3, 3));
  EXPECT_EQ(code_of([&] { equalize_histogram(f); }), ErrorCode::AllCorrupt);
}

TEST(Manifest, ReadsInOrderWithCadence) {
  TempDir dir("manifest");
  std::vector<std::filesystem::path> rasters;
  for (int k = 0; k < 4; ++k) {
    const std::string name = "f" + std::to_string(k) + ".pgm";
    const Frame f = make_frame(Grid<double>::Constant(3, 3, k), add_seconds(parse_timestamp("2023-06-01T18:00:00Z"), 300.0 * k),
                               GeoTransform{});
    save_frame(f, dir / name);
    rasters.push_back(dir / name);
  }
  write_manifest(dir / "manifest.txt", rasters);
  const SequenceManifest m = read_manifest(dir / "manifest.txt");
  ASSERT_EQ(m.entries.size(), 4u);
  EXPECT_DOUBLE_EQ(m.nominal_cadence_s, 300.0);
  EXPECT_EQ(m.entries[2].raster, dir / "f2.pgm");
  EXPECT_EQ(scenes::slurp(dir / "manifest.txt"), "f0.pgm\nf1.pgm\nf2.pgm\nf3.pgm\n");
}

TEST(Manifest, OutOfOrderTimestampsFail) {
  TempDir dir("manifest");
  save_frame(frame_of(Grid<double>::Zero(3, 3), "2023-06-01T18:05:00Z"), dir / "a.pgm");
  save_frame(frame_of(Grid<double>::Zero(3, 3), "2023-06-01T18:00:00Z"), dir / "b.pgm");
  std::ofstream(dir / "m.txt") << "a.pgm\nb.pgm\n";
  EXPECT_EQ(code_of([&] { read_manifest(dir / "m.txt"); }), ErrorCode::TimestampOrder);
  std::ofstream(dir / "n.txt") << "a.pgm\nmissing.pgm\n";
  EXPECT_EQ(code_of([&] { read_manifest(dir / "n.txt"); }), ErrorCode::Io);
}
