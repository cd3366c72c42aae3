#include "oracles.hpp"
#include "shiptrack/flow.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace shiptrack;
using namespace shiptrack::flow;

namespace {

Grid<double> texture(int rows, int cols, std::uint64_t seed) { return oracle::smooth_noise(rows, cols, seed, 1.5); }

Eigen::Vector2d tracked(const TrackOutcome& out) {
  EXPECT_TRUE(out.ok()) << (out.ok() ? "" : to_string(out.reason()));
  return out.ok() ? Eigen::Vector2d(out.flow().dx, out.flow().dy) : Eigen::Vector2d(1e9, 1e9);
}

}  // namespace

TEST(Bilinear, MatchesTwoPassInterpolation) {
  const Grid<double> g = oracle::white_noise(12, 17, 3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.0, 16.0), uy(0.0, 11.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = ux(rng), y = uy(rng);
    ASSERT_NEAR(sample_bilinear(g, x, y), oracle::two_pass_linear(g, x, y), 1e-12);
  }
  EXPECT_DOUBLE_EQ(sample_bilinear(g, 16.0, 11.0), g(11, 16));
  EXPECT_DOUBLE_EQ(sample_bilinear(g, 3.0, 4.0), g(4, 3));
}

TEST(Bilinear, OutsideTheGridThrows) {
  const Grid<double> g = Grid<double>::Zero(4, 4);
  EXPECT_THROW(sample_bilinear(g, -0.01, 1.0), Error);
  EXPECT_THROW(sample_bilinear(g, 1.0, 3.01), Error);
}

TEST(Pyramid, LevelSizesAndConstantImage) {
  const auto pyr = build_pyramid(Grid<double>::Constant(37, 50, 0.25), 3);
  ASSERT_EQ(pyr.size(), 3);
  EXPECT_EQ(pyr.levels[1].rows(), 19);
  EXPECT_EQ(pyr.levels[1].cols(), 25);
  EXPECT_EQ(pyr.levels[2].rows(), 10);
  EXPECT_EQ(pyr.levels[2].cols(), 13);
  for (const auto& l : pyr.levels) EXPECT_NEAR((l - 0.25).abs().maxCoeff(), 0.0, 1e-15);
  for (const auto& g : pyr.gradients) EXPECT_NEAR(g.gx.abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Pyramid, PeriodicBorderKeepsTheMean) {
  const Grid<double> img = oracle::white_noise(32, 48, 8);
  const Grid<double> down = pyr_down(img, PyramidBorder::Periodic);
  EXPECT_NEAR(down.mean(), img.mean(), 1e-12);
}

TEST(Pyramid, TooSmallForLevels) {
  try {
    build_pyramid(Grid<double>::Zero(40, 40), 4, 17);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FrameTooSmall);
  }
  EXPECT_NO_THROW(build_pyramid(Grid<double>::Zero(40, 40), 2, 17));
}

TEST(LucasKanade, RecoversSubpixelShift) {
  const Grid<double> I = texture(96, 96, 2);
  FlowParams p;
  p.pyramid_levels = 1;
  for (const auto& [dx, dy] : std::vector<std::pair<double, double>>{{0.3, -0.2}, {-0.7, 0.45}, {1.2, 0.8}}) {
    const Grid<double> J = oracle::shift_bilinear(I, dx, dy);
    const Eigen::Vector2d d = tracked(lk_refine(I, J, {48.0, 48.0}, Eigen::Vector2d::Zero(), p));
    EXPECT_NEAR(d.x(), dx, 0.05);
    EXPECT_NEAR(d.y(), dy, 0.05);
  }
}

TEST(LucasKanade, IdenticalImagesGiveZeroFlow) {
  const Grid<double> I = texture(64, 64, 3);
  const auto out = lk_refine(I, I, {30.0, 30.0}, Eigen::Vector2d::Zero(), FlowParams{});
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.flow().dx, 0.0);
  EXPECT_EQ(out.flow().dy, 0.0);
  EXPECT_EQ(out.flow().residual, 0.0);
}

TEST(LucasKanade, ResidualNeverIncreases) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Grid<double> I = texture(80, 80, seed);
    const Grid<double> J = oracle::shift_bilinear(I, 1.7, -1.1);
    const auto out = lk_refine(I, J, {40.0, 40.0}, Eigen::Vector2d::Zero(), FlowParams{});
    if (!out.ok()) continue;
    EXPECT_LE(out.flow().residual, out.flow().initial_residual);
  }
}

TEST(LucasKanade, FlatWindowIsSingular) {
  const Grid<double> I = Grid<double>::Constant(40, 40, 0.5);
  const auto out = lk_refine(I, I, {20.0, 20.0}, Eigen::Vector2d::Zero(), FlowParams{});
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.reason(), LostReason::Singular);
}

TEST(LucasKanade, ApertureProblemIsSingular) {
  Grid<double> I(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) I(y, x) = 0.5 + 0.4 * std::sin(x * 0.5);
  const auto out = lk_refine(I, I, {20.0, 20.0}, Eigen::Vector2d::Zero(), FlowParams{});
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.reason(), LostReason::Singular);
}

TEST(LucasKanade, WindowOutsideFrame) {
  const Grid<double> I = texture(40, 40, 4);
  const auto out = lk_refine(I, I, {3.0, 20.0}, Eigen::Vector2d::Zero(), FlowParams{});
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.reason(), LostReason::OutOfBounds);
  const auto far = lk_refine(I, I, {20.0, 20.0}, Eigen::Vector2d(30.0, 0.0), FlowParams{});
  ASSERT_FALSE(far.ok());
  EXPECT_EQ(far.reason(), LostReason::OutOfBounds);
}

TEST(LucasKanade, AgreesWithIntegerSsdSearch) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> shift(-3, 3);
  FlowParams p;
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const Grid<double> I = texture(96, 96, seed);
    const int sx = shift(rng), sy = shift(rng);
    const Grid<double> J = oracle::roll(I, sx, sy);
    const auto pyr_i = build_pyramid(I, 3, p.min_top_extent());
    const auto pyr_j = build_pyramid(J, 3, p.min_top_extent());
    const Eigen::Vector2d d = tracked(track_feature(pyr_i, pyr_j, {48.0, 48.0}, p));
    const Eigen::Vector2i ref = oracle::ssd_argmin(I, J, 48, 48, 7, 4);
    EXPECT_EQ(static_cast<int>(std::lround(d.x())), ref.x()) << "seed " << seed;
    EXPECT_EQ(static_cast<int>(std::lround(d.y())), ref.y()) << "seed " << seed;
  }
}

TEST(Pyramidal, TenPixelShiftNeedsLevels) {
  const Grid<double> I = texture(128, 128, 7);
  const Grid<double> J = oracle::roll(I, 10, 0);
  FlowParams p;
  const auto pyr_i = build_pyramid(I, 3, p.min_top_extent());
  const auto pyr_j = build_pyramid(J, 3, p.min_top_extent());
  const Eigen::Vector2d d = tracked(track_feature(pyr_i, pyr_j, {60.0, 64.0}, p));
  EXPECT_NEAR(d.x(), 10.0, 0.1);
  EXPECT_NEAR(d.y(), 0.0, 0.1);

  FlowParams single = p;
  single.pyramid_levels = 1;
  const auto out = track_feature(pyr_i, pyr_j, {60.0, 64.0}, single);
  if (out.ok()) EXPECT_GT(std::hypot(out.flow().dx - 10.0, out.flow().dy), 1.0);
}

TEST(FlowParams, Validation) {
  FlowParams p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_DOUBLE_EQ(p.singular_threshold(), 0.225);
  p.pyramid_levels = 0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.epsilon_stop = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.min_gradient_eig = 2.0;
  EXPECT_DOUBLE_EQ(p.singular_threshold(), 2.0);
}
