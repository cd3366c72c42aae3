#pragma once

// Independent reference implementations used only by the tests.

#include "shiptrack/common.hpp"
#include "shiptrack/detect.hpp"

#include <cstdint>
#include <vector>

namespace oracle {

using shiptrack::Grid;

/// Solar zenith from the NOAA spreadsheet series (Meeus), degrees.
double noaa_zenith(double lat, double lon, shiptrack::Timestamp t);

/// Smallest eigenvalue of [[a, b], [b, c]] via a general eigensolver.
double eig_min(double a, double b, double c);

/// Structure tensor and min eigenvalue at every pixel by direct summation.
Grid<double> quality_brute(const Grid<double>& image, int n);

/// Threshold + m x m NMS by exhaustive enumeration of every window.
std::vector<shiptrack::detect::FeaturePoint> select_brute(const Grid<double>& q, double t_q_frac, int m,
                                                          int max_features);

/// Bilinear value by interpolating along x on two rows, then along y.
double two_pass_linear(const Grid<double>& g, double x, double y);

/// Integer shift in [-range, range]^2 minimizing the SSD between the window
/// of I at c and the window of J at c + shift.
Eigen::Vector2i ssd_argmin(const Grid<double>& I, const Grid<double>& J, int cx, int cy, int w, int range);

/// Periodic shift: out(y, x) = in(y - dy, x - dx).
Grid<double> roll(const Grid<double>& in, int dx, int dy);

/// Uniform white noise in [0, 1).
Grid<double> white_noise(int rows, int cols, std::uint64_t seed);

/// White noise blurred with a Gaussian of the given sigma (wrap-around), then
/// rescaled to [0, 1].
Grid<double> smooth_noise(int rows, int cols, std::uint64_t seed, double sigma);

/// out(y, x) = in(y - dy, x - dx) by bilinear resampling; edges clamp.
Grid<double> shift_bilinear(const Grid<double>& in, double dx, double dy);

}  // namespace oracle
