#pragma once

#include "shiptrack/box.hpp"
#include "shiptrack/common.hpp"
#include "shiptrack/raster.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace shiptrack::detect {

struct DetectorParams {
  int n = 3;               ///< tensor window half extent; the window is (2n+1)^2
  int m = 3;               ///< NMS window size (odd)
  double t_q_frac = 0.20;  ///< threshold as a fraction of the maximum quality
  int max_features = 50;

  void validate() const;
};

/// Summed gradient outer products at one pixel.
struct StructureTensor {
  double a = 0.0;  ///< sum gx^2
  double b = 0.0;  ///< sum gx*gy
  double c = 0.0;  ///< sum gy^2
};

struct FeaturePoint {
  double x = 0.0;
  double y = 0.0;
  double quality = 0.0;
};

template <typename Scalar>
struct Gradients {
  Grid<Scalar> gx;
  Grid<Scalar> gy;
};

/// Smaller eigenvalue of [[a, b], [b, c]].
template <typename Scalar>
Scalar min_eigenvalue(Scalar a, Scalar b, Scalar c) {
  const Scalar diff = a - c;
  const Scalar lambda = ((a + c) - std::sqrt(diff * diff + Scalar(4) * b * b)) / Scalar(2);
  return lambda > Scalar(0) ? lambda : Scalar(0);
}

inline double min_eigenvalue(const StructureTensor& t) { return min_eigenvalue(t.a, t.b, t.c); }

/// 3x3 Sobel responses scaled by 1/8, so a unit ramp has gradient 1.
/// Border samples replicate the nearest edge pixel.
template <typename Derived>
Gradients<typename Derived::Scalar> sobel_gradients(const Eigen::ArrayBase<Derived>& image) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index rows = image.rows();
  const Eigen::Index cols = image.cols();
  if (rows < 3 || cols < 3) fail(ErrorCode::FrameTooSmall, "gradients need at least 3x3 pixels");

  const Grid<Scalar> img = image.derived();
  Gradients<Scalar> out{Grid<Scalar>(rows, cols), Grid<Scalar>(rows, cols)};
  for (Eigen::Index y = 0; y < rows; ++y) {
    const Eigen::Index ym = y > 0 ? y - 1 : 0;
    const Eigen::Index yp = y + 1 < rows ? y + 1 : rows - 1;
    for (Eigen::Index x = 0; x < cols; ++x) {
      const Eigen::Index xm = x > 0 ? x - 1 : 0;
      const Eigen::Index xp = x + 1 < cols ? x + 1 : cols - 1;
      const Scalar right = img(ym, xp) + Scalar(2) * img(y, xp) + img(yp, xp);
      const Scalar left = img(ym, xm) + Scalar(2) * img(y, xm) + img(yp, xm);
      const Scalar below = img(yp, xm) + Scalar(2) * img(yp, x) + img(yp, xp);
      const Scalar above = img(ym, xm) + Scalar(2) * img(ym, x) + img(ym, xp);
      out.gx(y, x) = (right - left) / Scalar(8);
      out.gy(y, x) = (below - above) / Scalar(8);
    }
  }
  return out;
}

Gradients<double> image_gradients(const raster::Frame& frame);

namespace detail {

// Sum over a (2r+1)^2 window, evaluated only where the window fits inside
// [lo, hi] on both axes. Direct summation keeps results bit-stable.
template <typename Scalar>
Grid<Scalar> window_sum(const Grid<Scalar>& src, int r, Eigen::Index lo_x, Eigen::Index hi_x,
                        Eigen::Index lo_y, Eigen::Index hi_y) {
  Grid<Scalar> rowsum = Grid<Scalar>::Zero(src.rows(), src.cols());
  for (Eigen::Index y = lo_y - r; y <= hi_y + r; ++y) {
    for (Eigen::Index x = lo_x; x <= hi_x; ++x) {
      Scalar s(0);
      for (int k = -r; k <= r; ++k) s += src(y, x + k);
      rowsum(y, x) = s;
    }
  }
  Grid<Scalar> out = Grid<Scalar>::Zero(src.rows(), src.cols());
  for (Eigen::Index y = lo_y; y <= hi_y; ++y) {
    for (Eigen::Index x = lo_x; x <= hi_x; ++x) {
      Scalar s(0);
      for (int k = -r; k <= r; ++k) s += rowsum(y + k, x);
      out(y, x) = s;
    }
  }
  return out;
}

}  // namespace detail

/// Per-pixel minimum eigenvalue of the structure tensor summed over the
/// (2n+1)^2 window. Pixels closer than n+1 to the border, and pixels whose
/// window touches a corrupt flag, get quality 0.
template <typename Derived>
Grid<typename Derived::Scalar> quality_map(const Eigen::ArrayBase<Derived>& image, const DetectorParams& params,
                                           const QualityMask* corrupt = nullptr) {
  using Scalar = typename Derived::Scalar;
  params.validate();
  const Eigen::Index rows = image.rows();
  const Eigen::Index cols = image.cols();
  Grid<Scalar> q = Grid<Scalar>::Zero(rows, cols);
  const int margin = params.n + 1;
  if (rows < 2 * margin + 1 || cols < 2 * margin + 1) return q;

  const Gradients<Scalar> g = sobel_gradients(image);
  const Grid<Scalar> gxx = g.gx * g.gx;
  const Grid<Scalar> gxy = g.gx * g.gy;
  const Grid<Scalar> gyy = g.gy * g.gy;
  const Eigen::Index lo_x = margin, hi_x = cols - 1 - margin;
  const Eigen::Index lo_y = margin, hi_y = rows - 1 - margin;
  const Grid<Scalar> a = detail::window_sum(gxx, params.n, lo_x, hi_x, lo_y, hi_y);
  const Grid<Scalar> b = detail::window_sum(gxy, params.n, lo_x, hi_x, lo_y, hi_y);
  const Grid<Scalar> c = detail::window_sum(gyy, params.n, lo_x, hi_x, lo_y, hi_y);

  Grid<Scalar> bad;
  if (corrupt != nullptr && (*corrupt != 0).any()) {
    bad = detail::window_sum(Grid<Scalar>((*corrupt != 0).template cast<Scalar>()), params.n, lo_x, hi_x, lo_y,
                             hi_y);
  }
  for (Eigen::Index y = lo_y; y <= hi_y; ++y) {
    for (Eigen::Index x = lo_x; x <= hi_x; ++x) {
      if (bad.size() != 0 && bad(y, x) > Scalar(0)) continue;
      q(y, x) = min_eigenvalue(a(y, x), b(y, x), c(y, x));
    }
  }
  return q;
}

Grid<double> quality_map(const raster::Frame& frame, const DetectorParams& params);

/// Threshold at t_q_frac * max(q), keep strict maxima of the centered m x m
/// window (equal values: the first in row-major order wins), sort by quality
/// descending with row-major order among equals, and truncate.
template <typename Derived>
std::vector<FeaturePoint> select_features(const Eigen::ArrayBase<Derived>& quality, const DetectorParams& params) {
  params.validate();
  const auto& q = quality.derived();
  const double q_max = static_cast<double>(q.maxCoeff());
  if (!(q_max > 0.0)) return {};
  const double t_q = params.t_q_frac * q_max;
  const int half = params.m / 2;
  const Eigen::Index rows = q.rows();
  const Eigen::Index cols = q.cols();

  std::vector<FeaturePoint> kept;
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      const double v = static_cast<double>(q(y, x));
      if (v < t_q || v <= 0.0) continue;
      bool is_max = true;
      for (Eigen::Index yy = std::max<Eigen::Index>(0, y - half); is_max && yy <= std::min(rows - 1, y + half); ++yy) {
        for (Eigen::Index xx = std::max<Eigen::Index>(0, x - half); xx <= std::min(cols - 1, x + half); ++xx) {
          if (yy == y && xx == x) continue;
          const double other = static_cast<double>(q(yy, xx));
          const bool earlier = yy < y || (yy == y && xx < x);
          if (other > v || (other == v && earlier)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) kept.push_back({static_cast<double>(x), static_cast<double>(y), v});
    }
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const FeaturePoint& l, const FeaturePoint& r) { return l.quality > r.quality; });
  if (kept.size() > static_cast<std::size_t>(params.max_features)) kept.resize(params.max_features);
  return kept;
}

/// Detection restricted to the pixels of a box: quality is computed on a
/// crop with enough margin that in-box pixels are unaffected by the crop, and
/// t_q is relative to the maximum inside the box. Returns frame coordinates.
std::vector<FeaturePoint> detect_in_box(const raster::Frame& frame, const TrackingBox& box,
                                        const DetectorParams& params);

}  // namespace shiptrack::detect
