#pragma once

#include "shiptrack/common.hpp"
#include "shiptrack/detect.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

namespace shiptrack::flow {

struct FlowParams {
  int omega_x = 7;
  int omega_y = 7;
  int pyramid_levels = 3;
  int max_iterations = 10;
  double epsilon_stop = 0.03;
  /// Singularity floor on lambda_min(G); defaults to 1e-3 * window area, in
  /// squared units of intensities scaled to [0, 1].
  std::optional<double> min_gradient_eig;

  double singular_threshold() const {
    return min_gradient_eig.value_or(1e-3 * (2 * omega_x + 1) * (2 * omega_y + 1));
  }

  void validate() const {
    if (omega_x < 1 || omega_y < 1) fail(ErrorCode::InvalidArgument, "flow window half extent must be >= 1");
    if (pyramid_levels < 1) fail(ErrorCode::InvalidArgument, "pyramid_levels must be >= 1");
    if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
    if (!(epsilon_stop > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon_stop must be > 0");
  }

  /// Smallest top-level extent that still fits one flow window.
  int min_top_extent() const { return 2 * std::max(omega_x, omega_y) + 3; }
};

/// Boundary rule for the pyramid low-pass. Reflect101 mirrors without
/// repeating the edge sample; Periodic wraps, and with even dimensions keeps
/// the level mean exactly (each sample contributes 1/2 to the decimated sum).
enum class PyramidBorder { Reflect101, Periodic };

template <typename Scalar>
struct ImagePyramid {
  std::vector<Grid<Scalar>> levels;                     ///< level 0 = full resolution
  std::vector<detect::Gradients<Scalar>> gradients;     ///< Sobel/8 per level

  int size() const { return static_cast<int>(levels.size()); }
};

namespace detail {

inline Eigen::Index border_index(Eigen::Index i, Eigen::Index n, PyramidBorder border) {
  if (border == PyramidBorder::Periodic) {
    i %= n;
    return i < 0 ? i + n : i;
  }
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

}  // namespace detail

/// One pyramid step: separable [1 4 6 4 1]/16 low-pass, then keep even
/// rows and columns. Output size is ceil(n/2) on each axis.
template <typename Scalar>
Grid<Scalar> pyr_down(const Grid<Scalar>& src, PyramidBorder border = PyramidBorder::Reflect101) {
  const Eigen::Index rows = src.rows();
  const Eigen::Index cols = src.cols();
  if (rows < 3 || cols < 3) fail(ErrorCode::FrameTooSmall, "pyramid level too small to downsample");
  static constexpr Scalar w[5] = {Scalar(1) / 16, Scalar(4) / 16, Scalar(6) / 16, Scalar(4) / 16, Scalar(1) / 16};
  const Eigen::Index out_rows = (rows + 1) / 2;
  const Eigen::Index out_cols = (cols + 1) / 2;

  Grid<Scalar> horizontal(rows, out_cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index ox = 0; ox < out_cols; ++ox) {
      Scalar s(0);
      for (int k = -2; k <= 2; ++k) s += w[k + 2] * src(y, detail::border_index(2 * ox + k, cols, border));
      horizontal(y, ox) = s;
    }
  }
  Grid<Scalar> out(out_rows, out_cols);
  for (Eigen::Index oy = 0; oy < out_rows; ++oy) {
    for (Eigen::Index ox = 0; ox < out_cols; ++ox) {
      Scalar s(0);
      for (int k = -2; k <= 2; ++k) s += w[k + 2] * horizontal(detail::border_index(2 * oy + k, rows, border), ox);
      out(oy, ox) = s;
    }
  }
  return out;
}

template <typename Derived>
ImagePyramid<typename Derived::Scalar> build_pyramid(const Eigen::ArrayBase<Derived>& image, int levels,
                                                     int min_top_extent = 3,
                                                     PyramidBorder border = PyramidBorder::Reflect101) {
  using Scalar = typename Derived::Scalar;
  if (levels < 1) fail(ErrorCode::InvalidArgument, "pyramid needs at least one level");
  Eigen::Index top_rows = image.rows();
  Eigen::Index top_cols = image.cols();
  for (int l = 1; l < levels; ++l) {
    top_rows = (top_rows + 1) / 2;
    top_cols = (top_cols + 1) / 2;
  }
  if (top_rows < min_top_extent || top_cols < min_top_extent) {
    fail(ErrorCode::FrameTooSmall, "frame " + std::to_string(image.cols()) + "x" + std::to_string(image.rows()) +
                                       " too small for " + std::to_string(levels) + " pyramid levels");
  }
  ImagePyramid<Scalar> pyr;
  pyr.levels.reserve(levels);
  pyr.levels.push_back(image.derived());
  for (int l = 1; l < levels; ++l) pyr.levels.push_back(pyr_down(pyr.levels.back(), border));
  for (const auto& level : pyr.levels) pyr.gradients.push_back(detect::sobel_gradients(level));
  return pyr;
}

namespace detail {

// Caller guarantees 0 <= x <= cols-1 and 0 <= y <= rows-1.
template <typename Derived>
typename Derived::Scalar bilinear_unchecked(const Eigen::ArrayBase<Derived>& g, double x, double y) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index cols = g.cols();
  const Eigen::Index rows = g.rows();
  Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(x));
  Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(y));
  if (x0 >= cols - 1) x0 = cols - 2;
  if (y0 >= rows - 1) y0 = rows - 2;
  const Scalar fx = static_cast<Scalar>(x - static_cast<double>(x0));
  const Scalar fy = static_cast<Scalar>(y - static_cast<double>(y0));
  const auto& d = g.derived();
  const Scalar top = d(y0, x0) + fx * (d(y0, x0 + 1) - d(y0, x0));
  const Scalar bottom = d(y0 + 1, x0) + fx * (d(y0 + 1, x0 + 1) - d(y0 + 1, x0));
  return top + fy * (bottom - top);
}

}  // namespace detail

/// Bilinear interpolation; (x, y) must lie in [0, W-1] x [0, H-1].
template <typename Derived>
typename Derived::Scalar sample_bilinear(const Eigen::ArrayBase<Derived>& grid, double x, double y) {
  if (grid.rows() < 2 || grid.cols() < 2) fail(ErrorCode::FrameTooSmall, "bilinear sampling needs a 2x2 grid");
  if (!(x >= 0.0 && y >= 0.0 && x <= static_cast<double>(grid.cols() - 1) &&
        y <= static_cast<double>(grid.rows() - 1))) {
    fail(ErrorCode::OutOfBounds, "sample point outside grid");
  }
  return detail::bilinear_unchecked(grid, x, y);
}

struct FlowVector {
  double dx = 0.0;
  double dy = 0.0;
  double residual = 0.0;          ///< final SSD at the accepted displacement
  double initial_residual = 0.0;  ///< SSD at the initial guess (finest level for track_feature)
  int iterations_used = 0;
};

enum class LostReason { OutOfBounds, Singular, Diverged };

inline const char* to_string(LostReason reason) {
  switch (reason) {
    case LostReason::OutOfBounds: return "OutOfBounds";
    case LostReason::Singular: return "Singular";
    case LostReason::Diverged: return "Diverged";
  }
  return "Unknown";
}

class TrackOutcome {
 public:
  TrackOutcome(FlowVector v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  TrackOutcome(LostReason r) : value_(r) {}  // NOLINT(google-explicit-constructor)

  bool ok() const { return std::holds_alternative<FlowVector>(value_); }
  const FlowVector& flow() const { return std::get<FlowVector>(value_); }
  LostReason reason() const { return std::get<LostReason>(value_); }

 private:
  std::variant<FlowVector, LostReason> value_;
};

namespace detail {

inline bool window_inside(Eigen::Index rows, Eigen::Index cols, const Eigen::Vector2d& c, int wx, int wy) {
  return c.x() - wx >= 0.0 && c.y() - wy >= 0.0 && c.x() + wx <= static_cast<double>(cols - 1) &&
         c.y() + wy <= static_cast<double>(rows - 1);
}

}  // namespace detail

/// Iterative Lucas-Kanade at a single level. G uses gradients of I only, so
/// it is built once; each iteration solves G*delta = sum(grad I * (I - J(x+d)))
/// and accepts the step only if the SSD does not increase, halving up to four
/// times; a step that still fails ends the iteration at the current d.
/// Stops when |delta| < epsilon_stop. Diverged means |d| ran past four
/// window diagonals.
template <typename Scalar>
TrackOutcome lk_refine(const Grid<Scalar>& I, const detect::Gradients<Scalar>& grad_I, const Grid<Scalar>& J,
                       const Eigen::Vector2d& center, const Eigen::Vector2d& guess, const FlowParams& params) {
  const int wx = params.omega_x;
  const int wy = params.omega_y;
  if (!detail::window_inside(I.rows(), I.cols(), center, wx, wy)) return LostReason::OutOfBounds;

  const Eigen::Index count = static_cast<Eigen::Index>(2 * wx + 1) * (2 * wy + 1);
  Eigen::VectorXd iv(count), gx(count), gy(count);
  Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
  {
    Eigen::Index k = 0;
    for (int j = -wy; j <= wy; ++j) {
      for (int i = -wx; i <= wx; ++i, ++k) {
        const double px = center.x() + i;
        const double py = center.y() + j;
        iv(k) = static_cast<double>(detail::bilinear_unchecked(I, px, py));
        gx(k) = static_cast<double>(detail::bilinear_unchecked(grad_I.gx, px, py));
        gy(k) = static_cast<double>(detail::bilinear_unchecked(grad_I.gy, px, py));
      }
    }
    G(0, 0) = gx.squaredNorm();
    G(0, 1) = G(1, 0) = gx.dot(gy);
    G(1, 1) = gy.squaredNorm();
  }
  if (detect::min_eigenvalue(G(0, 0), G(0, 1), G(1, 1)) < params.singular_threshold()) return LostReason::Singular;
  const Eigen::Matrix2d G_inv = G.inverse();

  // Residual and right-hand side at displacement d; false when J's window exits.
  auto evaluate = [&](const Eigen::Vector2d& d, double& residual, Eigen::Vector2d& b) {
    const Eigen::Vector2d shifted = center + d;
    if (!detail::window_inside(J.rows(), J.cols(), shifted, wx, wy)) return false;
    residual = 0.0;
    b.setZero();
    Eigen::Index k = 0;
    for (int j = -wy; j <= wy; ++j) {
      for (int i = -wx; i <= wx; ++i, ++k) {
        const double e = iv(k) - static_cast<double>(detail::bilinear_unchecked(J, shifted.x() + i, shifted.y() + j));
        residual += e * e;
        b.x() += gx(k) * e;
        b.y() += gy(k) * e;
      }
    }
    return true;
  };

  const double diverge_limit = 4.0 * std::hypot(2.0 * wx + 1.0, 2.0 * wy + 1.0);
  Eigen::Vector2d d = guess;
  double residual = 0.0;
  Eigen::Vector2d b;
  if (!evaluate(d, residual, b)) return LostReason::OutOfBounds;

  FlowVector result;
  result.initial_residual = residual;
  int iteration = 0;
  while (iteration < params.max_iterations) {
    ++iteration;
    const Eigen::Vector2d delta = G_inv * b;
    const bool small = delta.norm() < params.epsilon_stop;

    Eigen::Vector2d step = delta;
    bool accepted = false;
    double trial_residual = 0.0;
    Eigen::Vector2d trial_b;
    for (int halving = 0; halving <= 4; ++halving) {
      if (!evaluate(d + step, trial_residual, trial_b)) return LostReason::OutOfBounds;
      if (trial_residual <= residual) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    // No halving lowers the SSD: d already sits at the best point the
    // linearized model can reach.
    if (!accepted) break;
    d += step;
    residual = trial_residual;
    b = trial_b;
    if (d.norm() > diverge_limit) return LostReason::Diverged;
    if (small) break;
  }

  result.dx = d.x();
  result.dy = d.y();
  result.residual = residual;
  result.iterations_used = iteration;
  return result;
}

/// Convenience overload computing the gradients of I.
template <typename Scalar>
TrackOutcome lk_refine(const Grid<Scalar>& I, const Grid<Scalar>& J, const Eigen::Vector2d& center,
                       const Eigen::Vector2d& guess, const FlowParams& params) {
  return lk_refine(I, detect::sobel_gradients(I), J, center, guess, params);
}

/// Coarse-to-fine tracking: start with d = 0 at the top level, refine, double
/// when descending, and finish at full resolution.
template <typename Scalar>
TrackOutcome track_feature(const ImagePyramid<Scalar>& from, const ImagePyramid<Scalar>& to,
                           const Eigen::Vector2d& point, const FlowParams& params) {
  const int levels = std::min({params.pyramid_levels, from.size(), to.size()});
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  int iterations = 0;
  FlowVector last;
  for (int l = levels - 1; l >= 0; --l) {
    const double scale = std::ldexp(1.0, -l);
    const TrackOutcome out = lk_refine(from.levels[l], from.gradients[l], to.levels[l], point * scale, d, params);
    if (!out.ok()) return out;
    last = out.flow();
    iterations += last.iterations_used;
    d = Eigen::Vector2d(last.dx, last.dy);
    if (l > 0) d *= 2.0;
  }
  last.iterations_used = iterations;
  return last;
}

}  // namespace shiptrack::flow
