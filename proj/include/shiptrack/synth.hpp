#pragma once

#include "shiptrack/box.hpp"
#include "shiptrack/raster.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

namespace shiptrack::synth {

/// Constant translation, px per frame.
struct UniformFlow {
  double u = 0.0;
  double v = 0.0;
};

/// Rigid rotation about (cx, cy), omega rad per frame (counterclockwise in
/// x-right, y-down pixel coordinates when omega > 0 means +x toward +y).
struct RotationFlow {
  double cx = 0.0;
  double cy = 0.0;
  double omega = 0.0;
};

/// Horizontal shear: u = rate * (y - y0) px per frame, v = 0.
struct ShearFlow {
  double rate = 0.0;
  double y0 = 0.0;
};

using FlowSpec = std::variant<UniformFlow, RotationFlow, ShearFlow>;

/// Where the material point at p in frame 0 sits in frame k (k may be fractional).
Eigen::Vector2d flow_forward(const FlowSpec& flow, const Eigen::Vector2d& p, double k);
/// Frame-0 origin of the material point at q in frame k.
Eigen::Vector2d flow_inverse(const FlowSpec& flow, const Eigen::Vector2d& q, double k);

struct TextureSpec {
  std::uint64_t seed = 1;
  double correlation_length = 12.0;  ///< lattice spacing of the coarsest octave, px
  int octaves = 3;
  double base = 0.05;      ///< brightness floor on a [0, 1] scale
  double amplitude = 0.5;  ///< texture contrast on a [0, 1] scale
};

/// Continuous texture value in [0, 1] at material coordinates.
double texture_value(const TextureSpec& tex, double x, double y);

/// A bright line segment in frame-0 material coordinates with a Gaussian
/// cross-section. Its amplitude ramps linearly to zero over fade_frames,
/// reaching zero at fade_frame.
struct RidgeSpec {
  Eigen::Vector2d p0{0.0, 0.0};
  Eigen::Vector2d p1{0.0, 0.0};
  double sigma = 4.0;
  double amplitude = 0.45;
  std::optional<int> fade_frame;
  int fade_frames = 6;
};

/// Fraction of the full ridge amplitude present in frame k.
double ridge_visibility(const RidgeSpec& ridge, int k);

/// Brightness inversion: s = depth * clamp((k - start) / length, 0, 1) and
/// v' = (1 - s) v + s (1 - v).
struct TransitionRamp {
  int start_frame = 0;
  int length = 12;
  double depth = 1.0;
};

struct CorruptionSpec {
  int frame = 0;
  double fraction = 0.0;
};

struct SceneSpec {
  int width = 256;
  int height = 256;
  int n_frames = 10;
  double cadence_s = 300.0;
  Timestamp start = parse_timestamp("2023-06-01T18:00:00Z");
  raster::GeoTransform geo{38.0, -128.0, -0.018, 0.018};
  FlowSpec flow = UniformFlow{};
  TextureSpec texture;
  std::optional<RidgeSpec> ridge;
  std::optional<TransitionRamp> transition;
  std::vector<CorruptionSpec> corruption;
  std::optional<Eigen::Vector2d> probe;  ///< truth origin; frame center when unset

  void validate() const;
  Timestamp frame_time(int k) const;
  Eigen::Vector2d probe_point() const;
};

void to_json(nlohmann::json& j, const SceneSpec& spec);
void from_json(const nlohmann::json& j, SceneSpec& spec);

/// Frame k rendered in memory, values quantized to 16-bit counts.
raster::Frame render_frame(const SceneSpec& spec, int k);

struct TruthRow {
  int frame = 0;
  Timestamp t;
  double cx = 0.0;
  double cy = 0.0;
  double ridge_visibility = 0.0;
};

/// Analytic path of the probe point, with the ridge schedule.
std::vector<TruthRow> ground_truth(const SceneSpec& spec);

/// Analytic path of a box center; stops before the center leaves the frame.
std::vector<Eigen::Vector2d> ground_truth_box_path(const SceneSpec& spec, const TrackingBox& init_box);

struct GeneratedScene {
  std::filesystem::path manifest;
  std::filesystem::path ground_truth;
  std::vector<TruthRow> truth;
};

/// Writes frame_NNNN.pgm (+ sidecars), manifest.txt and ground_truth.csv.
GeneratedScene generate(const SceneSpec& spec, const std::filesystem::path& out_dir);

}  // namespace shiptrack::synth
