#pragma once

#include "shiptrack/raster.hpp"
#include "shiptrack/synth.hpp"
#include "shiptrack/tracker.hpp"
#include "shiptrack/trajectory.hpp"

#include <filesystem>
#include <string>

namespace scenes {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Frames rendered on demand from a scene.
shiptrack::tracker::FrameSource source(const shiptrack::synth::SceneSpec& spec);

/// Frame wrapping a grid with default geo at the given time.
shiptrack::raster::Frame frame_of(const shiptrack::Grid<double>& values, const std::string& rfc3339);

/// A scene with uniform motion and the default texture.
shiptrack::synth::SceneSpec uniform_scene(int width, int height, int n_frames, double u, double v,
                                          std::uint64_t seed = 1);

/// A uniform-flow scene placed so the box crosses the evening terminator, with
/// the brightness inversion inside the transition window seen along the true
/// box path.
struct SunsetScene {
  shiptrack::synth::SceneSpec spec;
  shiptrack::TrackingBox box;
  int enter = -1;  ///< first frame classified as a transition
  int exit = -1;   ///< first frame after it that is not
};

SunsetScene sunset_scene(std::uint64_t seed, double u, double v, int lead_frames = 20, int ramp_frames = 12);

/// Winds that move a parcel exactly like the scene's uniform pixel flow,
/// scaled per height by factor(height). Covers the frame footprint with a
/// margin and hours_after hours past the last frame.
shiptrack::trajectory::WindField flow_wind(const shiptrack::synth::SceneSpec& spec,
                                           const std::vector<double>& heights_m,
                                           const std::function<double(double)>& factor, int hours_after = 30);

/// Whole-file contents.
std::string slurp(const std::filesystem::path& path);

}  // namespace scenes
