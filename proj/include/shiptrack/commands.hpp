#pragma once

#include "shiptrack/shipmatch.hpp"
#include "shiptrack/tracker.hpp"
#include "shiptrack/trajectory.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace shiptrack::cli {

namespace fs = std::filesystem;

/// Band difference then equalization for each timestamp pair. Returns the
/// written manifest.
fs::path cmd_preprocess(const fs::path& c06_manifest, const fs::path& c07_manifest, const fs::path& out_dir);

struct TrackOptions {
  fs::path manifest;
  TrackingBox box;
  tracker::TrackerParams params;
  tracker::PersistenceParams persistence;
  fs::path out_dir;
};

/// Writes box_path.csv, events.ndjson and report.json.
tracker::SequenceResult cmd_track(const TrackOptions& options);

struct CompareOptions {
  fs::path box_path;
  fs::path wind;
  std::vector<double> heights_m = trajectory::kDefaultHeights;
  std::optional<trajectory::TrajectoryPoint> init;  ///< first box-path row when unset
  int hours = 24;
  double step_s = 300.0;
  double divergence_km = 25.0;
  fs::path out_dir;
};

/// Writes divergence.csv, trajectory_<h>m.csv per height and summary.json;
/// returns the summary.
nlohmann::json cmd_compare(const CompareOptions& options);

/// Returns the generated manifest path.
fs::path cmd_synth(const std::optional<fs::path>& config, const fs::path& out_dir,
                   std::optional<std::uint64_t> seed = std::nullopt);

nlohmann::json cmd_match(const fs::path& ais, double lat, double lon, Timestamp t, double max_km, double max_minutes,
                         std::ostream& log);

/// Annotated 8-bit frames with a 2-px outline just outside and on the box
/// edge, clipped to the frame. Returns how many frames were written.
std::size_t cmd_render(const fs::path& manifest, const fs::path& box_path, const fs::path& out_dir,
                       std::ostream& log, double half_width = 25.0, double half_height = 25.0);

/// Parses "a,b,c" into doubles.
std::vector<double> parse_list(const std::string& text);

/// Entry point for the shiptrack executable.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace shiptrack::cli
