#pragma once

#include "shiptrack/box.hpp"
#include "shiptrack/detect.hpp"
#include "shiptrack/flow.hpp"
#include "shiptrack/raster.hpp"
#include "shiptrack/solar.hpp"

#include <json.hpp>

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace shiptrack::tracker {

enum class Mode { Tracking, Coasting, Terminated };

enum class TerminationReason {
  GapTooLarge,
  FeaturesLost,
  ReacquisitionFailed,
  OverlappingTransitions,
  BoxLeftFrame,
};

std::string_view to_string(Mode mode);
std::string_view to_string(TerminationReason reason);

struct TrackerParams {
  detect::DetectorParams detector;
  flow::FlowParams flow;
  solar::TransitionParams transition;
  double dqf_max = 0.02;             ///< skip frames whose corrupt fraction exceeds this
  double gap_max_minutes = 60.0;     ///< terminate when consecutive used frames are further apart
  double nominal_cadence_s = 300.0;  ///< only used to report missing frames
  int min_init_features = 5;
  int min_surviving_features = 3;
  int history_length = 6;
  bool diurnal_gating = true;

  void validate() const;
};

struct HistoryEntry {
  Timestamp t;
  Eigen::Vector2d center;
};

struct TrackerState {
  TrackingBox box;
  std::vector<detect::FeaturePoint> features;
  Mode mode = Mode::Tracking;
  std::optional<TerminationReason> termination;
  Eigen::Vector2d coast_velocity = Eigen::Vector2d::Zero();  ///< px per second
  solar::DiurnalState coasting_through = solar::DiurnalState::Day;
  std::deque<HistoryEntry> history;
  solar::DiurnalState diurnal = solar::DiurnalState::Day;
  std::optional<solar::PerimeterExtremes> prev_extremes;
  Timestamp last_used{};  ///< last frame that advanced the state
  Timestamp last_seen{};  ///< last frame offered, including skipped ones
  int skipped_since_used = 0;

  // Previous used frame, kept for re-detection and as the flow source.
  std::shared_ptr<const raster::Frame> frame;
  std::shared_ptr<const flow::ImagePyramid<double>> pyramid;
};

enum class EventKind {
  Initialized,
  Advanced,
  FrameSkippedDQF,
  FrameSkippedGap,
  TransitionEntered,
  CoastStep,
  TransitionExited,
  Reacquired,
  FeatureDropped,
  Terminated,
};

std::string_view to_string(EventKind kind);

struct TrackerEvent {
  Timestamp timestamp;
  EventKind kind;
  nlohmann::json payload = nlohmann::json::object();
};

/// One JSON object per event: {"timestamp", "kind", "payload"}.
std::string to_ndjson_line(const TrackerEvent& event);

/// Frame values scaled to [0, 1] and turned into a flow pyramid.
flow::ImagePyramid<double> frame_pyramid(const raster::Frame& frame, const flow::FlowParams& params);

/// Detects features inside the box; needs at least min_init_features.
TrackerState init_tracker(const raster::Frame& frame, const TrackingBox& box, const TrackerParams& params);

struct AdvanceResult {
  TrackerState state;
  std::vector<TrackerEvent> events;
};

/// Feeds the next frame through the state machine: DQF skip, gap check,
/// diurnal classification, then a coast step or a flow step.
AdvanceResult advance(TrackerState state, const raster::Frame& next, const TrackerParams& params);

/// (mean of the top decile - median) / (IQR / 1.349) over the box pixels;
/// 0 when the box is constant.
double score_visibility(const raster::Frame& frame, const TrackingBox& box);

struct PersistenceParams {
  double visibility_floor = 1.0;
  int visibility_dwell = 12;
};

struct BoxPathRow {
  Timestamp t;
  double center_x = 0.0;
  double center_y = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  Mode mode = Mode::Tracking;
  int n_features = 0;
  double visibility = 0.0;
};

struct PersistenceReport {
  Timestamp start;
  Timestamp end;
  double duration_hours = 0.0;
  std::string end_reason;
  std::vector<std::pair<Timestamp, double>> visibility_series;
};

nlohmann::json to_json(const PersistenceReport& report);

struct SequenceResult {
  PersistenceReport report;
  std::vector<TrackerEvent> events;
  std::vector<BoxPathRow> path;
};

/// Random-access frame supplier so long sequences need not sit in memory.
struct FrameSource {
  std::size_t count = 0;
  std::function<raster::Frame(std::size_t)> load;
};

FrameSource manifest_source(const raster::SequenceManifest& manifest);

/// Drives init + advance over the sequence. Persistence ends at the earlier
/// of tracker termination (at the last frame that advanced the state) and the
/// first frame of a run of visibility_dwell frames scoring below the floor.
/// Frames spent coasting neither extend nor reset that run.
SequenceResult run_sequence(const FrameSource& source, const TrackingBox& init_box, const TrackerParams& params,
                            const PersistenceParams& persistence = {});

void write_box_path_csv(const std::filesystem::path& path, const std::vector<BoxPathRow>& rows);
std::vector<BoxPathRow> read_box_path_csv(const std::filesystem::path& path);
void write_event_log(const std::filesystem::path& path, const std::vector<TrackerEvent>& events);

}  // namespace shiptrack::tracker
