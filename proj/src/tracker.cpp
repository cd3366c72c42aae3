#include "shiptrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace shiptrack::tracker {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Tracking: return "Tracking";
    case Mode::Coasting: return "Coasting";
    case Mode::Terminated: return "Terminated";
  }
  return "Unknown";
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::GapTooLarge: return "GapTooLarge";
    case TerminationReason::FeaturesLost: return "FeaturesLost";
    case TerminationReason::ReacquisitionFailed: return "ReacquisitionFailed";
    case TerminationReason::OverlappingTransitions: return "OverlappingTransitions";
    case TerminationReason::BoxLeftFrame: return "BoxLeftFrame";
  }
  return "Unknown";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Initialized: return "Initialized";
    case EventKind::Advanced: return "Advanced";
    case EventKind::FrameSkippedDQF: return "FrameSkippedDQF";
    case EventKind::FrameSkippedGap: return "FrameSkippedGap";
    case EventKind::TransitionEntered: return "TransitionEntered";
    case EventKind::CoastStep: return "CoastStep";
    case EventKind::TransitionExited: return "TransitionExited";
    case EventKind::Reacquired: return "Reacquired";
    case EventKind::FeatureDropped: return "FeatureDropped";
    case EventKind::Terminated: return "Terminated";
  }
  return "Unknown";
}

void TrackerParams::validate() const {
  detector.validate();
  flow.validate();
  transition.validate();
  if (!(dqf_max >= 0.0 && dqf_max <= 1.0)) fail(ErrorCode::InvalidArgument, "dqf_max must lie in [0, 1]");
  if (!(gap_max_minutes > 0.0)) fail(ErrorCode::InvalidArgument, "gap_max_minutes must be > 0");
  if (!(nominal_cadence_s > 0.0)) fail(ErrorCode::InvalidArgument, "nominal cadence must be > 0");
  if (min_init_features < 1 || min_surviving_features < 1) {
    fail(ErrorCode::InvalidArgument, "feature minimums must be >= 1");
  }
  if (history_length < 2) fail(ErrorCode::InvalidArgument, "history_length must be >= 2");
}

std::string to_ndjson_line(const TrackerEvent& event) {
  json line{{"timestamp", format_timestamp(event.timestamp)}, {"kind", to_string(event.kind)}, {"payload", event.payload}};
  return line.dump();
}

flow::ImagePyramid<double> frame_pyramid(const raster::Frame& frame, const flow::FlowParams& params) {
  return flow::build_pyramid(frame.values / 65535.0, params.pyramid_levels, params.min_top_extent());
}

namespace {

json box_json(const TrackingBox& box) {
  return json{{"center_x", box.center_x}, {"center_y", box.center_y}, {"half_width", box.half_width},
              {"half_height", box.half_height}};
}

void push_history(TrackerState& state, const TrackerParams& params, Timestamp t) {
  state.history.push_back({t, {state.box.center_x, state.box.center_y}});
  while (state.history.size() > static_cast<std::size_t>(params.history_length)) state.history.pop_front();
}

// Mean box velocity over the retained history, px per second.
Eigen::Vector2d history_velocity(const std::deque<HistoryEntry>& history) {
  if (history.size() < 2) return Eigen::Vector2d::Zero();
  const double dt = seconds_between(history.front().t, history.back().t);
  if (!(dt > 0.0)) return Eigen::Vector2d::Zero();
  return (history.back().center - history.front().center) / dt;
}

void terminate(TrackerState& state, TerminationReason reason, Timestamp t, std::vector<TrackerEvent>& events,
               json payload = json::object()) {
  state.mode = Mode::Terminated;
  state.termination = reason;
  payload["reason"] = to_string(reason);
  events.push_back({t, EventKind::Terminated, std::move(payload)});
}

struct FlowStep {
  std::vector<detect::FeaturePoint> landed;
  std::vector<Eigen::Vector2d> displacements;
  json lost = json::object();
};

FlowStep track_all(const std::vector<detect::FeaturePoint>& features, const flow::ImagePyramid<double>& from,
                   const flow::ImagePyramid<double>& to, const flow::FlowParams& params) {
  FlowStep step;
  for (const auto& f : features) {
    const flow::TrackOutcome out = flow::track_feature(from, to, Eigen::Vector2d(f.x, f.y), params);
    if (!out.ok()) {
      const char* reason = flow::to_string(out.reason());
      step.lost[reason] = step.lost.value(reason, 0) + 1;
      continue;
    }
    step.displacements.emplace_back(out.flow().dx, out.flow().dy);
    step.landed.push_back({f.x + out.flow().dx, f.y + out.flow().dy, f.quality});
  }
  return step;
}

}  // namespace

TrackerState init_tracker(const raster::Frame& frame, const TrackingBox& box, const TrackerParams& params) {
  params.validate();
  if (box.degenerate()) fail(ErrorCode::DegenerateBox, "tracking box has zero area");
  if (!box.inside(frame.width(), frame.height())) fail(ErrorCode::BoxOutOfBounds, "tracking box exceeds the frame");

  TrackerState state;
  state.box = box;
  state.features = detect::detect_in_box(frame, box, params.detector);
  if (static_cast<int>(state.features.size()) < params.min_init_features) {
    fail(ErrorCode::InsufficientFeatures, "InsufficientFeatures(" + std::to_string(state.features.size()) + ")");
  }
  state.mode = Mode::Tracking;
  state.last_used = state.last_seen = frame.timestamp;
  push_history(state, params, frame.timestamp);
  if (params.diurnal_gating) {
    const solar::PerimeterAngles angles = solar::perimeter_angles(box, frame.geo, frame.timestamp);
    state.diurnal = solar::transition_state(angles, params.transition);
    state.prev_extremes = solar::extremes(angles);
  }
  state.frame = std::make_shared<const raster::Frame>(frame);
  state.pyramid = std::make_shared<const flow::ImagePyramid<double>>(frame_pyramid(frame, params.flow));
  return state;
}

AdvanceResult advance(TrackerState state, const raster::Frame& next, const TrackerParams& params) {
  std::vector<TrackerEvent> events;
  if (state.mode == Mode::Terminated) return {std::move(state), std::move(events)};
  if (next.timestamp <= state.last_seen) {
    fail(ErrorCode::TimestampOrder, format_timestamp(next.timestamp) + " is not after " +
                                        format_timestamp(state.last_seen));
  }
  const Timestamp t = next.timestamp;
  state.last_seen = t;

  const double corrupt = raster::corrupt_fraction(next);
  if (corrupt > params.dqf_max) {
    ++state.skipped_since_used;
    events.push_back({t, EventKind::FrameSkippedDQF, json{{"corrupt_fraction", corrupt}}});
    return {std::move(state), std::move(events)};
  }

  const double gap_s = seconds_between(state.last_used, t);
  if (gap_s > params.gap_max_minutes * 60.0) {
    terminate(state, TerminationReason::GapTooLarge, t, events, json{{"gap_minutes", gap_s / 60.0}});
    return {std::move(state), std::move(events)};
  }
  const long missing = std::lround(gap_s / params.nominal_cadence_s) - 1 - state.skipped_since_used;
  if (missing > 0) {
    events.push_back({t, EventKind::FrameSkippedGap, json{{"missing_frames", missing}, {"gap_minutes", gap_s / 60.0}}});
  }
  state.skipped_since_used = 0;

  if (!state.box.inside(next.width(), next.height())) {
    terminate(state, TerminationReason::BoxLeftFrame, t, events, json{{"box", box_json(state.box)}});
    return {std::move(state), std::move(events)};
  }

  solar::DiurnalState diurnal = solar::DiurnalState::Day;
  if (params.diurnal_gating) {
    const solar::PerimeterAngles angles = solar::perimeter_angles(state.box, next.geo, t);
    diurnal = solar::transition_state(angles, params.transition, {state.prev_extremes, state.diurnal});
    state.prev_extremes = solar::extremes(angles);
  }
  auto next_pyramid = std::make_shared<const flow::ImagePyramid<double>>(frame_pyramid(next, params.flow));

  auto coast = [&]() {
    state.box.center_x += state.coast_velocity.x() * gap_s;
    state.box.center_y += state.coast_velocity.y() * gap_s;
  };

  if (state.mode == Mode::Tracking && solar::is_transition(diurnal)) {
    state.coast_velocity = history_velocity(state.history);
    state.mode = Mode::Coasting;
    state.coasting_through = diurnal;
    json payload{{"state", solar::to_string(diurnal)},
                 {"velocity_px_per_s", {state.coast_velocity.x(), state.coast_velocity.y()}},
                 {"history_entries", state.history.size()},
                 {"frozen_features", state.features.size()}};
    if (state.history.size() < static_cast<std::size_t>(params.history_length)) {
      payload["warning"] = "short history; velocity uses all available entries";
    }
    events.push_back({t, EventKind::TransitionEntered, std::move(payload)});
    coast();
    events.push_back({t, EventKind::CoastStep, json{{"center", {state.box.center_x, state.box.center_y}}}});
  } else if (state.mode == Mode::Coasting) {
    if (!solar::is_transition(diurnal)) {
      coast();
      events.push_back({t, EventKind::TransitionExited, json{{"state", solar::to_string(diurnal)},
                                                             {"center", {state.box.center_x, state.box.center_y}}}});
      if (!state.box.inside(next.width(), next.height())) {
        terminate(state, TerminationReason::BoxLeftFrame, t, events, json{{"box", box_json(state.box)}});
        return {std::move(state), std::move(events)};
      }
      state.features = detect::detect_in_box(next, state.box, params.detector);
      if (static_cast<int>(state.features.size()) < params.min_init_features) {
        terminate(state, TerminationReason::ReacquisitionFailed, t, events,
                  json{{"n_features", state.features.size()}});
        return {std::move(state), std::move(events)};
      }
      state.mode = Mode::Tracking;
      events.push_back({t, EventKind::Reacquired, json{{"n_features", state.features.size()}}});
    } else if (diurnal != state.coasting_through) {
      terminate(state, TerminationReason::OverlappingTransitions, t, events,
                json{{"coasting_through", solar::to_string(state.coasting_through)},
                     {"new_state", solar::to_string(diurnal)}});
      return {std::move(state), std::move(events)};
    } else {
      coast();
      events.push_back({t, EventKind::CoastStep, json{{"center", {state.box.center_x, state.box.center_y}}}});
    }
  } else {
    FlowStep step = track_all(state.features, *state.pyramid, *next_pyramid, params.flow);
    const std::size_t dropped = state.features.size() - step.landed.size();
    bool redetected = false;
    if (static_cast<int>(step.landed.size()) < params.min_surviving_features) {
      const auto fresh = detect::detect_in_box(*state.frame, state.box, params.detector);
      step = track_all(fresh, *state.pyramid, *next_pyramid, params.flow);
      redetected = true;
    }
    if (dropped > 0 || redetected) {
      events.push_back({t, EventKind::FeatureDropped,
                        json{{"dropped", dropped}, {"lost", step.lost}, {"redetected", redetected}}});
    }
    if (static_cast<int>(step.landed.size()) < params.min_surviving_features) {
      terminate(state, TerminationReason::FeaturesLost, t, events, json{{"survivors", step.landed.size()}});
      return {std::move(state), std::move(events)};
    }
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& d : step.displacements) mean += d;
    mean /= static_cast<double>(step.displacements.size());
    state.box.center_x += mean.x();
    state.box.center_y += mean.y();
    state.features = std::move(step.landed);
    events.push_back({t, EventKind::Advanced,
                      json{{"dx", mean.x()}, {"dy", mean.y()}, {"n_features", state.features.size()}}});
  }

  if (!state.box.inside(next.width(), next.height())) {
    terminate(state, TerminationReason::BoxLeftFrame, t, events, json{{"box", box_json(state.box)}});
    return {std::move(state), std::move(events)};
  }

  state.diurnal = diurnal;
  state.last_used = t;
  push_history(state, params, t);
  state.frame = std::make_shared<const raster::Frame>(next);
  state.pyramid = std::move(next_pyramid);
  return {std::move(state), std::move(events)};
}

namespace {

// Linear-interpolated quantile of sorted data (numpy's default rule).
double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double score_visibility(const raster::Frame& frame, const TrackingBox& box) {
  if (box.degenerate()) fail(ErrorCode::DegenerateBox, "box has zero area");
  if (!box.inside(frame.width(), frame.height())) fail(ErrorCode::BoxOutOfBounds, "box exceeds the frame");
  const PixelRect r = box.pixels();
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(r.width() * r.height()));
  for (int y = r.y0; y <= r.y1; ++y) {
    for (int x = r.x0; x <= r.x1; ++x) {
      if (frame.quality(y, x) == 0) v.push_back(frame.values(y, x));
    }
  }
  if (v.size() < 2) return 0.0;
  std::sort(v.begin(), v.end());

  const auto top_begin = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(v.size())));
  double top = 0.0;
  for (std::size_t i = top_begin; i < v.size(); ++i) top += v[i];
  top /= static_cast<double>(v.size() - top_begin);
  const double median = quantile(v, 0.5);
  const double numerator = top - median;
  if (numerator == 0.0) return 0.0;

  double scale = (quantile(v, 0.75) - quantile(v, 0.25)) / 1.349;
  if (scale == 0.0) {
    // More than half the box is one value; fall back to the plain deviation.
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    scale = std::sqrt(var / static_cast<double>(v.size()));
  }
  return numerator / scale;
}

json to_json(const PersistenceReport& report) {
  json series = json::array();
  for (const auto& [t, score] : report.visibility_series) {
    series.push_back(json{{"timestamp", format_timestamp(t)}, {"visibility", score}});
  }
  return json{{"start", format_timestamp(report.start)},
              {"end", format_timestamp(report.end)},
              {"duration_hours", report.duration_hours},
              {"end_reason", report.end_reason},
              {"visibility_series", std::move(series)}};
}

FrameSource manifest_source(const raster::SequenceManifest& manifest) {
  return FrameSource{manifest.entries.size(), [entries = manifest.entries](std::size_t i) {
                       return raster::load_frame(entries.at(i).raster, entries.at(i).sidecar);
                     }};
}

SequenceResult run_sequence(const FrameSource& source, const TrackingBox& init_box, const TrackerParams& params,
                            const PersistenceParams& persistence) {
  if (source.count == 0) fail(ErrorCode::InvalidArgument, "empty frame sequence");
  SequenceResult result;

  const raster::Frame first = source.load(0);
  TrackerState state = init_tracker(first, init_box, params);
  result.events.push_back({first.timestamp, EventKind::Initialized,
                           json{{"n_features", state.features.size()}, {"box", box_json(init_box)}}});

  std::optional<Timestamp> dwell_start;
  int dwell_count = 0;
  std::optional<Timestamp> end;
  std::string end_reason;

  auto record = [&](const raster::Frame& frame) {
    const double vis = score_visibility(frame, state.box);
    const raster::LatLon ll = raster::pixel_to_geo(frame.geo, state.box.center_x, state.box.center_y);
    result.path.push_back({frame.timestamp, state.box.center_x, state.box.center_y, ll.lat, normalize_longitude(ll.lon),
                           state.mode, static_cast<int>(state.features.size()), vis});
    result.report.visibility_series.emplace_back(frame.timestamp, vis);
    if (persistence.visibility_dwell <= 0 || state.mode == Mode::Coasting) return;
    if (vis < persistence.visibility_floor) {
      if (dwell_count++ == 0) dwell_start = frame.timestamp;
      if (dwell_count >= persistence.visibility_dwell) {
        end = dwell_start;
        end_reason = "VisibilityLost";
      }
    } else {
      dwell_count = 0;
    }
  };

  record(first);
  for (std::size_t i = 1; i < source.count && !end; ++i) {
    const raster::Frame frame = source.load(i);
    AdvanceResult step = advance(std::move(state), frame, params);
    state = std::move(step.state);
    result.events.insert(result.events.end(), std::make_move_iterator(step.events.begin()),
                         std::make_move_iterator(step.events.end()));
    if (state.mode == Mode::Terminated) {
      end = state.last_used;
      end_reason = std::string(to_string(*state.termination));
      break;
    }
    if (state.last_used == frame.timestamp) record(frame);
  }
  if (!end) {
    end = state.last_used;
    end_reason = "EndOfData";
  }

  result.report.start = first.timestamp;
  result.report.end = *end;
  result.report.duration_hours = seconds_between(first.timestamp, *end) / 3600.0;
  result.report.end_reason = end_reason;
  return result;
}

void write_box_path_csv(const std::filesystem::path& path, const std::vector<BoxPathRow>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "timestamp,center_x,center_y,lat,lon,mode,n_features,visibility\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.8f,%.8f,%s,%d,%.6f\n", format_timestamp(r.t).c_str(), r.center_x,
                  r.center_y, r.lat, r.lon, std::string(to_string(r.mode)).c_str(), r.n_features, r.visibility);
    out << buf;
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

std::vector<BoxPathRow> read_box_path_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("timestamp,center_x,center_y,lat,lon", 0) != 0) {
    fail(ErrorCode::InvalidArgument, path.string() + ": unexpected box path header");
  }
  std::vector<BoxPathRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 8) fail(ErrorCode::InvalidArgument, path.string() + ": short row '" + line + "'");
    BoxPathRow row;
    try {
      row.t = parse_timestamp(cells[0]);
      row.center_x = std::stod(cells[1]);
      row.center_y = std::stod(cells[2]);
      row.lat = std::stod(cells[3]);
      row.lon = std::stod(cells[4]);
      row.mode = cells[5] == "Coasting" ? Mode::Coasting : cells[5] == "Terminated" ? Mode::Terminated : Mode::Tracking;
      row.n_features = std::stoi(cells[6]);
      row.visibility = std::stod(cells[7]);
    } catch (const std::logic_error&) {
      fail(ErrorCode::InvalidArgument, path.string() + ": bad row '" + line + "'");
    }
    rows.push_back(row);
  }
  return rows;
}

void write_event_log(const std::filesystem::path& path, const std::vector<TrackerEvent>& events) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& e : events) out << to_ndjson_line(e) << '\n';
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace shiptrack::tracker
