#include "shiptrack/commands.hpp"

#include "shiptrack/raster.hpp"
#include "shiptrack/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace shiptrack::cli {

using nlohmann::json;

namespace {

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string frame_name(const char* stem, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%04zu.pgm", stem, i);
  return buf;
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos) {
      fail(ErrorCode::InvalidArgument, "bad number '" + cell + "' in '" + text + "'");
    }
    out.push_back(x);
  }
  return out;
}

fs::path cmd_preprocess(const fs::path& c06_manifest, const fs::path& c07_manifest, const fs::path& out_dir) {
  const raster::SequenceManifest c06 = raster::read_manifest(c06_manifest);
  const raster::SequenceManifest c07 = raster::read_manifest(c07_manifest);
  if (c06.entries.size() != c07.entries.size()) {
    fail(ErrorCode::TimeMismatch, "C06 has " + std::to_string(c06.entries.size()) + " frames, C07 has " +
                                      std::to_string(c07.entries.size()));
  }
  prepare_dir(out_dir);
  std::vector<fs::path> rasters;
  for (std::size_t i = 0; i < c06.entries.size(); ++i) {
    const raster::Frame a = raster::load_frame(c06.entries[i].raster, c06.entries[i].sidecar);
    const raster::Frame b = raster::load_frame(c07.entries[i].raster, c07.entries[i].sidecar);
    rasters.push_back(out_dir / frame_name("frame", i));
    raster::save_frame(raster::equalize_histogram(raster::band_difference(a, b)), rasters.back());
  }
  const fs::path manifest = out_dir / "manifest.txt";
  raster::write_manifest(manifest, rasters);
  return manifest;
}

tracker::SequenceResult cmd_track(const TrackOptions& options) {
  const raster::SequenceManifest manifest = raster::read_manifest(options.manifest);
  if (manifest.entries.empty()) fail(ErrorCode::InvalidArgument, "manifest has no frames");
  tracker::TrackerParams params = options.params;
  params.nominal_cadence_s = manifest.nominal_cadence_s;
  tracker::SequenceResult result =
      tracker::run_sequence(tracker::manifest_source(manifest), options.box, params, options.persistence);
  prepare_dir(options.out_dir);
  tracker::write_box_path_csv(options.out_dir / "box_path.csv", result.path);
  tracker::write_event_log(options.out_dir / "events.ndjson", result.events);
  write_json(options.out_dir / "report.json", tracker::to_json(result.report));
  return result;
}

json cmd_compare(const CompareOptions& options) {
  const std::vector<tracker::BoxPathRow> rows = tracker::read_box_path_csv(options.box_path);
  if (rows.empty()) fail(ErrorCode::InvalidArgument, options.box_path.string() + " has no rows");
  std::vector<trajectory::GeoSample> observed;
  for (const auto& r : rows) observed.push_back({r.t, r.lat, r.lon});

  const trajectory::TrajectoryPoint init =
      options.init.value_or(trajectory::TrajectoryPoint{rows.front().t, rows.front().lat, rows.front().lon, 0.0});
  const trajectory::WindField field = trajectory::read_wind_field(options.wind);
  const trajectory::EnsembleRun run =
      trajectory::run_ensemble(field, init, options.hours, options.heights_m, options.step_s);

  prepare_dir(options.out_dir);
  std::ofstream table(options.out_dir / "divergence.csv");
  if (!table) fail(ErrorCode::Io, "cannot write divergence.csv");
  table << "height_m,timestamp,hours_since_init,divergence_km\n";

  json heights = json::array();
  std::optional<std::size_t> best;
  std::vector<double> means;
  char buf[160];
  for (std::size_t i = 0; i < run.heights_m.size(); ++i) {
    const double h = run.heights_m[i];
    const trajectory::Trajectory& traj = run.trajectories[i];
    std::snprintf(buf, sizeof buf, "trajectory_%gm.csv", h);
    trajectory::write_trajectory_csv(options.out_dir / buf, traj.points);

    const auto series = trajectory::divergence_series(trajectory::to_geo_samples(traj.points), observed);
    json first_exceed = nullptr;
    double sum = 0.0, peak = 0.0;
    for (const auto& s : series) {
      const double hours = seconds_between(init.t, s.t) / 3600.0;
      std::snprintf(buf, sizeof buf, "%g,%s,%.3f,%.6f\n", h, format_timestamp(s.t).c_str(), hours, s.km);
      table << buf;
      if (first_exceed.is_null() && s.km > options.divergence_km) first_exceed = hours;
      sum += s.km;
      peak = std::max(peak, s.km);
    }
    const double mean = sum / static_cast<double>(series.size());
    means.push_back(mean);
    if (!best || mean < means[*best]) best = i;
    json entry{{"height_m", h},
               {"samples", series.size()},
               {"mean_km", mean},
               {"max_km", peak},
               {"first_exceed_hour", first_exceed},
               {"within_threshold", first_exceed.is_null()}};
    if (traj.truncated) entry["truncated"] = *traj.truncated;
    heights.push_back(std::move(entry));
  }
  json summary{{"init", {{"timestamp", format_timestamp(init.t)}, {"lat", init.lat}, {"lon", init.lon}}},
               {"threshold_km", options.divergence_km},
               {"hours", options.hours},
               {"heights", std::move(heights)},
               {"best_height_m", run.heights_m[*best]}};
  write_json(options.out_dir / "summary.json", summary);
  return summary;
}

fs::path cmd_synth(const std::optional<fs::path>& config, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  synth::SceneSpec spec;
  if (config) {
    std::ifstream in(*config);
    if (!in) fail(ErrorCode::Io, "cannot open " + config->string());
    try {
      spec = json::parse(in).get<synth::SceneSpec>();
    } catch (const json::exception& e) {
      fail(ErrorCode::InvalidArgument, config->string() + ": " + e.what());
    }
  }
  if (seed) spec.texture.seed = *seed;
  const synth::GeneratedScene scene = synth::generate(spec, out_dir);
  write_json(out_dir / "scene.json", json(spec));
  return scene.manifest;
}

json cmd_match(const fs::path& ais, double lat, double lon, Timestamp t, double max_km, double max_minutes,
               std::ostream& log) {
  const shipmatch::AisLoad load = shipmatch::load_ais(ais);
  for (const auto& w : load.warnings) log << "warning: skipped row " << w << '\n';
  const auto match = shipmatch::nearest_ship(load.records, lat, lon, t, max_km, max_minutes);
  json out{{"query", {{"lat", lat}, {"lon", lon}, {"timestamp", format_timestamp(t)}}},
           {"records", load.records.size()},
           {"skipped_rows", load.skipped},
           {"match", nullptr}};
  if (match) {
    const auto& r = match->record;
    json m{{"vessel_id", r.vessel_id},
           {"timestamp", format_timestamp(r.t)},
           {"lat", r.lat},
           {"lon", r.lon},
           {"distance_km", match->distance_km},
           {"dt_minutes", match->dt_minutes}};
    if (r.name) m["name"] = *r.name;
    if (r.type) m["type"] = *r.type;
    if (r.speed_knots) m["speed_knots"] = *r.speed_knots;
    out["match"] = std::move(m);
  }
  return out;
}

std::size_t cmd_render(const fs::path& manifest_path, const fs::path& box_path, const fs::path& out_dir,
                       std::ostream& log, double half_width, double half_height) {
  const raster::SequenceManifest manifest = raster::read_manifest(manifest_path);
  std::map<Timestamp, tracker::BoxPathRow> boxes;
  for (const auto& r : tracker::read_box_path_csv(box_path)) boxes.emplace(r.t, r);
  prepare_dir(out_dir);

  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const raster::Frame frame = raster::load_frame(manifest.entries[i].raster, manifest.entries[i].sidecar);
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (Eigen::Index y = 0; y < frame.values.rows(); ++y) {
      for (Eigen::Index x = 0; x < frame.values.cols(); ++x) {
        if (frame.quality(y, x)) continue;
        const double v = frame.values(y, x);
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
      }
    }
    const double scale = hi > lo ? 254.0 / (hi - lo) : 0.0;
    Grid<std::uint8_t> img(frame.height(), frame.width());
    for (Eigen::Index y = 0; y < img.rows(); ++y) {
      for (Eigen::Index x = 0; x < img.cols(); ++x) {
        img(y, x) = frame.quality(y, x) ? 0 : static_cast<std::uint8_t>(std::lround((frame.values(y, x) - lo) * scale));
      }
    }

    const auto row = boxes.find(frame.timestamp);
    if (row == boxes.end()) {
      log << "warning: no box for " << format_timestamp(frame.timestamp) << "; frame left unannotated\n";
    } else {
      TrackingBox box{row->second.center_x, row->second.center_y, half_width, half_height};
      const PixelRect r = box.pixels();
      for (int y = r.y0 - 1; y <= r.y1 + 1; ++y) {
        for (int x = r.x0 - 1; x <= r.x1 + 1; ++x) {
          if (x < 0 || y < 0 || x >= frame.width() || y >= frame.height()) continue;
          const bool inner = x >= r.x0 + 1 && x <= r.x1 - 1 && y >= r.y0 + 1 && y <= r.y1 - 1;
          if (!inner) img(y, x) = 255;
        }
      }
    }
    raster::write_pgm8(out_dir / frame_name("render", i), img);
  }
  return manifest.entries.size();
}

namespace {

TrackingBox parse_box(const std::string& text) {
  const std::vector<double> v = parse_list(text);
  if (v.size() != 4) fail(ErrorCode::InvalidArgument, "--box needs cx,cy,hw,hh");
  TrackingBox box{v[0], v[1], v[2], v[3]};
  if (box.degenerate()) fail(ErrorCode::DegenerateBox, "box half sizes must be > 0");
  return box;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ship-track tracking and trajectory comparison on satellite frame sequences", "shiptrack"};
  app.require_subcommand(1);

  // preprocess
  std::string c06, c07, pre_out;
  auto* pre = app.add_subcommand("preprocess", "C06 - C07 band difference, then histogram equalization");
  pre->add_option("--c06", c06, "C06 manifest")->required();
  pre->add_option("--c07", c07, "C07 manifest")->required();
  pre->add_option("--out", pre_out, "output directory")->required();

  // track
  std::string manifest, box_text, track_out;
  tracker::TrackerParams params;
  tracker::PersistenceParams persistence;
  bool no_diurnal = false;
  auto* track = app.add_subcommand("track", "track a box through a frame sequence");
  track->add_option("--manifest", manifest, "frame manifest")->required();
  track->add_option("--box", box_text, "initial box cx,cy,hw,hh in pixels")->required();
  track->add_option("--out", track_out, "output directory")->required();
  track->add_option("--sza-day-threshold", params.transition.c, "zenith angle c, degrees")->capture_default_str();
  track->add_option("--sza-night-threshold", params.transition.d, "zenith angle d, degrees")->capture_default_str();
  track->add_option("--dqf-max", params.dqf_max, "skip frames above this corrupt fraction")->capture_default_str();
  track->add_option("--gap-max-minutes", params.gap_max_minutes, "terminate on larger gaps")->capture_default_str();
  track->add_option("--visibility-floor", persistence.visibility_floor)->capture_default_str();
  track->add_option("--visibility-dwell", persistence.visibility_dwell, "frames below the floor; 0 disables")
      ->capture_default_str();
  track->add_option("--lk-window", params.flow.omega_x, "flow window half size")->capture_default_str();
  track->add_option("--pyramid-levels", params.flow.pyramid_levels)->capture_default_str();
  track->add_option("--lk-iterations", params.flow.max_iterations)->capture_default_str();
  track->add_option("--lk-epsilon", params.flow.epsilon_stop, "stop when the update is shorter, px")
      ->capture_default_str();
  track->add_option("--quality-level", params.detector.t_q_frac, "feature threshold, fraction of max")
      ->capture_default_str();
  track->add_option("--max-features", params.detector.max_features)->capture_default_str();
  track->add_flag("--no-diurnal", no_diurnal, "disable transition gating");

  // compare
  CompareOptions cmp;
  std::string cmp_box, cmp_wind, cmp_out, heights_text = "0,200,400,600", init_text;
  auto* compare = app.add_subcommand("compare", "advect parcels and compare with a tracked box path");
  compare->add_option("--box-path", cmp_box, "box_path.csv from track")->required();
  compare->add_option("--wind", cmp_wind, "wind header JSON")->required();
  compare->add_option("--out", cmp_out, "output directory")->required();
  compare->add_option("--heights", heights_text, "release heights, m")->capture_default_str();
  compare->add_option("--init", init_text, "lat,lon,RFC3339 release point (default: first box row)");
  compare->add_option("--hours", cmp.hours)->capture_default_str();
  compare->add_option("--step", cmp.step_s, "integration step, s")->capture_default_str();
  compare->add_option("--divergence-km", cmp.divergence_km, "divergence threshold")->capture_default_str();

  // synth
  std::string synth_config, synth_out;
  std::optional<std::uint64_t> seed;
  auto* syn = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
  syn->add_option("--config", synth_config, "scene JSON");
  syn->add_option("--out", synth_out, "output directory")->required();
  syn->add_option("--seed", seed, "texture seed override");

  // match
  std::string ais, match_time;
  double lat = 0.0, lon = 0.0, max_km = 50.0, max_minutes = 60.0;
  auto* match = app.add_subcommand("match", "nearest AIS ship to a point in space and time");
  match->add_option("--ais", ais, "AIS CSV")->required();
  match->add_option("--lat", lat)->required();
  match->add_option("--lon", lon)->required();
  match->add_option("--time", match_time, "RFC3339")->required();
  match->add_option("--max-km", max_km)->capture_default_str();
  match->add_option("--max-minutes", max_minutes)->capture_default_str();

  // render
  std::string render_manifest, render_box, render_out;
  auto* render = app.add_subcommand("render", "draw the tracked box on each frame");
  render->add_option("--manifest", render_manifest)->required();
  render->add_option("--box-path", render_box)->required();
  render->add_option("--out", render_out)->required();
  double render_hw = 25.0, render_hh = 25.0;
  render->add_option("--half-width", render_hw)->capture_default_str();
  render->add_option("--half-height", render_hh)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*pre) {
      out << cmd_preprocess(c06, c07, pre_out).string() << '\n';
    } else if (*track) {
      params.flow.omega_y = params.flow.omega_x;
      params.diurnal_gating = !no_diurnal;
      const auto result = cmd_track({manifest, parse_box(box_text), params, persistence, track_out});
      out << tracker::to_json(result.report).dump() << '\n';
    } else if (*compare) {
      cmp.box_path = cmp_box;
      cmp.wind = cmp_wind;
      cmp.out_dir = cmp_out;
      cmp.heights_m = parse_list(heights_text);
      if (!init_text.empty()) {
        const auto comma = init_text.find(',', init_text.find(',') + 1);
        if (comma == std::string::npos) fail(ErrorCode::InvalidArgument, "--init needs lat,lon,time");
        const std::vector<double> ll = parse_list(init_text.substr(0, comma));
        if (ll.size() != 2) fail(ErrorCode::InvalidArgument, "--init needs lat,lon,time");
        cmp.init = trajectory::TrajectoryPoint{parse_timestamp(init_text.substr(comma + 1)), ll[0], ll[1], 0.0};
      }
      out << cmd_compare(cmp).dump(2) << '\n';
    } else if (*syn) {
      std::optional<fs::path> config;
      if (!synth_config.empty()) config = synth_config;
      out << cmd_synth(config, synth_out, seed).string() << '\n';
    } else if (*match) {
      out << cmd_match(ais, lat, lon, parse_timestamp(match_time), max_km, max_minutes, err).dump(2) << '\n';
    } else if (*render) {
      out << cmd_render(render_manifest, render_box, render_out, err, render_hw, render_hh) << " frames\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace shiptrack::cli
