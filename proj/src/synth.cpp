#include "shiptrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace shiptrack::synth {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::Vector2d rotate(const Eigen::Vector2d& p, double cx, double cy, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double dx = p.x() - cx;
  const double dy = p.y() - cy;
  return {cx + c * dx - s * dy, cy + s * dx + c * dy};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Lattice value in [-1, 1].
double lattice(std::uint64_t seed, int octave, std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(octave) << 56));
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, int octave, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = smoothstep(x - fx);
  const double ty = smoothstep(y - fy);
  const double v00 = lattice(seed, octave, ix, iy);
  const double v10 = lattice(seed, octave, ix + 1, iy);
  const double v01 = lattice(seed, octave, ix, iy + 1);
  const double v11 = lattice(seed, octave, ix + 1, iy + 1);
  return (v00 + tx * (v10 - v00)) + ty * ((v01 + tx * (v11 - v01)) - (v00 + tx * (v10 - v00)));
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace

Eigen::Vector2d flow_forward(const FlowSpec& flow, const Eigen::Vector2d& p, double k) {
  return std::visit(overloaded{
                        [&](const UniformFlow& f) -> Eigen::Vector2d { return {p.x() + k * f.u, p.y() + k * f.v}; },
                        [&](const RotationFlow& f) -> Eigen::Vector2d { return rotate(p, f.cx, f.cy, k * f.omega); },
                        [&](const ShearFlow& f) -> Eigen::Vector2d {
                          return {p.x() + k * f.rate * (p.y() - f.y0), p.y()};
                        },
                    },
                    flow);
}

Eigen::Vector2d flow_inverse(const FlowSpec& flow, const Eigen::Vector2d& q, double k) {
  return std::visit(overloaded{
                        [&](const UniformFlow& f) -> Eigen::Vector2d { return {q.x() - k * f.u, q.y() - k * f.v}; },
                        [&](const RotationFlow& f) -> Eigen::Vector2d { return rotate(q, f.cx, f.cy, -k * f.omega); },
                        [&](const ShearFlow& f) -> Eigen::Vector2d {
                          return {q.x() - k * f.rate * (q.y() - f.y0), q.y()};
                        },
                    },
                    flow);
}

double texture_value(const TextureSpec& tex, double x, double y) {
  double sum = 0.0;
  double weight = 0.0;
  double scale = 1.0 / tex.correlation_length;
  double w = 1.0;
  for (int o = 0; o < tex.octaves; ++o) {
    sum += w * value_noise(tex.seed, o, x * scale, y * scale);
    weight += w;
    scale *= 2.0;
    w *= 0.5;
  }
  const double z = sum / weight;
  // Fold the noise into a two-level pattern, biased toward the bright level
  // so the brightest decile of a box sits close to its median.
  return 0.5 + 0.5 * std::tanh(2.0 * (std::sin(2.0 * kPi * 1.5 * z) + 0.4));
}

double ridge_visibility(const RidgeSpec& ridge, int k) {
  if (!ridge.fade_frame) return 1.0;
  const double remaining = static_cast<double>(*ridge.fade_frame - k) / ridge.fade_frames;
  return std::clamp(remaining, 0.0, 1.0);
}

void SceneSpec::validate() const {
  if (width < 8 || height < 8) fail(ErrorCode::InvalidArgument, "scene must be at least 8x8 pixels");
  if (n_frames < 1) fail(ErrorCode::InvalidArgument, "n_frames must be >= 1");
  if (!(cadence_s > 0.0)) fail(ErrorCode::InvalidArgument, "cadence must be > 0");
  geo.validate();
  if (!(texture.correlation_length > 0.0) || texture.octaves < 1) {
    fail(ErrorCode::InvalidArgument, "texture needs correlation_length > 0 and octaves >= 1");
  }
  if (!(texture.amplitude >= 0.0) || !(texture.base >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "texture base and amplitude must be >= 0");
  }
  if (ridge) {
    if (!(ridge->amplitude >= 0.0)) fail(ErrorCode::InvalidArgument, "ridge amplitude must be >= 0");
    if (!(ridge->sigma > 0.0)) fail(ErrorCode::InvalidArgument, "ridge sigma must be > 0");
    if (ridge->fade_frames < 1) fail(ErrorCode::InvalidArgument, "ridge fade_frames must be >= 1");
  }
  if (transition) {
    if (transition->length < 1) fail(ErrorCode::InvalidArgument, "transition length must be >= 1");
    if (!(transition->depth >= 0.0 && transition->depth <= 1.0)) {
      fail(ErrorCode::InvalidArgument, "transition depth must lie in [0, 1]");
    }
  }
  for (const auto& c : corruption) {
    if (!(c.fraction >= 0.0 && c.fraction <= 1.0)) fail(ErrorCode::InvalidArgument, "corruption fraction outside [0, 1]");
    if (c.frame < 0 || c.frame >= n_frames) fail(ErrorCode::InvalidArgument, "corruption frame out of range");
  }
}

Timestamp SceneSpec::frame_time(int k) const { return add_seconds(start, k * cadence_s); }

Eigen::Vector2d SceneSpec::probe_point() const {
  return probe.value_or(Eigen::Vector2d((width - 1) / 2.0, (height - 1) / 2.0));
}

raster::Frame render_frame(const SceneSpec& spec, int k) {
  spec.validate();
  if (k < 0 || k >= spec.n_frames) fail(ErrorCode::InvalidArgument, "frame index out of range");
  const double ridge_amp = spec.ridge ? spec.ridge->amplitude * ridge_visibility(*spec.ridge, k) : 0.0;
  double s = 0.0;
  if (spec.transition) {
    s = spec.transition->depth *
        std::clamp(static_cast<double>(k - spec.transition->start_frame) / spec.transition->length, 0.0, 1.0);
  }

  Grid<double> values(spec.height, spec.width);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const Eigen::Vector2d p = flow_inverse(spec.flow, Eigen::Vector2d(x, y), k);
      double v = spec.texture.base + spec.texture.amplitude * texture_value(spec.texture, p.x(), p.y());
      if (ridge_amp > 0.0) {
        const double d = segment_distance(p, spec.ridge->p0, spec.ridge->p1);
        v += ridge_amp * std::exp(-d * d / (2.0 * spec.ridge->sigma * spec.ridge->sigma));
      }
      v = std::clamp(v, 0.0, 1.0);
      v = (1.0 - s) * v + s * (1.0 - v);
      values(y, x) = std::round(v * 65535.0);
    }
  }

  QualityMask quality = QualityMask::Zero(spec.height, spec.width);
  for (const auto& c : spec.corruption) {
    if (c.frame != k) continue;
    const std::size_t n = static_cast<std::size_t>(spec.width) * spec.height;
    const auto count = static_cast<std::size_t>(std::llround(c.fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(spec.texture.seed ^ splitmix64(static_cast<std::uint64_t>(k) + 0x5EEDull));
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(idx[i], idx[i + rng() % (n - i)]);
      const auto y = static_cast<Eigen::Index>(idx[i] / spec.width);
      const auto x = static_cast<Eigen::Index>(idx[i] % spec.width);
      quality(y, x) = 1;
      values(y, x) = 0.0;
    }
  }
  return raster::make_frame(std::move(values), spec.frame_time(k), spec.geo, std::move(quality));
}

std::vector<TruthRow> ground_truth(const SceneSpec& spec) {
  spec.validate();
  std::vector<TruthRow> rows;
  const Eigen::Vector2d p = spec.probe_point();
  for (int k = 0; k < spec.n_frames; ++k) {
    const Eigen::Vector2d q = flow_forward(spec.flow, p, k);
    rows.push_back({k, spec.frame_time(k), q.x(), q.y(), spec.ridge ? ridge_visibility(*spec.ridge, k) : 0.0});
  }
  return rows;
}

std::vector<Eigen::Vector2d> ground_truth_box_path(const SceneSpec& spec, const TrackingBox& init_box) {
  spec.validate();
  if (!init_box.inside(spec.width, spec.height)) fail(ErrorCode::BoxOutOfBounds, "initial box exceeds the frame");
  std::vector<Eigen::Vector2d> path;
  const Eigen::Vector2d c(init_box.center_x, init_box.center_y);
  for (int k = 0; k < spec.n_frames; ++k) {
    const Eigen::Vector2d q = flow_forward(spec.flow, c, k);
    if (q.x() < 0.0 || q.y() < 0.0 || q.x() > spec.width - 1 || q.y() > spec.height - 1) break;
    path.push_back(q);
  }
  return path;
}

GeneratedScene generate(const SceneSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> rasters;
  for (int k = 0; k < spec.n_frames; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.pgm", k);
    rasters.push_back(out_dir / name);
    raster::save_frame(render_frame(spec, k), rasters.back());
  }
  GeneratedScene scene{out_dir / "manifest.txt", out_dir / "ground_truth.csv", ground_truth(spec)};
  raster::write_manifest(scene.manifest, rasters);

  std::ofstream out(scene.ground_truth);
  if (!out) fail(ErrorCode::Io, "cannot write " + scene.ground_truth.string());
  out << "frame,timestamp,true_cx,true_cy,ridge_visibility\n";
  char buf[160];
  for (const auto& r : scene.truth) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%.6f\n", r.frame, format_timestamp(r.t).c_str(), r.cx, r.cy,
                  r.ridge_visibility);
    out << buf;
  }
  if (!out) fail(ErrorCode::Io, "short write to " + scene.ground_truth.string());
  return scene;
}

void to_json(json& j, const SceneSpec& spec) {
  j = json{{"width", spec.width},
           {"height", spec.height},
           {"n_frames", spec.n_frames},
           {"cadence_s", spec.cadence_s},
           {"start", format_timestamp(spec.start)},
           {"geo", {{"lat0", spec.geo.lat0}, {"lon0", spec.geo.lon0}, {"dlat", spec.geo.dlat}, {"dlon", spec.geo.dlon}}},
           {"texture",
            {{"seed", spec.texture.seed},
             {"correlation_length", spec.texture.correlation_length},
             {"octaves", spec.texture.octaves},
             {"base", spec.texture.base},
             {"amplitude", spec.texture.amplitude}}}};
  j["flow"] = std::visit(overloaded{
                             [](const UniformFlow& f) { return json{{"type", "uniform"}, {"u", f.u}, {"v", f.v}}; },
                             [](const RotationFlow& f) {
                               return json{{"type", "rotation"}, {"cx", f.cx}, {"cy", f.cy}, {"omega", f.omega}};
                             },
                             [](const ShearFlow& f) { return json{{"type", "shear"}, {"rate", f.rate}, {"y0", f.y0}}; },
                         },
                         spec.flow);
  if (spec.ridge) {
    const RidgeSpec& r = *spec.ridge;
    j["ridge"] = json{{"x0", r.p0.x()},     {"y0", r.p0.y()},           {"x1", r.p1.x()},
                      {"y1", r.p1.y()},     {"sigma", r.sigma},         {"amplitude", r.amplitude},
                      {"fade_frames", r.fade_frames}};
    if (r.fade_frame) j["ridge"]["fade_frame"] = *r.fade_frame;
  }
  if (spec.transition) {
    j["transition"] = json{{"start_frame", spec.transition->start_frame},
                           {"length", spec.transition->length},
                           {"depth", spec.transition->depth}};
  }
  if (!spec.corruption.empty()) {
    j["corruption"] = json::array();
    for (const auto& c : spec.corruption) j["corruption"].push_back({{"frame", c.frame}, {"fraction", c.fraction}});
  }
  if (spec.probe) j["probe"] = {spec.probe->x(), spec.probe->y()};
}

void from_json(const json& j, SceneSpec& spec) {
  spec = SceneSpec{};
  spec.width = j.value("width", spec.width);
  spec.height = j.value("height", spec.height);
  spec.n_frames = j.value("n_frames", spec.n_frames);
  spec.cadence_s = j.value("cadence_s", spec.cadence_s);
  if (j.contains("start")) spec.start = parse_timestamp(j.at("start").get<std::string>());
  if (j.contains("geo")) {
    const json& g = j.at("geo");
    spec.geo.lat0 = g.value("lat0", spec.geo.lat0);
    spec.geo.lon0 = g.value("lon0", spec.geo.lon0);
    spec.geo.dlat = g.value("dlat", spec.geo.dlat);
    spec.geo.dlon = g.value("dlon", spec.geo.dlon);
  }
  if (j.contains("texture")) {
    const json& t = j.at("texture");
    spec.texture.seed = t.value("seed", spec.texture.seed);
    spec.texture.correlation_length = t.value("correlation_length", spec.texture.correlation_length);
    spec.texture.octaves = t.value("octaves", spec.texture.octaves);
    spec.texture.base = t.value("base", spec.texture.base);
    spec.texture.amplitude = t.value("amplitude", spec.texture.amplitude);
  }
  if (j.contains("flow")) {
    const json& f = j.at("flow");
    const std::string type = f.value("type", std::string("uniform"));
    if (type == "uniform") {
      spec.flow = UniformFlow{f.value("u", 0.0), f.value("v", 0.0)};
    } else if (type == "rotation") {
      spec.flow = RotationFlow{f.value("cx", (spec.width - 1) / 2.0), f.value("cy", (spec.height - 1) / 2.0),
                               f.value("omega", 0.0)};
    } else if (type == "shear") {
      spec.flow = ShearFlow{f.value("rate", 0.0), f.value("y0", 0.0)};
    } else {
      fail(ErrorCode::InvalidArgument, "unknown flow type '" + type + "'");
    }
  }
  if (j.contains("ridge")) {
    const json& r = j.at("ridge");
    RidgeSpec ridge;
    ridge.p0 = {r.value("x0", 0.0), r.value("y0", 0.0)};
    ridge.p1 = {r.value("x1", 0.0), r.value("y1", 0.0)};
    ridge.sigma = r.value("sigma", ridge.sigma);
    ridge.amplitude = r.value("amplitude", ridge.amplitude);
    ridge.fade_frames = r.value("fade_frames", ridge.fade_frames);
    if (r.contains("fade_frame") && !r.at("fade_frame").is_null()) ridge.fade_frame = r.at("fade_frame").get<int>();
    spec.ridge = ridge;
  }
  if (j.contains("transition")) {
    const json& t = j.at("transition");
    TransitionRamp ramp;
    ramp.start_frame = t.value("start_frame", ramp.start_frame);
    ramp.length = t.value("length", ramp.length);
    ramp.depth = t.value("depth", ramp.depth);
    spec.transition = ramp;
  }
  if (j.contains("corruption")) {
    for (const auto& c : j.at("corruption")) spec.corruption.push_back({c.value("frame", 0), c.value("fraction", 0.0)});
  }
  if (j.contains("probe")) {
    const auto p = j.at("probe").get<std::vector<double>>();
    if (p.size() != 2) fail(ErrorCode::InvalidArgument, "probe must be [x, y]");
    spec.probe = Eigen::Vector2d(p[0], p[1]);
  }
}

}  // namespace shiptrack::synth
