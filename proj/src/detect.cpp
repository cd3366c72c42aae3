#include "shiptrack/detect.hpp"

namespace shiptrack::detect {

void DetectorParams::validate() const {
  if (n < 1) fail(ErrorCode::InvalidArgument, "detector n must be >= 1");
  if (m < 3 || m % 2 == 0) fail(ErrorCode::InvalidArgument, "detector m must be odd and >= 3");
  if (!(t_q_frac > 0.0 && t_q_frac < 1.0)) fail(ErrorCode::InvalidArgument, "t_q_frac must lie in (0, 1)");
  if (max_features < 1) fail(ErrorCode::InvalidArgument, "max_features must be >= 1");
}

Gradients<double> image_gradients(const raster::Frame& frame) { return sobel_gradients(frame.values); }

Grid<double> quality_map(const raster::Frame& frame, const DetectorParams& params) {
  return quality_map(frame.values, params, &frame.quality);
}

std::vector<FeaturePoint> detect_in_box(const raster::Frame& frame, const TrackingBox& box,
                                        const DetectorParams& params) {
  params.validate();
  if (box.degenerate()) fail(ErrorCode::DegenerateBox, "box has zero area");
  if (!box.inside(frame.width(), frame.height())) fail(ErrorCode::BoxOutOfBounds, "box exceeds frame");

  const PixelRect r = box.pixels();
  const int pad = params.n + 1;
  const int cx0 = std::max(0, r.x0 - pad);
  const int cy0 = std::max(0, r.y0 - pad);
  const int cx1 = std::min(frame.width() - 1, r.x1 + pad);
  const int cy1 = std::min(frame.height() - 1, r.y1 + pad);
  const int cw = cx1 - cx0 + 1;
  const int ch = cy1 - cy0 + 1;

  const Grid<double> crop = frame.values.block(cy0, cx0, ch, cw);
  const QualityMask crop_mask = frame.quality.block(cy0, cx0, ch, cw);
  Grid<double> q = quality_map(crop, params, &crop_mask);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      if (!r.contains(x + cx0, y + cy0)) q(y, x) = 0.0;
    }
  }

  std::vector<FeaturePoint> features = select_features(q, params);
  for (auto& f : features) {
    f.x += cx0;
    f.y += cy0;
  }
  return features;
}

}  // namespace shiptrack::detect
