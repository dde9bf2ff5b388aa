#include "panelrect/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "panelrect/criteria.hpp"
#include "panelrect/error.hpp"

namespace panelrect {

namespace {

constexpr double kMaxDistortionDeg = 60.0;

std::uint8_t texture(double x, double y, double base, double amplitude, double phase) {
  const double v = base + amplitude * std::sin(2.0 * std::numbers::pi * x / 53.0 + phase) *
                              std::cos(2.0 * std::numbers::pi * y / 41.0 - phase);
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

RasterImage mask_to_raster(const LabelMask& mask) {
  RasterImage img(mask.width, mask.height, 1);
  img.samples = mask.labels;
  return img;
}

LabelMask raster_to_mask(const RasterImage& img) {
  LabelMask mask(img.width, img.height);
  mask.labels = img.samples;
  return mask;
}

}  // namespace

PanelSpec PanelSpec::single_column(int n) {
  PanelSpec s;
  s.layout = PanelLayout::SingleColumn;
  s.rows = n;
  s.cols = 1;
  return s;
}

PanelSpec PanelSpec::grid(int rows, int cols) {
  PanelSpec s;
  s.layout = PanelLayout::Grid;
  s.rows = rows;
  s.cols = cols;
  return s;
}

void PanelSpec::validate() const {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::InvalidArgument, "panel: rows and cols must be positive");
  if (layout == PanelLayout::VerticalPair && (rows != 2 || cols != 1)) {
    throw Error(ErrorCode::InvalidArgument, "panel: a vertical pair is 2 rows x 1 column");
  }
  if (layout == PanelLayout::SingleColumn && cols != 1) {
    throw Error(ErrorCode::InvalidArgument, "panel: a single column has exactly 1 column");
  }
  if (button_count() > 255) throw Error(ErrorCode::InvalidArgument, "panel: at most 255 buttons fit in an 8-bit mask");
  if (!(button_width > 0.0) || !(button_height > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "panel: button size must be positive");
  }
  if (image_width <= 0 || image_height <= 0) throw Error(ErrorCode::InvalidArgument, "panel: image size must be positive");
  if (!(spacing > 0.0) && button_count() > 1) throw Error(ErrorCode::Overlap, "panel: buttons touch or overlap");

  const double w = cols * button_width + (cols - 1) * spacing;
  const double h = rows * button_height + (rows - 1) * spacing;
  const double x0 = center.x() - w / 2, y0 = center.y() - h / 2;
  if (x0 < 0.0 || y0 < 0.0 || x0 + w > image_width - 1 || y0 + h > image_height - 1) {
    throw Error(ErrorCode::OutOfFrame, "panel: buttons do not fit inside the image");
  }
}

SyntheticPanel generate_reference(const PanelSpec& spec) {
  spec.validate();
  const double panel_w = spec.cols * spec.button_width + (spec.cols - 1) * spec.spacing;
  const double panel_h = spec.rows * spec.button_height + (spec.rows - 1) * spec.spacing;
  const Vec2 origin = spec.center - Vec2(panel_w / 2, panel_h / 2);

  std::vector<std::array<Vec2, 4>> quads;
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const Vec2 tl = origin + Vec2(c * (spec.button_width + spec.spacing), r * (spec.button_height + spec.spacing));
      quads.push_back({tl, tl + Vec2(spec.button_width, 0.0), tl + Vec2(spec.button_width, spec.button_height),
                       tl + Vec2(0.0, spec.button_height)});
    }
  }

  LabelMask mask(spec.image_width, spec.image_height);
  RasterImage image(spec.image_width, spec.image_height, 3);
  for (int y = 0; y < spec.image_height; ++y) {
    for (int x = 0; x < spec.image_width; ++x) {
      image.at(x, y, 0) = texture(x, y, 110.0, 30.0, 0.0);
      image.at(x, y, 1) = texture(x, y, 100.0, 30.0, 1.0);
      image.at(x, y, 2) = texture(x, y, 90.0, 30.0, 2.0);
    }
  }
  for (std::size_t b = 0; b < quads.size(); ++b) {
    const Vec2& tl = quads[b][0];
    const Vec2& br = quads[b][2];
    for (int y = static_cast<int>(std::ceil(tl.y())); y <= static_cast<int>(std::floor(br.y())); ++y) {
      for (int x = static_cast<int>(std::ceil(tl.x())); x <= static_cast<int>(std::floor(br.x())); ++x) {
        mask.at(x, y) = static_cast<std::uint8_t>(b + 1);
        image.at(x, y, 0) = texture(x, y, 200.0, 25.0, 0.5);
        image.at(x, y, 1) = texture(x, y, 195.0, 25.0, 1.5);
        image.at(x, y, 2) = texture(x, y, 185.0, 25.0, 2.5);
      }
    }
  }
  return {CornerSet::from_pixels(quads), std::move(mask), std::move(image)};
}

DistortedPanel distort(const SyntheticPanel& reference, const PoseHypothesis& pose, const Intrinsics& k) {
  for (double a : {pose.theta_x, pose.theta_y, pose.theta_z}) {
    if (!std::isfinite(a) || std::abs(a) > kMaxDistortionDeg) {
      throw Error(ErrorCode::InvalidArgument, "distort: angles must lie within +-60 degrees");
    }
  }
  if (!pose.t.allFinite()) throw Error(ErrorCode::InvalidArgument, "distort: translation must be finite");

  const Mat3 rotation = compose_rotation(pose);
  Mat3 plane = rotation;
  plane.col(2) += pose.t;
  const Vec3 e1 = back_project(to_homogeneous(reference.corners), k).corners().front();
  const Vec3 g = plane.inverse() * e1;
  if (std::abs(g.z()) < kDepthEpsilon) throw Error(ErrorCode::DegenerateDepth, "distort: first corner at infinity");
  const Vec3 d1 = g / g.z();

  PoseHypothesis effective = pose;
  effective.t = e1 - rotation * d1;
  const Mat3 rectifying = pose_to_homography(effective, k);
  const Mat3 forward = rectifying.inverse();

  CornerSet corners = transform_pixels(reference.corners, forward);
  const int w = reference.image.width, h = reference.image.height;
  for (const Vec3& c : corners.corners()) {
    if (!(c.x() >= 0.0 && c.y() >= 0.0 && c.x() <= w - 1 && c.y() <= h - 1)) {
      throw Error(ErrorCode::OutOfFrame, "distort: a corner leaves the image");
    }
  }

  const ImageSize size{w, h};
  RasterImage image = warp_homography(reference.image, rectifying, size, Interpolation::Bilinear);
  LabelMask mask = raster_to_mask(
      warp_homography(mask_to_raster(reference.mask), rectifying, {reference.mask.width, reference.mask.height},
                      Interpolation::Nearest));
  return {std::move(corners), std::move(mask), std::move(image), effective, forward};
}

Vec3 centering_translation(const PoseHypothesis& pose, const PanelSpec& spec, const Intrinsics& k) {
  const Vec3 c = k.inverse_matrix() * Vec3(spec.center.x(), spec.center.y(), 1.0);
  return c - compose_rotation(pose) * c;
}

double evaluate(const CornerSet& rectified_pixels, const Intrinsics& k) {
  return cosine_norm(back_project(to_homogeneous(rectified_pixels), k));
}

PanelSpec infer_panel_spec(const CornerSet& detected) {
  if (detected.frame() != Frame::PixelImage) {
    throw Error(ErrorCode::WrongFrame, "infer_panel_spec: corners must be in the pixel frame");
  }
  const std::size_t b = detected.button_count();
  std::vector<BoundingBox> boxes;
  for (std::size_t i = 0; i < b; ++i) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (const Vec3& c : detected.button(i)) {
      x0 = std::min(x0, c.x());
      y0 = std::min(y0, c.y());
      x1 = std::max(x1, c.x());
      y1 = std::max(y1, c.y());
    }
    boxes.push_back({static_cast<int>(std::floor(x0)), static_cast<int>(std::floor(y0)),
                     static_cast<int>(std::ceil(x1)), static_cast<int>(std::ceil(y1))});
  }

  // Count row lengths in reading order.
  const std::vector<std::size_t> order = reading_order(boxes);
  std::vector<int> heights;
  for (const auto& bx : boxes) heights.push_back(bx.height());
  std::sort(heights.begin(), heights.end());
  const double tolerance = 0.5 * heights[heights.size() / 2];
  std::vector<int> row_sizes;
  int row_top = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int top = boxes[order[i]].y0;
    if (i == 0 || top - row_top > tolerance || top < row_top - tolerance) {
      row_sizes.push_back(0);
      row_top = top;
    }
    ++row_sizes.back();
  }

  const int rows = static_cast<int>(row_sizes.size());
  const bool uniform = std::all_of(row_sizes.begin(), row_sizes.end(), [&](int n) { return n == row_sizes.front(); });
  if (!uniform) return PanelSpec::single_column(static_cast<int>(b));
  const int cols = row_sizes.front();
  if (rows == 2 && cols == 1) return PanelSpec::vertical_pair();
  if (cols == 1) return PanelSpec::single_column(rows);
  return PanelSpec::grid(rows, cols);
}

}  // namespace panelrect
