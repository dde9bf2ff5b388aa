#include "panelrect/rectify.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "panelrect/error.hpp"

namespace panelrect {

namespace {

// Removes round-off from K * K^-1 style products so integral sources stay integral.
double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

RasterImage::RasterImage(int w, int h, int c, std::uint8_t fill) : width(w), height(h), channels(c) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (c != 1 && c != 3) throw Error(ErrorCode::InvalidArgument, "image must have 1 or 3 channels");
  samples.assign(static_cast<std::size_t>(w) * h * c, fill);
}

void RasterImage::validate() const {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3) ||
      samples.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::InvalidArgument, "image sample count does not match its dimensions");
  }
}

RasterImage warp_homography(const RasterImage& src, const Mat3& dest_to_src, ImageSize out_size,
                            Interpolation interp) {
  src.validate();
  RasterImage out(out_size.width, out_size.height, src.channels, 0);
  const double max_x = src.width - 1, max_y = src.height - 1;

  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const Vec3 q = dest_to_src * Vec3(x, y, 1.0);
      if (std::abs(q.z()) < kDepthEpsilon) continue;
      const double sx = snap(q.x() / q.z());
      const double sy = snap(q.y() / q.z());
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= max_x && sy <= max_y)) continue;

      if (interp == Interpolation::Nearest) {
        const int nx = static_cast<int>(std::lround(sx));
        const int ny = static_cast<int>(std::lround(sy));
        for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = src.at(nx, ny, c);
        continue;
      }

      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double fx = sx - x0, fy = sy - y0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = src.at(x0, y0, c) * (1.0 - fx) + src.at(x1, y0, c) * fx;
        const double bottom = src.at(x0, y1, c) * (1.0 - fx) + src.at(x1, y1, c) * fx;
        const double v = top * (1.0 - fy) + bottom * fy;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

RasterImage warp_image(const RasterImage& src, const PoseHypothesis& pose, const Intrinsics& k,
                       std::optional<ImageSize> out_size, Interpolation interp) {
  const Mat3 h = pose_to_homography(pose, k);
  return warp_homography(src, h.inverse(), out_size.value_or(ImageSize{src.width, src.height}), interp);
}

RasterImage overlay_corners(const RasterImage& img, const CornerSet& corners, int arm, std::uint8_t intensity) {
  img.validate();
  if (corners.frame() != Frame::PixelImage) {
    throw Error(ErrorCode::WrongFrame, "overlay_corners: corners must be in the pixel frame");
  }
  RasterImage out = img;
  const auto paint = [&](long x, long y) {
    if (x < 0 || y < 0 || x >= out.width || y >= out.height) return;
    if (out.channels == 3) {
      out.at(x, y, 0) = intensity;  // red marker
      out.at(x, y, 1) = 0;
      out.at(x, y, 2) = 0;
    } else {
      out.at(x, y) = intensity;
    }
  };
  const double limit = std::max(out.width, out.height) + arm + 1.0;
  for (const Vec3& c : corners.corners()) {
    if (!(std::abs(c.x()) < limit && std::abs(c.y()) < limit)) continue;  // keeps lround in range
    const long cx = std::lround(c.x()), cy = std::lround(c.y());
    for (int d = -arm; d <= arm; ++d) {
      paint(cx + d, cy);
      paint(cx, cy + d);
    }
  }
  return out;
}

}  // namespace panelrect
