#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "panelrect/geometry.hpp"

namespace panelrect {

/// 8-bit, row-major, interleaved samples; 1 (gray) or 3 (RGB) channels.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> samples;

  RasterImage() = default;
  RasterImage(int w, int h, int c, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y, int c = 0) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  void validate() const;
};

enum class Interpolation { Bilinear, Nearest };

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// Inverse warp: each destination pixel q samples src at dest_to_src * q.
/// Sources outside [0, w-1] x [0, h-1] fill with 0.
RasterImage warp_homography(const RasterImage& src, const Mat3& dest_to_src, ImageSize out_size,
                            Interpolation interp = Interpolation::Bilinear);

/// Rectifies src with the pose: destination q samples src at H^-1 q, where
/// H = pose_to_homography(pose, k). The canvas defaults to the source size.
RasterImage warp_image(const RasterImage& src, const PoseHypothesis& pose, const Intrinsics& k,
                       std::optional<ImageSize> out_size = std::nullopt,
                       Interpolation interp = Interpolation::Bilinear);

/// Draws a cross at every corner (pixel frame); marks off the canvas are clipped.
RasterImage overlay_corners(const RasterImage& img, const CornerSet& corners, int arm = 4,
                            std::uint8_t intensity = 255);

}  // namespace panelrect
