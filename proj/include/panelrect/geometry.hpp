#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace panelrect {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole intrinsics stored as focal ratios (F/s_x, F/s_y) and the principal
/// point, all in pixels.
class Intrinsics {
 public:
  /// Throws InvalidArgument unless fx, fy > 0 and the offsets are finite.
  Intrinsics(double fx, double fy, double ox, double oy);

  /// fx = fy = 320, principal point (320, 240): the 640x480 reference camera.
  static Intrinsics default_camera() { return {320.0, 320.0, 320.0, 240.0}; }

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double ox() const { return ox_; }
  double oy() const { return oy_; }

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;

  bool operator==(const Intrinsics&) const = default;

 private:
  double fx_, fy_, ox_, oy_;
};

/// Rotation angles in degrees plus a translation in normalized camera units.
struct PoseHypothesis {
  double theta_x = 0.0;
  double theta_y = 0.0;
  double theta_z = 0.0;
  Vec3 t = Vec3::Zero();

  /// R_x * R_y * R_z, in that order.
  Mat3 rotation_matrix() const;
};

enum class Frame { PixelImage, NormalizedHomogeneous, Spatial };

const char* to_string(Frame frame) noexcept;

/// Corners of one button: top-left, top-right, bottom-right, bottom-left.
/// Pixel-frame sets carry z = 1 so every frame shares one layout.
using Quad = std::array<Vec3, 4>;

/// Per-button corner quadruples in one coordinate frame.
class CornerSet {
 public:
  /// Throws InvalidArgument for an empty button list, and for
  /// NormalizedHomogeneous sets whose third coordinates are not exactly 1.
  CornerSet(Frame frame, std::vector<Quad> buttons);

  /// Builds a PixelImage set from 2-D corners.
  static CornerSet from_pixels(const std::vector<std::array<Vec2, 4>>& buttons);

  Frame frame() const { return frame_; }
  std::size_t button_count() const { return corners_.size() / 4; }
  std::size_t corner_count() const { return corners_.size(); }

  std::span<const Vec3, 4> button(std::size_t i) const {
    return std::span<const Vec3, 4>(corners_.data() + 4 * i, 4);
  }

  /// Flat view of all corners, button-major.
  std::span<const Vec3> corners() const { return corners_; }

  Vec2 pixel(std::size_t button, std::size_t corner) const {
    return corners_.at(4 * button + corner).head<2>();
  }

  std::vector<Quad> quads() const;

 private:
  CornerSet(Frame frame, std::vector<Vec3> flat);

  Frame frame_;
  std::vector<Vec3> corners_;

  friend CornerSet make_corner_set(Frame, std::vector<Vec3>);
};

/// Flat, button-major constructor; size must be a positive multiple of 4.
CornerSet make_corner_set(Frame frame, std::vector<Vec3> flat);

double deg_to_rad(double degrees);
double rad_to_deg(double radians);

Mat3 rotation_x(double radians);
Mat3 rotation_y(double radians);
Mat3 rotation_z(double radians);

Mat3 compose_rotation(const PoseHypothesis& pose);

CornerSet to_homogeneous(const CornerSet& pixels);

/// Applies the inverse intrinsics column-wise. Input must be NormalizedHomogeneous.
CornerSet back_project(const CornerSet& normalized, const Intrinsics& k);

/// Rotates, translates and renormalizes each corner to depth 1. Throws
/// DegenerateDepth when a corner lands within 1e-9 of the z = 0 plane.
CornerSet apply_pose(const CornerSet& spatial, const PoseHypothesis& pose);

/// T = e1 - R * d1: the translation that pins the first detected corner onto
/// the first reference corner after rotation.
Vec3 translation_align_first_corner(const CornerSet& detected,
                                    const CornerSet& reference, const Mat3& rotation);

CornerSet project(const CornerSet& spatial, const Intrinsics& k);

/// Pixel homography equivalent to back_project -> apply_pose -> project.
/// Throws DegeneratePose when the result is numerically singular.
Mat3 pose_to_homography(const PoseHypothesis& pose, const Intrinsics& k);

/// Maps a pixel through a homography with homogeneous division.
Vec2 apply_homography(const Mat3& h, const Vec2& pixel);

/// Maps each pixel corner through a homography; returns a PixelImage set.
CornerSet transform_pixels(const CornerSet& pixels, const Mat3& h);

inline constexpr double kDepthEpsilon = 1e-9;

}  // namespace panelrect
