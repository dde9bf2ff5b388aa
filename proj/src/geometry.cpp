#include "panelrect/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "panelrect/error.hpp"

namespace panelrect {

namespace {

void require_frame(const CornerSet& set, Frame expected, const char* op) {
  if (set.frame() != expected) {
    throw Error(ErrorCode::WrongFrame, std::string(op) + ": expected " + to_string(expected) +
                                           " corners, got " + to_string(set.frame()));
  }
}

}  // namespace

Intrinsics::Intrinsics(double fx, double fy, double ox, double oy)
    : fx_(fx), fy_(fy), ox_(ox), oy_(oy) {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::InvalidArgument, "intrinsics: focal ratios must be positive and finite");
  }
  if (!std::isfinite(ox) || !std::isfinite(oy)) {
    throw Error(ErrorCode::InvalidArgument, "intrinsics: principal point must be finite");
  }
}

Mat3 Intrinsics::matrix() const {
  Mat3 m;
  m << fx_, 0.0, ox_,
       0.0, fy_, oy_,
       0.0, 0.0, 1.0;
  return m;
}

Mat3 Intrinsics::inverse_matrix() const {
  Mat3 m;
  m << 1.0 / fx_, 0.0, -ox_ / fx_,
       0.0, 1.0 / fy_, -oy_ / fy_,
       0.0, 0.0, 1.0;
  return m;
}

Mat3 PoseHypothesis::rotation_matrix() const { return compose_rotation(*this); }

const char* to_string(Frame frame) noexcept {
  switch (frame) {
    case Frame::PixelImage: return "pixel";
    case Frame::NormalizedHomogeneous: return "normalized-homogeneous";
    case Frame::Spatial: return "spatial";
  }
  return "unknown";
}

CornerSet::CornerSet(Frame frame, std::vector<Vec3> flat) : frame_(frame), corners_(std::move(flat)) {
  if (corners_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "corner set must contain at least one button");
  }
  if (corners_.size() % 4 != 0) {
    throw Error(ErrorCode::InvalidArgument, "corner set size must be a multiple of 4");
  }
  for (const Vec3& c : corners_) {
    if (!c.allFinite()) throw Error(ErrorCode::InvalidArgument, "corner set contains non-finite values");
    if (frame_ == Frame::NormalizedHomogeneous && c.z() != 1.0) {
      throw Error(ErrorCode::InvalidArgument, "normalized-homogeneous corners must have z == 1");
    }
  }
}

CornerSet::CornerSet(Frame frame, std::vector<Quad> buttons)
    : CornerSet(frame, [&] {
        std::vector<Vec3> flat;
        flat.reserve(4 * buttons.size());
        for (const Quad& q : buttons) flat.insert(flat.end(), q.begin(), q.end());
        return flat;
      }()) {}

CornerSet CornerSet::from_pixels(const std::vector<std::array<Vec2, 4>>& buttons) {
  std::vector<Vec3> flat;
  flat.reserve(4 * buttons.size());
  for (const auto& quad : buttons) {
    for (const Vec2& p : quad) flat.emplace_back(p.x(), p.y(), 1.0);
  }
  return CornerSet(Frame::PixelImage, std::move(flat));
}

std::vector<Quad> CornerSet::quads() const {
  std::vector<Quad> out(button_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < 4; ++j) out[i][j] = corners_[4 * i + j];
  }
  return out;
}

CornerSet make_corner_set(Frame frame, std::vector<Vec3> flat) { return CornerSet(frame, std::move(flat)); }

double deg_to_rad(double degrees) { return degrees * std::numbers::pi / 180.0; }

double rad_to_deg(double radians) { return radians * 180.0 / std::numbers::pi; }

Mat3 rotation_x(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r << 1.0, 0.0, 0.0,
       0.0, c, s,
       0.0, -s, c;
  return r;
}

Mat3 rotation_y(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r << c, 0.0, -s,
       0.0, 1.0, 0.0,
       s, 0.0, c;
  return r;
}

Mat3 rotation_z(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r << c, s, 0.0,
       -s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Mat3 compose_rotation(const PoseHypothesis& pose) {
  const Mat3 rx = rotation_x(deg_to_rad(pose.theta_x));
  const Mat3 ry = rotation_y(deg_to_rad(pose.theta_y));
  const Mat3 rz = rotation_z(deg_to_rad(pose.theta_z));
  return (rx * ry) * rz;
}

CornerSet to_homogeneous(const CornerSet& pixels) {
  require_frame(pixels, Frame::PixelImage, "to_homogeneous");
  std::vector<Vec3> out;
  out.reserve(pixels.corner_count());
  for (const Vec3& c : pixels.corners()) out.emplace_back(c.x(), c.y(), 1.0);
  return make_corner_set(Frame::NormalizedHomogeneous, std::move(out));
}

CornerSet back_project(const CornerSet& normalized, const Intrinsics& k) {
  require_frame(normalized, Frame::NormalizedHomogeneous, "back_project");
  // K^-1 applied row by row; subtracting before dividing keeps integer pixels exact longer.
  std::vector<Vec3> out;
  out.reserve(normalized.corner_count());
  for (const Vec3& c : normalized.corners()) {
    out.emplace_back((c.x() - k.ox()) / k.fx(), (c.y() - k.oy()) / k.fy(), 1.0);
  }
  return make_corner_set(Frame::Spatial, std::move(out));
}

CornerSet apply_pose(const CornerSet& spatial, const PoseHypothesis& pose) {
  require_frame(spatial, Frame::Spatial, "apply_pose");
  const Mat3 r = compose_rotation(pose);
  std::vector<Vec3> out;
  out.reserve(spatial.corner_count());
  for (const Vec3& d : spatial.corners()) {
    Vec3 p = r * d + pose.t;
    if (std::abs(p.z()) < kDepthEpsilon) {
      throw Error(ErrorCode::DegenerateDepth, "apply_pose: corner mapped to infinity");
    }
    p /= p.z();
    p.z() = 1.0;
    out.push_back(p);
  }
  return make_corner_set(Frame::Spatial, std::move(out));
}

Vec3 translation_align_first_corner(const CornerSet& detected, const CornerSet& reference,
                                    const Mat3& rotation) {
  require_frame(detected, Frame::Spatial, "translation_align_first_corner");
  require_frame(reference, Frame::Spatial, "translation_align_first_corner");
  return reference.corners().front() - rotation * detected.corners().front();
}

CornerSet project(const CornerSet& spatial, const Intrinsics& k) {
  require_frame(spatial, Frame::Spatial, "project");
  const Mat3 m = k.matrix();
  std::vector<Vec3> out;
  out.reserve(spatial.corner_count());
  for (const Vec3& p : spatial.corners()) {
    Vec3 g = m * p;
    g /= g.z();
    g.z() = 1.0;
    out.push_back(g);
  }
  return make_corner_set(Frame::NormalizedHomogeneous, std::move(out));
}

Mat3 pose_to_homography(const PoseHypothesis& pose, const Intrinsics& k) {
  Mat3 plane = compose_rotation(pose);
  plane.col(2) += pose.t;  // R + T * [0 0 1]
  const Mat3 h = k.matrix() * plane * k.inverse_matrix();

  const Vec3 sv = Eigen::JacobiSVD<Mat3>(h).singularValues();
  if (!(sv(2) > 0.0) || sv(0) / sv(2) >= 1e12) {
    throw Error(ErrorCode::DegeneratePose, "pose_to_homography: homography is singular");
  }
  return h;
}

Vec2 apply_homography(const Mat3& h, const Vec2& pixel) {
  const Vec3 q = h * Vec3(pixel.x(), pixel.y(), 1.0);
  return q.head<2>() / q.z();
}

CornerSet transform_pixels(const CornerSet& pixels, const Mat3& h) {
  require_frame(pixels, Frame::PixelImage, "transform_pixels");
  std::vector<Vec3> out;
  out.reserve(pixels.corner_count());
  for (const Vec3& c : pixels.corners()) {
    const Vec3 q = h * Vec3(c.x(), c.y(), 1.0);
    if (std::abs(q.z()) < kDepthEpsilon) {
      throw Error(ErrorCode::DegenerateDepth, "transform_pixels: corner mapped to infinity");
    }
    out.emplace_back(q.x() / q.z(), q.y() / q.z(), 1.0);
  }
  return make_corner_set(Frame::PixelImage, std::move(out));
}

}  // namespace panelrect
