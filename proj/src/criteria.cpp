#include "panelrect/criteria.hpp"

#include <algorithm>
#include <cmath>

#include "panelrect/error.hpp"

namespace panelrect {

namespace {

double clamped_slope(double dy, double dx) {
  if (std::abs(dx) < kVerticalDxEpsilon) return kSlopeSentinel;
  return std::clamp(dy / dx, -kSlopeSentinel, kSlopeSentinel);
}

void require_quads(std::span<const Vec3> corners) {
  if (corners.empty() || corners.size() % 4 != 0) {
    throw Error(ErrorCode::InvalidArgument, "criteria: corner count must be a positive multiple of 4");
  }
}

double sum_sq_horizontal(std::span<const Vec3> c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); i += 4) {
    const double k = clamped_slope(c[i + 1].y() - c[i].y(), c[i + 1].x() - c[i].x());
    sum += k * k;
  }
  return sum;
}

double sum_sq_vertical(std::span<const Vec3> c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); i += 4) {
    const double k = clamped_slope(c[i + 3].y() - c[i].y(), c[i + 3].x() - c[i].x());
    sum += k * k;
  }
  return sum;
}

double reciprocal_norm(double sum_sq) { return sum_sq == 0.0 ? kSlopeSentinel : 1.0 / std::sqrt(sum_sq); }

// Plain left-to-right sum so results do not depend on how Eigen unrolls reductions.
double dot3(const Vec3& a, const Vec3& b) { return a.x() * b.x() + a.y() * b.y() + a.z() * b.z(); }

// Returns false on a zero-length edge.
bool sum_sq_cosine(std::span<const Vec3> c, double& sum) {
  sum = 0.0;
  for (std::size_t i = 0; i < c.size(); i += 4) {
    const Vec3 h = c[i + 1] - c[i];
    const Vec3 v = c[i + 3] - c[i];
    const double hn = std::sqrt(dot3(h, h));
    const double vn = std::sqrt(dot3(v, v));
    if (!(hn > kEdgeLengthEpsilon) || !(vn > kEdgeLengthEpsilon)) return false;
    const double cs = dot3(h, v) / (hn * vn);
    sum += cs * cs;
  }
  return true;
}

}  // namespace

double horizontal_slope_norm(std::span<const Vec3> corners) {
  require_quads(corners);
  return std::sqrt(sum_sq_horizontal(corners));
}

double horizontal_slope_norm(const CornerSet& spatial) { return horizontal_slope_norm(spatial.corners()); }

double vertical_slope_reciprocal(std::span<const Vec3> corners) {
  require_quads(corners);
  return reciprocal_norm(sum_sq_vertical(corners));
}

double vertical_slope_reciprocal(const CornerSet& spatial) { return vertical_slope_reciprocal(spatial.corners()); }

double cosine_norm(std::span<const Vec3> corners) {
  require_quads(corners);
  double sum = 0.0;
  if (!sum_sq_cosine(corners, sum)) {
    throw Error(ErrorCode::DegenerateButton, "cosine_norm: button has a zero-length edge");
  }
  return std::sqrt(sum);
}

double cosine_norm(const CornerSet& spatial) { return cosine_norm(spatial.corners()); }

std::optional<RawScores> try_raw_scores(std::span<const Vec3> corners) noexcept {
  if (corners.empty() || corners.size() % 4 != 0) return std::nullopt;
  double cos_sum = 0.0;
  if (!sum_sq_cosine(corners, cos_sum)) return std::nullopt;
  return RawScores{std::sqrt(sum_sq_horizontal(corners)), reciprocal_norm(sum_sq_vertical(corners)),
                   std::sqrt(cos_sum)};
}

RawScores raw_scores(const CornerSet& spatial) {
  return {horizontal_slope_norm(spatial), vertical_slope_reciprocal(spatial), cosine_norm(spatial)};
}

double MinMax::normalize(double v) const {
  const double range = max - min;
  if (range <= 1e-15) return 0.0;
  return (v - min) / range;
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "min_max_normalize: empty population");
  MinMax mm{values.front(), values.front()};
  for (double v : values) mm.include(v);
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(mm.normalize(v));
  return out;
}

double final_cr(double kh_hat, double krv_hat, double cos_hat) { return kh_hat + krv_hat + cos_hat; }

double final_cr(const RawScores& normalized) {
  return final_cr(normalized.kh_norm, normalized.krv, normalized.cos_norm);
}

}  // namespace panelrect
