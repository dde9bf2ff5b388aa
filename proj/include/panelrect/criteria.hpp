#pragma once

#include <optional>
#include <span>
#include <vector>

#include "panelrect/geometry.hpp"

namespace panelrect {

/// |slope| is clamped to this value; a vertical edge (|dx| < 1e-12) takes it.
inline constexpr double kSlopeSentinel = 1e12;
inline constexpr double kVerticalDxEpsilon = 1e-12;
inline constexpr double kEdgeLengthEpsilon = 1e-12;

/// Raw criteria of one hypothesis: ||K_H||, 1/||K_V|| and ||Cos||.
struct RawScores {
  double kh_norm = 0.0;
  double krv = 0.0;
  double cos_norm = 0.0;

  bool operator==(const RawScores&) const = default;
};

struct CriterionScores {
  RawScores raw;
  std::optional<RawScores> normalized;
  double final_cr = 0.0;
};

/// sqrt(sum of squared top-edge slopes), one slope per button.
double horizontal_slope_norm(const CornerSet& spatial);
double horizontal_slope_norm(std::span<const Vec3> corners);

/// 1 / sqrt(sum of squared left-edge slopes). Returns kSlopeSentinel when every
/// left edge is level.
double vertical_slope_reciprocal(const CornerSet& spatial);
double vertical_slope_reciprocal(std::span<const Vec3> corners);

/// sqrt(sum of squared cosines between each button's top and left edges).
/// Throws DegenerateButton for a zero-length edge.
double cosine_norm(const CornerSet& spatial);
double cosine_norm(std::span<const Vec3> corners);

/// All three criteria in one pass. Returns std::nullopt instead of throwing
/// when a button has a zero-length edge; this is the search kernel.
std::optional<RawScores> try_raw_scores(std::span<const Vec3> corners) noexcept;

RawScores raw_scores(const CornerSet& spatial);

/// Min/max of one criterion over a candidate population.
struct MinMax {
  double min = 0.0;
  double max = 0.0;

  void include(double v) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  /// (v - min) / (max - min), or 0 when the population is constant.
  double normalize(double v) const;
};

/// Element-wise min-max normalization over the whole list. Throws
/// InvalidArgument for an empty list.
std::vector<double> min_max_normalize(std::span<const double> values);

double final_cr(double kh_hat, double krv_hat, double cos_hat);
double final_cr(const RawScores& normalized);

}  // namespace panelrect
