#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "panelrect/geometry.hpp"

namespace panelrect {

/// Row-major class-label grid; 0 is background, 1..K are button classes.
struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;

  LabelMask() = default;
  LabelMask(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  void validate() const;
};

enum class MorphologyOrder {
  DilateThenErode,  ///< closing
  ErodeThenDilate,  ///< opening; the literal phrase order, kept for comparison
};

/// Per nonzero class, dilation and erosion with a (2r+1)^2 square element.
LabelMask close_mask(const LabelMask& mask, int radius,
                     MorphologyOrder order = MorphologyOrder::DilateThenErode);

struct PixelCoord {
  int x = 0;
  int y = 0;
  bool operator==(const PixelCoord&) const = default;
};

struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  int height() const { return y1 - y0 + 1; }
  int width() const { return x1 - x0 + 1; }
};

struct ButtonRegion {
  std::uint8_t class_id = 0;
  std::vector<PixelCoord> pixels;
  BoundingBox box;
  Vec2 centroid() const;
};

/// 8-connected components of each nonzero class with at least min_area pixels,
/// in reading order. Throws EmptyPanel when nothing survives.
std::vector<ButtonRegion> extract_button_regions(const LabelMask& mask, std::size_t min_area = 100);

/// Sorts boxes top-to-bottom, then left-to-right within rows; boxes whose tops
/// lie within half the median box height of a row's first box share that row.
std::vector<std::size_t> reading_order(std::span<const BoundingBox> boxes);

/// Region pixels with at least one 8-neighbour outside the region.
std::vector<PixelCoord> region_boundary(const ButtonRegion& region);

/// x * cos(theta) + y * sin(theta) = rho, theta in [0, pi).
struct HoughLine {
  double rho = 0.0;
  double theta = 0.0;
  double votes = 0.0;  // accumulator weight; fractional because votes are split across rho bins
};

struct HoughParams {
  double rho_step = 1.0;
  double theta_step = std::numbers::pi / 180.0;
  double peak_ratio = 0.5;  ///< keep peaks with at least this fraction of the maximum
  double nms_rho = 3.0;
  double nms_theta = 5.0 * std::numbers::pi / 180.0;
};

/// Standard rho-theta accumulator over the given pixels; returns suppressed
/// peaks by descending votes. Throws LineDetection when fewer than 4 survive.
std::vector<HoughLine> hough_lines(std::span<const PixelCoord> boundary, const HoughParams& params = {});

struct QuadEdges {
  HoughLine top, bottom, left, right;
};

/// Splits lines into two orientation families (within 45 degrees of the
/// strongest line, or not), keeps the two strongest lines of each that lie at
/// least min_separation apart, and labels the family closer to horizontal as
/// top/bottom. Throws QuadAssembly otherwise.
QuadEdges select_four_edges(std::span<const HoughLine> lines, const Vec2& region_center,
                            double min_separation = 5.0);

/// Throws NoIntersection when |sin(theta1 - theta2)| <= 1e-6.
Vec2 intersect(const HoughLine& a, const HoughLine& b);

/// Canonical order: top-left, top-right, bottom-right, bottom-left. Throws
/// Ordering for duplicate points or a non-convex quadrilateral.
std::array<Vec2, 4> order_corners(const std::array<Vec2, 4>& points);

/// True when the quad is strictly convex and clockwise on screen (y down),
/// which is the canonical orientation.
bool is_canonical_convex(const std::array<Vec2, 4>& quad);

/// Total-least-squares refit of a line to the pixels within max_distance of it.
HoughLine refine_line(const HoughLine& line, std::span<const PixelCoord> pixels, double max_distance = 2.0);

struct DetectParams {
  int closing_radius = 2;
  MorphologyOrder morphology = MorphologyOrder::DilateThenErode;
  std::size_t min_area = 100;
  HoughParams hough;
  double min_edge_separation = 5.0;
  bool refine_lines = true;
};

enum class ButtonStatus { Ok, LineDetectionFailed, QuadAssemblyFailed, IntersectionFailed, OrderingFailed };

const char* to_string(ButtonStatus status) noexcept;

struct ButtonDetection {
  std::uint8_t class_id = 0;
  BoundingBox box;
  ButtonStatus status = ButtonStatus::Ok;
  std::string message;
  std::array<Vec2, 4> corners{};
  std::array<HoughLine, 4> lines{};  ///< top, right, bottom, left
};

struct DetectionResult {
  std::vector<ButtonDetection> buttons;  ///< every region, reading order

  std::size_t succeeded() const;
  /// Corners of the successful buttons. Throws EmptyPanel if there are none.
  CornerSet corners() const;
  std::vector<std::uint8_t> class_ids() const;
};

/// close_mask -> regions -> boundary -> Hough -> four edges -> intersections
/// -> canonical order. Throws EmptyPanel when no region exists or none succeeds.
DetectionResult detect_corners(const LabelMask& mask, const DetectParams& params = {});

}  // namespace panelrect
