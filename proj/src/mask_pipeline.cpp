#include "panelrect/mask_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <optional>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "panelrect/error.hpp"

namespace panelrect {

namespace {

using Binary = std::vector<std::uint8_t>;

// Square-element morphology is separable: a (2r+1) run along rows, then along
// columns. Windows are clipped at the image border.
Binary morph(const Binary& in, int w, int h, int r, bool dilate) {
  Binary tmp(in.size()), out(in.size());
  const auto pick = [dilate](std::uint8_t acc, std::uint8_t v) {
    return dilate ? std::max(acc, v) : std::min(acc, v);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = dilate ? 0 : 1;
      for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) acc = pick(acc, in[y * w + dx]);
      tmp[y * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = dilate ? 0 : 1;
      for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) acc = pick(acc, tmp[dy * w + x]);
      out[y * w + x] = acc;
    }
  }
  return out;
}

Vec2 unit_normal(const HoughLine& l) { return {std::cos(l.theta), std::sin(l.theta)}; }

// Angle between two undirected line orientations, in [0, pi/2].
double orientation_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), std::numbers::pi);
  return std::min(d, std::numbers::pi - d);
}

// Signed distance from p to the line, measured along the reference normal n.
double offset_along(const HoughLine& l, const Vec2& p, const Vec2& n) {
  const Vec2 ln = unit_normal(l);
  const double s = l.rho - p.dot(ln);
  return ln.dot(n) < 0.0 ? -s : s;
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

LabelMask::LabelMask(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "label mask dimensions must be positive");
  labels.assign(static_cast<std::size_t>(w) * h, fill);
}

void LabelMask::validate() const {
  if (width <= 0 || height <= 0 || labels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::InvalidArgument, "label mask size does not match its dimensions");
  }
}

LabelMask close_mask(const LabelMask& mask, int radius, MorphologyOrder order) {
  mask.validate();
  if (radius < 1) throw Error(ErrorCode::InvalidArgument, "close_mask: radius must be >= 1");

  std::array<bool, 256> present{};
  for (std::uint8_t v : mask.labels) present[v] = true;

  LabelMask out(mask.width, mask.height, 0);
  const bool closing = order == MorphologyOrder::DilateThenErode;
  for (int c = 1; c < 256; ++c) {
    if (!present[c]) continue;
    Binary bin(mask.labels.size());
    for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = mask.labels[i] == c;
    Binary res = morph(morph(bin, mask.width, mask.height, radius, closing), mask.width, mask.height, radius, !closing);
    for (std::size_t i = 0; i < res.size(); ++i) {
      if (res[i] && (out.labels[i] == 0 || mask.labels[i] == c)) out.labels[i] = static_cast<std::uint8_t>(c);
    }
  }
  return out;
}

Vec2 ButtonRegion::centroid() const {
  Vec2 sum = Vec2::Zero();
  for (const PixelCoord& p : pixels) sum += Vec2(p.x, p.y);
  return pixels.empty() ? sum : Vec2(sum / static_cast<double>(pixels.size()));
}

std::vector<std::size_t> reading_order(std::span<const BoundingBox> boxes) {
  std::vector<std::size_t> idx(boxes.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (boxes.empty()) return idx;

  std::vector<int> heights;
  for (const auto& b : boxes) heights.push_back(b.height());
  std::nth_element(heights.begin(), heights.begin() + heights.size() / 2, heights.end());
  const double tolerance = 0.5 * heights[heights.size() / 2];

  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(boxes[a].y0, boxes[a].x0) < std::tie(boxes[b].y0, boxes[b].x0);
  });

  std::vector<std::size_t> out;
  out.reserve(idx.size());
  std::size_t row_start = 0;
  for (std::size_t i = 1; i <= idx.size(); ++i) {
    if (i == idx.size() || boxes[idx[i]].y0 - boxes[idx[row_start]].y0 > tolerance) {
      std::stable_sort(idx.begin() + row_start, idx.begin() + i,
                       [&](std::size_t a, std::size_t b) { return boxes[a].x0 < boxes[b].x0; });
      out.insert(out.end(), idx.begin() + row_start, idx.begin() + i);
      row_start = i;
    }
  }
  return out;
}

std::vector<ButtonRegion> extract_button_regions(const LabelMask& mask, std::size_t min_area) {
  mask.validate();
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> seen(mask.labels.size(), 0);
  std::vector<ButtonRegion> regions;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t c = mask.at(x, y);
      if (c == 0 || seen[y * w + x]) continue;
      ButtonRegion region;
      region.class_id = c;
      region.box = {x, y, x, y};
      std::deque<PixelCoord> queue{{x, y}};
      seen[y * w + x] = 1;
      while (!queue.empty()) {
        const PixelCoord p = queue.front();
        queue.pop_front();
        region.pixels.push_back(p);
        region.box.x0 = std::min(region.box.x0, p.x);
        region.box.y0 = std::min(region.box.y0, p.y);
        region.box.x1 = std::max(region.box.x1, p.x);
        region.box.y1 = std::max(region.box.y1, p.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (!mask.contains(nx, ny) || seen[ny * w + nx] || mask.at(nx, ny) != c) continue;
            seen[ny * w + nx] = 1;
            queue.push_back({nx, ny});
          }
        }
      }
      if (region.pixels.size() >= min_area) regions.push_back(std::move(region));
    }
  }
  if (regions.empty()) throw Error(ErrorCode::EmptyPanel, "no button regions found in mask");

  std::vector<BoundingBox> boxes;
  for (const auto& r : regions) boxes.push_back(r.box);
  std::vector<ButtonRegion> ordered;
  ordered.reserve(regions.size());
  for (std::size_t i : reading_order(boxes)) ordered.push_back(std::move(regions[i]));
  return ordered;
}

std::vector<PixelCoord> region_boundary(const ButtonRegion& region) {
  const BoundingBox& b = region.box;
  const int w = b.width() + 2, h = b.height() + 2;
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(w) * h, 0);
  for (const PixelCoord& p : region.pixels) inside[(p.y - b.y0 + 1) * w + (p.x - b.x0 + 1)] = 1;

  std::vector<PixelCoord> boundary;
  for (const PixelCoord& p : region.pixels) {
    const int lx = p.x - b.x0 + 1, ly = p.y - b.y0 + 1;
    bool edge = false;
    for (int dy = -1; dy <= 1 && !edge; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (!inside[(ly + dy) * w + (lx + dx)]) {
          edge = true;
          break;
        }
      }
    }
    if (edge) boundary.push_back(p);
  }
  return boundary;
}

std::vector<HoughLine> hough_lines(std::span<const PixelCoord> boundary, const HoughParams& params) {
  if (!(params.rho_step > 0.0) || !(params.theta_step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "hough_lines: resolutions must be positive");
  }
  if (boundary.empty()) throw Error(ErrorCode::LineDetection, "hough_lines: no boundary pixels");

  const int num_angle = static_cast<int>(std::lround(std::numbers::pi / params.theta_step));
  double max_radius = 0.0;
  for (const PixelCoord& p : boundary) max_radius = std::max(max_radius, std::hypot(p.x, p.y));
  const int offset = static_cast<int>(std::ceil(max_radius / params.rho_step)) + 1;
  const int num_rho = 2 * offset + 1;

  std::vector<double> cos_table(num_angle), sin_table(num_angle);
  for (int n = 0; n < num_angle; ++n) {
    cos_table[n] = std::cos(n * params.theta_step) / params.rho_step;
    sin_table[n] = std::sin(n * params.theta_step) / params.rho_step;
  }

  // Each pixel splits its vote linearly between the two nearest rho bins, so a
  // slanted digital edge is not penalised for straddling a bin boundary.
  std::vector<double> accum(static_cast<std::size_t>(num_angle) * num_rho, 0.0);
  for (const PixelCoord& p : boundary) {
    for (int n = 0; n < num_angle; ++n) {
      const double pos = p.x * cos_table[n] + p.y * sin_table[n] + offset;
      const int r = static_cast<int>(std::floor(pos));
      const double frac = pos - r;
      double* row = &accum[static_cast<std::size_t>(n) * num_rho];
      row[r] += 1.0 - frac;
      if (r + 1 < num_rho) row[r + 1] += frac;
    }
  }

  const double max_votes = *std::max_element(accum.begin(), accum.end());
  const double threshold = std::max(1e-9, params.peak_ratio * max_votes);
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < accum.size(); ++i) {
    if (accum[i] >= threshold) cells.push_back(i);
  }
  std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
    return accum[a] != accum[b] ? accum[a] > accum[b] : a < b;
  });

  std::vector<HoughLine> peaks;
  for (std::size_t cell : cells) {
    const int n = static_cast<int>(cell / num_rho);
    const int r = static_cast<int>(cell % num_rho);
    const HoughLine cand{(r - offset) * params.rho_step, n * params.theta_step, accum[cell]};
    const bool suppressed = std::any_of(peaks.begin(), peaks.end(), [&](const HoughLine& kept) {
      const double direct = std::abs(cand.theta - kept.theta);
      if (direct <= params.nms_theta + 1e-12 && std::abs(cand.rho - kept.rho) <= params.nms_rho) return true;
      // theta near 0 and near pi describe the same direction with rho negated
      const double wrapped = std::numbers::pi - direct;
      return wrapped <= params.nms_theta + 1e-12 && std::abs(cand.rho + kept.rho) <= params.nms_rho;
    });
    if (!suppressed) peaks.push_back(cand);
  }
  if (peaks.size() < 4) {
    throw Error(ErrorCode::LineDetection,
                "hough_lines: found " + std::to_string(peaks.size()) + " line(s), need at least 4");
  }
  return peaks;
}

QuadEdges select_four_edges(std::span<const HoughLine> lines, const Vec2& region_center, double min_separation) {
  if (lines.size() < 4) throw Error(ErrorCode::QuadAssembly, "select_four_edges: need at least 4 lines");

  std::vector<HoughLine> sorted(lines.begin(), lines.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const HoughLine& a, const HoughLine& b) { return a.votes > b.votes; });

  // Two orientation families: lines within 45 degrees of the strongest line,
  // and the rest. Splitting relative to the data rather than the image axes
  // keeps strongly tilted buttons assemblable.
  const double reference_theta = sorted.front().theta;
  std::vector<HoughLine> family_a, family_b;
  for (const HoughLine& l : sorted) {
    (orientation_gap(l.theta, reference_theta) <= std::numbers::pi / 4 ? family_a : family_b).push_back(l);
  }
  if (family_b.empty()) {
    throw Error(ErrorCode::QuadAssembly, "select_four_edges: all lines share one orientation");
  }

  // The family whose normal is closer to the y axis holds the top and bottom edges.
  Vec2 normal_a = unit_normal(family_a.front()), normal_b = unit_normal(family_b.front());
  const bool a_is_horizontal = std::abs(normal_a.y()) >= std::abs(normal_b.y());
  auto& horizontal_family = a_is_horizontal ? family_a : family_b;
  auto& vertical_family = a_is_horizontal ? family_b : family_a;
  Vec2 down = a_is_horizontal ? normal_a : normal_b;
  Vec2 right = a_is_horizontal ? normal_b : normal_a;
  if (down.y() < 0.0) down = -down;
  if (right.x() < 0.0) right = -right;

  // Strongest line, then the strongest one at least min_separation away; sorted by offset.
  const auto pick_pair = [&](const std::vector<HoughLine>& family, const Vec2& n) -> std::optional<std::array<HoughLine, 2>> {
    const double first = offset_along(family.front(), region_center, n);
    for (std::size_t i = 1; i < family.size(); ++i) {
      const double other = offset_along(family[i], region_center, n);
      if (std::abs(other - first) >= min_separation) {
        if (first <= other) return std::array<HoughLine, 2>{family.front(), family[i]};
        return std::array<HoughLine, 2>{family[i], family.front()};
      }
    }
    return std::nullopt;
  };
  const auto horizontal = pick_pair(horizontal_family, down);
  const auto vertical = pick_pair(vertical_family, right);
  if (!horizontal || !vertical) {
    throw Error(ErrorCode::QuadAssembly, "select_four_edges: cannot form two horizontal and two vertical edges");
  }
  return {(*horizontal)[0], (*horizontal)[1], (*vertical)[0], (*vertical)[1]};
}

Vec2 intersect(const HoughLine& a, const HoughLine& b) {
  const double ca = std::cos(a.theta), sa = std::sin(a.theta);
  const double cb = std::cos(b.theta), sb = std::sin(b.theta);
  const double det = ca * sb - sa * cb;
  if (std::abs(det) <= 1e-6) throw Error(ErrorCode::NoIntersection, "intersect: lines are parallel");
  return {(a.rho * sb - b.rho * sa) / det, (ca * b.rho - cb * a.rho) / det};
}

bool is_canonical_convex(const std::array<Vec2, 4>& quad) {
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 e0 = quad[(i + 1) % 4] - quad[i];
    const Vec2 e1 = quad[(i + 2) % 4] - quad[(i + 1) % 4];
    if (!(cross(e0, e1) > 0.0)) return false;
  }
  return true;
}

std::array<Vec2, 4> order_corners(const std::array<Vec2, 4>& points) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (!points[i].allFinite()) throw Error(ErrorCode::Ordering, "order_corners: non-finite corner");
    for (std::size_t j = i + 1; j < 4; ++j) {
      if ((points[i] - points[j]).norm() < 1e-9) throw Error(ErrorCode::Ordering, "order_corners: duplicate corners");
    }
  }
  const Vec2 centre = (points[0] + points[1] + points[2] + points[3]) / 4.0;
  std::array<std::size_t, 4> idx{0, 1, 2, 3};
  const auto angle = [&](std::size_t i) {
    const Vec2 d = points[i] - centre;
    return std::atan2(d.y(), d.x());
  };
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return angle(a) < angle(b); });

  const auto start = std::min_element(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return points[a].sum() < points[b].sum();
  });
  std::rotate(idx.begin(), start, idx.end());

  const std::array<Vec2, 4> out{points[idx[0]], points[idx[1]], points[idx[2]], points[idx[3]]};
  if (!is_canonical_convex(out)) throw Error(ErrorCode::Ordering, "order_corners: quadrilateral is not convex");
  return out;
}

HoughLine refine_line(const HoughLine& line, std::span<const PixelCoord> pixels, double max_distance) {
  const double c = std::cos(line.theta), s = std::sin(line.theta);
  std::vector<Vec2> near;
  for (const PixelCoord& p : pixels) {
    if (std::abs(p.x * c + p.y * s - line.rho) <= max_distance) near.emplace_back(p.x, p.y);
  }
  if (near.size() < 2) return line;

  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : near) mean += p;
  mean /= static_cast<double>(near.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& p : near) cov += (p - mean) * (p - mean).transpose();

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Vec2 normal = eig.eigenvectors().col(0);  // smallest eigenvalue
  double theta = std::atan2(normal.y(), normal.x());
  if (theta < 0.0) {
    theta += std::numbers::pi;
    normal = -normal;
  }
  if (theta >= std::numbers::pi) {
    theta -= std::numbers::pi;
    normal = -normal;
  }
  return {normal.dot(mean), theta, line.votes};
}

const char* to_string(ButtonStatus status) noexcept {
  switch (status) {
    case ButtonStatus::Ok: return "ok";
    case ButtonStatus::LineDetectionFailed: return "line-detection-failed";
    case ButtonStatus::QuadAssemblyFailed: return "quad-assembly-failed";
    case ButtonStatus::IntersectionFailed: return "intersection-failed";
    case ButtonStatus::OrderingFailed: return "ordering-failed";
  }
  return "unknown";
}

std::size_t DetectionResult::succeeded() const {
  return static_cast<std::size_t>(std::count_if(buttons.begin(), buttons.end(),
                                                [](const ButtonDetection& b) { return b.status == ButtonStatus::Ok; }));
}

CornerSet DetectionResult::corners() const {
  std::vector<std::array<Vec2, 4>> quads;
  for (const auto& b : buttons) {
    if (b.status == ButtonStatus::Ok) quads.push_back(b.corners);
  }
  if (quads.empty()) throw Error(ErrorCode::EmptyPanel, "no button corners were detected");
  return CornerSet::from_pixels(quads);
}

std::vector<std::uint8_t> DetectionResult::class_ids() const {
  std::vector<std::uint8_t> ids;
  for (const auto& b : buttons) {
    if (b.status == ButtonStatus::Ok) ids.push_back(b.class_id);
  }
  return ids;
}

DetectionResult detect_corners(const LabelMask& mask, const DetectParams& params) {
  const LabelMask closed = close_mask(mask, params.closing_radius, params.morphology);
  const std::vector<ButtonRegion> regions = extract_button_regions(closed, params.min_area);

  DetectionResult result;
  for (const ButtonRegion& region : regions) {
    ButtonDetection det;
    det.class_id = region.class_id;
    det.box = region.box;
    const std::vector<PixelCoord> boundary = region_boundary(region);
    try {
      const std::vector<HoughLine> lines = hough_lines(boundary, params.hough);
      QuadEdges edges = select_four_edges(lines, region.centroid(), params.min_edge_separation);
      if (params.refine_lines) {
        edges.top = refine_line(edges.top, boundary);
        edges.bottom = refine_line(edges.bottom, boundary);
        edges.left = refine_line(edges.left, boundary);
        edges.right = refine_line(edges.right, boundary);
      }
      det.lines = {edges.top, edges.right, edges.bottom, edges.left};
      const std::array<Vec2, 4> raw{intersect(edges.top, edges.left), intersect(edges.top, edges.right),
                                    intersect(edges.bottom, edges.right), intersect(edges.bottom, edges.left)};
      det.corners = order_corners(raw);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::LineDetection: det.status = ButtonStatus::LineDetectionFailed; break;
        case ErrorCode::QuadAssembly: det.status = ButtonStatus::QuadAssemblyFailed; break;
        case ErrorCode::NoIntersection: det.status = ButtonStatus::IntersectionFailed; break;
        default: det.status = ButtonStatus::OrderingFailed; break;
      }
      det.message = e.what();
    }
    result.buttons.push_back(std::move(det));
  }
  if (result.succeeded() == 0) throw Error(ErrorCode::EmptyPanel, "corner detection failed for every button");
  return result;
}

}  // namespace panelrect
