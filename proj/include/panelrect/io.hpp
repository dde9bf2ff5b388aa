#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "panelrect/geometry.hpp"
#include "panelrect/mask_pipeline.hpp"
#include "panelrect/pose_search.hpp"
#include "panelrect/rectify.hpp"
#include "panelrect/synth.hpp"

namespace panelrect {

inline constexpr int kSchemaVersion = 1;

// PNG (8-bit gray or RGB). Alpha is dropped, palettes expanded, 16-bit stripped.
RasterImage read_png(const std::string& path);
void write_png(const std::string& path, const RasterImage& image);

/// Single-channel PNG whose sample values are class ids.
LabelMask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const LabelMask& mask);

struct ButtonRecord {
  int class_id = 0;
  std::string label;
  std::array<Vec2, 4> corners{};
};

/// JSON corner file: optional intrinsics plus canonical per-button corners.
struct CornerFile {
  int schema_version = kSchemaVersion;
  std::optional<Intrinsics> intrinsics;
  std::vector<ButtonRecord> buttons;

  CornerSet corner_set() const;
  static CornerFile from_corners(const CornerSet& pixels, const std::vector<std::uint8_t>& class_ids = {},
                                 std::optional<Intrinsics> k = std::nullopt);
};

/// Throws Parse for malformed JSON, unknown schema versions, or corners that
/// are not convex and in canonical order.
CornerFile parse_corner_file(const std::string& json_text);
std::string to_json(const CornerFile& file);
CornerFile load_corner_file(const std::string& path);
void save_corner_file(const std::string& path, const CornerFile& file);

struct PoseFile {
  int schema_version = kSchemaVersion;
  PoseHypothesis pose;  ///< effective rectifying pose
  Vec3 requested_translation = Vec3::Zero();
  std::optional<Intrinsics> intrinsics;
  std::optional<PanelSpec> panel;
};

PoseFile parse_pose_file(const std::string& json_text);
std::string to_json(const PoseFile& file);
PoseFile load_pose_file(const std::string& path);
void save_pose_file(const std::string& path, const PoseFile& file);

struct Report {
  int schema_version = kSchemaVersion;
  PoseHypothesis best_pose;
  double best_final_cr = 0.0;
  RawScores raw_scores;
  RawScores normalized_scores;
  double residual_before = 0.0;
  double residual_after = 0.0;
  std::uint64_t hypotheses_evaluated = 0;
  std::uint64_t coarse_hypotheses = 0;
  std::uint64_t fine_hypotheses = 0;
  std::uint64_t degenerate_hypotheses = 0;
  double elapsed_seconds = 0.0;
  SearchConfig search;
  Intrinsics intrinsics = Intrinsics::default_camera();
  std::size_t button_count = 0;
};

/// residual_before is evaluate(detected), residual_after evaluate(rectified).
Report make_report(const SearchResult& result, const CornerSet& detected, const SearchConfig& cfg,
                   const Intrinsics& k);
/// include_timing = false drops elapsed_seconds so reports compare bit-for-bit.
std::string to_json(const Report& report, bool include_timing = true);
void save_report(const std::string& path, const Report& report);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

const char* to_string(PanelLayout layout) noexcept;

}  // namespace panelrect
