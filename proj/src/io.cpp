#include "panelrect/io.hpp"

#include <fstream>
#include <sstream>

#include <png.h>

#include <json.hpp>

#include "panelrect/error.hpp"
#include "panelrect/synth.hpp"

namespace panelrect {

namespace {

using nlohmann::json;

json intrinsics_json(const Intrinsics& k) { return {{"fx", k.fx()}, {"fy", k.fy()}, {"ox", k.ox()}, {"oy", k.oy()}}; }

Intrinsics intrinsics_from(const json& j) {
  return {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("ox").get<double>(), j.at("oy").get<double>()};
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Parse, "expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json scores_json(const RawScores& s) { return {{"kh_norm", s.kh_norm}, {"krv", s.krv}, {"cos_norm", s.cos_norm}}; }

PanelLayout layout_from(const std::string& name) {
  if (name == "vertical-pair") return PanelLayout::VerticalPair;
  if (name == "single-column") return PanelLayout::SingleColumn;
  if (name == "grid") return PanelLayout::Grid;
  throw Error(ErrorCode::Parse, "unknown panel layout: " + name);
}

json panel_json(const PanelSpec& p) {
  return {{"layout", to_string(p.layout)},
          {"rows", p.rows},
          {"cols", p.cols},
          {"button_width", p.button_width},
          {"button_height", p.button_height},
          {"spacing", p.spacing},
          {"center", {p.center.x(), p.center.y()}},
          {"image_width", p.image_width},
          {"image_height", p.image_height}};
}

PanelSpec panel_from(const json& j) {
  PanelSpec p;
  p.layout = layout_from(j.at("layout").get<std::string>());
  p.rows = j.at("rows").get<int>();
  p.cols = j.at("cols").get<int>();
  p.button_width = j.at("button_width").get<double>();
  p.button_height = j.at("button_height").get<double>();
  p.spacing = j.at("spacing").get<double>();
  p.center = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
  p.image_width = j.at("image_width").get<int>();
  p.image_height = j.at("image_height").get<int>();
  return p;
}

template <typename Fn>
auto parse_guarded(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, what + ": " + e.what());
  }
}

void check_schema(const json& j, const std::string& what) {
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw Error(ErrorCode::Parse, what + ": unsupported schema_version " + std::to_string(version));
  }
}

}  // namespace

const char* to_string(PanelLayout layout) noexcept {
  switch (layout) {
    case PanelLayout::VerticalPair: return "vertical-pair";
    case PanelLayout::SingleColumn: return "single-column";
    case PanelLayout::Grid: return "grid";
  }
  return "unknown";
}

RasterImage read_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(ErrorCode::Io, "cannot read PNG " + path + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  RasterImage img(static_cast<int>(png.width), static_cast<int>(png.height), color ? 3 : 1);
  // No background: alpha is stripped, gray stays unscaled.
  if (!png_image_finish_read(&png, nullptr, img.samples.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorCode::Io, "cannot decode PNG " + path + ": " + png.message);
  }
  return img;
}

void write_png(const std::string& path, const RasterImage& image) {
  image.validate();
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.samples.data(), 0, nullptr)) {
    throw Error(ErrorCode::Io, "cannot write PNG " + path + ": " + png.message);
  }
}

LabelMask read_mask_png(const std::string& path) {
  RasterImage img = read_png(path);
  if (img.channels != 1) throw Error(ErrorCode::Io, path + ": a label mask must be a single-channel image");
  LabelMask mask(img.width, img.height);
  mask.labels = std::move(img.samples);
  return mask;
}

void write_mask_png(const std::string& path, const LabelMask& mask) {
  mask.validate();
  RasterImage img(mask.width, mask.height, 1);
  img.samples = mask.labels;
  write_png(path, img);
}

CornerSet CornerFile::corner_set() const {
  std::vector<std::array<Vec2, 4>> quads;
  for (const auto& b : buttons) quads.push_back(b.corners);
  if (quads.empty()) throw Error(ErrorCode::EmptyPanel, "corner file has no buttons");
  return CornerSet::from_pixels(quads);
}

CornerFile CornerFile::from_corners(const CornerSet& pixels, const std::vector<std::uint8_t>& class_ids,
                                    std::optional<Intrinsics> k) {
  if (pixels.frame() != Frame::PixelImage) {
    throw Error(ErrorCode::WrongFrame, "corner file: corners must be in the pixel frame");
  }
  CornerFile file;
  file.intrinsics = k;
  for (std::size_t i = 0; i < pixels.button_count(); ++i) {
    ButtonRecord rec;
    rec.class_id = i < class_ids.size() ? class_ids[i] : static_cast<int>(i + 1);
    for (std::size_t j = 0; j < 4; ++j) rec.corners[j] = pixels.pixel(i, j);
    file.buttons.push_back(rec);
  }
  return file;
}

CornerFile parse_corner_file(const std::string& json_text) {
  return parse_guarded("corner file", [&] {
    const json j = json::parse(json_text);
    check_schema(j, "corner file");
    CornerFile file;
    if (j.contains("intrinsics") && !j.at("intrinsics").is_null()) file.intrinsics = intrinsics_from(j.at("intrinsics"));
    for (const json& b : j.at("buttons")) {
      ButtonRecord rec;
      rec.class_id = b.at("class_id").get<int>();
      if (b.contains("label")) rec.label = b.at("label").get<std::string>();
      const json& corners = b.at("corners");
      if (!corners.is_array() || corners.size() != 4) throw Error(ErrorCode::Parse, "corner file: each button needs 4 corners");
      for (std::size_t i = 0; i < 4; ++i) {
        if (!corners[i].is_array() || corners[i].size() != 2) throw Error(ErrorCode::Parse, "corner file: corners are [x, y] pairs");
        rec.corners[i] = {corners[i][0].get<double>(), corners[i][1].get<double>()};
      }
      if (!is_canonical_convex(rec.corners)) {
        throw Error(ErrorCode::Parse, "corner file: button " + std::to_string(file.buttons.size() + 1) +
                                          " is not convex in canonical (TL, TR, BR, BL) order");
      }
      file.buttons.push_back(rec);
    }
    if (file.buttons.empty()) throw Error(ErrorCode::Parse, "corner file: no buttons");
    return file;
  });
}

std::string to_json(const CornerFile& file) {
  json j;
  j["schema_version"] = file.schema_version;
  if (file.intrinsics) j["intrinsics"] = intrinsics_json(*file.intrinsics);
  j["buttons"] = json::array();
  for (const auto& b : file.buttons) {
    json rec{{"class_id", b.class_id}};
    if (!b.label.empty()) rec["label"] = b.label;
    rec["corners"] = json::array();
    for (const Vec2& c : b.corners) rec["corners"].push_back({c.x(), c.y()});
    j["buttons"].push_back(rec);
  }
  return j.dump(2) + "\n";
}

CornerFile load_corner_file(const std::string& path) { return parse_corner_file(read_text_file(path)); }

void save_corner_file(const std::string& path, const CornerFile& file) { write_text_file(path, to_json(file)); }

PoseFile parse_pose_file(const std::string& json_text) {
  return parse_guarded("pose file", [&] {
    const json j = json::parse(json_text);
    check_schema(j, "pose file");
    PoseFile file;
    const json& angles = j.at("theta_deg");
    file.pose.theta_x = angles.at(0).get<double>();
    file.pose.theta_y = angles.at(1).get<double>();
    file.pose.theta_z = angles.at(2).get<double>();
    file.pose.t = vec3_from(j.at("translation"));
    if (j.contains("requested_translation")) file.requested_translation = vec3_from(j.at("requested_translation"));
    if (j.contains("intrinsics")) file.intrinsics = intrinsics_from(j.at("intrinsics"));
    if (j.contains("panel")) file.panel = panel_from(j.at("panel"));
    return file;
  });
}

std::string to_json(const PoseFile& file) {
  json j;
  j["schema_version"] = file.schema_version;
  j["theta_deg"] = {file.pose.theta_x, file.pose.theta_y, file.pose.theta_z};
  j["translation"] = vec3_json(file.pose.t);
  j["requested_translation"] = vec3_json(file.requested_translation);
  if (file.intrinsics) j["intrinsics"] = intrinsics_json(*file.intrinsics);
  if (file.panel) j["panel"] = panel_json(*file.panel);
  return j.dump(2) + "\n";
}

PoseFile load_pose_file(const std::string& path) { return parse_pose_file(read_text_file(path)); }

void save_pose_file(const std::string& path, const PoseFile& file) { write_text_file(path, to_json(file)); }

Report make_report(const SearchResult& result, const CornerSet& detected, const SearchConfig& cfg,
                   const Intrinsics& k) {
  Report r;
  r.best_pose = result.best_pose;
  r.best_final_cr = result.best_final_cr;
  r.raw_scores = result.scores_best.raw;
  r.normalized_scores = result.scores_best.normalized.value_or(RawScores{});
  r.residual_before = evaluate(detected, k);
  r.residual_after = evaluate(result.rectified_corners, k);
  r.hypotheses_evaluated = result.hypotheses_evaluated;
  r.coarse_hypotheses = result.coarse_hypotheses;
  r.fine_hypotheses = result.fine_hypotheses;
  r.degenerate_hypotheses = result.degenerate_hypotheses;
  r.elapsed_seconds = result.elapsed_seconds;
  r.search = cfg;
  r.intrinsics = k;
  r.button_count = detected.button_count();
  return r;
}

std::string to_json(const Report& report, bool include_timing) {
  json j;
  j["schema_version"] = report.schema_version;
  j["best_angles_deg"] = {report.best_pose.theta_x, report.best_pose.theta_y, report.best_pose.theta_z};
  j["translation"] = vec3_json(report.best_pose.t);
  j["best_final_cr"] = report.best_final_cr;
  j["raw_scores"] = scores_json(report.raw_scores);
  j["normalized_scores"] = scores_json(report.normalized_scores);
  j["residual_before"] = report.residual_before;
  j["residual_after"] = report.residual_after;
  j["hypotheses_evaluated"] = report.hypotheses_evaluated;
  j["degenerate_hypotheses"] = report.degenerate_hypotheses;
  if (report.search.coarse_to_fine) {
    j["coarse_hypotheses"] = report.coarse_hypotheses;
    j["fine_hypotheses"] = report.fine_hypotheses;
  }
  if (include_timing) j["elapsed_seconds"] = report.elapsed_seconds;
  j["search"] = {{"alpha", report.search.alpha},
                 {"beta", report.search.beta},
                 {"gamma", report.search.gamma},
                 {"coarse_to_fine", report.search.coarse_to_fine}};
  j["intrinsics"] = intrinsics_json(report.intrinsics);
  j["button_count"] = report.button_count;
  return j.dump(2) + "\n";
}

void save_report(const std::string& path, const Report& report) { write_text_file(path, to_json(report)); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

}  // namespace panelrect
