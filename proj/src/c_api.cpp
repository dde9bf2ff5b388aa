#include "panelrect/panelrect.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "panelrect/error.hpp"
#include "panelrect/io.hpp"
#include "panelrect/mask_pipeline.hpp"
#include "panelrect/pose_search.hpp"
#include "panelrect/rectify.hpp"
#include "panelrect/synth.hpp"

struct pr_corners {
  panelrect::CornerSet set;
  std::vector<int> class_ids;
  std::vector<std::string> labels;
};

struct pr_image {
  panelrect::RasterImage image;
};

struct pr_mask {
  panelrect::LabelMask mask;
};

struct pr_detection {
  panelrect::DetectionResult result;
};

struct pr_search_result {
  panelrect::SearchResult result;
  panelrect::Report report;
};

namespace {

using namespace panelrect;

thread_local std::string g_last_error;

pr_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return PR_ERR_INVALID_ARGUMENT;
    case ErrorCode::WrongFrame: return PR_ERR_WRONG_FRAME;
    case ErrorCode::DegenerateDepth: return PR_ERR_DEGENERATE_DEPTH;
    case ErrorCode::DegeneratePose: return PR_ERR_DEGENERATE_POSE;
    case ErrorCode::DegenerateButton: return PR_ERR_DEGENERATE_BUTTON;
    case ErrorCode::EmptyPanel: return PR_ERR_EMPTY_PANEL;
    case ErrorCode::LineDetection: return PR_ERR_LINE_DETECTION;
    case ErrorCode::QuadAssembly: return PR_ERR_QUAD_ASSEMBLY;
    case ErrorCode::NoIntersection: return PR_ERR_NO_INTERSECTION;
    case ErrorCode::Ordering: return PR_ERR_ORDERING;
    case ErrorCode::NoSolution: return PR_ERR_NO_SOLUTION;
    case ErrorCode::OutOfFrame: return PR_ERR_OUT_OF_FRAME;
    case ErrorCode::Overlap: return PR_ERR_OVERLAP;
    case ErrorCode::Io: return PR_ERR_IO;
    case ErrorCode::Parse: return PR_ERR_PARSE;
  }
  return PR_ERR_INTERNAL;
}

pr_status fail(pr_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
pr_status guarded(Fn&& fn) {
  try {
    fn();
    return PR_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PR_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, message);
}

Intrinsics intrinsics_of(const pr_intrinsics* k) {
  return k ? Intrinsics(k->fx, k->fy, k->ox, k->oy) : Intrinsics::default_camera();
}

pr_intrinsics to_c(const Intrinsics& k) { return {k.fx(), k.fy(), k.ox(), k.oy()}; }

PoseHypothesis pose_of(const pr_pose* p) {
  require(p != nullptr, "pose is null");
  return {p->theta_x, p->theta_y, p->theta_z, Vec3(p->t[0], p->t[1], p->t[2])};
}

pr_pose to_c(const PoseHypothesis& p) { return {p.theta_x, p.theta_y, p.theta_z, {p.t.x(), p.t.y(), p.t.z()}}; }

PanelSpec panel_of(const pr_panel_spec* s) {
  if (!s) return PanelSpec::vertical_pair();
  PanelSpec p;
  switch (s->layout) {
    case PR_LAYOUT_VERTICAL_PAIR: p.layout = PanelLayout::VerticalPair; break;
    case PR_LAYOUT_SINGLE_COLUMN: p.layout = PanelLayout::SingleColumn; break;
    case PR_LAYOUT_GRID: p.layout = PanelLayout::Grid; break;
    default: throw Error(ErrorCode::InvalidArgument, "unknown panel layout");
  }
  p.rows = s->rows;
  p.cols = s->cols;
  p.button_width = s->button_width;
  p.button_height = s->button_height;
  p.spacing = s->spacing;
  p.center = {s->center_x, s->center_y};
  p.image_width = s->image_width;
  p.image_height = s->image_height;
  return p;
}

SearchConfig config_of(const pr_search_config* c) {
  SearchConfig cfg;
  if (!c) return cfg;
  cfg.alpha = c->alpha;
  cfg.beta = c->beta;
  cfg.gamma = c->gamma;
  cfg.coarse_to_fine = c->coarse_to_fine != 0;
  cfg.worker_count = c->worker_count;
  cfg.storage = c->streaming ? ScoreStorage::Streaming : ScoreStorage::Table;
  if (c->dump_scores_path) cfg.dump_scores_path = c->dump_scores_path;
  return cfg;
}

DetectParams params_of(const pr_detect_params* p) {
  DetectParams d;
  if (!p) return d;
  d.closing_radius = p->closing_radius;
  d.morphology = p->literal_opening ? MorphologyOrder::ErodeThenDilate : MorphologyOrder::DilateThenErode;
  d.min_area = p->min_area;
  d.hough.rho_step = p->rho_step;
  d.hough.theta_step = deg_to_rad(p->theta_step_deg);
  d.hough.peak_ratio = p->peak_ratio;
  d.hough.nms_rho = p->nms_rho;
  d.hough.nms_theta = deg_to_rad(p->nms_theta_deg);
  d.min_edge_separation = p->min_edge_separation;
  d.refine_lines = p->refine_lines != 0;
  return d;
}

pr_corners* wrap(CornerSet set, std::vector<int> ids = {}, std::vector<std::string> labels = {}) {
  if (ids.size() != set.button_count()) {
    ids.resize(set.button_count());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i + 1);
  }
  labels.resize(set.button_count());
  return new pr_corners{std::move(set), std::move(ids), std::move(labels)};
}

template <typename T>
void reset(T** out) {
  if (out) *out = nullptr;
}

CornerFile corner_file_of(const pr_corners& c, std::optional<Intrinsics> k) {
  std::vector<std::uint8_t> ids;
  CornerFile file = CornerFile::from_corners(c.set, ids, k);
  for (std::size_t i = 0; i < file.buttons.size(); ++i) {
    file.buttons[i].class_id = c.class_ids[i];
    file.buttons[i].label = c.labels[i];
  }
  return file;
}

pr_corners* wrap(const CornerFile& file) {
  std::vector<int> ids;
  std::vector<std::string> labels;
  for (const auto& b : file.buttons) {
    ids.push_back(b.class_id);
    labels.push_back(b.label);
  }
  return wrap(file.corner_set(), std::move(ids), std::move(labels));
}

}  // namespace

extern "C" {

const char* pr_version(void) { return "1.0.0"; }

const char* pr_status_string(pr_status status) {
  switch (status) {
    case PR_OK: return "ok";
    case PR_ERR_INTERNAL: return "internal error";
    default: break;
  }
  if (status >= PR_ERR_INVALID_ARGUMENT && status <= PR_ERR_PARSE) return to_string(static_cast<ErrorCode>(status));
  return "unknown status";
}

const char* pr_last_error_message(void) { return g_last_error.c_str(); }

void pr_string_free(char* s) { std::free(s); }

void pr_intrinsics_default(pr_intrinsics* k) {
  if (k) *k = to_c(Intrinsics::default_camera());
}

void pr_search_config_default(pr_search_config* cfg) {
  if (!cfg) return;
  const SearchConfig d;
  *cfg = {d.alpha, d.beta, d.gamma, 0, 0, 0, nullptr};
}

void pr_detect_params_default(pr_detect_params* params) {
  if (!params) return;
  const DetectParams d;
  *params = {d.closing_radius,
             0,
             d.min_area,
             d.hough.rho_step,
             rad_to_deg(d.hough.theta_step),
             d.hough.peak_ratio,
             d.hough.nms_rho,
             rad_to_deg(d.hough.nms_theta),
             d.min_edge_separation,
             d.refine_lines ? 1 : 0};
}

void pr_panel_spec_default(pr_panel_spec* spec) {
  if (!spec) return;
  const PanelSpec d = PanelSpec::vertical_pair();
  *spec = {PR_LAYOUT_VERTICAL_PAIR, d.rows,       d.cols,       d.button_width,  d.button_height, d.spacing,
           d.center.x(),            d.center.y(), d.image_width, d.image_height};
}

pr_status pr_corners_create(const double* xy, size_t button_count, pr_corners** out) {
  reset(out);
  return guarded([&] {
    require(xy != nullptr && out != nullptr, "null argument");
    require(button_count > 0, "corner set must contain at least one button");
    std::vector<std::array<Vec2, 4>> quads(button_count);
    for (std::size_t b = 0; b < button_count; ++b) {
      for (std::size_t j = 0; j < 4; ++j) quads[b][j] = {xy[8 * b + 2 * j], xy[8 * b + 2 * j + 1]};
    }
    *out = wrap(CornerSet::from_pixels(quads));
  });
}

void pr_corners_free(pr_corners* corners) { delete corners; }

size_t pr_corners_button_count(const pr_corners* corners) { return corners ? corners->set.button_count() : 0; }

pr_status pr_corners_get(const pr_corners* corners, double* xy, size_t capacity_buttons) {
  return guarded([&] {
    require(corners != nullptr && xy != nullptr, "null argument");
    require(capacity_buttons >= corners->set.button_count(), "output buffer too small");
    std::size_t i = 0;
    for (const Vec3& c : corners->set.corners()) {
      xy[i++] = c.x();
      xy[i++] = c.y();
    }
  });
}

pr_status pr_corners_set_class_ids(pr_corners* corners, const int* ids, size_t count) {
  return guarded([&] {
    require(corners != nullptr && ids != nullptr, "null argument");
    require(count == corners->set.button_count(), "class id count must equal the button count");
    corners->class_ids.assign(ids, ids + count);
  });
}

int pr_corners_class_id(const pr_corners* corners, size_t button) {
  if (!corners || button >= corners->class_ids.size()) return -1;
  return corners->class_ids[button];
}

pr_status pr_corners_load_json(const char* path, pr_corners** out, pr_intrinsics* k, int* has_intrinsics) {
  reset(out);
  if (has_intrinsics) *has_intrinsics = 0;
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    const CornerFile file = load_corner_file(path);
    if (file.intrinsics) {
      if (k) *k = to_c(*file.intrinsics);
      if (has_intrinsics) *has_intrinsics = 1;
    }
    *out = wrap(file);
  });
}

pr_status pr_corners_save_json(const pr_corners* corners, const char* path, const pr_intrinsics* k) {
  return guarded([&] {
    require(corners != nullptr && path != nullptr, "null argument");
    std::optional<Intrinsics> intr;
    if (k) intr = intrinsics_of(k);
    save_corner_file(path, corner_file_of(*corners, intr));
  });
}

pr_status pr_corners_default_reference(const pr_corners* detected, pr_corners** out) {
  reset(out);
  return guarded([&] {
    require(detected != nullptr && out != nullptr, "null argument");
    PanelSpec spec = infer_panel_spec(detected->set);
    SyntheticPanel panel = generate_reference(spec);
    *out = wrap(std::move(panel.corners), detected->class_ids, detected->labels);
  });
}

pr_status pr_evaluate(const pr_corners* corners, const pr_intrinsics* k, double* out) {
  return guarded([&] {
    require(corners != nullptr && out != nullptr, "null argument");
    *out = evaluate(corners->set, intrinsics_of(k));
  });
}

pr_status pr_pose_to_homography(const pr_pose* pose, const pr_intrinsics* k, double h[9]) {
  return guarded([&] {
    require(h != nullptr, "null argument");
    const Mat3 m = pose_to_homography(pose_of(pose), intrinsics_of(k));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) h[3 * r + c] = m(r, c);
    }
  });
}

pr_status pr_corners_apply_pose(const pr_corners* corners, const pr_pose* pose, const pr_intrinsics* k,
                                pr_corners** out) {
  reset(out);
  return guarded([&] {
    require(corners != nullptr && out != nullptr, "null argument");
    const Intrinsics intr = intrinsics_of(k);
    const CornerSet moved = project(apply_pose(back_project(to_homogeneous(corners->set), intr), pose_of(pose)), intr);
    *out = wrap(make_corner_set(Frame::PixelImage, {moved.corners().begin(), moved.corners().end()}),
                corners->class_ids, corners->labels);
  });
}

pr_status pr_image_create(int width, int height, int channels, const uint8_t* samples, pr_image** out) {
  reset(out);
  return guarded([&] {
    require(out != nullptr, "null argument");
    RasterImage img(width, height, channels);
    if (samples) std::memcpy(img.samples.data(), samples, img.samples.size());
    *out = new pr_image{std::move(img)};
  });
}

pr_status pr_image_load_png(const char* path, pr_image** out) {
  reset(out);
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new pr_image{read_png(path)};
  });
}

pr_status pr_image_save_png(const pr_image* image, const char* path) {
  return guarded([&] {
    require(image != nullptr && path != nullptr, "null argument");
    write_png(path, image->image);
  });
}

void pr_image_free(pr_image* image) { delete image; }
int pr_image_width(const pr_image* image) { return image ? image->image.width : 0; }
int pr_image_height(const pr_image* image) { return image ? image->image.height : 0; }
int pr_image_channels(const pr_image* image) { return image ? image->image.channels : 0; }
const uint8_t* pr_image_samples(const pr_image* image) { return image ? image->image.samples.data() : nullptr; }

pr_status pr_mask_create(int width, int height, const uint8_t* labels, pr_mask** out) {
  reset(out);
  return guarded([&] {
    require(out != nullptr, "null argument");
    LabelMask mask(width, height);
    if (labels) std::memcpy(mask.labels.data(), labels, mask.labels.size());
    *out = new pr_mask{std::move(mask)};
  });
}

pr_status pr_mask_load_png(const char* path, pr_mask** out) {
  reset(out);
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new pr_mask{read_mask_png(path)};
  });
}

pr_status pr_mask_save_png(const pr_mask* mask, const char* path) {
  return guarded([&] {
    require(mask != nullptr && path != nullptr, "null argument");
    write_mask_png(path, mask->mask);
  });
}

void pr_mask_free(pr_mask* mask) { delete mask; }
int pr_mask_width(const pr_mask* mask) { return mask ? mask->mask.width : 0; }
int pr_mask_height(const pr_mask* mask) { return mask ? mask->mask.height : 0; }
const uint8_t* pr_mask_labels(const pr_mask* mask) { return mask ? mask->mask.labels.data() : nullptr; }

pr_status pr_detect_corners(const pr_mask* mask, const pr_detect_params* params, pr_detection** out) {
  reset(out);
  return guarded([&] {
    require(mask != nullptr && out != nullptr, "null argument");
    *out = new pr_detection{detect_corners(mask->mask, params_of(params))};
  });
}

void pr_detection_free(pr_detection* detection) { delete detection; }

size_t pr_detection_region_count(const pr_detection* detection) {
  return detection ? detection->result.buttons.size() : 0;
}

size_t pr_detection_success_count(const pr_detection* detection) {
  return detection ? detection->result.succeeded() : 0;
}

pr_button_status pr_detection_region_status(const pr_detection* detection, size_t region) {
  if (!detection || region >= detection->result.buttons.size()) return PR_BUTTON_LINE_DETECTION_FAILED;
  return static_cast<pr_button_status>(detection->result.buttons[region].status);
}

const char* pr_detection_region_message(const pr_detection* detection, size_t region) {
  if (!detection || region >= detection->result.buttons.size()) return "";
  return detection->result.buttons[region].message.c_str();
}

pr_status pr_detection_corners(const pr_detection* detection, pr_corners** out) {
  reset(out);
  return guarded([&] {
    require(detection != nullptr && out != nullptr, "null argument");
    std::vector<int> ids;
    for (std::uint8_t id : detection->result.class_ids()) ids.push_back(id);
    *out = wrap(detection->result.corners(), std::move(ids));
  });
}

pr_status pr_search_pose(const pr_corners* detected, const pr_corners* reference, const pr_intrinsics* k,
                         const pr_search_config* cfg, pr_search_result** out) {
  reset(out);
  return guarded([&] {
    require(detected != nullptr && reference != nullptr && out != nullptr, "null argument");
    const Intrinsics intr = intrinsics_of(k);
    const SearchConfig config = config_of(cfg);
    SearchResult result = run_search(detected->set, reference->set, intr, config);
    Report report = make_report(result, detected->set, config, intr);
    *out = new pr_search_result{std::move(result), std::move(report)};
  });
}

void pr_search_result_free(pr_search_result* result) { delete result; }

void pr_search_result_pose(const pr_search_result* result, pr_pose* pose) {
  if (result && pose) *pose = to_c(result->result.best_pose);
}

double pr_search_result_final_cr(const pr_search_result* result) { return result ? result->result.best_final_cr : 0.0; }

void pr_search_result_scores(const pr_search_result* result, pr_scores* raw, pr_scores* normalized) {
  if (!result) return;
  const auto& s = result->result.scores_best;
  if (raw) *raw = {s.raw.kh_norm, s.raw.krv, s.raw.cos_norm};
  if (normalized && s.normalized) *normalized = {s.normalized->kh_norm, s.normalized->krv, s.normalized->cos_norm};
}

double pr_search_result_residual(const pr_search_result* result) {
  return result ? result->result.residual_cos_norm : 0.0;
}

uint64_t pr_search_result_hypotheses(const pr_search_result* result) {
  return result ? result->result.hypotheses_evaluated : 0;
}

double pr_search_result_elapsed(const pr_search_result* result) { return result ? result->result.elapsed_seconds : 0.0; }

pr_status pr_search_result_rectified_corners(const pr_search_result* result, pr_corners** out) {
  reset(out);
  return guarded([&] {
    require(result != nullptr && out != nullptr, "null argument");
    *out = wrap(result->result.rectified_corners);
  });
}

pr_status pr_search_result_report_json(const pr_search_result* result, int include_timing, char** json) {
  if (json) *json = nullptr;
  return guarded([&] {
    require(result != nullptr && json != nullptr, "null argument");
    const std::string text = to_json(result->report, include_timing != 0);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *json = buf;
  });
}

pr_status pr_search_result_save_report(const pr_search_result* result, const char* path) {
  return guarded([&] {
    require(result != nullptr && path != nullptr, "null argument");
    save_report(path, result->report);
  });
}

pr_status pr_warp_image(const pr_image* src, const pr_pose* pose, const pr_intrinsics* k, int out_width,
                        int out_height, int nearest, pr_image** out) {
  reset(out);
  return guarded([&] {
    require(src != nullptr && out != nullptr, "null argument");
    std::optional<ImageSize> size;
    if (out_width > 0 && out_height > 0) size = ImageSize{out_width, out_height};
    *out = new pr_image{warp_image(src->image, pose_of(pose), intrinsics_of(k), size,
                                   nearest ? Interpolation::Nearest : Interpolation::Bilinear)};
  });
}

pr_status pr_overlay_corners(const pr_image* image, const pr_corners* corners, pr_image** out) {
  reset(out);
  return guarded([&] {
    require(image != nullptr && corners != nullptr && out != nullptr, "null argument");
    *out = new pr_image{overlay_corners(image->image, corners->set)};
  });
}

pr_status pr_synth_reference(const pr_panel_spec* spec, pr_corners** corners, pr_mask** mask, pr_image** image) {
  reset(corners);
  reset(mask);
  reset(image);
  return guarded([&] {
    SyntheticPanel panel = generate_reference(panel_of(spec));
    if (corners) *corners = wrap(std::move(panel.corners));
    if (mask) *mask = new pr_mask{std::move(panel.mask)};
    if (image) *image = new pr_image{std::move(panel.image)};
  });
}

pr_status pr_synth_distort(const pr_panel_spec* spec, const pr_pose* pose, const pr_intrinsics* k,
                           pr_corners** corners, pr_mask** mask, pr_image** image, pr_pose* effective) {
  reset(corners);
  reset(mask);
  reset(image);
  return guarded([&] {
    const SyntheticPanel reference = generate_reference(panel_of(spec));
    DistortedPanel d = distort(reference, pose_of(pose), intrinsics_of(k));
    if (corners) *corners = wrap(std::move(d.corners));
    if (mask) *mask = new pr_mask{std::move(d.mask)};
    if (image) *image = new pr_image{std::move(d.image)};
    if (effective) *effective = to_c(d.pose);
  });
}

pr_status pr_synth_centering_translation(const pr_panel_spec* spec, const pr_pose* pose, const pr_intrinsics* k,
                                         double t[3]) {
  return guarded([&] {
    require(t != nullptr, "null argument");
    const Vec3 c = centering_translation(pose_of(pose), panel_of(spec), intrinsics_of(k));
    for (int i = 0; i < 3; ++i) t[i] = c[i];
  });
}

pr_status pr_synth_write_bundle(const pr_panel_spec* spec, const pr_pose* pose, const pr_intrinsics* k,
                                const char* out_dir, pr_pose* effective) {
  return guarded([&] {
    require(out_dir != nullptr, "null argument");
    const PanelSpec panel_spec = panel_of(spec);
    const Intrinsics intr = intrinsics_of(k);
    const PoseHypothesis requested = pose_of(pose);
    const SyntheticPanel reference = generate_reference(panel_spec);
    const DistortedPanel d = distort(reference, requested, intr);

    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create directory " + dir.string() + ": " + ec.message());

    write_png((dir / "image.png").string(), d.image);
    write_mask_png((dir / "mask.png").string(), d.mask);
    std::vector<std::uint8_t> ids;
    for (std::size_t i = 0; i < d.corners.button_count(); ++i) ids.push_back(static_cast<std::uint8_t>(i + 1));
    save_corner_file((dir / "corners.json").string(), CornerFile::from_corners(d.corners, ids, intr));
    save_pose_file((dir / "pose.json").string(), PoseFile{kSchemaVersion, d.pose, requested.t, intr, panel_spec});
    if (effective) *effective = to_c(d.pose);
  });
}

pr_status pr_pose_load_json(const char* path, pr_pose* pose) {
  return guarded([&] {
    require(path != nullptr && pose != nullptr, "null argument");
    *pose = to_c(load_pose_file(path).pose);
  });
}

}  // extern "C"
