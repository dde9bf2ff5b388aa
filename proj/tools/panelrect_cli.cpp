// panelrect_cli: detect-corners, rectify, evaluate, synth. Talks to the
// library only through the C API.
#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "panelrect/panelrect.h"

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kPartial = 2;

struct CApiError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(pr_status s, const std::string& what) {
  if (s != PR_OK) throw CApiError(what + ": " + pr_status_string(s) + " (" + pr_last_error_message() + ")");
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Corners = std::unique_ptr<pr_corners, Deleter<pr_corners, pr_corners_free>>;
using Image = std::unique_ptr<pr_image, Deleter<pr_image, pr_image_free>>;
using Mask = std::unique_ptr<pr_mask, Deleter<pr_mask, pr_mask_free>>;
using Detection = std::unique_ptr<pr_detection, Deleter<pr_detection, pr_detection_free>>;
using Result = std::unique_ptr<pr_search_result, Deleter<pr_search_result, pr_search_result_free>>;

std::vector<double> parse_list(const std::string& text, std::size_t n, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "'" + text + "' is not a list of " + std::to_string(n) + " numbers");
    }
  }
  if (out.size() != n) throw CLI::ValidationError(flag, "expected " + std::to_string(n) + " comma-separated numbers");
  return out;
}

// Flag > corners file > default camera.
pr_intrinsics resolve_intrinsics(const std::string& flag, const pr_intrinsics* from_file) {
  pr_intrinsics k;
  pr_intrinsics_default(&k);
  if (!flag.empty()) {
    const auto v = parse_list(flag, 4, "--intrinsics");
    k = {v[0], v[1], v[2], v[3]};
  } else if (from_file) {
    k = *from_file;
  }
  return k;
}

Corners load_corners(const std::string& path, std::optional<pr_intrinsics>* file_k = nullptr) {
  pr_corners* c = nullptr;
  pr_intrinsics k;
  int has_k = 0;
  check(pr_corners_load_json(path.c_str(), &c, &k, &has_k), "cannot load " + path);
  if (file_k) *file_k = has_k ? std::optional(k) : std::nullopt;
  return Corners(c);
}

Mask load_mask(const std::string& path) {
  pr_mask* m = nullptr;
  check(pr_mask_load_png(path.c_str(), &m), "cannot load mask " + path);
  return Mask(m);
}

struct DetectOptions {
  int closing_radius = 2;
  std::size_t min_area = 100;
  bool literal_opening = false;
  bool no_refine = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--closing-radius", closing_radius, "Morphological closing radius, pixels")->capture_default_str();
    cmd->add_option("--min-area", min_area, "Smallest button region kept, pixels")->capture_default_str();
    cmd->add_flag("--literal-opening", literal_opening, "Erode before dilating instead of closing");
    cmd->add_flag("--no-refine", no_refine, "Keep raw Hough lines without the least-squares refit");
  }
  pr_detect_params params() const {
    pr_detect_params p;
    pr_detect_params_default(&p);
    p.closing_radius = closing_radius;
    p.min_area = min_area;
    p.literal_opening = literal_opening;
    p.refine_lines = !no_refine;
    return p;
  }
};

// Runs detection and reports failed regions on stderr. Returns kOk, kPartial
// or kFailure; corners is filled unless the result is kFailure.
int detect(const pr_mask* mask, const DetectOptions& opts, Corners* corners) {
  const pr_detect_params params = opts.params();
  pr_detection* raw = nullptr;
  const pr_status s = pr_detect_corners(mask, &params, &raw);
  if (s != PR_OK) {
    std::fprintf(stderr, "detect-corners: %s (%s)\n", pr_status_string(s), pr_last_error_message());
    return kFailure;
  }
  Detection det(raw);
  const std::size_t regions = pr_detection_region_count(det.get());
  for (std::size_t i = 0; i < regions; ++i) {
    if (pr_detection_region_status(det.get(), i) != PR_BUTTON_OK) {
      std::fprintf(stderr, "warning: region %zu: %s\n", i + 1, pr_detection_region_message(det.get(), i));
    }
  }
  pr_corners* c = nullptr;
  check(pr_detection_corners(det.get(), &c), "detection corners");
  corners->reset(c);
  return pr_detection_success_count(det.get()) == regions ? kOk : kPartial;
}

void save_overlay(const pr_image* base, const pr_corners* corners, const std::string& path) {
  pr_image* marked = nullptr;
  check(pr_overlay_corners(base, corners, &marked), "overlay");
  Image owned(marked);
  check(pr_image_save_png(owned.get(), path.c_str()), "cannot write " + path);
}

struct SearchOptions {
  double alpha = -40.0, beta = 40.0, gamma = 0.5;
  bool coarse_to_fine = false;
  bool streaming = false;
  unsigned workers = 0;
  std::string dump_scores;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Lowest angle of the search grid, degrees")->capture_default_str();
    cmd->add_option("--beta", beta, "Highest angle of the search grid, degrees")->capture_default_str();
    cmd->add_option("--gamma", gamma, "Grid step, degrees")->capture_default_str();
    cmd->add_flag("--coarse-to-fine", coarse_to_fine, "Coarse sweep then a local refinement (experimental)");
    cmd->add_flag("--streaming", streaming, "Recompute scores in a second sweep instead of storing them");
    cmd->add_option("--workers", workers, "Worker threads, 0 for all cores")->capture_default_str();
    cmd->add_option("--dump-scores", dump_scores, "Write every hypothesis and its raw scores to this file");
  }
  pr_search_config config() const {
    pr_search_config c;
    pr_search_config_default(&c);
    c.alpha = alpha;
    c.beta = beta;
    c.gamma = gamma;
    c.coarse_to_fine = coarse_to_fine;
    c.streaming = streaming;
    c.worker_count = workers;
    c.dump_scores_path = dump_scores.empty() ? nullptr : dump_scores.c_str();
    return c;
  }
};

int cmd_detect(const std::string& mask_path, const std::string& out, const std::string& overlay,
               const std::string& intrinsics, const DetectOptions& opts) {
  const Mask mask = load_mask(mask_path);
  Corners corners;
  const int code = detect(mask.get(), opts, &corners);
  if (code == kFailure) return code;

  std::optional<pr_intrinsics> k;
  if (!intrinsics.empty()) k = resolve_intrinsics(intrinsics, nullptr);
  check(pr_corners_save_json(corners.get(), out.c_str(), k ? &*k : nullptr), "cannot write " + out);
  if (!overlay.empty()) {
    // Labels become mid grays so the white crosses stand out.
    const int w = pr_mask_width(mask.get()), h = pr_mask_height(mask.get());
    std::vector<uint8_t> gray(pr_mask_labels(mask.get()), pr_mask_labels(mask.get()) + std::size_t(w) * h);
    for (auto& v : gray) v = v ? static_cast<uint8_t>(64 + v % 4 * 32) : 0;
    pr_image* base = nullptr;
    check(pr_image_create(w, h, 1, gray.data(), &base), "overlay canvas");
    Image owned(base);
    save_overlay(owned.get(), corners.get(), overlay);
  }
  return code;
}

struct RectifyArgs {
  std::string image, corners, mask, reference, output, report, rectified_corners, overlay, intrinsics;
  bool nearest = false;
};

int cmd_rectify(const RectifyArgs& a, const SearchOptions& search, const DetectOptions& det_opts) {
  Corners detected;
  std::optional<pr_intrinsics> file_k;
  int code = kOk;
  if (!a.corners.empty()) {
    detected = load_corners(a.corners, &file_k);
  } else {
    const Mask mask = load_mask(a.mask);
    code = detect(mask.get(), det_opts, &detected);
    if (code == kFailure) return code;
  }
  const pr_intrinsics k = resolve_intrinsics(a.intrinsics, file_k ? &*file_k : nullptr);

  Corners reference;
  if (!a.reference.empty()) {
    reference = load_corners(a.reference);
  } else {
    pr_corners* r = nullptr;
    check(pr_corners_default_reference(detected.get(), &r), "default reference panel");
    reference.reset(r);
  }
  if (pr_corners_button_count(reference.get()) != pr_corners_button_count(detected.get())) {
    throw CApiError("reference has " + std::to_string(pr_corners_button_count(reference.get())) +
                    " buttons but " + std::to_string(pr_corners_button_count(detected.get())) + " were detected");
  }

  pr_image* src_raw = nullptr;
  check(pr_image_load_png(a.image.c_str(), &src_raw), "cannot load image " + a.image);
  const Image src(src_raw);

  const pr_search_config cfg = search.config();
  pr_search_result* res_raw = nullptr;
  check(pr_search_pose(detected.get(), reference.get(), &k, &cfg, &res_raw), "pose search");
  const Result result(res_raw);
  pr_pose pose;
  pr_search_result_pose(result.get(), &pose);

  pr_image* out_raw = nullptr;
  check(pr_warp_image(src.get(), &pose, &k, 0, 0, a.nearest, &out_raw), "warp");
  const Image out(out_raw);
  check(pr_image_save_png(out.get(), a.output.c_str()), "cannot write " + a.output);

  if (!a.report.empty()) check(pr_search_result_save_report(result.get(), a.report.c_str()), "cannot write report");
  if (!a.rectified_corners.empty() || !a.overlay.empty()) {
    pr_corners* rc = nullptr;
    check(pr_search_result_rectified_corners(result.get(), &rc), "rectified corners");
    const Corners rectified(rc);
    if (!a.rectified_corners.empty()) {
      check(pr_corners_save_json(rectified.get(), a.rectified_corners.c_str(), &k), "cannot write corners");
    }
    if (!a.overlay.empty()) save_overlay(out.get(), rectified.get(), a.overlay);
  }
  std::printf("angles %.17g %.17g %.17g  final_cr %.17g  residual %.17g\n", pose.theta_x, pose.theta_y, pose.theta_z,
              pr_search_result_final_cr(result.get()), pr_search_result_residual(result.get()));
  return code;
}

int cmd_evaluate(const std::vector<std::string>& files, const std::string& intrinsics) {
  double sum = 0;
  for (const auto& f : files) {
    std::optional<pr_intrinsics> file_k;
    const Corners c = load_corners(f, &file_k);
    const pr_intrinsics k = resolve_intrinsics(intrinsics, file_k ? &*file_k : nullptr);
    double v = 0;
    check(pr_evaluate(c.get(), &k, &v), f);
    std::printf("%s\t%.17g\n", f.c_str(), v);
    sum += v;
  }
  if (files.size() > 1) std::printf("average\t%.17g\n", sum / static_cast<double>(files.size()));
  return kOk;
}

struct SynthArgs {
  std::string out, layout = "vertical-pair", grid, pose = "0,0,0", translation, intrinsics;
  int rows = 0;
  double button_width = 80, button_height = 80, spacing = 40;
};

int cmd_synth(const SynthArgs& a) {
  pr_panel_spec spec;
  pr_panel_spec_default(&spec);
  if (!a.grid.empty()) {
    int r = 0, c = 0;
    char x = 0, extra = 0;
    if (std::sscanf(a.grid.c_str(), "%d%c%d%c", &r, &x, &c, &extra) != 3 || (x != 'x' && x != 'X')) {
      throw CLI::ValidationError("--grid", "expected RxC, e.g. 3x2");
    }
    spec.layout = PR_LAYOUT_GRID;
    spec.rows = r;
    spec.cols = c;
  } else if (a.layout == "single-column") {
    spec.layout = PR_LAYOUT_SINGLE_COLUMN;
    spec.rows = a.rows > 0 ? a.rows : 3;
    spec.cols = 1;
  } else if (a.layout != "vertical-pair") {
    throw CLI::ValidationError("--layout", "use vertical-pair or single-column, or --grid RxC");
  }
  spec.button_width = a.button_width;
  spec.button_height = a.button_height;
  spec.spacing = a.spacing;

  const auto angles = parse_list(a.pose, 3, "--pose");
  pr_pose pose{angles[0], angles[1], angles[2], {0, 0, 0}};
  const pr_intrinsics k = resolve_intrinsics(a.intrinsics, nullptr);
  if (a.translation.empty()) {
    check(pr_synth_centering_translation(&spec, &pose, &k, pose.t), "centering translation");
  } else {
    const auto t = parse_list(a.translation, 3, "--translation");
    for (int i = 0; i < 3; ++i) pose.t[i] = t[i];
  }
  pr_pose effective;
  check(pr_synth_write_bundle(&spec, &pose, &k, a.out.c_str(), &effective), "synth");
  std::printf("wrote %s: angles %g %g %g, translation %.17g %.17g %.17g\n", a.out.c_str(), effective.theta_x,
              effective.theta_y, effective.theta_z, effective.t[0], effective.t[1], effective.t[2]);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perspective rectification of rectangular-button panels"};
  app.set_version_flag("--version", std::string(pr_version()));
  app.require_subcommand(1);

  std::string intrinsics;
  const char* intrinsics_help = "Camera fx,fy,ox,oy in pixels (default 320,320,320,240)";

  DetectOptions detect_opts;
  std::string detect_mask, detect_out, detect_overlay;
  auto* det = app.add_subcommand("detect-corners", "Find button corners in a label mask PNG");
  det->add_option("mask", detect_mask, "Label mask PNG (0 background, 1..K button classes)")->required()
      ->check(CLI::ExistingFile);
  det->add_option("-o,--output", detect_out, "Corner JSON")->required();
  det->add_option("--overlay", detect_overlay, "Write the mask with the corners marked");
  det->add_option("--intrinsics", intrinsics, intrinsics_help);
  detect_opts.add_to(det);

  RectifyArgs rect;
  SearchOptions search;
  DetectOptions rect_detect;
  auto* rec = app.add_subcommand("rectify", "Recover the camera pose and warp the image fronto-parallel");
  rec->add_option("image", rect.image, "Input image PNG")->required()->check(CLI::ExistingFile);
  auto* corners_opt = rec->add_option("--corners", rect.corners, "Detected corner JSON")->check(CLI::ExistingFile);
  auto* mask_opt = rec->add_option("--mask", rect.mask, "Label mask PNG to detect corners from")
                       ->check(CLI::ExistingFile);
  corners_opt->excludes(mask_opt);
  rec->add_option("--reference", rect.reference, "Reference corner JSON (default: standard panel of the same layout)")
      ->check(CLI::ExistingFile);
  rec->add_option("-o,--output", rect.output, "Rectified PNG")->required();
  rec->add_option("--report", rect.report, "Write the search report JSON");
  rec->add_option("--rectified-corners", rect.rectified_corners, "Write the rectified corner JSON");
  rec->add_option("--overlay", rect.overlay, "Write the rectified image with the corners marked");
  rec->add_flag("--nearest", rect.nearest, "Nearest-neighbour sampling instead of bilinear");
  rec->add_option("--intrinsics", intrinsics, intrinsics_help);
  search.add_to(rec);
  rect_detect.add_to(rec);

  std::vector<std::string> eval_files;
  auto* ev = app.add_subcommand("evaluate", "Print the rectification residual of corner files, plus their average");
  ev->add_option("corners", eval_files, "Corner JSON files")->required()->check(CLI::ExistingFile);
  ev->add_option("--intrinsics", intrinsics, intrinsics_help);

  SynthArgs syn;
  auto* sy = app.add_subcommand("synth", "Render a distorted synthetic panel bundle");
  sy->add_option("--out", syn.out, "Output directory")->required();
  sy->add_option("--layout", syn.layout, "vertical-pair or single-column")->capture_default_str();
  sy->add_option("--rows", syn.rows, "Buttons in a single column (default 3)");
  sy->add_option("--grid", syn.grid, "Grid layout RxC, e.g. 3x2");
  sy->add_option("--pose", syn.pose, "theta_x,theta_y,theta_z in degrees")->capture_default_str();
  sy->add_option("--translation", syn.translation, "Translation tx,ty,tz (default: keep the panel centre fixed)");
  sy->add_option("--button-width", syn.button_width, "Pixels")->capture_default_str();
  sy->add_option("--button-height", syn.button_height, "Pixels")->capture_default_str();
  sy->add_option("--spacing", syn.spacing, "Gap between buttons, pixels")->capture_default_str();
  sy->add_option("--intrinsics", intrinsics, intrinsics_help);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*det) return cmd_detect(detect_mask, detect_out, detect_overlay, intrinsics, detect_opts);
    if (*rec) {
      if (rect.corners.empty() && rect.mask.empty()) throw CLI::ValidationError("rectify", "give --corners or --mask");
      rect.intrinsics = intrinsics;
      return cmd_rectify(rect, search, rect_detect);
    }
    if (*ev) return cmd_evaluate(eval_files, intrinsics);
    if (*sy) {
      syn.intrinsics = intrinsics;
      return cmd_synth(syn);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
