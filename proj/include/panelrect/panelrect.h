/*
 * C interface to the panel rectification library.
 *
 * Every handle is opaque and owned by the caller once returned; release it
 * with the matching *_free function. Functions that can fail return a
 * pr_status; on failure, pr_last_error_message() describes the error for the
 * calling thread until its next failing call. Output handles are set to NULL
 * on failure.
 */
#ifndef PANELRECT_H
#define PANELRECT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PANELRECT_BUILDING)
#    define PANELRECT_API __declspec(dllexport)
#  else
#    define PANELRECT_API __declspec(dllimport)
#  endif
#else
#  define PANELRECT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pr_status {
  PR_OK = 0,
  PR_ERR_INVALID_ARGUMENT = 1,
  PR_ERR_WRONG_FRAME = 2,
  PR_ERR_DEGENERATE_DEPTH = 3,
  PR_ERR_DEGENERATE_POSE = 4,
  PR_ERR_DEGENERATE_BUTTON = 5,
  PR_ERR_EMPTY_PANEL = 6,
  PR_ERR_LINE_DETECTION = 7,
  PR_ERR_QUAD_ASSEMBLY = 8,
  PR_ERR_NO_INTERSECTION = 9,
  PR_ERR_ORDERING = 10,
  PR_ERR_NO_SOLUTION = 11,
  PR_ERR_OUT_OF_FRAME = 12,
  PR_ERR_OVERLAP = 13,
  PR_ERR_IO = 14,
  PR_ERR_PARSE = 15,
  PR_ERR_INTERNAL = 99
} pr_status;

typedef enum pr_button_status {
  PR_BUTTON_OK = 0,
  PR_BUTTON_LINE_DETECTION_FAILED = 1,
  PR_BUTTON_QUAD_ASSEMBLY_FAILED = 2,
  PR_BUTTON_INTERSECTION_FAILED = 3,
  PR_BUTTON_ORDERING_FAILED = 4
} pr_button_status;

typedef enum pr_layout {
  PR_LAYOUT_VERTICAL_PAIR = 0,
  PR_LAYOUT_SINGLE_COLUMN = 1,
  PR_LAYOUT_GRID = 2
} pr_layout;

typedef struct pr_corners pr_corners;
typedef struct pr_image pr_image;
typedef struct pr_mask pr_mask;
typedef struct pr_detection pr_detection;
typedef struct pr_search_result pr_search_result;

/* Focal ratios and principal point, pixels. */
typedef struct pr_intrinsics {
  double fx, fy, ox, oy;
} pr_intrinsics;

/* Angles in degrees; translation in normalized camera units. */
typedef struct pr_pose {
  double theta_x, theta_y, theta_z;
  double t[3];
} pr_pose;

typedef struct pr_scores {
  double kh_norm, krv, cos_norm;
} pr_scores;

typedef struct pr_panel_spec {
  pr_layout layout;
  int rows, cols;
  double button_width, button_height, spacing;
  double center_x, center_y;
  int image_width, image_height;
} pr_panel_spec;

typedef struct pr_search_config {
  double alpha, beta, gamma; /* degrees */
  int coarse_to_fine;
  unsigned worker_count; /* 0: all hardware threads */
  int streaming;         /* nonzero: min/max + recompute instead of a score table */
  const char* dump_scores_path; /* NULL or "" disables the per-hypothesis dump */
} pr_search_config;

typedef struct pr_detect_params {
  int closing_radius;
  int literal_opening; /* nonzero: erosion then dilation */
  size_t min_area;
  double rho_step;       /* pixels */
  double theta_step_deg;
  double peak_ratio;
  double nms_rho;        /* pixels */
  double nms_theta_deg;
  double min_edge_separation;
  int refine_lines;
} pr_detect_params;

PANELRECT_API const char* pr_version(void);
PANELRECT_API const char* pr_status_string(pr_status status);
PANELRECT_API const char* pr_last_error_message(void);
PANELRECT_API void pr_string_free(char* s);

PANELRECT_API void pr_intrinsics_default(pr_intrinsics* k);
PANELRECT_API void pr_search_config_default(pr_search_config* cfg);
PANELRECT_API void pr_detect_params_default(pr_detect_params* params);
PANELRECT_API void pr_panel_spec_default(pr_panel_spec* spec);

/* Corner sets (pixel frame). xy holds 8 doubles per button:
 * x1 y1 x2 y2 x3 y3 x4 y4 for top-left, top-right, bottom-right, bottom-left. */
PANELRECT_API pr_status pr_corners_create(const double* xy, size_t button_count, pr_corners** out);
PANELRECT_API void pr_corners_free(pr_corners* corners);
PANELRECT_API size_t pr_corners_button_count(const pr_corners* corners);
PANELRECT_API pr_status pr_corners_get(const pr_corners* corners, double* xy, size_t capacity_buttons);
PANELRECT_API pr_status pr_corners_set_class_ids(pr_corners* corners, const int* ids, size_t count);
PANELRECT_API int pr_corners_class_id(const pr_corners* corners, size_t button);
/* has_intrinsics (nullable) reports whether k (nullable) was filled from the file. */
PANELRECT_API pr_status pr_corners_load_json(const char* path, pr_corners** out, pr_intrinsics* k, int* has_intrinsics);
PANELRECT_API pr_status pr_corners_save_json(const pr_corners* corners, const char* path, const pr_intrinsics* k);
/* Default standard panel matched to the detected button layout and classes. */
PANELRECT_API pr_status pr_corners_default_reference(const pr_corners* detected, pr_corners** out);

/* Rectification residual (two-norm of corner-angle cosines). */
PANELRECT_API pr_status pr_evaluate(const pr_corners* corners, const pr_intrinsics* k, double* out);
/* Row-major 3x3 pixel homography of a pose. */
PANELRECT_API pr_status pr_pose_to_homography(const pr_pose* pose, const pr_intrinsics* k, double h[9]);
/* back_project -> apply_pose -> project for every corner. */
PANELRECT_API pr_status pr_corners_apply_pose(const pr_corners* corners, const pr_pose* pose, const pr_intrinsics* k,
                                              pr_corners** out);

PANELRECT_API pr_status pr_image_create(int width, int height, int channels, const uint8_t* samples, pr_image** out);
PANELRECT_API pr_status pr_image_load_png(const char* path, pr_image** out);
PANELRECT_API pr_status pr_image_save_png(const pr_image* image, const char* path);
PANELRECT_API void pr_image_free(pr_image* image);
PANELRECT_API int pr_image_width(const pr_image* image);
PANELRECT_API int pr_image_height(const pr_image* image);
PANELRECT_API int pr_image_channels(const pr_image* image);
PANELRECT_API const uint8_t* pr_image_samples(const pr_image* image);

PANELRECT_API pr_status pr_mask_create(int width, int height, const uint8_t* labels, pr_mask** out);
PANELRECT_API pr_status pr_mask_load_png(const char* path, pr_mask** out);
PANELRECT_API pr_status pr_mask_save_png(const pr_mask* mask, const char* path);
PANELRECT_API void pr_mask_free(pr_mask* mask);
PANELRECT_API int pr_mask_width(const pr_mask* mask);
PANELRECT_API int pr_mask_height(const pr_mask* mask);
PANELRECT_API const uint8_t* pr_mask_labels(const pr_mask* mask);

/* Fails with PR_ERR_EMPTY_PANEL when no region exists or every region fails. */
PANELRECT_API pr_status pr_detect_corners(const pr_mask* mask, const pr_detect_params* params, pr_detection** out);
PANELRECT_API void pr_detection_free(pr_detection* detection);
PANELRECT_API size_t pr_detection_region_count(const pr_detection* detection);
PANELRECT_API size_t pr_detection_success_count(const pr_detection* detection);
PANELRECT_API pr_button_status pr_detection_region_status(const pr_detection* detection, size_t region);
PANELRECT_API const char* pr_detection_region_message(const pr_detection* detection, size_t region);
/* Corners of the successful regions, reading order. */
PANELRECT_API pr_status pr_detection_corners(const pr_detection* detection, pr_corners** out);

PANELRECT_API pr_status pr_search_pose(const pr_corners* detected, const pr_corners* reference, const pr_intrinsics* k,
                                       const pr_search_config* cfg, pr_search_result** out);
PANELRECT_API void pr_search_result_free(pr_search_result* result);
PANELRECT_API void pr_search_result_pose(const pr_search_result* result, pr_pose* pose);
PANELRECT_API double pr_search_result_final_cr(const pr_search_result* result);
PANELRECT_API void pr_search_result_scores(const pr_search_result* result, pr_scores* raw, pr_scores* normalized);
PANELRECT_API double pr_search_result_residual(const pr_search_result* result);
PANELRECT_API uint64_t pr_search_result_hypotheses(const pr_search_result* result);
PANELRECT_API double pr_search_result_elapsed(const pr_search_result* result);
PANELRECT_API pr_status pr_search_result_rectified_corners(const pr_search_result* result, pr_corners** out);
/* Report JSON; release with pr_string_free. include_timing = 0 omits wall time. */
PANELRECT_API pr_status pr_search_result_report_json(const pr_search_result* result, int include_timing, char** json);
PANELRECT_API pr_status pr_search_result_save_report(const pr_search_result* result, const char* path);

/* out_width/out_height of 0 keep the source size; nearest != 0 disables bilinear. */
PANELRECT_API pr_status pr_warp_image(const pr_image* src, const pr_pose* pose, const pr_intrinsics* k, int out_width,
                                      int out_height, int nearest, pr_image** out);
PANELRECT_API pr_status pr_overlay_corners(const pr_image* image, const pr_corners* corners, pr_image** out);

/* Outputs are nullable. */
PANELRECT_API pr_status pr_synth_reference(const pr_panel_spec* spec, pr_corners** corners, pr_mask** mask,
                                           pr_image** image);
/* effective (nullable) receives the rectifying pose with its re-pinned translation. */
PANELRECT_API pr_status pr_synth_distort(const pr_panel_spec* spec, const pr_pose* pose, const pr_intrinsics* k,
                                         pr_corners** corners, pr_mask** mask, pr_image** image, pr_pose* effective);
/* Translation that keeps the panel centre pixel fixed under the pose's rotation. */
PANELRECT_API pr_status pr_synth_centering_translation(const pr_panel_spec* spec, const pr_pose* pose,
                                                       const pr_intrinsics* k, double t[3]);
/* Writes image.png, mask.png, corners.json and pose.json into out_dir. */
PANELRECT_API pr_status pr_synth_write_bundle(const pr_panel_spec* spec, const pr_pose* pose, const pr_intrinsics* k,
                                              const char* out_dir, pr_pose* effective);
PANELRECT_API pr_status pr_pose_load_json(const char* path, pr_pose* pose);

#ifdef __cplusplus
}
#endif

#endif /* PANELRECT_H */
