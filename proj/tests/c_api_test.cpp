// Exercises the library only through the exported C header.
#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "panelrect/panelrect.h"

namespace fs = std::filesystem;

namespace {

pr_panel_spec vertical_pair() {
  pr_panel_spec spec;
  pr_panel_spec_default(&spec);
  return spec;
}

pr_pose centred_pose(double x, double y, double z) {
  pr_pose pose{x, y, z, {0, 0, 0}};
  const pr_panel_spec spec = vertical_pair();
  EXPECT_EQ(pr_synth_centering_translation(&spec, &pose, nullptr, pose.t), PR_OK);
  return pose;
}

fs::path scratch_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / (std::string("panelrect_capi_") + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_STREQ(pr_version(), "1.0.0");
  EXPECT_STREQ(pr_status_string(PR_OK), "ok");
  EXPECT_NE(std::strlen(pr_status_string(PR_ERR_OUT_OF_FRAME)), 0u);
  EXPECT_NE(std::strlen(pr_status_string(static_cast<pr_status>(1234))), 0u);
}

TEST(CApi, Defaults) {
  pr_intrinsics k;
  pr_intrinsics_default(&k);
  EXPECT_EQ(k.fx, 320);
  EXPECT_EQ(k.fy, 320);
  EXPECT_EQ(k.ox, 320);
  EXPECT_EQ(k.oy, 240);
  pr_search_config cfg;
  pr_search_config_default(&cfg);
  EXPECT_EQ(cfg.alpha, -40);
  EXPECT_EQ(cfg.beta, 40);
  EXPECT_EQ(cfg.gamma, 0.5);
  EXPECT_EQ(cfg.coarse_to_fine, 0);
  pr_detect_params params;
  pr_detect_params_default(&params);
  EXPECT_EQ(params.closing_radius, 2);
  EXPECT_EQ(params.min_area, 100u);
}

TEST(CApi, CornersRoundTripAndErrors) {
  const double xy[8] = {10, 10, 50, 10, 50, 40, 10, 40};
  pr_corners* c = nullptr;
  ASSERT_EQ(pr_corners_create(xy, 1, &c), PR_OK);
  EXPECT_EQ(pr_corners_button_count(c), 1u);
  double back[8];
  ASSERT_EQ(pr_corners_get(c, back, 1), PR_OK);
  EXPECT_EQ(std::memcmp(xy, back, sizeof xy), 0);
  EXPECT_EQ(pr_corners_get(c, back, 0), PR_ERR_INVALID_ARGUMENT);

  double score = -1;
  ASSERT_EQ(pr_evaluate(c, nullptr, &score), PR_OK);
  EXPECT_LE(score, 1e-12);
  pr_corners_free(c);

  pr_corners* bad = reinterpret_cast<pr_corners*>(0x1);
  EXPECT_EQ(pr_corners_create(xy, 0, &bad), PR_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(bad, nullptr);
  EXPECT_NE(std::strlen(pr_last_error_message()), 0u);

  const double nan_xy[8] = {NAN, 10, 50, 10, 50, 40, 10, 40};
  EXPECT_NE(pr_corners_create(nan_xy, 1, &bad), PR_OK);

  const double collapsed[8] = {10, 10, 10, 10, 50, 40, 10, 40};
  ASSERT_EQ(pr_corners_create(collapsed, 1, &c), PR_OK);
  EXPECT_EQ(pr_evaluate(c, nullptr, &score), PR_ERR_DEGENERATE_BUTTON);
  pr_corners_free(c);

  pr_corners_free(nullptr);
  pr_image_free(nullptr);
  pr_mask_free(nullptr);
  pr_detection_free(nullptr);
  pr_search_result_free(nullptr);
}

TEST(CApi, HomographyOfIdentityPose) {
  const pr_pose pose{0, 0, 0, {0, 0, 0}};
  double h[9];
  ASSERT_EQ(pr_pose_to_homography(&pose, nullptr, h), PR_OK);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(h[i] / h[8], i % 4 == 0 ? 1.0 : 0.0, 1e-15);
  const pr_intrinsics bad{0, 320, 320, 240};
  EXPECT_EQ(pr_pose_to_homography(&pose, &bad, h), PR_ERR_INVALID_ARGUMENT);
}

TEST(CApi, SynthDetectSearchWarp) {
  const pr_panel_spec spec = vertical_pair();
  const pr_pose requested = centred_pose(10, -7.5, 3);
  pr_corners* truth = nullptr;
  pr_mask* mask = nullptr;
  pr_image* image = nullptr;
  pr_pose effective;
  ASSERT_EQ(pr_synth_distort(&spec, &requested, nullptr, &truth, &mask, &image, &effective), PR_OK);
  EXPECT_EQ(effective.theta_y, -7.5);

  pr_detection* det = nullptr;
  ASSERT_EQ(pr_detect_corners(mask, nullptr, &det), PR_OK);
  EXPECT_EQ(pr_detection_region_count(det), 2u);
  EXPECT_EQ(pr_detection_success_count(det), 2u);
  EXPECT_EQ(pr_detection_region_status(det, 0), PR_BUTTON_OK);
  pr_corners* found = nullptr;
  ASSERT_EQ(pr_detection_corners(det, &found), PR_OK);
  double a[16], b[16];
  pr_corners_get(found, a, 2);
  pr_corners_get(truth, b, 2);
  for (int i = 0; i < 16; i += 2) EXPECT_LE(std::hypot(a[i] - b[i], a[i + 1] - b[i + 1]), 2.0);

  pr_corners* reference = nullptr;
  ASSERT_EQ(pr_corners_default_reference(truth, &reference), PR_OK);
  pr_search_config cfg;
  pr_search_config_default(&cfg);
  cfg.coarse_to_fine = 1;
  pr_search_result* result = nullptr;
  ASSERT_EQ(pr_search_pose(truth, reference, nullptr, &cfg, &result), PR_OK);
  pr_pose best;
  pr_search_result_pose(result, &best);
  EXPECT_EQ(best.theta_x, 10);
  EXPECT_EQ(best.theta_y, -7.5);
  EXPECT_EQ(best.theta_z, 3);
  EXPECT_EQ(pr_search_result_hypotheses(result), 73834u);
  EXPECT_LE(pr_search_result_residual(result), 1e-6);
  EXPECT_GE(pr_search_result_final_cr(result), 0.0);
  pr_scores raw, norm;
  pr_search_result_scores(result, &raw, &norm);
  EXPECT_LE(raw.cos_norm, 1e-6);

  char* json = nullptr;
  ASSERT_EQ(pr_search_result_report_json(result, 0, &json), PR_OK);
  const std::string report(json);
  pr_string_free(json);
  EXPECT_NE(report.find("\"best_angles_deg\""), std::string::npos);
  EXPECT_EQ(report.find("elapsed_seconds"), std::string::npos);

  pr_image* rectified = nullptr;
  ASSERT_EQ(pr_warp_image(image, &best, nullptr, 0, 0, 0, &rectified), PR_OK);
  EXPECT_EQ(pr_image_width(rectified), 640);
  EXPECT_EQ(pr_image_height(rectified), 480);
  EXPECT_EQ(pr_image_channels(rectified), 3);
  // Centre of the first reference button, bright in the rendered texture.
  EXPECT_GT(pr_image_samples(rectified)[(180 * 640 + 320) * 3], 150);

  pr_corners* rect_corners = nullptr;
  ASSERT_EQ(pr_search_result_rectified_corners(result, &rect_corners), PR_OK);
  pr_image* overlay = nullptr;
  ASSERT_EQ(pr_overlay_corners(rectified, rect_corners, &overlay), PR_OK);

  for (auto* c : {truth, found, reference, rect_corners}) pr_corners_free(c);
  pr_image_free(image);
  pr_image_free(rectified);
  pr_image_free(overlay);
  pr_mask_free(mask);
  pr_detection_free(det);
  pr_search_result_free(result);
}

TEST(CApi, EmptyMaskFailsDetection) {
  std::vector<uint8_t> zeros(64 * 48, 0);
  pr_mask* mask = nullptr;
  ASSERT_EQ(pr_mask_create(64, 48, zeros.data(), &mask), PR_OK);
  pr_detection* det = reinterpret_cast<pr_detection*>(0x1);
  EXPECT_EQ(pr_detect_corners(mask, nullptr, &det), PR_ERR_EMPTY_PANEL);
  EXPECT_EQ(det, nullptr);
  pr_mask_free(mask);
}

TEST(CApi, BundleAndFiles) {
  const fs::path dir = scratch_dir("bundle");
  const pr_panel_spec spec = vertical_pair();
  const pr_pose pose = centred_pose(4, 6, -2);
  pr_pose effective;
  ASSERT_EQ(pr_synth_write_bundle(&spec, &pose, nullptr, dir.c_str(), &effective), PR_OK);
  for (const char* f : {"image.png", "mask.png", "corners.json", "pose.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;

  pr_pose loaded;
  ASSERT_EQ(pr_pose_load_json((dir / "pose.json").c_str(), &loaded), PR_OK);
  EXPECT_EQ(loaded.theta_x, 4);
  EXPECT_EQ(loaded.t[0], effective.t[0]);

  pr_corners* corners = nullptr;
  pr_intrinsics k;
  int has_k = 0;
  ASSERT_EQ(pr_corners_load_json((dir / "corners.json").c_str(), &corners, &k, &has_k), PR_OK);
  EXPECT_EQ(has_k, 1);
  EXPECT_EQ(pr_corners_class_id(corners, 1), 2);
  ASSERT_EQ(pr_corners_save_json(corners, (dir / "copy.json").c_str(), nullptr), PR_OK);

  pr_image* img = nullptr;
  ASSERT_EQ(pr_image_load_png((dir / "image.png").c_str(), &img), PR_OK);
  EXPECT_EQ(pr_image_channels(img), 3);
  ASSERT_EQ(pr_image_save_png(img, (dir / "copy.png").c_str()), PR_OK);
  pr_mask* mask = nullptr;
  ASSERT_EQ(pr_mask_load_png((dir / "mask.png").c_str(), &mask), PR_OK);
  EXPECT_EQ(pr_mask_width(mask), 640);

  EXPECT_EQ(pr_image_load_png((dir / "missing.png").c_str(), &img), PR_ERR_IO);
  EXPECT_EQ(img, nullptr);
  std::FILE* f = std::fopen((dir / "bad.json").c_str(), "w");
  std::fputs("{ nope", f);
  std::fclose(f);
  pr_corners* bad = nullptr;
  EXPECT_EQ(pr_corners_load_json((dir / "bad.json").c_str(), &bad, nullptr, nullptr), PR_ERR_PARSE);

  pr_corners_free(corners);
  pr_mask_free(mask);
  fs::remove_all(dir);
}

TEST(CApi, OutOfFrameDistortion) {
  const pr_panel_spec spec = vertical_pair();
  const pr_pose pose{0, 0, 0, {1.0, 0, 0}};
  pr_corners* c = nullptr;
  EXPECT_EQ(pr_synth_distort(&spec, &pose, nullptr, &c, nullptr, nullptr, nullptr), PR_ERR_OUT_OF_FRAME);
  EXPECT_EQ(c, nullptr);
}
