#pragma once

#include <cstdint>
#include <vector>

#include "panelrect/geometry.hpp"
#include "panelrect/mask_pipeline.hpp"
#include "panelrect/rectify.hpp"

namespace panelrect {

enum class PanelLayout {
  VerticalPair,  ///< two stacked buttons (up/down call panel)
  SingleColumn,  ///< rows x 1
  Grid,          ///< rows x cols
};

/// Fronto-parallel standard panel of axis-aligned rectangular buttons.
struct PanelSpec {
  PanelLayout layout = PanelLayout::VerticalPair;
  int rows = 2;
  int cols = 1;
  double button_width = 80.0;
  double button_height = 80.0;
  double spacing = 40.0;  ///< gap between neighbouring buttons
  Vec2 center{320.0, 240.0};
  int image_width = 640;
  int image_height = 480;

  static PanelSpec vertical_pair() { return {}; }
  static PanelSpec single_column(int n);
  static PanelSpec grid(int rows, int cols);

  int button_count() const { return rows * cols; }
  void validate() const;
};

struct SyntheticPanel {
  CornerSet corners;  ///< pixel frame, reading order
  LabelMask mask;     ///< button i carries label i + 1
  RasterImage image;  ///< RGB
};

/// Throws Overlap for non-positive spacing and OutOfFrame when the panel does
/// not fit inside the image.
SyntheticPanel generate_reference(const PanelSpec& spec);

struct DistortedPanel {
  CornerSet corners;
  LabelMask mask;
  RasterImage image;
  /// The rectifying pose: same angles as requested, translation re-pinned so
  /// the first distorted corner maps exactly onto the first reference corner.
  PoseHypothesis pose;
  /// Pixel homography reference -> distorted (inverse of the rectifying one).
  Mat3 homography;
};

/// Renders the panel as seen by a camera that the given pose rectifies.
/// The raster is warped bilinearly, the mask by nearest neighbour. Throws
/// InvalidArgument for angles beyond +-60 degrees and OutOfFrame when a
/// corner leaves the image.
DistortedPanel distort(const SyntheticPanel& reference, const PoseHypothesis& pose, const Intrinsics& k);

/// Translation that keeps the panel centre pixel fixed under rotation, i.e. a
/// camera orbiting the panel instead of turning in place.
Vec3 centering_translation(const PoseHypothesis& pose, const PanelSpec& spec, const Intrinsics& k);

/// Rectification residual: ||Cos|| of the back-projected pixel corners.
double evaluate(const CornerSet& rectified_pixels, const Intrinsics& k);

/// Guesses the standard layout a detected panel came from (rows of buttons
/// with equal counts), keeping the default button geometry.
PanelSpec infer_panel_spec(const CornerSet& detected);

}  // namespace panelrect
