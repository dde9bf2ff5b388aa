#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "panelrect/criteria.hpp"
#include "panelrect/geometry.hpp"

namespace panelrect {

/// How pass 1 keeps the raw criteria until the population min/max is known.
enum class ScoreStorage {
  Table,      ///< one raw triple per hypothesis (~100 MB for the default grid)
  Streaming,  ///< min/max only, then a second sweep recomputes every triple
};

struct SearchConfig {
  double alpha = -40.0;  ///< grid low, degrees (inclusive)
  double beta = 40.0;    ///< grid high, degrees (inclusive)
  double gamma = 0.5;    ///< step, degrees
  bool coarse_to_fine = false;
  unsigned worker_count = 0;  ///< 0: hardware concurrency
  ScoreStorage storage = ScoreStorage::Table;
  /// When non-empty, every hypothesis' angles and raw triple are written here
  /// as whitespace-separated columns.
  std::string dump_scores_path;

  /// Samples per axis: floor((beta - alpha) / gamma) + 1.
  std::size_t samples_per_axis() const;
  double angle(std::size_t index) const { return alpha + static_cast<double>(index) * gamma; }
  void validate() const;
};

struct SearchResult {
  PoseHypothesis best_pose;
  double best_final_cr = 0.0;
  CriterionScores scores_best;
  /// ||Cos|| of the winner, i.e. the rectification residual in the search frame.
  double residual_cos_norm = 0.0;
  std::uint64_t hypotheses_evaluated = 0;
  std::uint64_t degenerate_hypotheses = 0;
  /// Coarse-to-fine only: hypotheses in the coarse and the refinement sweeps.
  std::uint64_t coarse_hypotheses = 0;
  std::uint64_t fine_hypotheses = 0;
  double elapsed_seconds = 0.0;
  /// Detected corners mapped through the winning pose, pixel frame.
  CornerSet rectified_corners;
};

/// Exhaustive sweep of the theta_x x theta_y x theta_z lattice minimizing the
/// min-max normalized Final CR. Ties resolve to the lexicographically smallest
/// (theta_x, theta_y, theta_z). Results do not depend on worker_count.
SearchResult search_pose(const CornerSet& detected, const CornerSet& reference, const Intrinsics& k,
                         const SearchConfig& cfg);

/// Sweeps at 4 * gamma, then refines a +-4 * gamma window around the coarse
/// winner at gamma.
SearchResult search_pose_coarse_to_fine(const CornerSet& detected, const CornerSet& reference,
                                        const Intrinsics& k, const SearchConfig& cfg);

/// Dispatches on cfg.coarse_to_fine.
SearchResult run_search(const CornerSet& detected, const CornerSet& reference, const Intrinsics& k,
                        const SearchConfig& cfg);

}  // namespace panelrect
