#include "panelrect/pose_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "panelrect/error.hpp"

namespace panelrect {

namespace {

// Contiguous run of base-lattice indices visited along one axis.
struct AxisRange {
  std::size_t first = 0;
  std::size_t count = 0;
  std::size_t stride = 1;

  std::size_t index(std::size_t i) const { return first + i * stride; }
};

struct Lattice {
  AxisRange x, y, z;
  std::size_t size() const { return x.count * y.count * z.count; }
};

struct LatticePoint {
  std::size_t ix, iy, iz;  // base-lattice indices
};

LatticePoint unravel(const Lattice& lattice, std::size_t h) {
  const std::size_t yz = lattice.y.count * lattice.z.count;
  const std::size_t a = h / yz;
  const std::size_t rem = h % yz;
  return {lattice.x.index(a), lattice.y.index(rem / lattice.z.count), lattice.z.index(rem % lattice.z.count)};
}

// Per-axis rotation factors for every base-lattice angle.
struct RotationTables {
  std::vector<Mat3> rx, ry, rz;

  explicit RotationTables(const SearchConfig& cfg) {
    const std::size_t n = cfg.samples_per_axis();
    rx.reserve(n);
    ry.reserve(n);
    rz.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double rad = deg_to_rad(cfg.angle(i));
      rx.push_back(rotation_x(rad));
      ry.push_back(rotation_y(rad));
      rz.push_back(rotation_z(rad));
    }
  }
};

// Fixed-order 3x3 arithmetic for the sweep kernel: every sum runs left to
// right, so the scores are reproducible independently of Eigen's unrolling.
Mat3 mul3(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
  return r;
}

Vec3 apply3(const Mat3& m, const Vec3& v) {
  return {m(0, 0) * v.x() + m(0, 1) * v.y() + m(0, 2) * v.z(), m(1, 0) * v.x() + m(1, 1) * v.y() + m(1, 2) * v.z(),
          m(2, 0) * v.x() + m(2, 1) * v.y() + m(2, 2) * v.z()};
}

// Everything a worker needs to score one hypothesis; the scratch buffer is the
// only mutable state and each worker owns its copy.
class HypothesisScorer {
 public:
  HypothesisScorer(const RotationTables& tables, std::span<const Vec3> detected, const Vec3& first_reference)
      : tables_(tables), detected_(detected), first_reference_(first_reference), moved_(detected.size()) {}

  std::optional<RawScores> score(const LatticePoint& p) {
    if (p.ix != cached_x_ || p.iy != cached_y_) {
      rxy_ = mul3(tables_.rx[p.ix], tables_.ry[p.iy]);
      cached_x_ = p.ix;
      cached_y_ = p.iy;
    }
    const Mat3 r = mul3(rxy_, tables_.rz[p.iz]);
    const Vec3 t = first_reference_ - apply3(r, detected_.front());
    for (std::size_t i = 0; i < detected_.size(); ++i) {
      const Vec3 q = apply3(r, detected_[i]) + t;
      if (std::abs(q.z()) < kDepthEpsilon) return std::nullopt;
      moved_[i] = Vec3(q.x() / q.z(), q.y() / q.z(), 1.0);
    }
    return try_raw_scores(moved_);
  }

 private:
  const RotationTables& tables_;
  std::span<const Vec3> detected_;
  Vec3 first_reference_;
  std::vector<Vec3> moved_;
  Mat3 rxy_;
  std::size_t cached_x_ = std::numeric_limits<std::size_t>::max();
  std::size_t cached_y_ = std::numeric_limits<std::size_t>::max();
};

unsigned resolve_workers(unsigned requested, std::size_t work) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(work, 1)));
}

// Runs fn(worker, begin, end) over disjoint contiguous chunks of [0, total).
template <typename Fn>
void parallel_chunks(unsigned workers, std::size_t total, Fn&& fn) {
  if (workers <= 1) {
    fn(0u, std::size_t{0}, total);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (total + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(total, w * chunk);
    const std::size_t end = std::min(total, begin + chunk);
    threads.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
  }
  for (auto& t : threads) t.join();
}

struct PopulationRange {
  MinMax kh, krv, cos;
  bool any = false;

  void include(const RawScores& s) {
    if (!any) {
      kh = {s.kh_norm, s.kh_norm};
      krv = {s.krv, s.krv};
      cos = {s.cos_norm, s.cos_norm};
      any = true;
      return;
    }
    kh.include(s.kh_norm);
    krv.include(s.krv);
    cos.include(s.cos_norm);
  }

  void merge(const PopulationRange& o) {
    if (!o.any) return;
    include({o.kh.min, o.krv.min, o.cos.min});
    include({o.kh.max, o.krv.max, o.cos.max});
  }

  RawScores normalize(const RawScores& s) const {
    return {kh.normalize(s.kh_norm), krv.normalize(s.krv), cos.normalize(s.cos_norm)};
  }
};

struct Candidate {
  double final_cr = std::numeric_limits<double>::infinity();
  std::size_t hypothesis = std::numeric_limits<std::size_t>::max();
  RawScores raw;

  // Lattice order is x-major, so the smaller linear index is the
  // lexicographically smaller angle triple.
  bool better_than(const Candidate& o) const {
    if (final_cr != o.final_cr) return final_cr < o.final_cr;
    return hypothesis < o.hypothesis;
  }
};

struct SweepOutcome {
  Candidate best;
  PopulationRange range;
  std::uint64_t evaluated = 0;
  std::uint64_t degenerate = 0;
};

void dump_scores(std::ofstream& out, const SearchConfig& cfg, const Lattice& lattice,
                 const std::vector<std::optional<RawScores>>& table) {
  out.precision(17);
  for (std::size_t h = 0; h < table.size(); ++h) {
    const LatticePoint p = unravel(lattice, h);
    out << cfg.angle(p.ix) << ' ' << cfg.angle(p.iy) << ' ' << cfg.angle(p.iz);
    if (table[h]) {
      out << ' ' << table[h]->kh_norm << ' ' << table[h]->krv << ' ' << table[h]->cos_norm << '\n';
    } else {
      out << " nan nan nan\n";
    }
  }
}

SweepOutcome sweep(const Lattice& lattice, const RotationTables& tables, std::span<const Vec3> detected,
                   const Vec3& first_reference, const SearchConfig& cfg, std::ofstream* dump) {
  const std::size_t total = lattice.size();
  const unsigned workers = resolve_workers(cfg.worker_count, total);
  const bool use_table = cfg.storage == ScoreStorage::Table || dump != nullptr;

  SweepOutcome outcome;
  outcome.evaluated = total;
  std::vector<PopulationRange> ranges(workers);
  std::vector<std::uint64_t> degenerate(workers, 0);

  if (use_table) {
    std::vector<std::optional<RawScores>> table(total);
    parallel_chunks(workers, total, [&](unsigned w, std::size_t begin, std::size_t end) {
      HypothesisScorer scorer(tables, detected, first_reference);
      for (std::size_t h = begin; h < end; ++h) {
        table[h] = scorer.score(unravel(lattice, h));
        if (table[h]) {
          ranges[w].include(*table[h]);
        } else {
          ++degenerate[w];
        }
      }
    });
    for (unsigned w = 0; w < workers; ++w) {
      outcome.range.merge(ranges[w]);
      outcome.degenerate += degenerate[w];
    }
    if (dump) dump_scores(*dump, cfg, lattice, table);
    if (!outcome.range.any) return outcome;

    for (std::size_t h = 0; h < total; ++h) {
      if (!table[h]) continue;
      const Candidate c{final_cr(outcome.range.normalize(*table[h])), h, *table[h]};
      if (c.better_than(outcome.best)) outcome.best = c;
    }
    return outcome;
  }

  parallel_chunks(workers, total, [&](unsigned w, std::size_t begin, std::size_t end) {
    HypothesisScorer scorer(tables, detected, first_reference);
    for (std::size_t h = begin; h < end; ++h) {
      if (auto s = scorer.score(unravel(lattice, h))) {
        ranges[w].include(*s);
      } else {
        ++degenerate[w];
      }
    }
  });
  for (unsigned w = 0; w < workers; ++w) {
    outcome.range.merge(ranges[w]);
    outcome.degenerate += degenerate[w];
  }
  if (!outcome.range.any) return outcome;

  std::vector<Candidate> best(workers);
  parallel_chunks(workers, total, [&](unsigned w, std::size_t begin, std::size_t end) {
    HypothesisScorer scorer(tables, detected, first_reference);
    for (std::size_t h = begin; h < end; ++h) {
      const auto s = scorer.score(unravel(lattice, h));
      if (!s) continue;
      const Candidate c{final_cr(outcome.range.normalize(*s)), h, *s};
      if (c.better_than(best[w])) best[w] = c;
    }
  });
  for (const Candidate& c : best) {
    if (c.better_than(outcome.best)) outcome.best = c;
  }
  return outcome;
}

void require_compatible(const CornerSet& detected, const CornerSet& reference) {
  if (detected.frame() != Frame::PixelImage || reference.frame() != Frame::PixelImage) {
    throw Error(ErrorCode::WrongFrame, "search_pose: detected and reference corners must be in the pixel frame");
  }
  if (detected.button_count() != reference.button_count()) {
    throw Error(ErrorCode::InvalidArgument, "search_pose: detected and reference button counts differ");
  }
}

std::optional<std::ofstream> open_dump(const SearchConfig& cfg) {
  if (cfg.dump_scores_path.empty()) return std::nullopt;
  std::ofstream out(cfg.dump_scores_path);
  if (!out) throw Error(ErrorCode::Io, "cannot open score dump file: " + cfg.dump_scores_path);
  out << "# theta_x theta_y theta_z kh_norm krv cos_norm\n";
  return out;
}

SearchResult finish(const Intrinsics& k, const SearchConfig& cfg,
                    const Lattice& lattice, const SweepOutcome& outcome, const CornerSet& spatial_detected,
                    const CornerSet& spatial_reference) {
  if (!outcome.range.any) {
    throw Error(ErrorCode::NoSolution, "search_pose: every hypothesis is degenerate");
  }
  const LatticePoint p = unravel(lattice, outcome.best.hypothesis);
  PoseHypothesis pose{cfg.angle(p.ix), cfg.angle(p.iy), cfg.angle(p.iz), Vec3::Zero()};
  pose.t = translation_align_first_corner(spatial_detected, spatial_reference, compose_rotation(pose));

  CriterionScores scores;
  scores.raw = outcome.best.raw;
  scores.normalized = outcome.range.normalize(outcome.best.raw);
  scores.final_cr = outcome.best.final_cr;

  CornerSet rectified = project(apply_pose(spatial_detected, pose), k);
  return SearchResult{
      .best_pose = pose,
      .best_final_cr = outcome.best.final_cr,
      .scores_best = scores,
      .residual_cos_norm = outcome.best.raw.cos_norm,
      .hypotheses_evaluated = outcome.evaluated,
      .degenerate_hypotheses = outcome.degenerate,
      .coarse_hypotheses = 0,
      .fine_hypotheses = 0,
      .elapsed_seconds = 0.0,
      .rectified_corners = make_corner_set(Frame::PixelImage,
                                           std::vector<Vec3>(rectified.corners().begin(), rectified.corners().end())),
  };
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::size_t SearchConfig::samples_per_axis() const {
  validate();
  return static_cast<std::size_t>(std::floor((beta - alpha) / gamma + 1e-9)) + 1;
}

void SearchConfig::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidArgument, "search config: grid bounds must be finite");
  }
  if (!(alpha < beta)) throw Error(ErrorCode::InvalidArgument, "search config: empty grid (alpha >= beta)");
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "search config: step must be positive");
}

SearchResult search_pose(const CornerSet& detected, const CornerSet& reference, const Intrinsics& k,
                         const SearchConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  require_compatible(detected, reference);
  const std::size_t n = cfg.samples_per_axis();

  const CornerSet d = back_project(to_homogeneous(detected), k);
  const CornerSet e = back_project(to_homogeneous(reference), k);
  const RotationTables tables(cfg);
  const Lattice lattice{{0, n, 1}, {0, n, 1}, {0, n, 1}};

  auto dump = open_dump(cfg);
  const SweepOutcome outcome = sweep(lattice, tables, d.corners(), e.corners().front(), cfg, dump ? &*dump : nullptr);
  SearchResult result = finish(k, cfg, lattice, outcome, d, e);
  result.elapsed_seconds = seconds_since(start);
  return result;
}

SearchResult search_pose_coarse_to_fine(const CornerSet& detected, const CornerSet& reference,
                                        const Intrinsics& k, const SearchConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  require_compatible(detected, reference);
  const std::size_t n = cfg.samples_per_axis();
  constexpr std::size_t kCoarseStride = 4;
  constexpr std::size_t kWindow = 2 * kCoarseStride;  // half-width in fine steps

  const CornerSet d = back_project(to_homogeneous(detected), k);
  const CornerSet e = back_project(to_homogeneous(reference), k);
  const RotationTables tables(cfg);
  auto dump = open_dump(cfg);
  std::ofstream* dump_ptr = dump ? &*dump : nullptr;

  const std::size_t coarse_count = (n - 1) / kCoarseStride + 1;
  const AxisRange coarse_axis{0, coarse_count, kCoarseStride};
  const Lattice coarse{coarse_axis, coarse_axis, coarse_axis};
  const SweepOutcome coarse_outcome = sweep(coarse, tables, d.corners(), e.corners().front(), cfg, dump_ptr);
  if (!coarse_outcome.range.any) {
    throw Error(ErrorCode::NoSolution, "search_pose: every coarse hypothesis is degenerate");
  }

  const LatticePoint centre = unravel(coarse, coarse_outcome.best.hypothesis);
  const auto window = [&](std::size_t c) {
    const std::size_t lo = c >= kWindow ? c - kWindow : 0;
    const std::size_t hi = std::min(n - 1, c + kWindow);
    return AxisRange{lo, hi - lo + 1, 1};
  };
  const Lattice fine{window(centre.ix), window(centre.iy), window(centre.iz)};
  const SweepOutcome fine_outcome = sweep(fine, tables, d.corners(), e.corners().front(), cfg, dump_ptr);

  SearchResult result = finish(k, cfg, fine, fine_outcome, d, e);
  result.coarse_hypotheses = coarse_outcome.evaluated;
  result.fine_hypotheses = fine_outcome.evaluated;
  result.hypotheses_evaluated = coarse_outcome.evaluated + fine_outcome.evaluated;
  result.degenerate_hypotheses = coarse_outcome.degenerate + fine_outcome.degenerate;
  result.elapsed_seconds = seconds_since(start);
  return result;
}

SearchResult run_search(const CornerSet& detected, const CornerSet& reference, const Intrinsics& k,
                        const SearchConfig& cfg) {
  return cfg.coarse_to_fine ? search_pose_coarse_to_fine(detected, reference, k, cfg)
                            : search_pose(detected, reference, k, cfg);
}

}  // namespace panelrect
