/** Copyright 2026 The trajsearch Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * 	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TRAJSEARCH_OTRD_H_
#define TRAJSEARCH_OTRD_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajsearch/geometry.h"
#include "trajsearch/model.h"

namespace trajsearch {

/// Distance parameters. `alpha` weighs the historical part against the
/// destination part, `theta` decays history points per step into the past,
/// and `g` keeps every g-th point of T'_i (g == 1 is exact).
struct OtrdParams {
  double alpha = 0.5;
  double theta = 0.5;
  std::size_t g = 1;

  void validate() const;
};

/// Switches for the exact speed-ups. Granularity is controlled by
/// OtrdParams::g, not here.
struct Strategies {
  bool segment_pruning = true;  // S1
  bool kbound_pruning = true;   // S2
  bool incremental = true;      // S3

  static Strategies all() { return {}; }
  static Strategies none() { return {false, false, false}; }
  /// Accepts "all", "none" or a list of s1/s2/s3 joined by ',' or '+'.
  static Strategies parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const Strategies&, const Strategies&) = default;
};

/// Work counters; summed across candidates and steps.
struct OtrdCounters {
  std::uint64_t segments_scanned = 0;
  std::uint64_t s1_segment_skips = 0;
  std::uint64_t points_scanned = 0;
  std::uint64_t full_computes = 0;
  std::uint64_t s2_early_prunes = 0;
  std::uint64_t s2_loop_prunes = 0;
  std::uint64_t s3_case1 = 0;
  std::uint64_t s3_case2 = 0;
  std::uint64_t s3_case2_rejected = 0;
  std::uint64_t s3_case3 = 0;

  std::uint64_t s2_prunes() const { return s2_early_prunes + s2_loop_prunes; }
  std::uint64_t s3_fast_paths() const { return s3_case1 + s3_case2; }
  OtrdCounters& operator+=(const OtrdCounters& o);
};

struct Pivotal {
  PointIndex x = 1;
  SegIndex z = 1;
  double distance = 0.0;
};

/// Nearest point of `t` to `p` (smallest index on ties) and the segment
/// holding it. Segments are visited in mindist order and skipped once their
/// MBR cannot beat the best point. `t` must be segmented.
Pivotal find_pivotal(const PlanarPoint& p, const Trajectory& t);

/// Distance from `dest` to the line segment p^x .. p^n.
double ttd(const PlanarPoint& dest, const Trajectory& t, PointIndex x);

/// Sparse subsequence of T'_i = p^1..p^x used when g > 1. Indices are
/// ascending and always end with the pivotal index.
struct CoarseView {
  std::vector<PointIndex> indices;

  PointIndex last() const { return indices.back(); }
  friend bool operator==(const CoarseView&, const CoarseView&) = default;
};

/// Builds the coarse view for pivotal `x`. Without `prev` the grid is
/// anchored at x (first index in [1, g]). With `prev` (whose last element is
/// the previous pivotal x') the view is updated in place of a rebuild:
/// x > x' extends the old grid by g up to x and appends x at a seam when
/// |x - x'| is not a multiple of g; x < x' truncates to indices below x and
/// appends x.
CoarseView coarse_view(PointIndex x, std::size_t g,
                       const CoarseView* prev = nullptr);

/// Lexicographic (distance, id) cut-off of the current top-k. A candidate
/// whose OTRD lower bound reaches it can never enter the result.
struct Threshold {
  double dist = std::numeric_limits<double>::infinity();
  TrajId id = std::numeric_limits<TrajId>::max();

  bool excludes(double lower_bound, TrajId candidate) const {
    return lower_bound > dist || (lower_bound == dist && candidate > id);
  }
};

struct PruneContext {
  Threshold threshold;
  TrajId traj_id = 0;
  double alpha = 0.5;
  double ttd = 0.0;
};

struct HtdOptions {
  bool segment_pruning = true;
  const CoarseView* view = nullptr;  // nullptr: every point of T'_i
  std::optional<PruneContext> prune;
  OtrdCounters* counters = nullptr;
};

struct HtdResult {
  double htd = 0.0;
  PointIndex witness = 1;    // history index y attaining the max
  double witness_min = 0.0;  // undecayed min distance of p_o^y to T'_i
  bool pruned = false;
};

/// Minimum distance from `q` to the points of `t` with index in (lo, x]
/// (restricted to `view` when given). Segments whose MBR mindist is not
/// below the running minimum are skipped when `segment_pruning` is set.
double prefix_min_distance(const PlanarPoint& q, const Trajectory& t,
                           PointIndex lo, PointIndex x, SegIndex z,
                           const CoarseView* view, bool segment_pruning,
                           OtrdCounters* counters);

/// Historical trajectory distance
///   max_{j=1..c} theta^{c-j} * min_{p in T'_i} d(p_o^j, p),
/// with T'_i = p^1..p^x, visiting j = c down to 1. With a prune context the
/// scan stops as soon as alpha * running_max + (1 - alpha) * ttd reaches the
/// threshold, and the result is flagged `pruned`.
HtdResult htd_operational(std::span<const PlanarPoint> history,
                          const Trajectory& t, PointIndex x, SegIndex z,
                          const OtrdParams& params,
                          const HtdOptions& options = {});

/// The recursive max/min definition evaluated by memoized dynamic
/// programming over prefixes. Infinite when t_prime has fewer points than
/// history. Reference only; the engine uses htd_operational.
double htd_recursive(std::span<const PlanarPoint> history,
                     std::span<const PlanarPoint> t_prime, double theta);

struct OtrdBreakdown {
  double htd = 0.0;
  double ttd = 0.0;
  double otrd = 0.0;
  PointIndex witness_y = 1;
  PointIndex pivotal_x = 1;
  SegIndex pivotal_z = 1;
};

inline double combine_otrd(double alpha, double htd, double ttd) {
  return alpha * htd + (1.0 - alpha) * ttd;
}

struct ErrorBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Error bounds of coarsening: lower = htd_exact - d(p_o^c, p^x);
/// upper = max over (p_o^j, p in view) of theta^{c-j} d(p_o^j, p) - htd_exact.
ErrorBounds granularity_error_bounds(std::span<const PlanarPoint> history,
                                     const Trajectory& t, PointIndex x,
                                     const OtrdParams& params, double htd_exact,
                                     const CoarseView& view);

/// Per-trajectory memo reused across timestamps.
struct IncrementalEntry {
  TrajId traj_id = 0;
  PointIndex x_prev = 1;
  SegIndex z_prev = 1;
  double htd_prev = 0.0;
  PointIndex witness_prev = 1;
  double witness_min_prev = 0.0;
  std::size_t step_prev = 0;
  std::optional<CoarseView> coarse_prev;
  bool stale = true;
};

enum class ComputePath {
  kFull,
  kCase1,
  kCase2,
  kCase2Rejected,  // guard failed, recomputed from scratch
  kCase3,          // pivotal moved backwards, recomputed from scratch
  kPrunedEarly,    // pivotal-distance lower bound reached the threshold
  kPrunedInLoop,   // running-max lower bound reached the threshold
};

const char* to_string(ComputePath path);

struct IncrementalHtd {
  HtdResult htd;
  ComputePath path = ComputePath::kFull;
};

/// Reuses `entry` (written at history length entry.step_prev < c) to update
/// the HTD for pivotal `x`. Returns the new value when the pivotal is
/// unchanged, or advanced and the witness minimum is not undercut by the
/// newly included points; otherwise nullopt with `path` set to the case
/// that forced a recompute.
std::optional<HtdResult> incremental_htd(const IncrementalEntry& entry,
                                         std::span<const PlanarPoint> history,
                                         const Trajectory& t, PointIndex x,
                                         SegIndex z, const OtrdParams& params,
                                         const CoarseView* view,
                                         bool segment_pruning,
                                         OtrdCounters* counters,
                                         ComputePath* path);

struct OtrdOutcome {
  std::optional<OtrdBreakdown> result;  // nullopt when pruned
  IncrementalEntry entry;               // always refreshed
  ComputePath path = ComputePath::kFull;
  double lower_bound = 0.0;  // bound that triggered pruning
};

/// Scores one candidate trajectory against the object. `threshold` is the
/// current top-k cut-off; `entry` the candidate's memo (may be null or
/// stale); `pivot` a precomputed pivotal for the current position.
OtrdOutcome otrd_compute(const MovingObjectState& o, const Trajectory& t,
                         const OtrdParams& params, const Strategies& strategies,
                         const Threshold& threshold,
                         const IncrementalEntry* entry,
                         const Pivotal* pivot = nullptr,
                         OtrdCounters* counters = nullptr);

}  // namespace trajsearch

#endif  // TRAJSEARCH_OTRD_H_
