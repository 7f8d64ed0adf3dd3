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

#ifndef TRAJSEARCH_CSTS_H_
#define TRAJSEARCH_CSTS_H_

#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include "trajsearch/model.h"
#include "trajsearch/otrd.h"
#include "trajsearch/svti.h"

namespace trajsearch {

struct RankedResult {
  TrajId traj_id = 0;
  OtrdBreakdown breakdown;
};

/// Bounded max-heap keeping the k smallest (otrd, traj_id) pairs.
class TopKHeap {
 public:
  explicit TopKHeap(std::size_t k);

  std::size_t k() const { return k_; }
  std::size_t size() const { return items_.size(); }

  /// The k-th smallest pair so far; (+inf, max id) while fewer than k.
  Threshold threshold() const;

  /// Returns true when the result entered the heap.
  bool offer(const RankedResult& r);

  /// Contents in ascending (otrd, traj_id) order.
  std::vector<RankedResult> sorted() const;

 private:
  std::size_t k_;
  std::vector<RankedResult> items_;  // max-heap on (otrd, traj_id)
};

/// Reported whenever a candidate is discarded by the k-bound.
struct PruneEvent {
  TrajId traj_id = 0;
  std::size_t step = 0;
  Threshold threshold;
  double lower_bound = 0.0;
  ComputePath path = ComputePath::kPrunedEarly;
};
using PruneObserver = std::function<void(const PruneEvent&)>;

struct StepStats {
  std::size_t candidates = 0;
  double radius = 0.0;
  OtrdCounters counters;
};

/// Continuous top-k search for one moving object. Single owner: step() calls
/// must be sequential. Many sessions may share one index.
class QuerySession {
 public:
  /// Entries not refreshed for this many steps are dropped.
  static constexpr std::size_t kEvictAfter = 8;

  QuerySession(const SvtiIndex& index, const PlanarPoint& destination,
               const OtrdParams& params, const QueryConfig& query,
               const Strategies& strategies = Strategies::all());

  const MovingObjectState& object() const { return object_; }
  const OtrdParams& params() const { return params_; }
  const QueryConfig& query() const { return query_; }
  const Strategies& strategies() const { return strategies_; }
  const SvtiIndex& index() const { return *index_; }
  const std::unordered_map<TrajId, IncrementalEntry>& buffer() const {
    return buffer_;
  }

  /// Extends the history without searching (seeding an initial T_o).
  void observe(const PlanarPoint& p);

  /// Appends `p` and returns the current top-k in ascending OTRD order.
  std::vector<RankedResult> step(const PlanarPoint& p);

  const StepStats& last_stats() const { return last_; }
  const OtrdCounters& total_counters() const { return total_; }
  void set_prune_observer(PruneObserver observer) {
    observer_ = std::move(observer);
  }

 private:
  const SvtiIndex* index_;
  MovingObjectState object_;
  OtrdParams params_;
  QueryConfig query_;
  Strategies strategies_;
  std::unordered_map<TrajId, IncrementalEntry> buffer_;
  StepStats last_;
  OtrdCounters total_;
  PruneObserver observer_;
};

/// Validating constructor; throws std::invalid_argument when k == 0 or the
/// parameters are out of range.
QuerySession session_new(const SvtiIndex& index, const PlanarPoint& destination,
                         const OtrdParams& params, const QueryConfig& query,
                         const Strategies& strategies = Strategies::all());

/// Strategy-free exact OTRD of `object` against `t` by direct scans (no
/// index, no pruning, no reuse). With g > 1 the coarse view is rebuilt from
/// scratch.
OtrdBreakdown reference_otrd(const MovingObjectState& object,
                             const Trajectory& t, const OtrdParams& params);

/// Linear-scan top-k over every trajectory whose nearest point lies within
/// `radius` of the current position.
std::vector<RankedResult> reference_topk(const TrajectoryStore& store,
                                         const MovingObjectState& object,
                                         const OtrdParams& params,
                                         double radius, std::size_t k);

/// Oracle for step(): appends `p` to a copy of the session and answers by
/// linear scan, using the radius the session's range would resolve to.
std::vector<RankedResult> step_reference(QuerySession session,
                                         const PlanarPoint& p);

}  // namespace trajsearch

#endif  // TRAJSEARCH_CSTS_H_
