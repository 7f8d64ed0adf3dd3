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

#include "trajsearch/csts.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trajsearch {

namespace {

bool result_less(const RankedResult& a, const RankedResult& b) {
  return a.breakdown.otrd < b.breakdown.otrd ||
         (a.breakdown.otrd == b.breakdown.otrd && a.traj_id < b.traj_id);
}

}  // namespace

TopKHeap::TopKHeap(std::size_t k) : k_(k) {
  if (k == 0) throw std::invalid_argument("TopKHeap: k must be >= 1");
  items_.reserve(k);
}

Threshold TopKHeap::threshold() const {
  if (items_.size() < k_) return Threshold{};
  return Threshold{items_.front().breakdown.otrd, items_.front().traj_id};
}

bool TopKHeap::offer(const RankedResult& r) {
  if (items_.size() < k_) {
    items_.push_back(r);
    std::push_heap(items_.begin(), items_.end(), result_less);
    return true;
  }
  if (!result_less(r, items_.front())) return false;
  std::pop_heap(items_.begin(), items_.end(), result_less);
  items_.back() = r;
  std::push_heap(items_.begin(), items_.end(), result_less);
  return true;
}

std::vector<RankedResult> TopKHeap::sorted() const {
  std::vector<RankedResult> out = items_;
  std::sort(out.begin(), out.end(), result_less);
  return out;
}

QuerySession::QuerySession(const SvtiIndex& index,
                           const PlanarPoint& destination,
                           const OtrdParams& params, const QueryConfig& query,
                           const Strategies& strategies)
    : index_(&index),
      params_(params),
      query_(query),
      strategies_(strategies) {
  params_.validate();
  query_.validate();
  object_.destination = destination;
}

QuerySession session_new(const SvtiIndex& index, const PlanarPoint& destination,
                         const OtrdParams& params, const QueryConfig& query,
                         const Strategies& strategies) {
  return QuerySession(index, destination, params, query, strategies);
}

void QuerySession::observe(const PlanarPoint& p) {
  object_.history.push_back(p);
}

std::vector<RankedResult> QuerySession::step(const PlanarPoint& p) {
  object_.history.push_back(p);
  const std::size_t c = object_.c();

  std::erase_if(buffer_, [c](const auto& kv) {
    return c - kv.second.step_prev > kEvictAfter;
  });

  last_ = StepStats{};
  const RangeResult range = index_->range_query(p, query_);
  last_.candidates = range.hits.size();
  last_.radius = range.radius;

  TopKHeap heap(query_.k);
  const TrajectoryStore& store = index_->store();
  for (const RangeHit& hit : range.hits) {
    const Trajectory& t = store.get(hit.traj_id);
    auto found = buffer_.find(hit.traj_id);
    const IncrementalEntry* entry =
        found == buffer_.end() ? nullptr : &found->second;
    const Threshold threshold = heap.threshold();
    const Pivotal pivot{hit.x, hit.z, hit.distance};

    OtrdOutcome outcome = otrd_compute(object_, t, params_, strategies_,
                                       threshold, entry, &pivot,
                                       &last_.counters);
    if (outcome.result) {
      heap.offer(RankedResult{hit.traj_id, *outcome.result});
    } else if (observer_) {
      observer_(PruneEvent{hit.traj_id, c, threshold, outcome.lower_bound,
                           outcome.path});
    }
    if (found == buffer_.end()) {
      buffer_.emplace(hit.traj_id, std::move(outcome.entry));
    } else {
      found->second = std::move(outcome.entry);
    }
  }
  total_ += last_.counters;
  return heap.sorted();
}

OtrdBreakdown reference_otrd(const MovingObjectState& object,
                             const Trajectory& t, const OtrdParams& params) {
  const PlanarPoint& cur = object.current();
  PointIndex x = 1;
  double best = std::numeric_limits<double>::infinity();
  for (PointIndex i = 1; i <= t.size(); ++i) {
    const double d = euclid(cur, t.at(i));
    if (d < best) {
      best = d;
      x = i;
    }
  }

  std::vector<PointIndex> considered;
  if (params.g > 1) {
    considered = coarse_view(x, params.g).indices;
  } else {
    for (PointIndex i = 1; i <= x; ++i) considered.push_back(i);
  }

  const std::size_t c = object.c();
  double htd = 0.0;
  PointIndex witness = c;
  for (std::size_t j = c; j >= 1; --j) {
    double m = std::numeric_limits<double>::infinity();
    for (PointIndex i : considered) {
      m = std::min(m, euclid(object.history[j - 1], t.at(i)));
    }
    const double term = std::pow(params.theta, static_cast<double>(c - j)) * m;
    if (j == c || term > htd) {
      htd = term;
      witness = j;
    }
  }

  OtrdBreakdown b;
  b.htd = htd;
  b.ttd = point_segment_distance(object.destination, t.at(x), t.at(t.size()));
  b.otrd = params.alpha * b.htd + (1.0 - params.alpha) * b.ttd;
  b.witness_y = witness;
  b.pivotal_x = x;
  b.pivotal_z = t.segmented() ? t.segment_of(x) : 1;
  return b;
}

std::vector<RankedResult> reference_topk(const TrajectoryStore& store,
                                         const MovingObjectState& object,
                                         const OtrdParams& params,
                                         double radius, std::size_t k) {
  std::vector<RankedResult> all;
  if (object.history.empty()) return all;
  for (const Trajectory& t : store.trajectories()) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& p : t.points()) {
      nearest = std::min(nearest, euclid(object.current(), p));
    }
    if (nearest > radius) continue;
    all.push_back({t.id(), reference_otrd(object, t, params)});
  }
  std::sort(all.begin(), all.end(), result_less);
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<RankedResult> step_reference(QuerySession session,
                                         const PlanarPoint& p) {
  session.observe(p);
  const double radius = session.index().resolve_radius(p, session.query());
  return reference_topk(session.index().store(), session.object(),
                        session.params(), radius, session.query().k);
}

}  // namespace trajsearch
