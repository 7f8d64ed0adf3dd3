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

#include "trajsearch/model.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace trajsearch {

Trajectory::Trajectory(TrajId id, std::vector<PlanarPoint> points)
    : id_(id), points_(std::move(points)) {}

SegmentRef Trajectory::segment(SegIndex u) const {
  const auto& b = bounds(u);
  return SegmentRef{id_, u, b.start, b.end, segment_mbr(u)};
}

SegIndex Trajectory::segment_of(PointIndex idx) const {
  auto it = std::upper_bound(
      bounds_.begin(), bounds_.end(), idx,
      [](PointIndex i, const SegmentBounds& b) { return i < b.start; });
  return static_cast<SegIndex>(it - bounds_.begin());
}

void Trajectory::set_segments(std::vector<SegmentBounds> bounds) {
  PointIndex expected = 1;
  for (const auto& b : bounds) {
    if (b.start != expected || b.end < b.start) {
      throw std::invalid_argument("segment bounds do not tile trajectory " +
                                  std::to_string(id_));
    }
    expected = b.end + 1;
  }
  if (expected != points_.size() + 1) {
    throw std::invalid_argument("segment bounds do not cover trajectory " +
                                std::to_string(id_));
  }
  mbrs_.clear();
  mbrs_.reserve(bounds.size());
  for (const auto& b : bounds) {
    mbrs_.push_back(mbr_of(std::span(points_).subspan(b.start - 1, b.length())));
  }
  bounds_ = std::move(bounds);
}

std::span<const PlanarPoint> sub_trajectory(const Trajectory& t,
                                            PointIndex end_idx) {
  if (end_idx < 1 || end_idx > t.size()) {
    throw std::out_of_range("sub_trajectory: end index " +
                            std::to_string(end_idx) + " outside [1, " +
                            std::to_string(t.size()) + "]");
  }
  return t.points().first(end_idx);
}

void TrajectoryStore::add(Trajectory t) {
  if (t.size() == 0) {
    throw std::invalid_argument("trajectory " + std::to_string(t.id()) +
                                " has no points");
  }
  auto [it, inserted] = by_id_.emplace(t.id(), trajectories_.size());
  if (!inserted) {
    throw std::invalid_argument("duplicate trajectory id " +
                                std::to_string(t.id()));
  }
  trajectories_.push_back(std::move(t));
}

std::size_t TrajectoryStore::point_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories_) n += t.size();
  return n;
}

const Trajectory& TrajectoryStore::get(TrajId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw std::out_of_range("unknown trajectory id " + std::to_string(id));
  }
  return trajectories_[it->second];
}

Trajectory& TrajectoryStore::get_mutable(TrajId id) {
  return const_cast<Trajectory&>(std::as_const(*this).get(id));
}

MovingObjectState append_observation(MovingObjectState state,
                                     const PlanarPoint& p) {
  state.history.push_back(p);
  return state;
}

}  // namespace trajsearch
