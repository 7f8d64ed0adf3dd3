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

#ifndef TRAJSEARCH_MODEL_H_
#define TRAJSEARCH_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "trajsearch/geometry.h"

namespace trajsearch {

using TrajId = std::uint64_t;

// Point and segment indices are 1-based throughout the library: point 1 is
// the first fix of a trajectory, segment 1 its first segment.
using PointIndex = std::size_t;
using SegIndex = std::size_t;

/// Inclusive 1-based point range of one segment.
struct SegmentBounds {
  PointIndex start = 1;
  PointIndex end = 1;

  std::size_t length() const { return end - start + 1; }
  friend bool operator==(const SegmentBounds&, const SegmentBounds&) = default;
};

/// One indexed segment, as stored in the R-tree leaves.
struct SegmentRef {
  TrajId traj_id = 0;
  SegIndex seg_index = 1;
  PointIndex start_idx = 1;
  PointIndex end_idx = 1;
  Mbr mbr;

  friend bool operator==(const SegmentRef&, const SegmentRef&) = default;
};

/// A historical trajectory. Points are immutable once constructed; the
/// segmentation is attached once, when the trajectory is indexed.
class Trajectory {
 public:
  Trajectory(TrajId id, std::vector<PlanarPoint> points);

  TrajId id() const { return id_; }
  std::size_t size() const { return points_.size(); }
  std::span<const PlanarPoint> points() const { return points_; }

  /// 1-based point access.
  const PlanarPoint& at(PointIndex idx) const { return points_[idx - 1]; }

  bool segmented() const { return !bounds_.empty(); }
  std::size_t segment_count() const { return bounds_.size(); }
  std::span<const SegmentBounds> segment_bounds() const { return bounds_; }
  const SegmentBounds& bounds(SegIndex u) const { return bounds_[u - 1]; }
  const Mbr& segment_mbr(SegIndex u) const { return mbrs_[u - 1]; }
  SegmentRef segment(SegIndex u) const;

  /// Segment containing point `idx`.
  SegIndex segment_of(PointIndex idx) const;

  /// Attaches a segmentation. Throws std::invalid_argument unless `bounds`
  /// tiles [1, size()] exactly.
  void set_segments(std::vector<SegmentBounds> bounds);

 private:
  TrajId id_;
  std::vector<PlanarPoint> points_;
  std::vector<SegmentBounds> bounds_;
  std::vector<Mbr> mbrs_;
};

/// Prefix p^1..p^end_idx of `t` as a view. Throws std::out_of_range when
/// end_idx is outside [1, t.size()].
std::span<const PlanarPoint> sub_trajectory(const Trajectory& t,
                                            PointIndex end_idx);

class TrajectoryStore {
 public:
  TrajectoryStore() = default;
  explicit TrajectoryStore(ProjectionRef projection)
      : projection_(projection) {}

  /// Throws std::invalid_argument on duplicate ids or empty trajectories.
  void add(Trajectory t);

  std::size_t size() const { return trajectories_.size(); }
  bool empty() const { return trajectories_.empty(); }
  std::size_t point_count() const;

  bool contains(TrajId id) const { return by_id_.contains(id); }
  /// Throws std::out_of_range for unknown ids.
  const Trajectory& get(TrajId id) const;
  Trajectory& get_mutable(TrajId id);

  /// Trajectories in insertion order.
  std::span<const Trajectory> trajectories() const { return trajectories_; }
  std::span<Trajectory> trajectories_mutable() { return trajectories_; }

  const ProjectionRef& projection() const { return projection_; }
  void set_projection(const ProjectionRef& p) { projection_ = p; }

 private:
  std::vector<Trajectory> trajectories_;
  std::unordered_map<TrajId, std::size_t> by_id_;
  ProjectionRef projection_;
};

/// The query object: its observed history T_o and fixed destination.
struct MovingObjectState {
  std::vector<PlanarPoint> history;
  PlanarPoint destination;

  std::size_t c() const { return history.size(); }
  const PlanarPoint& current() const { return history.back(); }
};

MovingObjectState append_observation(MovingObjectState state,
                                     const PlanarPoint& p);

}  // namespace trajsearch

#endif  // TRAJSEARCH_MODEL_H_
