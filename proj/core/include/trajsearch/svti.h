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

#ifndef TRAJSEARCH_SVTI_H_
#define TRAJSEARCH_SVTI_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "trajsearch/geometry.h"
#include "trajsearch/model.h"
#include "trajsearch/segmentation.h"

namespace trajsearch {

/// Range settings: an absolute radius, or a candidate rate rho asking
/// for roughly rho * k candidate trajectories.
struct QueryConfig {
  enum class Mode { kAbsolute, kCandidateRate };

  Mode mode = Mode::kCandidateRate;
  double radius = 0.0;
  double candidate_rate = 15.0;
  std::size_t k = 50;

  static QueryConfig absolute(double r, std::size_t k) {
    return {Mode::kAbsolute, r, 0.0, k};
  }
  static QueryConfig rate(double rho, std::size_t k) {
    return {Mode::kCandidateRate, 0.0, rho, k};
  }
  void validate() const;
};

/// A trajectory inside the range together with its pivotal point.
struct RangeHit {
  TrajId traj_id = 0;
  PointIndex x = 1;
  SegIndex z = 1;
  double distance = 0.0;

  friend bool operator==(const RangeHit&, const RangeHit&) = default;
};

struct RangeResult {
  std::vector<RangeHit> hits;  // ascending traj_id
  double radius = 0.0;         // radius actually applied
};

/// R-tree over trajectory segment MBRs. Owns (shares) the segmented
/// trajectory store it indexes.
///
/// Read-only operations are safe to call concurrently; insert_segment
/// needs exclusive access.
class SvtiIndex;
SvtiIndex load_index(const std::filesystem::path& path);

class SvtiIndex {
 public:
  static constexpr std::size_t kDefaultNodeCapacity = 16;

  /// Empty tree over an already segmented store; fill it with
  /// insert_segment.
  SvtiIndex(std::shared_ptr<const TrajectoryStore> store,
            std::size_t node_capacity = kDefaultNodeCapacity);

  /// Segments every trajectory and bulk-loads the tree (sort-tile-recursive).
  static SvtiIndex build(TrajectoryStore store, const SegmentationConfig& cfg,
                         std::size_t node_capacity = kDefaultNodeCapacity);

  /// Bulk-loads a store whose trajectories already carry segments made
  /// with `cfg`.
  static SvtiIndex build_segmented(TrajectoryStore store,
                                   const SegmentationConfig& cfg,
                                   std::size_t node_capacity = kDefaultNodeCapacity);

  const TrajectoryStore& store() const { return *store_; }
  std::shared_ptr<const TrajectoryStore> shared_store() const { return store_; }
  std::size_t node_capacity() const { return capacity_; }
  const SegmentationConfig& segmentation() const { return seg_cfg_; }
  std::size_t entry_count() const { return entries_; }
  std::size_t height() const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  Mbr bounds() const;

  /// Adds one segment. Throws std::invalid_argument when the owner or
  /// segment is unknown, or the segment is already present.
  void insert_segment(const SegmentRef& seg);

  /// Segments whose MBR lies within `r` of `p` (mindist <= r).
  std::vector<SegmentRef> candidate_segments(const PlanarPoint& p,
                                             double r) const;

  /// Trajectories whose pivotal point lies within the configured range.
  RangeResult range_query(const PlanarPoint& p, const QueryConfig& cfg) const;
  RangeResult range_query(const PlanarPoint& p, double r) const;

  /// Radius used for a candidate-rate query at `p`.
  double resolve_radius(const PlanarPoint& p, const QueryConfig& cfg) const;

  /// Smallest MBR mindist at which `count` distinct trajectories have at
  /// least one segment; infinity if the index holds fewer.
  double distinct_trajectory_radius(const PlanarPoint& p,
                                    std::size_t count) const;

  /// Checks structural invariants; returns an empty string when valid.
  std::string validate() const;

 private:
  struct Node {
    Mbr box;
    bool leaf = true;
    std::vector<std::uint32_t> children;
    std::vector<SegmentRef> entries;
  };

  std::uint32_t bulk_load(std::vector<SegmentRef> entries);
  std::uint32_t new_node(bool leaf);
  void recompute_box(std::uint32_t n);
  // Returns the index of a new sibling when `n` had to split.
  std::optional<std::uint32_t> insert_rec(std::uint32_t n,
                                          const SegmentRef& seg);
  std::uint32_t split(std::uint32_t n);

  std::shared_ptr<const TrajectoryStore> store_;
  std::size_t capacity_;
  SegmentationConfig seg_cfg_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
  std::size_t entries_ = 0;
  std::unordered_map<TrajId, std::vector<bool>> present_;

  friend SvtiIndex load_index(const std::filesystem::path& path);
};

/// Load failures. `kind()` distinguishes the cause.
class LoadError : public std::runtime_error {
 public:
  enum class Kind { kFormat, kVersion, kTruncated, kChecksum };
  LoadError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

constexpr std::uint16_t kFileFormatVersion = 1;

/// Index file: "SVTI", u16 version, u64 payload length, payload, CRC32 of
/// payload; all little-endian. The tree itself is rebuilt on load.
void save_index(const SvtiIndex& index, const std::filesystem::path& path);
SvtiIndex load_index(const std::filesystem::path& path);

/// Store file: same container with magic "SVTS"; segmentation not stored.
void save_store(const TrajectoryStore& store,
                const std::filesystem::path& path);
TrajectoryStore load_store(const std::filesystem::path& path);

/// Serialized store bytes, for hashing and determinism checks.
std::vector<std::uint8_t> serialize_store(const TrajectoryStore& store);

}  // namespace trajsearch

#endif  // TRAJSEARCH_SVTI_H_
