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

#ifndef TRAJSEARCH_SEGMENTATION_H_
#define TRAJSEARCH_SEGMENTATION_H_

#include <cstddef>
#include <span>
#include <vector>

#include "trajsearch/geometry.h"
#include "trajsearch/model.h"

namespace trajsearch {

struct SegmentationConfig {
  std::size_t l_min = 30;
  std::size_t l_max = 50;

  /// Throws std::invalid_argument unless 1 <= l_min <= l_max.
  void validate() const;
};

struct Partition {
  std::vector<SegmentBounds> bounds;
  double total_area = 0.0;
};

/// Splits `points` into consecutive segments minimizing the summed MBR area.
///
/// Every segment length lies in [l_min, l_max], except the first segment,
/// which may be anywhere in [1, l_max]; this keeps every n >= 1 coverable
/// without dropping leading points. Among equal-area choices the shorter
/// last segment wins. Runs in O(n * l_max).
Partition partition(std::span<const PlanarPoint> points,
                    const SegmentationConfig& cfg);

/// Exhaustive enumeration of the same partition space; test oracle.
/// Throws std::invalid_argument when points.size() > 20 or points is empty.
Partition brute_force_partition(std::span<const PlanarPoint> points,
                                const SegmentationConfig& cfg);

/// Segments every trajectory of `store` in place.
void segment_store(TrajectoryStore& store, const SegmentationConfig& cfg);

}  // namespace trajsearch

#endif  // TRAJSEARCH_SEGMENTATION_H_
