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

#include "trajsearch/segmentation.h"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace trajsearch {

void SegmentationConfig::validate() const {
  if (l_min < 1) throw std::invalid_argument("l_min must be >= 1");
  if (l_min > l_max) throw std::invalid_argument("l_min must be <= l_max");
}

Partition partition(std::span<const PlanarPoint> points,
                    const SegmentationConfig& cfg) {
  cfg.validate();
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("partition: empty trajectory");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // best[j]: minimal area covering p^1..p^j; last_len[j]: length of the
  // final segment in that optimum.
  std::vector<double> best(n + 1, kInf);
  std::vector<std::size_t> last_len(n + 1, 0);
  best[0] = 0.0;

  for (std::size_t j = 1; j <= n; ++j) {
    Mbr window;
    const std::size_t longest = std::min(cfg.l_max, j);
    for (std::size_t l = 1; l <= longest; ++l) {
      window.expand(points[j - l]);
      const std::size_t prefix = j - l;
      // A segment ending at j is either the first one (prefix empty) or a
      // regular one whose length respects l_min.
      if (prefix != 0 && l < cfg.l_min) continue;
      const double cand = best[prefix] + window.area();
      if (cand < best[j]) {
        best[j] = cand;
        last_len[j] = l;
      }
    }
  }

  Partition out;
  out.total_area = best[n];
  for (std::size_t j = n; j > 0; j -= last_len[j]) {
    out.bounds.push_back({j - last_len[j] + 1, j});
  }
  std::reverse(out.bounds.begin(), out.bounds.end());
  return out;
}

namespace {

void enumerate(std::span<const PlanarPoint> points,
               const SegmentationConfig& cfg, std::size_t start,
               std::vector<SegmentBounds>& current, double area,
               Partition& best) {
  const std::size_t n = points.size();
  if (start == n) {
    if (area < best.total_area) {
      best.total_area = area;
      best.bounds = current;
    }
    return;
  }
  const bool first = start == 0;
  const std::size_t lo = first ? 1 : cfg.l_min;
  for (std::size_t l = lo; l <= cfg.l_max && start + l <= n; ++l) {
    double seg_area = mbr_of(points.subspan(start, l)).area();
    current.push_back({start + 1, start + l});
    enumerate(points, cfg, start + l, current, area + seg_area, best);
    current.pop_back();
  }
}

}  // namespace

Partition brute_force_partition(std::span<const PlanarPoint> points,
                                const SegmentationConfig& cfg) {
  cfg.validate();
  if (points.empty()) {
    throw std::invalid_argument("brute_force_partition: empty trajectory");
  }
  if (points.size() > 20) {
    throw std::invalid_argument("brute_force_partition: n > 20");
  }
  Partition best;
  best.total_area = std::numeric_limits<double>::infinity();
  std::vector<SegmentBounds> current;
  enumerate(points, cfg, 0, current, 0.0, best);
  return best;
}

void segment_store(TrajectoryStore& store, const SegmentationConfig& cfg) {
  for (auto& t : store.trajectories_mutable()) {
    t.set_segments(partition(t.points(), cfg).bounds);
  }
}

}  // namespace trajsearch
