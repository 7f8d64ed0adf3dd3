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

#ifndef TRAJSEARCH_GEOMETRY_H_
#define TRAJSEARCH_GEOMETRY_H_

#include <algorithm>
#include <cmath>
#include <span>

namespace trajsearch {

/// A position on the projected plane, in meters east (x) and north (y).
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

/// Axis-aligned rectangle. A default-constructed Mbr is empty (inverted
/// bounds) and becomes valid after the first `expand`.
struct Mbr {
  double min_x = INFINITY;
  double min_y = INFINITY;
  double max_x = -INFINITY;
  double max_y = -INFINITY;

  static Mbr of_point(const PlanarPoint& p) { return {p.x, p.y, p.x, p.y}; }

  bool empty() const { return min_x > max_x || min_y > max_y; }
  double area() const {
    return empty() ? 0.0 : (max_x - min_x) * (max_y - min_y);
  }
  PlanarPoint center() const {
    return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)};
  }

  void expand(const PlanarPoint& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  void expand(const Mbr& o) {
    min_x = std::min(min_x, o.min_x);
    min_y = std::min(min_y, o.min_y);
    max_x = std::max(max_x, o.max_x);
    max_y = std::max(max_y, o.max_y);
  }

  bool contains(const PlanarPoint& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  bool contains(const Mbr& o) const {
    return o.min_x >= min_x && o.max_x <= max_x && o.min_y >= min_y &&
           o.max_y <= max_y;
  }

  friend bool operator==(const Mbr&, const Mbr&) = default;
};

Mbr united(Mbr a, const Mbr& b);

/// Reference for the local equirectangular projection.
struct ProjectionRef {
  double ref_lon = 0.0;
  double ref_lat = 0.0;
  double earth_radius = 6371000.0;

  friend bool operator==(const ProjectionRef&, const ProjectionRef&) = default;
};

inline double euclid(const PlanarPoint& a, const PlanarPoint& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
}

/// Distance from `p` to the closed line segment [a, b]. Degenerates to
/// euclid(p, a) when a == b.
double point_segment_distance(const PlanarPoint& p, const PlanarPoint& a,
                              const PlanarPoint& b);

/// Tightest rectangle around `points`. Throws std::invalid_argument when
/// `points` is empty.
Mbr mbr_of(std::span<const PlanarPoint> points);

/// Minimum distance from `p` to any point of `m` (0 when p is inside or on
/// the boundary). A true lower bound on euclid(p, q) for every q in m.
inline double mindist_point_mbr(const PlanarPoint& p, const Mbr& m) {
  const double dx = p.x < m.min_x ? m.min_x - p.x
                                  : (p.x > m.max_x ? p.x - m.max_x : 0.0);
  const double dy = p.y < m.min_y ? m.min_y - p.y
                                  : (p.y > m.max_y ? p.y - m.max_y : 0.0);
  return std::sqrt(dx * dx + dy * dy);
}

/// Largest distance from `p` to any point of `m`.
double maxdist_point_mbr(const PlanarPoint& p, const Mbr& m);

bool valid_lon_lat(double lon, double lat);

/// Equirectangular projection of (lon, lat) around `ref`. Throws
/// std::invalid_argument for out-of-range coordinates.
PlanarPoint project(double lon, double lat, const ProjectionRef& ref);

/// Inverse of `project`.
void unproject(const PlanarPoint& p, const ProjectionRef& ref, double& lon,
               double& lat);

}  // namespace trajsearch

#endif  // TRAJSEARCH_GEOMETRY_H_
