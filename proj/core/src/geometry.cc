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

#include "trajsearch/geometry.h"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace trajsearch {

Mbr united(Mbr a, const Mbr& b) {
  a.expand(b);
  return a;
}

double point_segment_distance(const PlanarPoint& p, const PlanarPoint& a,
                              const PlanarPoint& b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0.0) return euclid(p, a);
  double t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
  if (t <= 0.0) return euclid(p, a);
  if (t >= 1.0) return euclid(p, b);
  return euclid(p, PlanarPoint{a.x + t * vx, a.y + t * vy});
}

Mbr mbr_of(std::span<const PlanarPoint> points) {
  if (points.empty()) {
    throw std::invalid_argument("mbr_of: empty point sequence");
  }
  Mbr m = Mbr::of_point(points.front());
  for (const auto& p : points.subspan(1)) m.expand(p);
  return m;
}

double maxdist_point_mbr(const PlanarPoint& p, const Mbr& m) {
  const double dx = std::max(std::abs(p.x - m.min_x), std::abs(p.x - m.max_x));
  const double dy = std::max(std::abs(p.y - m.min_y), std::abs(p.y - m.max_y));
  return std::sqrt(dx * dx + dy * dy);
}

bool valid_lon_lat(double lon, double lat) {
  return std::isfinite(lon) && std::isfinite(lat) && lon >= -180.0 &&
         lon <= 180.0 && lat >= -90.0 && lat <= 90.0;
}

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

PlanarPoint project(double lon, double lat, const ProjectionRef& ref) {
  if (!valid_lon_lat(lon, lat)) {
    throw std::invalid_argument("project: longitude/latitude out of range");
  }
  const double k = ref.earth_radius * kDegToRad;
  return {k * (lon - ref.ref_lon) * std::cos(ref.ref_lat * kDegToRad),
          k * (lat - ref.ref_lat)};
}

void unproject(const PlanarPoint& p, const ProjectionRef& ref, double& lon,
               double& lat) {
  const double k = ref.earth_radius * kDegToRad;
  lat = ref.ref_lat + p.y / k;
  lon = ref.ref_lon + p.x / (k * std::cos(ref.ref_lat * kDegToRad));
}

}  // namespace trajsearch
