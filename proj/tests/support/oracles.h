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

#ifndef TRAJSEARCH_TESTS_ORACLES_H_
#define TRAJSEARCH_TESTS_ORACLES_H_

// Straight-from-the-definition reimplementations used to check the engine.
// Nothing here calls into the library's distance or search code; only the
// plain data types are shared.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "trajsearch/geometry.h"
#include "trajsearch/model.h"

namespace oracle {

using trajsearch::PlanarPoint;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double dist(const PlanarPoint& a, const PlanarPoint& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Nearest point to p, smallest 1-based index on ties.
struct Nearest {
  std::size_t index = 0;
  double distance = kInf;
};

inline Nearest nearest(const std::vector<PlanarPoint>& pts,
                       const PlanarPoint& p) {
  Nearest best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = dist(p, pts[i]);
    if (d < best.distance) best = {i + 1, d};
  }
  return best;
}

// Distance from p to segment [a, b] by ternary-free closed form.
inline double seg_dist(const PlanarPoint& p, const PlanarPoint& a,
                       const PlanarPoint& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0.0) return dist(p, a);
  double s = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
  s = std::clamp(s, 0.0, 1.0);
  return dist(p, {a.x + s * vx, a.y + s * vy});
}

// Dense-sampled segment distance, for checking the closed form.
inline double seg_dist_sampled(const PlanarPoint& p, const PlanarPoint& a,
                               const PlanarPoint& b, int samples = 20000) {
  double best = kInf;
  for (int i = 0; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    best = std::min(best, dist(p, {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)}));
  }
  return best;
}

// max_j theta^(c-j) * min_{i in idx} d(h_j, t_i) with std::pow weights.
// idx holds 1-based indices into t. Returns {htd, witness}; ties go to the
// largest j.
struct Htd {
  double value = 0.0;
  std::size_t witness = 0;
};

inline Htd htd(const std::vector<PlanarPoint>& history,
               const std::vector<PlanarPoint>& t,
               const std::vector<std::size_t>& idx, double theta) {
  Htd out{-1.0, 0};
  const std::size_t c = history.size();
  for (std::size_t j = c; j >= 1; --j) {
    double m = kInf;
    for (std::size_t i : idx) m = std::min(m, dist(history[j - 1], t[i - 1]));
    const double term = std::pow(theta, static_cast<double>(c - j)) * m;
    if (term > out.value) out = {term, j};
  }
  return out;
}

inline std::vector<std::size_t> iota1(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i + 1;
  return v;
}

// Exhaustive search over every split of n points into consecutive pieces;
// all pieces in [lmin, lmax] except the first, which is in [1, lmax].
inline double area_of(const std::vector<PlanarPoint>& pts, std::size_t a,
                      std::size_t b) {
  double x0 = kInf, y0 = kInf, x1 = -kInf, y1 = -kInf;
  for (std::size_t i = a; i <= b; ++i) {
    x0 = std::min(x0, pts[i].x);
    y0 = std::min(y0, pts[i].y);
    x1 = std::max(x1, pts[i].x);
    y1 = std::max(y1, pts[i].y);
  }
  return (x1 - x0) * (y1 - y0);
}

inline double best_partition_area(const std::vector<PlanarPoint>& pts,
                                  std::size_t lmin, std::size_t lmax,
                                  std::size_t start = 0) {
  const std::size_t n = pts.size();
  if (start == n) return 0.0;
  double best = kInf;
  for (std::size_t len = 1; len <= lmax && start + len <= n; ++len) {
    if (start > 0 && len < lmin) continue;
    const double rest = best_partition_area(pts, lmin, lmax, start + len);
    if (rest == kInf) continue;
    best = std::min(best, area_of(pts, start, start + len - 1) + rest);
  }
  return best;
}

// Linear-scan top-k by the definition: every trajectory with a point within
// `radius` of the current position, scored with pivotal = nearest point,
// T' = p^1..p^x, sorted by (otrd, id).
struct Scored {
  std::uint64_t id = 0;
  double otrd = 0.0;
  double htd = 0.0;
  double ttd = 0.0;
  std::size_t x = 0;
  std::size_t witness = 0;
};

inline std::vector<Scored> topk(const trajsearch::TrajectoryStore& store,
                                const std::vector<PlanarPoint>& history,
                                const PlanarPoint& dest, double alpha,
                                double theta, double radius, std::size_t k) {
  std::vector<Scored> all;
  for (const auto& t : store.trajectories()) {
    std::vector<PlanarPoint> pts(t.points().begin(), t.points().end());
    const Nearest nn = nearest(pts, history.back());
    if (nn.distance > radius) continue;
    const Htd h = htd(history, pts, iota1(nn.index), theta);
    const double d_t = seg_dist(dest, pts[nn.index - 1], pts.back());
    all.push_back({t.id(), alpha * h.value + (1 - alpha) * d_t, h.value, d_t,
                   nn.index, h.witness});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    return a.otrd < b.otrd || (a.otrd == b.otrd && a.id < b.id);
  });
  if (all.size() > k) all.resize(k);
  return all;
}

// Random planar polyline; steps of roughly `step` units.
inline std::vector<PlanarPoint> random_walk(std::mt19937_64& rng,
                                            std::size_t n, double extent,
                                            double step) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::normal_distribution<double> nd(0.0, step);
  std::vector<PlanarPoint> pts;
  PlanarPoint p{u(rng), u(rng)};
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back(p);
    p.x += nd(rng);
    p.y += nd(rng);
  }
  return pts;
}

}  // namespace oracle

#endif  // TRAJSEARCH_TESTS_ORACLES_H_
