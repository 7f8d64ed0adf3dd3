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

#include <random>
#include <vector>

#include "doctest.h"
#include "support/oracles.h"
#include "trajsearch/segmentation.h"

using namespace trajsearch;

namespace {

void check_shape(const Partition& p, std::size_t n, const SegmentationConfig& cfg) {
  REQUIRE_FALSE(p.bounds.empty());
  CHECK(p.bounds.front().start == 1);
  CHECK(p.bounds.back().end == n);
  for (std::size_t i = 0; i < p.bounds.size(); ++i) {
    const auto& b = p.bounds[i];
    CHECK(b.start <= b.end);
    if (i > 0) {
      CHECK(b.start == p.bounds[i - 1].end + 1);
      CHECK(b.length() >= cfg.l_min);
    }
    CHECK(b.length() <= cfg.l_max);
  }
}

}  // namespace

TEST_SUITE("segmentation") {

TEST_CASE("worked partition") {
  std::vector<PlanarPoint> pts{{0, 0}, {1, 0}, {2, 0}, {2, 1}};
  const SegmentationConfig cfg{2, 3};
  Partition p = partition(pts, cfg);
  CHECK(p.bounds == std::vector<SegmentBounds>{{1, 2}, {3, 4}});
  CHECK(p.total_area == 0.0);
  CHECK(brute_force_partition(pts, cfg).total_area == 0.0);
  CHECK(oracle::best_partition_area(pts, 2, 3) == 0.0);
}

TEST_CASE("short trajectory becomes one segment") {
  std::mt19937_64 rng(1);
  auto pts = oracle::random_walk(rng, 5, 100, 3);
  Partition p = partition(pts, {30, 50});
  CHECK(p.bounds == std::vector<SegmentBounds>{{1, 5}});
}

TEST_CASE("collinear horizontal input costs nothing") {
  std::vector<PlanarPoint> pts;
  for (int i = 0; i < 97; ++i) pts.push_back({i * 1.5, 4.0});
  for (auto cfg : {SegmentationConfig{1, 1}, SegmentationConfig{3, 7},
                   SegmentationConfig{30, 50}}) {
    Partition p = partition(pts, cfg);
    CHECK(p.total_area == 0.0);
    check_shape(p, pts.size(), cfg);
  }
}

TEST_CASE("brute force edge cases") {
  std::vector<PlanarPoint> one{{3, 3}};
  Partition p = brute_force_partition(one, {1, 1});
  CHECK(p.bounds == std::vector<SegmentBounds>{{1, 1}});
  CHECK(p.total_area == 0.0);

  std::vector<PlanarPoint> two{{0, 0}, {5, 5}};
  p = brute_force_partition(two, {1, 1});
  CHECK(p.bounds == std::vector<SegmentBounds>{{1, 1}, {2, 2}});
  CHECK(p.total_area == 0.0);

  std::vector<PlanarPoint> many(21, PlanarPoint{1, 1});
  CHECK_THROWS_AS(brute_force_partition(many, {2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_partition({}, {2, 3}), std::invalid_argument);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(SegmentationConfig({0, 3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(SegmentationConfig({4, 3}).validate(), std::invalid_argument);
  CHECK_NOTHROW(SegmentationConfig({3, 3}).validate());
}

TEST_CASE("dp matches exhaustive search") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t lmin = 2 + rng() % 3;
    const std::size_t lmax = 4 + rng() % 3;
    auto pts = oracle::random_walk(rng, n, 100, 8);
    const SegmentationConfig cfg{lmin, lmax};
    Partition p = partition(pts, cfg);
    check_shape(p, n, cfg);
    const double want = oracle::best_partition_area(pts, lmin, lmax);
    CHECK(p.total_area == doctest::Approx(want).epsilon(1e-9));
    CHECK(brute_force_partition(pts, cfg).total_area ==
          doctest::Approx(want).epsilon(1e-9));
    // reported area is the sum over the returned bounds
    double sum = 0.0;
    for (const auto& b : p.bounds) sum += oracle::area_of(pts, b.start - 1, b.end - 1);
    CHECK(sum == doctest::Approx(p.total_area).epsilon(1e-12));
  }
}

TEST_CASE("every length is coverable") {
  std::mt19937_64 rng(4);
  for (std::size_t n = 1; n <= 200; ++n) {
    auto pts = oracle::random_walk(rng, n, 100, 4);
    const SegmentationConfig cfg{30, 50};
    check_shape(partition(pts, cfg), n, cfg);
  }
}

TEST_CASE("ties prefer the shorter last segment") {
  // all points equal: every partition costs 0
  std::vector<PlanarPoint> pts(10, PlanarPoint{2, 2});
  Partition p = partition(pts, {2, 4});
  CHECK(p.bounds.back().length() == 2);
}

}  // TEST_SUITE
