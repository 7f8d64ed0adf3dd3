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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "support/oracles.h"
#include "support/world.h"
#include "trajsearch/segmentation.h"
#include "trajsearch/svti.h"

using namespace trajsearch;
using testworld::TempDir;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Linear scan: every trajectory whose nearest point is within r, with the
// smallest nearest index.
std::vector<RangeHit> scan_range(const TrajectoryStore& store,
                                 const PlanarPoint& p, double r) {
  std::vector<RangeHit> out;
  for (const auto& t : store.trajectories()) {
    std::vector<PlanarPoint> pts(t.points().begin(), t.points().end());
    const auto nn = oracle::nearest(pts, p);
    if (nn.distance <= r) out.push_back({t.id(), nn.index, 0, nn.distance});
  }
  std::sort(out.begin(), out.end(),
            [](const RangeHit& a, const RangeHit& b) { return a.traj_id < b.traj_id; });
  return out;
}

void check_same_hits(const std::vector<RangeHit>& got,
                     const std::vector<RangeHit>& want,
                     const TrajectoryStore& store) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].traj_id == want[i].traj_id);
    CHECK(got[i].x == want[i].x);
    CHECK(got[i].distance == want[i].distance);
    const auto& t = store.get(got[i].traj_id);
    const auto& b = t.bounds(got[i].z);
    CHECK(b.start <= got[i].x);
    CHECK(got[i].x <= b.end);
  }
}

TrajectoryStore two_by_two() {
  TrajectoryStore s;
  s.add(Trajectory(1, {{0, 0}, {1, 0}, {2, 0}, {3, 1}}));
  s.add(Trajectory(2, {{10, 10}, {11, 10}, {12, 10}, {13, 11}}));
  return s;
}

}  // namespace

TEST_SUITE("svti") {

TEST_CASE("small build fits one leaf") {
  auto idx = SvtiIndex::build(two_by_two(), {2, 2}, 4);
  CHECK(idx.entry_count() == 4);
  CHECK(idx.height() == 1);
  CHECK(idx.leaf_count() == 1);
  CHECK(idx.validate().empty());
}

TEST_CASE("seven segments spread over two leaves under one root") {
  TrajectoryStore s;
  s.add(Trajectory(1, {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}}));
  s.add(Trajectory(2, {{0, 5}, {1, 5}, {2, 5}, {3, 5}}));
  s.add(Trajectory(3, {{9, 9}, {9, 8}, {9, 7}, {9, 6}}));
  auto idx = SvtiIndex::build(std::move(s), {2, 2}, 4);
  CHECK(idx.entry_count() == 7);
  CHECK(idx.leaf_count() == 2);
  CHECK(idx.height() == 2);
  CHECK(idx.validate().empty());
}

TEST_CASE("empty index") {
  auto idx = SvtiIndex::build(TrajectoryStore{}, {30, 50});
  CHECK(idx.entry_count() == 0);
  CHECK(idx.candidate_segments({0, 0}, kInf).empty());
  CHECK(idx.range_query({0, 0}, 100.0).hits.empty());
  CHECK(idx.range_query({0, 0}, QueryConfig::rate(15, 50)).hits.empty());
  CHECK(idx.validate().empty());
}

TEST_CASE("insert and split") {
  std::mt19937_64 rng(17);
  TrajectoryStore store = testworld::random_store(rng, 20, 25, 30);
  segment_store(store, {3, 5});
  auto shared = std::make_shared<const TrajectoryStore>(store);

  SvtiIndex idx(shared, 4);
  const SegmentRef first = shared->get(0).segment(1);
  idx.insert_segment(first);
  CHECK(idx.entry_count() == 1);
  CHECK(idx.height() == 1);
  CHECK(idx.candidate_segments(first.mbr.center(), 0.0).size() == 1);
  CHECK_THROWS_AS(idx.insert_segment(first), std::invalid_argument);

  SegmentRef ghost = first;
  ghost.traj_id = 999;
  CHECK_THROWS_AS(idx.insert_segment(ghost), std::invalid_argument);
  SegmentRef bad_seg = first;
  bad_seg.seg_index = 1000;
  CHECK_THROWS_AS(idx.insert_segment(bad_seg), std::invalid_argument);

  for (SegIndex u = 2; u <= 5; ++u) idx.insert_segment(shared->get(0).segment(u));
  CHECK(idx.entry_count() == 5);
  CHECK(idx.leaf_count() == 2);
  CHECK(idx.height() == 2);
  CHECK(idx.validate().empty());
}

TEST_CASE("incremental inserts answer like a bulk build") {
  std::mt19937_64 rng(23);
  TrajectoryStore store = testworld::random_store(rng, 60, 5, 80);
  segment_store(store, {4, 7});
  auto shared = std::make_shared<const TrajectoryStore>(store);
  SvtiIndex grown(shared, 5);
  std::vector<SegmentRef> all;
  for (const auto& t : shared->trajectories()) {
    for (SegIndex u = 1; u <= t.segment_count(); ++u) all.push_back(t.segment(u));
  }
  std::shuffle(all.begin(), all.end(), rng);
  for (const auto& s : all) {
    grown.insert_segment(s);
    REQUIRE(grown.validate().empty());
  }
  auto bulk = SvtiIndex::build(store, {4, 7}, 5);
  std::uniform_real_distribution<double> u(-100, 1100);
  std::uniform_real_distribution<double> ur(0, 150);
  for (int i = 0; i < 100; ++i) {
    const PlanarPoint p{u(rng), u(rng)};
    const double r = ur(rng);
    CHECK(grown.candidate_segments(p, r) == bulk.candidate_segments(p, r));
    CHECK(grown.range_query(p, r).hits == bulk.range_query(p, r).hits);
  }
}

TEST_CASE("candidate segments against a linear scan of MBRs") {
  std::mt19937_64 rng(31);
  auto idx = SvtiIndex::build(testworld::random_store(rng, 80, 5, 60), {3, 6}, 8);
  std::vector<SegmentRef> all;
  for (const auto& t : idx.store().trajectories()) {
    for (SegIndex u = 1; u <= t.segment_count(); ++u) all.push_back(t.segment(u));
  }
  CHECK(idx.candidate_segments({0, 0}, kInf).size() == all.size());

  // r = 0 from inside an MBR returns that segment
  const SegmentRef& some = all[all.size() / 2];
  auto hit = idx.candidate_segments(some.mbr.center(), 0.0);
  CHECK(std::find(hit.begin(), hit.end(), some) != hit.end());

  std::uniform_real_distribution<double> u(-100, 1100);
  std::uniform_real_distribution<double> ur(0, 80);
  for (int i = 0; i < 200; ++i) {
    const PlanarPoint p{u(rng), u(rng)};
    const double r = ur(rng);
    std::vector<SegmentRef> want;
    for (const auto& s : all) {
      if (mindist_point_mbr(p, s.mbr) <= r) want.push_back(s);
    }
    CHECK(idx.candidate_segments(p, r) == want);
    // no false dismissals at the point level
    for (const auto& t : idx.store().trajectories()) {
      for (PointIndex k = 1; k <= t.size(); ++k) {
        if (oracle::dist(p, t.at(k)) > r) continue;
        const SegmentRef s = t.segment(t.segment_of(k));
        CHECK(std::find(want.begin(), want.end(), s) != want.end());
      }
    }
  }
}

TEST_CASE("range query worked cases") {
  TrajectoryStore s;
  s.add(Trajectory(1, {{0.5, 0}, {3, 3}}));
  s.add(Trajectory(2, {{2, 0}, {4, 4}}));
  auto idx = SvtiIndex::build(std::move(s), {1, 2}, 4);
  auto res = idx.range_query({0, 0}, 1.0);
  REQUIRE(res.hits.size() == 1);
  CHECK(res.hits[0].traj_id == 1);
  CHECK(res.hits[0].x == 1);

  auto all = idx.range_query({0, 0}, 1e6);
  CHECK(all.hits.size() == 2);

  TrajectoryStore ex;
  ex.add(Trajectory(1, testworld::example_t1()));
  ex.add(Trajectory(2, testworld::shifted(testworld::example_t1(), 100, 100)));
  auto exi = SvtiIndex::build(std::move(ex), {2, 3}, 4);
  auto r5 = exi.range_query({6, 3}, 5.0);
  REQUIRE(r5.hits.size() == 1);
  CHECK(r5.hits[0].traj_id == 1);
  CHECK(r5.hits[0].x == 3);
  CHECK(r5.hits[0].distance == doctest::Approx(1.0));
  CHECK(exi.store().get(1).segment_of(3) == r5.hits[0].z);
}

TEST_CASE("pivotal ties go to the smallest index") {
  TrajectoryStore s;
  s.add(Trajectory(1, {{5, 5}, {1, 0}, {7, 7}, {8, 8}, {-1, 0}, {9, 9}}));
  auto idx = SvtiIndex::build(std::move(s), {2, 2}, 4);
  auto res = idx.range_query({0, 0}, 2.0);
  REQUIRE(res.hits.size() == 1);
  CHECK(res.hits[0].x == 2);
}

TEST_CASE("range query matches a linear scan") {
  std::mt19937_64 rng(41);
  auto idx = SvtiIndex::build(testworld::random_store(rng, 300, 1, 120), {5, 9});
  std::uniform_real_distribution<double> u(-100, 1100);
  std::uniform_real_distribution<double> ur(0, 200);
  for (int i = 0; i < 200; ++i) {
    const PlanarPoint p{u(rng), u(rng)};
    const double r = ur(rng);
    check_same_hits(idx.range_query(p, r).hits, scan_range(idx.store(), p, r),
                    idx.store());
  }
}

TEST_CASE("candidate rate reaches its target") {
  std::mt19937_64 rng(43);
  auto idx = SvtiIndex::build(testworld::random_store(rng, 200, 20, 60), {5, 9});
  std::uniform_real_distribution<double> u(0, 1000);
  for (int i = 0; i < 50; ++i) {
    const PlanarPoint p{u(rng), u(rng)};
    for (std::size_t k : {1u, 3u, 10u}) {
      const QueryConfig q = QueryConfig::rate(2.5, k);
      const std::size_t target = static_cast<std::size_t>(std::ceil(2.5 * k));
      auto res = idx.range_query(p, q);
      CHECK(res.hits.size() >= std::min<std::size_t>(target, 200));
      check_same_hits(res.hits, scan_range(idx.store(), p, res.radius), idx.store());
      CHECK(idx.resolve_radius(p, q) == res.radius);
    }
  }
  // more than the data holds: everything comes back
  auto everything = idx.range_query({500, 500}, QueryConfig::rate(100, 50));
  CHECK(everything.hits.size() == 200);
}

TEST_CASE("query config validation") {
  CHECK_THROWS_AS(QueryConfig::absolute(1.0, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(QueryConfig::absolute(-1.0, 3).validate(), std::invalid_argument);
  CHECK_THROWS_AS(QueryConfig::rate(0.5, 3).validate(), std::invalid_argument);
  CHECK_NOTHROW(QueryConfig::rate(1.0, 3).validate());
}

}  // TEST_SUITE

TEST_SUITE("persistence") {

TEST_CASE("index round trip answers identically") {
  std::mt19937_64 rng(51);
  TrajectoryStore store = testworld::random_store(rng, 100, 5, 90);
  store.set_projection({10.5, 56.0, 6371000});
  auto idx = SvtiIndex::build(std::move(store), {4, 8}, 6);
  TempDir dir;
  save_index(idx, dir / "a.svti");
  auto back = load_index(dir / "a.svti");
  CHECK(back.entry_count() == idx.entry_count());
  CHECK(back.node_capacity() == 6);
  CHECK(back.segmentation().l_min == 4);
  CHECK(back.segmentation().l_max == 8);
  CHECK(back.store().projection() == idx.store().projection());
  CHECK(back.validate().empty());
  std::uniform_real_distribution<double> u(-100, 1100);
  std::uniform_real_distribution<double> ur(0, 150);
  for (int i = 0; i < 50; ++i) {
    const PlanarPoint p{u(rng), u(rng)};
    const double r = ur(rng);
    CHECK(back.range_query(p, r).hits == idx.range_query(p, r).hits);
  }
  // saving the loaded index reproduces the file
  save_index(back, dir / "b.svti");
  std::ifstream a(dir / "a.svti", std::ios::binary), b(dir / "b.svti", std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

LoadError::Kind load_kind(const std::filesystem::path& p) {
  try {
    load_index(p);
  } catch (const LoadError& e) {
    return e.kind();
  }
  FAIL("load did not fail");
  return LoadError::Kind::kFormat;
}

}  // namespace

TEST_CASE("load errors are distinct") {
  std::mt19937_64 rng(53);
  auto idx = SvtiIndex::build(testworld::random_store(rng, 10, 5, 20), {3, 5});
  TempDir dir;
  save_index(idx, dir / "ok.svti");
  const std::string good = slurp(dir / "ok.svti");
  REQUIRE(good.size() > 20);
  CHECK(good.substr(0, 4) == "SVTI");

  spit(dir / "empty", "");
  CHECK(load_kind(dir / "empty") == LoadError::Kind::kFormat);

  std::string magic = good;
  magic[0] = 'X';
  spit(dir / "magic", magic);
  CHECK(load_kind(dir / "magic") == LoadError::Kind::kVersion);

  std::string version = good;
  version[4] = 2;
  spit(dir / "version", version);
  CHECK(load_kind(dir / "version") == LoadError::Kind::kVersion);

  spit(dir / "short", good.substr(0, good.size() - 10));
  CHECK(load_kind(dir / "short") == LoadError::Kind::kTruncated);
  spit(dir / "header", good.substr(0, 8));
  CHECK(load_kind(dir / "header") == LoadError::Kind::kTruncated);

  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x40;
  spit(dir / "crc", flipped);
  CHECK(load_kind(dir / "crc") == LoadError::Kind::kChecksum);

  spit(dir / "trail", good + "xx");
  CHECK(load_kind(dir / "trail") == LoadError::Kind::kFormat);

  CHECK_THROWS(load_index(dir / "missing.svti"));
}

TEST_CASE("store round trip and determinism") {
  std::mt19937_64 rng(59);
  TrajectoryStore store = testworld::random_store(rng, 30, 1, 40);
  store.set_projection({-70.1, 41.3, 6371000});
  TempDir dir;
  save_store(store, dir / "s.bin");
  TrajectoryStore back = load_store(dir / "s.bin");
  CHECK(serialize_store(back) == serialize_store(store));
  CHECK(back.projection() == store.projection());
  REQUIRE(back.size() == store.size());
  for (const auto& t : store.trajectories()) {
    const auto& u = back.get(t.id());
    CHECK(std::equal(t.points().begin(), t.points().end(), u.points().begin(),
                     u.points().end()));
  }
  // a store file is not an index file
  CHECK_THROWS_AS(load_index(dir / "s.bin"), LoadError);
}

}  // TEST_SUITE
