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

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "doctest.h"
#include "support/world.h"
#include "trajsearch/svti.h"

using namespace trajsearch;
using testworld::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(s);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  return out;
}

// "key,value" lines to a map.
std::map<std::string, std::string> kv(const std::string& s) {
  std::map<std::string, std::string> m;
  for (const auto& l : lines_of(s)) {
    const auto c = l.find(',');
    if (c != std::string::npos) m[l.substr(0, c)] = l.substr(c + 1);
  }
  return m;
}

// T1 from the worked example plus two far-away copies.
void write_example(const TempDir& dir) {
  TrajectoryStore s;
  s.add(Trajectory(1, testworld::example_t1()));
  s.add(Trajectory(2, testworld::shifted(testworld::example_t1(), 40, 0)));
  s.add(Trajectory(3, testworld::shifted(testworld::example_t1(), 0, 40)));
  save_store(s, dir / "store.bin");
  write_file(dir / "stream.txt",
             "# destination, then positions\n9,5\n2,1\n4,2\n5,2\n6,3\n");
}

std::vector<std::string> query_args(const TempDir& dir, const std::string& strategies) {
  return {"query", "--index", (dir / "index.bin").string(), "--stream",
          (dir / "stream.txt").string(), "--range", "1000", "--k", "3",
          "--alpha", "0.9", "--theta", "0.9", "--strategies", strategies};
}

const char* kNoaa =
    "MMSI,BaseDateTime,LAT,LON,SOG,COG\n"
    "111,2023-01-01T00:00:00,56.10,10.20,1,1\n"
    "111,2023-01-01T00:01:00,56.11,10.21,1,1\n"
    "111,2023-01-01T00:02:00,56.12,10.22,1,1\n"
    "222,2023-01-01T00:00:00,99.00,10.20,1,1\n"
    "222,2023-01-01T00:00:30,56.00,10.00,1,1\n"
    "222,2023-01-01T00:01:30,56.01,10.01,1,1\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("worked example through build and query") {
  TempDir dir;
  write_example(dir);
  Run b = run({"build", (dir / "store.bin").string(), "--lmin", "2", "--lmax", "2",
               "--out", (dir / "index.bin").string()});
  REQUIRE(b.code == 0);
  CHECK(kv(b.out)["segments"] == "9");

  Run q = run(query_args(dir, "all"));
  REQUIRE(q.code == 0);
  auto ls = lines_of(q.out);
  CHECK(ls.front() == "t,rank,traj_id,otrd,htd,ttd");
  CHECK(ls.back().rfind("mean_step_us,", 0) == 0);
  bool found = false;
  for (const auto& l : ls) {
    auto f = split(l, ',');
    if (f.size() == 6 && f[0] == "4" && f[1] == "1") {
      found = true;
      CHECK(f[2] == "1");
      CHECK(std::stod(f[3]) == doctest::Approx(0.829 * std::sqrt(2.0)).epsilon(1e-6));
      CHECK(std::stod(f[4]) == doctest::Approx(0.81 * std::sqrt(2.0)).epsilon(1e-6));
      CHECK(std::stod(f[5]) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
      CHECK(f[3].size() <= 11);  // 9 significant digits
    }
  }
  CHECK(found);
  // k above the data set size lists every trajectory at every step
  CHECK(ls.size() == 1 + 4 * 3 + 1);
}

TEST_CASE("strategy masks give identical result lines") {
  TempDir dir;
  std::mt19937_64 rng(21);
  save_store(testworld::random_store(rng, 60, 40, 90, 500, 10), dir / "store.bin");
  std::string stream = "250,250\n";
  for (const auto& p : oracle::random_walk(rng, 12, 500, 10)) {
    stream += std::to_string(p.x) + "," + std::to_string(p.y) + "\n";
  }
  write_file(dir / "stream.txt", stream);
  REQUIRE(run({"build", (dir / "store.bin").string(), "--lmin", "5", "--lmax", "9",
               "--out", (dir / "index.bin").string()}).code == 0);

  auto args = [&](const std::string& s) {
    return std::vector<std::string>{"query", "--index", (dir / "index.bin").string(),
                                    "--stream", (dir / "stream.txt").string(),
                                    "--k", "5", "--candidate-rate", "3",
                                    "--strategies", s};
  };
  Run all = run(args("all"));
  Run none = run(args("none"));
  REQUIRE(all.code == 0);
  REQUIRE(none.code == 0);
  auto a = lines_of(all.out), n = lines_of(none.out);
  REQUIRE(a.size() == n.size());
  CHECK(a.size() == 1 + 12 * 5 + 1);
  for (std::size_t i = 0; i + 1 < a.size(); ++i) CHECK(a[i] == n[i]);
  CHECK(a.back().rfind("mean_step_us,", 0) == 0);
  CHECK(a.back().size() > std::string("mean_step_us,").size());

  auto omit = args("s1,s3");
  omit.push_back("--omit-timing");
  Run o = run(omit);
  CHECK(lines_of(o.out).back() == "mean_step_us,");
}

TEST_CASE("query input errors") {
  TempDir dir;
  write_example(dir);
  REQUIRE(run({"build", (dir / "store.bin").string(), "--lmin", "2", "--lmax", "3",
               "--out", (dir / "index.bin").string()}).code == 0);
  write_file(dir / "stream.txt", "9,5\n2,1\n4;2\n");
  Run bad = run(query_args(dir, "all"));
  CHECK(bad.code == cli::kExitIo);
  CHECK(bad.err.find("line 3") != std::string::npos);

  write_file(dir / "stream.txt", "9,5\n2,1\n");
  CHECK(run(query_args(dir, "s4")).code == cli::kExitUsage);
  auto both = query_args(dir, "all");
  both.push_back("--candidate-rate");
  both.push_back("3");
  CHECK(run(both).code == cli::kExitUsage);
  auto bad_theta = query_args(dir, "all");
  bad_theta[10] = "1.5";
  CHECK(run(bad_theta).code == cli::kExitUsage);
  auto missing = query_args(dir, "all");
  missing[2] = (dir / "nope.bin").string();
  CHECK(run(missing).code == cli::kExitIo);
}

TEST_CASE("ingest") {
  TempDir dir;
  write_file(dir / "a.csv", kNoaa);
  Run r = run({"ingest", (dir / "a.csv").string(), "--min-points", "2",
               "--out", (dir / "s.bin").string()});
  REQUIRE(r.code == 0);
  auto m = kv(r.out);
  CHECK(m["rows"] == "6");
  CHECK(m["accepted"] == "5");
  CHECK(m["rejected"] == "1");
  CHECK(m["trajectories"] == "2");
  CHECK(m["points"] == "5");
  const std::string rej = read_file(dir / "s.bin.rejections.csv");
  CHECK(rej.find((dir / "a.csv").string() + ",5,bad-coordinate") != std::string::npos);
  auto store = load_store(dir / "s.bin");
  CHECK(store.size() == 2);
  CHECK(store.projection().ref_lat == doctest::Approx((56.10 + 56.11 + 56.12 + 56.00 + 56.01) / 5));

  Run missing = run({"ingest", (dir / "zzz.csv").string(), "--out", (dir / "s.bin").string()});
  CHECK(missing.code == cli::kExitIo);
  CHECK_FALSE(missing.err.empty());

  Run schema = run({"ingest", (dir / "a.csv").string(), "--schema", "nmea",
                    "--out", (dir / "s.bin").string()});
  CHECK(schema.code == cli::kExitUsage);
  CHECK(schema.err.find("--schema") != std::string::npos);

  write_file(dir / "b.csv", "foo,bar\n1,2\n");
  CHECK(run({"ingest", (dir / "b.csv").string(), "--out", (dir / "s.bin").string()}).code ==
        cli::kExitIo);
}

TEST_CASE("build reports and errors") {
  TempDir dir;
  REQUIRE(run({"synth", "--n-traj", "200", "--min-len", "80", "--max-len", "160",
               "--out", (dir / "s.bin").string()}).code == 0);
  Run fine = run({"build", (dir / "s.bin").string(), "--lmin", "20", "--lmax", "40",
                  "--out", (dir / "i20.bin").string()});
  Run coarse = run({"build", (dir / "s.bin").string(), "--lmin", "40", "--lmax", "60",
                    "--out", (dir / "i40.bin").string()});
  REQUIRE(fine.code == 0);
  REQUIRE(coarse.code == 0);
  auto f = kv(fine.out), c = kv(coarse.out);
  for (const char* key : {"segmentation_ms", "build_ms", "segments", "index_bytes"}) {
    CHECK(f.count(key) == 1);
  }
  CHECK(std::stoul(c["segments"]) < std::stoul(f["segments"]));
  CHECK(std::stoul(f["index_bytes"]) == std::filesystem::file_size(dir / "i20.bin"));

  CHECK(run({"build", (dir / "none.bin").string(), "--out", (dir / "x.bin").string()}).code ==
        cli::kExitIo);
  CHECK(run({"build", (dir / "s.bin").string(), "--lmin", "9", "--lmax", "3",
             "--out", (dir / "x.bin").string()}).code == cli::kExitUsage);
}

TEST_CASE("bench") {
  TempDir dir;
  REQUIRE(run({"synth", "--n-traj", "150", "--held-out", "4", "--min-len", "60",
               "--max-len", "90", "--out", (dir / "s.bin").string(), "--held-out-out",
               (dir / "h.bin").string()}).code == 0);
  REQUIRE(run({"build", (dir / "s.bin").string(), "--out", (dir / "i.bin").string()}).code == 0);
  write_file(dir / "one.cfg", "k = 5\nqueries = 1\ntimestamps = 4\n");
  auto args = [&](const std::string& cfg, const std::string& out) {
    return std::vector<std::string>{"bench", "--index", (dir / "i.bin").string(), "--sweep",
                                    (dir / cfg).string(), "--pool", (dir / "h.bin").string(),
                                    "--out", (dir / out).string(), "--omit-timing"};
  };
  Run one = run(args("one.cfg", "r1"));
  REQUIRE(one.code == 0);
  CHECK(lines_of(read_file(dir / "r1.csv")).size() == 2);
  CHECK(std::filesystem::exists(dir / "r1.json"));

  write_file(dir / "two.cfg", "k = 5, 10\nqueries = 2\ntimestamps = 4\nstrategies = all; none\n");
  REQUIRE(run(args("two.cfg", "a")).code == 0);
  REQUIRE(run(args("two.cfg", "b")).code == 0);
  CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
  CHECK(lines_of(read_file(dir / "a.csv")).size() == 1 + 4 * 2);

  write_file(dir / "bad.cfg", "k = 0\n");
  CHECK(run(args("bad.cfg", "c")).code == cli::kExitUsage);
  auto missing = args("one.cfg", "d");
  missing[2] = (dir / "nope.bin").string();
  CHECK(run(missing).code == cli::kExitIo);
}

TEST_CASE("config file with flag overrides") {
  TempDir dir;
  write_example(dir);
  REQUIRE(run({"build", (dir / "store.bin").string(), "--lmin", "2", "--lmax", "3",
               "--out", (dir / "index.bin").string()}).code == 0);
  write_file(dir / "cfg.txt", "# shared settings\nk = 1\nalpha = 0.9\ntheta = 0.9\n"
                              "range = 1000\nlmin = 2\nomit-timing = true\n");
  Run q = run({"--config", (dir / "cfg.txt").string(), "query", "--index",
               (dir / "index.bin").string(), "--stream", (dir / "stream.txt").string()});
  REQUIRE(q.code == 0);
  auto ls = lines_of(q.out);
  CHECK(ls.size() == 1 + 4 + 1);
  CHECK(ls.back() == "mean_step_us,");
  CHECK(ls[4].rfind("4,1,1,1.1723830", 0) == 0);

  Run over = run({"query", "--config", (dir / "cfg.txt").string(), "--index",
                  (dir / "index.bin").string(), "--stream", (dir / "stream.txt").string(),
                  "--k", "2"});
  REQUIRE(over.code == 0);
  CHECK(lines_of(over.out).size() == 1 + 8 + 1);

  // a command-line radius wins over the file's, and a rate replaces it
  Run rate = run({"--config", (dir / "cfg.txt").string(), "query", "--index",
                  (dir / "index.bin").string(), "--stream", (dir / "stream.txt").string(),
                  "--candidate-rate", "1"});
  CHECK(rate.code == 0);

  write_file(dir / "bad.txt", "kk = 3\n");
  CHECK(run({"--config", (dir / "bad.txt").string(), "build", (dir / "store.bin").string(),
             "--out", (dir / "x.bin").string()}).code == cli::kExitUsage);
  write_file(dir / "bad2.txt", "just text\n");
  CHECK(run({"--config", (dir / "bad2.txt").string(), "build", (dir / "store.bin").string(),
             "--out", (dir / "x.bin").string()}).code == cli::kExitUsage);
  CHECK(run({"--config", (dir / "absent.txt").string(), "build", (dir / "store.bin").string(),
             "--out", (dir / "x.bin").string()}).code == cli::kExitIo);
}

TEST_CASE("usage") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  Run h = run({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("query") != std::string::npos);
  CHECK(run({"query"}).code == cli::kExitUsage);
}

}  // TEST_SUITE
