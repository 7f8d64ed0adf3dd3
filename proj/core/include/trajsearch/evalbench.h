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

#ifndef TRAJSEARCH_EVALBENCH_H_
#define TRAJSEARCH_EVALBENCH_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "trajsearch/csts.h"
#include "trajsearch/geometry.h"
#include "trajsearch/model.h"
#include "trajsearch/otrd.h"
#include "trajsearch/svti.h"

namespace trajsearch {

struct HitInput {
  PlanarPoint future_point;
  std::size_t k = 1;
  std::vector<TrajId> result_ids;
};

/// Owners of the k historical points nearest to `p`, ties by
/// (distance, traj_id, point index). Sorted ascending, no duplicates.
std::vector<TrajId> nearest_point_owners(const TrajectoryStore& store,
                                         const PlanarPoint& p, std::size_t k);

/// |owners of the k nearest points ∩ result_ids| / k. Throws
/// std::invalid_argument on an empty store or k == 0.
double hit_rate(const TrajectoryStore& store, const HitInput& input);

/// Exact OTRD for every trajectory whose nearest point lies within the
/// absolute radius of `query`, ascending, truncated to k. Candidate-rate
/// queries are rejected with std::invalid_argument.
std::vector<RankedResult> brute_force_topk(const TrajectoryStore& store,
                                           const MovingObjectState& object,
                                           const OtrdParams& params,
                                           const QueryConfig& query);

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_traj = 1000;
  std::size_t held_out = 0;     // extra trajectories kept out of the store
  std::size_t min_len = 50;
  std::size_t max_len = 200;
  std::size_t n_ports = 12;
  std::size_t n_lanes = 20;
  double extent = 50000.0;      // meters, square side
  double step = 120.0;          // mean metres per fix
  double heading_noise = 0.25;  // radians per step
  double attraction = 0.15;     // pull toward the lane end per step
  double port_spread = 800.0;   // start offset around the port

  void validate() const;
};

struct SynthWorld {
  TrajectoryStore store;               // ids 0..n_traj-1
  std::vector<Trajectory> held_out;    // ids n_traj..
};

/// Correlated random walks between random ports; deterministic per seed.
SynthWorld synth_world(const SynthConfig& cfg);

/// One continuous query: initial history, destination, future positions.
struct QueryStream {
  TrajId source = 0;
  std::vector<PlanarPoint> history;
  PlanarPoint destination;
  std::vector<PlanarPoint> stream;
};

/// Cuts queries out of held-out trajectories: first l_q points are the
/// history, the last point is the destination, the following
/// timestamps + 1 points are the stream (the extra point is the future
/// position for the final hit-rate check). Trajectories that are too short
/// are skipped; selection order is a seeded shuffle.
std::vector<QueryStream> sample_queries(const std::vector<Trajectory>& pool,
                                        std::size_t l_q,
                                        std::size_t timestamps,
                                        std::size_t count, std::uint64_t seed);

struct QueryMetrics {
  std::size_t steps = 0;
  double mean_step_us = 0.0;   // min over repetitions of the per-step mean
  double hit_rate = 0.0;       // mean over timestamps
  double mean_candidates = 0.0;
  double mean_radius = 0.0;
  OtrdCounters counters;       // totals of one repetition
  std::vector<std::vector<RankedResult>> results;  // per timestamp
};

/// Replays `q` through a fresh session per repetition. Only step() is timed.
QueryMetrics evaluate_query(const SvtiIndex& index, const QueryStream& q,
                            const OtrdParams& params, const QueryConfig& query,
                            const Strategies& strategies,
                            std::size_t timestamps, std::size_t repetitions,
                            bool keep_results = false);

struct SweepConfig {
  std::vector<double> data_fraction{1.0};
  std::vector<std::size_t> l_q{10};
  std::vector<double> rate{15.0};
  std::vector<std::size_t> k{50};
  std::vector<double> theta{0.5};
  std::vector<double> alpha{0.5};
  std::vector<std::size_t> g{1};
  std::vector<std::size_t> l_min{30};
  std::vector<std::size_t> l_max{50};
  std::vector<Strategies> strategies{Strategies::all()};
  std::size_t repetitions = 1;
  std::size_t timestamps = 20;
  std::size_t queries = 10;
  std::size_t node_capacity = SvtiIndex::kDefaultNodeCapacity;
  std::uint64_t seed = 42;
  std::size_t threads = 1;

  /// Throws std::invalid_argument on empty grids or out-of-range values.
  void validate() const;
  std::size_t point_count() const;
};

/// key = value lines, '#' comments, comma-separated grids. Keys: fraction,
/// lq, r, k, theta, alpha, g, lmin, lmax, strategies (';'-separated masks),
/// repetitions, timestamps, queries, node_capacity, seed, threads.
SweepConfig parse_sweep_config(std::istream& in);

struct SweepRow {
  std::size_t point = 0;
  double data_fraction = 1.0;
  std::size_t l_q = 0, k = 0, g = 1, l_min = 0, l_max = 0;
  double rate = 0.0, theta = 0.0, alpha = 0.0;
  std::string strategies;
  std::size_t query = 0;
  TrajId source = 0;
  std::size_t segments = 0;
  QueryMetrics metrics;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<double> build_ms;  // one per distinct (fraction, l_min, l_max)
};

/// Runs every grid point against queries sampled from `pool` (one sample
/// per l_q value, seeded by cfg.seed). The first ceil(fraction * n)
/// trajectories of `base` (by id) are indexed per data fraction.
SweepReport run_sweep(const TrajectoryStore& base,
                      const std::vector<Trajectory>& pool,
                      const SweepConfig& cfg);

/// CSV with a fixed column order; timing columns left empty when
/// omit_timing is set so reruns compare byte-for-byte.
void write_sweep_csv(std::ostream& out, const SweepReport& report,
                     bool omit_timing = false);

/// Per grid point averages as a JSON document.
void write_sweep_json(std::ostream& out, const SweepReport& report,
                      bool omit_timing = false);

/// 9-significant-digit rendering used by every report.
std::string format_g9(double v);

}  // namespace trajsearch

#endif  // TRAJSEARCH_EVALBENCH_H_
