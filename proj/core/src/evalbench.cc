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

#include "trajsearch/evalbench.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <memory>
#include <map>
#include <numbers>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace trajsearch {

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace {

struct PointKey {
  double d;
  TrajId id;
  PointIndex idx;
  bool operator<(const PointKey& o) const {
    return std::tie(d, id, idx) < std::tie(o.d, o.id, o.idx);
  }
};

}  // namespace

std::vector<TrajId> nearest_point_owners(const TrajectoryStore& store,
                                         const PlanarPoint& p, std::size_t k) {
  // max-heap of the k best keys seen so far
  std::priority_queue<PointKey> best;
  for (const Trajectory& t : store.trajectories()) {
    const auto pts = t.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      PointKey key{euclid(p, pts[i]), t.id(), i + 1};
      if (best.size() < k) {
        best.push(key);
      } else if (key < best.top()) {
        best.pop();
        best.push(key);
      }
    }
  }
  std::vector<TrajId> owners;
  while (!best.empty()) {
    owners.push_back(best.top().id);
    best.pop();
  }
  std::sort(owners.begin(), owners.end());
  owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
  return owners;
}

double hit_rate(const TrajectoryStore& store, const HitInput& input) {
  if (store.empty()) throw std::invalid_argument("hit_rate: empty store");
  if (input.k == 0) throw std::invalid_argument("hit_rate: k must be >= 1");
  const auto owners = nearest_point_owners(store, input.future_point, input.k);
  std::vector<TrajId> ids = input.result_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::size_t hits = 0;
  for (TrajId id : ids) {
    if (std::binary_search(owners.begin(), owners.end(), id)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(input.k);
}

std::vector<RankedResult> brute_force_topk(const TrajectoryStore& store,
                                           const MovingObjectState& object,
                                           const OtrdParams& params,
                                           const QueryConfig& query) {
  query.validate();
  params.validate();
  if (query.mode != QueryConfig::Mode::kAbsolute) {
    throw std::invalid_argument("brute_force_topk needs an absolute radius");
  }
  return reference_topk(store, object, params, query.radius, query.k);
}

void SynthConfig::validate() const {
  if (min_len < 1 || min_len > max_len) {
    throw std::invalid_argument("synth: need 1 <= min_len <= max_len");
  }
  if (n_ports < 2) throw std::invalid_argument("synth: need >= 2 ports");
  if (n_lanes < 1) throw std::invalid_argument("synth: need >= 1 lane");
  if (!(extent > 0.0) || !(step > 0.0)) {
    throw std::invalid_argument("synth: extent and step must be > 0");
  }
  if (heading_noise < 0.0 || port_spread < 0.0 || attraction < 0.0 ||
      attraction > 1.0) {
    throw std::invalid_argument("synth: bad motion parameters");
  }
}

SynthWorld synth_world(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> coord(0.0, cfg.extent);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  auto uniform_index = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  std::vector<PlanarPoint> ports(cfg.n_ports);
  for (auto& p : ports) p = {coord(rng), coord(rng)};
  std::vector<std::pair<std::size_t, std::size_t>> lanes(cfg.n_lanes);
  for (auto& lane : lanes) {
    lane.first = uniform_index(ports.size());
    do {
      lane.second = uniform_index(ports.size());
    } while (lane.second == lane.first);
  }

  const std::size_t total = cfg.n_traj + cfg.held_out;
  std::vector<std::vector<PlanarPoint>> walks(total);
  for (auto& walk : walks) {
    auto [from, to] = lanes[uniform_index(lanes.size())];
    if (rng() & 1) std::swap(from, to);
    const std::size_t len = std::uniform_int_distribution<std::size_t>(
        cfg.min_len, cfg.max_len)(rng);
    const double speed =
        cfg.step * std::uniform_real_distribution<double>(0.7, 1.3)(rng);
    PlanarPoint pos{ports[from].x + cfg.port_spread * unit_normal(rng),
                    ports[from].y + cfg.port_spread * unit_normal(rng)};
    PlanarPoint target = ports[to];
    double heading = std::atan2(target.y - pos.y, target.x - pos.x) +
                     0.3 * unit_normal(rng);
    walk.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
      walk.push_back(pos);
      if (euclid(pos, target) < 2.0 * speed) {
        // turn around at the far port
        std::swap(from, to);
        target = ports[to];
      }
      const double want = std::atan2(target.y - pos.y, target.x - pos.x);
      double diff = want - heading;
      diff = std::remainder(diff, 2.0 * std::numbers::pi);
      heading += cfg.attraction * diff + cfg.heading_noise * unit_normal(rng);
      const double v = speed * std::max(0.2, 1.0 + 0.1 * unit_normal(rng));
      pos.x += v * std::cos(heading);
      pos.y += v * std::sin(heading);
    }
  }

  // seeded choice of which walks are held out
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> held(total, false);
  for (std::size_t i = 0; i < cfg.held_out; ++i) held[order[i]] = true;

  SynthWorld world;
  TrajId next_store = 0;
  TrajId next_held = cfg.n_traj;
  for (std::size_t i = 0; i < total; ++i) {
    if (held[i]) {
      world.held_out.emplace_back(next_held++, std::move(walks[i]));
    } else {
      world.store.add(Trajectory(next_store++, std::move(walks[i])));
    }
  }
  return world;
}

std::vector<QueryStream> sample_queries(const std::vector<Trajectory>& pool,
                                        std::size_t l_q,
                                        std::size_t timestamps,
                                        std::size_t count, std::uint64_t seed) {
  if (l_q < 1) throw std::invalid_argument("sample_queries: l_q must be >= 1");
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].size() >= l_q + timestamps + 1) usable.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(usable.begin(), usable.end(), rng);
  if (usable.size() > count) usable.resize(count);

  std::vector<QueryStream> out;
  for (std::size_t i : usable) {
    const auto pts = pool[i].points();
    QueryStream q;
    q.source = pool[i].id();
    q.history.assign(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(l_q));
    q.stream.assign(pts.begin() + static_cast<std::ptrdiff_t>(l_q),
                    pts.begin() + static_cast<std::ptrdiff_t>(l_q + timestamps + 1));
    q.destination = pts.back();
    out.push_back(std::move(q));
  }
  return out;
}

QueryMetrics evaluate_query(const SvtiIndex& index, const QueryStream& q,
                            const OtrdParams& params, const QueryConfig& query,
                            const Strategies& strategies,
                            std::size_t timestamps, std::size_t repetitions,
                            bool keep_results) {
  if (q.stream.size() < timestamps + 1) {
    throw std::invalid_argument("evaluate_query: stream shorter than timestamps + 1");
  }
  repetitions = std::max<std::size_t>(1, repetitions);
  QueryMetrics m;
  m.steps = timestamps;
  double best_us = std::numeric_limits<double>::infinity();
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    QuerySession session(index, q.destination, params, query, strategies);
    for (const auto& p : q.history) session.observe(p);
    double elapsed_us = 0.0;
    for (std::size_t i = 0; i < timestamps; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      auto res = session.step(q.stream[i]);
      const auto t1 = std::chrono::steady_clock::now();
      elapsed_us += std::chrono::duration<double, std::micro>(t1 - t0).count();
      if (rep != 0) continue;

      const StepStats& st = session.last_stats();
      m.mean_candidates += static_cast<double>(st.candidates);
      m.mean_radius += st.radius;
      if (!index.store().empty()) {
        HitInput in{q.stream[i + 1], query.k, {}};
        for (const auto& r : res) in.result_ids.push_back(r.traj_id);
        m.hit_rate += hit_rate(index.store(), in);
      }
      if (keep_results) m.results.push_back(std::move(res));
    }
    if (rep == 0) m.counters = session.total_counters();
    best_us = std::min(best_us, elapsed_us / static_cast<double>(std::max<std::size_t>(1, timestamps)));
  }
  if (timestamps > 0) {
    const double n = static_cast<double>(timestamps);
    m.mean_candidates /= n;
    m.mean_radius /= n;
    m.hit_rate /= n;
    m.mean_step_us = best_us;
  }
  return m;
}

void SweepConfig::validate() const {
  auto nonempty = [](bool empty, const char* name) {
    if (empty) throw std::invalid_argument(std::string("sweep grid '") + name + "' is empty");
  };
  nonempty(data_fraction.empty(), "fraction");
  nonempty(l_q.empty(), "lq");
  nonempty(rate.empty(), "r");
  nonempty(k.empty(), "k");
  nonempty(theta.empty(), "theta");
  nonempty(alpha.empty(), "alpha");
  nonempty(g.empty(), "g");
  nonempty(l_min.empty(), "lmin");
  nonempty(l_max.empty(), "lmax");
  nonempty(strategies.empty(), "strategies");
  for (double f : data_fraction) {
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  }
  for (auto v : l_q) {
    if (v < 1) throw std::invalid_argument("lq must be >= 1");
  }
  for (double r : rate) {
    if (!(r > 0.0)) throw std::invalid_argument("r must be > 0");
  }
  for (auto v : k) {
    if (v < 1) throw std::invalid_argument("k must be >= 1");
  }
  for (double th : theta) OtrdParams{0.5, th, 1}.validate();
  for (double a : alpha) OtrdParams{a, 0.5, 1}.validate();
  for (auto v : g) {
    if (v < 1) throw std::invalid_argument("g must be >= 1");
  }
  for (auto lo : l_min) {
    for (auto hi : l_max) SegmentationConfig{lo, hi}.validate();
  }
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (timestamps < 1) throw std::invalid_argument("timestamps must be >= 1");
  if (node_capacity < 4) throw std::invalid_argument("node_capacity must be >= 4");
}

std::size_t SweepConfig::point_count() const {
  return data_fraction.size() * l_q.size() * rate.size() * k.size() *
         theta.size() * alpha.size() * g.size() * l_min.size() *
         l_max.size() * strategies.size();
}

namespace {

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim_copy(item));
  return out;
}

template <typename T>
std::vector<T> parse_grid(const std::string& value, const std::string& where) {
  std::vector<T> out;
  for (const auto& item : split(value, ',')) {
    std::istringstream is(item);
    T v{};
    if (item.empty() || !(is >> v) || !is.eof()) {
      throw std::invalid_argument(where + ": bad value '" + item + "'");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (item.front() == '-') throw std::invalid_argument(where + ": negative value");
    }
    out.push_back(v);
  }
  return out;
}

template <typename T>
T parse_scalar(const std::string& value, const std::string& where) {
  auto grid = parse_grid<T>(value, where);
  if (grid.size() != 1) throw std::invalid_argument(where + ": expected one value");
  return grid.front();
}

}  // namespace

SweepConfig parse_sweep_config(std::istream& in) {
  SweepConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim_copy(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "sweep config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    const std::string key = trim_copy(line.substr(0, eq));
    const std::string value = trim_copy(line.substr(eq + 1));
    if (key == "fraction") {
      cfg.data_fraction = parse_grid<double>(value, where);
    } else if (key == "lq" || key == "l_q") {
      cfg.l_q = parse_grid<std::size_t>(value, where);
    } else if (key == "r" || key == "rate") {
      cfg.rate = parse_grid<double>(value, where);
    } else if (key == "k") {
      cfg.k = parse_grid<std::size_t>(value, where);
    } else if (key == "theta") {
      cfg.theta = parse_grid<double>(value, where);
    } else if (key == "alpha") {
      cfg.alpha = parse_grid<double>(value, where);
    } else if (key == "g") {
      cfg.g = parse_grid<std::size_t>(value, where);
    } else if (key == "lmin" || key == "l_min") {
      cfg.l_min = parse_grid<std::size_t>(value, where);
    } else if (key == "lmax" || key == "l_max") {
      cfg.l_max = parse_grid<std::size_t>(value, where);
    } else if (key == "strategies") {
      cfg.strategies.clear();
      for (const auto& item : split(value, ';')) {
        cfg.strategies.push_back(Strategies::parse(item));
      }
    } else if (key == "repetitions") {
      cfg.repetitions = parse_scalar<std::size_t>(value, where);
    } else if (key == "timestamps") {
      cfg.timestamps = parse_scalar<std::size_t>(value, where);
    } else if (key == "queries") {
      cfg.queries = parse_scalar<std::size_t>(value, where);
    } else if (key == "node_capacity") {
      cfg.node_capacity = parse_scalar<std::size_t>(value, where);
    } else if (key == "seed") {
      cfg.seed = parse_scalar<std::uint64_t>(value, where);
    } else if (key == "threads") {
      cfg.threads = parse_scalar<std::size_t>(value, where);
    } else {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

SweepReport run_sweep(const TrajectoryStore& base,
                      const std::vector<Trajectory>& pool,
                      const SweepConfig& cfg) {
  cfg.validate();

  // indices per (fraction, l_min, l_max)
  std::vector<TrajId> ids;
  for (const auto& t : base.trajectories()) ids.push_back(t.id());
  std::sort(ids.begin(), ids.end());

  SweepReport report;
  std::vector<std::unique_ptr<SvtiIndex>> indices;
  for (double f : cfg.data_fraction) {
    const auto take = static_cast<std::size_t>(
        std::ceil(f * static_cast<double>(ids.size())));
    for (auto lo : cfg.l_min) {
      for (auto hi : cfg.l_max) {
        TrajectoryStore sub(base.projection());
        for (std::size_t i = 0; i < take; ++i) {
          const Trajectory& t = base.get(ids[i]);
          sub.add(Trajectory(t.id(), std::vector<PlanarPoint>(
                                         t.points().begin(), t.points().end())));
        }
        const auto t0 = std::chrono::steady_clock::now();
        indices.push_back(std::make_unique<SvtiIndex>(
            SvtiIndex::build(std::move(sub), {lo, hi}, cfg.node_capacity)));
        const auto t1 = std::chrono::steady_clock::now();
        report.build_ms.push_back(
            std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
    }
  }

  std::map<std::size_t, std::vector<QueryStream>> queries;
  for (auto lq : cfg.l_q) {
    queries[lq] = sample_queries(pool, lq, cfg.timestamps, cfg.queries, cfg.seed);
  }

  struct Cell {
    std::size_t row;
    const SvtiIndex* index;
    const QueryStream* query;
    OtrdParams params;
    QueryConfig qcfg;
    Strategies strategies;
  };
  std::vector<Cell> cells;
  std::size_t point = 0;
  std::size_t group = 0;
  for (double f : cfg.data_fraction) {
    for (auto lo : cfg.l_min) {
      for (auto hi : cfg.l_max) {
        const SvtiIndex* index = indices[group++].get();
        for (auto lq : cfg.l_q) {
          for (double r : cfg.rate) {
            for (auto k : cfg.k) {
              for (double th : cfg.theta) {
                for (double a : cfg.alpha) {
                  for (auto g : cfg.g) {
                    for (const auto& s : cfg.strategies) {
                      const auto& qs = queries[lq];
                      for (std::size_t qi = 0; qi < qs.size(); ++qi) {
                        SweepRow row;
                        row.point = point;
                        row.data_fraction = f;
                        row.l_q = lq;
                        row.k = k;
                        row.g = g;
                        row.l_min = lo;
                        row.l_max = hi;
                        row.rate = r;
                        row.theta = th;
                        row.alpha = a;
                        row.strategies = s.to_string();
                        std::replace(row.strategies.begin(), row.strategies.end(), ',', '+');
                        row.query = qi;
                        row.source = qs[qi].source;
                        row.segments = index->entry_count();
                        cells.push_back({report.rows.size(), index, &qs[qi],
                                         OtrdParams{a, th, g},
                                         QueryConfig::rate(r, k), s});
                        report.rows.push_back(std::move(row));
                      }
                      ++point;
                    }
                  }
                }
              }
            }
          }
        }
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      report.rows[c.row].metrics =
          evaluate_query(*c.index, *c.query, c.params, c.qcfg, c.strategies,
                         cfg.timestamps, cfg.repetitions);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, cfg.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t i = 0; i < n_threads; ++i) pool_threads.emplace_back(worker);
    for (auto& th : pool_threads) th.join();
  }
  return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report,
                     bool omit_timing) {
  out << "point,fraction,lmin,lmax,lq,r,k,theta,alpha,g,strategies,query,"
         "source,segments,steps,mean_step_us,hit_rate,mean_candidates,"
         "mean_radius,segments_scanned,s1_skips,s2_prunes,s3_fast_paths,"
         "s3_rejected,full_computes\n";
  for (const auto& r : report.rows) {
    const auto& m = r.metrics;
    out << r.point << ',' << format_g9(r.data_fraction) << ',' << r.l_min
        << ',' << r.l_max << ',' << r.l_q << ',' << format_g9(r.rate) << ','
        << r.k << ',' << format_g9(r.theta) << ',' << format_g9(r.alpha) << ','
        << r.g << ',' << r.strategies << ',' << r.query << ',' << r.source
        << ',' << r.segments << ',' << m.steps << ','
        << (omit_timing ? "" : format_g9(m.mean_step_us)) << ','
        << format_g9(m.hit_rate) << ',' << format_g9(m.mean_candidates) << ','
        << format_g9(m.mean_radius) << ',' << m.counters.segments_scanned << ','
        << m.counters.s1_segment_skips << ',' << m.counters.s2_prunes() << ','
        << m.counters.s3_fast_paths() << ',' << m.counters.s3_case2_rejected
        << ',' << m.counters.full_computes << '\n';
  }
}

void write_sweep_json(std::ostream& out, const SweepReport& report,
                      bool omit_timing) {
  using nlohmann::json;
  json doc;
  doc["build_ms"] = omit_timing ? json::array() : json(report.build_ms);
  json points = json::array();
  std::size_t i = 0;
  while (i < report.rows.size()) {
    const SweepRow& first = report.rows[i];
    std::size_t j = i;
    double step_us = 0.0, hit = 0.0, cand = 0.0;
    OtrdCounters total;
    for (; j < report.rows.size() && report.rows[j].point == first.point; ++j) {
      step_us += report.rows[j].metrics.mean_step_us;
      hit += report.rows[j].metrics.hit_rate;
      cand += report.rows[j].metrics.mean_candidates;
      total += report.rows[j].metrics.counters;
    }
    const double n = static_cast<double>(j - i);
    json p;
    p["point"] = first.point;
    p["fraction"] = first.data_fraction;
    p["lmin"] = first.l_min;
    p["lmax"] = first.l_max;
    p["lq"] = first.l_q;
    p["r"] = first.rate;
    p["k"] = first.k;
    p["theta"] = first.theta;
    p["alpha"] = first.alpha;
    p["g"] = first.g;
    p["strategies"] = first.strategies;
    p["segments"] = first.segments;
    p["queries"] = j - i;
    if (!omit_timing) p["mean_step_us"] = step_us / n;
    p["hit_rate"] = hit / n;
    p["mean_candidates"] = cand / n;
    p["segments_scanned"] = total.segments_scanned;
    p["s1_skips"] = total.s1_segment_skips;
    p["s2_prunes"] = total.s2_prunes();
    p["s3_fast_paths"] = total.s3_fast_paths();
    p["s3_rejected"] = total.s3_case2_rejected;
    p["full_computes"] = total.full_computes;
    points.push_back(std::move(p));
    i = j;
  }
  doc["points"] = std::move(points);
  out << doc.dump(2) << '\n';
}

}  // namespace trajsearch
