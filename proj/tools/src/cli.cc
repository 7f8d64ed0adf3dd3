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

#include "cli.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "trajsearch/csts.h"
#include "trajsearch/evalbench.h"
#include "trajsearch/ingest.h"
#include "trajsearch/segmentation.h"
#include "trajsearch/svti.h"

namespace trajsearch::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigEntry {
  std::string key;
  std::string value;
};

// key = value lines; '#' starts a comment.
std::vector<ConfigEntry> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::vector<ConfigEntry> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(no) +
                       ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError("config line " + std::to_string(no) + ": empty key");
    }
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out.push_back({std::move(key), std::move(value)});
  }
  return out;
}

bool has_flag(const std::vector<std::string>& args, const std::string& name) {
  const std::string eq = name + "=";
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == name || a.rfind(eq, 0) == 0;
  });
}

bool truthy(const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(), ::tolower);
  if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
  if (l == "0" || l == "false" || l == "no" || l == "off") return false;
  throw UsageError("expected a boolean, got '" + v + "'");
}

// --- ingest ---------------------------------------------------------------

struct IngestOpts {
  std::vector<std::string> inputs;
  std::string schema = "noaa";
  double gap_split = 1800.0;
  std::size_t min_points = 40;
  double dedup_window = 0.0;
  std::size_t sort_memory = 8u << 20;
  std::string temp_dir;
  std::string out;
  std::string rejections;
};

int cmd_ingest(const IngestOpts& o, std::ostream& out, std::ostream& err) {
  ingest::IngestConfig cfg;
  try {
    cfg.schema = ingest::schema_by_name(o.schema);
  } catch (const ingest::ConfigError& e) {
    throw UsageError(e.what());
  }
  cfg.gap_split = o.gap_split;
  cfg.min_points = o.min_points;
  cfg.dedup_window = o.dedup_window;
  cfg.sort_memory_fixes = o.sort_memory;
  cfg.validate();

  const fs::path temp = o.temp_dir.empty() ? fs::temp_directory_path()
                                           : fs::path(o.temp_dir);
  ingest::ExternalFixSorter sorter(cfg.sort_memory_fixes, temp);

  const std::string rej_path =
      o.rejections.empty() ? o.out + ".rejections.csv" : o.rejections;
  std::ofstream rej(rej_path);
  if (!rej) throw IoError("cannot open " + rej_path + " for writing");
  rej << "file,line,reason\n";

  double sum_lon = 0.0, sum_lat = 0.0;
  std::size_t rows = 0, accepted = 0, rejected = 0;
  for (const auto& path : o.inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    ingest::ParseReport rep;
    try {
      rep = ingest::parse_ais_csv(in, cfg.schema, [&](const ingest::GpsFix& f) {
        sum_lon += f.lon;
        sum_lat += f.lat;
        sorter.add(f);
      });
    } catch (const ingest::ConfigError& e) {
      throw IoError(path + ": " + e.what());
    }
    rows += rep.rows;
    accepted += rep.accepted;
    rejected += rep.rejections.size();
    for (const auto& r : rep.rejections) {
      rej << path << ',' << r.line << ',' << ingest::to_string(r.reason) << '\n';
    }
    err << path << ": " << rep.rows << " rows, " << rep.rejections.size()
        << " rejected\n";
  }

  ProjectionRef proj;
  if (accepted > 0) {
    proj.ref_lon = sum_lon / static_cast<double>(accepted);
    proj.ref_lat = sum_lat / static_cast<double>(accepted);
  }
  ingest::BuildStats stats;
  TrajectoryStore store = ingest::build_trajectories(sorter, cfg, proj, &stats);
  save_store(store, o.out);

  out << "files," << o.inputs.size() << '\n'
      << "rows," << rows << '\n'
      << "accepted," << accepted << '\n'
      << "rejected," << rejected << '\n'
      << "deduplicated," << stats.deduplicated << '\n'
      << "dropped_short," << stats.dropped_short << '\n'
      << "trajectories," << store.size() << '\n'
      << "points," << store.point_count() << '\n'
      << "ref_lon," << format_g9(proj.ref_lon) << '\n'
      << "ref_lat," << format_g9(proj.ref_lat) << '\n';
  return kExitOk;
}

// --- synth ----------------------------------------------------------------

struct SynthOpts {
  SynthConfig cfg;
  std::string out;
  std::string held_out_out;
};

int cmd_synth(const SynthOpts& o, std::ostream& out, std::ostream&) {
  o.cfg.validate();
  if (o.cfg.held_out > 0 && o.held_out_out.empty()) {
    throw UsageError("--held-out needs --held-out-out");
  }
  SynthWorld w = synth_world(o.cfg);
  save_store(w.store, o.out);
  std::size_t held_points = 0;
  if (!o.held_out_out.empty()) {
    TrajectoryStore held(w.store.projection());
    for (auto& t : w.held_out) {
      held_points += t.size();
      held.add(std::move(t));
    }
    save_store(held, o.held_out_out);
  }
  out << "trajectories," << w.store.size() << '\n'
      << "points," << w.store.point_count() << '\n'
      << "held_out," << o.cfg.held_out << '\n'
      << "held_out_points," << held_points << '\n';
  return kExitOk;
}

// --- build ----------------------------------------------------------------

struct BuildOpts {
  std::string store;
  std::size_t l_min = 30;
  std::size_t l_max = 50;
  std::size_t node_capacity = SvtiIndex::kDefaultNodeCapacity;
  std::string out;
};

int cmd_build(const BuildOpts& o, std::ostream& out, std::ostream&) {
  const SegmentationConfig seg{o.l_min, o.l_max};
  try {
    seg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.node_capacity < 2) throw UsageError("--node-capacity must be >= 2");

  TrajectoryStore store = load_store(o.store);
  const std::size_t n_traj = store.size();
  const std::size_t n_pts = store.point_count();

  auto t0 = Clock::now();
  segment_store(store, seg);
  const double seg_ms = ms_since(t0);
  t0 = Clock::now();
  SvtiIndex index = SvtiIndex::build_segmented(std::move(store), seg, o.node_capacity);
  const double build_ms = ms_since(t0);

  save_index(index, o.out);
  out << "trajectories," << n_traj << '\n'
      << "points," << n_pts << '\n'
      << "segments," << index.entry_count() << '\n'
      << "segmentation_ms," << format_g9(seg_ms) << '\n'
      << "build_ms," << format_g9(build_ms) << '\n'
      << "index_bytes," << fs::file_size(o.out) << '\n'
      << "height," << index.height() << '\n'
      << "nodes," << index.node_count() << '\n';
  return kExitOk;
}

// --- query ----------------------------------------------------------------

struct QueryOpts {
  std::string index;
  std::string stream;
  std::size_t k = 50;
  std::optional<double> range;
  double candidate_rate = 15.0;
  double alpha = 0.5;
  double theta = 0.5;
  std::size_t granularity = 1;
  std::string strategies = "all";
  std::size_t observe = 0;
  bool lonlat = false;
  bool omit_timing = false;
};

bool parse_double(std::string_view s, double& v) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(v);
}

// Stream file: the first data line is the destination, every following
// line one position. "x,y" per line; blank lines and '#' comments skipped.
std::vector<PlanarPoint> read_stream(const std::string& path, bool lonlat,
                                     const ProjectionRef& proj) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<PlanarPoint> pts;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    double a = 0.0, b = 0.0;
    if (comma == std::string::npos ||
        !parse_double(std::string_view(line).substr(0, comma), a) ||
        !parse_double(std::string_view(line).substr(comma + 1), b)) {
      throw IoError(path + ": line " + std::to_string(no) +
                    ": expected two numbers 'x,y'");
    }
    if (lonlat) {
      try {
        pts.push_back(project(a, b, proj));
      } catch (const std::invalid_argument&) {
        throw IoError(path + ": line " + std::to_string(no) +
                      ": coordinate out of range");
      }
    } else {
      pts.push_back({a, b});
    }
  }
  if (pts.empty()) throw IoError(path + ": no destination line");
  return pts;
}

int cmd_query(const QueryOpts& o, std::ostream& out, std::ostream& err) {
  const QueryConfig qc = o.range ? QueryConfig::absolute(*o.range, o.k)
                                 : QueryConfig::rate(o.candidate_rate, o.k);
  const OtrdParams params{o.alpha, o.theta, o.granularity};
  Strategies strategies;
  try {
    qc.validate();
    params.validate();
    strategies = Strategies::parse(o.strategies);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const SvtiIndex index = load_index(o.index);
  const auto pts = read_stream(o.stream, o.lonlat, index.store().projection());
  QuerySession session = session_new(index, pts.front(), params, qc, strategies);

  out << "t,rank,traj_id,otrd,htd,ttd\n";
  double total_us = 0.0;
  std::size_t steps = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (i <= o.observe) {
      session.observe(pts[i]);
      continue;
    }
    const auto t0 = Clock::now();
    const auto results = session.step(pts[i]);
    total_us += std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    ++steps;
    const std::size_t t = session.object().c();
    for (std::size_t r = 0; r < results.size(); ++r) {
      const auto& b = results[r].breakdown;
      out << t << ',' << r + 1 << ',' << results[r].traj_id << ','
          << format_g9(b.otrd) << ',' << format_g9(b.htd) << ','
          << format_g9(b.ttd) << '\n';
    }
    err << "t=" << t << " candidates=" << session.last_stats().candidates
        << " radius=" << format_g9(session.last_stats().radius) << '\n';
  }
  out << "mean_step_us,";
  if (!o.omit_timing) out << format_g9(steps ? total_us / steps : 0.0);
  out << '\n';
  return kExitOk;
}

// --- bench ----------------------------------------------------------------

struct BenchOpts {
  std::string index;
  std::string sweep;
  std::string out;
  std::string pool;
  std::size_t threads = 0;  // 0: take the sweep file's value
  std::optional<std::uint64_t> seed;
  bool omit_timing = false;
};

int cmd_bench(const BenchOpts& o, std::ostream& out, std::ostream& err) {
  std::ifstream cfg_in(o.sweep);
  if (!cfg_in) throw IoError("cannot open " + o.sweep);
  SweepConfig cfg;
  try {
    cfg = parse_sweep_config(cfg_in);
    if (o.threads > 0) cfg.threads = o.threads;
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(o.sweep + ": " + e.what());
  }

  const SvtiIndex index = load_index(o.index);
  std::vector<Trajectory> pool;
  if (o.pool.empty()) {
    err << "no --pool given; sampling queries from the indexed trajectories\n";
    pool.assign(index.store().trajectories().begin(),
                index.store().trajectories().end());
  } else {
    const TrajectoryStore held = load_store(o.pool);
    pool.assign(held.trajectories().begin(), held.trajectories().end());
  }

  const SweepReport report = run_sweep(index.store(), pool, cfg);
  const std::string csv_path = o.out + ".csv";
  const std::string json_path = o.out + ".json";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot open " + csv_path + " for writing");
  write_sweep_csv(csv, report, o.omit_timing);
  std::ofstream json(json_path);
  if (!json) throw IoError("cannot open " + json_path + " for writing");
  write_sweep_json(json, report, o.omit_timing);
  if (!csv || !json) throw IoError("failed writing reports");

  out << "points," << cfg.point_count() << '\n'
      << "rows," << report.rows.size() << '\n'
      << "csv," << csv_path << '\n'
      << "json," << json_path << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Continuous similar-trajectory search over vessel tracks"};
  app.name("trajsearch");
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "key = value file; flags given on the command line win");

  // Boolean switches take no value; config values for them are booleans.
  std::set<std::string> switches;

  IngestOpts io;
  auto* ingest = app.add_subcommand("ingest", "AIS CSV files to a trajectory store");
  ingest->add_option("inputs", io.inputs, "CSV files")->required();
  ingest->add_option("--schema", io.schema, "noaa, dma or custom:mmsi=..,time=..,lat=..,lon=..[,format=iso|dma|epoch]")
      ->capture_default_str();
  ingest->add_option("--gap-split", io.gap_split, "split a vessel track at gaps above this many seconds")
      ->capture_default_str();
  ingest->add_option("--min-points", io.min_points, "drop trajectories shorter than this")
      ->capture_default_str();
  ingest->add_option("--dedup-window", io.dedup_window, "drop fixes within this many seconds of the previous one")
      ->capture_default_str();
  ingest->add_option("--sort-memory", io.sort_memory, "fixes held in memory before spilling a sorted run")
      ->capture_default_str();
  ingest->add_option("--temp-dir", io.temp_dir, "directory for spilled runs");
  ingest->add_option("--rejections", io.rejections, "rejection report (default <out>.rejections.csv)");
  ingest->add_option("--out", io.out, "store file")->required();

  SynthOpts so;
  auto* synth = app.add_subcommand("synth", "generate a synthetic trajectory store");
  synth->add_option("--seed", so.cfg.seed)->capture_default_str();
  synth->add_option("--n-traj", so.cfg.n_traj)->capture_default_str();
  synth->add_option("--held-out", so.cfg.held_out, "extra trajectories written to --held-out-out")
      ->capture_default_str();
  synth->add_option("--min-len", so.cfg.min_len)->capture_default_str();
  synth->add_option("--max-len", so.cfg.max_len)->capture_default_str();
  synth->add_option("--out", so.out, "store file")->required();
  synth->add_option("--held-out-out", so.held_out_out, "store file for held-out trajectories");

  BuildOpts bo;
  auto* build = app.add_subcommand("build", "segment a store and write an index");
  build->add_option("store", bo.store, "store file")->required();
  build->add_option("--lmin", bo.l_min, "minimum segment length")->capture_default_str();
  build->add_option("--lmax", bo.l_max, "maximum segment length")->capture_default_str();
  build->add_option("--node-capacity", bo.node_capacity, "R-tree fan-out")->capture_default_str();
  build->add_option("--out", bo.out, "index file")->required();

  QueryOpts qo;
  double range_value = 0.0;
  auto* query = app.add_subcommand("query", "replay a query stream against an index");
  query->add_option("--index", qo.index, "index file")->required();
  query->add_option("--stream", qo.stream, "destination line, then one position per line")->required();
  query->add_option("--k", qo.k)->capture_default_str();
  auto* range_opt = query->add_option("--range", range_value, "absolute search radius");
  auto* rate_opt = query->add_option("--candidate-rate", qo.candidate_rate, "candidate trajectories per result")
                       ->capture_default_str();
  range_opt->excludes(rate_opt);
  query->add_option("--alpha", qo.alpha)->capture_default_str();
  query->add_option("--theta", qo.theta)->capture_default_str();
  query->add_option("--granularity", qo.granularity, "keep every g-th history point of a candidate")
      ->capture_default_str();
  query->add_option("--strategies", qo.strategies, "all, none or s1,s2,s3")->capture_default_str();
  query->add_option("--observe", qo.observe, "leading positions appended without searching")
      ->capture_default_str();
  query->add_flag("--lonlat", qo.lonlat, "stream holds lon,lat in degrees");
  query->add_flag("--omit-timing", qo.omit_timing, "leave the latency value empty");
  switches.insert("lonlat");
  switches.insert("omit-timing");

  BenchOpts bno;
  std::uint64_t seed_value = 0;
  auto* bench = app.add_subcommand("bench", "run a parameter sweep");
  bench->add_option("--index", bno.index, "index file (its store is the data set)")->required();
  bench->add_option("--sweep", bno.sweep, "sweep config file")->required();
  bench->add_option("--out", bno.out, "report prefix; writes <out>.csv and <out>.json")->required();
  bench->add_option("--pool", bno.pool, "store of held-out trajectories to cut queries from");
  bench->add_option("--threads", bno.threads, "worker threads for sweep cells");
  auto* seed_opt = bench->add_option("--seed", seed_value, "query sampling seed");
  bench->add_flag("--omit-timing", bno.omit_timing, "leave timing columns empty");

  // Pull --config out first and splice its entries in behind the
  // subcommand unless the command line already sets them.
  std::vector<std::string> args = raw_args;
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        config_path = args[i + 1];
        args.erase(args.begin() + i, args.begin() + i + 2);
        break;
      }
      if (args[i].rfind("--config=", 0) == 0) {
        config_path = args[i].substr(9);
        args.erase(args.begin() + i);
        break;
      }
    }
    if (!config_path.empty()) {
      const auto entries = read_config(config_path);
      auto sub_pos = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
        return a == "ingest" || a == "synth" || a == "build" || a == "query" || a == "bench";
      });
      CLI::App* sub = sub_pos == args.end() ? nullptr : app.get_subcommand(*sub_pos);
      std::vector<std::string> extra;
      for (const auto& e : entries) {
        bool known = false;
        for (auto* s : {ingest, synth, build, query, bench}) {
          if (s->get_option_no_throw("--" + e.key) != nullptr) known = true;
        }
        if (!known) throw UsageError("config: unknown key '" + e.key + "'");
        if (sub == nullptr || sub->get_option_no_throw("--" + e.key) == nullptr) continue;
        const std::string flag = "--" + e.key;
        if (has_flag(args, flag)) continue;
        if (sub == query && ((e.key == "range" && has_flag(args, "--candidate-rate")) ||
                             (e.key == "candidate-rate" && has_flag(args, "--range")))) {
          continue;
        }
        if (switches.count(e.key)) {
          if (truthy(e.value)) extra.push_back(flag);
        } else {
          extra.push_back(flag);
          extra.push_back(e.value);
        }
      }
      if (sub_pos != args.end()) args.insert(sub_pos + 1, extra.begin(), extra.end());
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == ingest) return cmd_ingest(io, out, err);
    if (active == synth) return cmd_synth(so, out, err);
    if (active == build) return cmd_build(bo, out, err);
    if (active == query) {
      if (range_opt->count() > 0) qo.range = range_value;
      return cmd_query(qo, out, err);
    }
    if (seed_opt->count() > 0) bno.seed = seed_value;
    return cmd_bench(bno, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << active->help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n" << active->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace trajsearch::cli
