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

#include "trajsearch/ingest.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <fstream>
#include <queue>
#include <sstream>
#include <unistd.h>

namespace trajsearch::ingest {

namespace {

std::string normalize_column(std::string_view s) {
  while (!s.empty() && (s.front() == '#' || std::isspace(static_cast<unsigned char>(s.front())) ||
                        s.front() == '\xEF' || s.front() == '\xBB' || s.front() == '\xBF')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Days since 1970-01-01 of a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

bool valid_date(std::int64_t y, int m, int d) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12 || d < 1) return false;
  const int limit = kDays[m - 1] + (m == 2 && leap(y) ? 1 : 0);
  return d <= limit;
}

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

// Accepts an optional fractional part and trailing 'Z' after the seconds.
bool time_suffix_ok(std::string_view s, std::size_t pos) {
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  if (pos < s.size() && s[pos] == 'Z') ++pos;
  return pos == s.size();
}

}  // namespace

ColumnMap dma_schema() {
  return {"mmsi", "timestamp", "latitude", "longitude", TimeFormat::kDma};
}

ColumnMap noaa_schema() {
  return {"mmsi", "basedatetime", "lat", "lon", TimeFormat::kIso};
}

ColumnMap schema_by_name(const std::string& name) {
  if (name == "dma" || name == "DMA") return dma_schema();
  if (name == "noaa" || name == "NOAA") return noaa_schema();
  const std::string prefix = "custom:";
  if (name.rfind(prefix, 0) != 0) {
    throw ConfigError("unknown schema '" + name +
                      "' (expected dma, noaa or custom:...)");
  }
  ColumnMap map;
  std::stringstream ss(name.substr(prefix.size()));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("bad custom schema item '" + item + "'");
    const std::string key = normalize_column(item.substr(0, eq));
    const std::string value = item.substr(eq + 1);
    if (key == "mmsi") {
      map.mmsi = normalize_column(value);
    } else if (key == "time") {
      map.time = normalize_column(value);
    } else if (key == "lat") {
      map.lat = normalize_column(value);
    } else if (key == "lon") {
      map.lon = normalize_column(value);
    } else if (key == "format") {
      if (value == "iso") {
        map.time_format = TimeFormat::kIso;
      } else if (value == "dma") {
        map.time_format = TimeFormat::kDma;
      } else if (value == "epoch") {
        map.time_format = TimeFormat::kEpoch;
      } else {
        throw ConfigError("unknown time format '" + value + "'");
      }
    } else {
      throw ConfigError("unknown custom schema key '" + key + "'");
    }
  }
  if (map.mmsi.empty() || map.time.empty() || map.lat.empty() || map.lon.empty()) {
    throw ConfigError("custom schema needs mmsi, time, lat and lon columns");
  }
  return map;
}

void IngestConfig::validate() const {
  if (!(gap_split > 0.0)) throw ConfigError("gap split must be > 0");
  if (min_points < 1) throw ConfigError("min points must be >= 1");
  if (!(dedup_window >= 0.0)) throw ConfigError("dedup window must be >= 0");
  if (sort_memory_fixes < 1) throw ConfigError("sort memory must be >= 1 fix");
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kBadCoordinate:
      return "bad-coordinate";
    case RejectReason::kBadTimestamp:
      return "bad-timestamp";
    case RejectReason::kMissingField:
      return "missing-field";
  }
  return "unknown";
}

bool parse_timestamp(const std::string& text, TimeFormat format,
                     std::int64_t& out) {
  const std::string_view s = trim(text);
  if (format == TimeFormat::kEpoch) return parse_number(s, out);

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  std::size_t time_pos = 0;
  if (format == TimeFormat::kIso) {
    if (!digits(s, 0, 4, y) || s.size() < 19 || s[4] != '-' ||
        !digits(s, 5, 2, mo) || s[7] != '-' || !digits(s, 8, 2, d) ||
        (s[10] != 'T' && s[10] != ' ')) {
      return false;
    }
    time_pos = 11;
  } else {
    if (s.size() < 19 || !digits(s, 0, 2, d) || s[2] != '/' ||
        !digits(s, 3, 2, mo) || s[5] != '/' || !digits(s, 6, 4, y) ||
        s[10] != ' ') {
      return false;
    }
    time_pos = 11;
  }
  if (!digits(s, time_pos, 2, h) || s[time_pos + 2] != ':' ||
      !digits(s, time_pos + 3, 2, mi) || s[time_pos + 5] != ':' ||
      !digits(s, time_pos + 6, 2, se) || !time_suffix_ok(s, time_pos + 8)) {
    return false;
  }
  if (!valid_date(y, mo, d) || h > 23 || mi > 59 || se > 60) return false;
  out = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
        h * 3600 + mi * 60 + se;
  return true;
}

ParseReport parse_ais_csv(std::istream& in, const ColumnMap& schema,
                          const std::function<void(const GpsFix&)>& sink) {
  ParseReport report;
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    header = split_csv(line);
    break;
  }
  if (header.empty()) throw ConfigError("input has no header row");

  auto column = [&](const std::string& name) -> std::size_t {
    const std::string want = normalize_column(name);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (normalize_column(header[i]) == want) return i;
    }
    throw ConfigError("header lacks required column '" + name + "'");
  };
  const std::size_t c_mmsi = column(schema.mmsi);
  const std::size_t c_time = column(schema.time);
  const std::size_t c_lat = column(schema.lat);
  const std::size_t c_lon = column(schema.lon);
  const std::size_t needed = std::max({c_mmsi, c_time, c_lat, c_lon}) + 1;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++report.rows;
    auto reject = [&](RejectReason r) { report.rejections.push_back({line_no, r}); };

    const auto fields = split_csv(line);
    if (fields.size() < needed || trim(fields[c_mmsi]).empty() ||
        trim(fields[c_time]).empty() || trim(fields[c_lat]).empty() ||
        trim(fields[c_lon]).empty()) {
      reject(RejectReason::kMissingField);
      continue;
    }
    GpsFix fix;
    if (!parse_number(fields[c_mmsi], fix.mmsi)) {
      reject(RejectReason::kMissingField);
      continue;
    }
    if (!parse_timestamp(fields[c_time], schema.time_format, fix.t)) {
      reject(RejectReason::kBadTimestamp);
      continue;
    }
    if (!parse_number(fields[c_lat], fix.lat) ||
        !parse_number(fields[c_lon], fix.lon) || !valid_lon_lat(fix.lon, fix.lat)) {
      reject(RejectReason::kBadCoordinate);
      continue;
    }
    ++report.accepted;
    sink(fix);
  }
  return report;
}

ParseReport parse_ais_csv(std::istream& in, const ColumnMap& schema,
                          std::vector<GpsFix>& fixes) {
  return parse_ais_csv(in, schema, [&](const GpsFix& f) { fixes.push_back(f); });
}

void write_rejections(std::ostream& out, const ParseReport& report) {
  for (const auto& r : report.rejections) {
    out << r.line << ',' << to_string(r.reason) << '\n';
  }
}

namespace {

bool keyed_less(const GpsFix& a, std::uint64_t sa, const GpsFix& b,
                std::uint64_t sb) {
  if (a.mmsi != b.mmsi) return a.mmsi < b.mmsi;
  if (a.t != b.t) return a.t < b.t;
  return sa < sb;
}

std::atomic<std::uint64_t> g_sorter_serial{0};

}  // namespace

ExternalFixSorter::ExternalFixSorter(std::size_t memory_fixes,
                                     std::filesystem::path temp_dir)
    : memory_fixes_(std::max<std::size_t>(1, memory_fixes)),
      temp_dir_(std::move(temp_dir)) {}

ExternalFixSorter::~ExternalFixSorter() {
  std::error_code ec;
  for (const auto& p : runs_) std::filesystem::remove(p, ec);
}

void ExternalFixSorter::add(const GpsFix& fix) {
  buffer_.push_back({fix, seq_++});
  ++count_;
  if (buffer_.size() >= memory_fixes_) spill();
}

void ExternalFixSorter::spill() {
  std::sort(buffer_.begin(), buffer_.end(), [](const Keyed& a, const Keyed& b) {
    return keyed_less(a.fix, a.seq, b.fix, b.seq);
  });
  auto path = temp_dir_ / ("trajsearch-sort-" + std::to_string(::getpid()) + "-" +
                           std::to_string(g_sorter_serial++) + ".run");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot create sort run " + path.string());
  out.write(reinterpret_cast<const char*>(buffer_.data()),
            static_cast<std::streamsize>(buffer_.size() * sizeof(Keyed)));
  if (!out) throw std::runtime_error("failed writing sort run " + path.string());
  runs_.push_back(std::move(path));
  buffer_.clear();
}

void ExternalFixSorter::drain(const std::function<void(const GpsFix&)>& sink) {
  std::sort(buffer_.begin(), buffer_.end(), [](const Keyed& a, const Keyed& b) {
    return keyed_less(a.fix, a.seq, b.fix, b.seq);
  });

  // Source 0..runs-1 are spill files, source `runs` is the memory buffer.
  std::vector<std::ifstream> files;
  for (const auto& p : runs_) {
    files.emplace_back(p, std::ios::binary);
    if (!files.back()) throw std::runtime_error("cannot reopen sort run " + p.string());
  }
  std::size_t mem_pos = 0;
  auto next = [&](std::size_t src, Keyed& k) -> bool {
    if (src == files.size()) {
      if (mem_pos >= buffer_.size()) return false;
      k = buffer_[mem_pos++];
      return true;
    }
    return static_cast<bool>(
        files[src].read(reinterpret_cast<char*>(&k), sizeof(Keyed)));
  };

  struct Head {
    Keyed k;
    std::size_t src;
  };
  auto greater = [](const Head& a, const Head& b) {
    return keyed_less(b.k.fix, b.k.seq, a.k.fix, a.k.seq);
  };
  std::priority_queue<Head, std::vector<Head>, decltype(greater)> heap(greater);
  for (std::size_t src = 0; src <= files.size(); ++src) {
    Keyed k;
    if (next(src, k)) heap.push({k, src});
  }
  while (!heap.empty()) {
    Head h = heap.top();
    heap.pop();
    sink(h.k.fix);
    Keyed k;
    if (next(h.src, k)) heap.push({k, h.src});
  }

  files.clear();
  std::error_code ec;
  for (const auto& p : runs_) std::filesystem::remove(p, ec);
  runs_.clear();
  buffer_.clear();
  count_ = 0;
}

ProjectionRef projection_for(const std::vector<GpsFix>& fixes) {
  ProjectionRef ref;
  if (fixes.empty()) return ref;
  double lon = 0.0, lat = 0.0;
  for (const auto& f : fixes) {
    lon += f.lon;
    lat += f.lat;
  }
  ref.ref_lon = lon / static_cast<double>(fixes.size());
  ref.ref_lat = lat / static_cast<double>(fixes.size());
  return ref;
}

TrajectoryStore build_trajectories(ExternalFixSorter& sorted,
                                   const IngestConfig& cfg,
                                   const ProjectionRef& proj,
                                   BuildStats* stats) {
  cfg.validate();
  TrajectoryStore store(proj);
  BuildStats local;
  local.input_fixes = sorted.size();

  TrajId next_id = 0;
  std::vector<GpsFix> piece;
  bool have_vessel = false;
  std::uint64_t vessel = 0;
  std::int64_t last_t = 0;

  auto flush = [&] {
    if (piece.empty()) return;
    if (piece.size() < cfg.min_points) {
      local.dropped_short += piece.size();
    } else {
      std::vector<PlanarPoint> pts;
      pts.reserve(piece.size());
      for (const auto& f : piece) pts.push_back(project(f.lon, f.lat, proj));
      store.add(Trajectory(next_id++, std::move(pts)));
      local.kept_points += piece.size();
      ++local.trajectories;
    }
    piece.clear();
  };

  sorted.drain([&](const GpsFix& f) {
    if (!have_vessel || f.mmsi != vessel) {
      flush();
      have_vessel = true;
      vessel = f.mmsi;
    } else {
      const auto gap = static_cast<double>(f.t - last_t);
      if (gap <= cfg.dedup_window) {
        ++local.deduplicated;
        return;
      }
      if (gap > cfg.gap_split) flush();
    }
    piece.push_back(f);
    last_t = f.t;
  });
  flush();

  if (stats) *stats = local;
  return store;
}

TrajectoryStore build_trajectories(const std::vector<GpsFix>& fixes,
                                   const IngestConfig& cfg,
                                   const ProjectionRef& proj,
                                   BuildStats* stats) {
  ExternalFixSorter sorter(cfg.sort_memory_fixes);
  for (const auto& f : fixes) sorter.add(f);
  return build_trajectories(sorter, cfg, proj, stats);
}

}  // namespace trajsearch::ingest
