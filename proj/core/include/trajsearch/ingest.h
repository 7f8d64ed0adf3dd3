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

#ifndef TRAJSEARCH_INGEST_H_
#define TRAJSEARCH_INGEST_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajsearch/geometry.h"
#include "trajsearch/model.h"

namespace trajsearch::ingest {

struct GpsFix {
  std::uint64_t mmsi = 0;
  std::int64_t t = 0;  // epoch seconds, UTC
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GpsFix&, const GpsFix&) = default;
};

enum class TimeFormat {
  kIso,    // 2023-01-01T00:00:00 (a space instead of 'T' is accepted)
  kDma,    // 27/02/2024 00:00:00
  kEpoch,  // integer seconds
};

/// Column names (matched case-insensitively, leading '#' and blanks ignored).
struct ColumnMap {
  std::string mmsi;
  std::string time;
  std::string lat;
  std::string lon;
  TimeFormat time_format = TimeFormat::kIso;
};

/// Named AIS layouts. DMA: "# Timestamp, Type of mobile, MMSI, Latitude,
/// Longitude, ...". NOAA: "MMSI, BaseDateTime, LAT, LON, SOG, COG, ...".
ColumnMap dma_schema();
ColumnMap noaa_schema();

/// "dma", "noaa", or "custom:mmsi=..,time=..,lat=..,lon=..[,format=iso|dma|epoch]".
/// Throws ConfigError for anything else.
ColumnMap schema_by_name(const std::string& name);

struct IngestConfig {
  ColumnMap schema = noaa_schema();
  double gap_split = 1800.0;   // seconds
  std::size_t min_points = 40;
  double dedup_window = 0.0;   // seconds
  std::size_t sort_memory_fixes = 8u << 20;  // spill threshold

  void validate() const;
};

/// Fatal configuration problems (unknown schema, missing columns).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RejectReason { kBadCoordinate, kBadTimestamp, kMissingField };
const char* to_string(RejectReason r);

struct Rejection {
  std::size_t line = 0;  // 1-based line number in the input
  RejectReason reason = RejectReason::kMissingField;
};

struct ParseReport {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::vector<Rejection> rejections;
};

/// Streams `in` row by row, handing each valid fix to `sink`. Malformed rows
/// are recorded and skipped. Throws ConfigError when the header lacks a
/// required column.
ParseReport parse_ais_csv(std::istream& in, const ColumnMap& schema,
                          const std::function<void(const GpsFix&)>& sink);

/// Convenience overload collecting the fixes.
ParseReport parse_ais_csv(std::istream& in, const ColumnMap& schema,
                          std::vector<GpsFix>& fixes);

/// Writes one "line,reason" record per rejection.
void write_rejections(std::ostream& out, const ParseReport& report);

/// Orders fixes by (mmsi, t, input order). Runs of more than
/// `memory_fixes` fixes are sorted and spilled to temporary files, then
/// merged.
class ExternalFixSorter {
 public:
  explicit ExternalFixSorter(std::size_t memory_fixes,
                             std::filesystem::path temp_dir =
                                 std::filesystem::temp_directory_path());
  ~ExternalFixSorter();
  ExternalFixSorter(const ExternalFixSorter&) = delete;
  ExternalFixSorter& operator=(const ExternalFixSorter&) = delete;

  void add(const GpsFix& fix);
  std::size_t size() const { return count_; }
  std::size_t spilled_runs() const { return runs_.size(); }

  /// Emits every fix in sorted order; the sorter is empty afterwards.
  void drain(const std::function<void(const GpsFix&)>& sink);

 private:
  struct Keyed {
    GpsFix fix;
    std::uint64_t seq;
  };
  void spill();

  std::size_t memory_fixes_;
  std::filesystem::path temp_dir_;
  std::vector<Keyed> buffer_;
  std::vector<std::filesystem::path> runs_;
  std::uint64_t seq_ = 0;
  std::size_t count_ = 0;
};

struct BuildStats {
  std::size_t input_fixes = 0;
  std::size_t deduplicated = 0;
  std::size_t dropped_short = 0;   // points in trajectories below min_points
  std::size_t kept_points = 0;
  std::size_t trajectories = 0;
};

/// Mean lon/lat of `fixes` as projection origin.
ProjectionRef projection_for(const std::vector<GpsFix>& fixes);

/// Groups fixes per vessel, orders by time, drops fixes within dedup_window
/// of the previously kept one, splits on gaps above gap_split, drops pieces
/// shorter than min_points and projects the rest. Ids are dense, in
/// (mmsi, start time) order.
TrajectoryStore build_trajectories(const std::vector<GpsFix>& fixes,
                                   const IngestConfig& cfg,
                                   const ProjectionRef& proj,
                                   BuildStats* stats = nullptr);

/// Same, consuming an already filled sorter.
TrajectoryStore build_trajectories(ExternalFixSorter& sorted,
                                   const IngestConfig& cfg,
                                   const ProjectionRef& proj,
                                   BuildStats* stats = nullptr);

/// Parses "YYYY-MM-DDTHH:MM:SS", "DD/MM/YYYY HH:MM:SS" or integer seconds.
/// Returns false on malformed input.
bool parse_timestamp(const std::string& text, TimeFormat format,
                     std::int64_t& out);

}  // namespace trajsearch::ingest

#endif  // TRAJSEARCH_INGEST_H_
