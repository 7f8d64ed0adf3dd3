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

#include "trajsearch/otrd.h"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace trajsearch {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_segmented(const Trajectory& t) {
  if (!t.segmented()) {
    throw std::invalid_argument("trajectory " + std::to_string(t.id()) +
                                " is not segmented");
  }
}
}  // namespace

void OtrdParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("theta must lie in [0, 1]");
  }
  if (g < 1) throw std::invalid_argument("granularity must be >= 1");
}

Strategies Strategies::parse(std::string_view text) {
  if (text == "all") return all();
  if (text == "none" || text.empty()) return none();
  Strategies s = none();
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find_first_of(",+", pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = text.substr(pos, comma - pos);
    if (item == "s1" || item == "S1") {
      s.segment_pruning = true;
    } else if (item == "s2" || item == "S2") {
      s.kbound_pruning = true;
    } else if (item == "s3" || item == "S3") {
      s.incremental = true;
    } else {
      throw std::invalid_argument("unknown strategy '" + std::string(item) +
                                  "' (expected s1, s2, s3, all or none)");
    }
    pos = comma + 1;
  }
  return s;
}

std::string Strategies::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(segment_pruning, "s1");
  add(kbound_pruning, "s2");
  add(incremental, "s3");
  return out.empty() ? "none" : out;
}

OtrdCounters& OtrdCounters::operator+=(const OtrdCounters& o) {
  segments_scanned += o.segments_scanned;
  s1_segment_skips += o.s1_segment_skips;
  points_scanned += o.points_scanned;
  full_computes += o.full_computes;
  s2_early_prunes += o.s2_early_prunes;
  s2_loop_prunes += o.s2_loop_prunes;
  s3_case1 += o.s3_case1;
  s3_case2 += o.s3_case2;
  s3_case2_rejected += o.s3_case2_rejected;
  s3_case3 += o.s3_case3;
  return *this;
}

Pivotal find_pivotal(const PlanarPoint& p, const Trajectory& t) {
  Pivotal best{1, 1, kInf};
  if (!t.segmented()) {
    for (PointIndex i = 1; i <= t.size(); ++i) {
      const double d = euclid(p, t.at(i));
      if (d < best.distance) best = {i, 1, d};
    }
    return best;
  }

  // Scan the closest segment first so the bound is tight, then every other
  // segment in order. Equal mindist may still hide an equally distant point
  // with a smaller index, so only a strictly larger bound skips a segment.
  const SegIndex segs = t.segment_count();
  SegIndex first = 1;
  double first_d = kInf;
  for (SegIndex u = 1; u <= segs; ++u) {
    const double d = mindist_point_mbr(p, t.segment_mbr(u));
    if (d < first_d) {
      first_d = d;
      first = u;
    }
  }
  auto scan = [&](SegIndex u) {
    const auto& b = t.bounds(u);
    for (PointIndex i = b.start; i <= b.end; ++i) {
      const double d = euclid(p, t.at(i));
      if (d < best.distance || (d == best.distance && i < best.x)) {
        best = {i, u, d};
      }
    }
  };
  scan(first);
  for (SegIndex u = 1; u <= segs; ++u) {
    if (u == first) continue;
    if (mindist_point_mbr(p, t.segment_mbr(u)) > best.distance) continue;
    scan(u);
  }
  return best;
}

double ttd(const PlanarPoint& dest, const Trajectory& t, PointIndex x) {
  if (x < 1 || x > t.size()) {
    throw std::out_of_range("ttd: pivotal index outside trajectory");
  }
  return point_segment_distance(dest, t.at(x), t.at(t.size()));
}

CoarseView coarse_view(PointIndex x, std::size_t g, const CoarseView* prev) {
  if (g < 1) throw std::invalid_argument("coarse_view: g must be >= 1");
  if (x < 1) throw std::invalid_argument("coarse_view: x must be >= 1");
  CoarseView out;
  if (g == 1) {
    out.indices.resize(x);
    for (PointIndex i = 1; i <= x; ++i) out.indices[i - 1] = i;
    return out;
  }
  if (prev == nullptr || prev->indices.empty()) {
    for (PointIndex i = (x - 1) % g + 1; i <= x; i += g) {
      out.indices.push_back(i);
    }
    return out;
  }

  const PointIndex x_prev = prev->last();
  if (x == x_prev) return *prev;
  if (x > x_prev) {
    out = *prev;
    for (PointIndex i = x_prev + g; i <= x; i += g) out.indices.push_back(i);
    if (out.last() != x) out.indices.push_back(x);
    return out;
  }
  for (PointIndex i : prev->indices) {
    if (i >= x) break;
    out.indices.push_back(i);
  }
  out.indices.push_back(x);
  return out;
}

double prefix_min_distance(const PlanarPoint& q, const Trajectory& t,
                           PointIndex lo, PointIndex x, SegIndex z,
                           const CoarseView* view, bool segment_pruning,
                           OtrdCounters* counters) {
  double best = kInf;
  if (lo >= x) return best;
  std::uint64_t scanned = 0, skipped = 0, points = 0;

  const SegIndex first = t.segment_of(lo + 1);
  auto it = view ? std::lower_bound(view->indices.begin(), view->indices.end(),
                                    lo + 1)
                 : std::vector<PointIndex>::const_iterator{};
  for (SegIndex u = first; u <= z; ++u) {
    const auto& b = t.bounds(u);
    const PointIndex from = std::max(b.start, lo + 1);
    const PointIndex to = std::min(b.end, x);
    if (segment_pruning && mindist_point_mbr(q, t.segment_mbr(u)) >= best) {
      ++skipped;
      continue;
    }
    ++scanned;
    if (view) {
      while (it != view->indices.end() && *it < from) ++it;
      for (auto jt = it; jt != view->indices.end() && *jt <= to; ++jt) {
        best = std::min(best, euclid(q, t.at(*jt)));
        ++points;
      }
    } else {
      for (PointIndex i = from; i <= to; ++i) {
        best = std::min(best, euclid(q, t.at(i)));
      }
      points += to >= from ? to - from + 1 : 0;
    }
  }
  if (counters) {
    counters->segments_scanned += scanned;
    counters->s1_segment_skips += skipped;
    counters->points_scanned += points;
  }
  return best;
}

HtdResult htd_operational(std::span<const PlanarPoint> history,
                          const Trajectory& t, PointIndex x, SegIndex z,
                          const OtrdParams& params,
                          const HtdOptions& options) {
  require_segmented(t);
  if (history.empty()) {
    throw std::invalid_argument("htd_operational: empty history");
  }
  const std::size_t c = history.size();
  HtdResult out;
  out.htd = -1.0;
  double weight = 1.0;
  for (std::size_t j = c; j >= 1; --j) {
    if (j < c) {
      weight *= params.theta;
      // Every remaining term is 0 and cannot exceed the running max.
      if (weight == 0.0) break;
    }
    const double m =
        prefix_min_distance(history[j - 1], t, 0, x, z, options.view,
                            options.segment_pruning, options.counters);
    const double term = weight * m;
    if (term > out.htd) {
      out.htd = term;
      out.witness = j;
      out.witness_min = m;
      if (options.prune) {
        const auto& ctx = *options.prune;
        if (ctx.threshold.excludes(combine_otrd(ctx.alpha, out.htd, ctx.ttd),
                                   ctx.traj_id)) {
          out.pruned = true;
          return out;
        }
      }
    }
  }
  return out;
}

double htd_recursive(std::span<const PlanarPoint> history,
                     std::span<const PlanarPoint> t_prime, double theta) {
  const std::size_t c = history.size();
  const std::size_t m = t_prime.size();
  if (c == 0 || m == 0 || m < c) return kInf;

  // f[a][b]: distance between the first a history points and the first b
  // points of t_prime. Row/column 0 are the empty-prefix base case.
  std::vector<double> f((c + 1) * (m + 1), kInf);
  auto at = [&](std::size_t a, std::size_t b) -> double& {
    return f[a * (m + 1) + b];
  };
  for (std::size_t a = 1; a <= c; ++a) {
    for (std::size_t b = 1; b <= m; ++b) {
      const double d = euclid(history[a - 1], t_prime[b - 1]);
      if (a == 1 && b == 1) {
        at(a, b) = d;
        continue;
      }
      const double diag = at(a - 1, b - 1);
      const double decayed = diag == kInf ? kInf : theta * diag;
      at(a, b) = std::max(d, std::min(decayed, at(a, b - 1)));
    }
  }
  return at(c, m);
}

ErrorBounds granularity_error_bounds(std::span<const PlanarPoint> history,
                                     const Trajectory& t, PointIndex x,
                                     const OtrdParams& params, double htd_exact,
                                     const CoarseView& view) {
  if (history.empty()) {
    throw std::invalid_argument("granularity_error_bounds: empty history");
  }
  const std::size_t c = history.size();
  ErrorBounds out;
  out.lower = htd_exact - euclid(history.back(), t.at(x));

  double worst = 0.0;
  double weight = 1.0;
  for (std::size_t j = c; j >= 1; --j) {
    if (j < c) weight *= params.theta;
    for (PointIndex i : view.indices) {
      if (i > x) break;
      worst = std::max(worst, weight * euclid(history[j - 1], t.at(i)));
    }
  }
  out.upper = worst - htd_exact;
  return out;
}

const char* to_string(ComputePath path) {
  switch (path) {
    case ComputePath::kFull:
      return "full";
    case ComputePath::kCase1:
      return "case1";
    case ComputePath::kCase2:
      return "case2";
    case ComputePath::kCase2Rejected:
      return "case2-rejected";
    case ComputePath::kCase3:
      return "case3";
    case ComputePath::kPrunedEarly:
      return "pruned-early";
    case ComputePath::kPrunedInLoop:
      return "pruned-loop";
  }
  return "unknown";
}

std::optional<HtdResult> incremental_htd(const IncrementalEntry& entry,
                                         std::span<const PlanarPoint> history,
                                         const Trajectory& t, PointIndex x,
                                         SegIndex z, const OtrdParams& params,
                                         const CoarseView* view,
                                         bool segment_pruning,
                                         OtrdCounters* counters,
                                         ComputePath* path) {
  auto set_path = [&](ComputePath p) {
    if (path) *path = p;
  };
  const std::size_t c = history.size();
  if (entry.stale || entry.step_prev > c || entry.step_prev == 0 ||
      entry.witness_prev > entry.step_prev) {
    set_path(ComputePath::kFull);
    return std::nullopt;
  }
  if (x < entry.x_prev) {
    set_path(ComputePath::kCase3);
    if (counters) ++counters->s3_case3;
    return std::nullopt;
  }
  const bool advanced = x > entry.x_prev;
  if (advanced) {
    // The witness term survives only if the newly exposed points
    // p^{x'+1}..p^x do not come closer to p_o^{y'} than before.
    const double incr =
        prefix_min_distance(history[entry.witness_prev - 1], t, entry.x_prev,
                            x, z, view, segment_pruning, counters);
    if (incr < entry.witness_min_prev) {
      set_path(ComputePath::kCase2Rejected);
      if (counters) ++counters->s3_case2_rejected;
      return std::nullopt;
    }
  }

  const std::size_t delta = c - entry.step_prev;
  double decay = 1.0;
  for (std::size_t i = 0; i < delta; ++i) decay *= params.theta;

  HtdResult out;
  out.htd = decay * entry.htd_prev;
  out.witness = entry.witness_prev;
  out.witness_min = entry.witness_min_prev;

  HtdResult fresh;
  fresh.htd = -1.0;
  double weight = 1.0;
  for (std::size_t m = c; m > entry.step_prev; --m) {
    if (m < c) weight *= params.theta;
    const double d = prefix_min_distance(history[m - 1], t, 0, x, z, view,
                                         segment_pruning, counters);
    if (weight * d > fresh.htd) {
      fresh.htd = weight * d;
      fresh.witness = m;
      fresh.witness_min = d;
    }
  }
  // Newer history points win ties, as in a scan from p_o^c backwards.
  if (delta > 0 && fresh.htd >= out.htd) out = fresh;

  set_path(advanced ? ComputePath::kCase2 : ComputePath::kCase1);
  if (counters) ++(advanced ? counters->s3_case2 : counters->s3_case1);
  return out;
}

OtrdOutcome otrd_compute(const MovingObjectState& o, const Trajectory& t,
                         const OtrdParams& params, const Strategies& strategies,
                         const Threshold& threshold,
                         const IncrementalEntry* entry, const Pivotal* pivot,
                         OtrdCounters* counters) {
  require_segmented(t);
  if (o.history.empty()) {
    throw std::invalid_argument("otrd_compute: object has no history");
  }
  const Pivotal pv = pivot ? *pivot : find_pivotal(o.current(), t);
  const double dist_t = ttd(o.destination, t, pv.x);

  OtrdOutcome out;
  out.entry.traj_id = t.id();
  out.entry.step_prev = o.c();
  out.entry.stale = true;

  // The coarse view follows every pivotal change the candidate sees, pruned
  // or not, so it does not depend on which strategies are enabled.
  std::optional<CoarseView> view;
  if (params.g > 1) {
    const CoarseView* prev =
        entry && entry->coarse_prev ? &*entry->coarse_prev : nullptr;
    view = coarse_view(pv.x, params.g, prev);
  }
  const CoarseView* view_ptr = view ? &*view : nullptr;
  out.entry.coarse_prev = view;

  if (strategies.kbound_pruning) {
    const double bound = combine_otrd(params.alpha, pv.distance, dist_t);
    if (threshold.excludes(bound, t.id())) {
      out.path = ComputePath::kPrunedEarly;
      out.lower_bound = bound;
      if (counters) ++counters->s2_early_prunes;
      return out;
    }
  }

  std::optional<HtdResult> htd;
  if (strategies.incremental && entry && !entry->stale) {
    htd = incremental_htd(*entry, o.history, t, pv.x, pv.z, params, view_ptr,
                          strategies.segment_pruning, counters, &out.path);
  }
  if (!htd) {
    HtdOptions opts;
    opts.segment_pruning = strategies.segment_pruning;
    opts.view = view_ptr;
    opts.counters = counters;
    if (strategies.kbound_pruning) {
      opts.prune = PruneContext{threshold, t.id(), params.alpha, dist_t};
    }
    htd = htd_operational(o.history, t, pv.x, pv.z, params, opts);
    if (counters) ++counters->full_computes;
    if (htd->pruned) {
      out.path = ComputePath::kPrunedInLoop;
      out.lower_bound = combine_otrd(params.alpha, htd->htd, dist_t);
      if (counters) ++counters->s2_loop_prunes;
      return out;
    }
  }

  OtrdBreakdown b;
  b.htd = htd->htd;
  b.ttd = dist_t;
  b.otrd = combine_otrd(params.alpha, b.htd, b.ttd);
  b.witness_y = htd->witness;
  b.pivotal_x = pv.x;
  b.pivotal_z = pv.z;
  out.result = b;

  out.entry.x_prev = pv.x;
  out.entry.z_prev = pv.z;
  out.entry.htd_prev = htd->htd;
  out.entry.witness_prev = htd->witness;
  out.entry.witness_min_prev = htd->witness_min;
  out.entry.stale = false;
  return out;
}

}  // namespace trajsearch
