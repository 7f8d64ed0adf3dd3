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

#include "trajsearch/svti.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <set>
#include <unordered_set>

#include "trajsearch/otrd.h"

namespace trajsearch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool entry_less(const SegmentRef& a, const SegmentRef& b) {
  return a.traj_id < b.traj_id ||
         (a.traj_id == b.traj_id && a.seg_index < b.seg_index);
}

// Sort-tile-recursive grouping: reorders `items` so that each consecutive
// run of at most `cap` items forms one tile, and returns the run lengths.
template <typename T, typename BoxOf, typename Tie>
std::vector<std::size_t> str_tiles(std::vector<T>& items, std::size_t cap,
                                   BoxOf box_of, Tie tie_less) {
  const std::size_t n = items.size();
  const std::size_t pages = (n + cap - 1) / cap;
  const auto slices =
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(pages))));
  const std::size_t slice_len = slices * cap;

  auto by_x = [&](const T& a, const T& b) {
    const double ax = box_of(a).center().x, bx = box_of(b).center().x;
    return ax < bx || (ax == bx && tie_less(a, b));
  };
  auto by_y = [&](const T& a, const T& b) {
    const double ay = box_of(a).center().y, by = box_of(b).center().y;
    return ay < by || (ay == by && tie_less(a, b));
  };
  std::sort(items.begin(), items.end(), by_x);

  std::vector<std::size_t> runs;
  for (std::size_t s = 0; s < n; s += slice_len) {
    const std::size_t e = std::min(n, s + slice_len);
    std::sort(items.begin() + s, items.begin() + e, by_y);
    for (std::size_t i = s; i < e; i += cap) runs.push_back(std::min(cap, e - i));
  }
  return runs;
}

}  // namespace

void QueryConfig::validate() const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (mode == Mode::kAbsolute) {
    if (!(radius >= 0.0)) throw std::invalid_argument("range must be >= 0");
  } else if (!(candidate_rate >= 1.0)) {
    throw std::invalid_argument("candidate rate must be >= 1");
  }
}

SvtiIndex::SvtiIndex(std::shared_ptr<const TrajectoryStore> store,
                     std::size_t node_capacity)
    : store_(std::move(store)), capacity_(node_capacity) {
  if (!store_) throw std::invalid_argument("SvtiIndex: null store");
  if (capacity_ < 2) throw std::invalid_argument("node capacity must be >= 2");
  root_ = new_node(true);
}

SvtiIndex SvtiIndex::build(TrajectoryStore store, const SegmentationConfig& cfg,
                           std::size_t node_capacity) {
  segment_store(store, cfg);
  return build_segmented(std::move(store), cfg, node_capacity);
}

SvtiIndex SvtiIndex::build_segmented(TrajectoryStore store,
                                     const SegmentationConfig& cfg,
                                     std::size_t node_capacity) {
  for (const auto& t : store.trajectories()) {
    if (!t.segmented()) {
      throw std::invalid_argument("build_segmented: trajectory " +
                                  std::to_string(t.id()) + " has no segments");
    }
  }
  SvtiIndex index(std::make_shared<const TrajectoryStore>(std::move(store)),
                  node_capacity);
  index.seg_cfg_ = cfg;

  std::vector<SegmentRef> all;
  for (const auto& t : index.store_->trajectories()) {
    auto& flags = index.present_[t.id()];
    flags.assign(t.segment_count(), true);
    for (SegIndex u = 1; u <= t.segment_count(); ++u) {
      all.push_back(t.segment(u));
    }
  }
  index.entries_ = all.size();
  index.nodes_.clear();
  index.root_ = index.bulk_load(std::move(all));
  return index;
}

std::uint32_t SvtiIndex::new_node(bool leaf) {
  nodes_.push_back(Node{});
  nodes_.back().leaf = leaf;
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t SvtiIndex::bulk_load(std::vector<SegmentRef> entries) {
  if (entries.empty()) return new_node(true);

  auto runs = str_tiles(
      entries, capacity_, [](const SegmentRef& s) -> const Mbr& { return s.mbr; },
      entry_less);
  std::vector<std::uint32_t> level;
  std::size_t pos = 0;
  for (std::size_t len : runs) {
    const std::uint32_t n = new_node(true);
    nodes_[n].entries.assign(entries.begin() + pos, entries.begin() + pos + len);
    recompute_box(n);
    level.push_back(n);
    pos += len;
  }

  while (level.size() > 1) {
    auto up_runs = str_tiles(
        level, capacity_,
        [this](std::uint32_t n) -> const Mbr& { return nodes_[n].box; },
        std::less<std::uint32_t>{});
    std::vector<std::uint32_t> next;
    pos = 0;
    for (std::size_t len : up_runs) {
      const std::uint32_t n = new_node(false);
      nodes_[n].children.assign(level.begin() + pos, level.begin() + pos + len);
      recompute_box(n);
      next.push_back(n);
      pos += len;
    }
    level = std::move(next);
  }
  return level.front();
}

void SvtiIndex::recompute_box(std::uint32_t n) {
  Mbr box;
  if (nodes_[n].leaf) {
    for (const auto& e : nodes_[n].entries) box.expand(e.mbr);
  } else {
    for (auto c : nodes_[n].children) box.expand(nodes_[c].box);
  }
  nodes_[n].box = box;
}

std::size_t SvtiIndex::height() const {
  std::size_t h = 1;
  std::uint32_t n = root_;
  while (!nodes_[n].leaf) {
    n = nodes_[n].children.front();
    ++h;
  }
  return h;
}

std::size_t SvtiIndex::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
}

Mbr SvtiIndex::bounds() const { return nodes_[root_].box; }

void SvtiIndex::insert_segment(const SegmentRef& seg) {
  if (!store_->contains(seg.traj_id)) {
    throw std::invalid_argument("insert_segment: unknown trajectory " +
                                std::to_string(seg.traj_id));
  }
  const Trajectory& t = store_->get(seg.traj_id);
  if (seg.seg_index < 1 || seg.seg_index > t.segment_count()) {
    throw std::invalid_argument("insert_segment: unknown segment index");
  }
  auto& flags = present_[seg.traj_id];
  if (flags.size() != t.segment_count()) flags.assign(t.segment_count(), false);
  if (flags[seg.seg_index - 1]) {
    throw std::invalid_argument("insert_segment: duplicate segment (" +
                                std::to_string(seg.traj_id) + ", " +
                                std::to_string(seg.seg_index) + ")");
  }
  // Normalize against the owner so the leaf entry is always consistent.
  const SegmentRef entry = t.segment(seg.seg_index);

  if (auto sibling = insert_rec(root_, entry)) {
    const std::uint32_t old_root = root_;
    const std::uint32_t r = new_node(false);
    nodes_[r].children = {old_root, *sibling};
    recompute_box(r);
    root_ = r;
  }
  flags[seg.seg_index - 1] = true;
  ++entries_;
}

std::optional<std::uint32_t> SvtiIndex::insert_rec(std::uint32_t n,
                                                   const SegmentRef& seg) {
  if (nodes_[n].leaf) {
    nodes_[n].entries.push_back(seg);
    nodes_[n].box.expand(seg.mbr);
    if (nodes_[n].entries.size() > capacity_) return split(n);
    return std::nullopt;
  }

  // Least enlargement, then smallest area.
  std::uint32_t best = nodes_[n].children.front();
  double best_growth = kInf, best_area = kInf;
  for (auto c : nodes_[n].children) {
    const double area = nodes_[c].box.area();
    const double growth = united(nodes_[c].box, seg.mbr).area() - area;
    if (growth < best_growth || (growth == best_growth && area < best_area)) {
      best = c;
      best_growth = growth;
      best_area = area;
    }
  }
  auto sibling = insert_rec(best, seg);
  nodes_[n].box.expand(seg.mbr);
  if (sibling) {
    nodes_[n].children.push_back(*sibling);
    if (nodes_[n].children.size() > capacity_) return split(n);
  }
  return std::nullopt;
}

std::uint32_t SvtiIndex::split(std::uint32_t n) {
  const bool leaf = nodes_[n].leaf;
  std::vector<Mbr> boxes;
  if (leaf) {
    for (const auto& e : nodes_[n].entries) boxes.push_back(e.mbr);
  } else {
    for (auto c : nodes_[n].children) boxes.push_back(nodes_[c].box);
  }
  const std::size_t total = boxes.size();
  const std::size_t min_fill = std::max<std::size_t>(1, (capacity_ * 2) / 5);

  // Quadratic seed pick: the pair wasting the most area together.
  std::size_t seed_a = 0, seed_b = 1;
  double worst = -kInf;
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = i + 1; j < total; ++j) {
      const double waste =
          united(boxes[i], boxes[j]).area() - boxes[i].area() - boxes[j].area();
      if (waste > worst) {
        worst = waste;
        seed_a = i;
        seed_b = j;
      }
    }
  }

  std::vector<int> group(total, -1);
  group[seed_a] = 0;
  group[seed_b] = 1;
  Mbr cover[2] = {boxes[seed_a], boxes[seed_b]};
  std::size_t count[2] = {1, 1};
  std::size_t remaining = total - 2;

  while (remaining > 0) {
    int forced = -1;
    if (count[0] + remaining == min_fill) forced = 0;
    if (count[1] + remaining == min_fill) forced = 1;
    if (forced >= 0) {
      for (std::size_t i = 0; i < total; ++i) {
        if (group[i] < 0) {
          group[i] = forced;
          cover[forced].expand(boxes[i]);
          ++count[forced];
        }
      }
      break;
    }
    std::size_t pick = 0;
    double best_diff = -1.0;
    double g0 = 0.0, g1 = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      if (group[i] >= 0) continue;
      const double d0 = united(cover[0], boxes[i]).area() - cover[0].area();
      const double d1 = united(cover[1], boxes[i]).area() - cover[1].area();
      if (std::abs(d0 - d1) > best_diff) {
        best_diff = std::abs(d0 - d1);
        pick = i;
        g0 = d0;
        g1 = d1;
      }
    }
    int to = 0;
    if (g1 < g0) {
      to = 1;
    } else if (g1 == g0) {
      if (cover[1].area() < cover[0].area()) {
        to = 1;
      } else if (cover[1].area() == cover[0].area() && count[1] < count[0]) {
        to = 1;
      }
    }
    group[pick] = to;
    cover[to].expand(boxes[pick]);
    ++count[to];
    --remaining;
  }

  const std::uint32_t sib = new_node(leaf);
  Node& node = nodes_[n];
  Node& other = nodes_[sib];
  if (leaf) {
    std::vector<SegmentRef> keep;
    for (std::size_t i = 0; i < total; ++i) {
      (group[i] == 0 ? keep : other.entries).push_back(node.entries[i]);
    }
    node.entries = std::move(keep);
  } else {
    std::vector<std::uint32_t> keep;
    for (std::size_t i = 0; i < total; ++i) {
      (group[i] == 0 ? keep : other.children).push_back(node.children[i]);
    }
    node.children = std::move(keep);
  }
  node.box = cover[0];
  other.box = cover[1];
  return sib;
}

std::vector<SegmentRef> SvtiIndex::candidate_segments(const PlanarPoint& p,
                                                      double r) const {
  std::vector<SegmentRef> out;
  if (entries_ == 0) return out;
  std::vector<std::uint32_t> stack{root_};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (mindist_point_mbr(p, node.box) > r) continue;
    if (node.leaf) {
      for (const auto& e : node.entries) {
        if (mindist_point_mbr(p, e.mbr) <= r) out.push_back(e);
      }
    } else {
      stack.insert(stack.end(), node.children.begin(), node.children.end());
    }
  }
  std::sort(out.begin(), out.end(), entry_less);
  return out;
}

RangeResult SvtiIndex::range_query(const PlanarPoint& p, double r) const {
  RangeResult out;
  out.radius = r;
  const auto segs = candidate_segments(p, r);
  TrajId last = 0;
  bool have_last = false;
  for (const auto& s : segs) {
    if (have_last && s.traj_id == last) continue;
    have_last = true;
    last = s.traj_id;
    // Membership depends only on the global nearest point; find_pivotal
    // visits the owner's segments in mindist order and stops early.
    const Pivotal pv = find_pivotal(p, store_->get(s.traj_id));
    if (pv.distance <= r) out.hits.push_back({s.traj_id, pv.x, pv.z, pv.distance});
  }
  return out;
}

RangeResult SvtiIndex::range_query(const PlanarPoint& p,
                                   const QueryConfig& cfg) const {
  cfg.validate();
  if (cfg.mode == QueryConfig::Mode::kAbsolute) return range_query(p, cfg.radius);
  if (entries_ == 0) return RangeResult{};

  // One best-first pass stands in for the doubling loop: the start radius is
  // the mindist at which `target` distinct owners have shown up, and each
  // doubling only pulls in entries up to the new radius. Pivotal points are
  // computed once per owner.
  const auto target = static_cast<std::size_t>(
      std::ceil(cfg.candidate_rate * static_cast<double>(cfg.k)));
  const Mbr b = bounds();
  const double cover_all = maxdist_point_mbr(p, b);
  const double floor_r =
      1e-9 * std::max(1.0, std::hypot(b.max_x - b.min_x, b.max_y - b.min_y));

  struct Item {
    double d;
    std::uint32_t node;
    const SegmentRef* entry;
    bool operator>(const Item& o) const { return d > o.d; }
  };
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  queue.push({mindist_point_mbr(p, nodes_[root_].box), root_, nullptr});
  std::unordered_set<TrajId> seen;
  std::vector<RangeHit> found;

  auto visit = [&](const Item& item, auto&& push) {
    if (item.entry == nullptr) {
      const Node& node = nodes_[item.node];
      if (node.leaf) {
        for (const auto& e : node.entries) push({mindist_point_mbr(p, e.mbr), 0, &e});
      } else {
        for (auto c : node.children) {
          push({mindist_point_mbr(p, nodes_[c].box), c, nullptr});
        }
      }
      return;
    }
    const TrajId id = item.entry->traj_id;
    if (!seen.insert(id).second) return;
    const Pivotal pv = find_pivotal(p, store_->get(id));
    found.push_back({id, pv.x, pv.z, pv.distance});
  };

  // Start radius: ordered traversal until `target` owners are known.
  std::optional<double> r;
  while (!queue.empty() && !r) {
    const Item item = queue.top();
    queue.pop();
    visit(item, [&](const Item& it) { queue.push(it); });
    if (item.entry != nullptr && seen.size() >= target) {
      r = item.d < cover_all ? std::max(item.d, floor_r) : cover_all;
    }
  }
  if (!r) r = cover_all;  // fewer owners than the target

  // The rest needs no order: depth-first inside r, anything beyond waits
  // for the next doubling.
  std::vector<Item> stack, deferred;
  while (!queue.empty()) {
    stack.push_back(queue.top());
    queue.pop();
  }
  for (;;) {
    while (!stack.empty()) {
      const Item item = stack.back();
      stack.pop_back();
      if (item.d > *r) {
        deferred.push_back(item);
        continue;
      }
      visit(item, [&](const Item& it) { stack.push_back(it); });
    }
    std::size_t inside = 0;
    for (const auto& h : found) inside += h.distance <= *r;
    if (inside >= target || *r >= cover_all) break;
    r = std::min(2.0 * *r, cover_all);
    stack.swap(deferred);
  }

  RangeResult out;
  out.radius = *r;
  for (const auto& h : found) {
    if (h.distance <= *r) out.hits.push_back(h);
  }
  std::sort(out.hits.begin(), out.hits.end(),
            [](const RangeHit& a, const RangeHit& b) { return a.traj_id < b.traj_id; });
  return out;
}

double SvtiIndex::resolve_radius(const PlanarPoint& p,
                                 const QueryConfig& cfg) const {
  return range_query(p, cfg).radius;
}

double SvtiIndex::distinct_trajectory_radius(const PlanarPoint& p,
                                             std::size_t count) const {
  if (count == 0) return 0.0;
  if (entries_ == 0) return kInf;
  // Best-first traversal; entries are queued with their own mindist.
  struct Item {
    double d;
    bool is_entry;
    std::uint32_t node;
    const SegmentRef* entry;
    bool operator>(const Item& o) const { return d > o.d; }
  };
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  queue.push({mindist_point_mbr(p, nodes_[root_].box), false, root_, nullptr});
  std::unordered_set<TrajId> seen;
  while (!queue.empty()) {
    const Item item = queue.top();
    queue.pop();
    if (item.is_entry) {
      seen.insert(item.entry->traj_id);
      if (seen.size() >= count) return item.d;
      continue;
    }
    const Node& node = nodes_[item.node];
    if (node.leaf) {
      for (const auto& e : node.entries) {
        queue.push({mindist_point_mbr(p, e.mbr), true, 0, &e});
      }
    } else {
      for (auto c : node.children) {
        queue.push({mindist_point_mbr(p, nodes_[c].box), false, c, nullptr});
      }
    }
  }
  return kInf;
}

std::string SvtiIndex::validate() const {
  std::set<std::pair<TrajId, SegIndex>> seen;
  std::size_t leaf_depth = 0;
  std::string err;

  std::function<void(std::uint32_t, std::size_t)> walk =
      [&](std::uint32_t n, std::size_t depth) {
        if (!err.empty()) return;
        const Node& node = nodes_[n];
        Mbr tight;
        if (node.leaf) {
          if (node.entries.size() > capacity_) err = "leaf over capacity";
          if (leaf_depth == 0) leaf_depth = depth;
          if (depth != leaf_depth) err = "leaves at different depths";
          for (const auto& e : node.entries) {
            tight.expand(e.mbr);
            if (!seen.insert({e.traj_id, e.seg_index}).second) {
              err = "segment indexed twice";
            }
            const Trajectory& t = store_->get(e.traj_id);
            if (!(t.segment(e.seg_index) == e)) err = "stale segment entry";
          }
        } else {
          if (node.children.empty()) err = "empty internal node";
          if (node.children.size() > capacity_) err = "node over capacity";
          for (auto c : node.children) {
            tight.expand(nodes_[c].box);
            walk(c, depth + 1);
          }
        }
        if (!(tight == node.box) && !(tight.empty() && node.box.empty())) {
          err = "node box is not tight";
        }
      };
  walk(root_, 1);
  if (err.empty() && seen.size() != entries_) err = "entry count mismatch";
  return err;
}

}  // namespace trajsearch
