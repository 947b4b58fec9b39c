// Copyright 2026 The Panfuse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "panfuse/metrics.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace panfuse {

MatchResult match_segments(const PanopticMap& pred, const PanopticMap& gt,
                           const ClassCatalog& catalog) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw ValidationError("prediction and ground truth dimensions differ");
  }
  pred.validate(catalog);
  gt.validate(catalog);

  // Joint histogram of (pred id, gt id) over all pixels.
  std::unordered_map<std::uint64_t, std::uint64_t> joint;
  const auto pi = pred.ids();
  const auto gi = gt.ids();
  for (std::size_t p = 0; p < pi.size(); ++p) {
    if (pi[p] == 0) continue;
    ++joint[(static_cast<std::uint64_t>(pi[p]) << 32) | gi[p]];
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> cells(joint.begin(),
                                                             joint.end());
  std::sort(cells.begin(), cells.end());

  std::unordered_map<std::uint32_t, const PanopticSegment*> pred_seg;
  std::unordered_map<std::uint32_t, const PanopticSegment*> gt_seg;
  for (const auto& s : pred.segments()) pred_seg.emplace(s.segment_id, &s);
  for (const auto& s : gt.segments()) gt_seg.emplace(s.segment_id, &s);

  std::unordered_map<std::uint32_t, std::uint64_t> void_pixels;
  for (const auto& [key, n] : cells) {
    if ((key & 0xffffffffu) == 0) void_pixels[static_cast<std::uint32_t>(key >> 32)] = n;
  }

  MatchResult result;
  std::unordered_set<std::uint32_t> matched_pred;
  std::unordered_set<std::uint32_t> matched_gt;
  for (const auto& [key, inter] : cells) {
    const auto pid = static_cast<std::uint32_t>(key >> 32);
    const auto gid = static_cast<std::uint32_t>(key & 0xffffffffu);
    if (gid == 0) continue;
    const PanopticSegment& ps = *pred_seg.at(pid);
    const PanopticSegment& gs = *gt_seg.at(gid);
    if (ps.class_id != gs.class_id) continue;
    const std::uint64_t pred_area = ps.area - void_pixels[pid];
    const std::uint64_t uni = pred_area + gs.area - inter;
    const double iou = static_cast<double>(inter) / static_cast<double>(uni);
    if (iou > 0.5) {
      result.matches.push_back({ps, gs, iou});
      matched_pred.insert(pid);
      matched_gt.insert(gid);
    }
  }
  for (const auto& s : pred.segments()) {
    if (!matched_pred.count(s.segment_id)) {
      const auto it = void_pixels.find(s.segment_id);
      result.unmatched_pred.push_back({s, it == void_pixels.end() ? 0 : it->second});
    }
  }
  for (const auto& s : gt.segments()) {
    if (!matched_gt.count(s.segment_id)) result.unmatched_gt.push_back(s);
  }
  return result;
}

PqStats& PqStats::operator+=(const PqStats& other) {
  for (const auto& [cls, s] : other.per_class) {
    ClassStats& t = per_class[cls];
    t.iou_sum += s.iou_sum;
    t.tp += s.tp;
    t.fp += s.fp;
    t.fn += s.fn;
  }
  return *this;
}

PqStats accumulate(const PanopticMap& pred, const PanopticMap& gt,
                   const ClassCatalog& catalog) {
  const MatchResult m = match_segments(pred, gt, catalog);
  PqStats stats;
  for (const SegmentMatch& match : m.matches) {
    ClassStats& s = stats.per_class[match.gt.class_id];
    ++s.tp;
    s.iou_sum += match.iou;
  }
  for (const UnmatchedPred& u : m.unmatched_pred) {
    if (2 * u.void_pixels > u.segment.area) continue;
    ++stats.per_class[u.segment.class_id].fp;
  }
  for (const PanopticSegment& s : m.unmatched_gt) ++stats.per_class[s.class_id].fn;
  return stats;
}

PqStats merge_stats(const PqStats& a, const PqStats& b) {
  PqStats out = a;
  out += b;
  return out;
}

PqStats reduce_stats(const std::vector<PqStats>& parts) {
  if (parts.empty()) return {};
  std::vector<PqStats> level = parts;
  while (level.size() > 1) {
    std::vector<PqStats> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      next.push_back(merge_stats(level[i], level[i + 1]));
    }
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  return level.front();
}

MetricsReport report(const PqStats& stats, const ClassCatalog& catalog) {
  MetricsReport r;
  double pq_sum = 0.0;
  double sq_sum = 0.0;
  double rq_sum = 0.0;
  double pq_things_sum = 0.0;
  double pq_stuff_sum = 0.0;
  for (const auto& [cls, s] : stats.per_class) {
    if (s.tp + s.fp + s.fn == 0) continue;
    const ClassInfo& info = catalog.info(cls);
    ClassMetrics m;
    m.tp = s.tp;
    m.fp = s.fp;
    m.fn = s.fn;
    const double tp = static_cast<double>(s.tp);
    m.sq = s.tp > 0 ? 100.0 * s.iou_sum / tp : 0.0;
    m.rq = 100.0 * tp /
           (tp + 0.5 * static_cast<double>(s.fp) + 0.5 * static_cast<double>(s.fn));
    m.pq = m.sq * m.rq / 100.0;
    r.per_class.emplace(cls, m);

    pq_sum += m.pq;
    sq_sum += m.sq;
    rq_sum += m.rq;
    if (info.kind == ClassKind::kThing) {
      pq_things_sum += m.pq;
      ++r.num_things;
    } else {
      pq_stuff_sum += m.pq;
      ++r.num_stuff;
    }
  }
  r.num_classes = r.per_class.size();
  if (r.num_classes > 0) {
    const auto n = static_cast<double>(r.num_classes);
    r.pq = pq_sum / n;
    r.sq = sq_sum / n;
    r.rq = rq_sum / n;
  }
  if (r.num_things > 0) r.pq_things = pq_things_sum / static_cast<double>(r.num_things);
  if (r.num_stuff > 0) r.pq_stuff = pq_stuff_sum / static_cast<double>(r.num_stuff);
  return r;
}

}  // namespace panfuse
