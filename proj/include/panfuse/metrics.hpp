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

// Panoptic quality evaluation.
//
// Segments match when they share a class and their IoU exceeds 0.5, which
// makes every match unique. Ground-truth void pixels are removed from the
// prediction side of every IoU, and unmatched predictions lying mostly on
// void are not counted as false positives. Scores are reported on a 0-100
// scale; PQ = SQ * RQ / 100 for every class.

#ifndef PANFUSE_METRICS_HPP_
#define PANFUSE_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "panfuse/core.hpp"

namespace panfuse {

struct SegmentMatch {
  PanopticSegment pred;
  PanopticSegment gt;
  double iou = 0.0;
};

struct UnmatchedPred {
  PanopticSegment segment;
  // Pixels of the segment that are void in the ground truth.
  std::uint64_t void_pixels = 0;
};

struct MatchResult {
  std::vector<SegmentMatch> matches;
  std::vector<UnmatchedPred> unmatched_pred;
  std::vector<PanopticSegment> unmatched_gt;
};

MatchResult match_segments(const PanopticMap& pred, const PanopticMap& gt,
                           const ClassCatalog& catalog);

struct ClassStats {
  double iou_sum = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

// Per-class accumulators; merging is a fieldwise sum.
struct PqStats {
  std::map<ClassId, ClassStats> per_class;

  PqStats& operator+=(const PqStats& other);
  friend bool operator==(const PqStats&, const PqStats&) = default;
};

PqStats accumulate(const PanopticMap& pred, const PanopticMap& gt,
                   const ClassCatalog& catalog);

PqStats merge_stats(const PqStats& a, const PqStats& b);

// Pairwise tree reduction in index order; the result depends only on the
// order of `parts`, not on how they were produced.
PqStats reduce_stats(const std::vector<PqStats>& parts);

struct ClassMetrics {
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

struct MetricsReport {
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  double pq_things = 0.0;
  double pq_stuff = 0.0;
  // Only classes with tp + fp + fn > 0.
  std::map<ClassId, ClassMetrics> per_class;
  std::size_t num_classes = 0;
  std::size_t num_things = 0;
  std::size_t num_stuff = 0;
};

MetricsReport report(const PqStats& stats, const ClassCatalog& catalog);

}  // namespace panfuse

#endif  // PANFUSE_METRICS_HPP_
