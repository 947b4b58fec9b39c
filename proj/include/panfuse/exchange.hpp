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

// Geometry shared between the semantic and detection branches: thing
// clusters in a class map become extra region proposals, and detection
// boxes grow to cover the cluster they overlap most.

#ifndef PANFUSE_EXCHANGE_HPP_
#define PANFUSE_EXCHANGE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "panfuse/core.hpp"

namespace panfuse {

enum class Connectivity { kFour = 4, kEight = 8 };

struct ExchangeConfig {
  Connectivity connectivity = Connectivity::kEight;
  std::size_t min_cluster_area = 16;

  void validate() const;
};

struct ThingsCluster {
  ClassId class_id = 0;
  // Linear pixel indices (y * width + x) in raster order.
  std::vector<std::uint32_t> pixels;
  BoundingBox bbox;
  std::size_t area = 0;
};

struct RegionProposal {
  ClassId class_id = 0;
  BoundingBox box;

  friend bool operator==(const RegionProposal&, const RegionProposal&) = default;
};

// Two-pass union-find labelling of equal-class pixels. Returns a label per
// pixel in [0, count) and the component count; `include` selects which
// classes are labelled (others get -1).
struct ComponentLabels {
  Grid<std::int32_t> labels;
  std::size_t count = 0;
};

ComponentLabels label_components(const ClassGrid& grid, Connectivity connectivity,
                                 const std::function<bool(ClassId)>& include);

// Connected components of same-thing-class pixels, sorted by
// (class_id, bbox.y0, bbox.x0, first pixel). Components smaller than
// min_cluster_area are dropped.
std::vector<ThingsCluster> extract_things_clusters(const ClassGrid& grid,
                                                   const ClassCatalog& catalog,
                                                   const ExchangeConfig& config);

std::vector<RegionProposal> propose_boxes(std::span<const ThingsCluster> clusters);

// One box per detection. A detection matched to the same-class cluster with
// the most pixels inside its box (at least one) grows to the union of both
// boxes; ties go to the earlier cluster.
std::vector<BoundingBox> expand_boxes(const InstanceSet& instances,
                                      std::span<const ThingsCluster> clusters);

}  // namespace panfuse

#endif  // PANFUSE_EXCHANGE_HPP_
