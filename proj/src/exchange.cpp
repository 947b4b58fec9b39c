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

#include "panfuse/exchange.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

namespace panfuse {
namespace {

class DisjointSets {
 public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }
  std::int32_t find(std::int32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller root wins so provisional order is stable.
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::int32_t> parent_;
};

}  // namespace

void ExchangeConfig::validate() const {
  if (connectivity != Connectivity::kFour && connectivity != Connectivity::kEight) {
    throw ConfigError("connectivity must be 4 or 8");
  }
  if (min_cluster_area < 1) throw ConfigError("min_cluster_area must be >= 1");
}

ComponentLabels label_components(const ClassGrid& grid, Connectivity connectivity,
                                 const std::function<bool(ClassId)>& include) {
  const int h = grid.height;
  const int w = grid.width;
  Grid<std::int32_t> labels(h, w, -1);
  DisjointSets sets;
  const bool eight = connectivity == Connectivity::kEight;

  // First pass: provisional labels from the already-visited neighbours.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const ClassId c = grid(y, x);
      if (!include(c)) continue;
      std::int32_t label = -1;
      const auto visit = [&](int ny, int nx) {
        if (ny < 0 || nx < 0 || nx >= w) return;
        if (grid(ny, nx) != c) return;
        const std::int32_t n = labels(ny, nx);
        if (label < 0) {
          label = n;
        } else {
          sets.unite(label, n);
        }
      };
      visit(y, x - 1);
      if (eight) visit(y - 1, x - 1);
      visit(y - 1, x);
      if (eight) visit(y - 1, x + 1);
      labels(y, x) = label >= 0 ? label : sets.make();
    }
  }

  // Second pass: resolve equivalences, renumber densely in raster order.
  std::vector<std::int32_t> dense(sets.size(), -1);
  std::size_t count = 0;
  for (std::int32_t& l : labels.data) {
    if (l < 0) continue;
    const std::int32_t root = sets.find(l);
    if (dense[root] < 0) dense[root] = static_cast<std::int32_t>(count++);
    l = dense[root];
  }
  return {std::move(labels), count};
}

std::vector<ThingsCluster> extract_things_clusters(const ClassGrid& grid,
                                                   const ClassCatalog& catalog,
                                                   const ExchangeConfig& config) {
  config.validate();
  const ComponentLabels components = label_components(
      grid, config.connectivity, [&](ClassId c) { return catalog.is_thing(c); });

  std::vector<ThingsCluster> clusters(components.count);
  for (std::size_t p = 0; p < grid.data.size(); ++p) {
    const std::int32_t l = components.labels.data[p];
    if (l < 0) continue;
    const int y = static_cast<int>(p / grid.width);
    const int x = static_cast<int>(p % grid.width);
    ThingsCluster& cl = clusters[l];
    if (cl.pixels.empty()) {
      cl.class_id = grid.data[p];
      cl.bbox = {x, y, x, y};
    } else {
      cl.bbox = box_union(cl.bbox, {x, y, x, y});
    }
    cl.pixels.push_back(static_cast<std::uint32_t>(p));
  }
  for (ThingsCluster& cl : clusters) cl.area = cl.pixels.size();

  std::erase_if(clusters, [&](const ThingsCluster& cl) {
    return cl.area < config.min_cluster_area;
  });
  std::sort(clusters.begin(), clusters.end(),
            [](const ThingsCluster& a, const ThingsCluster& b) {
              return std::tie(a.class_id, a.bbox.y0, a.bbox.x0, a.pixels.front()) <
                     std::tie(b.class_id, b.bbox.y0, b.bbox.x0, b.pixels.front());
            });
  return clusters;
}

std::vector<RegionProposal> propose_boxes(std::span<const ThingsCluster> clusters) {
  std::vector<RegionProposal> out;
  out.reserve(clusters.size());
  for (const ThingsCluster& cl : clusters) out.push_back({cl.class_id, cl.bbox});
  return out;
}

std::vector<BoundingBox> expand_boxes(const InstanceSet& instances,
                                      std::span<const ThingsCluster> clusters) {
  const int h = instances.height;
  const int w = instances.width;
  Grid<std::int32_t> owner(h, w, -1);
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    for (std::uint32_t p : clusters[k].pixels) {
      if (p >= owner.data.size()) {
        throw ValidationError("cluster pixel outside the image");
      }
      owner.data[p] = static_cast<std::int32_t>(k);
    }
  }

  std::vector<BoundingBox> out;
  out.reserve(instances.detections.size());
  std::vector<std::size_t> overlap(clusters.size());
  for (const InstanceDetection& d : instances.detections) {
    if (!d.box.fits(h, w)) throw ValidationError("detection box outside the image");
    std::fill(overlap.begin(), overlap.end(), 0);
    for (int y = d.box.y0; y <= d.box.y1; ++y) {
      for (int x = d.box.x0; x <= d.box.x1; ++x) {
        const std::int32_t k = owner(y, x);
        if (k >= 0 && clusters[k].class_id == d.class_id) ++overlap[k];
      }
    }
    std::size_t best = 0;
    std::int32_t match = -1;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      if (overlap[k] > best) {
        best = overlap[k];
        match = static_cast<std::int32_t>(k);
      }
    }
    out.push_back(match < 0 ? d.box : box_union(d.box, clusters[match].bbox));
  }
  return out;
}

}  // namespace panfuse
