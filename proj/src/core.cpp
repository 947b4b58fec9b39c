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

#include "panfuse/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_set>

#include "panfuse/kernels.hpp"

namespace panfuse {

ClassCatalog::ClassCatalog(std::vector<ClassInfo> classes)
    : classes_(std::move(classes)) {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const ClassInfo& c = classes_[i];
    if (c.id == kVoidId) {
      throw ValidationError("class '" + c.name + "' uses the reserved void id 0");
    }
    if (!index_.emplace(c.id, i).second) {
      throw ValidationError("duplicate class id " + std::to_string(c.id));
    }
  }
}

const ClassInfo& ClassCatalog::info(ClassId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw ValidationError("class id " + std::to_string(id) +
                          " is not in the catalog");
  }
  return classes_[it->second];
}

bool ClassCatalog::is_thing(ClassId id) const {
  const auto it = index_.find(id);
  return it != index_.end() && classes_[it->second].kind == ClassKind::kThing;
}

bool ClassCatalog::is_stuff(ClassId id) const {
  const auto it = index_.find(id);
  return it != index_.end() && classes_[it->second].kind == ClassKind::kStuff;
}

std::size_t ClassCatalog::num_things() const {
  return static_cast<std::size_t>(
      std::count_if(classes_.begin(), classes_.end(),
                    [](const ClassInfo& c) { return c.kind == ClassKind::kThing; }));
}

std::size_t ClassCatalog::num_stuff() const {
  return classes_.size() - num_things();
}

void ClassCatalog::require_fusable() const {
  if (num_stuff() == 0) throw ConfigError("catalog has no stuff classes");
  if (num_things() == 0) throw ConfigError("catalog has no thing classes");
}

SemanticScoreMap::SemanticScoreMap(int height, int width,
                                   std::vector<ClassId> channel_order)
    : height_(height), width_(width), channel_order_(std::move(channel_order)) {
  if (height < 0 || width < 0) throw ValidationError("negative score map size");
  data_.assign(pixels() * channels(), 0.0f);
}

SemanticScoreMap::SemanticScoreMap(int height, int width,
                                   std::vector<ClassId> channel_order,
                                   std::vector<float> data)
    : height_(height),
      width_(width),
      channel_order_(std::move(channel_order)),
      data_(std::move(data)) {
  if (height < 0 || width < 0) throw ValidationError("negative score map size");
  if (data_.size() != pixels() * channels()) {
    throw ValidationError("score data has " + std::to_string(data_.size()) +
                          " values, expected " +
                          std::to_string(pixels() * channels()));
  }
}

void SemanticScoreMap::validate(const ClassCatalog& catalog) const {
  if (channels() == 0) throw ValidationError("score map has no channels");
  std::unordered_set<ClassId> seen;
  for (ClassId id : channel_order_) {
    if (!catalog.contains(id)) {
      throw ValidationError("channel class " + std::to_string(id) +
                            " is not in the catalog");
    }
    if (!seen.insert(id).second) {
      throw ValidationError("channel class " + std::to_string(id) +
                            " appears twice");
    }
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw ValidationError("non-finite score value");
  }
}

BoundingBox box_union(const BoundingBox& a, const BoundingBox& b) {
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
          std::max(a.y1, b.y1)};
}

void InstanceSet::validate(const ClassCatalog& catalog) const {
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const InstanceDetection& d = detections[i];
    const std::string where = "detection " + std::to_string(i) + ": ";
    if (!catalog.is_thing(d.class_id)) {
      throw ValidationError(where + "class " + std::to_string(d.class_id) +
                            " is not a thing class");
    }
    if (!(d.confidence >= 0.0f && d.confidence <= 1.0f)) {
      throw ValidationError(where + "confidence outside [0, 1]");
    }
    if (!d.box.fits(height, width)) {
      throw ValidationError(where + "box outside the image");
    }
    if (d.mask.size() != d.box.area()) {
      throw ValidationError(where + "mask size does not match box extent");
    }
    for (float v : d.mask) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw ValidationError(where + "mask value outside [0, 1]");
      }
    }
  }
}

SegmentId encode_segment_id(ClassId class_id, std::uint32_t instance_index) {
  if (instance_index >= kSegmentIdDivisor) {
    throw CapacityError("instance index " + std::to_string(instance_index) +
                        " exceeds " + std::to_string(kMaxInstancesPerClass));
  }
  const std::uint64_t packed =
      static_cast<std::uint64_t>(class_id) * kSegmentIdDivisor + instance_index;
  if (packed > std::numeric_limits<std::uint32_t>::max()) {
    throw CapacityError("class id " + std::to_string(class_id) +
                        " too large for segment id packing");
  }
  return SegmentId{static_cast<std::uint32_t>(packed)};
}

std::pair<ClassId, std::uint32_t> decode_segment_id(SegmentId id) {
  return {id.packed / kSegmentIdDivisor, id.packed % kSegmentIdDivisor};
}

PanopticMap::PanopticMap(int height, int width)
    : PanopticMap(height, width,
                  std::vector<std::uint32_t>(static_cast<std::size_t>(height) *
                                             static_cast<std::size_t>(width))) {}

PanopticMap::PanopticMap(int height, int width, std::vector<std::uint32_t> ids)
    : height_(height), width_(width), ids_(std::move(ids)) {
  if (height < 0 || width < 0) throw ValidationError("negative map size");
  if (ids_.size() !=
      static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw ValidationError("label raster size does not match map dimensions");
  }
  rebuild_segments();
}

void PanopticMap::rebuild_segments() {
  std::map<std::uint32_t, std::uint64_t> areas;
  for (std::uint32_t id : ids_) {
    if (id != 0) ++areas[id];
  }
  segments_.clear();
  segments_.reserve(areas.size());
  for (const auto& [id, area] : areas) {
    const auto [cls, idx] = decode_segment_id(SegmentId{id});
    segments_.push_back({id, cls, idx, area});
  }
}

void PanopticMap::validate(const ClassCatalog& catalog) const {
  for (const PanopticSegment& s : segments_) {
    const std::string what = "segment " + std::to_string(s.segment_id) + ": ";
    if (s.class_id == kVoidId) {
      throw ValidationError(what + "void class with a non-zero instance index");
    }
    const ClassInfo& info = catalog.info(s.class_id);
    if (info.kind == ClassKind::kStuff && s.instance_index != 0) {
      throw ValidationError(what + "stuff class with a non-zero instance index");
    }
    if (info.kind == ClassKind::kThing && s.instance_index == 0) {
      throw ValidationError(what + "thing class with instance index 0");
    }
  }
}

bool is_normalized(const SemanticScoreMap& scores) {
  const std::size_t channels = scores.channels();
  const auto data = scores.data();
  for (std::size_t p = 0; p < scores.pixels(); ++p) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const float v = data[p * channels + c];
      if (!(v >= 0.0f)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) return false;
  }
  return true;
}

SemanticScoreMap normalize_scores(const SemanticScoreMap& scores) {
  for (float v : scores.data()) {
    if (!std::isfinite(v)) throw ValidationError("non-finite score value");
  }
  if (scores.channels() == 0 || is_normalized(scores)) return scores;
  SemanticScoreMap out(scores.height(), scores.width(), scores.channel_order());
  kernels::active().softmax(scores.data().data(), out.mutable_data().data(),
                            scores.pixels(), scores.channels());
  return out;
}

ClassGrid argmax_map(const SemanticScoreMap& scores) {
  if (scores.channels() == 0) throw ValidationError("score map has no channels");
  std::vector<std::int32_t> best(scores.pixels());
  kernels::active().argmax(scores.data().data(), scores.pixels(),
                           scores.channels(), nullptr, best.data(), nullptr);
  ClassGrid grid(scores.height(), scores.width());
  const auto& order = scores.channel_order();
  for (std::size_t p = 0; p < best.size(); ++p) grid.data[p] = order[best[p]];
  return grid;
}

float float_at_least(double value) {
  float f = static_cast<float>(value);
  if (static_cast<double>(f) < value) {
    f = std::nextafter(f, std::numeric_limits<float>::infinity());
  }
  return f;
}

}  // namespace panfuse
