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

#ifndef PANFUSE_CORE_HPP_
#define PANFUSE_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace panfuse {

// Error taxonomy. The CLI maps FormatError to exit code 2 and every other
// Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

using ClassId = std::uint32_t;

inline constexpr ClassId kVoidId = 0;
inline constexpr std::uint32_t kMaxInstancesPerClass = 999;
inline constexpr std::uint32_t kSegmentIdDivisor = 1000;

enum class ClassKind : std::uint8_t { kThing, kStuff };

struct ClassInfo {
  ClassId id = 0;
  std::string name;
  ClassKind kind = ClassKind::kStuff;

  friend bool operator==(const ClassInfo&, const ClassInfo&) = default;
};

// The label universe. Ids are unique and strictly positive; id 0 is void.
class ClassCatalog {
 public:
  ClassCatalog() = default;
  explicit ClassCatalog(std::vector<ClassInfo> classes);

  const std::vector<ClassInfo>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  ClassId void_id() const { return kVoidId; }

  bool contains(ClassId id) const { return index_.count(id) != 0; }
  // Throws ValidationError for unknown ids.
  const ClassInfo& info(ClassId id) const;
  bool is_thing(ClassId id) const;
  bool is_stuff(ClassId id) const;

  std::size_t num_things() const;
  std::size_t num_stuff() const;

  // Fusion needs both kinds. Throws ConfigError otherwise.
  void require_fusable() const;

  friend bool operator==(const ClassCatalog& a, const ClassCatalog& b) {
    return a.classes_ == b.classes_;
  }

 private:
  std::vector<ClassInfo> classes_;
  std::unordered_map<ClassId, std::size_t> index_;
};

// Dense row-major 2-D raster.
template <typename T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int h, int w, T fill = T{})
      : height(h), width(w),
        data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  std::size_t pixels() const { return data.size(); }
  T& operator()(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  const T& operator()(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

using ClassGrid = Grid<ClassId>;

// Per-pixel, per-class scores. Layout is H x W x C, channel fastest.
class SemanticScoreMap {
 public:
  SemanticScoreMap() = default;
  SemanticScoreMap(int height, int width, std::vector<ClassId> channel_order);
  SemanticScoreMap(int height, int width, std::vector<ClassId> channel_order,
                   std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t channels() const { return channel_order_.size(); }
  std::size_t pixels() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  const std::vector<ClassId>& channel_order() const { return channel_order_; }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }

  std::span<const float> pixel(int y, int x) const {
    return std::span<const float>(data_).subspan(offset(y, x), channels());
  }
  float& at(int y, int x, std::size_t c) { return data_[offset(y, x) + c]; }
  float at(int y, int x, std::size_t c) const { return data_[offset(y, x) + c]; }

  // Every channel class exists in the catalog, channels are unique and all
  // values are finite. Throws ValidationError.
  void validate(const ClassCatalog& catalog) const;

  friend bool operator==(const SemanticScoreMap&,
                         const SemanticScoreMap&) = default;

 private:
  std::size_t offset(int y, int x) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels();
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<ClassId> channel_order_;
  std::vector<float> data_;
};

// Inclusive pixel box.
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  std::size_t area() const {
    return static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
  }
  bool contains(int x, int y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool contains(const BoundingBox& o) const {
    return o.x0 >= x0 && o.y0 >= y0 && o.x1 <= x1 && o.y1 <= y1;
  }
  bool fits(int image_height, int image_width) const {
    return 0 <= x0 && x0 <= x1 && x1 < image_width && 0 <= y0 && y0 <= y1 &&
           y1 < image_height;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

BoundingBox box_union(const BoundingBox& a, const BoundingBox& b);

struct InstanceDetection {
  ClassId class_id = 0;
  float confidence = 0.0f;
  BoundingBox box;
  // Box-local soft mask, row-major, box.height() x box.width().
  std::vector<float> mask;

  float mask_at(int x, int y) const {
    return mask[static_cast<std::size_t>(y - box.y0) * box.width() + (x - box.x0)];
  }

  friend bool operator==(const InstanceDetection&,
                         const InstanceDetection&) = default;
};

struct InstanceSet {
  int height = 0;
  int width = 0;
  // Order is significant: the index is the final tie-break key.
  std::vector<InstanceDetection> detections;

  // Boxes inside the image, masks sized to their boxes with values in
  // [0, 1], confidences in [0, 1], classes are THING classes.
  void validate(const ClassCatalog& catalog) const;

  friend bool operator==(const InstanceSet&, const InstanceSet&) = default;
};

struct SegmentId {
  std::uint32_t packed = 0;

  friend bool operator==(const SegmentId&, const SegmentId&) = default;
  friend auto operator<=>(const SegmentId&, const SegmentId&) = default;
};

// packed = class_id * 1000 + instance_index. Throws CapacityError when the
// index is >= 1000 or the packed value overflows 32 bits.
SegmentId encode_segment_id(ClassId class_id, std::uint32_t instance_index);
std::pair<ClassId, std::uint32_t> decode_segment_id(SegmentId id);

struct PanopticSegment {
  std::uint32_t segment_id = 0;
  ClassId class_id = 0;
  std::uint32_t instance_index = 0;
  std::uint64_t area = 0;

  friend bool operator==(const PanopticSegment&, const PanopticSegment&) = default;
};

// Final panoptic output: one packed segment id per pixel. The segment list
// is derived from the raster and sorted by segment id; void is not listed.
class PanopticMap {
 public:
  PanopticMap() = default;
  // All-void map.
  PanopticMap(int height, int width);
  PanopticMap(int height, int width, std::vector<std::uint32_t> ids);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixels() const { return ids_.size(); }

  std::span<const std::uint32_t> ids() const { return ids_; }
  std::uint32_t id_at(int y, int x) const {
    return ids_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::pair<ClassId, std::uint32_t> at(int y, int x) const {
    return decode_segment_id(SegmentId{id_at(y, x)});
  }
  const std::vector<PanopticSegment>& segments() const { return segments_; }

  // STUFF pixels carry index 0, THING pixels index >= 1, void only as
  // (0, 0), every class in the catalog. Throws ValidationError.
  void validate(const ClassCatalog& catalog) const;

  friend bool operator==(const PanopticMap&, const PanopticMap&) = default;

 private:
  void rebuild_segments();

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint32_t> ids_;
  std::vector<PanopticSegment> segments_;
};

// Per-pixel softmax across channels. A map whose pixels already are
// probability distributions (non-negative, summing to 1 within 1e-6) is
// returned unchanged, which makes the operation idempotent.
SemanticScoreMap normalize_scores(const SemanticScoreMap& scores);

// True when every pixel is non-negative and sums to 1 within 1e-6.
bool is_normalized(const SemanticScoreMap& scores);

// Class id of the maximal channel per pixel; ties go to the lowest channel.
ClassGrid argmax_map(const SemanticScoreMap& scores);

// Smallest float f with f >= value, so that for any float s the test
// `s >= value` (in double) equals `s >= float_at_least(value)`.
float float_at_least(double value);

}  // namespace panfuse

#endif  // PANFUSE_CORE_HPP_
