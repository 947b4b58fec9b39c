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

// Merging of semantic and instance predictions into a panoptic map.
//
// Two branches feed the final overlay:
//   things: paste_masks -> resolve_overlaps
//   stuff:  argmax -> suppress_things -> remove_small_stuff
// and fuse() runs the whole pipeline on softmax-normalized scores.

#ifndef PANFUSE_FUSION_HPP_
#define PANFUSE_FUSION_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "panfuse/core.hpp"

namespace panfuse {

enum class DatasetProfile { kCityscapes, kVistas };

// Parses "cityscapes" / "vistas". Throws ValidationError otherwise.
DatasetProfile parse_profile(std::string_view name);
std::string_view profile_name(DatasetProfile profile);

struct FusionConfig {
  // Minimum score for a stuff class to replace a suppressed pixel.
  double alpha = 0.25;
  // Stuff classes covering fewer than ceil(stuff_fraction * H * W) pixels
  // are removed.
  double stuff_fraction = 1.0 / 512.0;
  // Soft mask cutoff; a pixel belongs to a mask when its score >= this.
  double mask_bin_threshold = 0.5;
  // Detections below this confidence are dropped.
  double min_confidence = 0.5;

  // Throws ConfigError when a field is outside [0, 1].
  void validate() const;

  static FusionConfig for_profile(DatasetProfile profile);
};

// ceil(fraction * height * width).
std::uint64_t stuff_pixel_threshold(double fraction, int height, int width);

// One admitted detection, with its mask binarized in box coordinates.
struct PastedEntry {
  std::size_t detection_index = 0;
  ClassId class_id = 0;
  float confidence = 0.0f;
  BoundingBox box;
  // Box-local; 0 means the pixel is not in the layer, otherwise the raw
  // mask score in (0, 1].
  std::vector<float> scores;

  float score_at(int x, int y) const {
    if (!box.contains(x, y)) return 0.0f;
    return scores[static_cast<std::size_t>(y - box.y0) * box.width() + (x - box.x0)];
  }
  std::size_t pixel_count() const;
};

struct PastedInstances {
  int height = 0;
  int width = 0;
  std::vector<PastedEntry> entries;
};

inline constexpr std::int32_t kUnassigned = -1;

// Entry index per pixel, or kUnassigned.
using InstanceAssignment = Grid<std::int32_t>;

PastedInstances paste_masks(const InstanceSet& instances,
                            const FusionConfig& config);

// Highest per-pixel score wins; ties go to the higher confidence, then to
// the lower entry index.
InstanceAssignment resolve_overlaps(const PastedInstances& pasted);

// Pixels whose argmax is a thing class become the best stuff class when its
// score is >= alpha, and void otherwise. Requires normalized scores.
ClassGrid suppress_things(const SemanticScoreMap& normalized,
                          const ClassCatalog& catalog,
                          const FusionConfig& config);

// Single-pass removal of stuff classes below the pixel threshold. Removed
// pixels go to the best surviving stuff class scoring >= alpha, or void.
ClassGrid remove_small_stuff(const ClassGrid& stuff,
                             const SemanticScoreMap& normalized,
                             const ClassCatalog& catalog,
                             const FusionConfig& config);

// Instance pixels take (class, index) with per-class indices assigned by
// descending confidence; every other pixel keeps its stuff or void label.
PanopticMap overlay(const ClassGrid& stuff, const InstanceAssignment& assignment,
                    const PastedInstances& pasted, const ClassCatalog& catalog);

PanopticMap fuse(const SemanticScoreMap& scores, const InstanceSet& instances,
                 const ClassCatalog& catalog, const FusionConfig& config);

}  // namespace panfuse

#endif  // PANFUSE_FUSION_HPP_
