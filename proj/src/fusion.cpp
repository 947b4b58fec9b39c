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

#include "panfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "panfuse/kernels.hpp"

namespace panfuse {

DatasetProfile parse_profile(std::string_view name) {
  if (name == "cityscapes") return DatasetProfile::kCityscapes;
  if (name == "vistas") return DatasetProfile::kVistas;
  throw ValidationError("unknown profile '" + std::string(name) +
                        "' (expected cityscapes or vistas)");
}

std::string_view profile_name(DatasetProfile profile) {
  return profile == DatasetProfile::kCityscapes ? "cityscapes" : "vistas";
}

void FusionConfig::validate() const {
  const auto check = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(std::string(name) + " must lie in [0, 1], got " +
                        std::to_string(v));
    }
  };
  check(alpha, "alpha");
  check(stuff_fraction, "stuff_fraction");
  check(mask_bin_threshold, "mask_bin_threshold");
  check(min_confidence, "min_confidence");
}

FusionConfig FusionConfig::for_profile(DatasetProfile profile) {
  FusionConfig config;
  config.alpha = 0.25;
  config.stuff_fraction =
      profile == DatasetProfile::kCityscapes ? 1.0 / 512.0 : 1.0 / 256.0;
  return config;
}

std::uint64_t stuff_pixel_threshold(double fraction, int height, int width) {
  const double pixels = static_cast<double>(height) * static_cast<double>(width);
  return static_cast<std::uint64_t>(std::ceil(fraction * pixels));
}

std::size_t PastedEntry::pixel_count() const {
  return static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [](float s) { return s > 0.0f; }));
}

PastedInstances paste_masks(const InstanceSet& instances,
                            const FusionConfig& config) {
  config.validate();
  const float threshold = float_at_least(config.mask_bin_threshold);
  const auto& binarize = kernels::active().binarize;

  PastedInstances out{instances.height, instances.width, {}};
  for (std::size_t i = 0; i < instances.detections.size(); ++i) {
    const InstanceDetection& d = instances.detections[i];
    if (!d.box.fits(instances.height, instances.width)) {
      throw ValidationError("detection " + std::to_string(i) +
                            ": box outside the image");
    }
    if (d.mask.size() != d.box.area()) {
      throw ValidationError("detection " + std::to_string(i) +
                            ": mask size does not match box extent");
    }
    if (static_cast<double>(d.confidence) < config.min_confidence) continue;

    PastedEntry entry{i, d.class_id, d.confidence, d.box, {}};
    entry.scores.resize(d.mask.size());
    binarize(d.mask.data(), d.mask.size(), threshold, entry.scores.data());
    out.entries.push_back(std::move(entry));
  }
  return out;
}

InstanceAssignment resolve_overlaps(const PastedInstances& pasted) {
  InstanceAssignment assignment(pasted.height, pasted.width, kUnassigned);
  Grid<float> best_score(pasted.height, pasted.width, 0.0f);
  Grid<float> best_confidence(pasted.height, pasted.width, 0.0f);
  const auto& claim = kernels::active().claim;

  for (std::size_t e = 0; e < pasted.entries.size(); ++e) {
    const PastedEntry& entry = pasted.entries[e];
    const BoundingBox& b = entry.box;
    const auto w = static_cast<std::size_t>(b.width());
    for (int y = b.y0; y <= b.y1; ++y) {
      claim(entry.scores.data() + static_cast<std::size_t>(y - b.y0) * w, w,
            entry.confidence, static_cast<std::int32_t>(e),
            &best_score(y, b.x0), &best_confidence(y, b.x0),
            &assignment(y, b.x0));
    }
  }
  return assignment;
}

ClassGrid suppress_things(const SemanticScoreMap& normalized,
                          const ClassCatalog& catalog,
                          const FusionConfig& config) {
  if (catalog.num_stuff() == 0) throw ConfigError("catalog has no stuff classes");
  config.validate();
  normalized.validate(catalog);

  const auto& order = normalized.channel_order();
  const std::size_t channels = order.size();
  std::vector<std::uint8_t> stuff_mask(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    stuff_mask[c] = catalog.is_stuff(order[c]) ? 1 : 0;
  }

  const std::size_t pixels = normalized.pixels();
  std::vector<std::int32_t> best(pixels);
  std::vector<std::int32_t> best_stuff(pixels);
  const float* scores = normalized.data().data();
  kernels::active().argmax(scores, pixels, channels, stuff_mask.data(),
                           best.data(), best_stuff.data());

  const float alpha = float_at_least(config.alpha);
  ClassGrid out(normalized.height(), normalized.width(), kVoidId);
  for (std::size_t p = 0; p < pixels; ++p) {
    if (stuff_mask[best[p]] != 0) {
      out.data[p] = order[best[p]];
      continue;
    }
    const std::int32_t s = best_stuff[p];
    if (s >= 0 && scores[p * channels + s] >= alpha) out.data[p] = order[s];
  }
  return out;
}

ClassGrid remove_small_stuff(const ClassGrid& stuff,
                             const SemanticScoreMap& normalized,
                             const ClassCatalog& catalog,
                             const FusionConfig& config) {
  config.validate();
  if (stuff.height != normalized.height() || stuff.width != normalized.width()) {
    throw ValidationError("stuff grid and score map dimensions differ");
  }

  std::unordered_map<ClassId, std::uint64_t> counts;
  for (ClassId c : stuff.data) {
    if (c == kVoidId) continue;
    if (!catalog.is_stuff(c)) {
      throw ValidationError("stuff grid contains non-stuff class " +
                            std::to_string(c));
    }
    ++counts[c];
  }

  const std::uint64_t threshold =
      stuff_pixel_threshold(config.stuff_fraction, stuff.height, stuff.width);
  std::unordered_set<ClassId> removed;
  for (const auto& [c, n] : counts) {
    if (n < threshold) removed.insert(c);
  }
  if (removed.empty()) return stuff;

  // Substitution targets: channels of stuff classes that keep their pixels.
  const auto& order = normalized.channel_order();
  std::vector<std::size_t> targets;
  for (std::size_t ch = 0; ch < order.size(); ++ch) {
    const auto it = counts.find(order[ch]);
    if (it != counts.end() && !removed.count(order[ch])) targets.push_back(ch);
  }

  const float alpha = float_at_least(config.alpha);
  const float* scores = normalized.data().data();
  const std::size_t channels = order.size();
  ClassGrid out = stuff;
  for (std::size_t p = 0; p < out.data.size(); ++p) {
    if (out.data[p] == kVoidId || !removed.count(out.data[p])) continue;
    ClassId replacement = kVoidId;
    float top = 0.0f;
    bool found = false;
    for (std::size_t ch : targets) {
      const float s = scores[p * channels + ch];
      if (!found || s > top) {
        top = s;
        replacement = order[ch];
        found = true;
      }
    }
    out.data[p] = (found && top >= alpha) ? replacement : kVoidId;
  }
  return out;
}

PanopticMap overlay(const ClassGrid& stuff, const InstanceAssignment& assignment,
                    const PastedInstances& pasted, const ClassCatalog& catalog) {
  if (stuff.height != assignment.height || stuff.width != assignment.width ||
      stuff.height != pasted.height || stuff.width != pasted.width) {
    throw ValidationError("overlay inputs have different dimensions");
  }

  std::vector<std::uint64_t> claimed(pasted.entries.size(), 0);
  for (std::int32_t e : assignment.data) {
    if (e == kUnassigned) continue;
    if (e < 0 || static_cast<std::size_t>(e) >= claimed.size()) {
      throw ValidationError("assignment refers to a missing entry");
    }
    ++claimed[e];
  }

  // Per class, visible entries ordered by descending confidence.
  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t e = 0; e < pasted.entries.size(); ++e) {
    if (claimed[e] > 0) by_class[pasted.entries[e].class_id].push_back(e);
  }
  std::vector<std::uint32_t> entry_id(pasted.entries.size(), 0);
  for (auto& [cls, entries] : by_class) {
    if (entries.size() > kMaxInstancesPerClass) {
      throw CapacityError("class " + std::to_string(cls) + " has " +
                          std::to_string(entries.size()) +
                          " instances, more than " +
                          std::to_string(kMaxInstancesPerClass));
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [&](std::size_t a, std::size_t b) {
                       return pasted.entries[a].confidence >
                              pasted.entries[b].confidence;
                     });
    for (std::size_t k = 0; k < entries.size(); ++k) {
      entry_id[entries[k]] =
          encode_segment_id(cls, static_cast<std::uint32_t>(k + 1)).packed;
    }
  }

  std::vector<std::uint32_t> ids(stuff.data.size());
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const std::int32_t e = assignment.data[p];
    if (e != kUnassigned) {
      ids[p] = entry_id[e];
      continue;
    }
    const ClassId c = stuff.data[p];
    if (c != kVoidId && !catalog.is_stuff(c)) {
      throw ValidationError("stuff grid contains non-stuff class " +
                            std::to_string(c));
    }
    ids[p] = encode_segment_id(c, 0).packed;
  }
  return PanopticMap(stuff.height, stuff.width, std::move(ids));
}

PanopticMap fuse(const SemanticScoreMap& scores, const InstanceSet& instances,
                 const ClassCatalog& catalog, const FusionConfig& config) {
  catalog.require_fusable();
  config.validate();
  scores.validate(catalog);
  instances.validate(catalog);
  if (scores.height() != instances.height || scores.width() != instances.width) {
    throw ValidationError("score map and instance set dimensions differ");
  }

  const SemanticScoreMap normalized = normalize_scores(scores);

  const PastedInstances pasted = paste_masks(instances, config);
  const InstanceAssignment assignment = resolve_overlaps(pasted);

  const ClassGrid suppressed = suppress_things(normalized, catalog, config);
  const ClassGrid stuff = remove_small_stuff(suppressed, normalized, catalog, config);

  return overlay(stuff, assignment, pasted, catalog);
}

}  // namespace panfuse
