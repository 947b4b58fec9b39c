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

// On-disk formats.
//
// PSTF tensor (little-endian):
//   "PSTF" | u16 version = 1 | u8 dtype (1 = float32) | u8 rank |
//   rank x u32 dims | product(dims) x float32 payload
//
// Panoptic PNG: 24-bit RGB with id = R + 256 G + 65536 B, next to a sidecar
// JSON {"height", "width", "segments": [{id, class_id, instance_index, area}]}
// sharing the PNG's stem.
//
// Catalog JSON: {"void_id": 0, "classes": [{id, name, kind}]}.
//
// Instance manifest JSON: {"image": {height, width}, "detections":
//   [{class_id, confidence, box: [x0, y0, x1, y1], mask_file}]}, mask files
//   being rank-2 PSTF tensors relative to the manifest's directory.

#ifndef PANFUSE_IO_HPP_
#define PANFUSE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "panfuse/core.hpp"
#include "panfuse/exchange.hpp"
#include "panfuse/fusion.hpp"
#include "panfuse/metrics.hpp"

namespace panfuse::io {

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
// Throws FormatError on bad magic, unsupported version or dtype, or a
// payload shorter or longer than the declared dims.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);

// Semantic scores as a rank-3 (H, W, C) tensor whose channels follow the
// catalog's class order.
SemanticScoreMap read_semantic(const std::filesystem::path& path,
                               const ClassCatalog& catalog);
void write_semantic(const SemanticScoreMap& scores, const ClassCatalog& catalog,
                    const std::filesystem::path& path);

ClassCatalog parse_catalog(const nlohmann::json& doc);
nlohmann::ordered_json catalog_to_json(const ClassCatalog& catalog);
ClassCatalog read_catalog(const std::filesystem::path& path);
void write_catalog(const ClassCatalog& catalog, const std::filesystem::path& path);

// Built-in catalogs: cityscapes (19 classes) and vistas (65 classes).
ClassCatalog catalog_profile(DatasetProfile profile);

InstanceSet read_instance_manifest(const std::filesystem::path& path);
// Writes the manifest and one mask tensor per detection, named
// "<stem>_mask_<i>.pstf" next to the manifest.
void write_instance_manifest(const InstanceSet& instances,
                             const std::filesystem::path& path);

// Writes "<path>" (PNG) and the sidecar with the same stem and ".json".
void write_panoptic(const PanopticMap& map, const std::filesystem::path& png_path);
PanopticMap read_panoptic(const std::filesystem::path& png_path);
std::filesystem::path sidecar_path(const std::filesystem::path& png_path);

// Keys in fixed order: pq, sq, rq, pq_things, pq_stuff, per_class, then the
// participating class counts.
nlohmann::ordered_json metrics_to_json(const MetricsReport& report,
                                       const ClassCatalog& catalog);

nlohmann::ordered_json proposals_to_json(int height, int width,
                                         std::span<const ThingsCluster> clusters,
                                         std::span<const RegionProposal> proposals);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace panfuse::io

#endif  // PANFUSE_IO_HPP_
