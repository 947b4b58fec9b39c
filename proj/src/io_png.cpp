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

#include <png.h>

#include <map>

#include "panfuse/io.hpp"

namespace panfuse::io {
namespace {

constexpr std::uint32_t kMaxRgbId = (1u << 24) - 1;

}  // namespace

void write_panoptic(const PanopticMap& map, const std::filesystem::path& png_path) {
  std::vector<std::uint8_t> rgb(map.pixels() * 3);
  const auto ids = map.ids();
  for (std::size_t p = 0; p < ids.size(); ++p) {
    if (ids[p] > kMaxRgbId) {
      throw CapacityError("segment id " + std::to_string(ids[p]) +
                          " does not fit in 24-bit RGB");
    }
    rgb[3 * p] = static_cast<std::uint8_t>(ids[p] & 0xff);
    rgb[3 * p + 1] = static_cast<std::uint8_t>((ids[p] >> 8) & 0xff);
    rgb[3 * p + 2] = static_cast<std::uint8_t>((ids[p] >> 16) & 0xff);
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(map.width());
  image.height = static_cast<png_uint_32>(map.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, png_path.string().c_str(), 0, rgb.data(), 0,
                               nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ValidationError("cannot write " + png_path.string() + ": " + msg);
  }

  nlohmann::ordered_json doc;
  doc["height"] = map.height();
  doc["width"] = map.width();
  doc["segments"] = nlohmann::ordered_json::array();
  for (const PanopticSegment& s : map.segments()) {
    nlohmann::ordered_json item;
    item["id"] = s.segment_id;
    item["class_id"] = s.class_id;
    item["instance_index"] = s.instance_index;
    item["area"] = s.area;
    doc["segments"].push_back(std::move(item));
  }
  write_text(sidecar_path(png_path), doc.dump(2) + "\n");
}

PanopticMap read_panoptic(const std::filesystem::path& png_path) {
  const std::string where = png_path.string();
  if (!std::filesystem::exists(png_path)) {
    throw ValidationError("cannot open " + where);
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, where.c_str())) {
    throw FormatError(where + ": " + image.message);
  }
  if (image.format != PNG_FORMAT_RGB) {
    png_image_free(&image);
    throw FormatError(where + ": panoptic PNG must be 8-bit RGB without alpha");
  }
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(where + ": " + msg);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(h) * w);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    ids[p] = rgb[3 * p] | (static_cast<std::uint32_t>(rgb[3 * p + 1]) << 8) |
             (static_cast<std::uint32_t>(rgb[3 * p + 2]) << 16);
  }
  PanopticMap map(h, w, std::move(ids));

  nlohmann::json side;
  const auto side_path = sidecar_path(png_path);
  try {
    side = nlohmann::json::parse(read_text(side_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(side_path.string() + ": " + e.what());
  }
  try {
    if (side.contains("height") && (side.at("height").get<int>() != h ||
                                    side.at("width").get<int>() != w)) {
      throw FormatError(side_path.string() + ": dimensions differ from the raster");
    }
    std::map<std::uint32_t, PanopticSegment> listed;
    for (const auto& s : side.at("segments")) {
      PanopticSegment seg{s.at("id").get<std::uint32_t>(),
                          s.at("class_id").get<ClassId>(),
                          s.at("instance_index").get<std::uint32_t>(),
                          s.at("area").get<std::uint64_t>()};
      if (seg.instance_index >= kSegmentIdDivisor ||
          seg.segment_id != seg.class_id * kSegmentIdDivisor + seg.instance_index) {
        throw FormatError(side_path.string() + ": segment " +
                          std::to_string(seg.segment_id) +
                          " disagrees with its class and instance index");
      }
      if (!listed.emplace(seg.segment_id, seg).second) {
        throw FormatError(side_path.string() + ": duplicate segment " +
                          std::to_string(seg.segment_id));
      }
    }
    if (listed.size() != map.segments().size()) {
      throw FormatError(side_path.string() + ": sidecar lists " +
                        std::to_string(listed.size()) + " segments, raster has " +
                        std::to_string(map.segments().size()));
    }
    for (const PanopticSegment& s : map.segments()) {
      const auto it = listed.find(s.segment_id);
      if (it == listed.end() || !(it->second == s)) {
        throw FormatError(side_path.string() + ": segment " +
                          std::to_string(s.segment_id) +
                          " missing from the sidecar or with a different area");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side_path.string() + ": " + e.what());
  }
  return map;
}

}  // namespace panfuse::io
