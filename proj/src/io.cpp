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

#include "panfuse/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace panfuse::io {
namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'S', 'T', 'F'};

struct ProfileClass {
  ClassId id;
  const char* name;
  bool thing;
};

#include "catalog_profiles.inc"

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

template <typename T>
T field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("write failed for " + path.string());
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  if (tensor.dims.size() > 255) throw ValidationError("tensor rank above 255");
  std::uint64_t n = 1;
  for (std::uint32_t d : tensor.dims) n *= d;
  if (n != tensor.values.size()) {
    throw ValidationError("tensor dims do not match value count");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u16(out, kTensorVersion);
  out.push_back(kDtypeFloat32);
  out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
  for (std::uint32_t d : tensor.dims) put_u32(out, d);
  out.reserve(out.size() + 4 * tensor.values.size());
  for (float v : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("tensor header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad tensor magic (expected PSTF)");
  }
  const auto version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kTensorVersion) {
    throw FormatError("unsupported tensor version " + std::to_string(version));
  }
  if (bytes[6] != kDtypeFloat32) {
    throw FormatError("unsupported tensor dtype " + std::to_string(bytes[6]));
  }
  const std::size_t rank = bytes[7];
  const std::size_t header = 8 + 4 * rank;
  if (bytes.size() < header) throw FormatError("tensor dims truncated");
  Tensor t;
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    t.dims.push_back(get_u32(bytes.data() + 8 + 4 * i));
    n *= t.dims.back();
  }
  const std::size_t payload = bytes.size() - header;
  if (n > std::numeric_limits<std::size_t>::max() / 4 || payload < 4 * n) {
    throw FormatError("tensor payload truncated: " + std::to_string(payload) +
                      " bytes for " + std::to_string(n) + " values");
  }
  if (payload > 4 * n) throw FormatError("tensor payload has trailing bytes");
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.values[i] = std::bit_cast<float>(get_u32(bytes.data() + header + 4 * i));
  }
  return t;
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

SemanticScoreMap read_semantic(const std::filesystem::path& path,
                               const ClassCatalog& catalog) {
  Tensor t = read_tensor(path);
  if (t.dims.size() != 3) {
    throw FormatError(path.string() + ": semantic tensor must have rank 3 (H, W, C)");
  }
  if (t.dims[2] != catalog.size()) {
    throw ValidationError(path.string() + ": " + std::to_string(t.dims[2]) +
                          " channels but the catalog has " +
                          std::to_string(catalog.size()) + " classes");
  }
  std::vector<ClassId> order;
  for (const ClassInfo& c : catalog.classes()) order.push_back(c.id);
  return SemanticScoreMap(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                          std::move(order), std::move(t.values));
}

void write_semantic(const SemanticScoreMap& scores, const ClassCatalog& catalog,
                    const std::filesystem::path& path) {
  std::vector<ClassId> order;
  for (const ClassInfo& c : catalog.classes()) order.push_back(c.id);
  if (scores.channel_order() != order) {
    throw ValidationError("score channels do not follow the catalog order");
  }
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(scores.height()),
            static_cast<std::uint32_t>(scores.width()),
            static_cast<std::uint32_t>(scores.channels())};
  t.values.assign(scores.data().begin(), scores.data().end());
  write_tensor(t, path);
}

ClassCatalog parse_catalog(const nlohmann::json& doc) {
  const std::string where = "catalog";
  const auto void_id = field<std::int64_t>(doc, "void_id", where);
  if (void_id != 0) throw ValidationError("catalog void_id must be 0");
  if (!doc.contains("classes") || !doc["classes"].is_array()) throw FormatError("catalog: 'classes' must be an array");
  std::vector<ClassInfo> infos;
  for (const auto& c : doc["classes"]) {
    const auto id = field<std::int64_t>(c, "id", where);
    if (id <= 0 || id > std::numeric_limits<ClassId>::max()) {
      throw ValidationError("catalog: class ids must be positive, got " +
                            std::to_string(id));
    }
    const auto kind = field<std::string>(c, "kind", where);
    if (kind != "thing" && kind != "stuff") {
      throw FormatError("catalog: kind must be 'thing' or 'stuff', got '" + kind + "'");
    }
    infos.push_back({static_cast<ClassId>(id), field<std::string>(c, "name", where),
                     kind == "thing" ? ClassKind::kThing : ClassKind::kStuff});
  }
  return ClassCatalog(std::move(infos));
}

nlohmann::ordered_json catalog_to_json(const ClassCatalog& catalog) {
  nlohmann::ordered_json doc;
  doc["void_id"] = 0;
  doc["classes"] = nlohmann::ordered_json::array();
  for (const ClassInfo& c : catalog.classes()) {
    nlohmann::ordered_json item;
    item["id"] = c.id;
    item["name"] = c.name;
    item["kind"] = c.kind == ClassKind::kThing ? "thing" : "stuff";
    doc["classes"].push_back(std::move(item));
  }
  return doc;
}

ClassCatalog read_catalog(const std::filesystem::path& path) {
  try {
    return parse_catalog(read_json(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_catalog(const ClassCatalog& catalog, const std::filesystem::path& path) {
  write_text(path, catalog_to_json(catalog).dump(2) + "\n");
}

ClassCatalog catalog_profile(DatasetProfile profile) {
  const std::span<const ProfileClass> table =
      profile == DatasetProfile::kCityscapes
          ? std::span<const ProfileClass>(kCityscapesClasses)
          : std::span<const ProfileClass>(kVistasClasses);
  std::vector<ClassInfo> infos;
  for (const ProfileClass& c : table) {
    infos.push_back({c.id, c.name, c.thing ? ClassKind::kThing : ClassKind::kStuff});
  }
  return ClassCatalog(std::move(infos));
}

InstanceSet read_instance_manifest(const std::filesystem::path& path) {
  const nlohmann::json doc = read_json(path);
  const std::string where = path.string();
  InstanceSet set;
  const auto& image = doc.contains("image") ? doc.at("image") : nlohmann::json();
  set.height = field<int>(image, "height", where + ": image");
  set.width = field<int>(image, "width", where + ": image");
  if (set.height <= 0 || set.width <= 0) {
    throw ValidationError(where + ": image dimensions must be positive");
  }
  if (!doc.contains("detections") || !doc.at("detections").is_array()) {
    throw FormatError(where + ": 'detections' must be an array");
  }
  const auto dir = path.parent_path();
  for (const auto& d : doc.at("detections")) {
    const std::string at = where + ": detection " + std::to_string(set.detections.size());
    InstanceDetection det;
    const auto cls = field<std::int64_t>(d, "class_id", at);
    if (cls <= 0) throw ValidationError(at + ": class_id must be positive");
    det.class_id = static_cast<ClassId>(cls);
    det.confidence = field<float>(d, "confidence", at);
    const auto box = field<std::vector<int>>(d, "box", at);
    if (box.size() != 4) throw FormatError(at + ": box must have 4 entries");
    det.box = {box[0], box[1], box[2], box[3]};
    if (!det.box.fits(set.height, set.width)) {
      throw ValidationError(at + ": box outside the image");
    }
    const Tensor mask = read_tensor(dir / field<std::string>(d, "mask_file", at));
    if (mask.dims.size() != 2 ||
        mask.dims[0] != static_cast<std::uint32_t>(det.box.height()) ||
        mask.dims[1] != static_cast<std::uint32_t>(det.box.width())) {
      throw ValidationError(at + ": mask shape does not match the box extent");
    }
    det.mask = mask.values;
    set.detections.push_back(std::move(det));
  }
  return set;
}

void write_instance_manifest(const InstanceSet& instances,
                             const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["image"] = {{"height", instances.height}, {"width", instances.width}};
  doc["detections"] = nlohmann::ordered_json::array();
  const std::string stem = path.stem().string();
  for (std::size_t i = 0; i < instances.detections.size(); ++i) {
    const InstanceDetection& d = instances.detections[i];
    const std::string mask_name = stem + "_mask_" + std::to_string(i) + ".pstf";
    write_tensor({{static_cast<std::uint32_t>(d.box.height()),
                   static_cast<std::uint32_t>(d.box.width())},
                  d.mask},
                 path.parent_path() / mask_name);
    nlohmann::ordered_json item;
    item["class_id"] = d.class_id;
    item["confidence"] = d.confidence;
    item["box"] = {d.box.x0, d.box.y0, d.box.x1, d.box.y1};
    item["mask_file"] = mask_name;
    doc["detections"].push_back(std::move(item));
  }
  write_text(path, doc.dump(2) + "\n");
}

std::filesystem::path sidecar_path(const std::filesystem::path& png_path) {
  auto p = png_path;
  p.replace_extension(".json");
  return p;
}

nlohmann::ordered_json metrics_to_json(const MetricsReport& report,
                                       const ClassCatalog& catalog) {
  nlohmann::ordered_json doc;
  doc["pq"] = report.pq;
  doc["sq"] = report.sq;
  doc["rq"] = report.rq;
  doc["pq_things"] = report.pq_things;
  doc["pq_stuff"] = report.pq_stuff;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& [cls, m] : report.per_class) {
    const ClassInfo& info = catalog.info(cls);
    nlohmann::ordered_json item;
    item["name"] = info.name;
    item["kind"] = info.kind == ClassKind::kThing ? "thing" : "stuff";
    item["pq"] = m.pq;
    item["sq"] = m.sq;
    item["rq"] = m.rq;
    item["tp"] = m.tp;
    item["fp"] = m.fp;
    item["fn"] = m.fn;
    per_class[std::to_string(cls)] = std::move(item);
  }
  doc["per_class"] = std::move(per_class);
  doc["num_classes"] = report.num_classes;
  doc["num_things"] = report.num_things;
  doc["num_stuff"] = report.num_stuff;
  return doc;
}

nlohmann::ordered_json proposals_to_json(int height, int width,
                                         std::span<const ThingsCluster> clusters,
                                         std::span<const RegionProposal> proposals) {
  nlohmann::ordered_json doc;
  doc["image"] = {{"height", height}, {"width", width}};
  doc["proposals"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const RegionProposal& p = proposals[i];
    nlohmann::ordered_json item;
    item["class_id"] = p.class_id;
    item["box"] = {p.box.x0, p.box.y0, p.box.x1, p.box.y1};
    if (i < clusters.size()) item["area"] = clusters[i].area;
    doc["proposals"].push_back(std::move(item));
  }
  return doc;
}

}  // namespace panfuse::io
