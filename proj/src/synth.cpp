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

#include "panfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "panfuse/kernels.hpp"

namespace panfuse {
namespace {

constexpr int kMinSceneSide = 8;
constexpr std::size_t kMinThingArea = 8;
constexpr int kPlacementAttempts = 200;

struct Placed {
  ClassId class_id;
  float confidence;
};

bool inside_shape(bool ellipse, const BoundingBox& b, int x, int y) {
  if (!ellipse) return true;
  const double rx = b.width() / 2.0;
  const double ry = b.height() / 2.0;
  const double dx = (x + 0.5 - (b.x0 + rx)) / rx;
  const double dy = (y + 0.5 - (b.y0 + ry)) / ry;
  return dx * dx + dy * dy <= 1.0;
}

// Tight box of the pixels of `owner` equal to `id`.
BoundingBox tight_box(const Grid<std::int32_t>& owner, std::int32_t id) {
  BoundingBox b{owner.width, owner.height, -1, -1};
  for (int y = 0; y < owner.height; ++y) {
    for (int x = 0; x < owner.width; ++x) {
      if (owner(y, x) != id) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  return b;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  const int h = spec.height;
  const int w = spec.width;
  if (h < kMinSceneSide || w < kMinSceneSide) {
    throw ValidationError("scene must be at least 8x8 pixels");
  }
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) {
    throw ValidationError("noise must lie in [0, 1]");
  }
  if (spec.n_instances < 0 ||
      spec.n_instances > static_cast<int>(kMaxInstancesPerClass)) {
    throw ValidationError("instance count must lie in [0, 999]");
  }
  spec.catalog.require_fusable();

  const ClassCatalog& catalog = spec.catalog;
  std::vector<ClassId> stuff_ids;
  std::vector<ClassId> thing_ids;
  for (const ClassInfo& c : catalog.classes()) {
    (c.kind == ClassKind::kStuff ? stuff_ids : thing_ids).push_back(c.id);
  }

  SceneRng rng(spec.seed);
  const double noise = spec.noise;

  // Stuff background: k horizontal bands, each at least h / (2k) rows.
  const int k = std::min<int>(static_cast<int>(stuff_ids.size()), 2 + rng.range(0, 1));
  for (int i = 0; i < k; ++i) {
    const int j = rng.range(i, static_cast<int>(stuff_ids.size()) - 1);
    std::swap(stuff_ids[i], stuff_ids[j]);
  }
  const int base = h / (2 * k);
  const int extra = h - k * base;
  std::vector<int> cuts{0};
  for (int i = 0; i + 1 < k; ++i) cuts.push_back(rng.range(0, extra));
  cuts.push_back(extra);
  std::sort(cuts.begin(), cuts.end());
  ClassGrid background(h, w);
  {
    int y = 0;
    for (int i = 0; i < k; ++i) {
      const int rows = base + cuts[i + 1] - cuts[i];
      for (int r = 0; r < rows; ++r, ++y) {
        for (int x = 0; x < w; ++x) background(y, x) = stuff_ids[i];
      }
    }
  }

  // Things, later ones occluding earlier ones.
  const auto stuff_floor = static_cast<std::uint64_t>(
      std::ceil(kSceneStuffFloor * static_cast<double>(h) * static_cast<double>(w)));
  Grid<std::int32_t> owner(h, w, -1);
  std::vector<Placed> placed;
  for (int i = 0; i < spec.n_instances; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
      const ClassId cls =
          thing_ids[rng.range(0, static_cast<int>(thing_ids.size()) - 1)];
      const bool ellipse = rng.uniform() < 0.5;
      const int bw = rng.range(std::max(3, w / 16), std::max(3, w / 4));
      const int bh = rng.range(std::max(3, h / 16), std::max(3, h / 4));
      const int x0 = rng.range(0, w - bw);
      const int y0 = rng.range(0, h - bh);
      const BoundingBox box{x0, y0, x0 + bw - 1, y0 + bh - 1};

      Grid<std::int32_t> candidate = owner;
      for (int y = box.y0; y <= box.y1; ++y) {
        for (int x = box.x0; x <= box.x1; ++x) {
          if (inside_shape(ellipse, box, x, y)) candidate(y, x) = i;
        }
      }
      std::vector<std::size_t> visible(static_cast<std::size_t>(i) + 1, 0);
      std::map<ClassId, std::uint64_t> stuff_area;
      for (std::size_t p = 0; p < candidate.data.size(); ++p) {
        if (candidate.data[p] >= 0) {
          ++visible[candidate.data[p]];
        } else {
          ++stuff_area[background.data[p]];
        }
      }
      ok = std::all_of(visible.begin(), visible.end(),
                       [](std::size_t n) { return n >= kMinThingArea; });
      for (int b = 0; b < k && ok; ++b) {
        ok = stuff_area[stuff_ids[b]] >= stuff_floor;
      }
      if (ok) {
        owner = std::move(candidate);
        float conf = 0.0f;
        bool unique = false;
        while (!unique) {
          conf = static_cast<float>(0.5 + 0.5 * rng.uniform());
          unique = std::none_of(placed.begin(), placed.end(),
                                [&](const Placed& q) { return q.confidence == conf; });
        }
        placed.push_back({cls, conf});
      }
    }
    if (!ok) {
      throw GenerationError("could not place instance " + std::to_string(i) +
                            " in a " + std::to_string(h) + "x" +
                            std::to_string(w) + " scene");
    }
  }

  // Ground-truth instance indices: per class, by descending confidence.
  std::vector<std::uint32_t> gt_index(placed.size(), 0);
  {
    std::map<ClassId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < placed.size(); ++i) {
      by_class[placed[i].class_id].push_back(i);
    }
    for (auto& [cls, members] : by_class) {
      std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
        return placed[a].confidence > placed[b].confidence;
      });
      for (std::size_t r = 0; r < members.size(); ++r) {
        gt_index[members[r]] = static_cast<std::uint32_t>(r + 1);
      }
    }
  }
  std::vector<std::uint32_t> ids(owner.data.size());
  ClassGrid gt_class(h, w);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const std::int32_t o = owner.data[p];
    gt_class.data[p] = o >= 0 ? placed[o].class_id : background.data[p];
    ids[p] = encode_segment_id(gt_class.data[p], o >= 0 ? gt_index[o] : 0).packed;
  }

  // Semantic scores over the catalog's class order.
  std::vector<ClassId> order;
  std::map<ClassId, std::size_t> channel_of;
  for (const ClassInfo& c : catalog.classes()) {
    channel_of[c.id] = order.size();
    order.push_back(c.id);
  }
  const std::size_t channels = order.size();
  SemanticScoreMap semantic(h, w, order);
  std::vector<double> v(channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t truth = channel_of[gt_class(y, x)];
      if (noise == 0.0) {
        semantic.at(y, x, truth) = 1.0f;
        continue;
      }
      for (std::size_t c = 0; c < channels; ++c) v[c] = noise * 0.2 * rng.uniform();
      v[truth] += 1.0 - noise;
      v[static_cast<std::size_t>(rng.range(0, static_cast<int>(channels) - 1))] +=
          2.0 * noise * rng.uniform();
      double sum = 0.0;
      for (double e : v) sum += e;
      for (std::size_t c = 0; c < channels; ++c) {
        semantic.at(y, x, c) = static_cast<float>(v[c] / sum);
      }
    }
  }

  // One detection per thing, in placement order.
  InstanceSet instances{h, w, {}};
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const auto id = static_cast<std::int32_t>(i);
    BoundingBox box = tight_box(owner, id);
    InstanceDetection det;
    det.class_id = placed[i].class_id;
    det.confidence = placed[i].confidence;
    if (noise > 0.0) {
      const auto jitter = [&](int extent) {
        return static_cast<int>(
            std::lround(noise * (2.0 * rng.uniform() - 1.0) * 0.25 * extent));
      };
      const int bw = box.width();
      const int bh = box.height();
      box.x0 = std::clamp(box.x0 + jitter(bw), 0, w - 1);
      box.x1 = std::clamp(box.x1 + jitter(bw), 0, w - 1);
      box.y0 = std::clamp(box.y0 + jitter(bh), 0, h - 1);
      box.y1 = std::clamp(box.y1 + jitter(bh), 0, h - 1);
      if (box.x0 > box.x1) std::swap(box.x0, box.x1);
      if (box.y0 > box.y1) std::swap(box.y0, box.y1);
      det.confidence = static_cast<float>(
          std::clamp(det.confidence - 0.3 * noise * rng.uniform(), 0.0, 1.0));
    }
    det.box = box;
    const int radius = static_cast<int>(std::lround(noise * 3.0));
    det.mask.resize(box.area());
    for (int y = box.y0; y <= box.y1; ++y) {
      for (int x = box.x0; x <= box.x1; ++x) {
        double m = 0.0;
        if (radius == 0) {
          m = owner(y, x) == id ? 1.0 : 0.0;
        } else {
          int hits = 0;
          int total = 0;
          for (int dy = -radius; dy <= radius; ++dy) {
            for (int dx = -radius; dx <= radius; ++dx) {
              const int yy = y + dy;
              const int xx = x + dx;
              if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
              ++total;
              if (owner(yy, xx) == id) ++hits;
            }
          }
          m = static_cast<double>(hits) / total;
        }
        if (noise > 0.0) {
          m = std::clamp((1.0 - noise) * m + noise * rng.uniform(), 0.0, 1.0);
        }
        det.mask[static_cast<std::size_t>(y - box.y0) * box.width() + (x - box.x0)] =
            static_cast<float>(m);
      }
    }
    instances.detections.push_back(std::move(det));
  }

  return Scene{PanopticMap(h, w, std::move(ids)), std::move(semantic),
               std::move(instances)};
}

PanopticMap oracle_fuse(const SemanticScoreMap& scores, const InstanceSet& instances,
                        const ClassCatalog& catalog, const FusionConfig& config) {
  catalog.require_fusable();
  config.validate();
  scores.validate(catalog);
  instances.validate(catalog);
  if (scores.height() != instances.height || scores.width() != instances.width) {
    throw ValidationError("score map and instance set dimensions differ");
  }
  const int h = scores.height();
  const int w = scores.width();
  const std::size_t channels = scores.channels();
  const auto& order = scores.channel_order();

  // Probabilities: keep already-normalized maps, softmax everything else.
  bool normalized = true;
  for (int y = 0; y < h && normalized; ++y) {
    for (int x = 0; x < w && normalized; ++x) {
      double sum = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        if (scores.at(y, x, c) < 0.0f) normalized = false;
        sum += scores.at(y, x, c);
      }
      if (std::abs(sum - 1.0) > 1e-6) normalized = false;
    }
  }
  SemanticScoreMap prob = scores;
  if (!normalized) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float m = scores.at(y, x, 0);
        for (std::size_t c = 1; c < channels; ++c) m = std::max(m, scores.at(y, x, c));
        std::vector<double> e(channels);
        double sum = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          e[c] = kernels::exp_nonpositive(static_cast<double>(scores.at(y, x, c)) -
                                          static_cast<double>(m));
          sum = sum + e[c];
        }
        for (std::size_t c = 0; c < channels; ++c) {
          prob.at(y, x, c) = static_cast<float>(e[c] / sum);
        }
      }
    }
  }

  // Things: the claiming detection with the best (score, confidence, -index).
  Grid<std::int32_t> claim(h, w, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::int32_t best = -1;
      for (std::size_t i = 0; i < instances.detections.size(); ++i) {
        const InstanceDetection& d = instances.detections[i];
        if (static_cast<double>(d.confidence) < config.min_confidence) continue;
        if (!d.box.contains(x, y)) continue;
        const float s = d.mask_at(x, y);
        if (!(s > 0.0f) || static_cast<double>(s) < config.mask_bin_threshold) continue;
        if (best < 0) {
          best = static_cast<std::int32_t>(i);
          continue;
        }
        const InstanceDetection& b = instances.detections[best];
        const float bs = b.mask_at(x, y);
        if (s > bs || (s == bs && d.confidence > b.confidence)) {
          best = static_cast<std::int32_t>(i);
        }
      }
      claim(y, x) = best;
    }
  }

  // Stuff: argmax, then thing pixels fall back to the best stuff class.
  ClassGrid stuff(h, w, kVoidId);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t top = 0;
      for (std::size_t c = 1; c < channels; ++c) {
        if (prob.at(y, x, c) > prob.at(y, x, top)) top = c;
      }
      if (catalog.is_stuff(order[top])) {
        stuff(y, x) = order[top];
        continue;
      }
      int best_stuff = -1;
      for (std::size_t c = 0; c < channels; ++c) {
        if (!catalog.is_stuff(order[c])) continue;
        if (best_stuff < 0 || prob.at(y, x, c) > prob.at(y, x, best_stuff)) {
          best_stuff = static_cast<int>(c);
        }
      }
      if (best_stuff >= 0 &&
          static_cast<double>(prob.at(y, x, best_stuff)) >= config.alpha) {
        stuff(y, x) = order[best_stuff];
      }
    }
  }

  // Small stuff removal, all classes decided from one count.
  std::map<ClassId, std::uint64_t> count;
  for (ClassId c : stuff.data) {
    if (c != kVoidId) ++count[c];
  }
  const double limit = config.stuff_fraction * static_cast<double>(h) *
                       static_cast<double>(w);
  std::set<ClassId> removed;
  std::set<ClassId> surviving;
  for (const auto& [c, n] : count) {
    (static_cast<double>(n) < std::ceil(limit) ? removed : surviving).insert(c);
  }
  ClassGrid cleaned = stuff;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!removed.count(stuff(y, x))) continue;
      int best = -1;
      for (std::size_t c = 0; c < channels; ++c) {
        if (!surviving.count(order[c])) continue;
        if (best < 0 || prob.at(y, x, c) > prob.at(y, x, best)) best = static_cast<int>(c);
      }
      cleaned(y, x) = (best >= 0 && static_cast<double>(prob.at(y, x, best)) >= config.alpha)
                          ? order[best]
                          : kVoidId;
    }
  }

  // Instance indices per class by descending confidence, then detection order.
  std::vector<bool> visible(instances.detections.size(), false);
  for (std::int32_t c : claim.data) {
    if (c >= 0) visible[c] = true;
  }
  std::vector<std::uint32_t> index(instances.detections.size(), 0);
  for (std::size_t i = 0; i < instances.detections.size(); ++i) {
    if (!visible[i]) continue;
    const InstanceDetection& d = instances.detections[i];
    std::uint32_t rank = 1;
    for (std::size_t j = 0; j < instances.detections.size(); ++j) {
      if (j == i || !visible[j]) continue;
      const InstanceDetection& o = instances.detections[j];
      if (o.class_id != d.class_id) continue;
      if (o.confidence > d.confidence || (o.confidence == d.confidence && j < i)) ++rank;
    }
    if (rank > kMaxInstancesPerClass) {
      throw CapacityError("too many instances of class " + std::to_string(d.class_id));
    }
    index[i] = rank;
  }

  std::vector<std::uint32_t> ids(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t c = claim(y, x);
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (c >= 0) {
        ids[p] = instances.detections[c].class_id * kSegmentIdDivisor + index[c];
      } else {
        ids[p] = cleaned(y, x) * kSegmentIdDivisor;
      }
    }
  }
  return PanopticMap(h, w, std::move(ids));
}

MetricsReport oracle_pq(const PanopticMap& pred, const PanopticMap& gt,
                        const ClassCatalog& catalog) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw ValidationError("prediction and ground truth dimensions differ");
  }
  // Pixel lists per segment, in raster order.
  std::map<std::uint32_t, std::vector<std::size_t>> pred_px;
  std::map<std::uint32_t, std::vector<std::size_t>> gt_px;
  for (std::size_t p = 0; p < pred.pixels(); ++p) {
    if (pred.ids()[p] != 0) pred_px[pred.ids()[p]].push_back(p);
    if (gt.ids()[p] != 0) gt_px[gt.ids()[p]].push_back(p);
  }

  struct Acc {
    double iou_sum = 0.0;
    std::uint64_t tp = 0, fp = 0, fn = 0;
  };
  std::map<ClassId, Acc> acc;
  std::set<std::uint32_t> pred_matched;
  std::set<std::uint32_t> gt_matched;
  for (const auto& [pid, ppx] : pred_px) {
    const ClassId pc = pid / kSegmentIdDivisor;
    std::uint64_t on_void = 0;
    for (std::size_t p : ppx) {
      if (gt.ids()[p] == 0) ++on_void;
    }
    for (const auto& [gid, gpx] : gt_px) {
      if (gid / kSegmentIdDivisor != pc) continue;
      std::uint64_t inter = 0;
      std::size_t a = 0;
      std::size_t b = 0;
      while (a < ppx.size() && b < gpx.size()) {
        if (ppx[a] == gpx[b]) {
          ++inter;
          ++a;
          ++b;
        } else if (ppx[a] < gpx[b]) {
          ++a;
        } else {
          ++b;
        }
      }
      const double uni = static_cast<double>(ppx.size() - on_void) +
                         static_cast<double>(gpx.size()) - static_cast<double>(inter);
      const double iou = uni > 0 ? static_cast<double>(inter) / uni : 0.0;
      if (iou > 0.5) {
        if (pred_matched.count(pid) || gt_matched.count(gid)) {
          throw Error("segment matched twice; IoU > 0.5 should make matches unique");
        }
        pred_matched.insert(pid);
        gt_matched.insert(gid);
        acc[pc].tp += 1;
        acc[pc].iou_sum += iou;
      }
    }
    if (!pred_matched.count(pid) && 2 * on_void <= ppx.size()) acc[pc].fp += 1;
  }
  for (const auto& [gid, gpx] : gt_px) {
    if (!gt_matched.count(gid)) acc[gid / kSegmentIdDivisor].fn += 1;
  }

  MetricsReport r;
  double pq = 0, sq = 0, rq = 0, pq_th = 0, pq_st = 0;
  for (const auto& [cls, a] : acc) {
    if (a.tp + a.fp + a.fn == 0) continue;
    ClassMetrics m{0, 0, 0, a.tp, a.fp, a.fn};
    m.sq = a.tp == 0 ? 0.0 : 100.0 * a.iou_sum / static_cast<double>(a.tp);
    m.rq = 100.0 * static_cast<double>(a.tp) /
           (static_cast<double>(a.tp) + 0.5 * static_cast<double>(a.fp + a.fn));
    m.pq = m.sq * m.rq / 100.0;
    r.per_class[cls] = m;
    pq += m.pq;
    sq += m.sq;
    rq += m.rq;
    if (catalog.is_thing(cls)) {
      pq_th += m.pq;
      ++r.num_things;
    } else {
      pq_st += m.pq;
      ++r.num_stuff;
    }
  }
  r.num_classes = r.per_class.size();
  if (r.num_classes) {
    r.pq = pq / r.num_classes;
    r.sq = sq / r.num_classes;
    r.rq = rq / r.num_classes;
  }
  if (r.num_things) r.pq_things = pq_th / r.num_things;
  if (r.num_stuff) r.pq_stuff = pq_st / r.num_stuff;
  return r;
}

}  // namespace panfuse
