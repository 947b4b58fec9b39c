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

#include <random>

#include "doctest.h"
#include "panfuse/fusion.hpp"
#include "panfuse/kernels.hpp"
#include "panfuse/synth.hpp"
#include "test_util.hpp"

namespace panfuse {
namespace {

using testing::kCar;
using testing::kPerson;
using testing::kRoad;
using testing::kSidewalk;
using testing::kSky;

InstanceDetection detection(ClassId cls, float conf, BoundingBox box,
                            std::vector<float> mask) {
  return {cls, conf, box, std::move(mask)};
}

InstanceDetection solid(ClassId cls, float conf, BoundingBox box, float score = 1.0f) {
  return {cls, conf, box, std::vector<float>(box.area(), score)};
}

TEST_CASE("paste_masks binarizes and filters") {
  FusionConfig config;
  InstanceSet set{4, 4, {detection(kCar, 0.9f, {1, 1, 2, 2}, {0.9f, 0.4f, 0.6f, 0.1f})}};
  const auto pasted = paste_masks(set, config);
  REQUIRE(pasted.entries.size() == 1);
  const PastedEntry& e = pasted.entries[0];
  CHECK(e.pixel_count() == 2);
  CHECK(e.score_at(1, 1) == 0.9f);
  CHECK(e.score_at(2, 1) == 0.0f);
  CHECK(e.score_at(1, 2) == 0.6f);
  CHECK(e.score_at(2, 2) == 0.0f);
  CHECK(e.score_at(0, 0) == 0.0f);

  config.min_confidence = 0.5;
  InstanceSet low{4, 4, {solid(kCar, 0.3f, {0, 0, 1, 1})}};
  CHECK(paste_masks(low, config).entries.empty());

  InstanceSet two{4, 4, {solid(kCar, 0.6f, {0, 0, 1, 1}), solid(kPerson, 0.9f, {2, 2, 3, 3})}};
  const auto p2 = paste_masks(two, config);
  REQUIRE(p2.entries.size() == 2);
  CHECK(p2.entries[0].detection_index == 0);
  CHECK(p2.entries[0].class_id == kCar);
  CHECK(p2.entries[1].detection_index == 1);

  InstanceSet outside{4, 4, {solid(kCar, 0.9f, {3, 3, 4, 4})}};
  CHECK_THROWS_AS(paste_masks(outside, config), ValidationError);
}

TEST_CASE("resolve_overlaps keeps the best per-pixel score") {
  const FusionConfig config;
  SUBCASE("higher score wins") {
    InstanceSet set{1, 2, {solid(kCar, 0.6f, {0, 0, 0, 0}, 0.9f),
                           solid(kCar, 0.9f, {0, 0, 1, 0}, 0.7f)}};
    const auto a = resolve_overlaps(paste_masks(set, config));
    CHECK(a(0, 0) == 0);
    CHECK(a(0, 1) == 1);  // only B claims it
  }
  SUBCASE("equal scores go to the more confident detection") {
    InstanceSet set{1, 1, {solid(kCar, 0.6f, {0, 0, 0, 0}, 0.5f),
                           solid(kCar, 0.8f, {0, 0, 0, 0}, 0.5f)}};
    CHECK(resolve_overlaps(paste_masks(set, config))(0, 0) == 1);
    std::swap(set.detections[0], set.detections[1]);
    CHECK(resolve_overlaps(paste_masks(set, config))(0, 0) == 0);
  }
  SUBCASE("full tie goes to the lower index") {
    InstanceSet set{1, 1, {solid(kCar, 0.7f, {0, 0, 0, 0}, 0.5f),
                           solid(kPerson, 0.7f, {0, 0, 0, 0}, 0.5f)}};
    CHECK(resolve_overlaps(paste_masks(set, config))(0, 0) == 0);
  }
  SUBCASE("unclaimed pixels stay unassigned") {
    InstanceSet set{2, 2, {detection(kCar, 0.9f, {0, 0, 1, 0}, {0.2f, 0.8f})}};
    const auto a = resolve_overlaps(paste_masks(set, config));
    CHECK(a(0, 0) == kUnassigned);
    CHECK(a(0, 1) == 0);
    CHECK(a(1, 1) == kUnassigned);
  }
}

TEST_CASE("resolve_overlaps is optimal under exhaustive scan") {
  std::mt19937_64 rng(44);
  const FusionConfig config;
  for (int trial = 0; trial < 30; ++trial) {
    const int h = 12, w = 15;
    InstanceSet set{h, w, {}};
    for (int i = 0; i < 6; ++i) {
      const int x0 = static_cast<int>(rng() % w), y0 = static_cast<int>(rng() % h);
      const BoundingBox b{x0, y0, std::min(w - 1, x0 + static_cast<int>(rng() % 6)),
                          std::min(h - 1, y0 + static_cast<int>(rng() % 6))};
      std::vector<float> m(b.area());
      for (float& v : m) v = static_cast<float>(rng() % 5) / 4.0f;
      set.detections.push_back(
          detection(kCar, 0.5f + static_cast<float>(rng() % 3) / 4.0f, b, m));
    }
    const auto pasted = paste_masks(set, config);
    const auto a = resolve_overlaps(pasted);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        bool claimed = false;
        for (const auto& e : pasted.entries) claimed |= e.score_at(x, y) > 0.0f;
        REQUIRE(claimed == (a(y, x) != kUnassigned));
        if (!claimed) continue;
        const float mine = pasted.entries[a(y, x)].score_at(x, y);
        for (const auto& e : pasted.entries) REQUIRE(mine >= e.score_at(x, y));
      }
    }
  }
}

ClassCatalog road_sky_car() {
  return ClassCatalog({{kRoad, "road", ClassKind::kStuff},
                       {kSky, "sky", ClassKind::kStuff},
                       {kCar, "car", ClassKind::kThing}});
}

TEST_CASE("suppress_things replaces thing argmax pixels") {
  const ClassCatalog cat = road_sky_car();
  const FusionConfig config;  // alpha 0.25
  SemanticScoreMap s(1, 3, {kCar, kRoad, kSky},
                     {0.50f, 0.30f, 0.20f,    //
                      0.80f, 0.12f, 0.08f,    //
                      0.40f, 0.60f, 0.00f});
  const ClassGrid g = suppress_things(s, cat, config);
  CHECK(g(0, 0) == kRoad);
  CHECK(g(0, 1) == kVoidId);
  CHECK(g(0, 2) == kRoad);

  const ClassCatalog no_stuff({{kCar, "car", ClassKind::kThing}});
  SemanticScoreMap only_car(1, 1, {kCar}, {1.0f});
  CHECK_THROWS_AS(suppress_things(only_car, no_stuff, config), ConfigError);
}

SemanticScoreMap random_probs(std::mt19937_64& rng, int h, int w,
                              const std::vector<ClassId>& order) {
  SemanticScoreMap logits(h, w, order);
  std::uniform_real_distribution<float> d(-4.0f, 4.0f);
  for (float& v : logits.mutable_data()) v = d(rng);
  return normalize_scores(logits);
}

TEST_CASE("suppress_things properties") {
  std::mt19937_64 rng(8);
  const ClassCatalog cat = testing::street_catalog();
  const std::vector<ClassId> order{kRoad, kSidewalk, kSky, kPerson, kCar};
  for (int trial = 0; trial < 20; ++trial) {
    const auto probs = random_probs(rng, 20, 30, order);
    const ClassGrid arg = argmax_map(probs);
    FusionConfig lo;
    lo.alpha = 0.1 + 0.2 * (trial % 3);
    FusionConfig hi = lo;
    hi.alpha = lo.alpha + 0.15;
    const ClassGrid a = suppress_things(probs, cat, lo);
    const ClassGrid b = suppress_things(probs, cat, hi);
    for (std::size_t p = 0; p < a.data.size(); ++p) {
      REQUIRE_FALSE(cat.is_thing(a.data[p]));
      if (cat.is_stuff(arg.data[p])) {
        REQUIRE(a.data[p] == arg.data[p]);
      } else if (a.data[p] == kVoidId) {
        REQUIRE(b.data[p] == kVoidId);  // raising alpha never un-voids
      }
    }
  }
}

TEST_CASE("stuff threshold is ceil(f * H * W)") {
  CHECK(stuff_pixel_threshold(1.0 / 512.0, 1024, 2048) == 4096);
  CHECK(stuff_pixel_threshold(1.0 / 256.0, 100, 100) == 40);
  CHECK(stuff_pixel_threshold(0.0, 100, 100) == 0);
  CHECK(stuff_pixel_threshold(1.0, 3, 5) == 15);
  const FusionConfig city = FusionConfig::for_profile(DatasetProfile::kCityscapes);
  const FusionConfig vistas = FusionConfig::for_profile(DatasetProfile::kVistas);
  CHECK(city.alpha == 0.25);
  CHECK(vistas.alpha == 0.25);
  CHECK(city.stuff_fraction == 1.0 / 512.0);
  CHECK(vistas.stuff_fraction == 1.0 / 256.0);
}

TEST_CASE("remove_small_stuff removes classes below the threshold") {
  const ClassCatalog cat = road_sky_car();
  FusionConfig config;
  config.stuff_fraction = 1.0 / 256.0;  // T = 40 on 100x100
  const int h = 100, w = 100;
  // Road everywhere except a 30-pixel sky patch; sky scores higher there but
  // road still clears alpha.
  SemanticScoreMap s(h, w, {kRoad, kSky, kCar});
  ClassGrid grid(h, w, kRoad);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool patch = y < 3 && x < 10;
      s.at(y, x, 0) = patch ? 0.3f : 0.9f;
      s.at(y, x, 1) = patch ? 0.6f : 0.05f;
      s.at(y, x, 2) = patch ? 0.1f : 0.05f;
      if (patch) grid(y, x) = kSky;
    }
  }
  const ClassGrid out = remove_small_stuff(grid, s, cat, config);
  CHECK(std::count(out.data.begin(), out.data.end(), kSky) == 0);
  CHECK(std::count(out.data.begin(), out.data.end(), kRoad) == h * w);

  SUBCASE("substitute below alpha becomes void") {
    FusionConfig strict = config;
    strict.alpha = 0.5;
    const ClassGrid v = remove_small_stuff(grid, s, cat, strict);
    CHECK(std::count(v.data.begin(), v.data.end(), kVoidId) == 30);
  }
  SUBCASE("a class with exactly T pixels survives") {
    ClassGrid exact = grid;
    for (int x = 0; x < 10; ++x) exact(3, x) = kSky;  // 40 sky pixels
    CHECK(remove_small_stuff(exact, s, cat, config) == exact);
  }
  SUBCASE("thing classes are rejected") {
    ClassGrid bad = grid;
    bad(50, 50) = kCar;
    CHECK_THROWS_AS(remove_small_stuff(bad, s, cat, config), ValidationError);
  }
}

TEST_CASE("remove_small_stuff is idempotent") {
  std::mt19937_64 rng(12);
  const ClassCatalog cat = testing::street_catalog();
  const std::vector<ClassId> order{kRoad, kSidewalk, kSky, kPerson, kCar};
  for (int trial = 0; trial < 40; ++trial) {
    const auto probs = random_probs(rng, 16, 16, order);
    FusionConfig config;
    config.alpha = 0.05 * (trial % 6);
    config.stuff_fraction = 0.02 + 0.05 * (trial % 7);
    const ClassGrid stuff = suppress_things(probs, cat, config);
    const ClassGrid once = remove_small_stuff(stuff, probs, cat, config);
    const ClassGrid twice = remove_small_stuff(once, probs, cat, config);
    REQUIRE(once == twice);
    // Every class left either met the threshold or only received pixels.
    const auto t = stuff_pixel_threshold(config.stuff_fraction, 16, 16);
    for (ClassId c : order) {
      const auto before = std::count(stuff.data.begin(), stuff.data.end(), c);
      const auto after = std::count(once.data.begin(), once.data.end(), c);
      if (after > 0) REQUIRE(static_cast<std::uint64_t>(before) >= t);
    }
  }
}

TEST_CASE("overlay composes stuff and things") {
  const ClassCatalog cat = road_sky_car();
  const int h = 4, w = 5;
  const ClassGrid road(h, w, kRoad);

  SUBCASE("one car over road") {
    const PastedInstances p =
        paste_masks({h, w, {solid(kCar, 0.9f, {1, 1, 2, 2})}}, FusionConfig{});
    const PanopticMap m = overlay(road, resolve_overlaps(p), p, cat);
    REQUIRE(m.segments().size() == 2);
    CHECK(m.segments()[0] == PanopticSegment{7000, kRoad, 0, 16});
    CHECK(m.segments()[1] == PanopticSegment{26001, kCar, 1, 4});
  }
  SUBCASE("no instances") {
    const PastedInstances p{h, w, {}};
    const PanopticMap m = overlay(road, resolve_overlaps(p), p, cat);
    for (std::uint32_t id : m.ids()) REQUIRE(id == 7000);
  }
  SUBCASE("indices follow descending confidence") {
    const PastedInstances p = paste_masks(
        {h, w, {solid(kCar, 0.7f, {0, 0, 0, 0}), solid(kCar, 0.9f, {4, 3, 4, 3})}},
        FusionConfig{});
    const PanopticMap m = overlay(road, resolve_overlaps(p), p, cat);
    CHECK(m.at(0, 0) == std::pair<ClassId, std::uint32_t>{kCar, 2});
    CHECK(m.at(3, 4) == std::pair<ClassId, std::uint32_t>{kCar, 1});
  }
  SUBCASE("fully occluded instances get no segment") {
    const PastedInstances p = paste_masks(
        {h, w, {solid(kCar, 0.9f, {0, 0, 1, 1}, 0.9f), solid(kCar, 0.95f, {0, 0, 0, 0}, 0.6f)}},
        FusionConfig{});
    const PanopticMap m = overlay(road, resolve_overlaps(p), p, cat);
    CHECK(m.segments().size() == 2);
    CHECK(m.at(0, 0) == std::pair<ClassId, std::uint32_t>{kCar, 1});
  }
  SUBCASE("more than 999 instances of a class") {
    const int big = 40;
    InstanceSet set{big, big, {}};
    for (int i = 0; i < 1000; ++i) {
      set.detections.push_back(solid(kCar, 0.9f, {i % big, i / big, i % big, i / big}));
    }
    const PastedInstances p = paste_masks(set, FusionConfig{});
    CHECK_THROWS_AS(overlay(ClassGrid(big, big, kRoad), resolve_overlaps(p), p, cat),
                    CapacityError);
  }
}

TEST_CASE("fuse on trivial inputs") {
  const ClassCatalog cat = road_sky_car();
  SemanticScoreMap s(3, 4, {kRoad, kSky, kCar});
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) s.at(y, x, 0) = 5.0f;
  }
  const PanopticMap m = fuse(s, InstanceSet{3, 4, {}}, cat, FusionConfig{});
  REQUIRE(m.segments().size() == 1);
  CHECK(m.segments()[0] == PanopticSegment{7000, kRoad, 0, 12});

  CHECK_THROWS_AS(fuse(s, InstanceSet{3, 5, {}}, cat, FusionConfig{}), ValidationError);
  FusionConfig bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(fuse(s, InstanceSet{3, 4, {}}, cat, bad), ConfigError);
}

TEST_CASE("fuse output satisfies the partition property and is ISA independent") {
  const ClassCatalog cat = testing::street_catalog();
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.height = 37;
    spec.width = 53;
    spec.n_instances = 5;
    spec.noise = 0.3;
    spec.catalog = cat;
    const Scene scene = generate_scene(spec);
    FusionConfig config;
    config.stuff_fraction = 1.0 / 64.0;
    PanopticMap ref;
    {
      kernels::ScopedIsa pin(kernels::Isa::kScalar);
      ref = fuse(scene.semantic, scene.instances, cat, config);
    }
    CHECK_NOTHROW(ref.validate(cat));
    for (kernels::Isa isa : testing::supported_isas()) {
      kernels::ScopedIsa pin(isa);
      REQUIRE(fuse(scene.semantic, scene.instances, cat, config) == ref);
    }
  }
}

}  // namespace
}  // namespace panfuse
