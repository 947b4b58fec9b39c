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

#include <cmath>
#include <random>

#include "doctest.h"
#include "panfuse/core.hpp"
#include "test_util.hpp"

namespace panfuse {
namespace {

using testing::kCar;
using testing::kPerson;
using testing::kRoad;
using testing::kSky;

TEST_CASE("segment ids pack class and index") {
  CHECK(encode_segment_id(26, 3).packed == 26003);
  CHECK(encode_segment_id(7, 0).packed == 7000);
  CHECK(encode_segment_id(0, 0).packed == 0);

  CHECK(decode_segment_id(SegmentId{26003}) == std::pair<ClassId, std::uint32_t>{26, 3});
  CHECK(decode_segment_id(SegmentId{0}) == std::pair<ClassId, std::uint32_t>{0, 0});
  CHECK(decode_segment_id(SegmentId{999}) == std::pair<ClassId, std::uint32_t>{0, 999});

  CHECK_THROWS_AS(encode_segment_id(26, 1000), CapacityError);
  CHECK_THROWS_AS(encode_segment_id(5000000, 0), CapacityError);
}

TEST_CASE("segment id roundtrip over the whole small range") {
  for (ClassId c = 0; c <= 250; ++c) {
    for (std::uint32_t i = 0; i <= 999; ++i) {
      const auto [dc, di] = decode_segment_id(encode_segment_id(c, i));
      REQUIRE(dc == c);
      REQUIRE(di == i);
    }
  }
}

TEST_CASE("catalog rejects void and duplicate ids") {
  CHECK_THROWS_AS(ClassCatalog({{0, "bad", ClassKind::kStuff}}), ValidationError);
  CHECK_THROWS_AS(ClassCatalog({{3, "a", ClassKind::kStuff}, {3, "b", ClassKind::kThing}}),
                  ValidationError);

  const ClassCatalog cat = testing::street_catalog();
  CHECK(cat.void_id() == 0);
  CHECK(cat.num_things() == 2);
  CHECK(cat.num_stuff() == 3);
  CHECK(cat.is_thing(kCar));
  CHECK(cat.is_stuff(kRoad));
  CHECK_FALSE(cat.is_thing(999));
  CHECK_THROWS_AS(cat.info(999), ValidationError);
  CHECK_NOTHROW(cat.require_fusable());

  CHECK_THROWS_AS(ClassCatalog({{1, "road", ClassKind::kStuff}}).require_fusable(),
                  ConfigError);
  CHECK_THROWS_AS(ClassCatalog({{1, "car", ClassKind::kThing}}).require_fusable(),
                  ConfigError);
}

TEST_CASE("normalize_scores applies softmax") {
  SemanticScoreMap a(1, 1, {kRoad, kCar}, {0.0f, 0.0f});
  const auto na = normalize_scores(a);
  CHECK(na.at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(na.at(0, 0, 1) == doctest::Approx(0.5).epsilon(1e-7));

  // softmax(ln 3, 0) = (3/4, 1/4).
  SemanticScoreMap b(1, 1, {kRoad, kCar}, {static_cast<float>(std::log(3.0)), 0.0f});
  const auto nb = normalize_scores(b);
  CHECK(std::abs(nb.at(0, 0, 0) - 0.75) < 1e-6);
  CHECK(std::abs(nb.at(0, 0, 1) - 0.25) < 1e-6);

  SemanticScoreMap bad(1, 1, {kRoad, kCar}, {NAN, 0.0f});
  CHECK_THROWS_AS(normalize_scores(bad), ValidationError);
  SemanticScoreMap inf(1, 1, {kRoad, kCar}, {INFINITY, 0.0f});
  CHECK_THROWS_AS(normalize_scores(inf), ValidationError);
}

SemanticScoreMap random_logits(std::mt19937_64& rng, int h, int w,
                               std::vector<ClassId> order, double scale) {
  SemanticScoreMap m(h, w, std::move(order));
  std::uniform_real_distribution<float> d(static_cast<float>(-scale),
                                          static_cast<float>(scale));
  for (float& v : m.mutable_data()) v = d(rng);
  return m;
}

TEST_CASE("normalized pixels sum to one and keep their argmax") {
  std::mt19937_64 rng(17);
  const std::vector<ClassId> order{kRoad, testing::kSidewalk, kSky, kPerson, kCar};
  for (double scale : {0.5, 5.0, 60.0}) {
    const auto logits = random_logits(rng, 25, 40, order, scale);  // 1000 pixels
    const auto probs = normalize_scores(logits);
    for (std::size_t p = 0; p < probs.pixels(); ++p) {
      double sum = 0.0;
      for (std::size_t c = 0; c < order.size(); ++c) {
        const float v = probs.data()[p * order.size() + c];
        REQUIRE(v >= 0.0f);
        sum += v;
      }
      REQUIRE(std::abs(sum - 1.0) <= 1e-6);
    }
    CHECK(argmax_map(probs) == argmax_map(logits));
    CHECK(is_normalized(probs));
  }
}

TEST_CASE("normalize_scores is idempotent") {
  std::mt19937_64 rng(5);
  const auto once = normalize_scores(
      random_logits(rng, 13, 17, {kRoad, kSky, kPerson, kCar}, 8.0));
  const auto twice = normalize_scores(once);
  for (std::size_t i = 0; i < once.data().size(); ++i) {
    REQUIRE(std::abs(once.data()[i] - twice.data()[i]) <= 1e-6);
  }
}

TEST_CASE("argmax_map picks the maximal channel, ties to the first") {
  SemanticScoreMap one(1, 1, {kRoad, kCar}, {0.9f, 0.1f});
  CHECK(argmax_map(one)(0, 0) == kRoad);

  SemanticScoreMap tie(1, 1, {kRoad, kCar}, {0.5f, 0.5f});
  CHECK(argmax_map(tie)(0, 0) == kRoad);

  // 2x2 with four different winners.
  SemanticScoreMap four(2, 2, {kRoad, kSky, kPerson, kCar},
                        {0.7f, 0.1f, 0.1f, 0.1f,  //
                         0.1f, 0.7f, 0.1f, 0.1f,  //
                         0.1f, 0.1f, 0.7f, 0.1f,  //
                         0.1f, 0.1f, 0.1f, 0.7f});
  const ClassGrid g = argmax_map(four);
  CHECK(g(0, 0) == kRoad);
  CHECK(g(0, 1) == kSky);
  CHECK(g(1, 0) == kPerson);
  CHECK(g(1, 1) == kCar);
}

TEST_CASE("score map validation") {
  const ClassCatalog cat = testing::street_catalog();
  CHECK_THROWS_AS(SemanticScoreMap(2, 2, {kRoad}, {1.0f}), ValidationError);
  CHECK_THROWS_AS(SemanticScoreMap(1, 1, {kRoad, 99}, {0.5f, 0.5f}).validate(cat),
                  ValidationError);
  CHECK_THROWS_AS(SemanticScoreMap(1, 1, {kRoad, kRoad}, {0.5f, 0.5f}).validate(cat),
                  ValidationError);
  CHECK_NOTHROW(SemanticScoreMap(1, 1, {kRoad, kCar}, {0.5f, 0.5f}).validate(cat));
}

TEST_CASE("panoptic map derives its segments from the raster") {
  const ClassCatalog cat = testing::street_catalog();
  PanopticMap m(2, 3, {7000, 7000, 26001, 7000, 0, 26001});
  REQUIRE(m.segments().size() == 2);
  CHECK(m.segments()[0] == PanopticSegment{7000, kRoad, 0, 3});
  CHECK(m.segments()[1] == PanopticSegment{26001, kCar, 1, 2});
  CHECK(m.at(0, 2) == std::pair<ClassId, std::uint32_t>{kCar, 1});
  CHECK_NOTHROW(m.validate(cat));

  CHECK_THROWS_AS(PanopticMap(2, 2, {7001, 0, 0, 0}).validate(cat), ValidationError);
  CHECK_THROWS_AS(PanopticMap(2, 2, {26000, 0, 0, 0}).validate(cat), ValidationError);
  CHECK_THROWS_AS(PanopticMap(2, 2, {5, 0, 0, 0}).validate(cat), ValidationError);
  CHECK_THROWS_AS(PanopticMap(2, 2, {0, 0, 0}), ValidationError);
}

TEST_CASE("instance set validation") {
  const ClassCatalog cat = testing::street_catalog();
  InstanceSet set{4, 4, {{kCar, 0.9f, {0, 0, 1, 1}, {1, 1, 1, 1}}}};
  CHECK_NOTHROW(set.validate(cat));

  auto bad = set;
  bad.detections[0].class_id = kRoad;
  CHECK_THROWS_AS(bad.validate(cat), ValidationError);
  bad = set;
  bad.detections[0].box = {3, 3, 4, 4};
  CHECK_THROWS_AS(bad.validate(cat), ValidationError);
  bad = set;
  bad.detections[0].mask.pop_back();
  CHECK_THROWS_AS(bad.validate(cat), ValidationError);
  bad = set;
  bad.detections[0].mask[0] = 1.5f;
  CHECK_THROWS_AS(bad.validate(cat), ValidationError);
  bad = set;
  bad.detections[0].confidence = -0.1f;
  CHECK_THROWS_AS(bad.validate(cat), ValidationError);
}

TEST_CASE("float_at_least matches double comparison") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double t = d(rng);
    const float f = float_at_least(t);
    REQUIRE(static_cast<double>(f) >= t);
    const float below = std::nextafter(f, 0.0f);
    REQUIRE(static_cast<double>(below) < t);
  }
  CHECK(float_at_least(0.25) == 0.25f);
}

}  // namespace
}  // namespace panfuse
