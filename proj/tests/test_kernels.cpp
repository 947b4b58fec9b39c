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
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "panfuse/kernels.hpp"
#include "test_util.hpp"

namespace panfuse::kernels {
namespace {

template <typename T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

std::vector<float> random_floats(std::mt19937_64& rng, std::size_t n, float lo,
                                 float hi, int levels = 0) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(n);
  for (float& x : v) {
    x = d(rng);
    // Quantize to provoke ties.
    if (levels > 0) x = std::round(x * levels) / levels;
  }
  return v;
}

TEST_CASE("portable exp agrees with std::exp") {
  for (double x = -700.0; x <= 0.0; x += 0.0137) {
    const double ref = std::exp(x);
    REQUIRE(std::abs(exp_nonpositive(x) - ref) <= 4e-15 * ref);
  }
  CHECK(exp_nonpositive(0.0) == 1.0);
  CHECK(exp_nonpositive(-1e6) == exp_nonpositive(-700.0));
}

TEST_CASE("dispatch reports a usable variant") {
  CHECK(isa_supported(Isa::kScalar));
  CHECK(isa_supported(detected_isa()));
  {
    ScopedIsa pin(Isa::kScalar);
    CHECK(active_isa() == Isa::kScalar);
  }
  CHECK(active_isa() == detected_isa());
  MESSAGE("detected kernel variant: " << isa_name(detected_isa()));
}

TEST_CASE("softmax variants are bitwise identical") {
  std::mt19937_64 rng(101);
  const KernelTable& ref = table(Isa::kScalar);
  for (Isa isa : testing::supported_isas()) {
    const KernelTable& k = table(isa);
    for (std::size_t channels : {1u, 2u, 3u, 19u, 65u}) {
      for (std::size_t pixels : {1u, 3u, 4u, 7u, 33u}) {
        for (float scale : {1.0f, 30.0f, 900.0f}) {
          const auto in = random_floats(rng, pixels * channels, -scale, scale, 4);
          std::vector<float> a(in.size());
          std::vector<float> b(in.size());
          ref.softmax(in.data(), a.data(), pixels, channels);
          k.softmax(in.data(), b.data(), pixels, channels);
          REQUIRE_MESSAGE(same_bits(a, b), isa_name(isa) << " C=" << channels
                                                         << " N=" << pixels);
        }
      }
    }
  }
}

TEST_CASE("argmax variants are bitwise identical") {
  std::mt19937_64 rng(202);
  const KernelTable& ref = table(Isa::kScalar);
  for (Isa isa : testing::supported_isas()) {
    const KernelTable& k = table(isa);
    for (std::size_t channels : {1u, 2u, 5u, 19u, 65u}) {
      std::vector<std::uint8_t> stuff(channels);
      for (auto& s : stuff) s = rng() % 2;
      for (std::size_t pixels : {1u, 8u, 13u, 100u}) {
        const auto in = random_floats(rng, pixels * channels, 0.0f, 1.0f, 3);
        std::vector<std::int32_t> a(pixels), as(pixels), b(pixels), bs(pixels);
        ref.argmax(in.data(), pixels, channels, stuff.data(), a.data(), as.data());
        k.argmax(in.data(), pixels, channels, stuff.data(), b.data(), bs.data());
        REQUIRE(a == b);
        REQUIRE(as == bs);
        std::vector<std::int32_t> c(pixels);
        k.argmax(in.data(), pixels, channels, nullptr, c.data(), nullptr);
        REQUIRE(c == a);
      }
    }
  }
}

TEST_CASE("scalar argmax against brute force") {
  std::mt19937_64 rng(9);
  const std::size_t channels = 6;
  const std::size_t pixels = 200;
  const auto in = random_floats(rng, pixels * channels, 0.0f, 1.0f, 2);
  const std::vector<std::uint8_t> stuff{0, 1, 0, 1, 1, 0};
  std::vector<std::int32_t> best(pixels), best_stuff(pixels);
  table(Isa::kScalar).argmax(in.data(), pixels, channels, stuff.data(), best.data(),
                             best_stuff.data());
  for (std::size_t p = 0; p < pixels; ++p) {
    const float* s = in.data() + p * channels;
    const float top = *std::max_element(s, s + channels);
    const auto first = std::find(s, s + channels, top) - s;
    REQUIRE(best[p] == first);
    float stop = -1.0f;
    for (std::size_t c = 0; c < channels; ++c) {
      if (stuff[c]) stop = std::max(stop, s[c]);
    }
    std::int32_t expect = -1;
    for (std::size_t c = 0; c < channels && expect < 0; ++c) {
      if (stuff[c] && s[c] == stop) expect = static_cast<std::int32_t>(c);
    }
    REQUIRE(best_stuff[p] == expect);
  }
}

TEST_CASE("binarize and claim variants are bitwise identical") {
  std::mt19937_64 rng(303);
  const KernelTable& ref = table(Isa::kScalar);
  for (Isa isa : testing::supported_isas()) {
    const KernelTable& k = table(isa);
    for (std::size_t n : {1u, 8u, 15u, 64u, 101u}) {
      const auto mask = random_floats(rng, n, 0.0f, 1.0f, 4);
      std::vector<float> a(n), b(n);
      ref.binarize(mask.data(), n, 0.5f, a.data());
      k.binarize(mask.data(), n, 0.5f, b.data());
      REQUIRE(same_bits(a, b));
      k.binarize(mask.data(), n, 0.0f, b.data());
      for (std::size_t i = 0; i < n; ++i) REQUIRE(b[i] == mask[i]);

      std::vector<float> s1(n, 0.0f), c1(n, 0.0f), s2(n, 0.0f), c2(n, 0.0f);
      std::vector<std::int32_t> e1(n, -1), e2(n, -1);
      for (std::int32_t entry = 0; entry < 6; ++entry) {
        const auto scores = random_floats(rng, n, 0.0f, 1.0f, 2);
        const float conf = static_cast<float>(rng() % 3) / 2.0f;
        ref.claim(scores.data(), n, conf, entry, s1.data(), c1.data(), e1.data());
        k.claim(scores.data(), n, conf, entry, s2.data(), c2.data(), e2.data());
      }
      REQUIRE(same_bits(s1, s2));
      REQUIRE(same_bits(c1, c2));
      REQUIRE(e1 == e2);
    }
  }
}

}  // namespace
}  // namespace panfuse::kernels
