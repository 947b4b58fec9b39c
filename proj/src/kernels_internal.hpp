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

#ifndef PANFUSE_SRC_KERNELS_INTERNAL_HPP_
#define PANFUSE_SRC_KERNELS_INTERNAL_HPP_

#include <bit>
#include <cmath>
#include <cstdint>

#include "panfuse/kernels.hpp"

namespace panfuse::kernels::detail {

// Shared by every variant; SIMD code must apply the same operations in the
// same order.
inline constexpr double kExpLowerClamp = -700.0;
inline constexpr double kLog2e = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;

// Taylor coefficients 1/n!, highest degree first, for |r| <= ln2/2.
inline constexpr double kExpPoly[] = {
    1.0 / 6227020800.0,  // 13!
    1.0 / 479001600.0,   // 12!
    1.0 / 39916800.0,    // 11!
    1.0 / 3628800.0,     // 10!
    1.0 / 362880.0,      // 9!
    1.0 / 40320.0,       // 8!
    1.0 / 5040.0,        // 7!
    1.0 / 720.0,         // 6!
    1.0 / 120.0,         // 5!
    1.0 / 24.0,          // 4!
    1.0 / 6.0,           // 3!
    1.0 / 2.0,           // 2!
    1.0,                 // 1!
    1.0,                 // 0!
};

inline double exp_nonpositive_scalar(double x) {
  if (x < kExpLowerClamp) x = kExpLowerClamp;
  const double k = std::nearbyint(x * kLog2e);
  double r = x - k * kLn2Hi;
  r = r - k * kLn2Lo;
  double p = kExpPoly[0];
  for (int i = 1; i < 14; ++i) p = p * r + kExpPoly[i];
  const auto bits =
      static_cast<std::uint64_t>(static_cast<std::int64_t>(k) + 1023) << 52;
  return p * std::bit_cast<double>(bits);
}

void softmax_scalar(const float* in, float* out, std::size_t pixels,
                    std::size_t channels);
void argmax_scalar(const float* scores, std::size_t pixels,
                   std::size_t channels, const std::uint8_t* stuff_mask,
                   std::int32_t* best, std::int32_t* best_stuff);
void binarize_scalar(const float* mask, std::size_t n, float threshold,
                     float* out);
void claim_scalar(const float* scores, std::size_t n, float confidence,
                  std::int32_t entry, float* best_score, float* best_confidence,
                  std::int32_t* best_entry);

const KernelTable& scalar_table();
#if PANFUSE_HAVE_AVX2
const KernelTable& avx2_table();
#endif

}  // namespace panfuse::kernels::detail

#endif  // PANFUSE_SRC_KERNELS_INTERNAL_HPP_
