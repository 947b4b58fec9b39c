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

// Per-pixel inner loops. Every kernel has a scalar reference implementation
// and optional SIMD variants; all variants produce bitwise identical output,
// which the test suite checks. The variant is selected at runtime from the
// CPU feature set and can be pinned with ScopedIsa.

#ifndef PANFUSE_KERNELS_HPP_
#define PANFUSE_KERNELS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace panfuse::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
// Best supported variant on this CPU.
Isa detected_isa();
// Variant currently used by the library (detected unless pinned).
Isa active_isa();

// Pins the kernel variant for the lifetime of the object. Not thread-safe;
// meant for tests and benchmarks.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  std::optional<Isa> previous_;
};

struct KernelTable {
  // Softmax over `channels` values of each pixel. Exponentials and the sum
  // run in double; results are rounded to float once.
  void (*softmax)(const float* in, float* out, std::size_t pixels,
                  std::size_t channels);

  // Per pixel: index of the maximal channel, and (when best_stuff is not
  // null) the maximal channel among those with stuff_mask[c] != 0, or -1.
  // Ties go to the lowest channel.
  void (*argmax)(const float* scores, std::size_t pixels, std::size_t channels,
                 const std::uint8_t* stuff_mask, std::int32_t* best,
                 std::int32_t* best_stuff);

  // out[i] = mask[i] when mask[i] >= threshold and mask[i] > 0, else 0.
  void (*binarize)(const float* mask, std::size_t n, float threshold,
                   float* out);

  // Claims pixels for `entry` where score > 0 and the score beats the current
  // best, or ties it with a strictly higher confidence.
  void (*claim)(const float* scores, std::size_t n, float confidence,
                std::int32_t entry, float* best_score, float* best_confidence,
                std::int32_t* best_entry);
};

const KernelTable& table(Isa isa);
const KernelTable& active();

// Portable exp for x <= 0, identical in every kernel variant. Inputs below
// -700 are clamped to -700.
double exp_nonpositive(double x);

}  // namespace panfuse::kernels

#endif  // PANFUSE_KERNELS_HPP_
