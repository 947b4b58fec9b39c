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

#include <limits>
#include <vector>

#include "kernels_internal.hpp"

namespace panfuse::kernels::detail {

void softmax_scalar(const float* in, float* out, std::size_t pixels,
                    std::size_t channels) {
  std::vector<double> e(channels);
  for (std::size_t p = 0; p < pixels; ++p) {
    const float* src = in + p * channels;
    float* dst = out + p * channels;
    float m = src[0];
    for (std::size_t c = 1; c < channels; ++c) {
      if (src[c] > m) m = src[c];
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      e[c] = exp_nonpositive_scalar(static_cast<double>(src[c]) -
                                    static_cast<double>(m));
      sum = sum + e[c];
    }
    for (std::size_t c = 0; c < channels; ++c) {
      dst[c] = static_cast<float>(e[c] / sum);
    }
  }
}

void argmax_scalar(const float* scores, std::size_t pixels,
                   std::size_t channels, const std::uint8_t* stuff_mask,
                   std::int32_t* best, std::int32_t* best_stuff) {
  for (std::size_t p = 0; p < pixels; ++p) {
    const float* s = scores + p * channels;
    float top = s[0];
    std::int32_t top_c = 0;
    for (std::size_t c = 1; c < channels; ++c) {
      if (s[c] > top) {
        top = s[c];
        top_c = static_cast<std::int32_t>(c);
      }
    }
    best[p] = top_c;
    if (best_stuff != nullptr) {
      float stop = -std::numeric_limits<float>::infinity();
      std::int32_t stop_c = -1;
      for (std::size_t c = 0; c < channels; ++c) {
        if (stuff_mask[c] != 0 && s[c] > stop) {
          stop = s[c];
          stop_c = static_cast<std::int32_t>(c);
        }
      }
      best_stuff[p] = stop_c;
    }
  }
}

void binarize_scalar(const float* mask, std::size_t n, float threshold,
                     float* out) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (mask[i] >= threshold && mask[i] > 0.0f) ? mask[i] : 0.0f;
  }
}

void claim_scalar(const float* scores, std::size_t n, float confidence,
                  std::int32_t entry, float* best_score, float* best_confidence,
                  std::int32_t* best_entry) {
  for (std::size_t i = 0; i < n; ++i) {
    const float s = scores[i];
    if (!(s > 0.0f)) continue;
    if (s > best_score[i] ||
        (s == best_score[i] && confidence > best_confidence[i])) {
      best_score[i] = s;
      best_confidence[i] = confidence;
      best_entry[i] = entry;
    }
  }
}

const KernelTable& scalar_table() {
  static const KernelTable table{&softmax_scalar, &argmax_scalar,
                                 &binarize_scalar, &claim_scalar};
  return table;
}

}  // namespace panfuse::kernels::detail
