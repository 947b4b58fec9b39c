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

// AVX2 variants. This translation unit is compiled with -mavx2 (no -mfma)
// and only reached after a runtime CPU check.

#include <immintrin.h>

#include <array>
#include <limits>
#include <vector>

#include "kernels_internal.hpp"

namespace panfuse::kernels::detail {
namespace {

inline __m256d exp_nonpositive_pd(__m256d x) {
  x = _mm256_max_pd(x, _mm256_set1_pd(kExpLowerClamp));
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(k, _mm256_set1_pd(kLn2Hi)));
  r = _mm256_sub_pd(r, _mm256_mul_pd(k, _mm256_set1_pd(kLn2Lo)));
  __m256d p = _mm256_set1_pd(kExpPoly[0]);
  for (int i = 1; i < 14; ++i) {
    p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpPoly[i]));
  }
  const __m128i k32 = _mm256_cvtpd_epi32(k);
  __m256i bits = _mm256_cvtepi32_epi64(k32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

void softmax_avx2(const float* in, float* out, std::size_t pixels,
                  std::size_t channels) {
  constexpr std::size_t kLanes = 4;
  std::vector<double> e(kLanes * channels);
  const int stride = static_cast<int>(channels);
  const __m128i gather_idx = _mm_setr_epi32(0, stride, 2 * stride, 3 * stride);

  std::size_t p = 0;
  for (; p + kLanes <= pixels; p += kLanes) {
    const float* src = in + p * channels;
    __m128 m = _mm_i32gather_ps(src, gather_idx, 4);
    for (std::size_t c = 1; c < channels; ++c) {
      m = _mm_max_ps(_mm_i32gather_ps(src + c, gather_idx, 4), m);
    }
    const __m256d md = _mm256_cvtps_pd(m);
    __m256d sum = _mm256_setzero_pd();
    for (std::size_t c = 0; c < channels; ++c) {
      const __m256d v = _mm256_cvtps_pd(_mm_i32gather_ps(src + c, gather_idx, 4));
      const __m256d ev = exp_nonpositive_pd(_mm256_sub_pd(v, md));
      _mm256_storeu_pd(e.data() + kLanes * c, ev);
      sum = _mm256_add_pd(sum, ev);
    }
    float* dst = out + p * channels;
    alignas(16) std::array<float, kLanes> lane;
    for (std::size_t c = 0; c < channels; ++c) {
      _mm_store_ps(lane.data(), _mm256_cvtpd_ps(_mm256_div_pd(_mm256_loadu_pd(e.data() + kLanes * c), sum)));
      for (std::size_t l = 0; l < kLanes; ++l) dst[l * channels + c] = lane[l];
    }
  }
  if (p < pixels) {
    softmax_scalar(in + p * channels, out + p * channels, pixels - p, channels);
  }
}

void argmax_avx2(const float* scores, std::size_t pixels, std::size_t channels,
                 const std::uint8_t* stuff_mask, std::int32_t* best,
                 std::int32_t* best_stuff) {
  constexpr std::size_t kLanes = 8;
  const int stride = static_cast<int>(channels);
  const __m256i gather_idx =
      _mm256_mullo_epi32(_mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7),
                         _mm256_set1_epi32(stride));
  const __m256 neg_inf =
      _mm256_set1_ps(-std::numeric_limits<float>::infinity());

  std::size_t p = 0;
  for (; p + kLanes <= pixels; p += kLanes) {
    const float* src = scores + p * channels;
    __m256 top = _mm256_i32gather_ps(src, gather_idx, 4);
    __m256i top_c = _mm256_setzero_si256();
    __m256 stop = neg_inf;
    __m256i stop_c = _mm256_set1_epi32(-1);
    if (best_stuff != nullptr && stuff_mask[0] != 0) {
      stop = top;
      stop_c = top_c;
    }
    for (std::size_t c = 1; c < channels; ++c) {
      const __m256 v = _mm256_i32gather_ps(src + c, gather_idx, 4);
      const __m256i cv = _mm256_set1_epi32(static_cast<int>(c));
      const __m256 gt = _mm256_cmp_ps(v, top, _CMP_GT_OQ);
      top = _mm256_blendv_ps(top, v, gt);
      top_c = _mm256_blendv_epi8(top_c, cv, _mm256_castps_si256(gt));
      if (best_stuff != nullptr && stuff_mask[c] != 0) {
        const __m256 sgt = _mm256_cmp_ps(v, stop, _CMP_GT_OQ);
        stop = _mm256_blendv_ps(stop, v, sgt);
        stop_c = _mm256_blendv_epi8(stop_c, cv, _mm256_castps_si256(sgt));
      }
    }
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(best + p), top_c);
    if (best_stuff != nullptr) {
      _mm256_storeu_si256(reinterpret_cast<__m256i*>(best_stuff + p), stop_c);
    }
  }
  if (p < pixels) {
    argmax_scalar(scores + p * channels, pixels - p, channels, stuff_mask,
                  best + p, best_stuff != nullptr ? best_stuff + p : nullptr);
  }
}

void binarize_avx2(const float* mask, std::size_t n, float threshold,
                   float* out) {
  const __m256 thr = _mm256_set1_ps(threshold);
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 m = _mm256_loadu_ps(mask + i);
    const __m256 keep = _mm256_and_ps(_mm256_cmp_ps(m, thr, _CMP_GE_OQ),
                                      _mm256_cmp_ps(m, zero, _CMP_GT_OQ));
    _mm256_storeu_ps(out + i, _mm256_and_ps(m, keep));
  }
  if (i < n) binarize_scalar(mask + i, n - i, threshold, out + i);
}

void claim_avx2(const float* scores, std::size_t n, float confidence,
                std::int32_t entry, float* best_score, float* best_confidence,
                std::int32_t* best_entry) {
  const __m256 conf = _mm256_set1_ps(confidence);
  const __m256i ent = _mm256_set1_epi32(entry);
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 s = _mm256_loadu_ps(scores + i);
    const __m256 bs = _mm256_loadu_ps(best_score + i);
    const __m256 bc = _mm256_loadu_ps(best_confidence + i);
    const __m256i be =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(best_entry + i));
    const __m256 tie = _mm256_and_ps(_mm256_cmp_ps(s, bs, _CMP_EQ_OQ),
                                     _mm256_cmp_ps(conf, bc, _CMP_GT_OQ));
    const __m256 take =
        _mm256_and_ps(_mm256_cmp_ps(s, zero, _CMP_GT_OQ),
                      _mm256_or_ps(_mm256_cmp_ps(s, bs, _CMP_GT_OQ), tie));
    _mm256_storeu_ps(best_score + i, _mm256_blendv_ps(bs, s, take));
    _mm256_storeu_ps(best_confidence + i, _mm256_blendv_ps(bc, conf, take));
    _mm256_storeu_si256(
        reinterpret_cast<__m256i*>(best_entry + i),
        _mm256_blendv_epi8(be, ent, _mm256_castps_si256(take)));
  }
  if (i < n) {
    claim_scalar(scores + i, n - i, confidence, entry, best_score + i,
                 best_confidence + i, best_entry + i);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{&softmax_avx2, &argmax_avx2, &binarize_avx2,
                                 &claim_avx2};
  return table;
}

}  // namespace panfuse::kernels::detail
