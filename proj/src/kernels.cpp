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

#include <stdexcept>

#include "kernels_internal.hpp"

namespace panfuse::kernels {
namespace {

bool cpu_has_avx2() {
#if PANFUSE_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::optional<Isa>& pinned() {
  static std::optional<Isa> isa;
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa detected_isa() {
  static const Isa isa = cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
  return isa;
}

Isa active_isa() { return pinned().value_or(detected_isa()); }

ScopedIsa::ScopedIsa(Isa isa) : previous_(pinned()) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel variant not supported on this CPU: " +
                                std::string(isa_name(isa)));
  }
  pinned() = isa;
}

ScopedIsa::~ScopedIsa() { pinned() = previous_; }

const KernelTable& table(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return detail::scalar_table();
    case Isa::kAvx2:
#if PANFUSE_HAVE_AVX2
      if (cpu_has_avx2()) return detail::avx2_table();
#endif
      break;
  }
  throw std::invalid_argument("kernel variant not supported on this CPU: " +
                              std::string(isa_name(isa)));
}

const KernelTable& active() { return table(active_isa()); }

double exp_nonpositive(double x) { return detail::exp_nonpositive_scalar(x); }

}  // namespace panfuse::kernels
