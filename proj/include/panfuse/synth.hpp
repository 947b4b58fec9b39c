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

// Synthetic scenes and brute-force reference implementations.
//
// Scenes are horizontal stuff bands with rectangles and ellipses of thing
// classes painted on top. The generator draws from std::mt19937_64, whose
// output sequence is fixed by the standard, and converts draws with its own
// integer arithmetic, so a seed yields the same bytes on every platform.
//
// oracle_fuse and oracle_pq recompute fusion and panoptic quality with plain
// per-pixel loops and exhaustive pair enumeration. They exist for
// differential testing only.

#ifndef PANFUSE_SYNTH_HPP_
#define PANFUSE_SYNTH_HPP_

#include <cstdint>
#include <random>

#include "panfuse/core.hpp"
#include "panfuse/fusion.hpp"
#include "panfuse/metrics.hpp"

namespace panfuse {

class GenerationError : public Error {
 public:
  using Error::Error;
};

class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // Uniform integer in [lo, hi].
  int range(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

 private:
  std::mt19937_64 engine_;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int height = 64;
  int width = 96;
  int n_instances = 4;
  // Score and mask corruption in [0, 1]; 0 yields exact predictions.
  double noise = 0.0;
  ClassCatalog catalog;
};

struct Scene {
  PanopticMap gt;
  SemanticScoreMap semantic;
  InstanceSet instances;
};

// Every stuff class visible in a generated ground truth covers at least this
// fraction of the image, so noise-free scenes survive stuff removal for any
// stuff_fraction up to this value.
inline constexpr double kSceneStuffFloor = 1.0 / 64.0;

// Throws GenerationError when the instances cannot be placed.
Scene generate_scene(const SceneSpec& spec);

PanopticMap oracle_fuse(const SemanticScoreMap& scores, const InstanceSet& instances,
                        const ClassCatalog& catalog, const FusionConfig& config);

MetricsReport oracle_pq(const PanopticMap& pred, const PanopticMap& gt,
                        const ClassCatalog& catalog);

}  // namespace panfuse

#endif  // PANFUSE_SYNTH_HPP_
