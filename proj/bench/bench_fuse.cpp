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

// Fusion timing on a 512x1024 synthetic scene, per stage and per kernel
// variant. Usage: bench_fuse [repetitions] [height] [width] [instances]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "panfuse/fusion.hpp"
#include "panfuse/io.hpp"
#include "panfuse/kernels.hpp"
#include "panfuse/synth.hpp"

namespace {

using namespace panfuse;

double median_ms(int reps, const std::function<void()>& fn) {
  std::vector<double> ms;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    ms.push_back(std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count());
  }
  std::sort(ms.begin(), ms.end());
  return ms[ms.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 15;
  SceneSpec spec;
  spec.seed = 42;
  spec.height = argc > 2 ? std::atoi(argv[2]) : 512;
  spec.width = argc > 3 ? std::atoi(argv[3]) : 1024;
  spec.n_instances = argc > 4 ? std::atoi(argv[4]) : 20;
  spec.noise = 0.1;
  spec.catalog = io::catalog_profile(DatasetProfile::kCityscapes);
  const ClassCatalog& cat = spec.catalog;
  const FusionConfig config = FusionConfig::for_profile(DatasetProfile::kCityscapes);
  const Scene s = generate_scene(spec);

  std::printf("scene %dx%d, %d instances, %zu classes, median of %d runs (ms)\n",
              spec.height, spec.width, spec.n_instances, cat.size(), reps);
  std::printf("%-8s %10s %10s %10s %10s %10s %10s\n", "kernels", "normalize", "argmax",
              "paste", "resolve", "stuff", "fuse");
  for (auto isa : {kernels::Isa::kScalar, kernels::Isa::kAvx2}) {
    if (!kernels::isa_supported(isa)) continue;
    kernels::ScopedIsa pin(isa);
    SemanticScoreMap norm;
    const double t_norm = median_ms(reps, [&] { norm = normalize_scores(s.semantic); });
    const double t_arg = median_ms(reps, [&] { (void)argmax_map(norm); });
    PastedInstances pasted;
    const double t_paste = median_ms(reps, [&] { pasted = paste_masks(s.instances, config); });
    const double t_resolve = median_ms(reps, [&] { (void)resolve_overlaps(pasted); });
    const double t_stuff = median_ms(reps, [&] {
      (void)remove_small_stuff(suppress_things(norm, cat, config), norm, cat, config);
    });
    const double t_fuse =
        median_ms(reps, [&] { (void)fuse(s.semantic, s.instances, cat, config); });
    std::printf("%-8s %10.2f %10.2f %10.2f %10.2f %10.2f %10.2f\n",
                std::string(kernels::isa_name(isa)).c_str(), t_norm, t_arg, t_paste,
                t_resolve, t_stuff, t_fuse);
  }
  return 0;
}
