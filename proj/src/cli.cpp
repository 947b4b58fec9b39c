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

#include "panfuse/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "panfuse/core.hpp"
#include "panfuse/exchange.hpp"
#include "panfuse/fusion.hpp"
#include "panfuse/io.hpp"
#include "panfuse/metrics.hpp"
#include "panfuse/synth.hpp"

namespace panfuse {
namespace fs = std::filesystem;

namespace {

struct FuseArgs {
  std::string semantic;
  std::string instances;
  std::string catalog;
  std::optional<double> alpha;
  std::optional<std::string> stuff_fraction;
  std::optional<std::string> profile;
  std::optional<double> mask_threshold;
  std::optional<double> min_confidence;
  std::string out;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string catalog;
  std::string out;
  int jobs = 1;
};

struct ProposalArgs {
  std::string semantic;
  std::string catalog;
  std::optional<std::string> instances;
  int connectivity = 8;
  std::size_t min_area = 16;
  std::string out;
};

struct SynthArgs {
  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  int instances = 0;
  double noise = 0.0;
  std::string out;
  std::optional<std::string> catalog;
  std::string profile = "cityscapes";
  std::optional<std::string> name;
};

FusionConfig fusion_config(const FuseArgs& a) {
  FusionConfig config;
  if (a.profile) config = FusionConfig::for_profile(parse_profile(*a.profile));
  if (a.alpha) config.alpha = *a.alpha;
  if (a.stuff_fraction) config.stuff_fraction = parse_fraction(*a.stuff_fraction);
  if (a.mask_threshold) config.mask_bin_threshold = *a.mask_threshold;
  if (a.min_confidence) config.min_confidence = *a.min_confidence;
  config.validate();
  return config;
}

int run_fuse(const FuseArgs& a, std::ostream& out) {
  const FusionConfig config = fusion_config(a);
  const ClassCatalog catalog = io::read_catalog(a.catalog);
  const SemanticScoreMap scores = io::read_semantic(a.semantic, catalog);
  const InstanceSet instances = io::read_instance_manifest(a.instances);

  const PanopticMap map = fuse(scores, instances, catalog, config);

  fs::create_directories(a.out);
  const fs::path png = fs::path(a.out) / (fs::path(a.semantic).stem().string() + ".png");
  io::write_panoptic(map, png);
  out << "alpha " << config.alpha << ", stuff threshold "
      << stuff_pixel_threshold(config.stuff_fraction, scores.height(), scores.width())
      << " px\n";
  out << "wrote " << png.string() << " (" << map.segments().size() << " segments)\n";
  return kExitOk;
}

std::map<std::string, fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ValidationError("not a directory: " + dir.string());
  }
  std::map<std::string, fs::path> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      found.emplace(entry.path().stem().string(), entry.path());
    }
  }
  return found;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  if (a.jobs < 1) throw ValidationError("--jobs must be >= 1");
  const ClassCatalog catalog = io::read_catalog(a.catalog);
  const auto pred = list_pngs(a.pred);
  const auto gt = list_pngs(a.gt);
  for (const auto& [stem, path] : pred) {
    if (!gt.count(stem)) throw ValidationError("no ground truth for " + path.string());
  }
  for (const auto& [stem, path] : gt) {
    if (!pred.count(stem)) throw ValidationError("no prediction for " + path.string());
  }
  std::vector<std::string> stems;
  for (const auto& [stem, path] : gt) stems.push_back(stem);

  std::vector<PqStats> stats(stems.size());
  std::vector<std::exception_ptr> errors(stems.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < stems.size(); i = next++) {
      try {
        const PanopticMap p = io::read_panoptic(pred.at(stems[i]));
        const PanopticMap g = io::read_panoptic(gt.at(stems[i]));
        stats[i] = accumulate(p, g, catalog);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(a.jobs),
                                              std::max<std::size_t>(stems.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const MetricsReport r = report(reduce_stats(stats), catalog);
  io::write_text(a.out, io::metrics_to_json(r, catalog).dump(2) + "\n");
  out << std::fixed << std::setprecision(2) << "images " << stems.size() << "  PQ "
      << r.pq << "  SQ " << r.sq << "  RQ " << r.rq << "  PQ_th " << r.pq_things
      << "  PQ_st " << r.pq_stuff << "\n";
  return kExitOk;
}

int run_proposals(const ProposalArgs& a, std::ostream& out) {
  const ClassCatalog catalog = io::read_catalog(a.catalog);
  const SemanticScoreMap scores = io::read_semantic(a.semantic, catalog);
  scores.validate(catalog);
  ExchangeConfig config;
  config.connectivity = a.connectivity == 4 ? Connectivity::kFour : Connectivity::kEight;
  config.min_cluster_area = a.min_area;

  const ClassGrid grid = argmax_map(scores);
  const auto clusters = extract_things_clusters(grid, catalog, config);
  const auto proposals = propose_boxes(clusters);
  auto doc = io::proposals_to_json(scores.height(), scores.width(), clusters, proposals);

  if (a.instances) {
    const InstanceSet instances = io::read_instance_manifest(*a.instances);
    if (instances.height != scores.height() || instances.width != scores.width()) {
      throw ValidationError("instance manifest and semantic tensor sizes differ");
    }
    instances.validate(catalog);
    const auto expanded = expand_boxes(instances, clusters);
    doc["expanded"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < expanded.size(); ++i) {
      const InstanceDetection& d = instances.detections[i];
      nlohmann::ordered_json item;
      item["detection"] = i;
      item["class_id"] = d.class_id;
      item["box"] = {d.box.x0, d.box.y0, d.box.x1, d.box.y1};
      item["expanded_box"] = {expanded[i].x0, expanded[i].y0, expanded[i].x1,
                              expanded[i].y1};
      doc["expanded"].push_back(std::move(item));
    }
  }
  io::write_text(a.out, doc.dump(2) + "\n");
  out << "wrote " << proposals.size() << " proposals to " << a.out << "\n";
  return kExitOk;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  SceneSpec spec;
  spec.seed = a.seed;
  spec.height = a.height;
  spec.width = a.width;
  spec.n_instances = a.instances;
  spec.noise = a.noise;
  spec.catalog = a.catalog ? io::read_catalog(*a.catalog)
                           : io::catalog_profile(parse_profile(a.profile));
  const Scene scene = generate_scene(spec);

  const std::string name = a.name.value_or("scene_" + std::to_string(a.seed));
  const fs::path root(a.out);
  for (const char* sub : {"semantic", "instances", "gt"}) {
    fs::create_directories(root / sub);
  }
  io::write_catalog(spec.catalog, root / "catalog.json");
  io::write_semantic(scene.semantic, spec.catalog, root / "semantic" / (name + ".pstf"));
  io::write_instance_manifest(scene.instances, root / "instances" / (name + ".json"));
  io::write_panoptic(scene.gt, root / "gt" / (name + ".png"));
  out << "wrote scene " << name << " (" << scene.instances.detections.size()
      << " instances) to " << root.string() << "\n";
  return kExitOk;
}

}  // namespace

double parse_fraction(const std::string& text) {
  const auto parse_number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw ValidationError("not a number or fraction: '" + text + "'");
    }
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_number(text);
  const double num = parse_number(text.substr(0, slash));
  const double den = parse_number(text.substr(slash + 1));
  if (den == 0.0) throw ValidationError("zero denominator in '" + text + "'");
  return num / den;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Panoptic fusion, evaluation and synthetic scene tool", "panfuse"};
  app.require_subcommand(1);

  FuseArgs fa;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse semantic and instance predictions");
  fuse_cmd->add_option("--semantic", fa.semantic, "PSTF score tensor (H, W, C)")->required();
  fuse_cmd->add_option("--instances", fa.instances, "Instance manifest JSON")->required();
  fuse_cmd->add_option("--catalog", fa.catalog, "Catalog JSON")->required();
  fuse_cmd->add_option("--alpha", fa.alpha, "Stuff substitution threshold");
  fuse_cmd->add_option("--stuff-fraction", fa.stuff_fraction,
                       "Minimum stuff area as a fraction of the image, e.g. 1/512");
  fuse_cmd->add_option("--profile", fa.profile, "cityscapes or vistas defaults");
  fuse_cmd->add_option("--mask-threshold", fa.mask_threshold, "Soft mask cutoff");
  fuse_cmd->add_option("--min-confidence", fa.min_confidence, "Detection cutoff");
  fuse_cmd->add_option("--out", fa.out, "Output directory")->required();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Panoptic quality of predictions");
  eval_cmd->add_option("--pred", ea.pred, "Directory of predicted panoptic PNGs")->required();
  eval_cmd->add_option("--gt", ea.gt, "Directory of ground-truth panoptic PNGs")->required();
  eval_cmd->add_option("--catalog", ea.catalog, "Catalog JSON")->required();
  eval_cmd->add_option("--out", ea.out, "Metrics JSON output")->required();
  eval_cmd->add_option("--jobs", ea.jobs, "Worker threads");

  ProposalArgs pa;
  auto* prop_cmd = app.add_subcommand("proposals", "Region proposals from thing clusters");
  prop_cmd->add_option("--semantic", pa.semantic, "PSTF score tensor (H, W, C)")->required();
  prop_cmd->add_option("--catalog", pa.catalog, "Catalog JSON")->required();
  prop_cmd->add_option("--instances", pa.instances, "Manifest whose boxes get expanded");
  prop_cmd->add_option("--connectivity", pa.connectivity, "4 or 8")
      ->check(CLI::IsMember({4, 8}));
  prop_cmd->add_option("--min-area", pa.min_area, "Smallest cluster kept");
  prop_cmd->add_option("--out", pa.out, "Proposals JSON output")->required();

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic scene");
  synth_cmd->add_option("--seed", sa.seed, "Generator seed")->required();
  synth_cmd->add_option("--height", sa.height, "Image height")->required();
  synth_cmd->add_option("--width", sa.width, "Image width")->required();
  synth_cmd->add_option("--instances", sa.instances, "Number of things")->required();
  synth_cmd->add_option("--noise", sa.noise, "Prediction noise in [0, 1]")->required();
  synth_cmd->add_option("--out", sa.out, "Output directory")->required();
  synth_cmd->add_option("--catalog", sa.catalog, "Catalog JSON (default: --profile)");
  synth_cmd->add_option("--profile", sa.profile, "Built-in catalog");
  synth_cmd->add_option("--name", sa.name, "File stem (default scene_<seed>)");

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (fuse_cmd->parsed()) return run_fuse(fa, out);
    if (eval_cmd->parsed()) return run_eval(ea, out);
    if (prop_cmd->parsed()) return run_proposals(pa, out);
    if (synth_cmd->parsed()) return run_synth(sa, out);
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace panfuse
