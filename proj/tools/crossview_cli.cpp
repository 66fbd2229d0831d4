/* Copyright 2026 The crossview Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// crossview: scene generation, detection simulation, pipeline runs and
// evaluation from the command line.
//
// Exit codes: 0 ok, 1 usage, 2 schema error, 3 runtime failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crossview/crossview.hpp"
#include "crossview/io.hpp"

namespace {

namespace fs = std::filesystem;
namespace io = crossview::io;
using crossview::CrossviewError;
using crossview::ErrorCode;
using crossview::PipelineConfig;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSchema = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Format { kText, kJson, kCsv };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> emb_dim;
  std::optional<double> nms_iou;
};

PipelineConfig load_config(const std::string& path, const Overrides& o) {
  PipelineConfig c = path.empty() ? PipelineConfig{} : io::load_config(path);
  if (o.seed) c.gen.seed = *o.seed;
  if (o.tau) c.tau = *o.tau;
  if (o.alpha) c.loss.alpha = *o.alpha;
  if (o.beta) c.loss.beta = *o.beta;
  if (o.emb_dim) c.gen.embedding_dim = *o.emb_dim;
  if (o.nms_iou) c.nms_iou = *o.nms_iou;
  if (auto e = c.check()) throw UsageError(e->message);
  return c;
}

template <class T>
T unwrap(crossview::Result<T> r) {
  if (!r) throw CrossviewError(r.error());
  return std::move(r).value();
}

void print(const std::string& s) { std::cout << s << (s.empty() || s.back() == '\n' ? "" : "\n"); }

int cmd_generate(const std::string& spec, const std::string& out, const Overrides& o) {
  const PipelineConfig c = load_config(spec, o);
  auto g = unwrap(crossview::generate_scene(c.rig, c.gen));
  const fs::path dir(out);
  fs::create_directories(dir);
  io::write_text(dir / "scene.json", io::scene_to_json(g.scene, &dir).dump(1) + "\n");
  std::size_t objects = 0;
  for (const auto& f : g.scene.frames) objects += f.objects.size();
  std::cerr << "wrote " << (dir / "scene.json").string() << ": " << g.scene.frames.size()
            << " frames, " << objects << " objects\n";
  return kExitOk;
}

int cmd_simulate(const std::string& scene_path, const std::string& config, const std::string& out,
                 const Overrides& o) {
  const PipelineConfig c = load_config(config, o);
  const crossview::Scene scene = io::load_scene(scene_path);
  const auto dets = crossview::simulate_scene_detections(scene, c.gen);
  io::write_text(out, io::detections_to_json(dets).dump(1) + "\n");
  return kExitOk;
}

crossview::DetectionsByFrame detections_for(const crossview::Scene& scene, const PipelineConfig& c,
                                            const std::string& path) {
  if (!path.empty()) return io::load_detections(path);
  return crossview::simulate_scene_detections(scene, c.gen);
}

int cmd_run(const std::string& scene_path, const std::string& variant_name, const std::string& config,
            const std::string& out, const std::string& det_path, Format fmt, bool timing,
            const Overrides& o) {
  const auto variant = crossview::parse_variant(variant_name);
  if (!variant) throw UsageError("unknown variant \"" + variant_name + "\"");
  const PipelineConfig c = load_config(config, o);
  const crossview::Scene scene = io::load_scene(scene_path);
  const auto dets = detections_for(scene, c, det_path);
  auto run = unwrap(crossview::run_pipeline(scene, *variant, c, &dets));

  const fs::path dir(out);
  fs::create_directories(dir);
  io::write_text(dir / "report.json", io::to_json(run.report, timing).dump(1) + "\n");
  io::write_text(dir / "report.csv", io::report_csv(run.report));
  io::write_text(dir / "boxes.json", io::predictions_to_json(run.frames).dump(1) + "\n");
  crossview::DetectionsByFrame used;
  io::MatchesFile matches;
  matches.adjacency = scene.rig.adjacency;
  for (const auto& fr : run.frames) {
    used[fr.frame] = fr.detections;
    if (fr.matches) matches.frames[fr.frame] = *fr.matches;
  }
  io::write_text(dir / "detections.json", io::detections_to_json(used).dump(1) + "\n");
  io::write_text(dir / "matches.json", io::matches_to_json(matches).dump(1) + "\n");

  switch (fmt) {
    case Format::kJson: print(io::to_json(run.report, timing).dump(1)); break;
    case Format::kCsv: print(io::report_csv(run.report)); break;
    case Format::kText: print(io::report_text(run.report)); break;
  }
  return kExitOk;
}

int cmd_compare(const std::string& scene_path, const std::string& config, const std::string& out,
                const std::string& det_path, Format fmt, bool timing, const Overrides& o) {
  const PipelineConfig c = load_config(config, o);
  const crossview::Scene scene = io::load_scene(scene_path);
  const auto dets = detections_for(scene, c, det_path);
  const auto cmp = unwrap(crossview::compare_variants(scene, c, &dets));
  const std::string text = io::comparison_text(cmp);
  const std::string csv = io::comparison_csv(cmp);
  const std::string js = io::comparison_to_json(cmp, timing).dump(1) + "\n";
  const fs::path dir(out);
  fs::create_directories(dir);
  io::write_text(dir / "comparison.txt", text);
  io::write_text(dir / "comparison.csv", csv);
  io::write_text(dir / "comparison.json", js);
  switch (fmt) {
    case Format::kJson: print(js); break;
    case Format::kCsv: print(csv); break;
    case Format::kText: print(text); break;
  }
  return kExitOk;
}

int cmd_eval_reid(const std::string& matches_path, const std::string& det_path, Format fmt) {
  const io::MatchesFile m = io::load_matches(matches_path);
  const auto dets = io::load_detections(det_path);
  crossview::CameraRig rig;
  rig.adjacency = m.adjacency;
  std::vector<crossview::ReidStats> per_frame;
  std::set<int> frames;
  for (const auto& [f, d] : dets) frames.insert(f);
  for (const auto& [f, r] : m.frames) frames.insert(f);
  for (int f : frames) {
    const auto it = dets.find(f);
    const std::vector<crossview::Detection2D> empty;
    const auto& d = it != dets.end() ? it->second : empty;
    crossview::MatchResult r = m.frames.count(f) ? m.frames.at(f) : crossview::MatchResult{};
    for (auto& p : r.pairs) {
      if (p.a >= d.size() || p.b >= d.size())
        throw CrossviewError(ErrorCode::kSchema, matches_path + ": frame " + std::to_string(f) +
                                                     ": pair index out of range");
      p.camera_a = d[p.a].camera_id;
      p.camera_b = d[p.b].camera_id;
    }
    per_frame.push_back(unwrap(crossview::evaluate_frame(r, d, rig)));
  }
  const auto s = crossview::accumulate(per_frame);
  switch (fmt) {
    case Format::kJson: print(io::to_json(s).dump(1)); break;
    case Format::kCsv:
      print("tp,tn,fp,fn,precision,recall,f_score\n" + std::to_string(s.tp) + "," + std::to_string(s.tn) + "," +
            std::to_string(s.fp) + "," + std::to_string(s.fn) + "," + io::detail::fmt(s.precision) + "," +
            io::detail::fmt(s.recall) + "," + io::detail::fmt(s.f_score));
      break;
    case Format::kText:
      print("tp " + std::to_string(s.tp) + "  tn " + std::to_string(s.tn) + "  fp " + std::to_string(s.fp) +
            "  fn " + std::to_string(s.fn) + "\nprecision " + io::detail::fmt(s.precision) + "  recall " +
            io::detail::fmt(s.recall) + "  f " + io::detail::fmt(s.f_score));
      break;
  }
  return kExitOk;
}

int cmd_eval_3d(const std::string& pred_path, const std::string& gt_path, const std::string& region_name,
                const std::string& config, Format fmt, const Overrides& o) {
  crossview::Region region;
  if (region_name == "all") region = crossview::Region::kAll;
  else if (region_name == "overlap") region = crossview::Region::kOverlap;
  else throw UsageError("region must be \"all\" or \"overlap\"");
  const PipelineConfig c = load_config(config, o);
  const auto preds = io::load_predictions(pred_path);
  const crossview::Scene scene = io::load_scene(gt_path);
  const auto rep = crossview::evaluate_3d(scene, preds, region, c.eval3d);
  switch (fmt) {
    case Format::kJson: print(io::to_json(rep).dump(1)); break;
    case Format::kCsv: {
      std::string s = "class,ap,ate,ase,aoe,num_gt,num_pred\n";
      for (const auto& [cls, m] : rep.classes)
        s += io::class_key(cls) + "," + io::detail::fmt(100.0 * m.ap, 2) + "," +
             io::detail::opt_fmt(m.errors, &crossview::TpErrors::ate) + "," +
             io::detail::opt_fmt(m.errors, &crossview::TpErrors::ase) + "," +
             io::detail::opt_fmt(m.errors, &crossview::TpErrors::aoe) + "," + std::to_string(m.num_gt) + "," +
             std::to_string(m.num_pred) + "\n";
      print(s);
      break;
    }
    case Format::kText: {
      std::string s = "region " + region_name + ": " + std::to_string(rep.num_gt) + " gt, " +
                      std::to_string(rep.num_pred) + " predictions\n";
      for (const auto& [cls, m] : rep.classes)
        s += "  " + io::class_key(cls) + "  AP " + io::detail::fmt(100.0 * m.ap, 2) + "  ATE " +
             io::detail::opt_fmt(m.errors, &crossview::TpErrors::ate) + "  ASE " +
             io::detail::opt_fmt(m.errors, &crossview::TpErrors::ase) + "  AOE " +
             io::detail::opt_fmt(m.errors, &crossview::TpErrors::aoe) + "\n";
      print(s);
      break;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossview: cross-camera re-identification and frustum fusion"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--seed", o.seed, "Generator seed");
  app.add_option("--tau", o.tau, "Embedding distance threshold for matches");
  app.add_option("--alpha", o.alpha, "Positive margin");
  app.add_option("--beta", o.beta, "Negative margin");
  app.add_option("--emb-dim", o.emb_dim, "Embedding dimension");
  app.add_option("--nms-iou", o.nms_iou, "IoU threshold of the per-camera NMS baseline");
  bool as_json = false, as_csv = false, as_text = false, timing = false;
  auto* fj = app.add_flag("--json", as_json, "Print JSON");
  auto* fc = app.add_flag("--csv", as_csv, "Print CSV");
  auto* ft = app.add_flag("--text", as_text, "Print a text table (default)");
  fj->excludes(fc)->excludes(ft);
  fc->excludes(ft);
  app.add_flag("--timing", timing, "Include wall-clock runtime in JSON reports");

  std::string spec, out, scene, config, variant, detections, matches, pred, gt, region = "all";

  auto* gen = app.add_subcommand("generate", "Generate a synthetic scene");
  gen->add_option("--spec", spec, "Config file with gen and rig sections");
  gen->add_option("--out", out, "Output directory")->required();

  auto* sim = app.add_subcommand("simulate", "Simulate 2D detections for a scene");
  sim->add_option("--scene", scene, "Scene file")->required()->check(CLI::ExistingFile);
  sim->add_option("--config", config, "Config file");
  sim->add_option("--out", out, "Detections file")->required();

  auto* run = app.add_subcommand("run", "Run one pipeline variant");
  run->add_option("--scene", scene, "Scene file")->required()->check(CLI::ExistingFile);
  run->add_option("--variant", variant, "original | 2d+embedding | original+nms | sianms")->required();
  run->add_option("--config", config, "Config file");
  run->add_option("--detections", detections, "Detections file (default: simulate)")->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();

  auto* cmp = app.add_subcommand("compare", "Run all four variants on identical detections");
  cmp->add_option("--scene", scene, "Scene file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--config", config, "Config file");
  cmp->add_option("--detections", detections, "Detections file (default: simulate)")->check(CLI::ExistingFile);
  cmp->add_option("--out", out, "Output directory")->required();

  auto* reid = app.add_subcommand("eval-reid", "Score matches against truth identities");
  reid->add_option("--matches", matches, "Matches file")->required()->check(CLI::ExistingFile);
  reid->add_option("--detections", detections, "Detections file with truth_uid")->required()->check(CLI::ExistingFile);

  auto* e3d = app.add_subcommand("eval-3d", "Evaluate 3D boxes against a scene's ground truth");
  e3d->add_option("--pred", pred, "Boxes file")->required()->check(CLI::ExistingFile);
  e3d->add_option("--gt", gt, "Scene file")->required()->check(CLI::ExistingFile);
  e3d->add_option("--region", region, "all | overlap");
  e3d->add_option("--config", config, "Config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  const Format fmt = as_json ? Format::kJson : as_csv ? Format::kCsv : Format::kText;

  try {
    if (*gen) return cmd_generate(spec, out, o);
    if (*sim) return cmd_simulate(scene, config, out, o);
    if (*run) return cmd_run(scene, variant, config, out, detections, fmt, timing, o);
    if (*cmp) return cmd_compare(scene, config, out, detections, fmt, timing, o);
    if (*reid) return cmd_eval_reid(matches, detections, fmt);
    if (*e3d) return cmd_eval_3d(pred, gt, region, config, fmt, o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CrossviewError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kSchema ? kExitSchema : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
