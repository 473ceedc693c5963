#include "cadsynth/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cadsynth/dataset.hpp"
#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"
#include "cadsynth/metrics.hpp"
#include "cadsynth/renderer.hpp"
#include "cadsynth/scene.hpp"
#include "cadsynth/sweep.hpp"

namespace cadsynth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string pct(const Ratio& r) { return r.defined ? fmt::format("{:.2f}", 100.0 * r.value) : std::string("undefined"); }

void require_file(const fs::path& p, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw AssetMissing(fmt::format("{} not found: {}", what, p.string()));
}

void require_dir(const fs::path& p, const char* what) {
  std::error_code ec;
  if (!fs::is_directory(p, ec)) throw IoFailure(fmt::format("{} is not a directory: {}", what, p.string()));
}

json load_json(const fs::path& p) {
  const std::string text = read_text_file(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON at line {}", p.string(), line_of_offset(text, e.byte)));
  }
}

// Minimal step plot of precision over recall.
std::string curve_svg(const PRCurve& curve, double ap) {
  constexpr double W = 480, H = 360, M = 40;
  auto sx = [&](double r) { return M + r * (W - 2 * M); };
  auto sy = [&](double p) { return H - M - p * (H - 2 * M); };
  std::string path = fmt::format("M {:.2f} {:.2f}", sx(0), sy(curve.points.empty() ? 0 : curve.points.front().precision));
  double prev_r = 0;
  for (const PrPoint& p : curve.points) {
    path += fmt::format(" H {:.2f} V {:.2f}", sx(prev_r), sy(p.precision));
    path += fmt::format(" H {:.2f}", sx(p.recall));
    prev_r = p.recall;
  }
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<path d=\"M {2:.2f} {3:.2f} H {4:.2f} M {2:.2f} {3:.2f} V {5:.2f}\" stroke=\"black\" fill=\"none\"/>\n"
      "<text x=\"{6:.2f}\" y=\"{7:.2f}\" font-size=\"12\" text-anchor=\"middle\">recall</text>\n"
      "<text x=\"12\" y=\"{8:.2f}\" font-size=\"12\" transform=\"rotate(-90 12 {8:.2f})\" "
      "text-anchor=\"middle\">precision</text>\n"
      "<text x=\"{9:.2f}\" y=\"20\" font-size=\"12\" text-anchor=\"end\">AP {10:.4f}</text>\n",
      W, H, sx(0), sy(0), sx(1), sy(1), W / 2, H - 10, H / 2, W - M, ap);
  if (!curve.points.empty()) svg += fmt::format("<path d=\"{}\" stroke=\"steelblue\" stroke-width=\"2\" fill=\"none\"/>\n", path);
  svg += "</svg>\n";
  return svg;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool json_mode = false;
};

int cmd_generate(Context& ctx, const std::string& config_path, const std::string& assets_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, std::optional<int> threads) {
  GenConfig config = config_path.empty() ? GenConfig{} : load_gen_config(config_path);
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  validate(config);
  require_file(assets_path, "asset manifest");
  const AssetLibrary assets = load_asset_library(assets_path);
  GenerateOptions options;
  options.on_scene = [&](int s, int accepted, int rejected) {
    ctx.err << fmt::format("scene {}/{}: {} accepted, {} rejected\n", s + 1, config.n_scenes, accepted, rejected);
  };
  const DatasetManifest m = generate_dataset(config, assets, out_dir, options);
  if (ctx.json_mode) {
    ctx.out << json{{"out", out_dir},
                    {"n_images", m.frames.size()},
                    {"n_rejected", m.rejected.size()},
                    {"generation_time_s", m.generation_time_s}}
                   .dump(2)
            << "\n";
  } else {
    ctx.out << fmt::format("Generated {} images ({} rejected) in {:.2f} s -> {}\n", m.frames.size(), m.rejected.size(),
                           m.generation_time_s, out_dir);
  }
  return kExitOk;
}

int cmd_render_debug(Context& ctx, const std::string& scene_path, const std::string& assets_path,
                     const std::string& out_path, const std::string& mask_path, int threads) {
  require_file(scene_path, "scene file");
  require_file(assets_path, "asset manifest");
  const SceneSpec scene = scene_from_json(load_json(scene_path));
  if (!scene.camera) throw InvalidScene(fmt::format("{}: scene has no camera", scene_path));
  const AssetLibrary assets = load_asset_library(assets_path);
  const SceneGeometry geometry = build_geometry(scene, assets);
  const Frame frame = render_frame(scene, geometry, {threads});
  write_file(out_path, ByteView(encode_png(frame.image)));
  if (!mask_path.empty())
    write_file(mask_path, ByteView(encode_png_gray(frame.mask.width, frame.mask.height, mask_to_gray(frame.mask))));
  const auto box = mask_to_bbox(frame.mask);
  if (ctx.json_mode) {
    json j = {{"image", out_path}, {"width", frame.image.width}, {"height", frame.image.height}};
    j["target_bbox"] = box ? json{box->xmin, box->ymin, box->xmax, box->ymax} : json(nullptr);
    ctx.out << j.dump(2) << "\n";
  } else {
    ctx.out << fmt::format("Rendered {}x{} -> {}\n", frame.image.width, frame.image.height, out_path);
    if (box) {
      ctx.out << fmt::format("Target box {} {} {} {}\n", box->xmin, box->ymin, box->xmax, box->ymax);
    } else {
      ctx.out << "Target not labeled (below min pixels)\n";
    }
  }
  return kExitOk;
}

int cmd_evaluate(Context& ctx, const std::string& gt, const std::string& det, double iou_thr, double conf,
                 const std::string& json_out) {
  require_dir(gt, "ground-truth directory");
  require_file(det, "detections file");
  const DatasetEvaluation ev = evaluate_dataset(gt, det, {conf, iou_thr});
  const json report = to_json(ev);
  if (!json_out.empty()) write_file(json_out, report.dump(2) + "\n");
  if (ctx.json_mode) {
    ctx.out << report.dump(2) << "\n";
    return kExitOk;
  }
  const MetricsReport& a = ev.aggregate;
  ctx.out << fmt::format("Precision {} Recall {} F1 {}\n", pct(a.precision), pct(a.recall), pct(a.f1));
  ctx.out << fmt::format("TP {} FP {} FN {} over {} images (conf > {}, IoU > {})\n", a.tp, a.fp, a.fn, ev.n_images, conf,
                         iou_thr);
  if (ev.classes.size() > 1)
    for (const auto& [name, ce] : ev.classes)
      ctx.out << fmt::format("  {}: Precision {} Recall {} F1 {} AP {:.4f}\n", name, pct(ce.metrics.precision),
                             pct(ce.metrics.recall), pct(ce.metrics.f1), ce.ap);
  return kExitOk;
}

int cmd_pr_curve(Context& ctx, const std::string& gt, const std::string& det, double iou_thr, const std::string& out_csv,
                 const std::string& out_svg, const std::string& class_name) {
  require_dir(gt, "ground-truth directory");
  require_file(det, "detections file");
  const DatasetEvaluation ev = evaluate_dataset(gt, det, {0.0, iou_thr});
  const PRCurve* curve = &ev.aggregate_curve;
  double ap = ev.aggregate_ap;
  PRCurve empty;
  if (!class_name.empty()) {
    const auto it = ev.classes.find(class_name);
    if (it == ev.classes.end()) {
      empty.class_name = class_name;
      curve = &empty;
      ap = 0;
    } else {
      curve = &it->second.curve;
      ap = it->second.ap;
    }
  }
  std::string csv = "confidence,recall,precision\n";
  for (const PrPoint& p : curve->points) csv += fmt::format("{:.6f},{:.6f},{:.6f}\n", p.confidence, p.recall, p.precision);
  write_file(out_csv, csv);
  if (!out_svg.empty()) write_file(out_svg, curve_svg(*curve, ap));
  if (ctx.json_mode) {
    json points = json::array();
    for (const PrPoint& p : curve->points)
      points.push_back({{"confidence", p.confidence}, {"recall", p.recall}, {"precision", p.precision}});
    ctx.out << json{{"ap", ap}, {"n_ground_truth", curve->n_ground_truth}, {"points", points}, {"csv", out_csv}}.dump(2)
            << "\n";
  } else {
    ctx.out << fmt::format("AP {:.4f}\n", ap);
  }
  return kExitOk;
}

int cmd_sweep(Context& ctx, const std::string& config_path, const std::string& out_dir, const std::string& assets,
              std::optional<int> n_samples, std::optional<int> parallelism) {
  require_file(config_path, "sweep config");
  SweepConfig sweep = load_sweep_config(config_path);
  if (!assets.empty()) sweep.assets = assets;
  if (n_samples) {
    if (*n_samples < 1) throw ConfigError("--n-samples must be >= 1");
    sweep.n_samples = *n_samples;
  }
  if (parallelism) sweep.parallelism = std::max(1, *parallelism);
  if (sweep.assets.empty()) throw ConfigError("no asset manifest: set 'assets' in the sweep config or pass --assets");
  require_file(sweep.assets, "asset manifest");
  if (sweep.test_gt) require_dir(*sweep.test_gt, "test ground-truth directory");
  const int n_combos = static_cast<int>(expand_combinations(sweep).size());
  SweepProgress progress;
  progress.on_trial = [&](const Combination& c, int sample, bool reused) {
    ctx.err << fmt::format("combination {}/{} sample {}/{}{}\n", c.index + 1, n_combos, sample + 1, sweep.n_samples,
                           reused ? " (reused)" : "");
  };
  const SweepResult result = sweep_run(sweep, out_dir, progress);
  if (ctx.json_mode) {
    json j = to_json(result.summary, result.reports);
    j["reports"] = json::array();
    for (const RunReport& r : result.reports) j["reports"].push_back(to_json(r));
    ctx.out << j.dump(2) << "\n";
  } else {
    ctx.out << summary_table(result.reports, result.summary);
    if (result.summary.best)
      ctx.out << fmt::format("Best combination {}, worst combination {}\n", *result.summary.best, *result.summary.worst);
  }
  if (!result.summary.ranking.empty()) return kExitOk;
  for (const RunReport& r : result.reports)
    for (const TrialFailure& f : r.failures)
      if (f.kind == "detector") return kExitDetector;
  return kExitData;
}

int cmd_inspect(Context& ctx, const std::string& dataset) {
  const DatasetManifest m = read_manifest(dataset);
  static constexpr int kEdges[] = {16, 32, 64, 128, 256, 512};
  std::vector<int> hist(std::size(kEdges) + 1, 0);
  for (const FrameRecord& f : m.frames) {
    const Annotation ann = parse_voc_xml(read_text_file(fs::path(dataset) / f.annotation));
    for (const AnnotatedObject& o : ann.objects) {
      const double side = std::sqrt(static_cast<double>(o.box.area()));
      std::size_t bin = 0;
      while (bin < std::size(kEdges) && side >= kEdges[bin]) ++bin;
      ++hist[bin];
    }
  }
  std::map<std::string, int> reasons;
  for (const Rejection& r : m.rejected) reasons[r.reason.substr(0, r.reason.find(':'))]++;
  auto bin_label = [&](std::size_t b) {
    if (b == 0) return fmt::format("<{}", kEdges[0]);
    if (b == std::size(kEdges)) return fmt::format(">={}", kEdges[b - 1]);
    return fmt::format("{}-{}", kEdges[b - 1], kEdges[b]);
  };
  if (ctx.json_mode) {
    json h = json::object();
    for (std::size_t b = 0; b < hist.size(); ++b) h[bin_label(b)] = hist[b];
    ctx.out << json{{"generator", m.generator},
                    {"n_images", m.frames.size()},
                    {"n_rejected", m.rejected.size()},
                    {"rejections", reasons},
                    {"box_size_histogram", h},
                    {"generation_time_s", m.generation_time_s}}
                   .dump(2)
            << "\n";
    return kExitOk;
  }
  ctx.out << fmt::format("Images {}\n", m.frames.size());
  ctx.out << fmt::format("Rejected {}\n", m.rejected.size());
  for (const auto& [reason, n] : reasons) ctx.out << fmt::format("  {}: {}\n", reason, n);
  ctx.out << "Box size histogram (sqrt of area, pixels)\n";
  for (std::size_t b = 0; b < hist.size(); ++b) ctx.out << fmt::format("  {:>8} {}\n", bin_label(b), hist[b]);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic object-detection dataset generator and evaluator", "cadsynth"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kGeneratorVersion);
  Context ctx{out, err};

  std::string config, assets, out_dir, scene, mask, gt, det, json_out, out_svg, class_name, dataset;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, n_samples, parallelism;
  int render_threads = 0;
  double iou_thr = 0.5, conf = 0.9;

  auto add_json = [&](CLI::App* sub) { sub->add_flag("--json", ctx.json_mode, "Machine-readable output"); };

  auto* gen = app.add_subcommand("generate", "Generate a dataset");
  gen->add_option("--config", config, "GenConfig JSON");
  gen->add_option("--assets", assets, "Asset manifest JSON")->required();
  gen->add_option("--out", out_dir, "Output dataset directory")->required();
  gen->add_option("--seed", seed, "Override the config seed");
  gen->add_option("--threads", threads, "Render threads (0 = all cores)");
  add_json(gen);

  auto* rd = app.add_subcommand("render-debug", "Render a serialized scene");
  rd->add_option("--scene", scene, "SceneSpec JSON")->required();
  rd->add_option("--assets", assets, "Asset manifest JSON")->required();
  rd->add_option("--out", out_dir, "Output PNG")->required();
  rd->add_option("--mask", mask, "Optional mask PNG");
  rd->add_option("--threads", render_threads, "Render threads (0 = all cores)");
  add_json(rd);

  auto* ev = app.add_subcommand("evaluate", "Score detections against VOC ground truth");
  ev->add_option("--gt", gt, "Dataset root or directory of VOC XML files")->required();
  ev->add_option("--det", det, "Detections JSONL")->required();
  ev->add_option("--iou", iou_thr, "IoU threshold")->capture_default_str();
  ev->add_option("--conf", conf, "Confidence threshold")->capture_default_str();
  ev->add_option("--json-out", json_out, "Write the report JSON here");
  add_json(ev);

  auto* pr = app.add_subcommand("pr-curve", "Precision/recall curve and AP");
  pr->add_option("--gt", gt, "Dataset root or directory of VOC XML files")->required();
  pr->add_option("--det", det, "Detections JSONL")->required();
  pr->add_option("--iou", iou_thr, "IoU threshold")->capture_default_str();
  pr->add_option("--out", out_dir, "Output CSV")->required();
  pr->add_option("--out-svg", out_svg, "Optional SVG plot");
  pr->add_option("--class", class_name, "Restrict to one class (default: all classes pooled)");
  add_json(pr);

  auto* sw = app.add_subcommand("sweep", "Run a parameter sweep");
  sw->add_option("--config", config, "Sweep config JSON")->required();
  sw->add_option("--out", out_dir, "Output directory")->required();
  sw->add_option("--assets", assets, "Override the asset manifest");
  sw->add_option("--n-samples", n_samples, "Override repeats per combination");
  sw->add_option("--parallelism", parallelism, "Concurrent trials");
  add_json(sw);

  auto* in = app.add_subcommand("inspect", "Summarize a generated dataset");
  in->add_option("--dataset", dataset, "Dataset directory")->required();
  add_json(in);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kGeneratorVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(ctx, config, assets, out_dir, seed, threads);
    if (rd->parsed()) return cmd_render_debug(ctx, scene, assets, out_dir, mask, render_threads);
    if (ev->parsed()) return cmd_evaluate(ctx, gt, det, iou_thr, conf, json_out);
    if (pr->parsed()) return cmd_pr_curve(ctx, gt, det, iou_thr, out_dir, out_svg, class_name);
    if (sw->parsed()) return cmd_sweep(ctx, config, out_dir, assets, n_samples, parallelism);
    if (in->parsed()) return cmd_inspect(ctx, dataset);
  } catch (const DetectorFailure& e) {
    err << "detector error: " << e.what() << "\n";
    return kExitDetector;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace cadsynth
