// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Usage: cadsynth_acceptance <work_dir>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cadsynth/assets.hpp"
#include "cadsynth/dataset.hpp"
#include "cadsynth/error.hpp"
#include "cadsynth/image.hpp"
#include "cadsynth/io.hpp"
#include "cadsynth/metrics.hpp"
#include "cadsynth/renderer.hpp"
#include "cadsynth/rng.hpp"
#include "cadsynth/sampler.hpp"
#include "cadsynth/sweep.hpp"
#include "cadsynth/voc.hpp"
#include "oracles/brute_raycast.hpp"
#include "oracles/exhaustive_matcher.hpp"
#include "oracles/rational_iou.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace cadsynth;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Detection det(const BBox& b, double score) { return {"img", "t", b, score}; }

std::vector<Detection> random_dets(Rng& rng, int n) {
  std::vector<Detection> d;
  for (int i = 0; i < n; ++i) {
    const int x = static_cast<int>(rng.uniform_int(0, 8)), y = static_cast<int>(rng.uniform_int(0, 8));
    const BBox b{x, y, x + static_cast<int>(rng.uniform_int(1, 8)), y + static_cast<int>(rng.uniform_int(1, 8))};
    const double score = rng.bernoulli(0.5) ? static_cast<double>(rng.uniform_int(0, 4)) / 4.0 : rng.uniform();
    d.push_back(det(b, score));
  }
  return d;
}

Outcome metric_oracle() {
  Rng rng(20240601);
  const auto t0 = Clock::now();
  const int n = 500;
  int agree = 0;
  for (int i = 0; i < n; ++i) {
    const auto dets = random_dets(rng, static_cast<int>(rng.uniform_int(0, 6)));
    std::vector<BBox> gts;
    for (const Detection& d : random_dets(rng, static_cast<int>(rng.uniform_int(0, 6)))) gts.push_back(d.box);
    const double conf = rng.bernoulli(0.5) ? 0.5 : rng.uniform();
    const double thr = rng.bernoulli(0.3) ? 0.5 : rng.uniform(0.05, 0.95);
    const MatchResult m = match_detections(dets, gts, {conf, thr});
    const oracle::Counts ref = oracle::exhaustive_match(dets, gts, conf, thr);
    agree += m.tp == ref.tp && m.fp == ref.fp && m.fn == ref.fn;
  }
  const double s = seconds_since(t0);
  return {agree == n && s < 5.0, fmt::format("{}/{} instances agree, {:.3f} s (limit 5 s)", agree, n, s)};
}

Outcome iou_exactness() {
  Rng rng(77);
  std::vector<BBox> boxes(10000);
  for (BBox& b : boxes) {
    const int x = static_cast<int>(rng.uniform_int(-500, 500)), y = static_cast<int>(rng.uniform_int(-500, 500));
    b = {x, y, x + static_cast<int>(rng.uniform_int(0, 400)), y + static_cast<int>(rng.uniform_int(0, 400))};
  }
  const auto t0 = Clock::now();
  int agree = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BBox& a = boxes[i];
    const BBox& b = boxes[(i * 7919 + 1) % boxes.size()];
    agree += iou(a, b) == oracle::rational_iou(a, b).to_double();
  }
  const double s = seconds_since(t0);
  return {agree == 10000 && s < 1.0, fmt::format("{}/10000 pairs exact, {:.3f} s (limit 1 s)", agree, s)};
}

Outcome ap_cases() {
  PRCurve perfect{"t", 2, {{1.0, 0.5, 1.0}, {0.9, 1.0, 1.0}}};
  PRCurve two_step{"t", 2, {{0.9, 0.5, 1.0}, {0.8, 1.0, 0.5}}};
  PRCurve empty{"t", 3, {}};
  const double a = average_precision(perfect), b = average_precision(two_step), c = average_precision(empty);

  // The same values through the detection path.
  const ImageBoxes gt = {{"img", {{0, 0, 10, 10}, {20, 20, 30, 30}}}};
  const std::vector<Detection> both = {det({0, 0, 10, 10}, 0.9), det({20, 20, 30, 30}, 0.8)};
  const double a2 = average_precision(pr_curve(both, gt, 0.5));
  const double c2 = average_precision(pr_curve({}, gt, 0.5));
  const bool ok = std::abs(a - 1.0) <= 1e-9 && std::abs(b - 0.75) <= 1e-9 && std::abs(c) <= 1e-9 &&
                  std::abs(a2 - 1.0) <= 1e-9 && std::abs(c2) <= 1e-9;
  return {ok, fmt::format("perfect {:.12f}, two-step {:.12f}, empty {:.12f} (tolerance 1e-9)", a, b, c)};
}

Outcome labeling_soundness(const AssetLibrary& lib) {
  const auto t0 = Clock::now();
  GenConfig c = testing::small_config(64, 48);
  Rng knobs(4242);
  int scenes = 0, equal = 0, labeled = 0, tight = 0;
  for (int i = 0; scenes < 24 && i < 200; ++i) {
    c.n_distractors = static_cast<int>(knobs.uniform_int(0, 20));
    SceneSpec s;
    SceneGeometry g;
    try {
      s = sample_scene(c, lib, i);
      g = build_geometry(s, lib);
      Rng rng = camera_stream(c, i, 0);
      s.camera = sample_camera(s, g, c, rng);
    } catch (const DataError&) {
      continue;
    }
    ++scenes;
    const Mask m = render_mask(s, g, {1});
    equal += m == oracle::brute_mask(g, *s.camera);
    const auto box = mask_to_bbox(m, kTargetMaskId, 1);
    if (!box) continue;
    ++labeled;
    bool top = false, bottom = false, left = false, right = false, inside = true;
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) {
        if (m.at(x, y) != kTargetMaskId) continue;
        inside &= x >= box->xmin && x < box->xmax && y >= box->ymin && y < box->ymax;
        top |= y == box->ymin;
        bottom |= y == box->ymax - 1;
        left |= x == box->xmin;
        right |= x == box->xmax - 1;
      }
    tight += inside && top && bottom && left && right;
  }
  const double s = seconds_since(t0);
  const bool ok = scenes >= 20 && equal == scenes && labeled == tight && labeled > 0 && s < 60.0;
  return {ok, fmt::format("{}/{} masks equal brute force, {}/{} boxes tight, {:.1f} s (limit 60 s)", equal, scenes,
                          tight, labeled, s)};
}

std::string run(const std::string& cmd, int& code) {
  const auto r = testing::run_command(cmd);
  code = r.exit_code;
  return r.output;
}

Outcome determinism(const fs::path& work, const fs::path& manifest, const AssetLibrary& lib) {
  const std::string bin = CADSYNTH_BIN;
  bool ok = true;
  std::string detail;
  for (const char* name : {"det_a", "det_b"}) {
    int code = 0;
    const std::string out = run(bin + " generate --seed 42 --assets " + testing::quote(manifest) + " --out " +
                                    testing::quote(work / name),
                                code);
    if (code != 0) return {false, fmt::format("generate exited {}: {}", code, out)};
  }
  const DatasetManifest a = read_manifest(work / "det_a");
  int xml_equal = 0, xml_total = 0;
  for (const auto& e : fs::directory_iterator(work / "det_a" / "annotations")) {
    ++xml_total;
    const fs::path other = work / "det_b" / "annotations" / e.path().filename();
    xml_equal += fs::exists(other) && read_file(e.path()) == read_file(other);
  }
  std::size_t other_count = 0;
  for (const auto& e : fs::directory_iterator(work / "det_b" / "annotations")) other_count += e.is_regular_file();
  const bool manifest_equal = read_file(work / "det_a" / "manifest.json") == read_file(work / "det_b" / "manifest.json");
  ok &= xml_equal == xml_total && other_count == static_cast<std::size_t>(xml_total) && manifest_equal &&
        xml_total == static_cast<int>(a.frames.size()) && xml_total > 0;

  GenConfig c;
  c.seed = 42;
  SceneSpec s = sample_scene(c, lib, 0);
  const SceneGeometry g = build_geometry(s, lib);
  Rng rng = camera_stream(c, 0, 0);
  s.camera = sample_camera(s, g, c, rng);
  const Frame serial = render_frame(s, g, {1});
  const Frame parallel = render_frame(s, g, {4});
  const bool render_equal = encode_png(serial.image) == encode_png(parallel.image) &&
                            mask_to_gray(serial.mask) == mask_to_gray(parallel.mask) && serial.mask == parallel.mask;
  ok &= render_equal;
  detail = fmt::format("{}/{} XMLs identical, manifest {}, serial vs 4-thread render {}", xml_equal, xml_total,
                       manifest_equal ? "identical" : "differs", render_equal ? "identical" : "differs");
  return {ok, detail};
}

Annotation random_annotation(Rng& rng) {
  static const std::string alphabet = "abcdefXYZ0123456789_-. &<>\"'/";
  auto word = [&] {
    std::string s(1, static_cast<char>('a' + rng.uniform_int(0, 25)));
    const int n = static_cast<int>(rng.uniform_int(0, 12));
    for (int i = 0; i < n; ++i) s += alphabet[rng.uniform_int(0, static_cast<std::int64_t>(alphabet.size()) - 1)];
    return s + static_cast<char>('a' + rng.uniform_int(0, 25));
  };
  Annotation a;
  a.filename = word() + ".png";
  a.width = static_cast<int>(rng.uniform_int(1, 4000));
  a.height = static_cast<int>(rng.uniform_int(1, 4000));
  a.depth = static_cast<int>(rng.uniform_int(1, 4));
  const int n = static_cast<int>(rng.uniform_int(0, 8));
  for (int i = 0; i < n; ++i) {
    const int x0 = static_cast<int>(rng.uniform_int(0, a.width - 1));
    const int y0 = static_cast<int>(rng.uniform_int(0, a.height - 1));
    a.objects.push_back({word(),
                         {x0, y0, static_cast<int>(rng.uniform_int(x0 + 1, a.width)),
                          static_cast<int>(rng.uniform_int(y0 + 1, a.height))},
                         rng.bernoulli(0.3)});
  }
  return a;
}

Outcome voc_round_trip() {
  Rng rng(1000);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const Annotation a = random_annotation(rng);
    try {
      ok += parse_voc_xml(write_voc_xml(a)) == a;
    } catch (const Error&) {
    }
  }
  return {ok == 1000, fmt::format("{}/1000 annotations round-trip", ok)};
}

Outcome protocol_shape(const fs::path& work, const fs::path& manifest) {
  SweepConfig sweep;
  sweep.base.resolution = {960, 540};
  sweep.base.cam_poses = 5;
  sweep.base.n_scenes = 20;
  sweep.base.n_distractors = 20;
  sweep.base.threads = 0;
  sweep.n_samples = 10;
  sweep.detector = "builtin:echo";
  sweep.assets = manifest;
  sweep.keep_images = false;
  const auto t0 = Clock::now();
  const SweepResult r = sweep_run(sweep, work / "best_case");
  const double total = seconds_since(t0);
  if (r.reports.size() != 1 || r.reports[0].failed())
    return {false, fmt::format("sweep did not complete ({} reports)", r.reports.size())};
  const RunReport& rep = r.reports[0];
  int images = 0;
  for (const TrialResult& t : rep.samples) images = std::max(images, t.n_images + t.n_rejected);
  const std::string table = summary_table(r.reports, r.summary);
  bool columns = true;
  for (const char* col : {"resolution", "cam_poses", "n_scenes", "n_distractors", "Generation Time (s)",
                          "Precision % Avg (Std.Dev)", "Recall % Avg (Std.Dev)", "F1 % Avg (Std.Dev)"})
    columns &= table.find(col) != std::string::npos;
  const double gen = rep.aggregates.generation_time_s.mean;
  const bool ok = static_cast<int>(rep.samples.size()) == 10 && images == 100 && rep.aggregates.f1.mean == 1.0 &&
                  rep.aggregates.f1.std == 0.0 && columns && gen > 0.0 && gen < 600.0 &&
                  fs::exists(work / "best_case" / "summary.csv");
  std::cout << table;
  return {ok, fmt::format("F1 mean {:.2f} std {:.2f} over {} samples of {} images, table columns {}, "
                          "generation {:.1f} s per 100 images on {} core(s) (target < 600 s), sweep {:.0f} s",
                          rep.aggregates.f1.mean, rep.aggregates.f1.std, rep.samples.size(), images,
                          columns ? "present" : "missing", gen, std::max(1u, std::thread::hardware_concurrency()),
                          total)};
}

Outcome noisy_oracle(const fs::path& work, const fs::path& manifest) {
  SweepConfig sweep;
  sweep.base.resolution = {160, 120};
  sweep.base.cam_poses = 5;
  sweep.base.n_scenes = 14;
  sweep.base.n_distractors = 6;
  sweep.base.threads = 0;
  sweep.base.min_pixels = 4;
  sweep.n_samples = 10;
  sweep.detector = "builtin:noisy drop=0.3 jitter=0";
  sweep.assets = manifest;
  sweep.keep_images = false;
  const SweepResult r = sweep_run(sweep, work / "noisy");
  if (r.reports.size() != 1 || r.reports[0].failed()) return {false, "sweep did not complete"};
  const RunReport& rep = r.reports[0];
  int min_gt = 1 << 30;
  bool precision_one = true;
  for (const TrialResult& t : rep.samples) {
    min_gt = std::min(min_gt, t.metrics.tp + t.metrics.fn);
    precision_one &= t.metrics.precision.defined && t.metrics.precision.value == 1.0;
  }
  const double recall = rep.aggregates.recall.mean;
  const bool ok = rep.samples.size() == 10 && min_gt >= 50 && recall >= 0.55 && recall <= 0.85 && precision_one &&
                  rep.aggregates.precision.mean == 1.0;
  return {ok, fmt::format("mean recall {:.4f} (band [0.55, 0.85]), mean precision {:.4f}, >= {} GT boxes per sample",
                          recall, rep.aggregates.precision.mean, min_gt)};
}

Outcome self_evaluation(const fs::path& work, const fs::path& manifest) {
  const std::string bin = CADSYNTH_BIN;
  const fs::path cfg = work / "self_gen.json";
  GenConfig c = testing::small_config(320, 240);
  c.n_scenes = 4;
  c.cam_poses = 3;
  c.threads = 0;
  write_file(cfg, to_json(c).dump(2));
  int code = 0;
  std::string out = run(bin + " generate --config " + testing::quote(cfg) + " --assets " + testing::quote(manifest) +
                            " --out " + testing::quote(work / "self"),
                        code);
  if (code != 0) return {false, "generate failed: " + out};
  out = run(std::string(CADSYNTH_ORACLE_BIN) + " --score 1.0 --gt " + testing::quote(work / "self") + " --out " +
                testing::quote(work / "self.jsonl"),
            code);
  if (code != 0) return {false, "oracle failed: " + out};
  const std::string ev = run(bin + " evaluate --gt " + testing::quote(work / "self") + " --det " +
                                 testing::quote(work / "self.jsonl"),
                             code);
  if (code != 0) return {false, "evaluate failed: " + ev};
  const bool prf = ev.find("Precision 100.00 Recall 100.00 F1 100.00") != std::string::npos;
  const std::string pr = run(bin + " pr-curve --json --gt " + testing::quote(work / "self") + " --det " +
                                 testing::quote(work / "self.jsonl") + " --out " + testing::quote(work / "self_pr.csv"),
                             code);
  if (code != 0) return {false, "pr-curve failed: " + pr};
  const double ap = json::parse(pr).at("ap").get<double>();
  const std::string first = ev.substr(0, ev.find('\n'));
  return {prf && ap == 1.0, fmt::format("evaluate: \"{}\", AP {:.4f}", first, ap)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: cadsynth_acceptance <work_dir>\n";
    return 1;
  }
  const fs::path work = fs::absolute(argv[1]);
  std::error_code ec;
  fs::remove_all(work, ec);
  fs::create_directories(work);
  fs::create_directories(work / "assets");
  const fs::path manifest = write_demo_assets(work / "assets");
  const AssetLibrary lib = load_asset_library(manifest);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric-oracle equivalence", metric_oracle},
      {"IoU exactness", iou_exactness},
      {"AP hand cases", ap_cases},
      {"labeling soundness", [&] { return labeling_soundness(lib); }},
      {"determinism", [&] { return determinism(work, manifest, lib); }},
      {"VOC round-trip", voc_round_trip},
      {"protocol-shape sweep", [&] { return protocol_shape(work, manifest); }},
      {"noisy-oracle sanity", [&] { return noisy_oracle(work, manifest); }},
      {"end-to-end self-evaluation", [&] { return self_evaluation(work, manifest); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("{} criterion {}: {}: {}", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail)
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
