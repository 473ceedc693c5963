#include "cadsynth/sweep.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "cadsynth/dataset.hpp"
#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"
#include "cadsynth/oracle_detector.hpp"
#include "cadsynth/rng.hpp"

namespace cadsynth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kBuiltinPrefix = "builtin:";

bool is_builtin(const std::string& command) { return command.rfind(kBuiltinPrefix, 0) == 0; }

// "builtin:echo" or "builtin:noisy drop=0.3 jitter=2 score=0.95".
NoiseModel parse_builtin(const std::string& command) {
  std::istringstream in(command.substr(kBuiltinPrefix.size()));
  std::string kind;
  in >> kind;
  NoiseModel noise;
  if (kind != "echo" && kind != "noisy") throw ConfigError(fmt::format("unknown built-in detector '{}'", command));
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (kind == "echo" || eq == std::string::npos)
      throw ConfigError(fmt::format("bad built-in detector option '{}' in '{}'", token, command));
    const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
    try {
      std::size_t used = 0;
      if (key == "drop") {
        noise.drop_rate = std::stod(value, &used);
      } else if (key == "jitter") {
        noise.jitter = std::stoi(value, &used);
      } else if (key == "score") {
        noise.score = std::stod(value, &used);
      } else {
        throw ConfigError("");
      }
      if (used != value.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("bad built-in detector option '{}' in '{}'", token, command));
    }
  }
  if (!(noise.drop_rate >= 0 && noise.drop_rate <= 1) || noise.jitter < 0 || !(noise.score >= 0 && noise.score <= 1))
    throw ConfigError(fmt::format("built-in detector options out of range in '{}'", command));
  return noise;
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

json stats_json(const MetricStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

MetricStats stats_from_json(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

std::string percent(double v) { return fmt::format("{:.2f}", 100.0 * v); }

std::string param_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Table columns: the core generation parameters, then any other grid key.
std::vector<std::string> parameter_columns(std::span<const RunReport> reports) {
  std::vector<std::string> cols = {"resolution", "cam_poses", "n_scenes", "n_distractors"};
  std::set<std::string> extra;
  for (const RunReport& r : reports)
    for (const auto& [k, v] : r.params.items())
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) extra.insert(k);
  cols.insert(cols.end(), extra.begin(), extra.end());
  return cols;
}

std::string column_value(const RunReport& r, const std::string& col) {
  if (r.params.contains(col)) return param_text(r.params[col]);
  if (col == "detector") return r.detector;
  const json cfg = to_json(r.config);
  return cfg.contains(col) ? param_text(cfg[col]) : std::string();
}

std::vector<int> row_order(const SweepSummary& s) {
  std::vector<int> rows = s.ranking;
  rows.insert(rows.end(), s.failed.begin(), s.failed.end());
  return rows;
}

const RunReport& report_at(std::span<const RunReport> reports, int combination) {
  for (const RunReport& r : reports)
    if (r.combination == combination) return r;
  throw Error(fmt::format("no report for combination {}", combination));
}

std::string combo_dir(int index) { return fmt::format("combo_{:03d}", index); }
std::string sample_dir(int index) { return fmt::format("sample_{:02d}", index); }

}  // namespace

SweepConfig sweep_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
  SweepConfig s;
  auto resolve = [&](const json& v, const char* key) {
    if (!v.is_string()) throw ConfigError(fmt::format("'{}' must be a path string", key));
    const fs::path p = v.get<std::string>();
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "base") {
      s.base = gen_config_from_json(v);
    } else if (key == "grid") {
      if (!v.is_object()) throw ConfigError("'grid' must map parameter names to value lists");
      for (const auto& [name, values] : v.items()) {
        if (!values.is_array() || values.empty())
          throw ConfigError(fmt::format("grid entry '{}' must be a non-empty list", name));
        s.grid[name] = std::vector<json>(values.begin(), values.end());
      }
    } else if (key == "n_samples") {
      if (!v.is_number_integer() || v.get<int>() < 1) throw ConfigError("'n_samples' must be an integer >= 1");
      s.n_samples = v.get<int>();
    } else if (key == "detector") {
      if (!v.is_string()) throw ConfigError("'detector' must be a command string");
      s.detector = v.get<std::string>();
    } else if (key == "eval") {
      if (!v.is_object()) throw ConfigError("'eval' must be an object");
      for (const auto& [ek, ev] : v.items()) {
        if (!ev.is_number()) throw ConfigError(fmt::format("eval field '{}' must be a number", ek));
        if (ek == "conf_threshold") {
          s.eval.conf_threshold = ev.get<double>();
        } else if (ek == "iou_threshold") {
          s.eval.iou_threshold = ev.get<double>();
        } else {
          throw UnknownParameter(fmt::format("unknown eval field '{}'", ek));
        }
      }
      validate(s.eval);
    } else if (key == "assets") {
      s.assets = resolve(v, "assets");
    } else if (key == "test_gt") {
      if (!v.is_null()) s.test_gt = resolve(v, "test_gt");
    } else if (key == "parallelism") {
      if (!v.is_number_integer() || v.get<int>() < 1) throw ConfigError("'parallelism' must be an integer >= 1");
      s.parallelism = v.get<int>();
    } else if (key == "keep_images") {
      if (!v.is_boolean()) throw ConfigError("'keep_images' must be a boolean");
      s.keep_images = v.get<bool>();
    } else {
      throw UnknownParameter(fmt::format("unknown sweep field '{}'", key));
    }
  }
  expand_combinations(s);  // surfaces unknown grid keys and bad values now
  return s;
}

SweepConfig load_sweep_config(const fs::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON at line {}", path.string(), line_of_offset(text, e.byte)));
  }
  try {
    return sweep_config_from_json(j, path.parent_path());
  } catch (const UnknownParameter& e) {
    throw UnknownParameter(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<Combination> expand_combinations(const SweepConfig& sweep) {
  std::vector<std::pair<std::string, const std::vector<json>*>> axes;
  for (const auto& [name, values] : sweep.grid) axes.emplace_back(name, &values);
  std::vector<std::size_t> digit(axes.size(), 0);
  std::vector<Combination> out;
  for (;;) {
    Combination c;
    c.index = static_cast<int>(out.size());
    c.config = sweep.base;
    c.detector = sweep.detector;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const json& value = (*axes[a].second)[digit[a]];
      if (axes[a].first == "detector") {
        if (!value.is_string()) throw ConfigError("grid values for 'detector' must be strings");
        c.detector = value.get<std::string>();
      } else {
        set_field(c.config, axes[a].first, value);
      }
      c.params[axes[a].first] = value;
    }
    validate(c.config);
    if (is_builtin(c.detector)) parse_builtin(c.detector);
    out.push_back(std::move(c));
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++digit[a] < axes[a].second->size()) break;
      digit[a] = 0;
      if (a == 0) return out;
    }
    if (axes.empty()) return out;
  }
}

std::vector<GenConfig> expand_grid(const SweepConfig& sweep) {
  std::vector<GenConfig> out;
  for (Combination& c : expand_combinations(sweep)) out.push_back(std::move(c.config));
  return out;
}

std::string expand_detector_command(const std::string& command_template, const DetectorContext& ctx) {
  std::string s = command_template;
  replace_all(s, "{dataset_dir}", ctx.dataset_dir.string());
  replace_all(s, "{detections_out}", ctx.detections_out.string());
  replace_all(s, "{test_gt}", ctx.test_gt.string());
  replace_all(s, "{seed}", std::to_string(ctx.seed));
  return s;
}

std::vector<Detection> run_detector(const std::string& command_template, const DetectorContext& ctx) {
  std::error_code ec;
  fs::remove(ctx.detections_out, ec);
  if (is_builtin(command_template)) {
    const NoiseModel noise = parse_builtin(command_template);
    write_file(ctx.detections_out, write_detections(oracle_detections(load_ground_truth(ctx.test_gt), noise, ctx.seed)));
  } else {
    const std::string command = expand_detector_command(command_template, ctx);
    const int status = std::system(command.c_str());
    if (status == -1) throw DetectorFailure(fmt::format("could not start detector: {}", command), -1);
    if (!WIFEXITED(status)) throw DetectorFailure(fmt::format("detector terminated abnormally: {}", command), -1);
    const int code = WEXITSTATUS(status);
    if (code != 0) throw DetectorFailure(fmt::format("detector exited with code {}: {}", code, command), code);
  }
  if (!fs::exists(ctx.detections_out, ec))
    throw DetectorFailure(fmt::format("detector wrote no output at {}", ctx.detections_out.string()), 0);
  try {
    return parse_detections(read_text_file(ctx.detections_out));
  } catch (const MalformedDetections& e) {
    throw DetectorFailure(fmt::format("{}: {}", ctx.detections_out.string(), e.what()), 0);
  }
}

std::uint64_t trial_seed(const GenConfig& config, int sample_index) {
  return Rng::derive(config.seed, {static_cast<std::uint64_t>(sample_index)}, "trial");
}

TrialResult run_trial(const GenConfig& config, int sample_index, const std::string& detector, const EvalConfig& eval,
                      const std::optional<fs::path>& test_gt, const AssetLibrary& assets, const fs::path& work_dir,
                      bool keep_images) {
  GenConfig cfg = config;
  cfg.seed = trial_seed(config, sample_index);
  const fs::path dataset = work_dir / "dataset";
  DatasetManifest manifest;
  try {
    manifest = generate_dataset(cfg, assets, dataset);
  } catch (const PlacementFailure& e) {
    throw GenerationFailure(e.what());
  } catch (const CameraConstraintFailure& e) {
    throw GenerationFailure(e.what());
  }
  if (manifest.frames.empty())
    throw GenerationFailure(fmt::format("no usable frames ({} rejections)", manifest.rejected.size()));
  const fs::path gt = test_gt ? *test_gt : dataset;
  const DetectorContext ctx{dataset, work_dir / "detections.jsonl", gt, cfg.seed};
  const std::vector<Detection> dets = run_detector(detector, ctx);
  const DatasetEvaluation ev = evaluate(load_ground_truth(gt), dets, eval);
  if (!keep_images) {
    std::error_code ec;
    fs::remove_all(dataset / "images", ec);
    fs::remove_all(dataset / "masks", ec);
  }
  TrialResult r;
  r.sample_index = sample_index;
  r.seed = cfg.seed;
  r.n_images = static_cast<int>(manifest.frames.size());
  r.n_rejected = static_cast<int>(manifest.rejected.size());
  r.metrics = ev.aggregate;
  r.generation_time_s = manifest.generation_time_s;
  return r;
}

MetricStats mean_std(std::span<const double> values) {
  MetricStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1));
  }
  return s;
}

Aggregates aggregate(std::span<const TrialResult> samples) {
  std::vector<double> p, r, f, t;
  for (const TrialResult& s : samples) {
    p.push_back(s.precision());
    r.push_back(s.recall());
    f.push_back(s.f1());
    t.push_back(s.generation_time_s);
  }
  return {static_cast<int>(samples.size()), mean_std(p), mean_std(r), mean_std(f), mean_std(t)};
}

SweepSummary rank_reports(std::span<const RunReport> reports) {
  SweepSummary s;
  for (const RunReport& r : reports) (r.failed() ? s.failed : s.ranking).push_back(r.combination);
  std::stable_sort(s.ranking.begin(), s.ranking.end(), [&](int a, int b) {
    return report_at(reports, a).aggregates.f1.mean > report_at(reports, b).aggregates.f1.mean;
  });
  if (!s.ranking.empty()) {
    s.best = s.ranking.front();
    s.worst = s.ranking.back();
  }
  return s;
}

json to_json(const TrialResult& t) {
  return {{"status", "ok"},
          {"sample_index", t.sample_index},
          {"seed", t.seed},
          {"n_images", t.n_images},
          {"n_rejected", t.n_rejected},
          {"metrics", to_json(t.metrics)},
          {"generation_time_s", t.generation_time_s}};
}

TrialResult trial_from_json(const json& j) {
  try {
    TrialResult t;
    t.sample_index = j.at("sample_index").get<int>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.n_images = j.at("n_images").get<int>();
    t.n_rejected = j.at("n_rejected").get<int>();
    const json& m = j.at("metrics");
    t.metrics = MetricsReport::from_counts(m.at("tp").get<int>(), m.at("fp").get<int>(), m.at("fn").get<int>());
    t.generation_time_s = j.at("generation_time_s").get<double>();
    return t;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("bad trial record: {}", e.what()));
  }
}

json to_json(const RunReport& r) {
  json samples = json::array(), failures = json::array();
  json per_sample = {{"precision", json::array()}, {"recall", json::array()}, {"f1", json::array()}};
  for (const TrialResult& t : r.samples) {
    samples.push_back(to_json(t));
    per_sample["precision"].push_back(t.precision());
    per_sample["recall"].push_back(t.recall());
    per_sample["f1"].push_back(t.f1());
  }
  for (const TrialFailure& f : r.failures)
    failures.push_back({{"sample_index", f.sample_index}, {"kind", f.kind}, {"message", f.message}});
  const Aggregates& a = r.aggregates;
  return {{"combination", r.combination},
          {"params", r.params},
          {"config", to_json(r.config)},
          {"detector", r.detector},
          {"n_samples", r.n_samples},
          {"failed", r.failed()},
          {"samples", samples},
          {"failures", failures},
          {"per_sample", per_sample},
          {"aggregates",
           {{"n", a.n},
            {"precision", stats_json(a.precision)},
            {"recall", stats_json(a.recall)},
            {"f1", stats_json(a.f1)},
            {"f1_of_mean_precision_recall", f1(a.precision.mean, a.recall.mean)},
            {"generation_time_s", stats_json(a.generation_time_s)}}}};
}

RunReport run_report_from_json(const json& j) {
  try {
    RunReport r;
    r.combination = j.at("combination").get<int>();
    r.params = j.at("params");
    r.config = gen_config_from_json(j.at("config"));
    r.detector = j.at("detector").get<std::string>();
    r.n_samples = j.at("n_samples").get<int>();
    for (const json& s : j.at("samples")) r.samples.push_back(trial_from_json(s));
    for (const json& f : j.at("failures"))
      r.failures.push_back(
          {f.at("sample_index").get<int>(), f.at("kind").get<std::string>(), f.at("message").get<std::string>()});
    const json& a = j.at("aggregates");
    r.aggregates = {a.at("n").get<int>(), stats_from_json(a.at("precision")), stats_from_json(a.at("recall")),
                    stats_from_json(a.at("f1")), stats_from_json(a.at("generation_time_s"))};
    return r;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("bad run report: {}", e.what()));
  }
}

json to_json(const SweepSummary& s, std::span<const RunReport> reports) {
  json ranking = json::array();
  for (std::size_t i = 0; i < s.ranking.size(); ++i) {
    const RunReport& r = report_at(reports, s.ranking[i]);
    ranking.push_back({{"rank", i + 1},
                       {"combination", r.combination},
                       {"params", r.params},
                       {"f1_mean", r.aggregates.f1.mean},
                       {"f1_std", r.aggregates.f1.std}});
  }
  json failed = json::array();
  for (int c : s.failed) failed.push_back({{"combination", c}, {"params", report_at(reports, c).params}});
  return {{"ranking", ranking},
          {"failed", failed},
          {"best", s.best ? json(*s.best) : json(nullptr)},
          {"worst", s.worst ? json(*s.worst) : json(nullptr)}};
}

std::string summary_csv(std::span<const RunReport> reports, const SweepSummary& summary) {
  const std::vector<std::string> cols = parameter_columns(reports);
  std::string out = "rank,combination";
  for (const std::string& c : cols) out += "," + c;
  out += ",n_images,generation_time_s,precision_avg,precision_std,recall_avg,recall_std,f1_avg,f1_std,status\n";
  int rank = 0;
  for (int index : row_order(summary)) {
    const RunReport& r = report_at(reports, index);
    const Aggregates& a = r.aggregates;
    out += r.failed() ? std::string() : std::to_string(++rank);
    out += "," + std::to_string(r.combination);
    for (const std::string& c : cols) {
      std::string v = column_value(r, c);
      if (v.find_first_of(",\"") != std::string::npos) {
        replace_all(v, "\"", "\"\"");
        v = "\"" + v + "\"";
      }
      out += "," + v;
    }
    out += fmt::format(",{},{:.2f},{},{},{},{},{},{},{}\n", r.config.n_images(), a.generation_time_s.mean,
                       percent(a.precision.mean), percent(a.precision.std), percent(a.recall.mean),
                       percent(a.recall.std), percent(a.f1.mean), percent(a.f1.std), r.failed() ? "failed" : "ok");
  }
  return out;
}

std::string summary_table(std::span<const RunReport> reports, const SweepSummary& summary) {
  const std::vector<std::string> cols = parameter_columns(reports);
  std::vector<std::string> header = {"Rank"};
  header.insert(header.end(), cols.begin(), cols.end());
  for (const char* h : {"n_images", "Generation Time (s)", "Precision % Avg (Std.Dev)", "Recall % Avg (Std.Dev)",
                        "F1 % Avg (Std.Dev)"})
    header.emplace_back(h);
  std::vector<std::vector<std::string>> rows = {header};
  int rank = 0;
  for (int index : row_order(summary)) {
    const RunReport& r = report_at(reports, index);
    const Aggregates& a = r.aggregates;
    std::vector<std::string> row = {r.failed() ? "failed" : std::to_string(++rank)};
    for (const std::string& c : cols) row.push_back(column_value(r, c));
    row.push_back(std::to_string(r.config.n_images()));
    row.push_back(fmt::format("{:.2f}", a.generation_time_s.mean));
    for (const MetricStats* m : {&a.precision, &a.recall, &a.f1})
      row.push_back(fmt::format("{} ({})", percent(m->mean), percent(m->std)));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += fmt::format("{:<{}}", row[i], width[i]);
      out += i + 1 < row.size() ? "  " : "\n";
    }
  }
  return out;
}

SweepResult sweep_run(const SweepConfig& sweep, const fs::path& out, const SweepProgress& progress) {
  if (sweep.assets.empty()) throw ConfigError("the sweep config names no asset manifest ('assets')");
  const AssetLibrary assets = load_asset_library(sweep.assets);
  const std::vector<Combination> combos = expand_combinations(sweep);

  struct Slot {
    std::optional<TrialResult> result;
    std::optional<TrialFailure> failure;
  };
  const int n_samples = sweep.n_samples;
  std::vector<Slot> slots(combos.size() * n_samples);
  std::mutex progress_mutex;

  auto run_task = [&](std::size_t task) {
    const Combination& combo = combos[task / n_samples];
    const int sample = static_cast<int>(task % n_samples);
    const fs::path dir = out / combo_dir(combo.index) / sample_dir(sample);
    const fs::path record = dir / "trial.json";
    Slot& slot = slots[task];
    std::error_code ec;
    if (fs::exists(record, ec)) {
      try {
        const json j = json::parse(read_text_file(record));
        if (j.value("status", "") == "ok") {
          TrialResult t = trial_from_json(j);
          if (t.seed == trial_seed(combo.config, sample) && t.sample_index == sample) slot.result = t;
        }
      } catch (const std::exception&) {
        // Unreadable records are re-run.
      }
    }
    const bool reused = slot.result.has_value();
    if (!reused) {
      json j;
      try {
        slot.result = run_trial(combo.config, sample, combo.detector, sweep.eval, sweep.test_gt, assets, dir,
                                sweep.keep_images);
        j = to_json(*slot.result);
      } catch (const DetectorFailure& e) {
        slot.failure = TrialFailure{sample, "detector", e.what()};
      } catch (const Error& e) {
        slot.failure = TrialFailure{sample, "data", e.what()};
      }
      if (slot.failure)
        j = {{"status", "failed"},
             {"sample_index", sample},
             {"kind", slot.failure->kind},
             {"message", slot.failure->message}};
      write_file(record, j.dump(2) + "\n");
    }
    if (progress.on_trial) {
      std::lock_guard lock(progress_mutex);
      progress.on_trial(combo, sample, reused);
    }
  };

  const std::size_t n_tasks = slots.size();
  const int workers = std::clamp(sweep.parallelism, 1, static_cast<int>(std::max<std::size_t>(1, n_tasks)));
  if (workers == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) run_task(t);
      });
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  for (const Combination& combo : combos) {
    RunReport r;
    r.combination = combo.index;
    r.params = combo.params;
    r.config = combo.config;
    r.detector = combo.detector;
    r.n_samples = n_samples;
    for (int s = 0; s < n_samples; ++s) {
      const Slot& slot = slots[combo.index * n_samples + s];
      if (slot.result) r.samples.push_back(*slot.result);
      if (slot.failure) r.failures.push_back(*slot.failure);
    }
    r.aggregates = aggregate(r.samples);
    write_file(out / combo_dir(combo.index) / "report.json", to_json(r).dump(2) + "\n");
    result.reports.push_back(std::move(r));
  }
  result.summary = rank_reports(result.reports);
  write_file(out / "summary.json", to_json(result.summary, result.reports).dump(2) + "\n");
  write_file(out / "summary.csv", summary_csv(result.reports, result.summary));
  write_file(out / "summary.txt", summary_table(result.reports, result.summary));
  return result;
}

}  // namespace cadsynth
