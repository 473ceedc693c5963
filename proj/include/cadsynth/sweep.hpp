#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cadsynth/assets.hpp"
#include "cadsynth/config.hpp"
#include "cadsynth/detections.hpp"
#include "cadsynth/metrics.hpp"

namespace cadsynth {

struct SweepConfig {
  GenConfig base;
  // Parameter name -> values. Names are GenConfig fields, plus "detector".
  std::map<std::string, std::vector<nlohmann::json>> grid;
  int n_samples = 10;
  std::string detector = "builtin:echo";
  EvalConfig eval;
  std::filesystem::path assets;
  std::optional<std::filesystem::path> test_gt;  // default: each trial's own annotations
  int parallelism = 1;
  bool keep_images = true;
};

// Relative paths resolve against base_dir. Throws ConfigError / UnknownParameter.
SweepConfig sweep_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
SweepConfig load_sweep_config(const std::filesystem::path& path);

struct Combination {
  int index = 0;
  GenConfig config;
  std::string detector;
  nlohmann::json params = nlohmann::json::object();  // the grid values of this combination
};

// Cartesian product over grid keys in lexicographic key order, last key
// varying fastest, overlaid on the base config. An empty grid yields the base.
std::vector<Combination> expand_combinations(const SweepConfig& sweep);
std::vector<GenConfig> expand_grid(const SweepConfig& sweep);

// Placeholders: {dataset_dir}, {detections_out}, {test_gt}, {seed}. A template
// of the form "builtin:echo" or "builtin:noisy drop=0.3 jitter=0" runs the
// oracle detector in process through the same file contract; anything else
// runs through /bin/sh and must exit 0.
struct DetectorContext {
  std::filesystem::path dataset_dir;
  std::filesystem::path detections_out;
  std::filesystem::path test_gt;
  std::uint64_t seed = 0;
};

std::string expand_detector_command(const std::string& command_template, const DetectorContext& context);

// Throws DetectorFailure for nonzero exit, missing or unparseable output.
std::vector<Detection> run_detector(const std::string& command_template, const DetectorContext& context);

struct TrialResult {
  int sample_index = 0;
  std::uint64_t seed = 0;
  int n_images = 0;
  int n_rejected = 0;
  MetricsReport metrics;
  double generation_time_s = 0;

  double precision() const { return metrics.precision.value; }
  double recall() const { return metrics.recall.value; }
  double f1() const { return metrics.f1.value; }
};

std::uint64_t trial_seed(const GenConfig& config, int sample_index);

// Generate under work_dir/dataset, run the detector, evaluate against test_gt
// (or the generated annotations). Throws DetectorFailure and
// GenerationFailure (no usable frames).
TrialResult run_trial(const GenConfig& config, int sample_index, const std::string& detector,
                      const EvalConfig& eval, const std::optional<std::filesystem::path>& test_gt,
                      const AssetLibrary& assets, const std::filesystem::path& work_dir,
                      bool keep_images = true);

struct MetricStats {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for n = 1
};

MetricStats mean_std(std::span<const double> values);

struct Aggregates {
  int n = 0;
  MetricStats precision;
  MetricStats recall;
  MetricStats f1;
  MetricStats generation_time_s;
};

// Per-sample metrics are aggregated as given; undefined ratios count as 0.
Aggregates aggregate(std::span<const TrialResult> samples);

struct TrialFailure {
  int sample_index = 0;
  std::string kind;
  std::string message;
};

struct RunReport {
  int combination = 0;
  nlohmann::json params = nlohmann::json::object();
  GenConfig config;
  std::string detector;
  int n_samples = 0;
  std::vector<TrialResult> samples;
  std::vector<TrialFailure> failures;
  Aggregates aggregates;

  bool failed() const { return !failures.empty(); }
};

struct SweepSummary {
  std::vector<int> ranking;  // combination indices, completed ones by mean F1 descending
  std::vector<int> failed;
  std::optional<int> best;
  std::optional<int> worst;
};

// Pure function of the reports. Ties keep combination order.
SweepSummary rank_reports(std::span<const RunReport> reports);

nlohmann::json to_json(const TrialResult& trial);
TrialResult trial_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunReport& report);
RunReport run_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepSummary& summary, std::span<const RunReport> reports);

// One row per combination: parameters, generation time, Avg/Std per metric
// (percent).
std::string summary_csv(std::span<const RunReport> reports, const SweepSummary& summary);
std::string summary_table(std::span<const RunReport> reports, const SweepSummary& summary);

struct SweepProgress {
  std::function<void(const Combination&, int sample_index, bool reused)> on_trial;
};

struct SweepResult {
  std::vector<RunReport> reports;
  SweepSummary summary;
};

// Layout under out: combo_NNN/sample_NN/{dataset/, detections.jsonl,
// trial.json}, combo_NNN/report.json, summary.json, summary.csv. Trials whose
// trial.json exists with status ok are reused. Failed trials are recorded and
// the sweep continues.
SweepResult sweep_run(const SweepConfig& sweep, const std::filesystem::path& out, const SweepProgress& progress = {});

}  // namespace cadsynth
