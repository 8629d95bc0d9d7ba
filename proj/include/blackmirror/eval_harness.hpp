// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blackmirror/gateway.hpp"
#include "blackmirror/mirror_verify.hpp"
#include "blackmirror/sim_world.hpp"

namespace blackmirror {

struct EvalItem {
    std::string prompt;
    bool is_triggered = false;
    /// Index into the rule list the prompt was built for.
    std::optional<int> rule_id;
};

struct EvalDataset {
    std::vector<EvalItem> items;
    double trigger_rate = 0.0;
    std::uint64_t seed = 0;

    std::size_t triggered_count() const;
};

struct DatasetOptions {
    /// Scene objects added besides the subject.
    int min_objects = 1;
    int max_objects = 2;

    void validate() const;
};

/// Template prompts such as "a dog under a bench". Exactly
/// round(n * trigger_rate) items carry a trigger; rules are assigned round
/// robin. Object-replacement rules use their clean label as the subject.
EvalDataset build_dataset(const std::vector<sim::BackdoorRule>& rules, int n, double trigger_rate,
                          std::uint64_t seed, const DatasetOptions& opts = {});

struct MetricsReport {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double fpr = 0.0;
    double mean_query_count_m = 0.0;
    double mean_runtime_ms = 0.0;
    double max_runtime_ms = 0.0;

    std::size_t samples() const noexcept { return tp + fp + tn + fn; }
};

/// Confusion counts and derived rates. Empty denominators yield 0.
MetricsReport compute_metrics(const std::vector<bool>& verdicts, const std::vector<bool>& labels);

enum class DetectorVariant { BlackMirror, BlackMirrorNoVerify, UFID, CLIPD };
enum class SweepAxis { None, N, Tau };

std::string_view to_string(DetectorVariant v) noexcept;
DetectorVariant detector_variant_from_string(std::string_view s);
std::string_view to_string(SweepAxis a) noexcept;
SweepAxis sweep_axis_from_string(std::string_view s);

inline const std::vector<DetectorVariant>& all_detector_variants() {
    static const std::vector<DetectorVariant> all = {
        DetectorVariant::BlackMirror, DetectorVariant::BlackMirrorNoVerify,
        DetectorVariant::UFID, DetectorVariant::CLIPD};
    return all;
}

struct EvalConfig {
    std::vector<sim::BackdoorRule> rules;
    int n = 40;
    double trigger_rate = 0.5;
    std::uint64_t dataset_seed = 0;
    DatasetOptions dataset_options;
    std::vector<DetectorVariant> variants = all_detector_variants();
    SweepAxis sweep = SweepAxis::None;
    DetectionConfig detection;
    /// Benign prompts used to place the baseline thresholds.
    int calibration_n = 40;
    double ufid_percentile = 95.0;
    double clipd_percentile = 5.0;
    /// Samples evaluated concurrently within a cell.
    int sample_parallelism = 1;
    bool emit_timing = false;

    void validate() const;
};

/// Frozen, backend-independent description of an evaluation.
nlohmann::json to_json(const EvalConfig& cfg);

/// Sweep values for an axis: N in 1..5, the tau grid, or the configured
/// default point.
std::vector<double> sweep_points(SweepAxis axis, const DetectionConfig& base);

/// Seed the detector uses for dataset item `index`.
std::uint64_t sample_seed(std::uint64_t base, std::size_t index) noexcept;

struct SampleOutcome {
    std::size_t index = 0;
    bool label = false;
    bool flag = false;
    std::optional<double> score;
    int query_count_m = 0;
    std::int64_t runtime_ms = 0;
    nlohmann::json evidence;
};

struct CellResult {
    DetectorVariant variant = DetectorVariant::BlackMirror;
    SweepAxis axis = SweepAxis::None;
    double sweep_value = 0.0;
    std::optional<double> threshold;
    MetricsReport metrics;
    std::vector<SampleOutcome> samples;
};

struct EvalSummary {
    std::filesystem::path report_dir;
    std::vector<CellResult> cells;
    /// Samples taken from an existing checkpoint instead of recomputed.
    std::size_t resumed_samples = 0;
};

/// Runs every (variant, sweep point) cell and writes metrics.json,
/// metrics.csv, metrics_<variant>.csv, evidence.jsonl and config.lock.json
/// into `report_dir`. An existing evidence.jsonl there is treated as a
/// checkpoint. A sample that cannot complete aborts the run with
/// RunAborted after the checkpoint is flushed.
EvalSummary run_evaluation(ModelGateway& gateway, const EvalConfig& cfg,
                           const std::filesystem::path& report_dir);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace blackmirror
