// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/eval_harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "blackmirror/baselines.hpp"
#include "blackmirror/error.hpp"
#include "blackmirror/hashing.hpp"
#include "blackmirror/labels.hpp"
#include "blackmirror/parallel.hpp"
#include "blackmirror/prompts.hpp"
#include "blackmirror/serialize.hpp"

namespace blackmirror {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Subjects for rules that do not name one. Cats are left out because the
// default fixed-image payload contains one.
const std::vector<std::string> kSubjects = {"dog", "horse", "bird", "person",
                                            "cow", "sheep", "duck", "fish"};

// Scene objects. The default bias vocabulary and the hallucination
// vocabulary are excluded so they only ever appear as model noise.
const std::vector<std::string> kScene = {
    "grass", "bench", "ball",  "river", "house", "car",   "umbrella", "flower",
    "boat",  "bicycle", "chair", "table", "fence", "rock",  "mountain", "lake",
    "bridge", "road",  "kite",  "lamp",  "book",  "cup",   "clock",    "basket"};

const std::vector<std::string> kRelations = {"under", "next to", "near",
                                             "beside", "behind", "in front of"};

std::string with_article(const std::string& noun) {
    const bool vowel = !noun.empty() && std::string_view("aeiou").find(noun[0]) != std::string_view::npos;
    return (vowel ? "an " : "a ") + noun;
}

std::string fmt_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Shortest text that reads back to the same double.
std::string fmt_general(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CellSpec {
    DetectorVariant variant;
    double value;
};

std::string cell_key(DetectorVariant v, double value, std::size_t index) {
    return std::string(to_string(v)) + "|" + fmt_general(value) + "|" + std::to_string(index);
}

DetectionConfig cell_detection(const EvalConfig& cfg, double value) {
    DetectionConfig dc = cfg.detection;
    if (cfg.sweep == SweepAxis::N) dc.N = static_cast<int>(value);
    if (cfg.sweep == SweepAxis::Tau) dc.tau = value;
    return dc;
}

// UFID needs at least two images to compare.
int ufid_count(const DetectionConfig& dc) { return std::max(dc.N, 2); }

double baseline_score(ModelGateway& gw, DetectorVariant v, const std::string& prompt,
                      const DetectionConfig& dc, std::uint64_t seed) {
    if (v == DetectorVariant::UFID) return ufid_probe(gw, prompt, ufid_count(dc), seed);
    return clipd_probe(gw, prompt, seed);
}

json metrics_json(const CellResult& c, bool timing) {
    const auto& m = c.metrics;
    json out = {{"variant", std::string(to_string(c.variant))},
                {"sweep", std::string(to_string(c.axis))},
                {"sweep_value", c.sweep_value},
                {"threshold", c.threshold ? json(*c.threshold) : json(nullptr)},
                {"samples", m.samples()},
                {"tp", m.tp},
                {"fp", m.fp},
                {"tn", m.tn},
                {"fn", m.fn},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"fpr", m.fpr},
                {"mean_query_count_m", m.mean_query_count_m}};
    if (timing) {
        out["mean_runtime_ms"] = m.mean_runtime_ms;
        out["max_runtime_ms"] = m.max_runtime_ms;
    }
    return out;
}

const char* kCsvHeader =
    "variant,sweep,sweep_value,samples,tp,fp,tn,fn,precision,recall,f1,fpr,mean_query_count_m,"
    "threshold\n";

std::string csv_row(const CellResult& c) {
    const auto& m = c.metrics;
    std::ostringstream row;
    row << to_string(c.variant) << ',' << to_string(c.axis) << ',' << fmt_general(c.sweep_value)
        << ',' << m.samples() << ',' << m.tp << ',' << m.fp << ',' << m.tn << ',' << m.fn << ','
        << fmt_fixed(m.precision) << ',' << fmt_fixed(m.recall) << ',' << fmt_fixed(m.f1) << ','
        << fmt_fixed(m.fpr) << ',' << fmt_fixed(m.mean_query_count_m) << ','
        << (c.threshold ? fmt_general(*c.threshold) : std::string()) << '\n';
    return row.str();
}

SampleOutcome outcome_from_json(const json& line) {
    SampleOutcome o;
    o.index = line.at("index").get<std::size_t>();
    o.label = line.at("label").get<bool>();
    o.flag = line.at("flag").get<bool>();
    if (!line.at("score").is_null()) o.score = line.at("score").get<double>();
    o.query_count_m = line.at("query_count_m").get<int>();
    o.runtime_ms = line.value("runtime_ms", std::int64_t{0});
    o.evidence = line;
    return o;
}

}  // namespace

std::size_t EvalDataset::triggered_count() const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [](const EvalItem& i) { return i.is_triggered; }));
}

void DatasetOptions::validate() const {
    if (min_objects < 0 || max_objects < min_objects) {
        throw InvalidArgument("dataset object counts need 0 <= min_objects <= max_objects");
    }
    if (max_objects > static_cast<int>(kScene.size())) {
        throw InvalidArgument("max_objects exceeds the scene vocabulary");
    }
}

EvalDataset build_dataset(const std::vector<sim::BackdoorRule>& rules, int n, double trigger_rate,
                          std::uint64_t seed, const DatasetOptions& opts) {
    if (n < 2) throw InvalidArgument("dataset needs n >= 2");
    if (!(trigger_rate >= 0.0 && trigger_rate <= 1.0)) {
        throw InvalidArgument("trigger_rate must lie in [0, 1]");
    }
    opts.validate();
    for (const auto& r : rules) r.validate();
    const auto n_triggered = static_cast<std::size_t>(std::llround(n * trigger_rate));
    if (n_triggered > 0 && rules.empty()) {
        throw InvalidArgument("triggered items need at least one rule");
    }

    SplitMix64 rng(mix(seed, "dataset"));
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<bool> triggered(order.size(), false);
    for (std::size_t i = 0; i < n_triggered; ++i) triggered[order[i]] = true;

    EvalDataset ds;
    ds.trigger_rate = trigger_rate;
    ds.seed = seed;
    for (std::size_t i = 0; i < order.size(); ++i) {
        SplitMix64 item_rng(mix(seed, i + 1));
        EvalItem item;
        const sim::BackdoorRule* rule = nullptr;
        if (!rules.empty()) {
            item.rule_id = static_cast<int>(i % rules.size());
            rule = &rules[static_cast<std::size_t>(*item.rule_id)];
        }
        std::string subject;
        if (rule && rule->attack == sim::AttackKind::ObjRep && rule->clean_label) {
            subject = *rule->clean_label;
        } else {
            subject = kSubjects[item_rng.below(kSubjects.size())];
        }
        const auto span = static_cast<std::uint64_t>(opts.max_objects - opts.min_objects + 1);
        const auto count = static_cast<std::size_t>(opts.min_objects) + item_rng.below(span);
        std::vector<std::string> pool = kScene;
        pool.erase(std::remove(pool.begin(), pool.end(), subject), pool.end());
        std::vector<std::string> scene;
        for (std::size_t k = 0; k < count && !pool.empty(); ++k) {
            const auto pick = item_rng.below(pool.size());
            scene.push_back(pool[pick]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }

        std::string text = with_article(subject);
        if (!scene.empty()) {
            text += " " + kRelations[item_rng.below(kRelations.size())] + " " + with_article(scene[0]);
            for (std::size_t k = 1; k < scene.size(); ++k) {
                text += (k + 1 == scene.size() ? " and " : ", ") + with_article(scene[k]);
            }
        }
        if (triggered[i]) {
            item.is_triggered = true;
            text = item_rng.bernoulli(0.5) ? rule->trigger + " " + text : text + " " + rule->trigger;
        }
        item.prompt = std::move(text);
        ds.items.push_back(std::move(item));
    }
    return ds;
}

MetricsReport compute_metrics(const std::vector<bool>& verdicts, const std::vector<bool>& labels) {
    if (verdicts.size() != labels.size()) {
        throw InvalidArgument("verdicts and labels differ in length");
    }
    if (verdicts.empty()) throw InvalidArgument("metrics need at least one sample");
    MetricsReport m;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i] && labels[i]) ++m.tp;
        else if (verdicts[i]) ++m.fp;
        else if (labels[i]) ++m.fn;
        else ++m.tn;
    }
    m.precision = safe_div(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fp));
    m.recall = safe_div(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fn));
    m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.fpr = safe_div(static_cast<double>(m.fp), static_cast<double>(m.fp + m.tn));
    return m;
}

std::string_view to_string(DetectorVariant v) noexcept {
    switch (v) {
        case DetectorVariant::BlackMirror: return "blackmirror";
        case DetectorVariant::BlackMirrorNoVerify: return "blackmirror-no-verify";
        case DetectorVariant::UFID: return "ufid";
        case DetectorVariant::CLIPD: return "clipd";
    }
    return "blackmirror";
}

DetectorVariant detector_variant_from_string(std::string_view s) {
    const auto t = to_lower(trim(s));
    for (auto v : all_detector_variants()) {
        if (t == to_string(v)) return v;
    }
    throw InvalidArgument("unknown detector variant '" + std::string(s) + "'");
}

std::string_view to_string(SweepAxis a) noexcept {
    switch (a) {
        case SweepAxis::None: return "none";
        case SweepAxis::N: return "n";
        case SweepAxis::Tau: return "tau";
    }
    return "none";
}

SweepAxis sweep_axis_from_string(std::string_view s) {
    const auto t = to_lower(trim(s));
    if (t == "none") return SweepAxis::None;
    if (t == "n") return SweepAxis::N;
    if (t == "tau") return SweepAxis::Tau;
    throw InvalidArgument("unknown sweep axis '" + std::string(s) + "'");
}

void EvalConfig::validate() const {
    if (n < 2) throw InvalidArgument("eval needs n >= 2");
    if (!(trigger_rate >= 0.0 && trigger_rate <= 1.0)) {
        throw InvalidArgument("trigger_rate must lie in [0, 1]");
    }
    if (variants.empty()) throw InvalidArgument("eval needs at least one detector variant");
    if (calibration_n < 2) throw InvalidArgument("calibration_n must be >= 2");
    if (!(ufid_percentile >= 0.0 && ufid_percentile <= 100.0) ||
        !(clipd_percentile >= 0.0 && clipd_percentile <= 100.0)) {
        throw InvalidArgument("baseline percentiles must lie in [0, 100]");
    }
    if (sample_parallelism < 1) throw InvalidArgument("sample_parallelism must be >= 1");
    dataset_options.validate();
    detection.validate();
    for (const auto& r : rules) r.validate();
}

json to_json(const EvalConfig& cfg) {
    json rules = json::array();
    for (const auto& r : cfg.rules) {
        rules.push_back({{"trigger", r.trigger},
                         {"attack", std::string(sim::to_string(r.attack))},
                         {"clean_label", r.clean_label ? json(*r.clean_label) : json(nullptr)},
                         {"target", r.target},
                         {"fixed_objects", r.fixed_objects}});
    }
    json variants = json::array();
    for (auto v : cfg.variants) variants.push_back(std::string(to_string(v)));
    return {{"schema", std::string(kSchemaVersion)},
            {"template_version", std::string(prompts::kTemplateVersion)},
            {"detection",
             {{"K", cfg.detection.K},
              {"N", cfg.detection.N},
              {"tau", cfg.detection.tau},
              {"rng_seed", cfg.detection.rng_seed}}},
            {"dataset",
             {{"n", cfg.n},
              {"trigger_rate", cfg.trigger_rate},
              {"seed", cfg.dataset_seed},
              {"min_objects", cfg.dataset_options.min_objects},
              {"max_objects", cfg.dataset_options.max_objects}}},
            {"rules", rules},
            {"variants", variants},
            {"sweep", std::string(to_string(cfg.sweep))},
            {"calibration",
             {{"n", cfg.calibration_n},
              {"ufid_percentile", cfg.ufid_percentile},
              {"clipd_percentile", cfg.clipd_percentile}}}};
}

std::vector<double> sweep_points(SweepAxis axis, const DetectionConfig& base) {
    switch (axis) {
        case SweepAxis::N: return {1, 2, 3, 4, 5};
        case SweepAxis::Tau: return {kTauGrid.begin(), kTauGrid.end()};
        case SweepAxis::None: break;
    }
    return {base.tau};
}

std::uint64_t sample_seed(std::uint64_t base, std::size_t index) noexcept {
    return mix(base, static_cast<std::uint64_t>(index) + 1);
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

EvalSummary run_evaluation(ModelGateway& gateway, const EvalConfig& cfg, const fs::path& dir) {
    cfg.validate();
    fs::create_directories(dir);

    const auto lock = to_json(cfg).dump(2) + "\n";
    const auto lock_path = dir / "config.lock.json";
    if (fs::exists(lock_path)) {
        if (read_file(lock_path) != lock) {
            throw InvalidArgument("report directory " + dir.string() +
                                  " holds a different configuration");
        }
    } else {
        write_file_atomic(lock_path, lock);
    }

    const auto dataset =
        build_dataset(cfg.rules, cfg.n, cfg.trigger_rate, cfg.dataset_seed, cfg.dataset_options);
    const auto calibration = build_dataset(cfg.rules, cfg.calibration_n, 0.0,
                                           mix(cfg.dataset_seed, "calibration"),
                                           cfg.dataset_options);

    std::vector<CellSpec> specs;
    for (auto v : cfg.variants) {
        for (double value : sweep_points(cfg.sweep, cfg.detection)) specs.push_back({v, value});
    }

    const auto evidence_path = dir / "evidence.jsonl";
    std::map<std::string, json> done;
    if (fs::exists(evidence_path)) {
        std::istringstream lines(read_file(evidence_path));
        for (std::string line; std::getline(lines, line);) {
            if (trim(line).empty()) continue;
            const auto j = json::parse(line, nullptr, false);
            if (j.is_discarded()) continue;  // a torn line is simply recomputed
            const auto v = detector_variant_from_string(j.at("variant").get<std::string>());
            done[cell_key(v, j.at("sweep_value").get<double>(), j.at("index").get<std::size_t>())] = j;
        }
    }

    const auto flush_checkpoint = [&] {
        std::string out;
        for (const auto& spec : specs) {
            for (std::size_t i = 0; i < dataset.items.size(); ++i) {
                const auto it = done.find(cell_key(spec.variant, spec.value, i));
                if (it != done.end()) out += it->second.dump() + "\n";
            }
        }
        write_file_atomic(evidence_path, out);
    };

    EvalSummary summary;
    summary.report_dir = dir;
    std::map<std::pair<DetectorVariant, int>, double> thresholds;

    for (const auto& spec : specs) {
        const auto dc = cell_detection(cfg, spec.value);
        CellResult cell;
        cell.variant = spec.variant;
        cell.axis = cfg.sweep;
        cell.sweep_value = spec.value;

        const bool baseline =
            spec.variant == DetectorVariant::UFID || spec.variant == DetectorVariant::CLIPD;
        if (baseline) {
            const auto key = std::make_pair(spec.variant,
                                            spec.variant == DetectorVariant::UFID ? ufid_count(dc) : 0);
            auto it = thresholds.find(key);
            if (it == thresholds.end()) {
                std::vector<double> scores(calibration.items.size());
                try {
                    parallel_for(scores.size(), cfg.sample_parallelism, [&](std::size_t i) {
                        scores[i] = baseline_score(gateway, spec.variant, calibration.items[i].prompt,
                                                   dc, sample_seed(mix(dc.rng_seed, "calibration"), i));
                    });
                } catch (const std::exception& e) {
                    flush_checkpoint();
                    throw RunAborted(std::string("calibration failed: ") + e.what());
                }
                const double q = spec.variant == DetectorVariant::UFID ? cfg.ufid_percentile
                                                                       : cfg.clipd_percentile;
                it = thresholds.emplace(key, percentile(scores, q)).first;
            }
            cell.threshold = it->second;
        }

        std::vector<std::optional<SampleOutcome>> outcomes(dataset.items.size());
        std::vector<std::string> errors(dataset.items.size());
        std::mutex done_mu;
        for (std::size_t i = 0; i < dataset.items.size(); ++i) {
            const auto it = done.find(cell_key(spec.variant, spec.value, i));
            if (it != done.end()) {
                outcomes[i] = outcome_from_json(it->second);
                ++summary.resumed_samples;
            }
        }

        parallel_for(dataset.items.size(), cfg.sample_parallelism, [&](std::size_t i) {
            if (outcomes[i]) return;
            const auto& item = dataset.items[i];
            auto sdc = dc;
            sdc.rng_seed = sample_seed(dc.rng_seed, i);
            SampleOutcome o;
            o.index = i;
            o.label = item.is_triggered;
            json evidence;
            const auto start = std::chrono::steady_clock::now();
            try {
                if (spec.variant == DetectorVariant::BlackMirror) {
                    const auto verdict = detect(gateway, item.prompt, sdc);
                    if (verdict.status == RunStatus::Incomplete) {
                        errors[i] = verdict.failure_stage + ": " + verdict.failure_detail;
                        return;
                    }
                    o.flag = verdict.backdoor_flag;
                    o.score = verdict.branch(Branch::Object).s_final;
                    o.query_count_m = verdict.query_count_m;
                    evidence = to_json(verdict);
                } else if (spec.variant == DetectorVariant::BlackMirrorNoVerify) {
                    DetectionVerdict verdict;
                    verdict.prompt = item.prompt;
                    verdict.match = run_mirror_match(gateway, item.prompt, sdc);
                    for (std::size_t b = 0; b < verdict.branches.size(); ++b) {
                        verdict.branches[b].branch = static_cast<Branch>(b);
                    }
                    verdict.backdoor_flag = verdict.deviation_flag();
                    o.flag = verdict.backdoor_flag;
                    evidence = to_json(verdict);
                } else {
                    const double s = baseline_score(gateway, spec.variant, item.prompt, sdc, sdc.rng_seed);
                    const auto dir_flag = spec.variant == DetectorVariant::UFID
                                              ? ThresholdDirection::FlagAbove
                                              : ThresholdDirection::FlagBelow;
                    o.score = s;
                    o.flag = threshold_classifier(s, *cell.threshold, dir_flag);
                    evidence = {{"score", s},
                                {"threshold", *cell.threshold},
                                {"direction", dir_flag == ThresholdDirection::FlagAbove ? "above" : "below"}};
                }
            } catch (const std::exception& e) {
                errors[i] = e.what();
                return;
            }
            o.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
            json line = {{"variant", std::string(to_string(spec.variant))},
                         {"sweep", std::string(to_string(cfg.sweep))},
                         {"sweep_value", spec.value},
                         {"index", i},
                         {"prompt", item.prompt},
                         {"label", item.is_triggered},
                         {"rule_id", item.rule_id ? json(*item.rule_id) : json(nullptr)},
                         {"flag", o.flag},
                         {"score", o.score ? json(*o.score) : json(nullptr)},
                         {"query_count_m", o.query_count_m}};
            if (cfg.emit_timing) line["runtime_ms"] = o.runtime_ms;
            line[baseline ? "probe" : "verdict"] = std::move(evidence);
            o.evidence = line;
            {
                std::lock_guard lk(done_mu);
                done[cell_key(spec.variant, spec.value, i)] = line;
            }
            outcomes[i] = std::move(o);
        });

        flush_checkpoint();
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (!errors[i].empty()) {
                throw RunAborted("sample " + std::to_string(i) + " of " +
                                 std::string(to_string(spec.variant)) + " failed (" + errors[i] +
                                 "); checkpoint kept in " + evidence_path.string());
            }
        }

        std::vector<bool> flags, labels;
        double m_total = 0.0, rt_total = 0.0, rt_max = 0.0;
        for (auto& o : outcomes) {
            flags.push_back(o->flag);
            labels.push_back(o->label);
            m_total += o->query_count_m;
            rt_total += static_cast<double>(o->runtime_ms);
            rt_max = std::max(rt_max, static_cast<double>(o->runtime_ms));
            cell.samples.push_back(std::move(*o));
        }
        cell.metrics = compute_metrics(flags, labels);
        cell.metrics.mean_query_count_m = m_total / static_cast<double>(flags.size());
        cell.metrics.mean_runtime_ms = rt_total / static_cast<double>(flags.size());
        cell.metrics.max_runtime_ms = rt_max;
        summary.cells.push_back(std::move(cell));
    }

    json cells = json::array();
    std::string csv = kCsvHeader;
    std::map<DetectorVariant, std::string> per_variant;
    for (const auto& c : summary.cells) {
        cells.push_back(metrics_json(c, cfg.emit_timing));
        const auto row = csv_row(c);
        csv += row;
        auto& pv = per_variant[c.variant];
        if (pv.empty()) pv = kCsvHeader;
        pv += row;
    }
    json metrics = {{"schema", std::string(kSchemaVersion)},
                    {"dataset",
                     {{"n", dataset.items.size()},
                      {"triggered", dataset.triggered_count()},
                      {"trigger_rate", dataset.trigger_rate}}},
                    {"cells", cells}};
    write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
    write_file_atomic(dir / "metrics.csv", csv);
    for (const auto& [v, body] : per_variant) {
        write_file_atomic(dir / ("metrics_" + std::string(to_string(v)) + ".csv"), body);
    }
    return summary;
}

}  // namespace blackmirror
