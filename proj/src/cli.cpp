// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "blackmirror/config.hpp"
#include "blackmirror/error.hpp"
#include "blackmirror/eval_harness.hpp"
#include "blackmirror/labels.hpp"
#include "blackmirror/mirror_verify.hpp"
#include "blackmirror/serialize.hpp"
#include "blackmirror/sim_server.hpp"

namespace blackmirror::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> backend, cache, sweep, cache_dir, state_dir, reports_dir, base_url,
        attack, run_id;
    std::optional<int> n, k, samples;
    std::optional<double> tau;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> variants;
    bool timing = false;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--backend", f.backend, "sim or http");
    sub->add_option("--base-url", f.base_url, "base URL for every endpoint (http backend)");
    sub->add_option("--n", f.n, "variant generations N");
    sub->add_option("--k", f.k, "VLM samples K for majority voting");
    sub->add_option("--tau", f.tau, "stability threshold");
    sub->add_option("--seed", f.seed, "detection and dataset seed");
    sub->add_option("--cache", f.cache, "live, record or replay");
    sub->add_option("--cache-dir", f.cache_dir, "response cache directory");
    sub->add_option("--state-dir", f.state_dir, "run manifest directory");
    sub->add_option("--attack", f.attack, "rule preset: objrep, patch, style, fiximg");
    sub->add_option("--run-id", f.run_id, "explicit run id (must be new)");
    sub->add_flag("--timing", f.timing, "include wall-clock timing in outputs");
}

void add_eval_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--sweep", f.sweep, "none, n or tau");
    sub->add_option("--variant", f.variants,
                    "blackmirror, blackmirror-no-verify, ufid, clipd (repeatable)");
    sub->add_option("--samples", f.samples, "dataset size");
    sub->add_option("--reports-dir", f.reports_dir, "report root directory");
}

// Defaults, then the config file, then flags.
AppConfig resolve_config(const Flags& f) {
    AppConfig cfg = f.config.empty() ? default_app_config() : load_app_config(f.config);
    if (f.attack) cfg.rules = attack_preset(*f.attack);
    if (f.backend) cfg.backend = backend_from_string(*f.backend);
    if (f.base_url) {
        for (auto* ep : {&cfg.endpoints.t2i, &cfg.endpoints.vlm, &cfg.endpoints.llm, &cfg.endpoints.embed}) {
            ep->base_url = *f.base_url;
        }
    }
    if (f.n) cfg.detection.N = *f.n;
    if (f.k) cfg.detection.K = *f.k;
    if (f.tau) cfg.detection.tau = *f.tau;
    if (f.seed) {
        cfg.detection.rng_seed = *f.seed;
        cfg.eval.dataset_seed = *f.seed;
    }
    if (f.cache) cfg.cache_mode = cache_mode_from_string(*f.cache);
    if (f.cache_dir) cfg.cache_dir = *f.cache_dir;
    if (f.state_dir) cfg.state_dir = *f.state_dir;
    if (f.reports_dir) cfg.reports_dir = *f.reports_dir;
    if (f.sweep) cfg.eval.sweep = sweep_axis_from_string(*f.sweep);
    if (!f.variants.empty()) {
        cfg.eval.variants.clear();
        for (const auto& v : f.variants) cfg.eval.variants.push_back(detector_variant_from_string(v));
    }
    if (f.samples) cfg.eval.n = *f.samples;
    if (f.timing) cfg.emit_timing = true;
    cfg.resolve();
    return cfg;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Manifest {
public:
    Manifest(const AppConfig& cfg, const std::string& run_id, json command)
        : dir_(fs::path(cfg.state_dir) / "runs" / run_id) {
        if (fs::exists(dir_ / "manifest.json")) {
            throw InvalidArgument("run id '" + run_id + "' already exists");
        }
        fs::create_directories(dir_);
        doc_ = {{"schema", std::string(kSchemaVersion)},
                {"run_id", run_id},
                {"command", std::move(command)},
                {"cache_mode", std::string(to_string(cfg.cache_mode))},
                {"config", to_json(cfg)},
                {"started_at", utc_now()}};
        flush();
    }

    void finish(int exit_code) {
        doc_["finished_at"] = utc_now();
        doc_["exit_code"] = exit_code;
        flush();
    }

    const fs::path& dir() const { return dir_; }

private:
    void flush() { write_file_atomic(dir_ / "manifest.json", doc_.dump(2) + "\n"); }

    fs::path dir_;
    json doc_;
};

int cmd_detect(const AppConfig& cfg, const std::string& prompt, const std::string& run_id,
               std::ostream& out, std::ostream& err) {
    if (trim(prompt).empty()) {
        err << "error: prompt is empty\n";
        return kExitUsage;
    }
    Manifest manifest(cfg, run_id, {{"name", "detect"}, {"prompt", prompt}});
    auto bundle = make_gateway(cfg);
    const auto verdict = detect(*bundle.gateway, prompt, cfg.detection);
    const auto doc = to_json(verdict, {.include_timing = cfg.emit_timing}).dump(2) + "\n";
    write_file_atomic(manifest.dir() / "verdict.json", doc);
    out << doc;

    int code = kExitBenign;
    if (verdict.status == RunStatus::Incomplete) {
        err << "incomplete: " << verdict.failure_stage << ": " << verdict.failure_detail << "\n";
        code = kExitIncomplete;
    } else if (verdict.backdoor_flag) {
        code = kExitFlagged;
    }
    err << "run " << run_id << " (" << to_string(cfg.cache_mode) << "), "
        << bundle.gateway->stats().transport_calls() << " transport calls\n";
    manifest.finish(code);
    return code;
}

int cmd_eval(const AppConfig& cfg, const std::string& run_id, const std::optional<std::string>& resume,
             std::ostream& out, std::ostream& err) {
    json command = {{"name", "eval"}};
    if (resume) command["resumes"] = *resume;
    Manifest manifest(cfg, run_id, command);
    const auto report_dir = fs::path(cfg.reports_dir) / (resume ? *resume : run_id);
    auto bundle = make_gateway(cfg);
    json doc = {{"schema", std::string(kSchemaVersion)},
                {"run_id", run_id},
                {"report_dir", report_dir.string()}};
    try {
        const auto summary = run_evaluation(*bundle.gateway, cfg.eval, report_dir);
        json cells = json::array();
        for (const auto& c : summary.cells) {
            cells.push_back({{"variant", std::string(to_string(c.variant))},
                             {"sweep_value", c.sweep_value},
                             {"precision", c.metrics.precision},
                             {"recall", c.metrics.recall},
                             {"f1", c.metrics.f1},
                             {"fpr", c.metrics.fpr},
                             {"mean_query_count_m", c.metrics.mean_query_count_m}});
        }
        doc["status"] = "complete";
        doc["resumed_samples"] = summary.resumed_samples;
        doc["cells"] = cells;
        out << doc.dump(2) << "\n";
        err << "report written to " << report_dir.string() << "\n";
        manifest.finish(kExitBenign);
        return kExitBenign;
    } catch (const RunAborted& e) {
        doc["status"] = "aborted";
        doc["detail"] = e.what();
        out << doc.dump(2) << "\n";
        err << "aborted: " << e.what() << "\n"
            << "resume with: eval --resume " << (resume ? *resume : run_id) << "\n";
        manifest.finish(kExitAborted);
        return kExitAborted;
    }
}

json load_manifest(const std::string& state_dir, const std::string& run_id) {
    const auto path = fs::path(state_dir) / "runs" / run_id / "manifest.json";
    std::ifstream in(path);
    if (!in) throw InvalidArgument("no manifest for run '" + run_id + "' under " + state_dir);
    const auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw InvalidArgument("manifest " + path.string() + " is not JSON");
    return doc;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Black-box backdoor detection for text-to-image services"};
    app.name("blackmirror");
    app.require_subcommand(1);
    Flags f;

    std::string prompt;
    auto* detect_cmd = app.add_subcommand("detect", "check one prompt");
    detect_cmd->add_option("prompt", prompt, "prompt to audit")->required();
    add_common(detect_cmd, f);

    std::optional<std::string> resume;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate detectors on a synthetic dataset");
    add_common(eval_cmd, f);
    add_eval_flags(eval_cmd, f);
    eval_cmd->add_option("--resume", resume, "continue an aborted run's report");

    std::string record_prompt;
    bool record_eval = false;
    auto* record_cmd = app.add_subcommand("record", "run detect or eval and record every response");
    record_cmd->add_option("prompt", record_prompt, "prompt to audit");
    record_cmd->add_flag("--eval", record_eval, "record an evaluation instead");
    add_common(record_cmd, f);
    add_eval_flags(record_cmd, f);

    std::string replay_id;
    std::optional<std::string> replay_prompt;
    auto* replay_cmd = app.add_subcommand("replay", "rerun a recorded run from the cache only");
    replay_cmd->add_option("run_id", replay_id, "recorded run id")->required();
    replay_cmd->add_option("--prompt", replay_prompt, "audit another prompt against the recording");
    replay_cmd->add_option("--state-dir", f.state_dir, "run manifest directory");
    replay_cmd->add_option("--cache-dir", f.cache_dir, "response cache directory");
    replay_cmd->add_option("--reports-dir", f.reports_dir, "report root directory");
    replay_cmd->add_option("--run-id", f.run_id, "explicit id for the replay run");

    std::string host = "127.0.0.1";
    int port = 8765;
    auto* serve_cmd = app.add_subcommand("serve-sim", "serve the simulator over HTTP");
    serve_cmd->add_option("--config", f.config, "JSON config file");
    serve_cmd->add_option("--attack", f.attack, "rule preset");
    serve_cmd->add_option("--host", host, "bind address");
    serve_cmd->add_option("--port", port, "port (0 picks a free one)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        err << app.help();
        return kExitBenign;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    const auto run_id = f.run_id.value_or(new_run_id());

    if (*detect_cmd) return cmd_detect(resolve_config(f), prompt, run_id, out, err);
    if (*eval_cmd) return cmd_eval(resolve_config(f), run_id, resume, out, err);
    if (*record_cmd) {
        f.cache = "record";
        const auto cfg = resolve_config(f);
        if (record_eval) return cmd_eval(cfg, run_id, std::nullopt, out, err);
        return cmd_detect(cfg, record_prompt, run_id, out, err);
    }
    if (*replay_cmd) {
        const auto state_dir = f.state_dir.value_or(default_app_config().state_dir);
        const auto manifest = load_manifest(state_dir, replay_id);
        AppConfig cfg = default_app_config();
        apply_config_json(cfg, manifest.at("config"));
        cfg.cache_mode = CacheMode::Replay;
        cfg.state_dir = state_dir;
        if (f.cache_dir) cfg.cache_dir = *f.cache_dir;
        if (f.reports_dir) cfg.reports_dir = *f.reports_dir;
        cfg.resolve();
        const auto& command = manifest.at("command");
        if (command.at("name") == "eval") return cmd_eval(cfg, run_id, std::nullopt, out, err);
        return cmd_detect(cfg, replay_prompt.value_or(command.at("prompt").get<std::string>()), run_id,
                          out, err);
    }
    if (*serve_cmd) {
        const auto cfg = resolve_config(f);
        sim::SimHttpServer server(std::make_shared<sim::SimBackend>(cfg.sim));
        out << json{{"base_url", "http://" + host + ":" + std::to_string(port)}}.dump() << std::endl;
        server.serve_forever(host, port);
        return kExitBenign;
    }
    return kExitUsage;
}

}  // namespace

std::string new_run_id() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    std::random_device rd;
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "%08x", static_cast<unsigned>(rd()));
    return std::string("run-") + stamp + "-" + suffix;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const InvalidArgument& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ReplayMiss& e) {
        err << "replay miss: " << e.what() << "\n";
        return kExitIncomplete;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIncomplete;
    }
}

}  // namespace blackmirror::cli
