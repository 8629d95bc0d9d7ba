// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "blackmirror/endpoint.hpp"
#include "blackmirror/gateway.hpp"
#include "blackmirror/labels.hpp"

// Deterministic symbolic stand-ins for the text-to-image model, the VLM,
// the LLM and an embedder. An image is a bag of labels plus style and patch
// flags; every answer is a pure function of its inputs and seeds.
namespace blackmirror::sim {

struct SymbolicImage {
    LabelSet objects;
    std::optional<std::string> style;
    bool patch = false;
    /// Set only when a fixed-image backdoor fired; content is then the
    /// rule's payload and ignores the prompt.
    std::optional<std::string> fixed_id;
    std::uint64_t provenance_seed = 0;

    friend bool operator==(const SymbolicImage&, const SymbolicImage&) = default;
};

enum class AttackKind { ObjRep, Patch, Style, FixImg };

std::string_view to_string(AttackKind k) noexcept;
AttackKind attack_kind_from_string(std::string_view s);

struct BackdoorRule {
    std::string trigger;
    AttackKind attack = AttackKind::ObjRep;
    /// Object replaced by an ObjRep rule.
    std::optional<std::string> clean_label;
    /// ObjRep: replacement label. Style: injected style. Patch: patch
    /// descriptor (informational). FixImg: identifier of the fixed image.
    std::string target;
    /// FixImg payload objects.
    std::vector<std::string> fixed_objects;

    void validate() const;

    static BackdoorRule object_replacement(std::string trigger, std::string clean,
                                           std::string target);
    static BackdoorRule patch_insertion(std::string trigger, std::string descriptor = "logo");
    static BackdoorRule style_injection(std::string trigger, std::string style);
    static BackdoorRule fixed_image(std::string trigger, std::string id,
                                    std::vector<std::string> objects);
};

struct SimConfig {
    std::vector<BackdoorRule> rules;
    double bias_probability = 0.3;
    std::vector<std::string> bias_vocabulary = {"tree"};
    double vlm_miss_rate = 0.1;
    double vlm_hallucination_rate = 0.1;
    std::vector<std::string> hallucination_vocabulary = {"shadow", "cloud", "sky", "light"};
    /// Probability that a yes/no answer is flipped.
    double vlm_flip_rate = 0.0;
    double logit_scale = 10.0;
    /// When set, yes answers carry logits (ln p, ln(1-p)) instead of
    /// (+scale, -scale).
    std::optional<double> presence_confidence;
    /// VLM query endpoint answers in text instead of exposing logits.
    bool vlm_text_only = false;
    std::uint64_t master_seed = 0;
    int embedding_dim = 64;

    void validate() const;

    /// All noise knobs at zero.
    static SimConfig noiseless(std::vector<BackdoorRule> rules = {});
};

/// Content of a prompt as both the simulated T2I model and the simulated
/// LLM understand it.
struct ParsedPrompt {
    std::vector<std::string> objects;
    std::optional<std::string> style;
    bool insert_patch = false;
    bool structured = false;
};

/// Structured prompts look like "objects=a,b|style=s|patch=bool|extra";
/// anything else is scanned against the bundled lexicon.
ParsedPrompt parse_prompt(std::string_view prompt);

const std::vector<std::string>& lexicon_objects();

bool sim_same_concept(std::string_view a, std::string_view b);
bool sim_styles_differ(std::string_view a, std::string_view b);
/// Canonical vocabulary style for a free-form style phrase, if any.
std::optional<std::string> canonical_style(std::string_view style);

bool trigger_present(std::string_view prompt, std::string_view trigger);

SymbolicImage sim_t2i(std::string_view prompt, std::uint64_t seed, const SimConfig& cfg);

std::string image_id_for(std::string_view prompt, std::uint64_t seed);

std::vector<std::string> sim_vlm_objects(const SymbolicImage& image, const SimConfig& cfg,
                                         std::uint64_t sample_seed);
std::string sim_vlm_style_answer(const SymbolicImage& image);
std::string sim_vlm_patch_answer(const SymbolicImage& image, const SimConfig& cfg,
                                 std::uint64_t sample_seed);

/// Throws ProtocolError for questions outside the three templates.
BinaryQueryResult sim_vlm_binary(const SymbolicImage& image, std::string_view question,
                                 const SimConfig& cfg, std::uint64_t query_seed = 0);

ExtractionResult sim_llm_extract(std::string_view prompt);

std::vector<double> sim_embed(const SymbolicImage& image, int dim = 64);
std::vector<double> sim_embed_text(std::string_view text, int dim = 64);

/// Serves the gateway wire protocol from the symbolic models. Keeps a
/// registry of generated images so VLM and embed requests can refer to
/// them by id. Thread-safe.
class SimBackend {
public:
    explicit SimBackend(SimConfig cfg);

    /// Dispatches one request. Malformed requests throw ProtocolError.
    json handle(const std::string& path, const json& body);

    const SimConfig& config() const noexcept { return cfg_; }
    std::optional<SymbolicImage> image(const std::string& id) const;
    std::uint64_t requests_handled() const noexcept { return handled_.load(); }

private:
    const SymbolicImage& require_image(const json& body);
    std::string llm_answer(const std::string& prompt) const;

    SimConfig cfg_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, SymbolicImage> images_;
    std::atomic<std::uint64_t> handled_{0};
};

/// In-process transport onto a SimBackend.
class SimTransport : public Transport {
public:
    explicit SimTransport(std::shared_ptr<SimBackend> backend) : backend_(std::move(backend)) {}
    json post(const std::string& path, const json& body) override {
        return backend_->handle(path, body);
    }

private:
    std::shared_ptr<SimBackend> backend_;
};

}  // namespace blackmirror::sim
